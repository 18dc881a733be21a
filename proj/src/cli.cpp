#include "cellsynth/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <nlohmann/json.hpp>

#include "cellsynth/config.hpp"
#include "cellsynth/dataset_io.hpp"
#include "cellsynth/defaults.hpp"
#include "cellsynth/png_io.hpp"
#include "cellsynth/population_sim.hpp"

namespace cellsynth {
namespace fs = std::filesystem;

namespace {

/// Masks under `<dir>/<stage>/*.png`, stage 1..6; nonzero pixels are foreground.
std::vector<LabelledMask> read_mask_tree(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw ValidationError("not a directory: " + dir.string());
    std::vector<LabelledMask> masks;
    for (int s = 1; s <= kNumStages; ++s) {
        const fs::path sub = dir / std::to_string(s);
        if (!fs::is_directory(sub)) continue;
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(sub))
            if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            const io::GrayRaster r = io::read_png(f);
            BinaryImage m(r.pixels.width(), r.pixels.height(), 0);
            std::transform(r.pixels.pixels().begin(), r.pixels.pixels().end(), m.pixels().begin(),
                           [](std::uint16_t v) { return static_cast<std::uint8_t>(v != 0); });
            masks.push_back({stage_at(s - 1), std::move(m)});
        }
    }
    if (masks.empty()) throw ValidationError("no masks found under " + dir.string() + "/<stage>/");
    return masks;
}

SimConfig config_with_seed(const std::string& path, const std::optional<std::uint64_t>& seed) {
    SimConfig c = load_config(path);
    if (seed) c.seed = *seed;
    c.validate();
    return c;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Synthetic fluorescence nuclei time-lapse generator", "cellsynth"};
    app.require_subcommand(1);

    std::string csv, out_path, masks_dir, config_path, data_dir, dataset_dir;
    std::optional<std::uint64_t> seed;
    std::vector<int> frames;
    bool synthetic = false;
    std::uint64_t corpus_seed = kDefaultCorpusSeed;
    int per_stage = 40;

    auto* estimate = app.add_subcommand("estimate", "Estimate a stage transition model from a stage CSV");
    estimate->add_option("--csv", csv, "One row per cell, comma-separated stage labels 1..6")->required();
    estimate->add_option("--out", out_path, "Output transition model JSON")->required();

    auto* build_ssm = app.add_subcommand("build-ssm", "Build per-stage shape models from masks");
    auto* masks_opt = build_ssm->add_option("--masks", masks_dir, "Directory with <stage>/*.png masks");
    auto* synth_opt = build_ssm->add_flag("--synthetic", synthetic, "Use the built-in synthetic corpus");
    masks_opt->excludes(synth_opt);
    build_ssm->add_option("--corpus-seed", corpus_seed, "Seed of the synthetic corpus")->needs(synth_opt);
    build_ssm->add_option("--per-stage", per_stage, "Synthetic masks per stage")->needs(synth_opt)->check(CLI::Range(2, 100000));
    build_ssm->add_option("--out", out_path, "Output shape model JSON")->required();

    auto* simulate_cmd = app.add_subcommand("simulate", "Simulate a time-lapse and export the dataset");
    simulate_cmd->add_option("--config", config_path, "Simulation config JSON")->required();
    simulate_cmd->add_option("--seed", seed, "Override the config seed");
    simulate_cmd->add_option("--out", out_path, "Output dataset directory")->required();

    auto* ingest = app.add_subcommand("ingest", "Estimate all models from annotated snippets");
    ingest->add_option("--dir", data_dir, "Directory with stages.csv and snippets/c{cell}_t{frame}.png")->required();
    ingest->add_option("--out", out_path, "Output directory for the model files")->required();

    auto* conditioning = app.add_subcommand("export-conditioning", "Write conditioning triplets for an external texture generator");
    conditioning->add_option("--config", config_path, "Simulation config JSON")->required();
    conditioning->add_option("--seed", seed, "Override the config seed");
    conditioning->add_option("--frames", frames, "Comma-separated frames (default: all)")->delimiter(',');
    conditioning->add_option("--out", out_path, "Output directory")->required();

    auto* preview = app.add_subcommand("preview", "Render a montage of selected frames");
    preview->add_option("--dataset", dataset_dir, "Dataset directory written by simulate")->required();
    preview->add_option("--frames", frames, "Comma-separated frames, e.g. 0,5,9")->required()->delimiter(',');
    preview->add_option("--out", out_path, "Output PNG (default: <dataset>/preview.png)");

    auto* check = app.add_subcommand("check", "Cross-check masks, tracks and stages of a dataset");
    check->add_option("--dataset", dataset_dir, "Dataset directory")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        const auto subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return 2;
    }

    try {
        if (estimate->parsed()) {
            const auto model = estimate_transition_model(read_stage_csv(csv));
            save_transition_model(model, out_path);
            out << "wrote " << out_path << "\n";
        } else if (build_ssm->parsed()) {
            if (!synthetic && masks_dir.empty()) throw ValidationError("build-ssm needs --masks or --synthetic");
            const auto masks = synthetic ? synthetic_training_masks(corpus_seed, per_stage) : read_mask_tree(masks_dir);
            save_shape_models(build_models_from_masks(masks), out_path);
            out << "wrote " << out_path << " from " << masks.size() << " masks\n";
        } else if (simulate_cmd->parsed()) {
            const SimConfig config = config_with_seed(config_path, seed);
            const SimulationResult sim = simulate(config);
            const DatasetManifest m = export_dataset(sim, out_path);
            out << fmt::format("wrote {} frames, {} cells, {} divisions to {}\n", m.n_frames, m.n_cells, sim.divisions,
                               out_path);
        } else if (ingest->parsed()) {
            const IngestResult r = ingest_directory(data_dir);
            save_ingest(r, out_path);
            out << fmt::format("wrote models to {} (shapes per stage: {})\n", out_path, fmt::join(r.shapes_used, ","));
        } else if (conditioning->parsed()) {
            const SimConfig config = config_with_seed(config_path, seed);
            const std::set<int> wanted(frames.begin(), frames.end());
            for (int f : wanted)
                if (f < 0 || f >= config.n_frames)
                    throw ValidationError(fmt::format("frame {} outside 0..{}", f, config.n_frames - 1));
            fs::create_directories(out_path);
            nlohmann::json keys = nlohmann::json::array();
            simulate(config, resolve_inputs(config), [&](const PatchKey& key, const ConditioningPatch& cond) {
                if (!wanted.empty() && !wanted.contains(key.frame)) return;
                write_conditioning(cond, out_path, key.str());
                keys.push_back(key.str());
            });
            std::ofstream(fs::path(out_path) / "conditioning.json") << nlohmann::json{{"keys", keys}}.dump(2) << "\n";
            out << fmt::format("wrote {} conditioning triplets to {}\n", keys.size(), out_path);
        } else if (preview->parsed()) {
            const fs::path target = out_path.empty() ? fs::path(dataset_dir) / "preview.png" : fs::path(out_path);
            write_preview(dataset_dir, frames, target);
            out << "wrote " << target.string() << "\n";
        } else if (check->parsed()) {
            const ConsistencyReport report = check_dataset(dataset_dir);
            for (const auto& v : report.violations) out << v << "\n";
            out << fmt::format("{} violations\n", report.violations.size());
            return report.ok() ? 0 : 1;
        }
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

int cli_main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return cli_main(args, std::cout, std::cerr);
}

}  // namespace cellsynth
