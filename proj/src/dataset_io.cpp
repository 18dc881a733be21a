#include "cellsynth/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cellsynth/config.hpp"
#include "cellsynth/defaults.hpp"
#include "cellsynth/log.hpp"
#include "cellsynth/png_io.hpp"
#include "cellsynth/segmentation.hpp"

namespace cellsynth {
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TrackLine {
    int begin = 0;
    int end = 0;
    std::uint32_t parent = 0;
};

}  // namespace

nlohmann::json to_json(const DatasetManifest& m) {
    return {{"format", "cellsynth-dataset"}, {"version", m.version}, {"frames", m.n_frames}, {"cells", m.n_cells},
            {"width", m.width}, {"height", m.height}, {"seed", m.seed}, {"files", m.files}, {"config", m.config}};
}

DatasetManifest manifest_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "cellsynth-dataset") throw ValidationError("not a cellsynth dataset manifest");
        DatasetManifest m;
        m.version = j.at("version").get<int>();
        if (m.version != kDatasetFormatVersion)
            throw ValidationError(fmt::format("unsupported dataset version {}", m.version));
        m.n_frames = j.at("frames").get<int>();
        m.n_cells = j.at("cells").get<int>();
        m.width = j.at("width").get<int>();
        m.height = j.at("height").get<int>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.files = j.at("files").get<std::vector<std::string>>();
        m.config = j.at("config");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed manifest: ") + e.what());
    }
}

DatasetManifest read_manifest(const fs::path& dir) {
    const fs::path path = dir / "manifest.json";
    try {
        return manifest_from_json(nlohmann::json::parse(read_text(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

std::string frame_file(int frame) { return fmt::format("t{:03}.png", frame); }
std::string mask_file(int frame) { return fmt::format("mask{:03}.png", frame); }

std::string tracks_text(const SimulationResult& sim) {
    std::string out;
    for (const auto& t : sim.tracks)
        out += fmt::format("{} {} {} {}\n", t.id, t.begin(), t.end(), t.parent_id);
    return out;
}

std::string stages_text(const SimulationResult& sim) {
    std::string out = "frame,id,stage\n";
    for (std::size_t f = 0; f < sim.frames.size(); ++f)
        for (const auto& inst : sim.frames[f].instances) out += fmt::format("{},{},{}\n", f, inst.id, to_int(inst.stage));
    return out;
}

DatasetManifest export_dataset(const SimulationResult& sim, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error("cannot create output directory " + dir.string());

    DatasetManifest m;
    m.n_frames = static_cast<int>(sim.frames.size());
    m.n_cells = static_cast<int>(sim.tracks.size());
    m.width = sim.config.width;
    m.height = sim.config.height;
    m.seed = sim.config.seed;
    m.config = to_json(sim.config);

    const auto n = static_cast<std::ptrdiff_t>(sim.frames.size());
    std::vector<std::string> errors(sim.frames.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t f = 0; f < n; ++f) {
        try {
            io::write_png16(dir / frame_file(static_cast<int>(f)), io::to_u16(sim.raw[f]));
            io::write_png16(dir / mask_file(static_cast<int>(f)), sim.frames[f].labels);
        } catch (const std::exception& e) {
            errors[f] = e.what();
        }
    }
    for (const auto& e : errors)
        if (!e.empty()) throw Error(e);
    for (int f = 0; f < m.n_frames; ++f) m.files.push_back(frame_file(f));
    for (int f = 0; f < m.n_frames; ++f) m.files.push_back(mask_file(f));

    write_text(dir / "tracks.txt", tracks_text(sim));
    write_text(dir / "stages.csv", stages_text(sim));
    m.files.push_back("tracks.txt");
    m.files.push_back("stages.csv");
    write_text(dir / "manifest.json", to_json(m).dump(2) + "\n");
    return m;
}

ConsistencyReport check_dataset(const fs::path& dir) {
    ConsistencyReport report;
    auto violation = [&](std::string msg) { report.violations.push_back(std::move(msg)); };

    const DatasetManifest m = read_manifest(dir);
    for (const auto& f : m.files)
        if (!fs::is_regular_file(dir / f)) violation("missing file " + f);
    if (!report.ok()) return report;

    std::map<std::uint32_t, TrackLine> tracks;
    {
        std::istringstream in(read_text(dir / "tracks.txt"));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ls(line);
            std::uint32_t id;
            TrackLine t;
            if (!(ls >> id >> t.begin >> t.end >> t.parent)) {
                violation("malformed tracks.txt line: " + line);
                continue;
            }
            if (!tracks.emplace(id, t).second) violation(fmt::format("duplicate track {}", id));
            if (t.begin > t.end || t.begin < 0 || t.end >= m.n_frames)
                violation(fmt::format("track {} has invalid span {}..{}", id, t.begin, t.end));
        }
    }
    if (static_cast<int>(tracks.size()) != m.n_cells)
        violation(fmt::format("manifest lists {} cells, tracks.txt has {}", m.n_cells, tracks.size()));

    // Lineage: parents end the frame before their daughters begin, two daughters each.
    std::map<std::uint32_t, int> daughters;
    for (const auto& [id, t] : tracks) {
        if (t.parent == 0) continue;
        ++daughters[t.parent];
        auto p = tracks.find(t.parent);
        if (p == tracks.end())
            violation(fmt::format("track {} has unknown parent {}", id, t.parent));
        else if (p->second.end + 1 != t.begin)
            violation(fmt::format("track {} begins at {} but parent {} ends at {}", id, t.begin, t.parent, p->second.end));
    }
    for (const auto& [parent, count] : daughters)
        if (count != 2) violation(fmt::format("track {} has {} daughters", parent, count));

    // stages.csv: one row per live cell and frame.
    std::map<std::pair<int, std::uint32_t>, int> stage_of;
    {
        std::istringstream in(read_text(dir / "stages.csv"));
        std::string line;
        std::getline(in, line);
        if (line != "frame,id,stage") violation("stages.csv header mismatch");
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            int frame, stage;
            std::uint32_t id;
            char c1, c2;
            std::istringstream ls(line);
            if (!(ls >> frame >> c1 >> id >> c2 >> stage) || c1 != ',' || c2 != ',') {
                violation("malformed stages.csv line: " + line);
                continue;
            }
            if (stage < 1 || stage > kNumStages) violation("stage out of range: " + line);
            if (!stage_of.emplace(std::pair{frame, id}, stage).second) violation("duplicate stages.csv row: " + line);
            auto t = tracks.find(id);
            if (t == tracks.end() || frame < t->second.begin || frame > t->second.end)
                violation("stages.csv row for a cell not alive: " + line);
        }
    }
    std::size_t live_total = 0;
    for (const auto& [id, t] : tracks) live_total += t.end - t.begin + 1;
    if (stage_of.size() != live_total)
        violation(fmt::format("stages.csv has {} rows, expected {}", stage_of.size(), live_total));

    // Division stages: mother leaves in metaphase, daughters enter anaphase.
    for (const auto& [id, t] : tracks) {
        if (t.parent == 0) continue;
        auto mine = stage_of.find({t.begin, id});
        auto theirs = stage_of.find({t.begin - 1, t.parent});
        if (mine != stage_of.end() && mine->second != to_int(Stage::anaphase))
            violation(fmt::format("daughter {} begins in stage {}", id, mine->second));
        if (theirs != stage_of.end() && theirs->second != to_int(Stage::metaphase))
            violation(fmt::format("parent {} ends in stage {}", t.parent, theirs->second));
    }

    // Masks against tracks, both directions.
    for (int f = 0; f < m.n_frames; ++f) {
        const io::GrayRaster mask = io::read_png(dir / mask_file(f));
        if (mask.pixels.width() != m.width || mask.pixels.height() != m.height)
            violation(fmt::format("mask {} has the wrong size", f));
        std::set<std::uint32_t> present;
        for (auto v : mask.pixels.pixels())
            if (v) present.insert(v);
        for (auto id : present) {
            auto t = tracks.find(id);
            if (t == tracks.end() || f < t->second.begin || f > t->second.end)
                violation(fmt::format("label {} in mask {} has no live track", id, f));
        }
        for (const auto& [id, t] : tracks)
            if (f >= t.begin && f <= t.end && !present.contains(id))
                violation(fmt::format("track {} alive at {} is missing from the mask", id, f));
    }
    return report;
}

IngestResult ingest_annotated(const std::vector<StageSequence>& sequences, std::span<const AnnotatedSnippet> snippets) {
    IngestResult result;
    result.transition = estimate_transition_model(sequences);

    std::vector<LabelledMask> masks;
    PerStage<double> mean_sum{}, std_sum{};
    PerStage<int> counted{};
    for (const auto& s : snippets) {
        if (s.cell < 1 || s.cell > static_cast<int>(sequences.size()) || s.frame < 0 ||
            s.frame >= static_cast<int>(sequences[s.cell - 1].size()))
            throw ValidationError(fmt::format("snippet c{}_t{} has no stage label", s.cell, s.frame));
        const Stage stage = sequences[s.cell - 1][s.frame];
        const ImageF image = s.image.width() == kPatchSize && s.image.height() == kPatchSize
                                 ? s.image
                                 : segmentation::resample(s.image, kPatchSize, kPatchSize);
        const LabelImage labels = segmentation::segment_nuclei(image);

        // The annotated cell is the object nearest the snippet center.
        std::map<std::uint16_t, std::pair<Vec2, int>> sums;
        for (int y = 0; y < kPatchSize; ++y)
            for (int x = 0; x < kPatchSize; ++x)
                if (auto l = labels(x, y)) {
                    sums[l].first += Vec2(x, y);
                    ++sums[l].second;
                }
        if (sums.empty()) {
            log::warn(fmt::format("snippet c{:03}_t{:03}: no foreground found, skipped", s.cell, s.frame));
            continue;
        }
        const Vec2 center((kPatchSize - 1) / 2.0, (kPatchSize - 1) / 2.0);
        std::uint16_t chosen = 0;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& [l, acc] : sums) {
            const double d = (acc.first / acc.second - center).squaredNorm();
            if (d < best) best = d, chosen = l;
        }

        BinaryImage mask(kPatchSize, kPatchSize, 0);
        double sum = 0.0, sum2 = 0.0;
        const int n = sums[chosen].second;
        for (int y = 0; y < kPatchSize; ++y)
            for (int x = 0; x < kPatchSize; ++x)
                if (labels(x, y) == chosen) {
                    mask(x, y) = 1;
                    sum += image(x, y);
                    sum2 += image(x, y) * image(x, y);
                }
        const double mean = sum / n;
        const double var = n > 1 ? std::max(0.0, (sum2 - n * mean * mean) / (n - 1)) : 0.0;
        const auto si = index_of(stage);
        mean_sum[si] += mean;
        std_sum[si] += std::sqrt(var);
        ++counted[si];
        ++result.shapes_used[si];
        masks.push_back({stage, std::move(mask)});
    }

    result.shapes = build_models_from_masks(masks);
    result.intensity = StageIntensityTable::placeholder();
    for (std::size_t s = 0; s < kNumStages; ++s) {
        if (counted[s] == 0) {
            log::warn(fmt::format("no snippets for stage {}; keeping the placeholder intensity", s + 1));
            continue;
        }
        result.intensity.mean[s] = mean_sum[s] / counted[s];
        result.intensity.std[s] = std_sum[s] / counted[s];
    }
    return result;
}

IngestResult ingest_directory(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw ValidationError("not a directory: " + dir.string());
    const auto sequences = read_stage_csv(dir / "stages.csv");
    std::vector<AnnotatedSnippet> snippets;
    for (std::size_t c = 0; c < sequences.size(); ++c)
        for (std::size_t f = 0; f < sequences[c].size(); ++f) {
            const fs::path p = dir / "snippets" / fmt::format("c{:03}_t{:03}.png", c + 1, f);
            if (!fs::is_regular_file(p)) continue;
            snippets.push_back({static_cast<int>(c + 1), static_cast<int>(f), io::read_png_normalized(p)});
        }
    if (snippets.empty()) log::warn("no snippets found under " + (dir / "snippets").string());
    return ingest_annotated(sequences, snippets);
}

void save_ingest(const IngestResult& result, const fs::path& out) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out)) throw Error("cannot create output directory " + out.string());
    save_transition_model(result.transition, out / "transition.json");
    save_shape_models(result.shapes, out / "shape_models.json");
    write_text(out / "intensity.json", to_json(result.intensity).dump(2) + "\n");
}

void write_preview(const fs::path& dataset_dir, std::span<const int> frames, const fs::path& out) {
    if (frames.empty()) throw ValidationError("no frames selected for the preview");
    const DatasetManifest m = read_manifest(dataset_dir);
    constexpr int gap = 4;
    const int n = static_cast<int>(frames.size());
    Image<std::uint8_t> montage(n * m.width + (n - 1) * gap, m.height, 0);
    for (int i = 0; i < n; ++i) {
        const int f = frames[i];
        if (f < 0 || f >= m.n_frames)
            throw ValidationError(fmt::format("frame {} outside the dataset (0..{})", f, m.n_frames - 1));
        const ImageF img = io::read_png_normalized(dataset_dir / frame_file(f));
        const int x0 = i * (m.width + gap);
        for (int y = 0; y < m.height; ++y)
            for (int x = 0; x < m.width; ++x)
                montage(x0 + x, y) = static_cast<std::uint8_t>(std::lround(std::clamp(img(x, y), 0.0, 1.0) * 255.0));
    }
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    io::write_png8(out, montage);
}

}  // namespace cellsynth
