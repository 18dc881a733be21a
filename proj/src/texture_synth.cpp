#include "cellsynth/texture_synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "cellsynth/kernels.hpp"
#include "cellsynth/log.hpp"
#include "cellsynth/png_io.hpp"
#include "cellsynth/segmentation.hpp"

namespace cellsynth {

BinaryImage ConditioningPatch::support() const {
    BinaryImage out(stage.width(), stage.height(), 0);
    for (std::size_t i = 0; i < stage.size(); ++i) out.pixels()[i] = stage.pixels()[i] > 0.0;
    return out;
}

Stage ConditioningPatch::stage_label() const {
    for (double v : stage.pixels())
        if (v > 0.0) return stage_from_int(std::lround(v));
    throw ValidationError("conditioning patch has an empty support");
}

double ConditioningPatch::target_intensity() const {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < stage.size(); ++i)
        if (stage.pixels()[i] > 0.0) {
            sum += intensity.pixels()[i];
            ++n;
        }
    return n ? sum / static_cast<double>(n) : 0.0;
}

ConditioningPatch make_conditioning(const LabelImage& mask, Stage stage, double mean_intensity, Rng& rng) {
    if (mask.width() != kPatchSize || mask.height() != kPatchSize)
        throw ValidationError("conditioning masks must be 96x96");
    if (!(mean_intensity >= 0.0 && mean_intensity <= 1.0)) throw ValidationError("mean intensity outside [0, 1]");
    if (std::none_of(mask.pixels().begin(), mask.pixels().end(), [](auto v) { return v != 0; }))
        throw ValidationError("empty mask");

    ConditioningPatch c{ImageF(kPatchSize, kPatchSize, 0.0), ImageF(kPatchSize, kPatchSize, 0.0),
                        ImageF(kPatchSize, kPatchSize, 0.0)};
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask.pixels()[i]) {
            c.stage.pixels()[i] = to_int(stage);
            c.intensity.pixels()[i] = mean_intensity;
        }
        c.noise.pixels()[i] = uniform(rng);
    }
    return c;
}

void StageIntensityTable::validate() const {
    for (int s = 0; s < kNumStages; ++s) {
        if (!(mean[s] > 0.0 && mean[s] <= 1.0)) throw ValidationError("intensity means must lie in (0, 1]");
        if (!(std[s] >= 0.0)) throw ValidationError("intensity std must be >= 0");
    }
}

StageIntensityTable StageIntensityTable::placeholder() {
    return {{0.35, 0.45, 0.50, 0.60, 0.55, 0.45}, {0.03, 0.04, 0.04, 0.05, 0.05, 0.04}};
}

nlohmann::json to_json(const StageIntensityTable& table) {
    return {{"mean", table.mean}, {"std", table.std}};
}

StageIntensityTable intensity_table_from_json(const nlohmann::json& j) {
    StageIntensityTable t;
    try {
        if (j.at("mean").size() != kNumStages || j.at("std").size() != kNumStages)
            throw ValidationError("intensity table needs 6 means and 6 stds");
        t.mean = j.at("mean").get<PerStage<double>>();
        t.std = j.at("std").get<PerStage<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed intensity table: ") + e.what());
    }
    t.validate();
    return t;
}

nlohmann::json to_json(const ProceduralTextureParams& params) {
    return {{"granularity", params.granularity}, {"contrast", params.contrast}, {"rim_width", params.rim_width}};
}

ProceduralTextureParams procedural_params_from_json(const nlohmann::json& j) {
    ProceduralTextureParams p;
    try {
        if (j.contains("granularity")) p.granularity = j["granularity"].get<PerStage<double>>();
        if (j.contains("contrast")) p.contrast = j["contrast"].get<PerStage<double>>();
        p.rim_width = j.value("rim_width", p.rim_width);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed procedural texture parameters: ") + e.what());
    }
    for (int s = 0; s < kNumStages; ++s)
        if (p.granularity[s] < 0.0 || p.contrast[s] < 0.0) throw ValidationError("texture parameters must be >= 0");
    return p;
}

TexturePatch procedural_texture(const ConditioningPatch& cond, const ProceduralTextureParams& params) {
    TexturePatch out{ImageF(cond.stage.width(), cond.stage.height(), 0.0), Provenance::procedural};
    const BinaryImage support = cond.support();
    std::vector<std::size_t> fg;
    for (std::size_t i = 0; i < support.size(); ++i)
        if (support.pixels()[i]) fg.push_back(i);
    if (fg.empty()) return out;

    const double target = cond.target_intensity();
    if (target <= 0.0) return out;

    const auto s = index_of(cond.stage_label());
    ImageF smooth;
    kernels::gaussian_blur(cond.noise, smooth, params.granularity[s]);

    double mean = 0.0, var = 0.0;
    for (auto i : fg) mean += smooth.pixels()[i];
    mean /= static_cast<double>(fg.size());
    for (auto i : fg) var += (smooth.pixels()[i] - mean) * (smooth.pixels()[i] - mean);
    const double sd = std::sqrt(var / static_cast<double>(fg.size()));

    const ImageF dist = segmentation::distance_transform(support);
    std::vector<double> base(fg.size());
    for (std::size_t k = 0; k < fg.size(); ++k) {
        const double z = sd > 0.0 ? (smooth.pixels()[fg[k]] - mean) / sd : 0.0;
        const double rim =
            params.rim_width > 0.0 ? 1.0 - 0.5 * std::exp(-(dist.pixels()[fg[k]] - 1.0) / params.rim_width) : 1.0;
        base[k] = std::exp(params.contrast[s] * z) * rim;
    }

    // Find the gain g with mean(min(1, g * base)) == target; the mean is
    // nondecreasing in g and reaches 1 at g = 1 / min(base).
    auto mean_at = [&](double g) {
        double acc = 0.0;
        for (double b : base) acc += std::min(1.0, g * b);
        return acc / static_cast<double>(base.size());
    };
    double lo = 0.0, hi = 1.0 / *std::min_element(base.begin(), base.end());
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mean_at(mid) < target ? lo : hi) = mid;
    }
    const double gain = 0.5 * (lo + hi);
    for (std::size_t k = 0; k < fg.size(); ++k) out.image.pixels()[fg[k]] = std::min(1.0, gain * base[k]);
    return out;
}

TexturePatch ProceduralProvider::provide(const PatchKey&, const ConditioningPatch& cond) const {
    return procedural_texture(cond, params_);
}

TexturePatch ExternalPatchProvider::provide(const PatchKey& key, const ConditioningPatch& cond) const {
    if (auto it = patches_.find(key.str()); it != patches_.end()) return {it->second, Provenance::external};
    log::warn("no external patch for " + key.str() + ", using procedural texture");
    return procedural_texture(cond, fallback_);
}

std::unique_ptr<ExternalPatchProvider> load_external_patches(const std::filesystem::path& dir,
                                                             ProceduralTextureParams fallback) {
    if (!std::filesystem::is_directory(dir)) throw ValidationError("patch directory " + dir.string() + " not found");
    std::map<std::string, ImageF> patches;
    const auto index_path = dir / "index.json";
    if (std::filesystem::exists(index_path)) {
        nlohmann::json index;
        try {
            std::ifstream in(index_path);
            in >> index;
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("malformed patch index: " + std::string(e.what()));
        }
        if (!index.is_object()) throw ValidationError("malformed patch index: expected an object");
        for (const auto& [key, value] : index.items()) {
            const auto sep = key.find('_');
            if (!value.is_string() || sep == std::string::npos || sep == 0 || sep + 1 == key.size() ||
                key.find_first_not_of("0123456789_") != std::string::npos || key.find('_', sep + 1) != std::string::npos)
                throw ValidationError("malformed patch index entry '" + key + "'");
            const std::filesystem::path file = dir / value.get<std::string>();
            ImageF patch = file.extension() == ".pfm" ? io::read_pfm(file) : io::read_png_normalized(file);
            if (patch.width() != kPatchSize || patch.height() != kPatchSize)
                throw ValidationError(file.string() + ": patches must be 96x96");
            for (double v : patch.pixels())
                if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(file.string() + ": values outside [0, 1]");
            patches.emplace(key, std::move(patch));
        }
    }
    return std::make_unique<ExternalPatchProvider>(std::move(patches), std::move(fallback));
}

void write_conditioning(const ConditioningPatch& cond, const std::filesystem::path& dir, const std::string& key) {
    Image<std::uint16_t> stage(cond.stage.width(), cond.stage.height());
    for (std::size_t i = 0; i < stage.size(); ++i)
        stage.pixels()[i] = static_cast<std::uint16_t>(std::lround(cond.stage.pixels()[i]) * kStageCodeScale);
    io::write_png16(dir / (key + "_stage.png"), stage);
    io::write_png16(dir / (key + "_intensity.png"), io::to_u16(cond.intensity));
    io::write_png16(dir / (key + "_noise.png"), io::to_u16(cond.noise));
}

ConditioningPatch read_conditioning(const std::filesystem::path& dir, const std::string& key) {
    const auto stage = io::read_png(dir / (key + "_stage.png"));
    ConditioningPatch c;
    c.stage = ImageF(stage.pixels.width(), stage.pixels.height());
    for (std::size_t i = 0; i < c.stage.size(); ++i)
        c.stage.pixels()[i] = static_cast<double>(stage.pixels.pixels()[i] / kStageCodeScale);
    c.intensity = io::read_png_normalized(dir / (key + "_intensity.png"));
    c.noise = io::read_png_normalized(dir / (key + "_noise.png"));
    return c;
}

}  // namespace cellsynth
