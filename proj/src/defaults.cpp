#include "cellsynth/defaults.hpp"

#include <cmath>
#include <numbers>

#include "cellsynth/log.hpp"
#include "cellsynth/rng.hpp"
#include "cellsynth/texture_synth.hpp"

namespace cellsynth {

StageTransitionModel default_transition_model() {
    StageTransitionModel m;
    m.transition = {{
        {0.95, 0.05, 0.00, 0.00, 0.00, 0.00},
        {0.00, 0.60, 0.40, 0.00, 0.00, 0.00},
        {0.00, 0.00, 0.70, 0.30, 0.00, 0.00},
        {0.00, 0.00, 0.00, 0.80, 0.20, 0.00},
        {0.00, 0.00, 0.00, 0.00, 0.60, 0.40},
        {0.30, 0.00, 0.00, 0.00, 0.00, 0.70},
    }};
    m.min_duration = {5, 2, 2, 3, 2, 2};
    m.max_duration = {60, 6, 10, 20, 6, 10};
    m.initial.fill(1.0 / kNumStages);
    return m;
}

std::vector<double> synthetic_radii(double major, double minor, std::span<const double> harmonics) {
    std::vector<double> radii(kNumLandmarks);
    for (int k = 0; k < kNumLandmarks; ++k) {
        const double phi = k * kLandmarkStepDeg * std::numbers::pi / 180.0;
        const double c = std::cos(phi), s = std::sin(phi);
        double r = major * minor / std::sqrt(major * major * c * c + minor * minor * s * s);
        double mod = 1.0;
        // harmonics = (c2, s2, c3, s3, ...)
        for (std::size_t h = 0; h + 1 < harmonics.size(); h += 2) {
            const double order = 2.0 + static_cast<double>(h / 2);
            mod += harmonics[h] * std::cos(order * phi) + harmonics[h + 1] * std::sin(order * phi);
        }
        radii[k] = r * mod;
    }
    return radii;
}

namespace {

// Semi-axes (major, minor) of the synthetic nuclei per stage, px.
constexpr PerStage<std::pair<double, double>> kStageAxes{{
    {13.0, 10.5},  // interphase
    {12.5, 10.5},  // prophase
    {11.0, 9.0},   // prometaphase
    {12.0, 5.5},   // metaphase plate
    {10.0, 5.0},   // anaphase chromatid set
    {8.0, 6.5},    // telophase
}};

}  // namespace

std::vector<LabelledMask> synthetic_training_masks(std::uint64_t seed, int per_stage) {
    std::vector<LabelledMask> out;
    out.reserve(static_cast<std::size_t>(per_stage) * kNumStages);
    for (int s = 0; s < kNumStages; ++s) {
        for (int i = 0; i < per_stage; ++i) {
            Rng rng = substream(seed, StreamTag::corpus, {static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(i)});
            std::normal_distribution<double> normal(0.0, 1.0);
            std::uniform_real_distribution<double> uniform(0.0, 1.0);
            const double major = kStageAxes[s].first * (1.0 + 0.06 * normal(rng));
            const double minor = kStageAxes[s].second * (1.0 + 0.06 * normal(rng));
            std::vector<double> harmonics(6);
            for (auto& h : harmonics) h = 0.03 * normal(rng);
            const auto radii = synthetic_radii(std::max(major, minor), std::min(major, minor), harmonics);
            const Vec2 center(kPatchSize / 2 + uniform(rng) - 0.5, kPatchSize / 2 + uniform(rng) - 0.5);
            const double rotation = 2.0 * std::numbers::pi * uniform(rng);
            const LabelImage labels =
                rasterize(LandmarkShape::from_radii(radii), kPatchSize, kPatchSize, center, rotation, 1);
            BinaryImage mask(kPatchSize, kPatchSize);
            for (std::size_t p = 0; p < labels.size(); ++p) mask.pixels()[p] = labels.pixels()[p] ? 1 : 0;
            out.push_back({stage_at(s), std::move(mask)});
        }
    }
    return out;
}

ShapeModelSet build_models_from_masks(const std::vector<LabelledMask>& masks) {
    PerStage<std::vector<LandmarkShape>> grouped;
    for (const auto& m : masks) {
        try {
            grouped[index_of(m.stage)].push_back(extract_landmarks(m.mask));
        } catch (const ValidationError& e) {
            log::warn(std::string("skipping mask: ") + e.what());
        }
    }
    ShapeModelSet models;
    for (int s = 0; s < kNumStages; ++s) {
        if (grouped[s].size() < 2) {
            log::warn(std::string("stage ") + stage_name(stage_at(s)) + " has fewer than 2 usable shapes; model omitted");
            continue;
        }
        models[s] = build_shape_model(grouped[s], stage_at(s));
    }
    return models;
}

const ShapeModelSet& default_shape_models() {
    static const ShapeModelSet models = build_models_from_masks(synthetic_training_masks(kDefaultCorpusSeed));
    return models;
}

}  // namespace cellsynth
