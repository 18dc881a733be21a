#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cellsynth/image.hpp"
#include "cellsynth/shape_model.hpp"
#include "cellsynth/stage_model.hpp"

namespace cellsynth {

/// Built-in stage model. Transition probabilities and duration bounds are
/// hand-set placeholders (not estimated from real data) that produce a full
/// mitotic cycle of roughly 40 frames.
StageTransitionModel default_transition_model();

/// Canonical-frame radii (px) of a synthetic nucleus: an ellipse with the
/// given semi-axes (major along y) modulated by low-order harmonics.
std::vector<double> synthetic_radii(double major, double minor, std::span<const double> harmonics);

struct LabelledMask {
    Stage stage;
    BinaryImage mask;
};

/// Randomly perturbed, randomly rotated 96x96 nucleus masks for every stage.
std::vector<LabelledMask> synthetic_training_masks(std::uint64_t seed, int per_stage = 40);

/// Landmark extraction + per-stage model building. Stages with fewer than two
/// usable masks are left empty (with a warning).
ShapeModelSet build_models_from_masks(const std::vector<LabelledMask>& masks);

/// Models built once from synthetic_training_masks(kDefaultCorpusSeed).
const ShapeModelSet& default_shape_models();

inline constexpr std::uint64_t kDefaultCorpusSeed = 20211;

}  // namespace cellsynth
