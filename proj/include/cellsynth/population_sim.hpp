#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "cellsynth/config.hpp"
#include "cellsynth/image.hpp"
#include "cellsynth/kernels.hpp"
#include "cellsynth/rng.hpp"
#include "cellsynth/shape_model.hpp"
#include "cellsynth/stage_model.hpp"
#include "cellsynth/texture_synth.hpp"

namespace cellsynth {

/// State of one cell in one frame.
struct CellFrameRecord {
    int frame = 0;
    Vec2 position = Vec2::Zero();
    double orientation = 0.0;    ///< radians; canonical +y maps to R(orientation) * (0, 1)
    double rotation_step = 0.0;  ///< radians drawn by the motion step for this frame
    Stage stage = Stage::interphase;
    LandmarkShape shape;         ///< canonical frame
    double intensity = 0.0;
    double r_major = 0.0;        ///< R_M, major semi-axis of the shape
    double r_minor = 0.0;        ///< R_N, minor semi-axis of the shape
    int run = 0;                 ///< index of the stage run (stage_runs of the cell's stage history)
};

/// Stage history of a cell from frame 0 to the end of the horizon, with one
/// set of shape coefficients per stage run. Daughters copy their mother's
/// history up to the end of the anaphase run they are born into.
struct StageTimeline {
    StageSequence labels;
    std::vector<StageRun> runs;
    std::vector<ShapeSampleParams> run_params;

    int run_at(int frame) const;
    LandmarkShape shape_at(int frame, const ShapeModelSet& models, std::optional<int> n_e) const;
};

struct CellTrack {
    std::uint32_t id = 0;
    std::uint32_t parent_id = 0;  ///< 0 for founders
    double lineage_offset = 0.0;
    std::vector<CellFrameRecord> frames;  ///< consecutive frames starting at begin()

    /// Frames before this one take their shape from the mother's timeline
    /// (shared anaphase run); from here on the cell's own timeline applies.
    int own_shape_from = 0;
    std::shared_ptr<const StageTimeline> timeline;
    std::shared_ptr<const StageTimeline> inherited_timeline;

    int begin() const { return frames.empty() ? -1 : frames.front().frame; }
    int end() const { return frames.empty() ? -1 : frames.back().frame; }  ///< last frame, inclusive
};

struct InstanceInfo {
    std::uint32_t id = 0;
    int area = 0;  ///< pixels in the instance mask
    Stage stage = Stage::interphase;
};

struct FrameState {
    LabelImage labels;
    std::vector<InstanceInfo> instances;  ///< live cells, ascending id
};

struct MotionStep {
    Vec2 displacement = Vec2::Zero();
    double rotation = 0.0;  ///< radians
};

/// Brownian step: displacement ~ N(0, displacement_variance) per axis,
/// rotation ~ N(0, rotation_variance) in the configured unit. The new
/// position is clamped to the canvas.
MotionStep step_motion(Vec2& position, double& orientation, const MotionParams& params, int width, int height,
                       Rng& rng);

/// Daughter centers: mother position +- r_minor along the direction
/// perpendicular to the mother's major axis, clamped to the canvas.
std::pair<Vec2, Vec2> division_positions(const Vec2& mother_position, double mother_orientation, double mother_r_minor,
                                         int width, int height);

/// intensity = clamp(mean[stage] + lineage_offset + N(0, std[stage]^2), 0, 1)
double assign_intensity(Stage stage, double lineage_offset, const StageIntensityTable& table, Rng& rng);

struct RepulsionResult {
    std::vector<Vec2> corrections;  ///< total displacement per body
    int sweeps = 0;
    int projection_passes = 0;
    double max_pair_imbalance = 0.0;  ///< max |push(i,j) + push(j,i)| seen
    int unresolved_pairs = 0;         ///< pairs still closer than the hard core afterwards
};

/// Jacobi relaxation: every sweep computes all pair pushes from the frozen
/// positions, then applies them and clamps to the canvas. Stops after
/// max_sweeps or when every correction is below tolerance, then projects any
/// pair still closer than hard_core_fraction * (R_N,i + R_N,j) apart.
RepulsionResult resolve_repulsion(std::span<kernels::Body> bodies, const RepulsionParams& params, int width,
                                  int height, std::uint64_t seed);

/// Resolved models and texture provider for a run.
struct SimulationInputs {
    StageTransitionModel stage_model;
    ShapeModelSet shape_models;
    std::shared_ptr<const TextureProvider> texture;
};

/// Load or build everything the config refers to.
SimulationInputs resolve_inputs(const SimConfig& config);

using ConditioningSink = std::function<void(const PatchKey&, const ConditioningPatch&)>;

struct SimulationResult {
    SimConfig config;
    std::vector<FrameState> frames;
    std::vector<ImageF> clean;  ///< composed texture frames before acquisition
    std::vector<ImageF> raw;    ///< after acquisition
    std::vector<CellTrack> tracks;  ///< ascending id
    int divisions = 0;
    double max_pair_imbalance = 0.0;
    int unresolved_pairs = 0;

    const CellTrack& track(std::uint32_t id) const { return tracks.at(id - 1); }
};

SimulationResult simulate(const SimConfig& config, const SimulationInputs& inputs,
                          const ConditioningSink& on_conditioning = {});
SimulationResult simulate(const SimConfig& config);

}  // namespace cellsynth
