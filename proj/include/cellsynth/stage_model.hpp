#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cellsynth/common.hpp"
#include "cellsynth/rng.hpp"

namespace cellsynth {

using StageSequence = std::vector<Stage>;

inline constexpr int kUnboundedDuration = std::numeric_limits<int>::max();

/// Maximal run of equal labels inside a stage sequence.
struct StageRun {
    Stage stage;
    int begin;   ///< first frame of the run
    int length;  ///< number of frames

    int end() const { return begin + length; }
};

std::vector<StageRun> stage_runs(const StageSequence& seq);

/// Markov chain over the six mitotic stages with hard duration bounds.
struct StageTransitionModel {
    PerStage<PerStage<double>> transition{};  ///< transition[from][to], row-stochastic
    PerStage<int> min_duration{};             ///< frames, >= 1
    PerStage<int> max_duration{};             ///< frames, kUnboundedDuration for no bound
    /// Distribution of the initial stage; uniform over observed stages after estimation.
    PerStage<double> initial{};

    double p(Stage from, Stage to) const { return transition[index_of(from)][index_of(to)]; }

    /// Throws ValidationError if any invariant is broken.
    void validate() const;

    /// Identity transitions, unbounded durations, uniform initial stage.
    static StageTransitionModel identity();
};

StageTransitionModel estimate_transition_model(const std::vector<StageSequence>& sequences);

/// Sample n_frames labels. Without an explicit initial stage it is drawn from
/// model.initial. Duration bounds are hard: the chain stays while the run is
/// shorter than min_duration and is forced off the stage once it reaches
/// max_duration, drawing the target from the row renormalized over non-self entries.
StageSequence sample_stage_sequence(const StageTransitionModel& model, int n_frames, Rng& rng,
                                    std::optional<Stage> initial = std::nullopt);

/// Continue a chain whose run of `previous` has just ended: the first label is
/// drawn from the non-self part of previous's row, then sampling proceeds as usual.
StageSequence sample_continuation(const StageTransitionModel& model, Stage previous, int n_frames, Rng& rng);

/// Frames t with labels[t-1] == metaphase and labels[t] == anaphase.
std::vector<int> find_division_events(const StageSequence& seq);

nlohmann::json to_json(const StageTransitionModel& model);
StageTransitionModel transition_model_from_json(const nlohmann::json& j);

void save_transition_model(const StageTransitionModel& model, const std::filesystem::path& path);
StageTransitionModel load_transition_model(const std::filesystem::path& path);

/// One row per cell, comma-separated stage labels. Blank lines are skipped.
std::vector<StageSequence> parse_stage_csv(std::istream& in);
std::vector<StageSequence> read_stage_csv(const std::filesystem::path& path);

}  // namespace cellsynth
