#include "cellsynth/stage_model.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace cellsynth {

Stage stage_from_int(long long value) {
    if (value < 1 || value > kNumStages)
        throw ValidationError("stage label " + std::to_string(value) + " outside 1..6");
    return static_cast<Stage>(value);
}

const char* stage_name(Stage s) {
    switch (s) {
        case Stage::interphase: return "interphase";
        case Stage::prophase: return "prophase";
        case Stage::prometaphase: return "prometaphase";
        case Stage::metaphase: return "metaphase";
        case Stage::anaphase: return "anaphase";
        case Stage::telophase: return "telophase";
    }
    return "?";
}

std::vector<StageRun> stage_runs(const StageSequence& seq) {
    std::vector<StageRun> runs;
    for (int t = 0; t < static_cast<int>(seq.size()); ++t) {
        if (runs.empty() || runs.back().stage != seq[t])
            runs.push_back({seq[t], t, 1});
        else
            ++runs.back().length;
    }
    return runs;
}

void StageTransitionModel::validate() const {
    for (int s = 0; s < kNumStages; ++s) {
        double sum = 0.0;
        for (double v : transition[s]) {
            if (!(v >= 0.0) || !std::isfinite(v))
                throw ValidationError("transition row " + std::to_string(s + 1) + " has a negative or non-finite entry");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw ValidationError("transition row " + std::to_string(s + 1) + " does not sum to 1");
        if (min_duration[s] < 1) throw ValidationError("min_duration must be >= 1");
        if (max_duration[s] < min_duration[s]) throw ValidationError("max_duration below min_duration");
    }
    double total = 0.0;
    for (double v : initial) {
        if (!(v >= 0.0)) throw ValidationError("initial distribution has a negative entry");
        total += v;
    }
    if (!(total > 0.0)) throw ValidationError("initial distribution has zero mass");
}

StageTransitionModel StageTransitionModel::identity() {
    StageTransitionModel m;
    for (int s = 0; s < kNumStages; ++s) {
        m.transition[s][s] = 1.0;
        m.min_duration[s] = 1;
        m.max_duration[s] = kUnboundedDuration;
        m.initial[s] = 1.0 / kNumStages;
    }
    return m;
}

StageTransitionModel estimate_transition_model(const std::vector<StageSequence>& sequences) {
    if (sequences.empty()) throw ValidationError("no sequences");

    PerStage<PerStage<double>> counts{};
    PerStage<int> min_run;
    PerStage<int> max_run{};
    PerStage<bool> observed{};
    min_run.fill(kUnboundedDuration);

    for (const auto& seq : sequences) {
        for (std::size_t t = 1; t < seq.size(); ++t) counts[index_of(seq[t - 1])][index_of(seq[t])] += 1.0;
        for (const auto& run : stage_runs(seq)) {
            const auto s = index_of(run.stage);
            observed[s] = true;
            min_run[s] = std::min(min_run[s], run.length);
            max_run[s] = std::max(max_run[s], run.length);
        }
    }

    StageTransitionModel model = StageTransitionModel::identity();
    const int n_observed = static_cast<int>(std::count(observed.begin(), observed.end(), true));
    if (n_observed == 0) throw ValidationError("no sequences");

    for (int s = 0; s < kNumStages; ++s) {
        const double total = std::accumulate(counts[s].begin(), counts[s].end(), 0.0);
        if (total > 0.0) {
            for (int j = 0; j < kNumStages; ++j) model.transition[s][j] = counts[s][j] / total;
        }
        if (observed[s]) {
            model.min_duration[s] = min_run[s];
            // A row without observed exits is an absorbing self-loop; a finite
            // upper bound would make it impossible to sample.
            model.max_duration[s] = total - counts[s][s] > 0.0 ? max_run[s] : kUnboundedDuration;
        }
        model.initial[s] = observed[s] ? 1.0 / n_observed : 0.0;
    }
    return model;
}

namespace {

Stage draw_from(const PerStage<double>& weights, Rng& rng) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::uniform_real_distribution<double> u(0.0, total);
    const double r = u(rng);
    double acc = 0.0;
    int last_positive = -1;
    for (int j = 0; j < kNumStages; ++j) {
        if (weights[j] <= 0.0) continue;
        last_positive = j;
        acc += weights[j];
        if (r < acc) return stage_at(j);
    }
    return stage_at(last_positive);
}

Stage forced_jump(const StageTransitionModel& model, Stage from, Rng& rng) {
    PerStage<double> row = model.transition[index_of(from)];
    row[index_of(from)] = 0.0;
    if (std::accumulate(row.begin(), row.end(), 0.0) <= 0.0)
        throw Error("absorbing stage at max duration");
    return draw_from(row, rng);
}

void extend(const StageTransitionModel& model, StageSequence& seq, int n_frames, int run_length, Rng& rng) {
    while (static_cast<int>(seq.size()) < n_frames) {
        const Stage cur = seq.back();
        const auto s = index_of(cur);
        Stage next;
        if (run_length < model.min_duration[s])
            next = cur;
        else if (run_length >= model.max_duration[s])
            next = forced_jump(model, cur, rng);
        else
            next = draw_from(model.transition[s], rng);
        run_length = next == cur ? run_length + 1 : 1;
        seq.push_back(next);
    }
}

}  // namespace

StageSequence sample_stage_sequence(const StageTransitionModel& model, int n_frames, Rng& rng,
                                    std::optional<Stage> initial) {
    if (n_frames < 1) throw ValidationError("n_frames must be >= 1");
    model.validate();
    StageSequence seq;
    seq.reserve(n_frames);
    seq.push_back(initial ? *initial : draw_from(model.initial, rng));
    extend(model, seq, n_frames, 1, rng);
    return seq;
}

StageSequence sample_continuation(const StageTransitionModel& model, Stage previous, int n_frames, Rng& rng) {
    if (n_frames < 1) throw ValidationError("n_frames must be >= 1");
    StageSequence seq;
    seq.reserve(n_frames);
    seq.push_back(forced_jump(model, previous, rng));
    extend(model, seq, n_frames, 1, rng);
    return seq;
}

std::vector<int> find_division_events(const StageSequence& seq) {
    std::vector<int> events;
    for (std::size_t t = 1; t < seq.size(); ++t)
        if (seq[t - 1] == Stage::metaphase && seq[t] == Stage::anaphase) events.push_back(static_cast<int>(t));
    return events;
}

nlohmann::json to_json(const StageTransitionModel& model) {
    nlohmann::json j;
    j["transition"] = model.transition;
    j["min_duration"] = model.min_duration;
    nlohmann::json max = nlohmann::json::array();
    for (int v : model.max_duration) max.push_back(v == kUnboundedDuration ? nlohmann::json(nullptr) : nlohmann::json(v));
    j["max_duration"] = max;
    j["initial"] = model.initial;
    return j;
}

StageTransitionModel transition_model_from_json(const nlohmann::json& j) {
    StageTransitionModel m = StageTransitionModel::identity();
    try {
        const auto& rows = j.at("transition");
        if (rows.size() != kNumStages) throw ValidationError("transition must have 6 rows");
        for (int s = 0; s < kNumStages; ++s) {
            if (rows[s].size() != kNumStages) throw ValidationError("transition rows must have 6 entries");
            for (int t = 0; t < kNumStages; ++t) m.transition[s][t] = rows[s][t].get<double>();
        }
        const auto& mins = j.at("min_duration");
        const auto& maxs = j.at("max_duration");
        if (mins.size() != kNumStages || maxs.size() != kNumStages)
            throw ValidationError("duration vectors must have 6 entries");
        for (int s = 0; s < kNumStages; ++s) {
            m.min_duration[s] = mins[s].get<int>();
            m.max_duration[s] = maxs[s].is_null() ? kUnboundedDuration : maxs[s].get<int>();
        }
        if (j.contains("initial")) {
            if (j["initial"].size() != kNumStages) throw ValidationError("initial must have 6 entries");
            for (int s = 0; s < kNumStages; ++s) m.initial[s] = j["initial"][s].get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed transition model: ") + e.what());
    }
    m.validate();
    return m;
}

void save_transition_model(const StageTransitionModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << to_json(model).dump(2) << '\n';
}

StageTransitionModel load_transition_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return transition_model_from_json(j);
}

std::vector<StageSequence> parse_stage_csv(std::istream& in) {
    std::vector<StageSequence> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        StageSequence seq;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            try {
                std::size_t used = 0;
                const long long v = std::stoll(field, &used);
                if (field.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(field);
                seq.push_back(stage_from_int(v));
            } catch (const ValidationError& e) {
                throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
            } catch (const std::exception&) {
                throw ValidationError("line " + std::to_string(line_no) + ": not an integer label '" + field + "'");
            }
        }
        out.push_back(std::move(seq));
    }
    return out;
}

std::vector<StageSequence> read_stage_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read " + path.string());
    return parse_stage_csv(in);
}

}  // namespace cellsynth
