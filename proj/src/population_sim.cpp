#include "cellsynth/population_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cellsynth/acquisition.hpp"
#include "cellsynth/defaults.hpp"

namespace cellsynth {
namespace {

Vec2 clamp_to_canvas(const Vec2& p, int width, int height) {
    return {std::clamp(p.x(), 0.0, width - 1.0), std::clamp(p.y(), 0.0, height - 1.0)};
}

double normal_draw(Rng& rng, double variance) {
    if (variance <= 0.0) return 0.0;
    std::normal_distribution<double> dist(0.0, std::sqrt(variance));
    return dist(rng);
}

}  // namespace

int StageTimeline::run_at(int frame) const {
    auto it = std::upper_bound(runs.begin(), runs.end(), frame, [](int f, const StageRun& r) { return f < r.begin; });
    return static_cast<int>(it - runs.begin()) - 1;
}

LandmarkShape StageTimeline::shape_at(int frame, const ShapeModelSet& models, std::optional<int> n_e) const {
    return blend_runs(models, transition_weights(labels, frame), run_params, n_e);
}

MotionStep step_motion(Vec2& position, double& orientation, const MotionParams& params, int width, int height,
                       Rng& rng) {
    MotionStep step;
    step.displacement.x() = normal_draw(rng, params.displacement_variance);
    step.displacement.y() = normal_draw(rng, params.displacement_variance);
    step.rotation = normal_draw(rng, params.rotation_variance);
    if (params.rotation_unit == AngleUnit::degrees) step.rotation *= std::numbers::pi / 180.0;
    position = clamp_to_canvas(position + step.displacement, width, height);
    orientation += step.rotation;
    return step;
}

std::pair<Vec2, Vec2> division_positions(const Vec2& mother_position, double mother_orientation, double mother_r_minor,
                                         int width, int height) {
    // The major axis is R(orientation) * (0, 1); its perpendicular is R(orientation) * (1, 0).
    const Vec2 normal(std::cos(mother_orientation), std::sin(mother_orientation));
    const Vec2 offset = mother_r_minor * normal;
    return {clamp_to_canvas(mother_position + offset, width, height),
            clamp_to_canvas(mother_position - offset, width, height)};
}

double assign_intensity(Stage stage, double lineage_offset, const StageIntensityTable& table, Rng& rng) {
    const auto s = index_of(stage);
    const double sd = table.std[s];
    const double jitter = normal_draw(rng, sd * sd);
    return std::clamp(table.mean[s] + lineage_offset + jitter, 0.0, 1.0);
}

RepulsionResult resolve_repulsion(std::span<kernels::Body> bodies, const RepulsionParams& params, int width,
                                  int height, std::uint64_t seed) {
    const std::size_t n = bodies.size();
    RepulsionResult result;
    result.corrections.assign(n, Vec2::Zero());
    if (n < 2) return result;

    std::vector<Vec2> step(n);
    kernels::RepulsionLaw law{params.gain, params.core_gain, params.hard_core_fraction, false, seed};

    auto audit = [&](const kernels::RepulsionLaw& l) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const Vec2 sum = kernels::pair_push(bodies[i], bodies[j], l) + kernels::pair_push(bodies[j], bodies[i], l);
                result.max_pair_imbalance = std::max(result.max_pair_imbalance, sum.norm());
            }
    };
    auto apply = [&]() {
        double largest = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 before = bodies[i].position;
            bodies[i].position = clamp_to_canvas(before + step[i], width, height);
            result.corrections[i] += bodies[i].position - before;
            largest = std::max(largest, step[i].norm());
        }
        return largest;
    };

    for (int sweep = 0; sweep < params.max_sweeps; ++sweep) {
        audit(law);
        kernels::repulsion_corrections(bodies, law, step);
        ++result.sweeps;
        if (apply() < params.tolerance) break;
    }

    law.projection = true;
    for (int pass = 0; pass < params.max_projection_passes; ++pass) {
        kernels::repulsion_corrections(bodies, law, step);
        if (std::all_of(step.begin(), step.end(), [](const Vec2& v) { return v.isZero(0.0); })) break;
        audit(law);
        apply();
        ++result.projection_passes;
    }

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = (bodies[i].position - bodies[j].position).norm();
            if (d < params.hard_core_fraction * (bodies[i].r_minor + bodies[j].r_minor)) ++result.unresolved_pairs;
        }
    return result;
}

SimulationInputs resolve_inputs(const SimConfig& config) {
    SimulationInputs in;
    in.stage_model =
        config.stage_model_path.empty() ? default_transition_model() : load_transition_model(config.stage_model_path);
    in.shape_models =
        config.shape_model_path.empty() ? default_shape_models() : load_shape_models(config.shape_model_path);
    if (config.texture == TextureSource::external)
        in.texture = load_external_patches(config.texture_dir, config.procedural);
    else
        in.texture = std::make_shared<ProceduralProvider>(config.procedural);
    return in;
}

namespace {

struct LiveCell {
    std::size_t track = 0;
    int division_frame = -1;
    Rng motion;
    Rng intensity;
    bool born_now = false;
    Vec2 position = Vec2::Zero();
    double orientation = 0.0;
};

int next_division(const StageTimeline& tl, int begin) {
    const auto n = static_cast<int>(tl.labels.size());
    for (int t = begin + 1; t < n; ++t)
        if (tl.labels[t - 1] == Stage::metaphase && tl.labels[t] == Stage::anaphase) return t;
    return -1;
}

void draw_run_params(StageTimeline& tl, std::size_t from_run, const ShapeModelSet& models, double epsilon_std,
                     Rng& rng) {
    for (std::size_t r = from_run; r < tl.runs.size(); ++r) {
        const auto& model = models[index_of(tl.runs[r].stage)];
        tl.run_params.push_back(model ? draw_shape_params(*model, epsilon_std, rng) : ShapeSampleParams{});
    }
}

struct RenderedPatch {
    LabelImage mask;
    TexturePatch texture;
    ConditioningPatch conditioning;
    int origin_x = 0;
    int origin_y = 0;
};

}  // namespace

SimulationResult simulate(const SimConfig& config, const SimulationInputs& inputs, const ConditioningSink& on_conditioning) {
    config.validate();
    inputs.stage_model.validate();
    if (!inputs.texture) throw ValidationError("no texture provider");

    const int n_frames = config.n_frames;
    const int width = config.width;
    const int height = config.height;
    const std::uint64_t seed = config.seed;
    const double epsilon_std = std::sqrt(config.epsilon_variance);
    const auto& models = inputs.shape_models;

    SimulationResult result;
    result.config = config;
    std::vector<LiveCell> alive;
    std::uint32_t next_id = 1;

    auto new_track = [&](std::uint32_t parent, double offset) -> std::size_t {
        if (next_id == std::numeric_limits<std::uint16_t>::max())
            throw Error("more than 65534 cells; instance masks are 16-bit");
        CellTrack t;
        t.id = next_id++;
        t.parent_id = parent;
        t.lineage_offset = offset;
        result.tracks.push_back(std::move(t));
        return result.tracks.size() - 1;
    };
    auto streams = [&](LiveCell& c, std::uint32_t id) {
        c.motion = substream(seed, StreamTag::motion, {id});
        c.intensity = substream(seed, StreamTag::intensity, {id});
    };

    // Founders.
    {
        Rng placement = substream(seed, StreamTag::placement);
        std::uniform_real_distribution<double> ux(config.placement_margin, width - 1.0 - config.placement_margin);
        std::uniform_real_distribution<double> uy(config.placement_margin, height - 1.0 - config.placement_margin);
        std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
        for (int i = 0; i < config.n_initial_cells; ++i) {
            const std::uint32_t id = next_id;
            Rng lineage = substream(seed, StreamTag::lineage, {id});
            const double offset = normal_draw(lineage, config.lineage_offset_std * config.lineage_offset_std);
            LiveCell c;
            c.track = new_track(0, offset);
            streams(c, id);
            c.position = Vec2(ux(placement), uy(placement));
            c.orientation = angle(placement);

            auto tl = std::make_shared<StageTimeline>();
            Rng stage_rng = substream(seed, StreamTag::stage, {id});
            tl->labels = sample_stage_sequence(inputs.stage_model, n_frames, stage_rng, config.initial_stage);
            tl->runs = stage_runs(tl->labels);
            Rng shape_rng = substream(seed, StreamTag::shape, {id});
            draw_run_params(*tl, 0, models, epsilon_std, shape_rng);
            c.division_frame = next_division(*tl, 0);
            result.tracks[c.track].timeline = std::move(tl);
            c.born_now = true;
            alive.push_back(std::move(c));
        }
    }

    for (int f = 0; f < n_frames; ++f) {
        // Divisions: a metaphase -> anaphase transition at f ends the mother at f - 1.
        std::vector<LiveCell> next_alive;
        for (auto& c : alive) {
            if (c.division_frame != f) {
                next_alive.push_back(std::move(c));
                continue;
            }
            const std::uint32_t mother_id = result.tracks[c.track].id;
            const double offset = result.tracks[c.track].lineage_offset;
            const CellFrameRecord last = result.tracks[c.track].frames.back();
            const auto mother_tl = result.tracks[c.track].timeline;
            const int anaphase_run = mother_tl->run_at(f);
            const int shared_end = mother_tl->runs[anaphase_run].end();
            const auto [pa, pb] = division_positions(last.position, last.orientation, last.r_minor, width, height);
            ++result.divisions;

            for (const Vec2& pos : {pa, pb}) {
                LiveCell d;
                d.track = new_track(mother_id, offset);
                const std::uint32_t id = result.tracks[d.track].id;
                streams(d, id);
                d.position = pos;
                d.orientation = last.orientation;
                d.born_now = true;

                auto tl = std::make_shared<StageTimeline>();
                tl->labels.assign(mother_tl->labels.begin(), mother_tl->labels.begin() + shared_end);
                if (shared_end < n_frames) {
                    Rng stage_rng = substream(seed, StreamTag::stage, {id});
                    const auto suffix =
                        sample_continuation(inputs.stage_model, Stage::anaphase, n_frames - shared_end, stage_rng);
                    tl->labels.insert(tl->labels.end(), suffix.begin(), suffix.end());
                }
                tl->runs = stage_runs(tl->labels);
                tl->run_params.assign(mother_tl->run_params.begin(), mother_tl->run_params.begin() + anaphase_run + 1);
                Rng shape_rng = substream(seed, StreamTag::shape, {id});
                draw_run_params(*tl, anaphase_run + 1, models, epsilon_std, shape_rng);
                d.division_frame = next_division(*tl, f);

                auto& track = result.tracks[d.track];
                track.own_shape_from = shared_end;
                track.inherited_timeline = mother_tl;
                track.timeline = std::move(tl);
                next_alive.push_back(std::move(d));
            }
        }
        alive = std::move(next_alive);

        // Shapes, motion, stage for this frame.
        const auto n_alive = static_cast<std::ptrdiff_t>(alive.size());
        std::vector<CellFrameRecord> records(alive.size());
        std::vector<std::string> shape_errors(alive.size());
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t i = 0; i < n_alive; ++i) {
            auto& c = alive[i];
            const auto& track = result.tracks[c.track];
            auto& rec = records[i];
            rec.frame = f;
            if (c.born_now) {
                rec.position = c.position;
                rec.orientation = c.orientation;
            } else {
                rec.position = track.frames.back().position;
                rec.orientation = track.frames.back().orientation;
                rec.rotation_step = step_motion(rec.position, rec.orientation, config.motion, width, height, c.motion).rotation;
            }
            const StageTimeline& tl =
                f < track.own_shape_from && track.inherited_timeline ? *track.inherited_timeline : *track.timeline;
            rec.stage = track.timeline->labels[f];
            rec.run = tl.run_at(f);
            try {
                rec.shape = tl.shape_at(f, models, config.n_e);
            } catch (const std::exception& e) {
                shape_errors[i] = e.what();
                continue;
            }
            const ShapeAxes axes = shape_axes(rec.shape);
            rec.r_major = axes.major;
            rec.r_minor = axes.minor;
        }
        for (const auto& err : shape_errors)
            if (!err.empty()) throw Error(err);

        std::vector<kernels::Body> bodies(alive.size());
        for (std::size_t i = 0; i < alive.size(); ++i)
            bodies[i] = {records[i].position, records[i].r_major, records[i].r_minor, result.tracks[alive[i].track].id};
        const RepulsionResult rep = resolve_repulsion(bodies, config.repulsion, width, height,
                                                      derive_seed(seed, StreamTag::repulsion, {static_cast<std::uint64_t>(f)}));
        result.max_pair_imbalance = std::max(result.max_pair_imbalance, rep.max_pair_imbalance);
        result.unresolved_pairs += rep.unresolved_pairs;

        for (std::size_t i = 0; i < alive.size(); ++i) {
            auto& rec = records[i];
            rec.position = bodies[i].position;
            auto& track = result.tracks[alive[i].track];
            rec.intensity = assign_intensity(rec.stage, track.lineage_offset, config.intensity, alive[i].intensity);
            track.frames.push_back(std::move(rec));
            alive[i].born_now = false;
        }

        // Render: one 96x96 patch per cell, pasted at the rounded position.
        std::vector<RenderedPatch> patches(alive.size());
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t i = 0; i < n_alive; ++i) {
            const auto& track = result.tracks[alive[i].track];
            const auto& rec = track.frames.back();
            const int cx = static_cast<int>(std::lround(rec.position.x()));
            const int cy = static_cast<int>(std::lround(rec.position.y()));
            auto& p = patches[i];
            p.origin_x = cx - kPatchSize / 2;
            p.origin_y = cy - kPatchSize / 2;
            const Vec2 local(kPatchSize / 2 + rec.position.x() - cx, kPatchSize / 2 + rec.position.y() - cy);
            p.mask = rasterize(rec.shape, kPatchSize, kPatchSize, local, rec.orientation, 1);
            Rng texture_rng = substream(seed, StreamTag::texture, {track.id, static_cast<std::uint64_t>(f)});
            p.conditioning = make_conditioning(p.mask, rec.stage, rec.intensity, texture_rng);
            p.texture = inputs.texture->provide({track.id, f}, p.conditioning);
        }

        FrameState state{LabelImage(width, height, 0), {}};
        ImageF clean(width, height, 0.0);
        ImageF owner_distance(width, height, std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < alive.size(); ++i) {
            const auto& track = result.tracks[alive[i].track];
            const auto& rec = track.frames.back();
            const auto& p = patches[i];
            if (on_conditioning) on_conditioning({track.id, f}, p.conditioning);
            for (int py = 0; py < kPatchSize; ++py)
                for (int px = 0; px < kPatchSize; ++px) {
                    const int x = p.origin_x + px, y = p.origin_y + py;
                    if (!clean.contains(x, y)) continue;
                    clean(x, y) = std::max(clean(x, y), p.texture.image(px, py));
                    if (!p.mask(px, py)) continue;
                    // Overlaps go to the nearest cell center; ties keep the lower id.
                    const double d2 = (Vec2(x, y) - rec.position).squaredNorm();
                    if (d2 < owner_distance(x, y)) {
                        owner_distance(x, y) = d2;
                        state.labels(x, y) = static_cast<std::uint16_t>(track.id);
                    }
                }
        }
        std::vector<int> area(next_id, 0);
        for (auto v : state.labels.pixels())
            if (v) ++area[v];
        for (const auto& c : alive) {
            const auto& track = result.tracks[c.track];
            state.instances.push_back({track.id, area[track.id], track.frames.back().stage});
        }
        std::sort(state.instances.begin(), state.instances.end(),
                  [](const InstanceInfo& a, const InstanceInfo& b) { return a.id < b.id; });

        Rng acq_rng = substream(seed, StreamTag::acquisition, {static_cast<std::uint64_t>(f)});
        result.raw.push_back(apply_acquisition(clean, config.acquisition, acq_rng));
        result.clean.push_back(std::move(clean));
        result.frames.push_back(std::move(state));
    }
    return result;
}

SimulationResult simulate(const SimConfig& config) {
    config.validate();
    return simulate(config, resolve_inputs(config));
}

}  // namespace cellsynth
