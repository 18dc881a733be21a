#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cellsynth/config.hpp"
#include "cellsynth/population_sim.hpp"
#include "test_util.hpp"

using namespace cellsynth;

namespace {

SimConfig small_config(std::uint64_t seed) {
    SimConfig c;
    c.n_initial_cells = 4;
    c.n_frames = 60;
    c.width = c.height = 160;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("motion steps have the configured variances") {
    MotionParams p;
    Rng rng(1);
    const int n = 40000;
    double sx = 0, sy = 0, sr = 0;
    for (int i = 0; i < n; ++i) {
        Vec2 pos(500, 500);
        double orient = 0.0;
        const auto s = step_motion(pos, orient, p, 1000, 1000, rng);
        sx += s.displacement.x() * s.displacement.x();
        sy += s.displacement.y() * s.displacement.y();
        sr += s.rotation * s.rotation;
        CHECK(orient == s.rotation);
    }
    CHECK(sx / n == doctest::Approx(2.0).epsilon(0.04));
    CHECK(sy / n == doctest::Approx(2.0).epsilon(0.04));
    CHECK(sr / n == doctest::Approx(1.0).epsilon(0.04));

    p.rotation_unit = AngleUnit::degrees;
    Rng a(2), b(2);
    Vec2 pos(5, 5);
    double orient = 0.0;
    const auto deg = step_motion(pos, orient, p, 100, 100, a);
    // One fresh distribution per draw, as in the sampler.
    std::normal_distribution<double>(0.0, std::sqrt(2.0))(b);
    std::normal_distribution<double>(0.0, std::sqrt(2.0))(b);
    const double rot = std::normal_distribution<double>(0.0, 1.0)(b);
    CHECK(deg.rotation == doctest::Approx(rot * std::numbers::pi / 180.0));

    Vec2 edge(0.2, 99.9);
    MotionParams wild{1e6, 0.0, AngleUnit::radians};
    step_motion(edge, orient, wild, 100, 100, a);
    CHECK(edge.x() >= 0.0);
    CHECK(edge.x() <= 99.0);
    CHECK(edge.y() >= 0.0);
    CHECK(edge.y() <= 99.0);
}

TEST_CASE("daughters sit across the mother's minor axis") {
    // Orientation 0: major axis along +y, so daughters separate along x.
    const auto [a, b] = division_positions(Vec2(50, 60), 0.0, 4.0, 200, 200);
    CHECK(a.x() == doctest::Approx(54.0));
    CHECK(b.x() == doctest::Approx(46.0));
    CHECK(a.y() == doctest::Approx(60.0));
    const auto [c, d] = division_positions(Vec2(50, 60), std::numbers::pi / 2, 4.0, 200, 200);
    CHECK(c.y() == doctest::Approx(64.0));
    CHECK(d.x() == doctest::Approx(50.0));
}

TEST_CASE("intensity draws follow the stage table") {
    const auto table = StageIntensityTable::placeholder();
    Rng rng(3);
    const int n = 10000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double v = assign_intensity(Stage::metaphase, 0.02, table, rng);
        s += v;
        s2 += v * v;
    }
    const double mean = s / n;
    const double sd = std::sqrt((s2 - n * mean * mean) / (n - 1));
    CHECK(mean == doctest::Approx(table.mean[3] + 0.02).epsilon(0.01));
    CHECK(sd == doctest::Approx(table.std[3]).epsilon(0.05));
    CHECK(assign_intensity(Stage::metaphase, 5.0, table, rng) == 1.0);
    CHECK(assign_intensity(Stage::metaphase, -5.0, table, rng) == 0.0);
}

TEST_CASE("repulsion separates a pile of cells") {
    Rng rng(4);
    std::uniform_real_distribution<double> u(90, 110);
    std::vector<kernels::Body> bodies(20);
    for (std::size_t i = 0; i < bodies.size(); ++i)
        bodies[i] = {Vec2(u(rng), u(rng)), 11.0, 8.0, static_cast<std::uint32_t>(i + 1)};
    bodies[1].position = bodies[0].position;  // coincident pair
    const auto start = bodies;
    const auto r = resolve_repulsion(bodies, RepulsionParams{}, 200, 200, 17);
    CHECK(r.unresolved_pairs == 0);
    CHECK(r.max_pair_imbalance == 0.0);
    for (std::size_t i = 0; i < bodies.size(); ++i) {
        CHECK((start[i].position + r.corrections[i] - bodies[i].position).norm() < 1e-9);
        for (std::size_t j = i + 1; j < bodies.size(); ++j)
            CHECK((bodies[i].position - bodies[j].position).norm() >= 0.5 * 16.0);
    }
}

TEST_CASE("simulation ground truth is internally consistent") {
    const auto cfg = small_config(5);
    const auto sim = simulate(cfg);
    REQUIRE(sim.frames.size() == 60);
    CHECK(sim.unresolved_pairs == 0);
    CHECK(sim.divisions >= 1);

    for (const auto& t : sim.tracks) {
        REQUIRE(!t.frames.empty());
        for (std::size_t k = 0; k < t.frames.size(); ++k) {
            const auto& rec = t.frames[k];
            CHECK(rec.frame == t.begin() + static_cast<int>(k));
            CHECK(rec.stage == t.timeline->labels[rec.frame]);
            CHECK(rec.position.x() >= 0.0);
            CHECK(rec.position.x() <= cfg.width - 1.0);
            CHECK(rec.intensity >= 0.0);
            CHECK(rec.intensity <= 1.0);
        }
        if (t.parent_id == 0) {
            CHECK(t.begin() == 0);
            continue;
        }
        const auto& mother = sim.track(t.parent_id);
        CHECK(mother.end() + 1 == t.begin());
        CHECK(mother.frames.back().stage == Stage::metaphase);
        CHECK(t.frames.front().stage == Stage::anaphase);
        CHECK(t.lineage_offset == mother.lineage_offset);
    }

    // Sister cells share the shape of the anaphase run they are born into.
    for (const auto& t : sim.tracks) {
        if (t.parent_id == 0 || t.id == sim.tracks.back().id) continue;
        const auto& sister = sim.track(t.id + 1);
        if (sister.parent_id != t.parent_id) continue;
        for (int f = t.begin(); f < std::min({t.own_shape_from, t.end() + 1, sister.end() + 1}); ++f)
            CHECK(t.frames[f - t.begin()].shape.coords == sister.frames[f - sister.begin()].shape.coords);
    }

    for (std::size_t f = 0; f < sim.frames.size(); ++f) {
        const auto& fs = sim.frames[f];
        for (const auto& inst : fs.instances) {
            CHECK(inst.area > 0);
            const auto& t = sim.track(inst.id);
            CHECK(t.begin() <= static_cast<int>(f));
            CHECK(t.end() >= static_cast<int>(f));
        }
        for (double v : sim.clean[f].pixels()) CHECK((v >= 0.0 && v <= 1.0));
    }
}

TEST_CASE("simulation is reproducible from config and seed") {
    const auto a = simulate(small_config(8));
    const auto b = simulate(small_config(8));
    const auto c = simulate(small_config(9));
    REQUIRE(a.raw.size() == b.raw.size());
    for (std::size_t f = 0; f < a.raw.size(); ++f) {
        CHECK(a.raw[f] == b.raw[f]);
        CHECK(a.frames[f].labels == b.frames[f].labels);
    }
    CHECK_FALSE(a.raw.back() == c.raw.back());
}

TEST_CASE("conditioning sink sees every live cell") {
    auto cfg = small_config(10);
    cfg.n_frames = 5;
    std::vector<std::pair<PatchKey, Stage>> seen;
    const auto sim = simulate(cfg, resolve_inputs(cfg), [&](const PatchKey& key, const ConditioningPatch& cond) {
        seen.emplace_back(key, cond.stage_label());
    });
    int live = 0;
    for (const auto& f : sim.frames) live += static_cast<int>(f.instances.size());
    CHECK(static_cast<int>(seen.size()) == live);
    for (const auto& [key, stage] : seen) {
        const auto& t = sim.track(key.cell);
        CHECK(t.frames[key.frame - t.begin()].stage == stage);
    }
}

TEST_CASE("config JSON round trip and validation") {
    SimConfig c;
    c.n_frames = 12;
    c.motion.rotation_unit = AngleUnit::degrees;
    c.initial_stage = Stage::prophase;
    c.n_e = 3;
    c.repulsion.core_gain = 4.0;
    const auto back = config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));

    CHECK_THROWS_AS(config_from_json({{"frames", 3}}), ValidationError);
    CHECK_THROWS_AS(config_from_json({{"n_frames", 0}}), ValidationError);
    CHECK_THROWS_AS(config_from_json({{"n_frames", "many"}}), ValidationError);
    CHECK_THROWS_AS(config_from_json({{"stage", {{"initial_stage", 7}}}}), ValidationError);
    CHECK_THROWS_AS(config_from_json({{"texture", {{"provider", "external"}}}}), ValidationError);

    const auto dir = testutil::scratch("config_paths");
    testutil::write_file(dir / "cfg.json", R"({"stage": {"model": "models/t.json"}})");
    const auto loaded = load_config(dir / "cfg.json");
    CHECK(std::filesystem::path(loaded.stage_model_path) == (dir / "models/t.json").lexically_normal());
}
