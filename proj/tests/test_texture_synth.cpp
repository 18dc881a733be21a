#include <doctest.h>

#include <cmath>

#include "cellsynth/defaults.hpp"
#include "cellsynth/log.hpp"
#include "cellsynth/png_io.hpp"
#include "cellsynth/shape_model.hpp"
#include "cellsynth/texture_synth.hpp"
#include "test_util.hpp"

using namespace cellsynth;

namespace {

LabelImage disk_mask(double r) {
    LabelImage m(kPatchSize, kPatchSize, 0);
    for (int y = 0; y < kPatchSize; ++y)
        for (int x = 0; x < kPatchSize; ++x)
            if (std::hypot(x - 47.5, y - 47.5) <= r) m(x, y) = 1;
    return m;
}

double foreground_mean(const ImageF& img, const LabelImage& mask) {
    double s = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < img.size(); ++i)
        if (mask.pixels()[i]) s += img.pixels()[i], ++n;
    return s / n;
}

}  // namespace

TEST_CASE("conditioning channels follow the contract") {
    const auto mask = disk_mask(12);
    Rng rng(1);
    const auto c = make_conditioning(mask, Stage::metaphase, 0.4, rng);
    double noise_sum = 0.0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const bool fg = mask.pixels()[i] != 0;
        CHECK(c.stage.pixels()[i] == (fg ? 4.0 : 0.0));
        CHECK(c.intensity.pixels()[i] == (fg ? 0.4 : 0.0));
        CHECK(c.noise.pixels()[i] >= 0.0);
        CHECK(c.noise.pixels()[i] < 1.0);
        noise_sum += c.noise.pixels()[i];
    }
    CHECK(noise_sum / mask.size() == doctest::Approx(0.5).epsilon(0.02));
    CHECK(c.stage_label() == Stage::metaphase);
    CHECK(c.target_intensity() == doctest::Approx(0.4));
    CHECK(c.support() == [&] {
        BinaryImage b(kPatchSize, kPatchSize, 0);
        for (std::size_t i = 0; i < mask.size(); ++i) b.pixels()[i] = mask.pixels()[i] != 0;
        return b;
    }());

    CHECK_THROWS_AS(make_conditioning(LabelImage(kPatchSize, kPatchSize, 0), Stage::metaphase, 0.4, rng), ValidationError);
    CHECK_THROWS_AS(make_conditioning(LabelImage(10, 10, 1), Stage::metaphase, 0.4, rng), ValidationError);
    CHECK_THROWS_AS(make_conditioning(mask, Stage::metaphase, 1.5, rng), ValidationError);
}

TEST_CASE("procedural texture hits the mean and leaves background dark") {
    const auto& models = default_shape_models();
    Rng rng(2);
    for (int s = 0; s < kNumStages; ++s) {
        const auto& m = *models[s];
        ShapeSampleParams p{Eigen::VectorXd::Zero(m.positive_components()), 0.0};
        const auto mask = rasterize(sample_shape(m, p, 0), kPatchSize, kPatchSize, Vec2(48, 48), 0.3);
        for (double target : {0.1, 0.45, 0.9}) {
            const auto c = make_conditioning(mask, stage_at(s), target, rng);
            const auto t = procedural_texture(c, {});
            CHECK(t.provenance == Provenance::procedural);
            CHECK(std::abs(foreground_mean(t.image, mask) - target) < 1e-6);
            double bg_max = 0.0, fg_max = 0.0;
            for (std::size_t i = 0; i < mask.size(); ++i) {
                double& m = mask.pixels()[i] ? fg_max : bg_max;
                m = std::max(m, t.image.pixels()[i]);
            }
            CHECK(bg_max == 0.0);
            CHECK(fg_max <= 1.0);
            CHECK(procedural_texture(c, {}).image == t.image);
        }
    }
}

TEST_CASE("procedural texture scales with intensity and stage changes its spread") {
    const auto mask = disk_mask(20);
    Rng rng(5);
    auto c = make_conditioning(mask, Stage::interphase, 0.2, rng);
    const auto base = procedural_texture(c, {});
    for (auto& v : c.intensity.pixels()) v *= 2.0;
    CHECK(foreground_mean(procedural_texture(c, {}).image, mask) ==
          doctest::Approx(2.0 * foreground_mean(base.image, mask)).epsilon(0.05));
    for (auto& v : c.intensity.pixels()) v = 0.0;
    const auto dark = procedural_texture(c, {});
    for (double v : dark.image.pixels()) CHECK(v == 0.0);

    // Same mask, intensity and noise; only the stage channel differs.
    auto spread = [&](Stage s) {
        auto k = c;
        for (std::size_t i = 0; i < mask.size(); ++i) {
            k.stage.pixels()[i] = mask.pixels()[i] ? to_int(s) : 0.0;
            k.intensity.pixels()[i] = mask.pixels()[i] ? 0.3 : 0.0;
        }
        const auto img = procedural_texture(k, {}).image;
        const double m = foreground_mean(img, mask);
        double v = 0.0;
        int n = 0;
        for (std::size_t i = 0; i < img.size(); ++i)
            if (mask.pixels()[i]) v += (img.pixels()[i] - m) * (img.pixels()[i] - m), ++n;
        return std::sqrt(v / n) / m;
    };
    const ProceduralTextureParams p;
    const double margin = 0.5 * (p.contrast[2] - p.contrast[0]);
    MESSAGE("relative std stage 1 " << spread(Stage::interphase) << ", stage 3 " << spread(Stage::prometaphase));
    CHECK(spread(Stage::prometaphase) - spread(Stage::interphase) >= margin);
}

TEST_CASE("intensity table and procedural params JSON") {
    const auto t = StageIntensityTable::placeholder();
    const auto back = intensity_table_from_json(to_json(t));
    CHECK(back.mean == t.mean);
    CHECK(back.std == t.std);
    auto j = to_json(t);
    j["std"][2] = -0.1;
    CHECK_THROWS_AS(intensity_table_from_json(j), ValidationError);

    ProceduralTextureParams p;
    p.contrast[3] = 0.9;
    CHECK(procedural_params_from_json(to_json(p)).contrast == p.contrast);
}

TEST_CASE("conditioning triplets round trip through 16-bit files") {
    const auto dir = testutil::scratch("conditioning");
    Rng rng(3);
    const auto c = make_conditioning(disk_mask(10), Stage::telophase, 0.37, rng);
    const PatchKey key{12, 3};
    CHECK(key.str() == "12_3");
    write_conditioning(c, dir, key.str());
    CHECK(io::read_png(dir / "12_3_stage.png").pixels(48, 48) == 6 * kStageCodeScale);
    const auto back = read_conditioning(dir, key.str());
    CHECK(back.stage == c.stage);
    for (std::size_t i = 0; i < c.noise.size(); ++i) {
        CHECK(std::abs(back.noise.pixels()[i] - c.noise.pixels()[i]) <= 0.5 / 65535 + 1e-12);
        CHECK(std::abs(back.intensity.pixels()[i] - c.intensity.pixels()[i]) <= 0.5 / 65535 + 1e-12);
    }
}

TEST_CASE("external patches are served by key with procedural fallback") {
    const auto dir = testutil::scratch("external");
    ImageF a(kPatchSize, kPatchSize, 0.0), b(kPatchSize, kPatchSize, 0.0);
    a(40, 40) = 0.5;
    b(10, 10) = 0.25;
    io::write_png16(dir / "a.png", io::to_u16(a));
    io::write_pfm(dir / "b.pfm", b);
    testutil::write_file(dir / "index.json", R"({"1_0": "a.png", "2_7": "b.pfm"})");

    const auto provider = load_external_patches(dir);
    CHECK(provider->size() == 2);
    Rng rng(4);
    const auto cond = make_conditioning(disk_mask(8), Stage::interphase, 0.3, rng);
    const auto pa = provider->provide({1, 0}, cond);
    CHECK(pa.provenance == Provenance::external);
    CHECK(pa.image(40, 40) == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(provider->provide({2, 7}, cond).image == b);

    std::vector<std::string> warnings;
    auto previous = log::set_warning_sink([&](const std::string& w) { warnings.push_back(w); });
    const auto fallback = provider->provide({3, 0}, cond);
    log::set_warning_sink(previous);
    CHECK(fallback.provenance == Provenance::procedural);
    CHECK(warnings.size() == 1);

    const auto empty_dir = testutil::scratch("external_empty");
    CHECK(load_external_patches(empty_dir)->size() == 0);
    CHECK_THROWS_AS(load_external_patches(empty_dir / "missing"), ValidationError);

    ImageF hot(kPatchSize, kPatchSize, 0.0);
    hot(0, 0) = 1.5;
    io::write_pfm(dir / "hot.pfm", hot);
    testutil::write_file(dir / "index.json", R"({"1_0": "hot.pfm"})");
    CHECK_THROWS_AS(load_external_patches(dir), ValidationError);

    io::write_pfm(dir / "small.pfm", ImageF(10, 10, 0.0));
    testutil::write_file(dir / "index.json", R"({"1_0": "small.pfm"})");
    CHECK_THROWS_AS(load_external_patches(dir), ValidationError);

    testutil::write_file(dir / "index.json", R"({"one": "a.png"})");
    CHECK_THROWS_AS(load_external_patches(dir), ValidationError);
}
