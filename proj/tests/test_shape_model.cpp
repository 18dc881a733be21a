#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cellsynth/defaults.hpp"
#include "cellsynth/shape_model.hpp"
#include "test_util.hpp"

using namespace cellsynth;

namespace {

std::vector<LandmarkShape> random_shapes(int n, Rng& rng) {
    std::normal_distribution<double> noise(0.0, 1.5);
    std::vector<LandmarkShape> shapes(n);
    for (auto& s : shapes)
        for (int k = 0; k < kNumLandmarks; ++k) {
            const double a = k * kLandmarkStepDeg * std::numbers::pi / 180.0;
            s.set_point(k, Vec2((8 + noise(rng)) * std::cos(a), (12 + noise(rng)) * std::sin(a)));
        }
    return shapes;
}

// Filled ellipse, semi-axes a (major) and b, major axis at angle `phi` from +x.
BinaryImage ellipse_mask(int size, Vec2 c, double a, double b, double phi) {
    BinaryImage m(size, size, 0);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const Vec2 d = Vec2(x, y) - c;
            const double u = d.x() * std::cos(phi) + d.y() * std::sin(phi);
            const double v = -d.x() * std::sin(phi) + d.y() * std::cos(phi);
            m(x, y) = (u * u) / (a * a) + (v * v) / (b * b) <= 1.0;
        }
    return m;
}

// Point-in-polygon by crossing number.
bool inside(const LandmarkShape& poly, double x, double y) {
    bool in = false;
    for (int i = 0, j = kNumLandmarks - 1; i < kNumLandmarks; j = i++) {
        const Vec2 pi = poly.point(i), pj = poly.point(j);
        if ((pi.y() > y) != (pj.y() > y) && x < (pj.x() - pi.x()) * (y - pi.y()) / (pj.y() - pi.y()) + pi.x())
            in = !in;
    }
    return in;
}

}  // namespace

TEST_CASE("covariance matches a double-loop oracle") {
    Rng rng(1);
    const auto shapes = random_shapes(7, rng);
    const Eigen::MatrixXd cov = shape_covariance(shapes);
    std::vector<double> mean(kShapeDim, 0.0);
    for (const auto& s : shapes)
        for (int i = 0; i < kShapeDim; ++i) mean[i] += s.coords[i] / shapes.size();
    double err = 0.0;
    for (int i = 0; i < kShapeDim; ++i)
        for (int j = 0; j < kShapeDim; ++j) {
            double acc = 0.0;
            for (const auto& s : shapes) acc += (s.coords[i] - mean[i]) * (s.coords[j] - mean[j]);
            acc /= shapes.size() - 1;
            err += (acc - cov(i, j)) * (acc - cov(i, j));
        }
    CHECK(std::sqrt(err) < 1e-9);
}

TEST_CASE("two-sample model has one component along the difference") {
    Rng rng(2);
    const auto shapes = random_shapes(2, rng);
    const auto model = build_shape_model(shapes, Stage::prophase);
    const ShapeVector d = shapes[0].coords - shapes[1].coords;
    REQUIRE(model.positive_components() == 1);
    CHECK(model.eigenvalues[0] == doctest::Approx(d.squaredNorm() / 2.0).epsilon(1e-10));
    CHECK(std::abs(std::abs(model.eigenvectors.col(0).dot(d.normalized())) - 1.0) < 1e-10);
    CHECK((model.mean - 0.5 * (shapes[0].coords + shapes[1].coords)).norm() < 1e-12);
}

TEST_CASE("model reconstructs its training shapes") {
    Rng rng(3);
    const auto shapes = random_shapes(5, rng);
    const auto model = build_shape_model(shapes, Stage::interphase);
    CHECK(model.positive_components() == 4);
    const int k = model.positive_components();
    const Eigen::MatrixXd e = model.eigenvectors.leftCols(k);
    CHECK((e.transpose() * e - Eigen::MatrixXd::Identity(k, k)).norm() < 1e-10);
    for (int i = 1; i < model.eigenvalues.size(); ++i) CHECK(model.eigenvalues[i] <= model.eigenvalues[i - 1]);
    for (const auto& s : shapes) {
        const Eigen::VectorXd b = e.transpose() * (s.coords - model.mean);
        CHECK((model.mean + e * b - s.coords).norm() < 1e-6);
    }
}

TEST_CASE("sample_shape follows the linear model") {
    Rng rng(4);
    const auto model = build_shape_model(random_shapes(6, rng), Stage::metaphase);
    ShapeSampleParams p;
    p.b = Eigen::VectorXd::Zero(model.positive_components());
    p.epsilon = 1.0;
    CHECK((sample_shape(model, p, model.positive_components()).coords - model.mean).norm() == 0.0);
    p.b[1] = 2.0;
    const ShapeVector expect = model.mean + 2.0 * std::sqrt(model.eigenvalues[1]) * model.eigenvectors.col(1);
    CHECK((sample_shape(model, p, 2).coords - expect).norm() < 1e-12);
    CHECK((sample_shape(model, p, 1).coords - model.mean).norm() == 0.0);
    CHECK_THROWS_AS(sample_shape(model, p, model.positive_components() + 1), ValidationError);
    CHECK(effective_components(model, 1000) == model.positive_components());
}

TEST_CASE("drawn coefficients have the configured spread") {
    Rng rng(5);
    const auto model = build_shape_model(random_shapes(6, rng), Stage::metaphase);
    const int n = 20000;
    double se = 0.0, sb = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto p = draw_shape_params(model, std::sqrt(0.1), rng);
        se += p.epsilon * p.epsilon;
        sb += p.b[0] * p.b[0];
    }
    CHECK(se / n == doctest::Approx(0.1).epsilon(0.05));
    CHECK(sb / n == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("landmarks of an ellipse follow the analytic radius") {
    const double a = 30.0, b = 18.0;
    for (double phi : {0.0, 0.7, 2.2}) {
        const auto mask = ellipse_mask(96, Vec2(47.3, 48.6), a, b, phi);
        const auto shape = extract_landmarks(mask);
        CHECK(shape.centroid().norm() < 1e-9);
        for (int k = 0; k < kNumLandmarks; ++k) {
            const double t = k * kLandmarkStepDeg * std::numbers::pi / 180.0;
            // Canonical frame: major axis along y.
            const double r = 1.0 / std::sqrt(std::pow(std::cos(t) / b, 2) + std::pow(std::sin(t) / a, 2));
            CHECK(std::abs(shape.point(k).norm() - r) < 1.2);
        }
    }
}

TEST_CASE("polygon area and axes of a sampled ellipse") {
    std::vector<double> r(kNumLandmarks, 10.0);
    const auto circle = LandmarkShape::from_radii(r);
    const double oracle = 0.5 * kNumLandmarks * 100.0 * std::sin(2.0 * std::numbers::pi / kNumLandmarks);
    CHECK(polygon_area(circle) == doctest::Approx(oracle).epsilon(1e-12));

    for (int k = 0; k < kNumLandmarks; ++k) {
        const double t = k * kLandmarkStepDeg * std::numbers::pi / 180.0;
        r[k] = 1.0 / std::sqrt(std::pow(std::cos(t) / 6.0, 2) + std::pow(std::sin(t) / 15.0, 2));
    }
    const auto axes = shape_axes(LandmarkShape::from_radii(r));
    CHECK(axes.major == doctest::Approx(15.0).epsilon(0.01));
    CHECK(axes.minor == doctest::Approx(6.0).epsilon(0.01));
    CHECK(std::abs(std::cos(axes.angle)) < 1e-6);
}

TEST_CASE("rasterization matches a crossing-number oracle") {
    Rng rng(6);
    const auto shapes = random_shapes(3, rng);
    for (const auto& s : shapes) {
        const Vec2 pos(31.37, 29.81);
        const double rot = 0.4;
        const auto img = rasterize(s, 64, 64, pos, rot, 3);
        const auto placed = place_shape(s, pos, rot);
        int mismatches = 0;
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x) mismatches += (img(x, y) == 3) != inside(placed, x, y);
        CHECK(mismatches == 0);
    }
}

TEST_CASE("transition kernel is the normal density") {
    CHECK(transition_kernel(3.0, 3.0, 2.0) == doctest::Approx(1.0 / (2.0 * std::sqrt(2.0 * std::numbers::pi))));
    CHECK(transition_kernel(5.0, 3.0, 2.0) ==
          doctest::Approx(std::exp(-0.5) / (2.0 * std::sqrt(2.0 * std::numbers::pi))));
}

TEST_CASE("transition weights are normalized and symmetric at a midpoint") {
    StageSequence s(10, Stage::interphase);
    s.insert(s.end(), 10, Stage::prophase);
    const auto at = transition_weights(s, 10);
    CHECK(at.w[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(at.w[1] == doctest::Approx(0.5).epsilon(1e-9));
    const auto early = transition_weights(s, 0);
    CHECK(early.w[0] > 0.8);
    const auto single = transition_weights(StageSequence(5, Stage::anaphase), 2);
    CHECK(single.w[4] == 1.0);
    CHECK_THROWS_AS(transition_weights(s, 20), ValidationError);
}

TEST_CASE("blend drops stages without a model") {
    Rng rng(8);
    ShapeModelSet models;
    models[0] = build_shape_model(random_shapes(4, rng), Stage::interphase);
    StageSequence s(10, Stage::interphase);
    s.insert(s.end(), 10, Stage::prophase);
    std::vector<ShapeSampleParams> params(2);
    params[0].b = Eigen::VectorXd::Zero(3);
    const auto shape = blend_runs(models, transition_weights(s, 10), params);
    CHECK((shape.coords - models[0]->mean).norm() < 1e-12);
}

TEST_CASE("shape model JSON round trip is exact") {
    const auto dir = testutil::scratch("ssm_json");
    const auto& models = default_shape_models();
    save_shape_models(models, dir / "m.json");
    const auto back = load_shape_models(dir / "m.json");
    for (int s = 0; s < kNumStages; ++s) {
        REQUIRE(back[s].has_value() == models[s].has_value());
        if (!models[s]) continue;
        CHECK(back[s]->mean == models[s]->mean);
        CHECK(back[s]->eigenvalues == models[s]->eigenvalues);
        CHECK(back[s]->eigenvectors == models[s]->eigenvectors);
        CHECK(back[s]->n_train == models[s]->n_train);
    }
    testutil::write_file(dir / "bad.json", "{\"format\":\"other\"}");
    CHECK_THROWS_AS(load_shape_models(dir / "bad.json"), ValidationError);
}
