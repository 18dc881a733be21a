#include <doctest.h>

#include <cmath>

#include "cellsynth/acquisition.hpp"

using namespace cellsynth;

namespace {

struct Moments {
    double mean = 0.0;
    double var = 0.0;
};

Moments moments(const ImageF& img) {
    Moments m;
    for (double v : img.pixels()) m.mean += v;
    m.mean /= img.size();
    for (double v : img.pixels()) m.var += (v - m.mean) * (v - m.mean);
    m.var /= img.size() - 1;
    return m;
}

}  // namespace

TEST_CASE("disabled acquisition is the identity") {
    ImageF img(16, 16, 0.3);
    img(3, 4) = 0.9;
    Rng rng(1);
    CHECK(apply_acquisition(img, AcquisitionParams::disabled(), rng) == img);
}

TEST_CASE("dark offset adds and clamps") {
    auto p = AcquisitionParams::disabled();
    p.enable_dark = true;
    ImageF img(4, 4, 0.5);
    img(0, 0) = 0.995;
    Rng rng(2);
    const auto out = apply_acquisition(img, p, rng);
    CHECK(out(1, 1) == doctest::Approx(0.52));
    CHECK(out(0, 0) == 1.0);
}

TEST_CASE("blur of an impulse is the sampled 2D Gaussian") {
    auto p = AcquisitionParams::disabled();
    p.enable_blur = true;
    p.psf_sigma = 1.3;
    ImageF img(31, 31, 0.0);
    img(15, 15) = 1.0;
    Rng rng(3);
    const auto out = apply_acquisition(img, p, rng);
    const int r = static_cast<int>(std::ceil(4 * p.psf_sigma));
    double norm = 0.0;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) norm += std::exp(-(dx * dx + dy * dy) / (2 * p.psf_sigma * p.psf_sigma));
    for (int y = 0; y < 31; ++y)
        for (int x = 0; x < 31; ++x) {
            const int dx = x - 15, dy = y - 15;
            const double expect = std::abs(dx) <= r && std::abs(dy) <= r
                                      ? std::exp(-(dx * dx + dy * dy) / (2 * p.psf_sigma * p.psf_sigma)) / norm
                                      : 0.0;
            CHECK(out(x, y) == doctest::Approx(expect).epsilon(1e-12).scale(1e-15));
        }

    ImageF flat(20, 9, 0.4);
    const auto flat_out = apply_acquisition(flat, p, rng);
    for (double v : flat_out.pixels()) CHECK(v == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("shot noise has variance c / photon_scale") {
    auto p = AcquisitionParams::disabled();
    p.enable_poisson = true;
    ImageF img(512, 512, 0.5);
    Rng rng(4);
    const auto m = moments(apply_acquisition(img, p, rng));
    CHECK(m.mean == doctest::Approx(0.5).epsilon(0.002));
    CHECK(m.var == doctest::Approx(5e-4).epsilon(0.03));
}

TEST_CASE("read noise has the configured standard deviation") {
    auto p = AcquisitionParams::disabled();
    p.enable_gaussian = true;
    ImageF img(512, 512, 0.5);
    Rng rng(5);
    const auto m = moments(apply_acquisition(img, p, rng));
    CHECK(m.mean == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(std::sqrt(m.var) == doctest::Approx(0.001).epsilon(0.02));
}

TEST_CASE("full chain is deterministic and stays in range") {
    ImageF img(64, 48, 0.0);
    for (int y = 10; y < 30; ++y)
        for (int x = 10; x < 40; ++x) img(x, y) = 0.99;
    Rng a(6), b(6), c(7);
    const AcquisitionParams p;
    const auto ra = apply_acquisition(img, p, a);
    CHECK(ra == apply_acquisition(img, p, b));
    CHECK_FALSE(ra == apply_acquisition(img, p, c));
    for (double v : ra.pixels()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("psnr of a constant offset") {
    ImageF a(10, 10, 0.0), b(10, 10, 0.1);
    CHECK(psnr(a, b) == doctest::Approx(20.0));
    CHECK(std::isinf(psnr(a, a)));
    CHECK_THROWS_AS(psnr(a, ImageF(3, 3)), ValidationError);
}

TEST_CASE("acquisition parameters JSON") {
    AcquisitionParams p;
    p.psf_sigma = 2.5;
    p.enable_gaussian = false;
    const auto back = acquisition_from_json(to_json(p));
    CHECK(back.psf_sigma == 2.5);
    CHECK_FALSE(back.enable_gaussian);
    CHECK_THROWS_AS(acquisition_from_json({{"photon_scale", 0.0}}), ValidationError);
    CHECK_THROWS_AS(acquisition_from_json({{"psf_sigma", "wide"}}), ValidationError);
}
