#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "cellsynth/rng.hpp"
#include "cellsynth/segmentation.hpp"

using namespace cellsynth;
namespace seg = cellsynth::segmentation;

namespace {

ImageF disks(int w, int h, std::initializer_list<std::tuple<double, double, double>> list, double value = 0.6) {
    ImageF img(w, h, 0.0);
    for (auto [cx, cy, r] : list)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) img(x, y) = value;
    return img;
}

}  // namespace

TEST_CASE("otsu splits a bimodal image between the modes") {
    ImageF img(40, 40, 0.1);
    Rng rng(1);
    std::normal_distribution<double> n(0.0, 0.01);
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x) img(x, y) = (x < 15 ? 0.7 : 0.1) + n(rng);
    const double t = seg::otsu_threshold(img);
    CHECK(t > 0.2);
    CHECK(t < 0.6);
    const auto fg = seg::threshold(img, t);
    int count = 0;
    for (auto v : fg.pixels()) count += v;
    CHECK(count == 15 * 40);
}

TEST_CASE("distance transform matches brute force") {
    Rng rng(2);
    std::bernoulli_distribution b(0.8);
    BinaryImage m(23, 17, 0);
    for (auto& v : m.pixels()) v = b(rng);
    const auto dt = seg::distance_transform(m);
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
            double best = std::numeric_limits<double>::infinity();
            if (m(x, y)) {
                // Background includes the ring of pixels just outside the image.
                for (int by = -1; by <= m.height(); ++by)
                    for (int bx = -1; bx <= m.width(); ++bx) {
                        if (m.contains(bx, by) && m(bx, by)) continue;
                        best = std::min(best, std::hypot(double(bx - x), double(by - y)));
                    }
            } else {
                best = 0.0;
            }
            CHECK(dt(x, y) == doctest::Approx(best).epsilon(1e-12));
        }
}

TEST_CASE("h-maxima ignore shallow bumps") {
    ImageF img(30, 10, 0.0);
    BinaryImage dom(30, 10, 1);
    for (int x = 0; x < 30; ++x)
        for (int y = 0; y < 10; ++y) img(x, y) = 5.0 - std::abs(x - 7) * 0.5 + (x == 20 ? 1.0 : 0.0);
    // Peak at x=7 (5.0) and a bump at x=20 rising 1.0 above its neighbours.
    const auto deep = seg::h_maxima(img, dom, 2.0);
    std::set<int> labels(deep.pixels().begin(), deep.pixels().end());
    labels.erase(0);
    CHECK(labels.size() == 1);
    CHECK(deep(7, 5) != 0);
    const auto shallow = seg::h_maxima(img, dom, 0.5);
    CHECK(shallow(20, 5) != 0);
    CHECK(shallow(20, 5) != shallow(7, 5));
}

TEST_CASE("touching nuclei are split by the watershed") {
    const auto img = disks(96, 64, {{30, 32, 14}, {55, 32, 14}});
    const auto labels = seg::segment_nuclei(img);
    CHECK(labels(30, 32) != 0);
    CHECK(labels(55, 32) != 0);
    CHECK(labels(30, 32) != labels(55, 32));
    CHECK(labels(5, 5) == 0);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 96; ++x) CHECK((labels(x, y) != 0) == (img(x, y) > 0));
}

TEST_CASE("resampling keeps constants and the identity") {
    const ImageF c(50, 70, 0.25);
    const auto r = seg::resample(c, 96, 96);
    CHECK(r.width() == 96);
    for (double v : r.pixels()) CHECK(v == doctest::Approx(0.25));
    const auto img = disks(20, 20, {{10, 10, 5}});
    CHECK(seg::resample(img, 20, 20) == img);
}
