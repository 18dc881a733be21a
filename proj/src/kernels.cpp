#include "cellsynth/kernels.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "cellsynth/rng.hpp"

namespace cellsynth::kernels {

std::vector<double> gaussian_kernel_1d(double sigma) {
    if (sigma <= 0.0) return {1.0};
    const int radius = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += k[i + radius];
    }
    for (auto& v : k) v /= sum;
    return k;
}

int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

Vec2 pair_push(const Body& a, const Body& b, const RepulsionLaw& law) {
    const Vec2 delta = a.position - b.position;
    const double d = std::hypot(delta.x(), delta.y());
    const double s_major = a.r_major + b.r_major;
    const double s_minor = a.r_minor + b.r_minor;

    double magnitude = 0.0;
    if (law.projection) {
        const double hard = law.hard_core_fraction * s_minor;
        if (d < hard) magnitude = 0.5 * (hard - d) + 1e-6;
    } else {
        if (d < s_major) {
            const double u = 1.0 - d / s_major;
            magnitude += law.gain * u * u;
        }
        if (d < s_minor) {
            const double u = 1.0 - d / s_minor;
            magnitude += law.core_gain * u * u;
        }
    }
    if (magnitude == 0.0) return Vec2::Zero();

    if (d > 0.0) return (magnitude / d) * delta;

    // Coincident centers: a seeded direction shared by the pair, signed by id order.
    const auto lo = std::min(a.id, b.id);
    const auto hi = std::max(a.id, b.id);
    const double angle = 2.0 * std::numbers::pi *
                         static_cast<double>(derive_seed(law.coincidence_seed, StreamTag::repulsion, {lo, hi}) >> 11) *
                         0x1.0p-53;
    const Vec2 u(std::cos(angle), std::sin(angle));
    return a.id < b.id ? Vec2(magnitude * u) : Vec2(-magnitude * u);
}

namespace {

void blur_rows(const ImageF& in, ImageF& out, const std::vector<double>& k, int y) {
    const int radius = static_cast<int>(k.size() / 2);
    const int w = in.width();
    for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int t = -radius; t <= radius; ++t) acc += k[t + radius] * in(reflect_index(x + t, w), y);
        out(x, y) = acc;
    }
}

void blur_cols(const ImageF& in, ImageF& out, const std::vector<double>& k, int y) {
    const int radius = static_cast<int>(k.size() / 2);
    const int w = in.width();
    const int h = in.height();
    for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int t = -radius; t <= radius; ++t) acc += k[t + radius] * in(x, reflect_index(y + t, h));
        out(x, y) = acc;
    }
}

// Noise streams are keyed per row so the parallel loop reproduces the serial one.
constexpr std::uint64_t kPoissonKind = 1;
constexpr std::uint64_t kGaussianKind = 2;

void poisson_row(ImageF& image, double photon_scale, std::uint64_t seed, int y) {
    Rng rng = substream(seed, StreamTag::noise_row, {kPoissonKind, static_cast<std::uint64_t>(y)});
    for (auto& v : image.row(y)) {
        const double lambda = v * photon_scale;
        if (lambda <= 0.0) {
            v = 0.0;
            continue;
        }
        std::poisson_distribution<long long> dist(lambda);
        v = static_cast<double>(dist(rng)) / photon_scale;
    }
}

void gaussian_row(ImageF& image, double sigma, std::uint64_t seed, int y) {
    Rng rng = substream(seed, StreamTag::noise_row, {kGaussianKind, static_cast<std::uint64_t>(y)});
    std::normal_distribution<double> dist(0.0, sigma);
    for (auto& v : image.row(y)) v += dist(rng);
}

}  // namespace

namespace serial {

void gaussian_blur(const ImageF& in, ImageF& out, double sigma) {
    const auto k = gaussian_kernel_1d(sigma);
    ImageF tmp(in.width(), in.height());
    out = ImageF(in.width(), in.height());
    for (int y = 0; y < in.height(); ++y) blur_rows(in, tmp, k, y);
    for (int y = 0; y < in.height(); ++y) blur_cols(tmp, out, k, y);
}

void add_poisson_noise(ImageF& image, double photon_scale, std::uint64_t seed) {
    for (int y = 0; y < image.height(); ++y) poisson_row(image, photon_scale, seed, y);
}

void add_gaussian_noise(ImageF& image, double sigma, std::uint64_t seed) {
    for (int y = 0; y < image.height(); ++y) gaussian_row(image, sigma, seed, y);
}

void repulsion_corrections(std::span<const Body> bodies, const RepulsionLaw& law, std::span<Vec2> out) {
    for (auto& v : out) v.setZero();
    const std::size_t n = bodies.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const Vec2 push = pair_push(bodies[i], bodies[j], law);
            out[i] += push;
            out[j] -= push;
        }
    }
}

}  // namespace serial

namespace omp {

void gaussian_blur(const ImageF& in, ImageF& out, double sigma) {
    const auto k = gaussian_kernel_1d(sigma);
    ImageF tmp(in.width(), in.height());
    out = ImageF(in.width(), in.height());
    const int h = in.height();
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) blur_rows(in, tmp, k, y);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) blur_cols(tmp, out, k, y);
}

void add_poisson_noise(ImageF& image, double photon_scale, std::uint64_t seed) {
    const int h = image.height();
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) poisson_row(image, photon_scale, seed, y);
}

void add_gaussian_noise(ImageF& image, double sigma, std::uint64_t seed) {
    const int h = image.height();
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) gaussian_row(image, sigma, seed, y);
}

void repulsion_corrections(std::span<const Body> bodies, const RepulsionLaw& law, std::span<Vec2> out) {
    const auto n = static_cast<std::ptrdiff_t>(bodies.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        Vec2 acc = Vec2::Zero();
        // Partner order matches the serial pair loop, so sums agree bitwise.
        for (std::ptrdiff_t j = 0; j < n; ++j) {
            if (j == i) continue;
            if (j < i)
                acc -= pair_push(bodies[j], bodies[i], law);
            else
                acc += pair_push(bodies[i], bodies[j], law);
        }
        out[i] = acc;
    }
}

}  // namespace omp

}  // namespace cellsynth::kernels
