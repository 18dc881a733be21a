#include "cellsynth/segmentation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>

namespace cellsynth::segmentation {

double otsu_threshold(const ImageF& image) {
    const auto [lo_it, hi_it] = std::minmax_element(image.pixels().begin(), image.pixels().end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi <= lo) return hi;
    constexpr int kBins = 256;
    std::array<double, kBins> hist{};
    for (double v : image.pixels()) {
        const int b = std::min(kBins - 1, static_cast<int>((v - lo) / (hi - lo) * kBins));
        hist[b] += 1.0;
    }
    const double total = static_cast<double>(image.size());
    double sum_all = 0.0;
    for (int b = 0; b < kBins; ++b) sum_all += b * hist[b];

    // Flat maxima (empty bins between the modes) resolve to the middle of the plateau.
    double w0 = 0.0, sum0 = 0.0, best = -1.0;
    int first = 0, last = 0;
    for (int b = 0; b < kBins; ++b) {
        w0 += hist[b];
        sum0 += b * hist[b];
        const double w1 = total - w0;
        if (w0 == 0.0 || w1 == 0.0) continue;
        const double m0 = sum0 / w0, m1 = (sum_all - sum0) / w1;
        const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if (between > best * (1.0 + 1e-12)) {
            best = between;
            first = last = b;
        } else if (between >= best * (1.0 - 1e-12)) {
            last = b;
        }
    }
    return lo + (0.5 * (first + last) + 1.0) * (hi - lo) / kBins;
}

BinaryImage threshold(const ImageF& image, double t) {
    BinaryImage out(image.width(), image.height(), 0);
    for (std::size_t i = 0; i < image.size(); ++i) out.pixels()[i] = image.pixels()[i] > t ? 1 : 0;
    return out;
}

namespace {

// 1D squared-distance transform of a sampled function (Felzenszwalb & Huttenlocher).
void dt_1d(const std::vector<double>& f, std::vector<double>& d) {
    const int n = static_cast<int>(f.size());
    std::vector<int> v(n);
    std::vector<double> z(n + 1);
    int k = 0;
    v[0] = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    for (int q = 1; q < n; ++q) {
        auto intersect = [&](int p) { return ((f[q] + q * q) - (f[p] + p * p)) / (2.0 * q - 2.0 * p); };
        double s = intersect(v[k]);
        while (s <= z[k]) {
            --k;
            s = intersect(v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        d[q] = (q - v[k]) * (q - v[k]) + f[v[k]];
    }
}

}  // namespace

ImageF distance_transform(const BinaryImage& mask) {
    // Pad by one pixel of background so the border acts as background.
    const int w = mask.width() + 2, h = mask.height() + 2;
    constexpr double kInf = 1e20;
    ImageF g(w, h, 0.0);
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) g(x + 1, y + 1) = mask(x, y) ? kInf : 0.0;

    std::vector<double> f, d;
    f.resize(h);
    d.resize(h);
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) f[y] = g(x, y);
        dt_1d(f, d);
        for (int y = 0; y < h; ++y) g(x, y) = d[y];
    }
    f.resize(w);
    d.resize(w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) f[x] = g(x, y);
        dt_1d(f, d);
        for (int x = 0; x < w; ++x) g(x, y) = d[x];
    }
    ImageF out(mask.width(), mask.height(), 0.0);
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) out(x, y) = std::sqrt(g(x + 1, y + 1));
    return out;
}

namespace {

constexpr std::array<std::pair<int, int>, 8> kNeighbours8{
    {{-1, -1}, {0, -1}, {1, -1}, {-1, 0}, {1, 0}, {-1, 1}, {0, 1}, {1, 1}}};

// Grayscale reconstruction by dilation of `marker` under `mask` (marker <= mask).
ImageF reconstruct(ImageF marker, const ImageF& mask, const BinaryImage& domain) {
    std::queue<std::pair<int, int>> fifo;
    for (int y = 0; y < marker.height(); ++y)
        for (int x = 0; x < marker.width(); ++x)
            if (domain(x, y)) fifo.emplace(x, y);
    while (!fifo.empty()) {
        auto [x, y] = fifo.front();
        fifo.pop();
        for (auto [dx, dy] : kNeighbours8) {
            const int nx = x + dx, ny = y + dy;
            if (!marker.contains(nx, ny) || !domain(nx, ny)) continue;
            const double candidate = std::min(marker(x, y), mask(nx, ny));
            if (candidate > marker(nx, ny)) {
                marker(nx, ny) = candidate;
                fifo.emplace(nx, ny);
            }
        }
    }
    return marker;
}

}  // namespace

LabelImage h_maxima(const ImageF& image, const BinaryImage& domain, double h) {
    ImageF marker(image.width(), image.height(), 0.0);
    for (std::size_t i = 0; i < image.size(); ++i)
        marker.pixels()[i] = domain.pixels()[i] ? image.pixels()[i] - h : image.pixels()[i];
    const ImageF rec = reconstruct(marker, image, domain);

    BinaryImage top(image.width(), image.height(), 0);
    for (std::size_t i = 0; i < image.size(); ++i)
        top.pixels()[i] = domain.pixels()[i] && image.pixels()[i] - rec.pixels()[i] >= h - 1e-9;

    LabelImage labels(image.width(), image.height(), 0);
    std::uint16_t next = 0;
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x) {
            if (!top(x, y) || labels(x, y)) continue;
            labels(x, y) = ++next;
            stack.emplace_back(x, y);
            while (!stack.empty()) {
                auto [cx, cy] = stack.back();
                stack.pop_back();
                for (auto [dx, dy] : kNeighbours8) {
                    const int nx = cx + dx, ny = cy + dy;
                    if (top.contains(nx, ny) && top(nx, ny) && !labels(nx, ny)) {
                        labels(nx, ny) = next;
                        stack.emplace_back(nx, ny);
                    }
                }
            }
        }
    return labels;
}

LabelImage seeded_watershed(const ImageF& cost, const LabelImage& seeds, const BinaryImage& domain) {
    using Entry = std::tuple<double, std::uint64_t, int, int>;  // cost, insertion order, x, y
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    LabelImage labels = seeds;
    std::uint64_t order = 0;
    BinaryImage queued(cost.width(), cost.height(), 0);
    for (int y = 0; y < cost.height(); ++y)
        for (int x = 0; x < cost.width(); ++x)
            if (labels(x, y)) {
                queue.emplace(cost(x, y), order++, x, y);
                queued(x, y) = 1;
            }
    while (!queue.empty()) {
        auto [c, o, x, y] = queue.top();
        queue.pop();
        for (auto [dx, dy] : kNeighbours8) {
            const int nx = x + dx, ny = y + dy;
            if (!cost.contains(nx, ny) || !domain(nx, ny) || queued(nx, ny)) continue;
            labels(nx, ny) = labels(x, y);
            queued(nx, ny) = 1;
            queue.emplace(std::max(c, cost(nx, ny)), order++, nx, ny);
        }
    }
    return labels;
}

LabelImage segment_nuclei(const ImageF& image, double h) {
    const BinaryImage fg = threshold(image, otsu_threshold(image));
    const ImageF dist = distance_transform(fg);
    const LabelImage seeds = h_maxima(dist, fg, h);
    ImageF cost(dist.width(), dist.height());
    for (std::size_t i = 0; i < dist.size(); ++i) cost.pixels()[i] = -dist.pixels()[i];
    return seeded_watershed(cost, seeds, fg);
}

ImageF resample(const ImageF& image, int width, int height) {
    if (image.width() == width && image.height() == height) return image;
    ImageF out(width, height);
    const double sx = static_cast<double>(image.width()) / width;
    const double sy = static_cast<double>(image.height()) / height;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, image.width() - 1.0);
            const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, image.height() - 1.0);
            const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
            const int x1 = std::min(x0 + 1, image.width() - 1), y1 = std::min(y0 + 1, image.height() - 1);
            const double ax = fx - x0, ay = fy - y0;
            out(x, y) = (1 - ax) * (1 - ay) * image(x0, y0) + ax * (1 - ay) * image(x1, y0) +
                        (1 - ax) * ay * image(x0, y1) + ax * ay * image(x1, y1);
        }
    return out;
}

}  // namespace cellsynth::segmentation
