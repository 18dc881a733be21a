#pragma once

#include "cellsynth/image.hpp"

namespace cellsynth::segmentation {

/// Otsu threshold over a 256-bin histogram of [min, max]. Returns a value t;
/// foreground is `pixel > t`.
double otsu_threshold(const ImageF& image);

BinaryImage threshold(const ImageF& image, double t);

/// Exact Euclidean distance from each foreground pixel to the nearest
/// background pixel (0 on background). Pixels beyond the border count as background.
ImageF distance_transform(const BinaryImage& mask);

/// Extended maxima of height h, labelled 1..n (8-connected).
LabelImage h_maxima(const ImageF& image, const BinaryImage& domain, double h);

/// Priority-flood watershed of `cost` from labelled seeds, restricted to `domain`.
LabelImage seeded_watershed(const ImageF& cost, const LabelImage& seeds, const BinaryImage& domain);

/// Threshold + seeded watershed on the inverted distance transform.
LabelImage segment_nuclei(const ImageF& image, double h = 2.0);

/// Bilinear resampling to (width, height), pixel-center aligned.
ImageF resample(const ImageF& image, int width, int height);

}  // namespace cellsynth::segmentation
