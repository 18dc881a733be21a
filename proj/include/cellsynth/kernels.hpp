#pragma once

// Data-parallel inner loops. Every kernel has a serial reference in
// `kernels::serial` and an OpenMP version in `kernels::omp`; both produce
// bit-identical results (tests/test_kernels.cpp). The unqualified names in
// `kernels` dispatch to the OpenMP versions.

#include <cstdint>
#include <span>
#include <vector>

#include "cellsynth/common.hpp"
#include "cellsynth/image.hpp"

namespace cellsynth::kernels {

/// Sampled Gaussian truncated at +-ceil(4 sigma) and normalized to unit sum.
/// sigma == 0 yields the identity kernel {1}.
std::vector<double> gaussian_kernel_1d(double sigma);

/// Half-sample symmetric reflection of an index into [0, n).
int reflect_index(int i, int n);

/// A disk-like body taking part in pairwise repulsion.
struct Body {
    Vec2 position = Vec2::Zero();
    double r_major = 0.0;  ///< R_M, major semi-axis (px)
    double r_minor = 0.0;  ///< R_N, minor semi-axis (px)
    std::uint32_t id = 0;
};

/// Pairwise push law. For a pair at center distance d with
/// sM = R_M,i + R_M,j and sN = R_N,i + R_N,j the push magnitude on each body is
///   gain (1 - d/sM)^2             for d < sM
/// + core_gain (1 - d/sN)^2        for d < sN
/// In projection mode only pairs closer than hard_core_fraction * sN move, each
/// by half the missing distance.
struct RepulsionLaw {
    double gain = 1.0;
    double core_gain = 10.0;
    double hard_core_fraction = 0.5;
    bool projection = false;
    std::uint64_t coincidence_seed = 0;
};

/// Displacement applied to `a` by its interaction with `b`; exactly the
/// negation of pair_push(b, a, law).
Vec2 pair_push(const Body& a, const Body& b, const RepulsionLaw& law);

namespace serial {
void gaussian_blur(const ImageF& in, ImageF& out, double sigma);
void add_poisson_noise(ImageF& image, double photon_scale, std::uint64_t seed);
void add_gaussian_noise(ImageF& image, double sigma, std::uint64_t seed);
void repulsion_corrections(std::span<const Body> bodies, const RepulsionLaw& law, std::span<Vec2> out);
}  // namespace serial

namespace omp {
void gaussian_blur(const ImageF& in, ImageF& out, double sigma);
void add_poisson_noise(ImageF& image, double photon_scale, std::uint64_t seed);
void add_gaussian_noise(ImageF& image, double sigma, std::uint64_t seed);
void repulsion_corrections(std::span<const Body> bodies, const RepulsionLaw& law, std::span<Vec2> out);
}  // namespace omp

using omp::add_gaussian_noise;
using omp::add_poisson_noise;
using omp::gaussian_blur;
using omp::repulsion_corrections;

}  // namespace cellsynth::kernels
