#pragma once

#include <nlohmann/json.hpp>

#include "cellsynth/common.hpp"
#include "cellsynth/image.hpp"
#include "cellsynth/rng.hpp"

namespace cellsynth {

struct AcquisitionParams {
    double dark_offset = 0.02;
    double psf_sigma = 1.0;       ///< px
    double photon_scale = 1000.0;  ///< photons at unit intensity
    double gaussian_sigma = 0.001;

    bool enable_dark = true;
    bool enable_blur = true;
    bool enable_poisson = true;
    bool enable_gaussian = true;

    void validate() const;
    static AcquisitionParams disabled();
};

nlohmann::json to_json(const AcquisitionParams& p);
AcquisitionParams acquisition_from_json(const nlohmann::json& j);

/// Dark offset, Gaussian PSF blur (reflective borders), Poisson shot noise at
/// `photon_scale`, additive Gaussian read noise, then clamping to [0, 1].
/// One 64-bit draw from `rng` seeds the per-row noise streams.
ImageF apply_acquisition(const ImageF& image, const AcquisitionParams& params, Rng& rng);

double psnr(const ImageF& reference, const ImageF& test, double peak = 1.0);

}  // namespace cellsynth
