#include "cellsynth/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cellsynth/common.hpp"
#include "cellsynth/kernels.hpp"

namespace cellsynth {

void AcquisitionParams::validate() const {
    if (!(dark_offset >= 0.0 && dark_offset <= 1.0)) throw ValidationError("dark_offset must lie in [0, 1]");
    if (!(psf_sigma >= 0.0)) throw ValidationError("psf_sigma must be >= 0");
    if (!(photon_scale > 0.0)) throw ValidationError("photon_scale must be > 0");
    if (!(gaussian_sigma >= 0.0)) throw ValidationError("gaussian_sigma must be >= 0");
}

AcquisitionParams AcquisitionParams::disabled() {
    AcquisitionParams p;
    p.enable_dark = p.enable_blur = p.enable_poisson = p.enable_gaussian = false;
    return p;
}

nlohmann::json to_json(const AcquisitionParams& p) {
    return {{"dark_offset", p.dark_offset},       {"psf_sigma", p.psf_sigma},
            {"photon_scale", p.photon_scale},     {"gaussian_sigma", p.gaussian_sigma},
            {"enable_dark", p.enable_dark},       {"enable_blur", p.enable_blur},
            {"enable_poisson", p.enable_poisson}, {"enable_gaussian", p.enable_gaussian}};
}

AcquisitionParams acquisition_from_json(const nlohmann::json& j) {
    AcquisitionParams p;
    try {
        p.dark_offset = j.value("dark_offset", p.dark_offset);
        p.psf_sigma = j.value("psf_sigma", p.psf_sigma);
        p.photon_scale = j.value("photon_scale", p.photon_scale);
        p.gaussian_sigma = j.value("gaussian_sigma", p.gaussian_sigma);
        p.enable_dark = j.value("enable_dark", p.enable_dark);
        p.enable_blur = j.value("enable_blur", p.enable_blur);
        p.enable_poisson = j.value("enable_poisson", p.enable_poisson);
        p.enable_gaussian = j.value("enable_gaussian", p.enable_gaussian);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed acquisition parameters: ") + e.what());
    }
    p.validate();
    return p;
}

ImageF apply_acquisition(const ImageF& image, const AcquisitionParams& params, Rng& rng) {
    const std::uint64_t seed = rng();
    ImageF out = image;
    if (params.enable_dark)
        for (auto& v : out.pixels()) v += params.dark_offset;
    if (params.enable_blur && params.psf_sigma > 0.0) {
        ImageF blurred;
        kernels::gaussian_blur(out, blurred, params.psf_sigma);
        out = std::move(blurred);
    }
    if (params.enable_poisson) kernels::add_poisson_noise(out, params.photon_scale, seed);
    if (params.enable_gaussian && params.gaussian_sigma > 0.0)
        kernels::add_gaussian_noise(out, params.gaussian_sigma, splitmix64(seed));
    for (auto& v : out.pixels()) v = std::clamp(v, 0.0, 1.0);
    return out;
}

double psnr(const ImageF& reference, const ImageF& test, double peak) {
    if (reference.size() != test.size() || reference.empty()) throw ValidationError("psnr needs equal, nonempty images");
    double mse = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double d = reference.pixels()[i] - test.pixels()[i];
        mse += d * d;
    }
    mse /= static_cast<double>(reference.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

}  // namespace cellsynth
