#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "cellsynth/common.hpp"
#include "cellsynth/image.hpp"
#include "cellsynth/rng.hpp"

namespace cellsynth {

inline constexpr int kPatchSize = 96;
/// Stage labels are stored as label * 1000 in exported 16-bit conditioning files.
inline constexpr int kStageCodeScale = 1000;

/// Three-channel input of a texture provider. The stage channel holds the
/// stage label (1..6) on the object and 0 elsewhere; the intensity channel holds
/// the requested mean foreground intensity on the same support; the noise
/// channel is i.i.d. uniform on [0, 1].
struct ConditioningPatch {
    ImageF stage;
    ImageF intensity;
    ImageF noise;

    BinaryImage support() const;
    Stage stage_label() const;
    double target_intensity() const;
};

/// `mask` must be kPatchSize x kPatchSize; nonzero pixels are foreground.
ConditioningPatch make_conditioning(const LabelImage& mask, Stage stage, double mean_intensity, Rng& rng);

enum class Provenance { procedural, external };

struct TexturePatch {
    ImageF image;
    Provenance provenance = Provenance::procedural;
};

/// Per-stage foreground intensity statistics in normalized units.
struct StageIntensityTable {
    PerStage<double> mean{};
    PerStage<double> std{};

    void validate() const;
    /// Non-physical placeholder values; replace with an estimated table.
    static StageIntensityTable placeholder();
};

nlohmann::json to_json(const StageIntensityTable& table);
StageIntensityTable intensity_table_from_json(const nlohmann::json& j);

/// Stage-dependent look of the procedural texture: Gaussian filter scale of
/// the noise (px) and log-contrast of the multiplicative modulation.
struct ProceduralTextureParams {
    PerStage<double> granularity{1.0, 1.5, 1.5, 1.0, 1.0, 1.5};
    PerStage<double> contrast{0.12, 0.30, 0.35, 0.25, 0.25, 0.30};
    double rim_width = 1.5;  ///< px, darkening towards the object border
};

nlohmann::json to_json(const ProceduralTextureParams& params);
ProceduralTextureParams procedural_params_from_json(const nlohmann::json& j);

/// Smoothed-noise texture on the conditioning support, rescaled so its
/// foreground mean equals the requested intensity. Background is exactly 0.
TexturePatch procedural_texture(const ConditioningPatch& cond, const ProceduralTextureParams& params);

/// Key of one cell snapshot in the patch exchange layout ("cellID_frame").
struct PatchKey {
    std::uint32_t cell = 0;
    int frame = 0;

    std::string str() const { return std::to_string(cell) + "_" + std::to_string(frame); }
    auto operator<=>(const PatchKey&) const = default;
};

class TextureProvider {
public:
    virtual ~TextureProvider() = default;
    virtual TexturePatch provide(const PatchKey& key, const ConditioningPatch& cond) const = 0;
};

class ProceduralProvider final : public TextureProvider {
public:
    explicit ProceduralProvider(ProceduralTextureParams params = {}) : params_(std::move(params)) {}
    TexturePatch provide(const PatchKey& key, const ConditioningPatch& cond) const override;

private:
    ProceduralTextureParams params_;
};

/// Serves patches produced by an external generator; keys without a stored
/// patch fall back to procedural synthesis with a warning.
class ExternalPatchProvider final : public TextureProvider {
public:
    ExternalPatchProvider(std::map<std::string, ImageF> patches, ProceduralTextureParams fallback)
        : patches_(std::move(patches)), fallback_(std::move(fallback)) {}

    TexturePatch provide(const PatchKey& key, const ConditioningPatch& cond) const override;
    std::size_t size() const { return patches_.size(); }

private:
    std::map<std::string, ImageF> patches_;
    ProceduralTextureParams fallback_;
};

/// Load `<dir>/index.json` ("cellID_frame" -> file name). Patches are 16-bit
/// grayscale PNG (value / 65535) or single-channel PFM. A missing index means
/// an empty provider. Throws ValidationError for a malformed index, a patch of
/// the wrong size or values outside [0, 1].
std::unique_ptr<ExternalPatchProvider> load_external_patches(const std::filesystem::path& dir,
                                                             ProceduralTextureParams fallback = {});

/// Writes `<key>_stage.png`, `<key>_intensity.png`, `<key>_noise.png`.
void write_conditioning(const ConditioningPatch& cond, const std::filesystem::path& dir, const std::string& key);
ConditioningPatch read_conditioning(const std::filesystem::path& dir, const std::string& key);

}  // namespace cellsynth
