#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "cellsynth/acquisition.hpp"
#include "cellsynth/common.hpp"
#include "cellsynth/texture_synth.hpp"

namespace cellsynth {

enum class AngleUnit { radians, degrees };
enum class TextureSource { procedural, external };

struct MotionParams {
    double displacement_variance = 2.0;  ///< px^2 per frame and axis
    double rotation_variance = 1.0;      ///< in rotation_unit^2 per frame
    AngleUnit rotation_unit = AngleUnit::radians;
};

struct RepulsionParams {
    double gain = 1.0;       ///< px, outer ramp (R_M sum)
    double core_gain = 10.0;  ///< px, inner ramp (R_N sum)
    int max_sweeps = 10;
    double tolerance = 0.1;  ///< px, stop when every correction is smaller
    double hard_core_fraction = 0.5;
    int max_projection_passes = 100;
};

/// Every generation parameter. All fields have defaults; JSON keys mirror the
/// members (see README for the schema).
struct SimConfig {
    int n_initial_cells = 5;
    int n_frames = 50;
    int width = 256;
    int height = 256;
    std::uint64_t seed = 42;
    int placement_margin = 16;

    MotionParams motion;
    RepulsionParams repulsion;

    StageIntensityTable intensity = StageIntensityTable::placeholder();
    double lineage_offset_std = 0.05;

    std::string stage_model_path;            ///< empty: built-in model
    std::optional<Stage> initial_stage;      ///< empty: drawn from the model's initial distribution
    std::string shape_model_path;            ///< empty: built from the synthetic corpus
    std::optional<int> n_e;                  ///< empty: every positive component
    double epsilon_variance = 0.1;

    TextureSource texture = TextureSource::procedural;
    std::string texture_dir;
    ProceduralTextureParams procedural;

    AcquisitionParams acquisition;

    void validate() const;
};

nlohmann::json to_json(const SimConfig& config);
/// Missing keys keep their defaults; unknown top-level keys are rejected.
SimConfig config_from_json(const nlohmann::json& j);
/// Relative model/texture paths are resolved against the config file's directory.
SimConfig load_config(const std::filesystem::path& path);

}  // namespace cellsynth
