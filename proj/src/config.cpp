#include "cellsynth/config.hpp"

#include <fstream>
#include <set>

namespace cellsynth {

void SimConfig::validate() const {
    if (n_initial_cells < 1) throw ValidationError("n_initial_cells must be >= 1");
    if (n_frames < 1) throw ValidationError("n_frames must be >= 1");
    if (width < 128 || height < 128) throw ValidationError("canvas must be at least 128x128");
    if (placement_margin < 0 || 2 * placement_margin >= std::min(width, height))
        throw ValidationError("placement_margin does not fit the canvas");
    if (!(motion.displacement_variance >= 0.0) || !(motion.rotation_variance >= 0.0))
        throw ValidationError("motion variances must be >= 0");
    if (!(repulsion.gain >= 0.0) || !(repulsion.core_gain >= 0.0) || repulsion.max_sweeps < 0 ||
        !(repulsion.tolerance >= 0.0) || !(repulsion.hard_core_fraction >= 0.0) || repulsion.max_projection_passes < 0)
        throw ValidationError("invalid repulsion parameters");
    intensity.validate();
    if (!(lineage_offset_std >= 0.0)) throw ValidationError("lineage_offset_std must be >= 0");
    if (n_e && *n_e < 0) throw ValidationError("n_e must be >= 0");
    if (!(epsilon_variance >= 0.0)) throw ValidationError("epsilon_variance must be >= 0");
    if (texture == TextureSource::external && texture_dir.empty())
        throw ValidationError("external texture provider needs texture.external_dir");
    acquisition.validate();
}

nlohmann::json to_json(const SimConfig& c) {
    nlohmann::json j;
    j["n_initial_cells"] = c.n_initial_cells;
    j["n_frames"] = c.n_frames;
    j["canvas"] = {{"width", c.width}, {"height", c.height}};
    j["seed"] = c.seed;
    j["placement_margin"] = c.placement_margin;
    j["motion"] = {{"displacement_variance", c.motion.displacement_variance},
                   {"rotation_variance", c.motion.rotation_variance},
                   {"rotation_unit", c.motion.rotation_unit == AngleUnit::radians ? "radians" : "degrees"}};
    j["repulsion"] = {{"gain", c.repulsion.gain},
                      {"core_gain", c.repulsion.core_gain},
                      {"max_sweeps", c.repulsion.max_sweeps},
                      {"tolerance", c.repulsion.tolerance},
                      {"hard_core_fraction", c.repulsion.hard_core_fraction},
                      {"max_projection_passes", c.repulsion.max_projection_passes}};
    j["intensity"] = {{"table", to_json(c.intensity)}, {"lineage_offset_std", c.lineage_offset_std}};
    j["stage"] = {{"model", c.stage_model_path.empty() ? nlohmann::json(nullptr) : nlohmann::json(c.stage_model_path)},
                  {"initial_stage", c.initial_stage ? nlohmann::json(to_int(*c.initial_stage)) : nlohmann::json(nullptr)}};
    j["shape"] = {{"models", c.shape_model_path.empty() ? nlohmann::json(nullptr) : nlohmann::json(c.shape_model_path)},
                  {"n_e", c.n_e ? nlohmann::json(*c.n_e) : nlohmann::json(nullptr)},
                  {"epsilon_variance", c.epsilon_variance}};
    j["texture"] = {{"provider", c.texture == TextureSource::procedural ? "procedural" : "external"},
                    {"external_dir", c.texture_dir},
                    {"procedural", to_json(c.procedural)}};
    j["acquisition"] = to_json(c.acquisition);
    return j;
}

namespace {

template <class T>
void read(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}

}  // namespace

SimConfig config_from_json(const nlohmann::json& j) {
    static const std::set<std::string> kKnown{"n_initial_cells", "n_frames",  "canvas",    "seed",
                                              "placement_margin", "motion",   "repulsion", "intensity",
                                              "stage",           "shape",     "texture",   "acquisition"};
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!kKnown.contains(key)) throw ValidationError("unknown config key '" + key + "'");

    SimConfig c;
    try {
        read(j, "n_initial_cells", c.n_initial_cells);
        read(j, "n_frames", c.n_frames);
        read(j, "seed", c.seed);
        read(j, "placement_margin", c.placement_margin);
        if (j.contains("canvas")) {
            read(j["canvas"], "width", c.width);
            read(j["canvas"], "height", c.height);
        }
        if (j.contains("motion")) {
            const auto& m = j["motion"];
            read(m, "displacement_variance", c.motion.displacement_variance);
            read(m, "rotation_variance", c.motion.rotation_variance);
            if (m.contains("rotation_unit")) {
                const auto unit = m["rotation_unit"].get<std::string>();
                if (unit == "radians")
                    c.motion.rotation_unit = AngleUnit::radians;
                else if (unit == "degrees")
                    c.motion.rotation_unit = AngleUnit::degrees;
                else
                    throw ValidationError("rotation_unit must be 'radians' or 'degrees'");
            }
        }
        if (j.contains("repulsion")) {
            const auto& r = j["repulsion"];
            read(r, "gain", c.repulsion.gain);
            read(r, "core_gain", c.repulsion.core_gain);
            read(r, "max_sweeps", c.repulsion.max_sweeps);
            read(r, "tolerance", c.repulsion.tolerance);
            read(r, "hard_core_fraction", c.repulsion.hard_core_fraction);
            read(r, "max_projection_passes", c.repulsion.max_projection_passes);
        }
        if (j.contains("intensity")) {
            const auto& i = j["intensity"];
            if (i.contains("table")) c.intensity = intensity_table_from_json(i["table"]);
            read(i, "lineage_offset_std", c.lineage_offset_std);
        }
        if (j.contains("stage")) {
            const auto& s = j["stage"];
            read(s, "model", c.stage_model_path);
            if (s.contains("initial_stage") && !s["initial_stage"].is_null())
                c.initial_stage = stage_from_int(s["initial_stage"].get<long long>());
        }
        if (j.contains("shape")) {
            const auto& s = j["shape"];
            read(s, "models", c.shape_model_path);
            if (s.contains("n_e") && !s["n_e"].is_null()) c.n_e = s["n_e"].get<int>();
            read(s, "epsilon_variance", c.epsilon_variance);
        }
        if (j.contains("texture")) {
            const auto& t = j["texture"];
            if (t.contains("provider")) {
                const auto p = t["provider"].get<std::string>();
                if (p == "procedural")
                    c.texture = TextureSource::procedural;
                else if (p == "external")
                    c.texture = TextureSource::external;
                else
                    throw ValidationError("texture.provider must be 'procedural' or 'external'");
            }
            read(t, "external_dir", c.texture_dir);
            if (t.contains("procedural")) c.procedural = procedural_params_from_json(t["procedural"]);
        }
        if (j.contains("acquisition")) c.acquisition = acquisition_from_json(j["acquisition"]);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed config: ") + e.what());
    }
    c.validate();
    return c;
}

SimConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    SimConfig c = config_from_json(j);
    const auto base = path.parent_path();
    auto resolve = [&](std::string& p) {
        if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
    };
    resolve(c.stage_model_path);
    resolve(c.shape_model_path);
    resolve(c.texture_dir);
    return c;
}

}  // namespace cellsynth
