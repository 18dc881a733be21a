#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cellsynth/population_sim.hpp"
#include "cellsynth/shape_model.hpp"
#include "cellsynth/stage_model.hpp"
#include "cellsynth/texture_synth.hpp"

namespace cellsynth {

inline constexpr int kDatasetFormatVersion = 1;

/// Contents of manifest.json in an exported dataset.
struct DatasetManifest {
    int version = kDatasetFormatVersion;
    int n_frames = 0;
    int n_cells = 0;
    int width = 0;
    int height = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> files;  ///< relative to the dataset directory
    nlohmann::json config;           ///< SimConfig snapshot
};

nlohmann::json to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j);
DatasetManifest read_manifest(const std::filesystem::path& dir);

/// Frame file names: t000.png, mask000.png (at least three digits).
std::string frame_file(int frame);
std::string mask_file(int frame);

/// "id begin end parent" per track, ascending id.
std::string tracks_text(const SimulationResult& sim);
/// "frame,id,stage" header, then one row per live cell, by frame then id.
std::string stages_text(const SimulationResult& sim);

/// Writes raw frames, instance masks, tracks.txt, stages.csv and manifest.json.
DatasetManifest export_dataset(const SimulationResult& sim, const std::filesystem::path& dir);

struct ConsistencyReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

/// Mask/track/stage cross-checks on an exported dataset: every label in mask t
/// belongs to a track alive at t and vice versa, stages.csv has one row per
/// live cell and frame, manifest files exist, parents end the frame before
/// their two daughters begin.
ConsistencyReport check_dataset(const std::filesystem::path& dir);

/// One annotated snippet: a cell's image at one frame.
struct AnnotatedSnippet {
    int cell = 0;   ///< row of the stage CSV, from 1
    int frame = 0;  ///< column of the stage CSV, from 0
    ImageF image;   ///< normalized to [0, 1]; resampled to 96x96 if needed
};

struct IngestResult {
    StageTransitionModel transition;
    ShapeModelSet shapes;
    StageIntensityTable intensity;
    PerStage<int> shapes_used{};
};

/// Estimates the transition model from the stage sequences, then segments each
/// snippet (Otsu + seeded watershed on the inverted distance transform), keeps
/// the object nearest the snippet center, extracts landmarks, groups them by
/// stage and builds the shape models. Intensity mean/std per stage are the
/// averages of the per-snippet foreground mean and standard deviation. Stages
/// without snippets keep the placeholder intensity values (warning).
IngestResult ingest_annotated(const std::vector<StageSequence>& sequences, std::span<const AnnotatedSnippet> snippets);

/// Directory layout: `<dir>/stages.csv` and `<dir>/snippets/c{cell:03}_t{frame:03}.png`.
IngestResult ingest_directory(const std::filesystem::path& dir);

/// Writes transition.json, shape_models.json and intensity.json into `out`.
void save_ingest(const IngestResult& result, const std::filesystem::path& out);

/// Side-by-side montage (8-bit, 4 px gaps) of the selected raw frames of a dataset.
void write_preview(const std::filesystem::path& dataset_dir, std::span<const int> frames,
                   const std::filesystem::path& out);

}  // namespace cellsynth
