#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "cellsynth/common.hpp"
#include "cellsynth/image.hpp"
#include "cellsynth/rng.hpp"
#include "cellsynth/stage_model.hpp"

namespace cellsynth {

inline constexpr int kNumLandmarks = 60;
inline constexpr int kShapeDim = 2 * kNumLandmarks;
inline constexpr double kLandmarkStepDeg = 6.0;

using ShapeVector = Eigen::Matrix<double, kShapeDim, 1>;

/// 60 boundary points, point k on the ray at 6k degrees (measured from +x
/// towards +y) around the object center, stored as (x0, y0, ..., x59, y59).
/// The major axis runs along y in the canonical frame.
struct LandmarkShape {
    ShapeVector coords = ShapeVector::Zero();

    Vec2 point(int k) const { return {coords[2 * k], coords[2 * k + 1]}; }
    void set_point(int k, const Vec2& p) {
        coords[2 * k] = p.x();
        coords[2 * k + 1] = p.y();
    }
    Vec2 centroid() const;

    /// Shape whose landmark k lies at distance radii[k] on ray k.
    static LandmarkShape from_radii(std::span<const double> radii);
};

/// Signed area of the landmark polygon (positive for the canonical ordering).
double polygon_area(const LandmarkShape& shape);

/// Equivalent-ellipse semi-axes of the filled polygon, from its area moments.
struct ShapeAxes {
    double major = 0.0;  ///< semi-axis, px
    double minor = 0.0;  ///< semi-axis, px
    double angle = 0.0;  ///< direction of the major axis, radians from +x
};
ShapeAxes shape_axes(const LandmarkShape& shape);

/// Center the single foreground object on its centroid, rotate its major axis
/// onto +y (third moment along the axis >= 0), and take the farthest boundary
/// crossing along each of the 60 rays. The result is shifted so the landmark
/// centroid is the origin.
LandmarkShape extract_landmarks(const BinaryImage& mask);

/// Point distribution model of one mitotic stage.
struct StageShapeModel {
    Stage stage = Stage::interphase;
    ShapeVector mean = ShapeVector::Zero();
    Eigen::MatrixXd eigenvectors;  ///< kShapeDim x k, columns ordered by descending eigenvalue
    Eigen::VectorXd eigenvalues;   ///< descending, clamped to >= 0
    int n_train = 0;

    int positive_components() const;
};

/// Unbiased landmark covariance, 1/(N-1) normalization.
Eigen::MatrixXd shape_covariance(std::span<const LandmarkShape> shapes);

/// Mean and eigen-decomposition of the landmark covariance. Eigenvalues below
/// 1e-10 of the largest are zeroed.
StageShapeModel build_shape_model(std::span<const LandmarkShape> shapes, Stage stage);

/// Random coefficients for one stage run: b ~ N(0, 1) per eigenvector and a
/// shared scale epsilon.
struct ShapeSampleParams {
    Eigen::VectorXd b;
    double epsilon = 0.0;
};

ShapeSampleParams draw_shape_params(const StageShapeModel& model, double epsilon_std, Rng& rng);

/// mean + sum_{i < n_e} epsilon * sqrt(lambda_i) * b_i * e_i
LandmarkShape sample_shape(const StageShapeModel& model, const ShapeSampleParams& params, int n_e);

/// Eq. (4) Gaussian kernel value.
double transition_kernel(double t, double mu, double sigma);

/// Mixture weights of the stage models at one frame. A Gaussian kernel sits on
/// every run boundary (centered on the first frame of the new run, width equal
/// to the length of the run being left); the kernel's cumulative mass up to t
/// is the share of the new stage and the remainder the share of the old one.
/// Each run's unnormalized weight is the product of its two boundary shares,
/// and the weights are normalized over all runs. Kernel tails beyond 4 sigma
/// are cut off.
struct TransitionWeights {
    struct RunWeight {
        int run = 0;  ///< index into stage_runs(seq)
        Stage stage = Stage::interphase;
        double weight = 0.0;
    };

    PerStage<double> w{};
    std::vector<double> sigmas;       ///< kernel width of each run boundary
    std::vector<RunWeight> runs;      ///< runs with nonzero weight
};

TransitionWeights transition_weights(const StageSequence& seq, int t);

using ShapeModelSet = PerStage<std::optional<StageShapeModel>>;

/// Number of eigenvectors used for `model` when the caller asks for n_e
/// (nullopt: every positive component). Requests above the positive count are clamped.
int effective_components(const StageShapeModel& model, std::optional<int> n_e);

/// Weighted sum of per-stage samples with one parameter set per stage.
/// Stages without a model are dropped and the remaining weights renormalized.
LandmarkShape blend_shape(const ShapeModelSet& models, const TransitionWeights& weights,
                          const PerStage<ShapeSampleParams>& params, std::optional<int> n_e = std::nullopt);

/// Same mixture with one parameter set per stage run (params indexed like
/// stage_runs), so each run keeps its own coefficients.
LandmarkShape blend_runs(const ShapeModelSet& models, const TransitionWeights& weights,
                         std::span<const ShapeSampleParams> run_params, std::optional<int> n_e = std::nullopt);

/// Scan-line fill of the landmark polygon after rotating by `rotation` and
/// translating to `position`. Pixels whose centers fall inside get `label`.
/// Polygons with area below one pixel leave the canvas untouched (warning).
void rasterize_into(LabelImage& canvas, const LandmarkShape& shape, const Vec2& position, double rotation,
                    std::uint16_t label);

LabelImage rasterize(const LandmarkShape& shape, int width, int height, const Vec2& position, double rotation,
                     std::uint16_t label = 1);

/// Landmarks of `shape` after rotation and translation into image coordinates.
LandmarkShape place_shape(const LandmarkShape& shape, const Vec2& position, double rotation);

nlohmann::json to_json(const ShapeModelSet& models);
ShapeModelSet shape_models_from_json(const nlohmann::json& j);
void save_shape_models(const ShapeModelSet& models, const std::filesystem::path& path);
ShapeModelSet load_shape_models(const std::filesystem::path& path);

}  // namespace cellsynth
