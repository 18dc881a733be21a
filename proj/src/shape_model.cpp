#include "cellsynth/shape_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <queue>

#include <Eigen/Eigenvalues>

#include "cellsynth/base64.hpp"
#include "cellsynth/log.hpp"

namespace cellsynth {
namespace {

constexpr double kEigenRelativeFloor = 1e-10;
constexpr double kKernelSupport = 4.0;

Eigen::Matrix2d rotation_matrix(double angle) {
    Eigen::Matrix2d r;
    r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return r;
}

double ray_angle(int k) { return k * kLandmarkStepDeg * std::numbers::pi / 180.0; }

// Bilinear interpolation of a binary mask; outside the image counts as background.
double sample_bilinear(const BinaryImage& mask, double x, double y) {
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0;
    const double fy = y - y0;
    auto at = [&](int xi, int yi) -> double { return mask.contains(xi, yi) && mask(xi, yi) ? 1.0 : 0.0; };
    return (1 - fx) * (1 - fy) * at(x0, y0) + fx * (1 - fy) * at(x0 + 1, y0) + (1 - fx) * fy * at(x0, y0 + 1) +
           fx * fy * at(x0 + 1, y0 + 1);
}

int count_components(const BinaryImage& mask) {
    BinaryImage seen(mask.width(), mask.height(), 0);
    int components = 0;
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask(x, y) || seen(x, y)) continue;
            ++components;
            seen(x, y) = 1;
            stack.emplace_back(x, y);
            while (!stack.empty()) {
                auto [cx, cy] = stack.back();
                stack.pop_back();
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = cx + dx, ny = cy + dy;
                        if (mask.contains(nx, ny) && mask(nx, ny) && !seen(nx, ny)) {
                            seen(nx, ny) = 1;
                            stack.emplace_back(nx, ny);
                        }
                    }
            }
        }
    }
    return components;
}

double step_share(double t, double mu, double sigma) {
    const double z = (t - mu) / sigma;
    if (z <= -kKernelSupport) return 0.0;
    if (z >= kKernelSupport) return 1.0;
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

}  // namespace

Vec2 LandmarkShape::centroid() const {
    Vec2 c = Vec2::Zero();
    for (int k = 0; k < kNumLandmarks; ++k) c += point(k);
    return c / kNumLandmarks;
}

LandmarkShape LandmarkShape::from_radii(std::span<const double> radii) {
    if (radii.size() != kNumLandmarks) throw ValidationError("expected 60 radii");
    LandmarkShape s;
    for (int k = 0; k < kNumLandmarks; ++k)
        s.set_point(k, radii[k] * Vec2(std::cos(ray_angle(k)), std::sin(ray_angle(k))));
    return s;
}

double polygon_area(const LandmarkShape& shape) {
    double a = 0.0;
    for (int k = 0; k < kNumLandmarks; ++k) {
        const Vec2 p = shape.point(k);
        const Vec2 q = shape.point((k + 1) % kNumLandmarks);
        a += p.x() * q.y() - q.x() * p.y();
    }
    return 0.5 * a;
}

ShapeAxes shape_axes(const LandmarkShape& shape) {
    double area = 0.0, cx = 0.0, cy = 0.0, ixx = 0.0, iyy = 0.0, ixy = 0.0;
    for (int k = 0; k < kNumLandmarks; ++k) {
        const Vec2 p = shape.point(k);
        const Vec2 q = shape.point((k + 1) % kNumLandmarks);
        const double cross = p.x() * q.y() - q.x() * p.y();
        area += cross;
        cx += (p.x() + q.x()) * cross;
        cy += (p.y() + q.y()) * cross;
        ixx += (p.x() * p.x() + p.x() * q.x() + q.x() * q.x()) * cross;
        iyy += (p.y() * p.y() + p.y() * q.y() + q.y() * q.y()) * cross;
        ixy += (p.x() * q.y() + 2 * p.x() * p.y() + 2 * q.x() * q.y() + q.x() * p.y()) * cross;
    }
    area *= 0.5;
    if (std::abs(area) < 1e-12) return {};
    cx /= 6.0 * area;
    cy /= 6.0 * area;
    const double sxx = ixx / 12.0 / area - cx * cx;
    const double syy = iyy / 12.0 / area - cy * cy;
    const double sxy = ixy / 24.0 / area - cx * cy;

    const double mid = 0.5 * (sxx + syy);
    const double diff = std::sqrt(0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy);
    const double l1 = std::max(mid + diff, 0.0);
    const double l2 = std::max(mid - diff, 0.0);
    return {2.0 * std::sqrt(l1), 2.0 * std::sqrt(l2), 0.5 * std::atan2(2.0 * sxy, sxx - syy)};
}

LandmarkShape extract_landmarks(const BinaryImage& mask) {
    double m00 = 0.0, m10 = 0.0, m01 = 0.0;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask(x, y)) {
                m00 += 1;
                m10 += x;
                m01 += y;
            }
    if (m00 == 0) throw ValidationError("empty mask");
    if (count_components(mask) > 1) throw ValidationError("ambiguous object");
    if (m00 < 8) throw ValidationError("object smaller than 8 pixels");

    const Vec2 c(m10 / m00, m01 / m00);
    double mu20 = 0.0, mu02 = 0.0, mu11 = 0.0;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask(x, y)) {
                const double dx = x - c.x(), dy = y - c.y();
                mu20 += dx * dx;
                mu02 += dy * dy;
                mu11 += dx * dy;
            }
    const double theta = 0.5 * std::atan2(2.0 * mu11, mu20 - mu02);
    Vec2 axis(std::cos(theta), std::sin(theta));

    double m3 = 0.0;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask(x, y)) {
                const double v = (Vec2(x, y) - c).dot(axis);
                m3 += v * v * v;
            }
    if (m3 < 0.0) axis = -axis;

    // Canonical frame: R * (0, 1) == axis.
    const Eigen::Matrix2d rot = rotation_matrix(std::atan2(-axis.x(), axis.y()));
    const double r_max = std::hypot(mask.width(), mask.height());
    constexpr double kStep = 0.25;

    LandmarkShape shape;
    for (int k = 0; k < kNumLandmarks; ++k) {
        const Vec2 canonical_dir(std::cos(ray_angle(k)), std::sin(ray_angle(k)));
        const Vec2 dir = rot * canonical_dir;
        auto inside = [&](double r) {
            const Vec2 p = c + r * dir;
            return sample_bilinear(mask, p.x(), p.y()) >= 0.5;
        };
        double last_in = -1.0;
        for (double r = 0.0; r <= r_max; r += kStep)
            if (inside(r)) last_in = r;
        double radius = 0.0;
        if (last_in >= 0.0) {
            double lo = last_in, hi = last_in + kStep;
            for (int it = 0; it < 40; ++it) {
                const double m = 0.5 * (lo + hi);
                (inside(m) ? lo : hi) = m;
            }
            radius = 0.5 * (lo + hi);
        }
        shape.set_point(k, radius * canonical_dir);
    }

    const Vec2 centroid = shape.centroid();
    for (int k = 0; k < kNumLandmarks; ++k) shape.set_point(k, shape.point(k) - centroid);
    return shape;
}

int StageShapeModel::positive_components() const {
    return static_cast<int>((eigenvalues.array() > 0.0).count());
}

Eigen::MatrixXd shape_covariance(std::span<const LandmarkShape> shapes) {
    if (shapes.size() < 2) throw ValidationError("insufficient shapes");
    const auto n = static_cast<Eigen::Index>(shapes.size());
    Eigen::MatrixXd data(kShapeDim, n);
    for (Eigen::Index i = 0; i < n; ++i) data.col(i) = shapes[i].coords;
    const Eigen::VectorXd mean = data.rowwise().mean();
    data.colwise() -= mean;
    return data * data.transpose() / static_cast<double>(n - 1);
}

StageShapeModel build_shape_model(std::span<const LandmarkShape> shapes, Stage stage) {
    if (shapes.size() < 2) throw ValidationError("insufficient shapes");
    StageShapeModel model;
    model.stage = stage;
    model.n_train = static_cast<int>(shapes.size());
    for (const auto& s : shapes) model.mean += s.coords;
    model.mean /= static_cast<double>(shapes.size());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(shape_covariance(shapes));
    if (solver.info() != Eigen::Success) throw Error("eigen-decomposition failed");

    // Eigen returns ascending order.
    model.eigenvalues = solver.eigenvalues().reverse();
    model.eigenvectors = solver.eigenvectors().rowwise().reverse();
    const double largest = std::max(model.eigenvalues[0], 0.0);
    for (Eigen::Index i = 0; i < model.eigenvalues.size(); ++i)
        if (model.eigenvalues[i] < kEigenRelativeFloor * largest || largest == 0.0) model.eigenvalues[i] = 0.0;
    return model;
}

ShapeSampleParams draw_shape_params(const StageShapeModel& model, double epsilon_std, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    ShapeSampleParams p;
    p.b.resize(model.positive_components());
    for (Eigen::Index i = 0; i < p.b.size(); ++i) p.b[i] = normal(rng);
    p.epsilon = epsilon_std * normal(rng);
    return p;
}

LandmarkShape sample_shape(const StageShapeModel& model, const ShapeSampleParams& params, int n_e) {
    if (n_e < 0 || n_e > model.positive_components())
        throw ValidationError("n_e=" + std::to_string(n_e) + " exceeds the " +
                              std::to_string(model.positive_components()) + " positive eigenvalues");
    if (params.b.size() < n_e) throw ValidationError("fewer coefficients than requested eigenvectors");
    LandmarkShape s;
    s.coords = model.mean;
    for (int i = 0; i < n_e; ++i)
        s.coords += params.epsilon * std::sqrt(model.eigenvalues[i]) * params.b[i] * model.eigenvectors.col(i);
    return s;
}

double transition_kernel(double t, double mu, double sigma) {
    const double z = (t - mu) / sigma;
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi * sigma * sigma);
}

TransitionWeights transition_weights(const StageSequence& seq, int t) {
    if (t < 0 || t >= static_cast<int>(seq.size())) throw ValidationError("frame index outside the sequence");
    const auto runs = stage_runs(seq);
    TransitionWeights out;
    out.sigmas.reserve(runs.size() - 1);
    for (std::size_t r = 0; r + 1 < runs.size(); ++r) out.sigmas.push_back(runs[r].length);

    double total = 0.0;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        double v = 1.0;
        if (r > 0) v *= step_share(t, runs[r].begin, out.sigmas[r - 1]);
        if (r + 1 < runs.size()) v *= 1.0 - step_share(t, runs[r + 1].begin, out.sigmas[r]);
        if (v <= 0.0) continue;
        out.runs.push_back({static_cast<int>(r), runs[r].stage, v});
        total += v;
    }
    for (auto& rw : out.runs) {
        rw.weight /= total;
        out.w[index_of(rw.stage)] += rw.weight;
    }
    return out;
}

int effective_components(const StageShapeModel& model, std::optional<int> n_e) {
    const int positive = model.positive_components();
    return n_e ? std::clamp(*n_e, 0, positive) : positive;
}

namespace {

template <class ParamsFor>
LandmarkShape blend_impl(const ShapeModelSet& models, const std::vector<TransitionWeights::RunWeight>& parts,
                         ParamsFor params_for, std::optional<int> n_e) {
    LandmarkShape out;
    double used = 0.0;
    for (const auto& part : parts) {
        const auto& model = models[index_of(part.stage)];
        if (!model || part.weight <= 0.0) continue;
        const auto& params = params_for(part);
        out.coords += part.weight * sample_shape(*model, params, effective_components(*model, n_e)).coords;
        used += part.weight;
    }
    if (used <= 0.0) throw Error("no shape model available for the active stages");
    out.coords /= used;
    return out;
}

}  // namespace

LandmarkShape blend_shape(const ShapeModelSet& models, const TransitionWeights& weights,
                          const PerStage<ShapeSampleParams>& params, std::optional<int> n_e) {
    std::vector<TransitionWeights::RunWeight> parts;
    for (int s = 0; s < kNumStages; ++s)
        if (weights.w[s] > 0.0) parts.push_back({-1, stage_at(s), weights.w[s]});
    return blend_impl(
        models, parts, [&](const TransitionWeights::RunWeight& p) -> const ShapeSampleParams& { return params[index_of(p.stage)]; },
        n_e);
}

LandmarkShape blend_runs(const ShapeModelSet& models, const TransitionWeights& weights,
                         std::span<const ShapeSampleParams> run_params, std::optional<int> n_e) {
    return blend_impl(
        models, weights.runs,
        [&](const TransitionWeights::RunWeight& p) -> const ShapeSampleParams& {
            if (p.run < 0 || p.run >= static_cast<int>(run_params.size()))
                throw ValidationError("missing shape parameters for a stage run");
            return run_params[p.run];
        },
        n_e);
}

LandmarkShape place_shape(const LandmarkShape& shape, const Vec2& position, double rotation) {
    const Eigen::Matrix2d rot = rotation_matrix(std::remainder(rotation, 2.0 * std::numbers::pi));
    LandmarkShape out;
    for (int k = 0; k < kNumLandmarks; ++k) out.set_point(k, position + rot * shape.point(k));
    return out;
}

void rasterize_into(LabelImage& canvas, const LandmarkShape& shape, const Vec2& position, double rotation,
                    std::uint16_t label) {
    if (std::abs(polygon_area(shape)) < 1.0) {
        log::warn("degenerate polygon (area < 1 px) not rasterized");
        return;
    }
    const LandmarkShape placed = place_shape(shape, position, rotation);
    double y_min = placed.point(0).y(), y_max = y_min;
    for (int k = 1; k < kNumLandmarks; ++k) {
        y_min = std::min(y_min, placed.point(k).y());
        y_max = std::max(y_max, placed.point(k).y());
    }
    const int row_begin = std::max(0, static_cast<int>(std::ceil(y_min)));
    const int row_end = std::min(canvas.height() - 1, static_cast<int>(std::floor(y_max)));

    std::vector<double> xs;
    for (int y = row_begin; y <= row_end; ++y) {
        xs.clear();
        for (int k = 0; k < kNumLandmarks; ++k) {
            const Vec2 p = placed.point(k);
            const Vec2 q = placed.point((k + 1) % kNumLandmarks);
            // Half-open rule so shared vertices count once.
            if ((p.y() <= y && y < q.y()) || (q.y() <= y && y < p.y()))
                xs.push_back(p.x() + (y - p.y()) * (q.x() - p.x()) / (q.y() - p.y()));
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
            const int x0 = std::max(0, static_cast<int>(std::ceil(xs[i])));
            const int x1 = std::min(canvas.width() - 1, static_cast<int>(std::ceil(xs[i + 1])) - 1);
            for (int x = x0; x <= x1; ++x) canvas(x, y) = label;
        }
    }
}

LabelImage rasterize(const LandmarkShape& shape, int width, int height, const Vec2& position, double rotation,
                     std::uint16_t label) {
    LabelImage canvas(width, height, 0);
    rasterize_into(canvas, shape, position, rotation, label);
    return canvas;
}

nlohmann::json to_json(const ShapeModelSet& models) {
    nlohmann::json j;
    j["format"] = "cellsynth-ssm";
    j["version"] = 1;
    j["landmarks"] = kNumLandmarks;
    nlohmann::json stages = nlohmann::json::object();
    for (int s = 0; s < kNumStages; ++s) {
        if (!models[s]) continue;
        const auto& m = *models[s];
        nlohmann::json e;
        e["n_train"] = m.n_train;
        e["components"] = m.eigenvalues.size();
        e["mean"] = base64::encode_f64({m.mean.data(), static_cast<std::size_t>(m.mean.size())});
        e["eigenvalues"] = base64::encode_f64({m.eigenvalues.data(), static_cast<std::size_t>(m.eigenvalues.size())});
        // Column-major: eigenvector i is contiguous.
        e["eigenvectors"] =
            base64::encode_f64({m.eigenvectors.data(), static_cast<std::size_t>(m.eigenvectors.size())});
        stages[std::to_string(s + 1)] = e;
    }
    j["stages"] = stages;
    return j;
}

ShapeModelSet shape_models_from_json(const nlohmann::json& j) {
    ShapeModelSet models;
    try {
        if (j.value("landmarks", kNumLandmarks) != kNumLandmarks) throw ValidationError("landmark count mismatch");
        for (const auto& [key, e] : j.at("stages").items()) {
            const Stage stage = stage_from_int(std::stoll(key));
            StageShapeModel m;
            m.stage = stage;
            m.n_train = e.at("n_train").get<int>();
            const auto mean = base64::decode_f64(e.at("mean").get<std::string>());
            const auto values = base64::decode_f64(e.at("eigenvalues").get<std::string>());
            const auto vectors = base64::decode_f64(e.at("eigenvectors").get<std::string>());
            if (mean.size() != kShapeDim) throw ValidationError("mean must have 120 entries");
            if (vectors.size() != values.size() * kShapeDim) throw ValidationError("eigenvector payload size mismatch");
            m.mean = Eigen::Map<const ShapeVector>(mean.data());
            m.eigenvalues = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
            m.eigenvectors = Eigen::Map<const Eigen::MatrixXd>(vectors.data(), kShapeDim,
                                                               static_cast<Eigen::Index>(values.size()));
            for (Eigen::Index i = 0; i < m.eigenvalues.size(); ++i) {
                if (!(m.eigenvalues[i] >= 0.0)) throw ValidationError("negative eigenvalue");
                if (i > 0 && m.eigenvalues[i] > m.eigenvalues[i - 1]) throw ValidationError("eigenvalues not descending");
            }
            models[index_of(stage)] = std::move(m);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed shape model file: ") + e.what());
    } catch (const std::invalid_argument&) {
        throw ValidationError("malformed stage key in shape model file");
    }
    return models;
}

void save_shape_models(const ShapeModelSet& models, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << to_json(models).dump(2) << '\n';
}

ShapeModelSet load_shape_models(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return shape_models_from_json(j);
}

}  // namespace cellsynth
