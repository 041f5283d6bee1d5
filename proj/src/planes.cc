#include "sfmsemval/planes.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "sfmsemval/error.h"
#include "sfmsemval/filters.h"
#include "sfmsemval/random.h"
#include "sfmsemval/text_format.h"

namespace fs = std::filesystem;

namespace sfmsemval {

Eigen::Vector2d LabeledPlane::InPlane(const Eigen::Vector3d& p) const {
  const auto [u, v] = PlaneBasis(normal);
  const Eigen::Vector3d rel = p - origin;
  return {rel.dot(u), rel.dot(v)};
}

bool LabeledPlane::WithinExtent(const Eigen::Vector3d& p, double grow) const {
  const Eigen::Vector2d q = InPlane(p);
  return std::abs(q.x()) <= extent_u + grow && std::abs(q.y()) <= extent_v + grow;
}

double LabeledPlane::Diameter() const {
  return 2.0 * std::hypot(extent_u, extent_v);
}

std::pair<Eigen::Vector3d, Eigen::Vector3d> PlaneBasis(
    const Eigen::Vector3d& normal) {
  const Eigen::Vector3d n = normal.normalized();
  int axis = 0;
  n.cwiseAbs().minCoeff(&axis);
  const Eigen::Vector3d u = n.cross(Eigen::Vector3d::Unit(axis)).normalized();
  const Eigen::Vector3d v = n.cross(u);
  return {u, v};
}

Eigen::Vector3d CanonicalNormal(const Eigen::Vector3d& normal) {
  const Eigen::Vector3d n = normal.normalized();
  int axis = 0;
  n.cwiseAbs().maxCoeff(&axis);
  return n(axis) < 0 ? Eigen::Vector3d(-n) : n;
}

namespace {

// Sets origin and extent to the bounding rectangle of `points` projected on
// the plane through `anchor`.
void SetExtent(LabeledPlane& plane, const Eigen::Vector3d& anchor,
               std::span<const Eigen::Vector3d> points,
               std::span<const std::size_t> indices) {
  const auto [u, v] = PlaneBasis(plane.normal);
  double u_min = 0, u_max = 0, v_min = 0, v_max = 0;
  bool first = true;
  for (const std::size_t i : indices) {
    const Eigen::Vector3d rel = points[i] - anchor;
    const double a = rel.dot(u);
    const double b = rel.dot(v);
    if (first) {
      u_min = u_max = a;
      v_min = v_max = b;
      first = false;
    } else {
      u_min = std::min(u_min, a);
      u_max = std::max(u_max, a);
      v_min = std::min(v_min, b);
      v_max = std::max(v_max, b);
    }
  }
  plane.origin = anchor + 0.5 * (u_min + u_max) * u + 0.5 * (v_min + v_max) * v;
  plane.extent_u = 0.5 * (u_max - u_min);
  plane.extent_v = 0.5 * (v_max - v_min);
  plane.margin = kDefaultExtentMarginFraction * plane.Diameter();
}

struct LsqPlane {
  Eigen::Vector3d normal;
  Eigen::Vector3d centroid;
  Eigen::Vector3d singular_values;
};

LsqPlane FitLsq(std::span<const Eigen::Vector3d> points,
                std::span<const std::size_t> indices) {
  LsqPlane fit;
  fit.centroid.setZero();
  for (const std::size_t i : indices) fit.centroid += points[i];
  fit.centroid /= static_cast<double>(indices.size());
  Eigen::MatrixXd centered(indices.size(), 3);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    centered.row(static_cast<Eigen::Index>(k)) =
        (points[indices[k]] - fit.centroid).transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeFullV);
  fit.singular_values = svd.singularValues();
  fit.normal = CanonicalNormal(svd.matrixV().col(2));
  return fit;
}

bool Collinear(const Eigen::Vector3d& s) {
  return s(0) <= 0.0 || s(1) <= 1e-12 * s(0);
}

std::vector<std::size_t> InliersOf(std::span<const Eigen::Vector3d> points,
                                   const Eigen::Vector3d& normal,
                                   const Eigen::Vector3d& origin, double eps) {
  std::vector<std::size_t> inliers;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (std::abs((points[i] - origin).dot(normal)) <= eps) inliers.push_back(i);
  }
  return inliers;
}

}  // namespace

LabeledPlane FitPlaneLeastSquares(std::span<const Eigen::Vector3d> points) {
  if (points.size() < 3) {
    throw GeometryError("plane fit needs at least 3 points, got " +
                        std::to_string(points.size()));
  }
  std::vector<std::size_t> all(points.size());
  std::iota(all.begin(), all.end(), 0);
  const LsqPlane fit = FitLsq(points, all);
  if (Collinear(fit.singular_values)) {
    throw GeometryError("plane fit input is collinear");
  }
  LabeledPlane plane;
  plane.normal = fit.normal;
  SetExtent(plane, fit.centroid, points, all);
  return plane;
}

PlaneFit FitPlaneRansac(std::span<const Eigen::Vector3d> points, double eps,
                        int trials, std::uint64_t seed) {
  if (points.size() < 3) {
    throw GeometryError("plane fit needs at least 3 points, got " +
                        std::to_string(points.size()));
  }
  if (!(eps > 0.0)) throw GeometryError("plane fit eps must be positive");
  std::vector<std::size_t> all(points.size());
  std::iota(all.begin(), all.end(), 0);
  const LsqPlane global = FitLsq(points, all);
  if (Collinear(global.singular_values)) {
    throw GeometryError("plane fit input is collinear");
  }
  const double scale = global.singular_values(0);

  Rng rng(seed);
  std::vector<std::size_t> best;
  Eigen::Vector3d best_normal = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d best_origin = Eigen::Vector3d::Zero();
  for (int trial = 0; trial < trials; ++trial) {
    const auto sample = rng.Sample(points.size(), 3);
    const Eigen::Vector3d& a = points[sample[0]];
    const Eigen::Vector3d cross =
        (points[sample[1]] - a).cross(points[sample[2]] - a);
    if (cross.norm() <= 1e-12 * scale * scale) continue;
    const Eigen::Vector3d normal = cross.normalized();
    auto inliers = InliersOf(points, normal, a, eps);
    if (inliers.size() > best.size()) {
      best = std::move(inliers);
      best_normal = normal;
      best_origin = a;
    }
  }
  if (best.size() < 3) {
    throw GeometryError("no plane with at least 3 inliers");
  }

  const LsqPlane refit = FitLsq(points, best);
  if (!Collinear(refit.singular_values)) {
    auto refit_inliers = InliersOf(points, refit.normal, refit.centroid, eps);
    if (refit_inliers.size() >= best.size()) {
      best = std::move(refit_inliers);
      best_normal = refit.normal;
      best_origin = refit.centroid;
    }
  }

  PlaneFit result;
  result.plane.normal = CanonicalNormal(best_normal);
  SetExtent(result.plane, best_origin, points, best);
  result.inliers = std::move(best);
  return result;
}

std::vector<std::vector<std::size_t>> ClusterPoints(
    std::span<const Eigen::Vector3d> points, double radius) {
  const std::size_t n = points.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  auto unite = [&](std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };

  if (radius > 0.0) {
    struct CellHash {
      std::size_t operator()(const Eigen::Vector3i& c) const {
        return (static_cast<std::size_t>(c.x()) * 73856093u) ^
               (static_cast<std::size_t>(c.y()) * 19349663u) ^
               (static_cast<std::size_t>(c.z()) * 83492791u);
      }
    };
    struct CellEq {
      bool operator()(const Eigen::Vector3i& a, const Eigen::Vector3i& b) const {
        return a == b;
      }
    };
    std::unordered_map<Eigen::Vector3i, std::vector<std::size_t>, CellHash, CellEq>
        grid;
    auto cell_of = [&](const Eigen::Vector3d& p) {
      return Eigen::Vector3i((p / radius).array().floor().cast<int>());
    };
    for (std::size_t i = 0; i < n; ++i) grid[cell_of(points[i])].push_back(i);
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::Vector3i c = cell_of(points[i]);
      for (int dx = -1; dx <= 1; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dz = -1; dz <= 1; ++dz) {
            const auto it = grid.find(c + Eigen::Vector3i(dx, dy, dz));
            if (it == grid.end()) continue;
            for (const std::size_t j : it->second) {
              if (j > i && (points[i] - points[j]).norm() < radius) unite(i, j);
            }
          }
        }
      }
    }
  }

  std::map<std::size_t, std::vector<std::size_t>> components;
  for (std::size_t i = 0; i < n; ++i) components[find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> clusters;
  clusters.reserve(components.size());
  for (auto& [root, members] : components) clusters.push_back(std::move(members));
  return clusters;
}

std::vector<LabeledPlane> ExtractSemanticPlanes(
    const SparseModel& model, std::span<const LabeledObservation> observations,
    const ClassTable& table, const PlaneExtractionOptions& options) {
  std::vector<ClassId> classes =
      options.classes.empty() ? table.OpaqueIds() : options.classes;
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

  const ObservationLabels labels(observations);
  std::map<ClassId, std::vector<const Point3D*>> by_class;
  for (const auto& [id, point] : model.points) {
    if (point.track.empty()) continue;
    const auto track_labels = labels.TrackLabels(point, false);
    const ClassId winner = MajorityLabel(track_labels).winner;
    if (std::binary_search(classes.begin(), classes.end(), winner)) {
      by_class[winner].push_back(&point);
    }
  }

  std::vector<LabeledPlane> planes;
  std::uint64_t fit_index = 0;
  for (const ClassId class_id : classes) {
    const auto it = by_class.find(class_id);
    if (it == by_class.end()) continue;
    std::vector<Eigen::Vector3d> xyz;
    xyz.reserve(it->second.size());
    for (const Point3D* point : it->second) xyz.push_back(point->xyz);
    for (const auto& cluster : ClusterPoints(xyz, options.cluster_radius)) {
      if (cluster.size() < static_cast<std::size_t>(options.min_inliers)) continue;
      std::vector<Eigen::Vector3d> cluster_xyz;
      cluster_xyz.reserve(cluster.size());
      for (const std::size_t i : cluster) cluster_xyz.push_back(xyz[i]);
      PlaneFit fit;
      try {
        fit = FitPlaneRansac(cluster_xyz, options.eps, options.trials,
                             options.seed + fit_index++);
      } catch (const GeometryError&) {
        continue;
      }
      if (fit.inliers.size() < static_cast<std::size_t>(options.min_inliers)) {
        continue;
      }
      LabeledPlane plane = std::move(fit.plane);
      plane.class_id = class_id;
      plane.opaque = table.IsOpaque(class_id);
      for (const std::size_t i : cluster) {
        plane.support.push_back(it->second[i]->point3d_id);
      }
      std::sort(plane.support.begin(), plane.support.end());
      planes.push_back(std::move(plane));
    }
  }
  return planes;
}

std::optional<double> RayPlaneIntersection(const Eigen::Vector3d& origin,
                                           const Eigen::Vector3d& direction,
                                           const LabeledPlane& plane) {
  const double denom = direction.dot(plane.normal);
  if (std::abs(denom) <= 1e-12) return std::nullopt;
  return (plane.origin - origin).dot(plane.normal) / denom;
}

std::vector<LabeledPlane> ReadPlanes(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open plane file " + path.string());
  std::vector<LabeledPlane> planes;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string trimmed(Trim(line));
    if (trimmed.empty() || trimmed[0] == '#') continue;
    const std::string where = path.string() + ":" + std::to_string(line_number);
    const auto tokens = SplitWhitespace(trimmed);
    if (tokens.size() != 11) {
      throw InputError(where + ": expected 11 fields, got " +
                       std::to_string(tokens.size()));
    }
    double values[11];
    for (int k : {0, 1, 2, 3, 4, 5, 8, 9, 10}) {
      if (!ParseDouble(tokens[k], &values[k]) || !std::isfinite(values[k])) {
        throw InputError(where + ": bad number '" + std::string(tokens[k]) + "'");
      }
    }
    std::int64_t class_id = 0;
    if (!ParseInt64(tokens[6], &class_id) || class_id < 0 || class_id > 255) {
      throw InputError(where + ": bad class id '" + std::string(tokens[6]) + "'");
    }
    LabeledPlane plane;
    if (tokens[7] == "1" || tokens[7] == "true") {
      plane.opaque = true;
    } else if (tokens[7] == "0" || tokens[7] == "false") {
      plane.opaque = false;
    } else {
      throw InputError(where + ": bad opaque flag '" + std::string(tokens[7]) + "'");
    }
    const Eigen::Vector3d normal(values[0], values[1], values[2]);
    if (normal.norm() <= 1e-12) throw InputError(where + ": zero plane normal");
    if (values[8] < 0 || values[9] < 0 || values[10] < 0) {
      throw InputError(where + ": negative extent or margin");
    }
    plane.normal = normal.normalized();
    plane.origin = Eigen::Vector3d(values[3], values[4], values[5]);
    plane.class_id = static_cast<ClassId>(class_id);
    plane.extent_u = values[8];
    plane.extent_v = values[9];
    plane.margin = values[10];
    planes.push_back(std::move(plane));
  }
  return planes;
}

void WritePlanes(std::span<const LabeledPlane> planes, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << "# nx ny nz px py pz class_id opaque extent_u extent_v margin\n";
  for (const auto& p : planes) {
    out << FormatDouble(p.normal.x()) << ' ' << FormatDouble(p.normal.y()) << ' '
        << FormatDouble(p.normal.z()) << ' ' << FormatDouble(p.origin.x()) << ' '
        << FormatDouble(p.origin.y()) << ' ' << FormatDouble(p.origin.z()) << ' '
        << p.class_id << ' ' << (p.opaque ? 1 : 0) << ' '
        << FormatDouble(p.extent_u) << ' ' << FormatDouble(p.extent_v) << ' '
        << FormatDouble(p.margin) << '\n';
  }
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace sfmsemval
