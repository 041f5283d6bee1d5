#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "sfmsemval/model.h"
#include "sfmsemval/semantics.h"

namespace sfmsemval {

// Plane (p - origin) . normal = 0 with a rectangular extent centred at
// `origin`: half-widths extent_u / extent_v along the in-plane basis returned
// by PlaneBasis(normal), grown by `margin` when testing containment.
struct LabeledPlane {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  ClassId class_id = kUnknownClass;
  bool opaque = false;
  double extent_u = 0.0;
  double extent_v = 0.0;
  double margin = 0.0;
  // Points the plane was fitted to; a plane never occludes its own support.
  std::vector<Point3DId> support;

  double SignedDistance(const Eigen::Vector3d& p) const {
    return (p - origin).dot(normal);
  }
  // In-plane coordinates of `p` relative to `origin`.
  Eigen::Vector2d InPlane(const Eigen::Vector3d& p) const;
  bool WithinExtent(const Eigen::Vector3d& p, double margin) const;
  double Diameter() const;
};

// Deterministic orthonormal (u, v) with u x v = normal.
std::pair<Eigen::Vector3d, Eigen::Vector3d> PlaneBasis(
    const Eigen::Vector3d& normal);

// Normal sign convention: largest-magnitude component positive.
Eigen::Vector3d CanonicalNormal(const Eigen::Vector3d& normal);

struct PlaneFit {
  LabeledPlane plane;
  std::vector<std::size_t> inliers;  // ascending indices into the input
};

// Extent margin assigned to fitted planes, as a fraction of their diameter.
inline constexpr double kDefaultExtentMarginFraction = 0.02;

// Three-point RANSAC with least-squares refit on the consensus set. The
// plane's class is left UNKNOWN for the caller to assign. Throws
// GeometryError for < 3 points, collinear input, or no plane with 3 inliers.
PlaneFit FitPlaneRansac(std::span<const Eigen::Vector3d> points, double eps,
                        int trials, std::uint64_t seed);

// Least-squares plane through all `points` (>= 3, not collinear).
LabeledPlane FitPlaneLeastSquares(std::span<const Eigen::Vector3d> points);

struct PlaneExtractionOptions {
  double eps = 0.05;
  int min_inliers = 10;
  // Cluster linkage distance; points closer than this share a cluster.
  double cluster_radius = 0.5;
  int trials = 500;
  std::uint64_t seed = 0;
  // Classes to fit; all opaque classes of the table when empty.
  std::vector<ClassId> classes;
};

// Groups points by majority label, splits each requested class into
// single-linkage clusters and fits one plane per cluster with at least
// `min_inliers` points (and inliers).
std::vector<LabeledPlane> ExtractSemanticPlanes(
    const SparseModel& model, std::span<const LabeledObservation> observations,
    const ClassTable& table, const PlaneExtractionOptions& options);

// Connected components under distance < radius. Component ids follow the
// smallest member index.
std::vector<std::vector<std::size_t>> ClusterPoints(
    std::span<const Eigen::Vector3d> points, double radius);

// d such that origin + d * direction lies on the plane; empty when
// |direction . normal| <= 1e-12.
std::optional<double> RayPlaneIntersection(const Eigen::Vector3d& origin,
                                           const Eigen::Vector3d& direction,
                                           const LabeledPlane& plane);

// One plane per line: "nx ny nz px py pz class_id opaque extent_u extent_v
// margin". Support ids are not stored.
std::vector<LabeledPlane> ReadPlanes(const std::filesystem::path& path);
void WritePlanes(std::span<const LabeledPlane> planes,
                 const std::filesystem::path& path);

}  // namespace sfmsemval
