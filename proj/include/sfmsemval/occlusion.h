#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "sfmsemval/model.h"
#include "sfmsemval/planes.h"

namespace sfmsemval {

enum class VerdictStatus { kValid, kOccluded };

struct OcclusionVerdict {
  Point3DId point3d_id = 0;
  ImageId image_id = 0;
  VerdictStatus status = VerdictStatus::kValid;
  // Index into the plane list of the nearest blocking plane.
  std::optional<std::size_t> plane_id;
  // Distance from the camera centre to the blocking intersection.
  std::optional<double> d;

  bool operator==(const OcclusionVerdict&) const = default;
};

struct OcclusionOptions {
  // Defaults to max(1e-6, 1e-4 * scene diameter).
  std::optional<double> depth_margin;
  // Overrides every plane's own margin when set.
  std::optional<double> extent_margin;
  // A point is erroneous when at least this fraction of its rays is blocked.
  double erroneous_fraction = 0.5;
};

struct OcclusionSummary {
  std::int64_t points_checked = 0;
  std::int64_t rays_checked = 0;
  std::int64_t rays_occluded = 0;
  std::int64_t erroneous_points = 0;
  std::int64_t opaque_planes = 0;
  double depth_margin = 0.0;

  bool operator==(const OcclusionSummary&) const = default;
};

struct OcclusionResult {
  // Ordered by (point3d_id, image_id).
  std::vector<OcclusionVerdict> verdicts;
  std::vector<Point3DId> erroneous_points;
  OcclusionSummary summary;
};

// Bounding-box diagonal of all points and camera centres.
double SceneDiameter(const SparseModel& model);

// Occlusion test of the single ray camera_center -> point against one plane.
// Returns the intersection distance when the plane blocks the ray.
std::optional<double> BlockingDistance(const Eigen::Vector3d& camera_center,
                                       const Eigen::Vector3d& point,
                                       const LabeledPlane& plane,
                                       double depth_margin,
                                       double extent_margin);

// Traces every observation ray against every opaque plane. A ray is occluded
// when a plane not supporting the point crosses it at depth_margin < d <
// |X - C| - depth_margin inside the plane's grown extent. Throws
// GeometryError when a point coincides with an observing camera centre.
OcclusionResult OcclusionValidate(const SparseModel& model,
                                  std::span<const LabeledPlane> planes,
                                  const OcclusionOptions& options = {});

// "point3d_id,image_id,status,plane_id,d"; plane_id and d are empty for valid
// rays.
void WriteVerdictsCsv(std::span<const OcclusionVerdict> verdicts,
                      std::ostream& out);

}  // namespace sfmsemval
