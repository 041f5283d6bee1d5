#include "sfmsemval/occlusion.h"

#include <algorithm>
#include <cmath>

#include "sfmsemval/camera_geometry.h"
#include "sfmsemval/error.h"
#include "sfmsemval/parallel.h"
#include "sfmsemval/text_format.h"

namespace sfmsemval {

double SceneDiameter(const SparseModel& model) {
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(HUGE_VAL);
  Eigen::Vector3d hi = Eigen::Vector3d::Constant(-HUGE_VAL);
  bool any = false;
  auto extend = [&](const Eigen::Vector3d& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
    any = true;
  };
  for (const auto& [id, point] : model.points) extend(point.xyz);
  for (const auto& [id, image] : model.images) {
    extend(CameraCenter(Pose::FromImage(image)));
  }
  return any ? (hi - lo).norm() : 0.0;
}

std::optional<double> BlockingDistance(const Eigen::Vector3d& camera_center,
                                       const Eigen::Vector3d& point,
                                       const LabeledPlane& plane,
                                       double depth_margin,
                                       double extent_margin) {
  if (!plane.opaque) return std::nullopt;
  const Eigen::Vector3d ray = point - camera_center;
  const double length = ray.norm();
  const Eigen::Vector3d direction = ray / length;
  const auto d = RayPlaneIntersection(camera_center, direction, plane);
  if (!d || *d <= depth_margin || *d >= length - depth_margin) {
    return std::nullopt;
  }
  if (!plane.WithinExtent(camera_center + *d * direction, extent_margin)) {
    return std::nullopt;
  }
  return d;
}

OcclusionResult OcclusionValidate(const SparseModel& model,
                                  std::span<const LabeledPlane> planes,
                                  const OcclusionOptions& options) {
  OcclusionResult result;
  const double depth_margin = options.depth_margin.value_or(
      std::max(1e-6, 1e-4 * SceneDiameter(model)));
  result.summary.depth_margin = depth_margin;

  std::vector<std::size_t> opaque;
  std::vector<std::vector<Point3DId>> support(planes.size());
  for (std::size_t j = 0; j < planes.size(); ++j) {
    if (!planes[j].opaque) continue;
    opaque.push_back(j);
    support[j] = planes[j].support;
    std::sort(support[j].begin(), support[j].end());
  }
  result.summary.opaque_planes = static_cast<std::int64_t>(opaque.size());

  std::map<ImageId, Eigen::Vector3d> centers;
  for (const auto& [id, image] : model.images) {
    centers[id] = CameraCenter(Pose::FromImage(image));
  }

  std::vector<const Point3D*> points;
  points.reserve(model.points.size());
  for (const auto& [id, point] : model.points) points.push_back(&point);

  std::vector<std::vector<OcclusionVerdict>> per_point(points.size());
  ParallelFor(points.size(), [&](std::size_t i) {
    const Point3D& point = *points[i];
    auto& verdicts = per_point[i];
    for (const auto& element : point.track) {
      const auto center = centers.find(element.image_id);
      if (center == centers.end()) {
        throw InputError("point " + std::to_string(point.point3d_id) +
                         " references missing image " +
                         std::to_string(element.image_id));
      }
      const Eigen::Vector3d& c = center->second;
      const double scale = std::max({1.0, c.norm(), point.xyz.norm()});
      if ((point.xyz - c).norm() <= 1e-12 * scale) {
        throw GeometryError("point " + std::to_string(point.point3d_id) +
                            " coincides with the centre of image " +
                            std::to_string(element.image_id));
      }
      OcclusionVerdict verdict;
      verdict.point3d_id = point.point3d_id;
      verdict.image_id = element.image_id;
      for (const std::size_t j : opaque) {
        if (std::binary_search(support[j].begin(), support[j].end(),
                               point.point3d_id)) {
          continue;
        }
        const auto d = BlockingDistance(
            c, point.xyz, planes[j], depth_margin,
            options.extent_margin.value_or(planes[j].margin));
        if (d && (!verdict.d || *d < *verdict.d)) {
          verdict.status = VerdictStatus::kOccluded;
          verdict.plane_id = j;
          verdict.d = d;
        }
      }
      verdicts.push_back(verdict);
    }
    std::stable_sort(verdicts.begin(), verdicts.end(),
                     [](const OcclusionVerdict& a, const OcclusionVerdict& b) {
                       return a.image_id < b.image_id;
                     });
  });

  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& verdicts = per_point[i];
    std::int64_t occluded = 0;
    for (const auto& verdict : verdicts) {
      if (verdict.status == VerdictStatus::kOccluded) ++occluded;
    }
    ++result.summary.points_checked;
    result.summary.rays_checked += static_cast<std::int64_t>(verdicts.size());
    result.summary.rays_occluded += occluded;
    if (occluded > 0 &&
        static_cast<double>(occluded) >=
            options.erroneous_fraction * static_cast<double>(verdicts.size())) {
      result.erroneous_points.push_back(points[i]->point3d_id);
    }
    result.verdicts.insert(result.verdicts.end(), verdicts.begin(),
                           verdicts.end());
  }
  result.summary.erroneous_points =
      static_cast<std::int64_t>(result.erroneous_points.size());
  return result;
}

void WriteVerdictsCsv(std::span<const OcclusionVerdict> verdicts,
                      std::ostream& out) {
  out << "point3d_id,image_id,status,plane_id,d\n";
  for (const auto& v : verdicts) {
    out << v.point3d_id << ',' << v.image_id << ','
        << (v.status == VerdictStatus::kOccluded ? "occluded" : "valid") << ',';
    if (v.plane_id) out << *v.plane_id;
    out << ',';
    if (v.d) out << FormatDouble(*v.d);
    out << '\n';
  }
}

}  // namespace sfmsemval
