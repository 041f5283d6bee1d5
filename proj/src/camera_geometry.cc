#include "sfmsemval/camera_geometry.h"

#include <cmath>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "sfmsemval/error.h"

namespace sfmsemval {

Pose Pose::FromImage(const Image& image) {
  return Pose{QuatToRotation(image.qvec), image.tvec};
}

Pose Pose::Inverse() const {
  const Eigen::Matrix3d rt = rotation.transpose();
  return Pose{rt, -rt * translation};
}

Pose Pose::operator*(const Pose& other) const {
  return Pose{rotation * other.rotation,
              rotation * other.translation + translation};
}

Eigen::Matrix3d QuatToRotation(const Eigen::Vector4d& qvec) {
  const double norm = qvec.norm();
  if (!std::isfinite(norm) || norm == 0.0) {
    throw GeometryError("quaternion has zero or non-finite norm");
  }
  const Eigen::Vector4d q = qvec / norm;
  const Eigen::Quaterniond quat(q[0], q[1], q[2], q[3]);
  return quat.toRotationMatrix();
}

Eigen::Vector4d RotationToQuat(const Eigen::Matrix3d& rotation) {
  Eigen::Quaterniond quat(rotation);
  quat.normalize();
  Eigen::Vector4d q(quat.w(), quat.x(), quat.y(), quat.z());
  if (q[0] < 0) q = -q;
  return q;
}

Eigen::Vector4d QuatMultiply(const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
  const Eigen::Quaterniond qa(a[0], a[1], a[2], a[3]);
  const Eigen::Quaterniond qb(b[0], b[1], b[2], b[3]);
  const Eigen::Quaterniond c = qa * qb;
  return {c.w(), c.x(), c.y(), c.z()};
}

Eigen::Matrix3d AxisAngleToRotation(const Eigen::Vector3d& axis_angle) {
  const double angle = axis_angle.norm();
  if (angle == 0.0) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(angle, axis_angle / angle).toRotationMatrix();
}

Eigen::Vector4d AxisAngleToQuat(const Eigen::Vector3d& axis_angle) {
  const double angle = axis_angle.norm();
  if (angle < 1e-12) {
    // First-order expansion keeps tiny finite-difference steps exact.
    Eigen::Vector4d q(1.0, 0.5 * axis_angle.x(), 0.5 * axis_angle.y(),
                      0.5 * axis_angle.z());
    return q / q.norm();
  }
  const double half = 0.5 * angle;
  const Eigen::Vector3d axis = axis_angle / angle;
  return {std::cos(half), std::sin(half) * axis.x(), std::sin(half) * axis.y(),
          std::sin(half) * axis.z()};
}

bool IsRotation(const Eigen::Matrix3d& rotation, double tolerance) {
  const Eigen::Matrix3d residual =
      rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
  return residual.cwiseAbs().maxCoeff() <= tolerance &&
         std::abs(rotation.determinant() - 1.0) <= tolerance;
}

Eigen::Vector3d CameraCenter(const Pose& pose) {
  return -pose.rotation.transpose() * pose.translation;
}

Eigen::Matrix3d CalibrationMatrix(const Camera& camera) {
  Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
  K(0, 0) = camera.FocalX();
  K(1, 1) = camera.FocalY();
  K(0, 2) = camera.PrincipalX();
  K(1, 2) = camera.PrincipalY();
  return K;
}

namespace {

// Radial displacement factor r -> r * (1 + RadialTerm(r^2)).
double RadialTerm(const Camera& camera, double r2) {
  switch (camera.model) {
    case CameraModel::kSimpleRadial:
      return camera.params[3] * r2;
    case CameraModel::kRadial:
      return camera.params[3] * r2 + camera.params[4] * r2 * r2;
    default:
      return 0.0;
  }
}

}  // namespace

Eigen::Vector2d CameraToImage(const Camera& camera, const Eigen::Vector2d& uv) {
  const double radial = RadialTerm(camera, uv.squaredNorm());
  const Eigen::Vector2d distorted = uv * (1.0 + radial);
  return {camera.FocalX() * distorted.x() + camera.PrincipalX(),
          camera.FocalY() * distorted.y() + camera.PrincipalY()};
}

Eigen::Vector2d ImageToCamera(const Camera& camera, const Eigen::Vector2d& xy) {
  const Eigen::Vector2d distorted((xy.x() - camera.PrincipalX()) / camera.FocalX(),
                                  (xy.y() - camera.PrincipalY()) / camera.FocalY());
  if (camera.model == CameraModel::kSimplePinhole ||
      camera.model == CameraModel::kPinhole) {
    return distorted;
  }
  // Fixed-point inversion of uv * (1 + radial(|uv|^2)) = distorted.
  Eigen::Vector2d uv = distorted;
  for (int iter = 0; iter < 100; ++iter) {
    const Eigen::Vector2d next =
        distorted / (1.0 + RadialTerm(camera, uv.squaredNorm()));
    const double change = (next - uv).norm();
    uv = next;
    if (change < 1e-15) break;
  }
  return uv;
}

Eigen::Vector2d Project(const Pose& pose, const Camera& camera,
                        const Eigen::Vector3d& point) {
  const Eigen::Vector3d x_cam = pose.Transform(point);
  if (!(x_cam.z() > kMinDepth)) {
    throw GeometryError("point has non-positive depth " +
                        std::to_string(x_cam.z()) + " in camera");
  }
  return CameraToImage(camera, x_cam.head<2>() / x_cam.z());
}

Eigen::Vector3d Lift(const Pose& pose, const Camera& camera,
                     const Eigen::Vector2d& xy, double depth) {
  const Eigen::Vector2d uv = ImageToCamera(camera, xy);
  const Eigen::Vector3d x_cam(uv.x() * depth, uv.y() * depth, depth);
  return pose.Inverse().Transform(x_cam);
}

ModelStats StatsFromCounts(std::int64_t cameras, std::int64_t images,
                           std::int64_t points, std::int64_t observations) {
  ModelStats stats;
  stats.cameras = cameras;
  stats.images = images;
  stats.registered_images = images;
  stats.points = points;
  stats.observations = observations;
  if (points > 0) {
    stats.mean_track_length =
        static_cast<double>(observations) / static_cast<double>(points);
  }
  if (images > 0) {
    stats.mean_observations_per_image =
        static_cast<double>(observations) / static_cast<double>(images);
  }
  return stats;
}

ModelStats MeanReprojectionStats(const SparseModel& model) {
  ModelStats stats = StatsFromCounts(
      static_cast<std::int64_t>(model.cameras.size()),
      static_cast<std::int64_t>(model.images.size()),
      static_cast<std::int64_t>(model.points.size()),
      static_cast<std::int64_t>(model.NumObservations()));

  std::map<ImageId, Pose> poses;
  for (const auto& [id, image] : model.images) {
    poses.emplace(id, Pose::FromImage(image));
  }
  double error_sum = 0.0;
  std::int64_t counted = 0;
  for (const auto& [id, point] : model.points) {
    for (const TrackElement& el : point.track) {
      const Image& image = model.images.at(el.image_id);
      const Camera& camera = model.cameras.at(image.camera_id);
      const Eigen::Vector3d x_cam = poses.at(el.image_id).Transform(point.xyz);
      if (!(x_cam.z() > kMinDepth)) {
        ++stats.unprojectable_observations;
        continue;
      }
      const Eigen::Vector2d projected =
          CameraToImage(camera, x_cam.head<2>() / x_cam.z());
      error_sum += (projected - image.points2d.at(el.point2d_idx).xy).norm();
      ++counted;
    }
  }
  if (counted > 0) {
    stats.mean_reprojection_error = error_sum / static_cast<double>(counted);
  }
  return stats;
}

}  // namespace sfmsemval
