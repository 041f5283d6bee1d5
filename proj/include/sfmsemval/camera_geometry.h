#pragma once

#include <optional>

#include <Eigen/Core>

#include "sfmsemval/model.h"

namespace sfmsemval {

// Depths at or below this are rejected by Project().
inline constexpr double kMinDepth = 1e-12;

// Rigid world-to-camera transform: x_cam = rotation * x_world + translation.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose FromImage(const Image& image);

  Pose Inverse() const;
  // (this * other)(x) = this(other(x)).
  Pose operator*(const Pose& other) const;
  Eigen::Vector3d Transform(const Eigen::Vector3d& x) const {
    return rotation * x + translation;
  }
};

// Normalizes `qvec` (w, x, y, z) and converts it to a rotation matrix.
// Throws GeometryError for a zero or non-finite quaternion.
Eigen::Matrix3d QuatToRotation(const Eigen::Vector4d& qvec);
// Unit quaternion with non-negative w.
Eigen::Vector4d RotationToQuat(const Eigen::Matrix3d& rotation);
// Hamilton product of two (w, x, y, z) quaternions.
Eigen::Vector4d QuatMultiply(const Eigen::Vector4d& a, const Eigen::Vector4d& b);
// Rotation by angle |axis_angle| about axis_angle / |axis_angle|.
Eigen::Matrix3d AxisAngleToRotation(const Eigen::Vector3d& axis_angle);
Eigen::Vector4d AxisAngleToQuat(const Eigen::Vector3d& axis_angle);

bool IsRotation(const Eigen::Matrix3d& rotation, double tolerance = 1e-9);

// Camera centre in world coordinates, -R^T t.
Eigen::Vector3d CameraCenter(const Pose& pose);

// Upper-triangular calibration matrix of the linear part of the model.
Eigen::Matrix3d CalibrationMatrix(const Camera& camera);

// Normalized image plane -> distorted normalized -> pixels.
Eigen::Vector2d CameraToImage(const Camera& camera, const Eigen::Vector2d& uv);
// Pixels -> undistorted normalized coordinates (iterative for radial models).
Eigen::Vector2d ImageToCamera(const Camera& camera, const Eigen::Vector2d& xy);

// Projects a world point. Throws GeometryError when the camera-frame depth is
// not greater than kMinDepth.
Eigen::Vector2d Project(const Pose& pose, const Camera& camera,
                        const Eigen::Vector3d& point);

// World point at camera-frame depth `depth` whose projection is `xy`.
Eigen::Vector3d Lift(const Pose& pose, const Camera& camera,
                     const Eigen::Vector2d& xy, double depth);

// Row labels follow the reconstruction statistics tables: cameras, images,
// registered images, points, observations and the three means. Means are
// empty when their denominator is zero.
struct ModelStats {
  std::int64_t cameras = 0;
  std::int64_t images = 0;
  std::int64_t registered_images = 0;
  std::int64_t points = 0;
  std::int64_t observations = 0;
  std::optional<double> mean_track_length;
  std::optional<double> mean_observations_per_image;
  std::optional<double> mean_reprojection_error;
  // Observations skipped by the reprojection mean (non-positive depth).
  std::int64_t unprojectable_observations = 0;

  bool operator==(const ModelStats&) const = default;
};

// Fills the count-derived means; reprojection error is left untouched.
ModelStats StatsFromCounts(std::int64_t cameras, std::int64_t images,
                           std::int64_t points, std::int64_t observations);

ModelStats MeanReprojectionStats(const SparseModel& model);

}  // namespace sfmsemval
