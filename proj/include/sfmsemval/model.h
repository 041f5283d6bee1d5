#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace sfmsemval {

using CameraId = std::uint32_t;
using ImageId = std::uint32_t;
using Point2DIdx = std::uint32_t;
using Point3DId = std::uint64_t;

// Stored as -1 in both text and binary encodings.
inline constexpr Point3DId kInvalidPoint3DId =
    std::numeric_limits<Point3DId>::max();

// Numeric values follow the COLMAP model ids.
enum class CameraModel : int {
  kSimplePinhole = 0,
  kPinhole = 1,
  kSimpleRadial = 2,
  kRadial = 3,
};

std::string_view CameraModelName(CameraModel model);
// Throws InputError for names/ids outside the supported set.
CameraModel CameraModelFromName(std::string_view name);
CameraModel CameraModelFromId(int model_id);
std::size_t CameraModelNumParams(CameraModel model);

// Parameter order per model:
//   SIMPLE_PINHOLE f, cx, cy
//   PINHOLE        fx, fy, cx, cy
//   SIMPLE_RADIAL  f, cx, cy, k
//   RADIAL         f, cx, cy, k1, k2
struct Camera {
  CameraId camera_id = 0;
  CameraModel model = CameraModel::kSimplePinhole;
  std::uint64_t width = 0;
  std::uint64_t height = 0;
  std::vector<double> params;

  double FocalX() const;
  double FocalY() const;
  double PrincipalX() const;
  double PrincipalY() const;

  bool operator==(const Camera&) const = default;
};

// Throws InputError describing the first violated invariant.
void VerifyCamera(const Camera& camera);

struct Point2D {
  Eigen::Vector2d xy = Eigen::Vector2d::Zero();
  Point3DId point3d_id = kInvalidPoint3DId;

  bool HasPoint3D() const { return point3d_id != kInvalidPoint3DId; }
  bool operator==(const Point2D&) const = default;
};

struct Image {
  ImageId image_id = 0;
  // (w, x, y, z), Hamilton convention, world-to-camera.
  Eigen::Vector4d qvec = Eigen::Vector4d(1, 0, 0, 0);
  Eigen::Vector3d tvec = Eigen::Vector3d::Zero();
  CameraId camera_id = 0;
  std::string name;
  std::vector<Point2D> points2d;

  std::size_t NumObservations() const;
  bool operator==(const Image&) const = default;
};

struct TrackElement {
  ImageId image_id = 0;
  Point2DIdx point2d_idx = 0;

  auto operator<=>(const TrackElement&) const = default;
};

struct Point3D {
  Point3DId point3d_id = 0;
  Eigen::Vector3d xyz = Eigen::Vector3d::Zero();
  std::array<std::uint8_t, 3> rgb{0, 0, 0};
  double error = -1.0;
  std::vector<TrackElement> track;

  bool operator==(const Point3D&) const = default;
};

// In-memory equivalent of a COLMAP sparse model directory. Ordered maps keep
// every serialization and iteration deterministic.
struct SparseModel {
  std::map<CameraId, Camera> cameras;
  std::map<ImageId, Image> images;
  std::map<Point3DId, Point3D> points;

  std::size_t NumObservations() const;
  bool operator==(const SparseModel&) const = default;
};

// Checks camera/image/point references and that every 2D->3D link agrees
// exactly with the tracks. Throws InputError on the first violation.
void VerifyModel(const SparseModel& model);

// Removes a single observation from a point's track and nulls the image link.
// Returns false when the element was not part of the track.
bool UnlinkObservation(SparseModel& model, Point3DId point_id,
                       const TrackElement& element);

// Deletes a point and nulls every 2D link that referenced it.
void DeletePoint(SparseModel& model, Point3DId point_id);

// Approximate equality used for format agreement checks: integers and names
// exactly, reals within `tolerance`.
bool ModelsNearlyEqual(const SparseModel& a, const SparseModel& b,
                       double tolerance, std::string* difference = nullptr);

}  // namespace sfmsemval
