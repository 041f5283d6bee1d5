#include "sfmsemval/model.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "sfmsemval/error.h"

namespace sfmsemval {

std::string_view CameraModelName(CameraModel model) {
  switch (model) {
    case CameraModel::kSimplePinhole: return "SIMPLE_PINHOLE";
    case CameraModel::kPinhole: return "PINHOLE";
    case CameraModel::kSimpleRadial: return "SIMPLE_RADIAL";
    case CameraModel::kRadial: return "RADIAL";
  }
  return "UNKNOWN";
}

CameraModel CameraModelFromName(std::string_view name) {
  for (int id = 0; id <= 3; ++id) {
    const auto model = static_cast<CameraModel>(id);
    if (CameraModelName(model) == name) return model;
  }
  throw InputError("unknown camera model '" + std::string(name) + "'");
}

CameraModel CameraModelFromId(int model_id) {
  if (model_id < 0 || model_id > 3) {
    throw InputError("unknown camera model id " + std::to_string(model_id));
  }
  return static_cast<CameraModel>(model_id);
}

std::size_t CameraModelNumParams(CameraModel model) {
  switch (model) {
    case CameraModel::kSimplePinhole: return 3;
    case CameraModel::kPinhole: return 4;
    case CameraModel::kSimpleRadial: return 4;
    case CameraModel::kRadial: return 5;
  }
  return 0;
}

double Camera::FocalX() const { return params.at(0); }
double Camera::FocalY() const {
  return model == CameraModel::kPinhole ? params.at(1) : params.at(0);
}
double Camera::PrincipalX() const {
  return model == CameraModel::kPinhole ? params.at(2) : params.at(1);
}
double Camera::PrincipalY() const {
  return model == CameraModel::kPinhole ? params.at(3) : params.at(2);
}

void VerifyCamera(const Camera& camera) {
  const std::string where = "camera " + std::to_string(camera.camera_id);
  if (camera.params.size() != CameraModelNumParams(camera.model)) {
    throw InputError(where + ": " + std::string(CameraModelName(camera.model)) +
                     " expects " +
                     std::to_string(CameraModelNumParams(camera.model)) +
                     " params, got " + std::to_string(camera.params.size()));
  }
  if (camera.width == 0 || camera.height == 0) {
    throw InputError(where + ": width and height must be positive");
  }
  for (const double p : camera.params) {
    if (!std::isfinite(p)) throw InputError(where + ": non-finite parameter");
  }
  if (!(camera.FocalX() > 0) || !(camera.FocalY() > 0)) {
    throw InputError(where + ": focal lengths must be positive");
  }
}

std::size_t Image::NumObservations() const {
  return static_cast<std::size_t>(
      std::count_if(points2d.begin(), points2d.end(),
                    [](const Point2D& p) { return p.HasPoint3D(); }));
}

std::size_t SparseModel::NumObservations() const {
  std::size_t total = 0;
  for (const auto& [id, point] : points) total += point.track.size();
  return total;
}

void VerifyModel(const SparseModel& model) {
  for (const auto& [id, camera] : model.cameras) {
    if (id != camera.camera_id) {
      throw InputError("camera key " + std::to_string(id) +
                       " does not match camera_id");
    }
    VerifyCamera(camera);
  }
  for (const auto& [id, image] : model.images) {
    const std::string where = "image " + std::to_string(id);
    if (id != image.image_id) throw InputError(where + ": key mismatch");
    if (!model.cameras.count(image.camera_id)) {
      throw InputError(where + ": unknown camera " +
                       std::to_string(image.camera_id));
    }
    for (std::size_t idx = 0; idx < image.points2d.size(); ++idx) {
      const Point2D& p2 = image.points2d[idx];
      if (!p2.HasPoint3D()) continue;
      const auto it = model.points.find(p2.point3d_id);
      if (it == model.points.end()) {
        throw InputError(where + ", point2d " + std::to_string(idx) +
                         ": dangling point3d id " +
                         std::to_string(p2.point3d_id));
      }
      const TrackElement element{id, static_cast<Point2DIdx>(idx)};
      const auto& track = it->second.track;
      if (std::find(track.begin(), track.end(), element) == track.end()) {
        throw InputError(where + ", point2d " + std::to_string(idx) +
                         ": point " + std::to_string(p2.point3d_id) +
                         " has no matching track element");
      }
    }
  }
  for (const auto& [id, point] : model.points) {
    const std::string where = "point " + std::to_string(id);
    if (id != point.point3d_id) throw InputError(where + ": key mismatch");
    if (point.track.empty()) throw InputError(where + ": empty track");
    std::set<TrackElement> seen;
    for (const TrackElement& el : point.track) {
      if (!seen.insert(el).second) {
        throw InputError(where + ": duplicate track element (" +
                         std::to_string(el.image_id) + ", " +
                         std::to_string(el.point2d_idx) + ")");
      }
      const auto image = model.images.find(el.image_id);
      if (image == model.images.end()) {
        throw InputError(where + ": track references unknown image " +
                         std::to_string(el.image_id));
      }
      if (el.point2d_idx >= image->second.points2d.size()) {
        throw InputError(where + ": track index " +
                         std::to_string(el.point2d_idx) +
                         " out of range for image " +
                         std::to_string(el.image_id));
      }
      if (image->second.points2d[el.point2d_idx].point3d_id != id) {
        throw InputError(where + ": image " + std::to_string(el.image_id) +
                         " point2d " + std::to_string(el.point2d_idx) +
                         " does not link back");
      }
    }
  }
}

bool UnlinkObservation(SparseModel& model, Point3DId point_id,
                       const TrackElement& element) {
  auto point = model.points.find(point_id);
  if (point == model.points.end()) return false;
  auto& track = point->second.track;
  const auto it = std::find(track.begin(), track.end(), element);
  if (it == track.end()) return false;
  track.erase(it);
  auto image = model.images.find(element.image_id);
  if (image != model.images.end() &&
      element.point2d_idx < image->second.points2d.size()) {
    Point2D& p2 = image->second.points2d[element.point2d_idx];
    if (p2.point3d_id == point_id) p2.point3d_id = kInvalidPoint3DId;
  }
  return true;
}

void DeletePoint(SparseModel& model, Point3DId point_id) {
  auto point = model.points.find(point_id);
  if (point == model.points.end()) return;
  for (const TrackElement& el : point->second.track) {
    auto image = model.images.find(el.image_id);
    if (image == model.images.end() ||
        el.point2d_idx >= image->second.points2d.size()) {
      continue;
    }
    Point2D& p2 = image->second.points2d[el.point2d_idx];
    if (p2.point3d_id == point_id) p2.point3d_id = kInvalidPoint3DId;
  }
  model.points.erase(point);
}

namespace {

bool Near(double a, double b, double tolerance) {
  return std::abs(a - b) <= tolerance;
}

template <typename Derived>
bool NearVec(const Eigen::MatrixBase<Derived>& a,
             const Eigen::MatrixBase<Derived>& b, double tolerance) {
  return ((a - b).cwiseAbs().array() <= tolerance).all();
}

}  // namespace

bool ModelsNearlyEqual(const SparseModel& a, const SparseModel& b,
                       double tolerance, std::string* difference) {
  auto fail = [&](const std::string& what) {
    if (difference) *difference = what;
    return false;
  };
  if (a.cameras.size() != b.cameras.size()) return fail("camera count");
  if (a.images.size() != b.images.size()) return fail("image count");
  if (a.points.size() != b.points.size()) return fail("point count");
  for (const auto& [id, ca] : a.cameras) {
    const auto it = b.cameras.find(id);
    if (it == b.cameras.end()) return fail("camera " + std::to_string(id));
    const Camera& cb = it->second;
    if (ca.model != cb.model || ca.width != cb.width || ca.height != cb.height ||
        ca.params.size() != cb.params.size()) {
      return fail("camera " + std::to_string(id) + " header");
    }
    for (std::size_t k = 0; k < ca.params.size(); ++k) {
      if (!Near(ca.params[k], cb.params[k], tolerance)) {
        return fail("camera " + std::to_string(id) + " params");
      }
    }
  }
  for (const auto& [id, ia] : a.images) {
    const auto it = b.images.find(id);
    if (it == b.images.end()) return fail("image " + std::to_string(id));
    const Image& ib = it->second;
    if (ia.camera_id != ib.camera_id || ia.name != ib.name ||
        ia.points2d.size() != ib.points2d.size()) {
      return fail("image " + std::to_string(id) + " header");
    }
    if (!NearVec(ia.qvec, ib.qvec, tolerance) ||
        !NearVec(ia.tvec, ib.tvec, tolerance)) {
      return fail("image " + std::to_string(id) + " pose");
    }
    for (std::size_t k = 0; k < ia.points2d.size(); ++k) {
      if (ia.points2d[k].point3d_id != ib.points2d[k].point3d_id ||
          !NearVec(ia.points2d[k].xy, ib.points2d[k].xy, tolerance)) {
        return fail("image " + std::to_string(id) + " point2d " +
                    std::to_string(k));
      }
    }
  }
  for (const auto& [id, pa] : a.points) {
    const auto it = b.points.find(id);
    if (it == b.points.end()) return fail("point " + std::to_string(id));
    const Point3D& pb = it->second;
    if (pa.rgb != pb.rgb || pa.track != pb.track ||
        !NearVec(pa.xyz, pb.xyz, tolerance) ||
        !Near(pa.error, pb.error, tolerance)) {
      return fail("point " + std::to_string(id));
    }
  }
  return true;
}

}  // namespace sfmsemval
