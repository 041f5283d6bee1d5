#include "test_support.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <random>

#include <Eigen/Geometry>

namespace fs = std::filesystem;

namespace sfmsemval::testing {

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device device;
  for (;;) {
    path_ = fs::temp_directory_path() /
            ("sfmsemval_test_" + std::to_string(device()) + "_" +
             std::to_string(counter++));
    if (fs::create_directory(path_)) break;
  }
}

TempDir::~TempDir() {
  std::error_code ignored;
  fs::remove_all(path_, ignored);
}

Eigen::Matrix3d RodriguesOracle(const Eigen::Vector3d& axis_angle) {
  const double theta = axis_angle.norm();
  if (theta == 0.0) return Eigen::Matrix3d::Identity();
  const Eigen::Vector3d k = axis_angle / theta;
  Eigen::Matrix3d K;
  K << 0, -k.z(), k.y(), k.z(), 0, -k.x(), -k.y(), k.x(), 0;
  return Eigen::Matrix3d::Identity() + std::sin(theta) * K +
         (1.0 - std::cos(theta)) * K * K;
}

Eigen::Matrix3d RandomRotation(Rng& rng, double max_angle) {
  Eigen::Vector3d axis(rng.Uniform(-1, 1), rng.Uniform(-1, 1), rng.Uniform(-1, 1));
  while (axis.norm() < 1e-3) {
    axis = Eigen::Vector3d(rng.Uniform(-1, 1), rng.Uniform(-1, 1), rng.Uniform(-1, 1));
  }
  return RodriguesOracle(axis.normalized() * rng.Uniform(0, max_angle));
}

Eigen::Vector2d PinholeOracle(const Eigen::Matrix3d& K, const Eigen::Matrix3d& R,
                              const Eigen::Vector3d& t, const Eigen::Vector3d& X) {
  const Eigen::Vector3d x = K * (R * X + t);
  return {x.x() / x.z(), x.y() / x.z()};
}

TwoViewScene MakeTwoViewScene(std::uint64_t seed, int num_points) {
  Rng rng(seed);
  TwoViewScene scene;
  scene.K1 << 800, 0, 320, 0, 800, 240, 0, 0, 1;
  scene.K2 << 760, 0, 300, 0, 760, 250, 0, 0, 1;
  scene.pose2.rotation = RandomRotation(rng, 0.3);
  Eigen::Vector3d baseline(rng.Uniform(-1, 1), rng.Uniform(-0.3, 0.3),
                           rng.Uniform(-0.3, 0.3));
  if (baseline.norm() < 0.2) baseline.x() += 0.5;
  scene.pose2.translation = baseline;
  while (static_cast<int>(scene.points.size()) < num_points) {
    const Eigen::Vector3d X(rng.Uniform(-2, 2), rng.Uniform(-1.5, 1.5),
                            rng.Uniform(4, 8));
    const Eigen::Vector3d X2 = scene.pose2.Transform(X);
    if (X2.z() < 1.0) continue;
    Correspondence c;
    c.x1 = PinholeOracle(scene.K1, Eigen::Matrix3d::Identity(),
                         Eigen::Vector3d::Zero(), X);
    c.x2 = PinholeOracle(scene.K2, scene.pose2.rotation, scene.pose2.translation, X);
    scene.points.push_back(X);
    scene.correspondences.push_back(c);
  }
  return scene;
}

std::vector<std::size_t> PlantOutliers(TwoViewScene& scene, double fraction,
                                       std::uint64_t seed) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const std::size_t n = scene.correspondences.size();
  const auto count = static_cast<std::size_t>(std::lround(fraction * n));
  auto outliers = rng.Sample(n, count);
  std::vector<bool> is_outlier(n, false);
  for (const std::size_t i : outliers) {
    is_outlier[i] = true;
    scene.correspondences[i].x1 = {rng.Uniform(0, 640), rng.Uniform(0, 480)};
    scene.correspondences[i].x2 = {rng.Uniform(0, 640), rng.Uniform(0, 480)};
  }
  std::vector<std::size_t> inliers;
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_outlier[i]) inliers.push_back(i);
  }
  return inliers;
}

namespace {

Eigen::Matrix3d LookAt(const Eigen::Vector3d& center, const Eigen::Vector3d& target) {
  const Eigen::Vector3d z = (target - center).normalized();
  Eigen::Vector3d up = Eigen::Vector3d::UnitY();
  if (std::abs(z.dot(up)) > 0.9) up = Eigen::Vector3d::UnitX();
  const Eigen::Vector3d x = up.cross(z).normalized();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d R;
  R.row(0) = x.transpose();
  R.row(1) = y.transpose();
  R.row(2) = z.transpose();
  return R;
}

}  // namespace

BAScene MakeBAScene(std::uint64_t seed, int num_images, int num_points,
                    double perturbation, bool radial) {
  Rng rng(seed);
  BAScene scene;
  BAProblem& truth = scene.truth;
  for (int i = 0; i < num_images; ++i) {
    const double angle = 2.0 * M_PI * i / num_images + rng.Uniform(-0.2, 0.2);
    const Eigen::Vector3d center(6.0 * std::cos(angle), rng.Uniform(-1, 1),
                                 6.0 * std::sin(angle));
    const Eigen::Matrix3d R =
        LookAt(center, Eigen::Vector3d(rng.Uniform(-0.3, 0.3),
                                       rng.Uniform(-0.3, 0.3),
                                       rng.Uniform(-0.3, 0.3)));
    BAImage image;
    image.image_id = static_cast<ImageId>(i + 1);
    image.qvec = RotationToQuat(R);
    image.tvec = -R * center;
    image.camera.camera_id = 1;
    if (radial) {
      image.camera.model = CameraModel::kRadial;
      image.camera.params = {500, 320, 240, -0.05, 0.01};
    } else {
      image.camera.model = CameraModel::kSimplePinhole;
      image.camera.params = {500, 320, 240};
    }
    image.camera.width = 640;
    image.camera.height = 480;
    if (i == 0) {
      image.rotation_fixed = true;
      image.translation_fixed = {true, true, true};
    } else if (i == 1) {
      image.translation_fixed = {true, false, false};
    }
    truth.images[image.image_id] = image;
  }
  for (int p = 0; p < num_points; ++p) {
    truth.points[static_cast<Point3DId>(p + 1)] = Eigen::Vector3d(
        rng.Uniform(-1, 1), rng.Uniform(-1, 1), rng.Uniform(-1, 1));
  }
  for (const auto& [image_id, image] : truth.images) {
    const Pose pose{QuatToRotation(image.qvec), image.tvec};
    for (const auto& [point_id, xyz] : truth.points) {
      truth.AddObservation({image_id, point_id, Project(pose, image.camera, xyz)});
    }
  }
  Eigen::VectorXd delta(truth.NumParameters());
  for (Eigen::Index k = 0; k < delta.size(); ++k) {
    delta(k) = perturbation * rng.Uniform(-1, 1);
  }
  scene.initial = truth.Plus(delta);
  return scene;
}

SparseModel MakeRandomModel(std::uint64_t seed, int num_images, int num_points) {
  Rng rng(seed);
  SparseModel model;
  const CameraModel kinds[] = {CameraModel::kSimplePinhole, CameraModel::kPinhole,
                               CameraModel::kSimpleRadial, CameraModel::kRadial};
  for (int c = 0; c < 4; ++c) {
    Camera camera;
    camera.camera_id = static_cast<CameraId>(c + 1);
    camera.model = kinds[c];
    camera.width = 640 + 2 * rng.Below(100);
    camera.height = 480 + 2 * rng.Below(100);
    const double f = rng.Uniform(300, 900);
    switch (camera.model) {
      case CameraModel::kSimplePinhole:
        camera.params = {f, camera.width / 2.0, camera.height / 2.0};
        break;
      case CameraModel::kPinhole:
        camera.params = {f, f * rng.Uniform(0.95, 1.05), rng.Uniform(300, 340),
                         rng.Uniform(220, 260)};
        break;
      case CameraModel::kSimpleRadial:
        camera.params = {f, rng.Uniform(300, 340), rng.Uniform(220, 260),
                         rng.Uniform(-0.1, 0.1)};
        break;
      case CameraModel::kRadial:
        camera.params = {f, rng.Uniform(300, 340), rng.Uniform(220, 260),
                         rng.Uniform(-0.1, 0.1), rng.Uniform(-0.01, 0.01)};
        break;
    }
    model.cameras[camera.camera_id] = camera;
  }
  for (int i = 1; i <= num_images; ++i) {
    Image image;
    image.image_id = static_cast<ImageId>(i * 2);
    image.camera_id = static_cast<CameraId>(1 + rng.Below(4));
    image.qvec = RotationToQuat(RandomRotation(rng, M_PI));
    image.tvec = Eigen::Vector3d(rng.Uniform(-5, 5), rng.Uniform(-5, 5),
                                 rng.Uniform(-5, 5));
    image.name = "seq/frame_" + std::to_string(i) + ".jpg";
    for (int k = 0; k < 3; ++k) {
      Point2D loose;
      loose.xy = Eigen::Vector2d(rng.Uniform(0, 640), rng.Uniform(0, 480));
      image.points2d.push_back(loose);
    }
    model.images[image.image_id] = image;
  }
  for (int p = 1; p <= num_points; ++p) {
    Point3D point;
    point.point3d_id = static_cast<Point3DId>(p * 7);
    point.xyz = Eigen::Vector3d(rng.Uniform(-10, 10), rng.Uniform(-10, 10),
                                rng.Uniform(-10, 10));
    point.rgb = {static_cast<std::uint8_t>(rng.Below(256)),
                 static_cast<std::uint8_t>(rng.Below(256)),
                 static_cast<std::uint8_t>(rng.Below(256))};
    point.error = rng.Uniform(0, 2);
    const auto track_size = 1 + rng.Below(num_images);
    for (const std::size_t k : rng.Sample(num_images, track_size)) {
      Image& image = model.images.at(static_cast<ImageId>((k + 1) * 2));
      Point2D p2;
      p2.xy = Eigen::Vector2d(rng.Uniform(0, 640), rng.Uniform(0, 480));
      p2.point3d_id = point.point3d_id;
      image.points2d.push_back(p2);
      point.track.push_back(
          {image.image_id, static_cast<Point2DIdx>(image.points2d.size() - 1)});
    }
    model.points[point.point3d_id] = point;
  }
  return model;
}

ClassTable MicroClassTable() {
  return ClassTable({{0, "wall", true, false},
                     {1, "road", false, false},
                     {2, "vegetation", false, false},
                     {3, "car", false, true},
                     {4, "person", false, true}});
}

MicroModel MakeMicroModel(std::uint64_t seed, int max_images, int max_points) {
  Rng rng(seed);
  MicroModel micro;
  SparseModel& model = micro.model;
  Camera camera;
  camera.camera_id = 1;
  camera.model = CameraModel::kSimplePinhole;
  camera.width = 100;
  camera.height = 100;
  camera.params = {100, 50, 50};
  model.cameras[1] = camera;
  const int num_images = 1 + static_cast<int>(rng.Below(max_images));
  for (int i = 1; i <= num_images; ++i) {
    Image image;
    image.image_id = static_cast<ImageId>(i);
    image.camera_id = 1;
    image.name = "img" + std::to_string(i) + ".png";
    image.tvec = Eigen::Vector3d(0, 0, 5);
    model.images[image.image_id] = image;
  }
  const int num_points = static_cast<int>(rng.Below(max_points + 1));
  for (int p = 1; p <= num_points; ++p) {
    Point3D point;
    point.point3d_id = static_cast<Point3DId>(p * 3);  // sparse ids
    point.xyz = Eigen::Vector3d(rng.Uniform(-1, 1), rng.Uniform(-1, 1),
                                rng.Uniform(-1, 1));
    const auto track_size = 1 + rng.Below(num_images);
    for (const std::size_t k : rng.Sample(num_images, track_size)) {
      Image& image = model.images.at(static_cast<ImageId>(k + 1));
      if (rng.Below(3) == 0) {
        Point2D loose;
        loose.xy = Eigen::Vector2d(rng.Uniform(0, 100), rng.Uniform(0, 100));
        image.points2d.push_back(loose);
      }
      Point2D p2;
      p2.xy = Eigen::Vector2d(rng.Uniform(0, 100), rng.Uniform(0, 100));
      p2.point3d_id = point.point3d_id;
      image.points2d.push_back(p2);
      point.track.push_back(
          {image.image_id, static_cast<Point2DIdx>(image.points2d.size() - 1)});
    }
    model.points[point.point3d_id] = point;
  }
  for (const auto& [id, image] : model.images) {
    for (std::size_t k = 0; k < image.points2d.size(); ++k) {
      const Point2D& p2 = image.points2d[k];
      if (!p2.HasPoint3D()) continue;
      micro.observations.push_back({id, static_cast<Point2DIdx>(k), p2.xy.x(),
                                    p2.xy.y(), p2.point3d_id,
                                    static_cast<ClassId>(rng.Below(5))});
    }
  }
  return micro;
}

namespace {

using Labelled = std::vector<std::pair<TrackElement, ClassId>>;

std::map<Point3DId, Labelled> MaterializeTracks(
    const SparseModel& model, const std::vector<LabeledObservation>& obs) {
  std::map<Point3DId, Labelled> tracks;
  for (const auto& [id, point] : model.points) {
    Labelled& track = tracks[id];
    for (const TrackElement& e : point.track) {
      ClassId label = kUnknownClass;
      for (const auto& o : obs) {
        if (o.image_id == e.image_id && o.point2d_idx == e.point2d_idx) {
          label = o.class_id;
        }
      }
      track.emplace_back(e, label);
    }
  }
  return tracks;
}

ClassId SmallestMostFrequent(const Labelled& track) {
  int counts[256] = {};
  for (const auto& [e, label] : track) ++counts[label];
  ClassId winner = 0;
  for (int id = 1; id < 256; ++id) {
    if (counts[id] > counts[winner]) winner = id;
  }
  return winner;
}

// Rebuilds `model` with only the given tracks.
SparseModel Rebuild(const SparseModel& model,
                    const std::map<Point3DId, std::vector<TrackElement>>& keep) {
  SparseModel out;
  out.cameras = model.cameras;
  out.images = model.images;
  for (auto& [id, image] : out.images) {
    for (auto& p2 : image.points2d) p2.point3d_id = kInvalidPoint3DId;
  }
  for (const auto& [id, track] : keep) {
    Point3D point = model.points.at(id);
    point.track = track;
    for (const TrackElement& e : track) {
      out.images.at(e.image_id).points2d[e.point2d_idx].point3d_id = id;
    }
    out.points[id] = point;
  }
  return out;
}

}  // namespace

SparseModel BruteForceConsistency(const SparseModel& model,
                                  const std::vector<LabeledObservation>& obs,
                                  int min_track) {
  std::map<Point3DId, std::vector<TrackElement>> keep;
  for (const auto& [id, track] : MaterializeTracks(model, obs)) {
    const ClassId winner = SmallestMostFrequent(track);
    std::vector<TrackElement> kept;
    for (const auto& [e, label] : track) {
      if (label == winner) kept.push_back(e);
    }
    if (static_cast<int>(kept.size()) >= min_track) keep[id] = kept;
  }
  return Rebuild(model, keep);
}

SparseModel BruteForceMotion(const SparseModel& model,
                             const std::vector<LabeledObservation>& obs,
                             const ClassTable& table, bool any_policy) {
  const auto dynamic = table.DynamicIds();
  auto is_dynamic = [&](ClassId id) {
    return std::find(dynamic.begin(), dynamic.end(), id) != dynamic.end();
  };
  std::map<Point3DId, std::vector<TrackElement>> keep;
  for (const auto& [id, track] : MaterializeTracks(model, obs)) {
    bool remove = false;
    if (any_policy) {
      for (const auto& [e, label] : track) remove = remove || is_dynamic(label);
    } else {
      remove = is_dynamic(SmallestMostFrequent(track));
    }
    if (remove) continue;
    std::vector<TrackElement> elements;
    for (const auto& [e, label] : track) elements.push_back(e);
    keep[id] = elements;
  }
  return Rebuild(model, keep);
}

OcclusionScene MakeOcclusionScene(std::uint64_t seed, int max_planes,
                                  int max_points) {
  Rng rng(seed);
  OcclusionScene scene;
  SparseModel& model = scene.model;
  Camera camera;
  camera.camera_id = 1;
  camera.model = CameraModel::kSimplePinhole;
  camera.width = 100;
  camera.height = 100;
  camera.params = {100, 50, 50};
  model.cameras[1] = camera;
  const int num_images = 1 + static_cast<int>(rng.Below(4));
  for (int i = 1; i <= num_images; ++i) {
    Image image;
    image.image_id = static_cast<ImageId>(i);
    image.camera_id = 1;
    image.name = "cam" + std::to_string(i);
    const Eigen::Matrix3d R = RandomRotation(rng, M_PI);
    const Eigen::Vector3d center(rng.Uniform(-10, 10), rng.Uniform(-10, 10),
                                 rng.Uniform(-10, 10));
    image.qvec = RotationToQuat(R);
    image.tvec = -R * center;
    model.images[image.image_id] = image;
  }
  const int num_points = 1 + static_cast<int>(rng.Below(max_points));
  for (int p = 1; p <= num_points; ++p) {
    Point3D point;
    point.point3d_id = static_cast<Point3DId>(p);
    point.xyz = Eigen::Vector3d(rng.Uniform(-10, 10), rng.Uniform(-10, 10),
                                rng.Uniform(-10, 10));
    const auto track_size = 1 + rng.Below(num_images);
    for (const std::size_t k : rng.Sample(num_images, track_size)) {
      Image& image = model.images.at(static_cast<ImageId>(k + 1));
      Point2D p2;
      p2.point3d_id = point.point3d_id;
      image.points2d.push_back(p2);
      point.track.push_back(
          {image.image_id, static_cast<Point2DIdx>(image.points2d.size() - 1)});
    }
    model.points[point.point3d_id] = point;
  }
  const int num_planes = static_cast<int>(rng.Below(max_planes + 1));
  for (int j = 0; j < num_planes; ++j) {
    LabeledPlane plane;
    Eigen::Vector3d normal(rng.Uniform(-1, 1), rng.Uniform(-1, 1), rng.Uniform(-1, 1));
    if (normal.norm() < 1e-3) normal = Eigen::Vector3d::UnitZ();
    plane.normal = normal.normalized();
    plane.origin = Eigen::Vector3d(rng.Uniform(-8, 8), rng.Uniform(-8, 8),
                                   rng.Uniform(-8, 8));
    plane.extent_u = rng.Uniform(1, 8);
    plane.extent_v = rng.Uniform(1, 8);
    plane.margin = rng.Uniform(0, 0.5);
    plane.opaque = rng.Uniform() < 0.7;
    plane.class_id = plane.opaque ? 0 : 2;
    if (rng.Below(3) == 0) {
      for (const std::size_t k :
           rng.Sample(num_points, rng.Below(num_points) + 1)) {
        plane.support.push_back(static_cast<Point3DId>(k + 1));
      }
    }
    scene.planes.push_back(plane);
  }
  return scene;
}

long SamplingOracle(const Eigen::Vector3d& center, const Eigen::Vector3d& point,
                    Point3DId point_id, const std::vector<LabeledPlane>& planes,
                    double depth_margin, int steps) {
  const double length = (point - center).norm();
  long best = -1;
  double best_d = 0.0;
  for (std::size_t j = 0; j < planes.size(); ++j) {
    const LabeledPlane& plane = planes[j];
    if (!plane.opaque) continue;
    if (std::find(plane.support.begin(), plane.support.end(), point_id) !=
        plane.support.end()) {
      continue;
    }
    auto signed_distance = [&](double t) {
      return (center + t * (point - center) - plane.origin).dot(plane.normal);
    };
    for (int k = 0; k < steps; ++k) {
      const double t0 = static_cast<double>(k) / steps;
      const double t1 = static_cast<double>(k + 1) / steps;
      const double s0 = signed_distance(t0);
      const double s1 = signed_distance(t1);
      if (s0 == s1) continue;
      if (!(s0 == 0.0 || s0 * s1 < 0.0 || (k + 1 == steps && s1 == 0.0))) continue;
      const double t = t0 + (t1 - t0) * s0 / (s0 - s1);
      const double d = t * length;
      const Eigen::Vector3d hit = center + t * (point - center);
      const auto [u, v] = PlaneBasis(plane.normal);
      const Eigen::Vector3d rel = hit - plane.origin;
      const bool inside = std::abs(rel.dot(u)) <= plane.extent_u + plane.margin &&
                          std::abs(rel.dot(v)) <= plane.extent_v + plane.margin;
      if (d > depth_margin && d < length - depth_margin && inside &&
          (best < 0 || d < best_d)) {
        best = static_cast<long>(j);
        best_d = d;
      }
      break;
    }
  }
  return best;
}

ConfusionIou ConfusionMatrixIou(const LabelMap& pred, const LabelMap& truth,
                                ClassId class_id) {
  std::vector<std::int64_t> cm(256 * 256, 0);
  for (std::size_t i = 0; i < truth.ids.size(); ++i) {
    ++cm[truth.ids[i] * 256 + pred.ids[i]];
  }
  const std::int64_t tp = cm[class_id * 256 + class_id];
  std::int64_t fp = 0, fn = 0;
  for (int other = 0; other < 256; ++other) {
    if (other == class_id) continue;
    fp += cm[other * 256 + class_id];
    fn += cm[class_id * 256 + other];
  }
  ConfusionIou result;
  if (tp + fp + fn == 0) return result;
  result.defined = true;
  result.value = static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
  return result;
}

}  // namespace sfmsemval::testing
