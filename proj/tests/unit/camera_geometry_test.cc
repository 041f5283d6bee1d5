#include "sfmsemval/camera_geometry.h"

#include <Eigen/LU>
#include <gtest/gtest.h>

#include "sfmsemval/error.h"
#include "test_support.h"

namespace sfmsemval {
namespace {

Camera SimplePinhole(double f, double cx, double cy) {
  Camera camera;
  camera.camera_id = 1;
  camera.model = CameraModel::kSimplePinhole;
  camera.width = 640;
  camera.height = 480;
  camera.params = {f, cx, cy};
  return camera;
}

TEST(Rotation, AxisAngleMatchesRodrigues) {
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const Eigen::Vector3d w(rng.Uniform(-3, 3), rng.Uniform(-3, 3), rng.Uniform(-3, 3));
    const Eigen::Matrix3d expected = testing::RodriguesOracle(w);
    EXPECT_LT((AxisAngleToRotation(w) - expected).norm(), 1e-12);
    EXPECT_LT((QuatToRotation(AxisAngleToQuat(w)) - expected).norm(), 1e-12);
  }
  EXPECT_LT((AxisAngleToRotation(Eigen::Vector3d::Zero()) -
             Eigen::Matrix3d::Identity()).norm(), 1e-15);
}

TEST(Rotation, QuaternionRoundTrip) {
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const Eigen::Matrix3d R = testing::RandomRotation(rng, M_PI);
    ASSERT_TRUE(IsRotation(R));
    const Eigen::Vector4d q = RotationToQuat(R);
    EXPECT_GE(q(0), 0.0);
    EXPECT_NEAR(q.norm(), 1.0, 1e-12);
    EXPECT_LT((QuatToRotation(q) - R).norm(), 1e-12);
  }
  EXPECT_THROW(QuatToRotation(Eigen::Vector4d::Zero()), GeometryError);
}

TEST(Rotation, QuatMultiplyComposes) {
  Rng rng(3);
  const Eigen::Matrix3d A = testing::RandomRotation(rng, 2.0);
  const Eigen::Matrix3d B = testing::RandomRotation(rng, 2.0);
  const Eigen::Vector4d q = QuatMultiply(RotationToQuat(A), RotationToQuat(B));
  EXPECT_LT((QuatToRotation(q) - A * B).norm(), 1e-12);
}

TEST(Pose, InverseMatchesMatrixInverse) {
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    Pose pose{testing::RandomRotation(rng, M_PI),
              Eigen::Vector3d(rng.Uniform(-5, 5), rng.Uniform(-5, 5), rng.Uniform(-5, 5))};
    Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
    T.topLeftCorner<3, 3>() = pose.rotation;
    T.topRightCorner<3, 1>() = pose.translation;
    const Eigen::Matrix4d Tinv = T.inverse();
    const Pose inv = pose.Inverse();
    EXPECT_LT((inv.rotation - Tinv.topLeftCorner<3, 3>()).norm(), 1e-12);
    EXPECT_LT((inv.translation - Tinv.topRightCorner<3, 1>()).norm(), 1e-12);
    EXPECT_LT((CameraCenter(pose) - Tinv.topRightCorner<3, 1>()).norm(), 1e-12);
    const Pose identity = pose * inv;
    EXPECT_LT((identity.rotation - Eigen::Matrix3d::Identity()).norm(), 1e-12);
    EXPECT_LT(identity.translation.norm(), 1e-12);
  }
}

TEST(Project, PinholeHandArithmetic) {
  const Camera camera = SimplePinhole(500, 320, 240);
  const Eigen::Vector2d xy = Project(Pose{}, camera, Eigen::Vector3d(1, 2, 10));
  EXPECT_DOUBLE_EQ(xy.x(), 370.0);
  EXPECT_DOUBLE_EQ(xy.y(), 340.0);

  Camera pinhole = camera;
  pinhole.model = CameraModel::kPinhole;
  pinhole.params = {500, 400, 320, 240};
  const Eigen::Vector2d xy2 = Project(Pose{}, pinhole, Eigen::Vector3d(1, 2, 10));
  EXPECT_DOUBLE_EQ(xy2.y(), 320.0);

  EXPECT_THROW(Project(Pose{}, camera, Eigen::Vector3d(0, 0, -1)), GeometryError);
  EXPECT_THROW(Project(Pose{}, camera, Eigen::Vector3d(1, 1, 0)), GeometryError);
}

TEST(Project, MatchesOracleWithPose) {
  Rng rng(5);
  const Camera camera = SimplePinhole(700, 300, 200);
  const Eigen::Matrix3d K = CalibrationMatrix(camera);
  for (int i = 0; i < 20; ++i) {
    Pose pose{testing::RandomRotation(rng, 0.5), Eigen::Vector3d(0, 0, 10)};
    const Eigen::Vector3d X(rng.Uniform(-1, 1), rng.Uniform(-1, 1), rng.Uniform(-1, 1));
    const Eigen::Vector2d expected =
        testing::PinholeOracle(K, pose.rotation, pose.translation, X);
    EXPECT_LT((Project(pose, camera, X) - expected).norm(), 1e-9);
  }
}

TEST(Project, RadialDistortionByHand) {
  Camera camera = SimplePinhole(100, 50, 50);
  camera.model = CameraModel::kRadial;
  camera.params = {100, 50, 50, 0.1, 0.01};
  // u = 0.5, v = 0 -> r2 = 0.25, radial = 0.1*0.25 + 0.01*0.0625 = 0.025625.
  const Eigen::Vector2d xy = CameraToImage(camera, Eigen::Vector2d(0.5, 0.0));
  EXPECT_NEAR(xy.x(), 50 + 100 * 0.5 * 1.025625, 1e-12);
  EXPECT_NEAR(xy.y(), 50, 1e-12);
  const Eigen::Vector2d uv = ImageToCamera(camera, xy);
  EXPECT_NEAR(uv.x(), 0.5, 1e-10);
  EXPECT_NEAR(uv.y(), 0.0, 1e-10);
}

TEST(Project, LiftInvertsProject) {
  Rng rng(6);
  Camera camera = SimplePinhole(600, 320, 240);
  camera.model = CameraModel::kSimpleRadial;
  camera.params.push_back(-0.05);
  const Pose pose{testing::RandomRotation(rng, 1.0), Eigen::Vector3d(1, -2, 3)};
  const Eigen::Vector3d X = Lift(pose, camera, Eigen::Vector2d(100, 400), 7.5);
  EXPECT_NEAR(pose.Transform(X).z(), 7.5, 1e-9);
  EXPECT_LT((Project(pose, camera, X) - Eigen::Vector2d(100, 400)).norm(), 1e-6);
}

TEST(Stats, EmptyModelHasNoMeans) {
  const ModelStats stats = MeanReprojectionStats(SparseModel{});
  EXPECT_EQ(stats.points, 0);
  EXPECT_EQ(stats.observations, 0);
  EXPECT_FALSE(stats.mean_track_length);
  EXPECT_FALSE(stats.mean_observations_per_image);
  EXPECT_FALSE(stats.mean_reprojection_error);
}

TEST(Stats, SinglePointTwoObservations) {
  SparseModel model;
  model.cameras[1] = SimplePinhole(500, 320, 240);
  Image image;
  image.image_id = 1;
  image.camera_id = 1;
  image.name = "a";
  // Projection of (1, 2, 10) is (370, 340); the two measurements are 3 and
  // 4 pixels away.
  image.points2d = {{Eigen::Vector2d(373, 340), 1}, {Eigen::Vector2d(370, 336), 1}};
  model.images[1] = image;
  Point3D point;
  point.point3d_id = 1;
  point.xyz = Eigen::Vector3d(1, 2, 10);
  point.track = {{1, 0}, {1, 1}};
  model.points[1] = point;
  const ModelStats stats = MeanReprojectionStats(model);
  EXPECT_EQ(stats.registered_images, 1);
  EXPECT_DOUBLE_EQ(*stats.mean_track_length, 2.0);
  EXPECT_DOUBLE_EQ(*stats.mean_observations_per_image, 2.0);
  EXPECT_DOUBLE_EQ(*stats.mean_reprojection_error, 3.5);
}

TEST(Stats, PaperTableMeans) {
  const ModelStats stats = StatsFromCounts(1, 1102, 272017, 1611163);
  EXPECT_NEAR(*stats.mean_track_length, 5.92302, 1e-4);
  EXPECT_NEAR(*stats.mean_observations_per_image, 1462.04, 1e-2);
}

}  // namespace
}  // namespace sfmsemval
