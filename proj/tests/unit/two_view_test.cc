#include "sfmsemval/two_view.h"

#include <stdexcept>

#include <Eigen/LU>
#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "sfmsemval/error.h"
#include "test_support.h"

namespace sfmsemval {
namespace {

using testing::MakeTwoViewScene;

TEST(EightPoint, NoiselessResidualsVanish) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto scene = MakeTwoViewScene(seed, 60);
    const Eigen::Matrix3d F = EightPoint(scene.correspondences);
    EXPECT_NEAR(F.norm(), 1.0, 1e-12);
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(F);
    EXPECT_LT(svd.singularValues()(2), 1e-12);
    for (const auto& c : scene.correspondences) {
      EXPECT_LT(AlgebraicResidual(F, c), 1e-9);
      EXPECT_LT(SampsonDistance(F, c), 1e-6);
    }
  }
}

TEST(EightPoint, MatchesGroundTruthUpToScale) {
  const auto scene = MakeTwoViewScene(11, 100);
  const Eigen::Matrix3d E_true =
      CrossProductMatrix(scene.pose2.translation) * scene.pose2.rotation;
  Eigen::Matrix3d F_true =
      scene.K2.inverse().transpose() * E_true * scene.K1.inverse();
  F_true /= F_true.norm();
  const Eigen::Matrix3d F = EightPoint(scene.correspondences);
  EXPECT_LT(std::min((F - F_true).norm(), (F + F_true).norm()), 1e-6);
}

TEST(EightPoint, RejectsTooFewOrDegenerate) {
  const auto scene = MakeTwoViewScene(1, 7);
  EXPECT_THROW(EightPoint(scene.correspondences), GeometryError);
  std::vector<Correspondence> same(10, scene.correspondences[0]);
  EXPECT_THROW(EightPoint(same), GeometryError);
}

TEST(Ransac, RecoversPlantedInliers) {
  int exact = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto scene = MakeTwoViewScene(100 + seed, 120);
    const auto planted = testing::PlantOutliers(scene, 0.3, seed);
    RansacOptions options;
    options.eps = 1e-3;
    options.trials = 500;
    options.seed = seed;
    options.residual = EpipolarResidual::kSampson;
    const auto estimate = RansacFundamental(scene.correspondences, options);
    if (estimate.inliers == planted) ++exact;
    EXPECT_GE(estimate.best_trial, 0);
  }
  EXPECT_GE(exact, 19);
}

TEST(Ransac, DeterministicForSeed) {
  auto scene = MakeTwoViewScene(3, 80);
  testing::PlantOutliers(scene, 0.4, 3);
  RansacOptions options;
  options.eps = 1e-3;
  options.trials = 500;
  options.seed = 17;
  options.residual = EpipolarResidual::kSampson;
  const auto a = RansacFundamental(scene.correspondences, options);
  const auto b = RansacFundamental(scene.correspondences, options);
  EXPECT_EQ(a.inliers, b.inliers);
  EXPECT_EQ(a.best_trial, b.best_trial);
  EXPECT_EQ(a.F, b.F);
}

TEST(RansacTrials, KnownValueAndMonotonicity) {
  EXPECT_EQ(RansacTrials(0.99, 0.5, 8), 1177);
  EXPECT_EQ(RansacTrials(0.99, 1.0, 8), 1);
  EXPECT_LT(RansacTrials(0.9, 0.5, 8), RansacTrials(0.99, 0.5, 8));
  EXPECT_GT(RansacTrials(0.99, 0.4, 8), RansacTrials(0.99, 0.5, 8));
  EXPECT_THROW(RansacTrials(1.0, 0.5, 8), std::invalid_argument);
  EXPECT_THROW(RansacTrials(0.99, 0.0, 8), std::invalid_argument);
  EXPECT_THROW(RansacTrials(0.99, 0.5, 0), std::invalid_argument);
}

TEST(Essential, HasTwoEqualSingularValues) {
  const auto scene = MakeTwoViewScene(21, 50);
  const Eigen::Matrix3d F = EightPoint(scene.correspondences);
  const Eigen::Matrix3d E = EssentialFromFundamental(F, scene.K1, scene.K2);
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(E);
  const Eigen::Vector3d s = svd.singularValues();
  EXPECT_NEAR(s(0), s(1), 1e-12 * s(0));
  EXPECT_LT(s(2), 1e-12 * s(0));
}

TEST(Essential, DecompositionCandidatesAreRigid) {
  const auto scene = MakeTwoViewScene(22, 50);
  const Eigen::Matrix3d E =
      CrossProductMatrix(scene.pose2.translation) * scene.pose2.rotation;
  const auto candidates = DecomposeEssential(E);
  ASSERT_EQ(candidates.size(), 4u);
  bool found = false;
  for (const Pose& pose : candidates) {
    EXPECT_TRUE(IsRotation(pose.rotation));
    EXPECT_NEAR(pose.translation.norm(), 1.0, 1e-12);
    if ((pose.rotation - scene.pose2.rotation).norm() < 1e-9 &&
        (pose.translation - scene.pose2.translation.normalized()).norm() < 1e-9) {
      found = true;
    }
  }
  EXPECT_TRUE(found);
}

TEST(Chirality, SelectsGroundTruth) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto scene = MakeTwoViewScene(300 + seed, 50);
    const Eigen::Matrix3d E = EssentialFromFundamental(
        EightPoint(scene.correspondences), scene.K1, scene.K2);
    const auto result = SelectPoseChirality(E, scene.correspondences, scene.K1, scene.K2);
    EXPECT_LT((result.pose.rotation - scene.pose2.rotation).norm(), 1e-6);
    EXPECT_LT((result.pose.translation - scene.pose2.translation.normalized()).norm(),
              1e-6);
    EXPECT_EQ(result.in_front[result.candidate], 50);
  }
}

TEST(Chirality, CorruptedEssentialThrows) {
  // Pure translation along x with every correspondence at the principal
  // point: all rays are parallel to the baseline for every candidate.
  const Eigen::Matrix3d E = CrossProductMatrix(Eigen::Vector3d(1, 0, 0));
  Eigen::Matrix3d K;
  K << 500, 0, 320, 0, 500, 240, 0, 0, 1;
  std::vector<Correspondence> corr(5, {Eigen::Vector2d(320, 240), Eigen::Vector2d(320, 240)});
  EXPECT_THROW(SelectPoseChirality(E, corr, K, K), GeometryError);
}

TEST(Triangulate, RecoversPoints) {
  const auto scene = MakeTwoViewScene(5, 30);
  for (std::size_t i = 0; i < scene.points.size(); ++i) {
    const Eigen::Vector3d X = TriangulateCalibrated(
        Pose{}, scene.pose2, scene.K1, scene.K2, scene.correspondences[i].x1,
        scene.correspondences[i].x2);
    EXPECT_LT((X - scene.points[i]).norm(), 1e-8);
    EXPECT_TRUE(InFrontOf(Pose{}, X));
  }
  EXPECT_THROW(TriangulateCalibrated(Pose{}, Pose{}, scene.K1, scene.K1,
                                     scene.correspondences[0].x1,
                                     scene.correspondences[0].x1),
               GeometryError);
}

}  // namespace
}  // namespace sfmsemval
