#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "sfmsemval/camera_geometry.h"

namespace sfmsemval {

struct Correspondence {
  Eigen::Vector2d x1;  // pixels, image 1
  Eigen::Vector2d x2;  // pixels, image 2
};

// Normalized 8-point estimate: Hartley conditioning, SVD of the design
// matrix, rank-2 projection and Frobenius normalization. Throws
// GeometryError for fewer than 8 correspondences or a rank-deficient
// design matrix.
Eigen::Matrix3d EightPoint(std::span<const Correspondence> correspondences);

// |x2^T F x1| with homogeneous pixel coordinates.
double AlgebraicResidual(const Eigen::Matrix3d& F, const Correspondence& c);
// First-order geometric error, in pixels (square root of the Sampson error).
double SampsonDistance(const Eigen::Matrix3d& F, const Correspondence& c);

enum class EpipolarResidual { kAlgebraic, kSampson };

struct RansacOptions {
  double eps = 1e-3;
  int trials = 1000;
  std::uint64_t seed = 0;
  EpipolarResidual residual = EpipolarResidual::kAlgebraic;
};

struct FundamentalEstimate {
  Eigen::Matrix3d F;
  // Indices into the input, ascending.
  std::vector<std::size_t> inliers;
  // Trial index that produced the winning consensus set.
  int best_trial = -1;
};

// Consensus maximization over random 8-point samples. Ties go to the earliest
// trial. The winner is refit on its inliers; the refit model replaces it when
// it keeps at least as many inliers. Throws GeometryError when fewer than 8
// correspondences are given or no model reaches 8 inliers.
FundamentalEstimate RansacFundamental(
    std::span<const Correspondence> correspondences,
    const RansacOptions& options);

// ceil(log(1 - confidence) / log(1 - inlier_ratio^sample_size)), 1 when every
// datum is an inlier. Throws std::invalid_argument outside
// 0 < confidence < 1, 0 < inlier_ratio <= 1, sample_size >= 1.
std::int64_t RansacTrials(double confidence, double inlier_ratio,
                          int sample_size);

// E = K2^T F K1 projected to singular values (s, s, 0).
Eigen::Matrix3d EssentialFromFundamental(const Eigen::Matrix3d& F,
                                         const Eigen::Matrix3d& K1,
                                         const Eigen::Matrix3d& K2);

// Closest matrix with singular values (s, s, 0), s the mean of the two
// largest singular values of `E`.
Eigen::Matrix3d ProjectToEssential(const Eigen::Matrix3d& E);

Eigen::Matrix3d CrossProductMatrix(const Eigen::Vector3d& v);

// Linear (DLT) triangulation in normalized camera coordinates. Throws
// GeometryError for coincident centres, parallel rays or a solution at
// infinity.
Eigen::Vector3d Triangulate(const Pose& pose1, const Pose& pose2,
                            const Camera& camera1, const Camera& camera2,
                            const Eigen::Vector2d& x1, const Eigen::Vector2d& x2);

// Same, for calibration matrices instead of full camera models.
Eigen::Vector3d TriangulateCalibrated(const Pose& pose1, const Pose& pose2,
                                      const Eigen::Matrix3d& K1,
                                      const Eigen::Matrix3d& K2,
                                      const Eigen::Vector2d& x1,
                                      const Eigen::Vector2d& x2);

// Positive depth in the camera: r3 . (X - C) > 0.
bool InFrontOf(const Pose& pose, const Eigen::Vector3d& point);

// The four (R, t) factorizations of E, in the order
// (R1, t), (R1, -t), (R2, t), (R2, -t) with R1 = U W V^T, R2 = U W^T V^T.
std::vector<Pose> DecomposeEssential(const Eigen::Matrix3d& E);

struct ChiralityResult {
  Pose pose;              // second camera relative to the first
  int candidate = -1;     // index into DecomposeEssential()
  std::array<int, 4> in_front{0, 0, 0, 0};
};

// Triangulates every correspondence under each candidate and keeps the one
// with the most points in front of both cameras (earliest candidate on ties).
// Throws GeometryError when no candidate has any point in front.
ChiralityResult SelectPoseChirality(
    const Eigen::Matrix3d& E, std::span<const Correspondence> correspondences,
    const Eigen::Matrix3d& K1, const Eigen::Matrix3d& K2);

}  // namespace sfmsemval
