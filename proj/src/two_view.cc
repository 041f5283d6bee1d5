#include "sfmsemval/two_view.h"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "sfmsemval/error.h"
#include "sfmsemval/random.h"

namespace sfmsemval {

namespace {

// Similarity moving the centroid to the origin with RMS distance sqrt(2).
Eigen::Matrix3d NormalizingTransform(std::span<const Eigen::Vector2d> points) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  double sum_sq = 0.0;
  for (const auto& p : points) sum_sq += (p - centroid).squaredNorm();
  const double rms = std::sqrt(sum_sq / static_cast<double>(points.size()));
  if (!(rms > 1e-12 * (1.0 + centroid.norm()))) {
    throw GeometryError("eight-point: coincident image points");
  }
  const double scale = std::sqrt(2.0) / rms;
  Eigen::Matrix3d T = Eigen::Matrix3d::Identity();
  T(0, 0) = scale;
  T(1, 1) = scale;
  T(0, 2) = -scale * centroid.x();
  T(1, 2) = -scale * centroid.y();
  return T;
}

Eigen::Matrix3d NormalizeSign(Eigen::Matrix3d M) {
  M /= M.norm();
  Eigen::Index r, c;
  M.cwiseAbs().maxCoeff(&r, &c);
  if (M(r, c) < 0) M = -M;
  return M;
}

}  // namespace

Eigen::Matrix3d CrossProductMatrix(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0, -v.z(), v.y(),
       v.z(), 0, -v.x(),
       -v.y(), v.x(), 0;
  return m;
}

Eigen::Matrix3d EightPoint(std::span<const Correspondence> correspondences) {
  const std::size_t n = correspondences.size();
  if (n < 8) {
    throw GeometryError("eight-point needs at least 8 correspondences, got " +
                        std::to_string(n));
  }
  std::vector<Eigen::Vector2d> p1(n), p2(n);
  for (std::size_t i = 0; i < n; ++i) {
    p1[i] = correspondences[i].x1;
    p2[i] = correspondences[i].x2;
  }
  const Eigen::Matrix3d T1 = NormalizingTransform(p1);
  const Eigen::Matrix3d T2 = NormalizingTransform(p2);

  Eigen::MatrixXd A(static_cast<Eigen::Index>(n), 9);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d a = T1 * p1[i].homogeneous();
    const Eigen::Vector3d b = T2 * p2[i].homogeneous();
    A.row(static_cast<Eigen::Index>(i)) << b.x() * a.x(), b.x() * a.y(), b.x(),
        b.y() * a.x(), b.y() * a.y(), b.y(), a.x(), a.y(), 1.0;
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv.size() < 8 || !(sv(7) > 1e-10 * sv(0))) {
    throw GeometryError("eight-point: rank-deficient design matrix");
  }
  const Eigen::VectorXd f = svd.matrixV().col(8);
  Eigen::Matrix3d Fn;
  Fn << f(0), f(1), f(2), f(3), f(4), f(5), f(6), f(7), f(8);

  Eigen::JacobiSVD<Eigen::Matrix3d> fsvd(Fn, Eigen::ComputeFullU |
                                                 Eigen::ComputeFullV);
  Eigen::Vector3d s = fsvd.singularValues();
  s(2) = 0.0;
  Fn = fsvd.matrixU() * s.asDiagonal() * fsvd.matrixV().transpose();

  return NormalizeSign(T2.transpose() * Fn * T1);
}

double AlgebraicResidual(const Eigen::Matrix3d& F, const Correspondence& c) {
  return std::abs(c.x2.homogeneous().dot(F * c.x1.homogeneous()));
}

double SampsonDistance(const Eigen::Matrix3d& F, const Correspondence& c) {
  const Eigen::Vector3d x1 = c.x1.homogeneous();
  const Eigen::Vector3d x2 = c.x2.homogeneous();
  const Eigen::Vector3d Fx1 = F * x1;
  const Eigen::Vector3d Ftx2 = F.transpose() * x2;
  const double numerator = x2.dot(Fx1);
  const double denominator = Fx1.head<2>().squaredNorm() +
                             Ftx2.head<2>().squaredNorm();
  if (denominator <= 0.0) return std::numeric_limits<double>::infinity();
  return std::abs(numerator) / std::sqrt(denominator);
}

namespace {

std::vector<std::size_t> CollectInliers(
    const Eigen::Matrix3d& F, std::span<const Correspondence> correspondences,
    const RansacOptions& options) {
  std::vector<std::size_t> inliers;
  for (std::size_t j = 0; j < correspondences.size(); ++j) {
    const double residual =
        options.residual == EpipolarResidual::kAlgebraic
            ? AlgebraicResidual(F, correspondences[j])
            : SampsonDistance(F, correspondences[j]);
    if (residual <= options.eps) inliers.push_back(j);
  }
  return inliers;
}

}  // namespace

FundamentalEstimate RansacFundamental(
    std::span<const Correspondence> correspondences,
    const RansacOptions& options) {
  if (correspondences.size() < 8) {
    throw GeometryError("RANSAC needs at least 8 correspondences, got " +
                        std::to_string(correspondences.size()));
  }
  if (!(options.eps > 0) || options.trials < 1) {
    throw std::invalid_argument("RANSAC needs eps > 0 and trials >= 1");
  }
  Rng rng(options.seed);
  FundamentalEstimate best;
  std::vector<Correspondence> sample(8);
  for (int trial = 0; trial < options.trials; ++trial) {
    const auto indices = rng.Sample(correspondences.size(), 8);
    for (int k = 0; k < 8; ++k) sample[k] = correspondences[indices[k]];
    Eigen::Matrix3d F;
    try {
      F = EightPoint(sample);
    } catch (const GeometryError&) {
      continue;
    }
    auto inliers = CollectInliers(F, correspondences, options);
    if (inliers.size() > best.inliers.size()) {
      best.F = F;
      best.inliers = std::move(inliers);
      best.best_trial = trial;
    }
  }
  if (best.inliers.size() < 8) {
    throw GeometryError("RANSAC found no model with at least 8 inliers");
  }

  std::vector<Correspondence> consensus;
  consensus.reserve(best.inliers.size());
  for (const std::size_t j : best.inliers) consensus.push_back(correspondences[j]);
  try {
    const Eigen::Matrix3d refit = EightPoint(consensus);
    auto refit_inliers = CollectInliers(refit, correspondences, options);
    if (refit_inliers.size() >= best.inliers.size()) {
      best.F = refit;
      best.inliers = std::move(refit_inliers);
    }
  } catch (const GeometryError&) {
    // Keep the sample model when the consensus set is degenerate.
  }
  return best;
}

std::int64_t RansacTrials(double confidence, double inlier_ratio,
                          int sample_size) {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw std::invalid_argument("confidence must lie in (0, 1)");
  }
  if (!(inlier_ratio > 0.0 && inlier_ratio <= 1.0)) {
    throw std::invalid_argument("inlier ratio must lie in (0, 1]");
  }
  if (sample_size < 1) throw std::invalid_argument("sample size must be >= 1");
  if (inlier_ratio == 1.0) return 1;
  const double all_inlier = std::pow(inlier_ratio, sample_size);
  const double k = std::log1p(-confidence) / std::log1p(-all_inlier);
  if (!(k < 9.2e18)) return std::numeric_limits<std::int64_t>::max();
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(k)));
}

Eigen::Matrix3d ProjectToEssential(const Eigen::Matrix3d& E) {
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      E, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sv = svd.singularValues();
  const double s = 0.5 * (sv(0) + sv(1));
  return svd.matrixU() * Eigen::Vector3d(s, s, 0.0).asDiagonal() *
         svd.matrixV().transpose();
}

namespace {

void CheckCalibration(const Eigen::Matrix3d& K, const char* which) {
  if (K(1, 0) != 0.0 || K(2, 0) != 0.0 || K(2, 1) != 0.0) {
    throw GeometryError(std::string(which) + " is not upper triangular");
  }
  const double scale = K.cwiseAbs().maxCoeff();
  if (!(std::abs(K.determinant()) > 1e-12 * scale * scale * scale)) {
    throw GeometryError(std::string(which) + " is singular");
  }
}

}  // namespace

Eigen::Matrix3d EssentialFromFundamental(const Eigen::Matrix3d& F,
                                         const Eigen::Matrix3d& K1,
                                         const Eigen::Matrix3d& K2) {
  CheckCalibration(K1, "K1");
  CheckCalibration(K2, "K2");
  return ProjectToEssential(K2.transpose() * F * K1);
}

namespace {

Eigen::Vector3d TriangulateNormalized(const Pose& pose1, const Pose& pose2,
                                      const Eigen::Vector2d& uv1,
                                      const Eigen::Vector2d& uv2) {
  const Eigen::Vector3d c1 = CameraCenter(pose1);
  const Eigen::Vector3d c2 = CameraCenter(pose2);
  const double scale = std::max({1.0, c1.norm(), c2.norm()});
  if ((c1 - c2).norm() <= 1e-12 * scale) {
    throw GeometryError("triangulation: identical camera centres");
  }
  const Eigen::Vector3d d1 = pose1.rotation.transpose() * uv1.homogeneous();
  const Eigen::Vector3d d2 = pose2.rotation.transpose() * uv2.homogeneous();
  if (d1.cross(d2).norm() <= 1e-12 * d1.norm() * d2.norm()) {
    throw GeometryError("triangulation: parallel rays");
  }
  Eigen::Matrix<double, 3, 4> P1, P2;
  P1 << pose1.rotation, pose1.translation;
  P2 << pose2.rotation, pose2.translation;
  Eigen::Matrix4d A;
  A.row(0) = uv1.x() * P1.row(2) - P1.row(0);
  A.row(1) = uv1.y() * P1.row(2) - P1.row(1);
  A.row(2) = uv2.x() * P2.row(2) - P2.row(0);
  A.row(3) = uv2.y() * P2.row(2) - P2.row(1);
  const Eigen::JacobiSVD<Eigen::Matrix4d> svd(A, Eigen::ComputeFullV);
  const Eigen::Vector4d X = svd.matrixV().col(3);
  if (!(std::abs(X(3)) > 1e-14 * X.head<3>().norm())) {
    throw GeometryError("triangulation: point at infinity");
  }
  return X.head<3>() / X(3);
}

}  // namespace

Eigen::Vector3d Triangulate(const Pose& pose1, const Pose& pose2,
                            const Camera& camera1, const Camera& camera2,
                            const Eigen::Vector2d& x1, const Eigen::Vector2d& x2) {
  return TriangulateNormalized(pose1, pose2, ImageToCamera(camera1, x1),
                               ImageToCamera(camera2, x2));
}

Eigen::Vector3d TriangulateCalibrated(const Pose& pose1, const Pose& pose2,
                                      const Eigen::Matrix3d& K1,
                                      const Eigen::Matrix3d& K2,
                                      const Eigen::Vector2d& x1,
                                      const Eigen::Vector2d& x2) {
  const Eigen::Vector3d n1 = K1.inverse() * x1.homogeneous();
  const Eigen::Vector3d n2 = K2.inverse() * x2.homogeneous();
  return TriangulateNormalized(pose1, pose2, n1.hnormalized(), n2.hnormalized());
}

bool InFrontOf(const Pose& pose, const Eigen::Vector3d& point) {
  return pose.rotation.row(2).dot(point - CameraCenter(pose)) > 0.0;
}

std::vector<Pose> DecomposeEssential(const Eigen::Matrix3d& E) {
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      E, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d U = svd.matrixU();
  Eigen::Matrix3d V = svd.matrixV();
  if (U.determinant() < 0) U = -U;
  if (V.determinant() < 0) V = -V;
  Eigen::Matrix3d W;
  W << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const Eigen::Matrix3d R1 = U * W * V.transpose();
  const Eigen::Matrix3d R2 = U * W.transpose() * V.transpose();
  const Eigen::Vector3d t = U.col(2).normalized();
  return {Pose{R1, t}, Pose{R1, -t}, Pose{R2, t}, Pose{R2, -t}};
}

ChiralityResult SelectPoseChirality(
    const Eigen::Matrix3d& E, std::span<const Correspondence> correspondences,
    const Eigen::Matrix3d& K1, const Eigen::Matrix3d& K2) {
  if (correspondences.empty()) {
    throw GeometryError("chirality selection needs at least 1 correspondence");
  }
  CheckCalibration(K1, "K1");
  CheckCalibration(K2, "K2");
  const auto candidates = DecomposeEssential(E);
  const Pose first;
  ChiralityResult result;
  int best = 0;
  for (int c = 0; c < 4; ++c) {
    int count = 0;
    for (const Correspondence& corr : correspondences) {
      try {
        const Eigen::Vector3d X = TriangulateCalibrated(
            first, candidates[c], K1, K2, corr.x1, corr.x2);
        if (InFrontOf(first, X) && InFrontOf(candidates[c], X)) ++count;
      } catch (const GeometryError&) {
      }
    }
    result.in_front[c] = count;
    if (count > best) {
      best = count;
      result.candidate = c;
      result.pose = candidates[c];
    }
  }
  if (result.candidate < 0) {
    throw GeometryError(
        "chirality selection: no candidate places any point in front of both "
        "cameras");
  }
  return result;
}

}  // namespace sfmsemval
