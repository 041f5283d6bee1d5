#pragma once

#include <array>
#include <map>
#include <vector>

#include <Eigen/Core>

#include "sfmsemval/levenberg_marquardt.h"
#include "sfmsemval/model.h"

namespace sfmsemval {

struct BAImage {
  ImageId image_id = 0;
  Eigen::Vector4d qvec = Eigen::Vector4d(1, 0, 0, 0);
  Eigen::Vector3d tvec = Eigen::Vector3d::Zero();
  Camera camera;  // intrinsics stay fixed
  bool rotation_fixed = false;
  std::array<bool, 3> translation_fixed{false, false, false};
};

struct BAObservation {
  ImageId image_id = 0;
  Point3DId point_id = 0;
  Eigen::Vector2d measured = Eigen::Vector2d::Zero();
};

// Poses, points and observations of a reprojection-error problem. Residuals
// are ordered by (image_id, point_id); each contributes (u, v) = projected -
// measured. Free parameters are laid out per image in ascending id (3
// rotation increments unless fixed, then each free translation component),
// then per point in ascending id (x, y, z). Rotation increments are axis-angle
// vectors applied on the left: R <- Exp(delta) R.
class BAProblem {
 public:
  std::map<ImageId, BAImage> images;
  std::map<Point3DId, Eigen::Vector3d> points;

  void AddObservation(const BAObservation& observation);
  const std::vector<BAObservation>& Observations() const {
    return observations_;
  }

  // Throws InputError when an observation references a missing image/point.
  void Verify() const;

  int NumParameters() const;
  int NumResiduals() const { return 2 * static_cast<int>(observations_.size()); }

  // Throws GeometryError naming the observation when its depth is <= 0.
  Eigen::VectorXd Residuals() const;
  Eigen::MatrixXd AnalyticJacobian() const;
  // Applies a parameter increment; quaternions are renormalized.
  BAProblem Plus(const Eigen::VectorXd& delta) const;

 private:
  std::vector<BAObservation> observations_;  // kept sorted
};

// Builds the problem from a loaded model (all images free, all points free).
BAProblem BAProblemFromModel(const SparseModel& model);

// Sum of squared pixel residuals.
double ReprojectionCost(const BAProblem& problem);

// Central finite differences of `f` around `x`. Throws std::invalid_argument
// for a non-positive step.
Eigen::MatrixXd NumericJacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double step);

// Central finite differences of the residual vector w.r.t. the problem's
// free parameters (same layout as AnalyticJacobian).
Eigen::MatrixXd NumericJacobian(const BAProblem& problem, double step);

struct BAOptions {
  double lambda0 = 1e-3;
  int max_iters = 200;
  double cost_tol = 1e-14;
};

struct BAResult {
  BAProblem problem;
  std::vector<double> cost_trace;
  int iterations = 0;
  LmTermination termination = LmTermination::kMaxIterations;
};

BAResult LmRefine(const BAProblem& problem, const BAOptions& options);

}  // namespace sfmsemval
