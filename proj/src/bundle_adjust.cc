#include "sfmsemval/bundle_adjust.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

#include "sfmsemval/camera_geometry.h"
#include "sfmsemval/error.h"

namespace sfmsemval {

namespace {

struct ParameterLayout {
  std::map<ImageId, int> rotation;                  // -1 when fixed
  std::map<ImageId, std::array<int, 3>> translation;  // -1 per fixed axis
  std::map<Point3DId, int> point;
  int total = 0;
};

ParameterLayout MakeLayout(const BAProblem& problem) {
  ParameterLayout layout;
  for (const auto& [id, image] : problem.images) {
    if (image.rotation_fixed) {
      layout.rotation[id] = -1;
    } else {
      layout.rotation[id] = layout.total;
      layout.total += 3;
    }
    std::array<int, 3> offsets{};
    for (int k = 0; k < 3; ++k) {
      offsets[k] = image.translation_fixed[k] ? -1 : layout.total++;
    }
    layout.translation[id] = offsets;
  }
  for (const auto& [id, xyz] : problem.points) {
    layout.point[id] = layout.total;
    layout.total += 3;
  }
  return layout;
}

double RadialFactor(const Camera& camera, double r2, double* derivative) {
  switch (camera.model) {
    case CameraModel::kSimpleRadial:
      *derivative = camera.params[3];
      return camera.params[3] * r2;
    case CameraModel::kRadial:
      *derivative = camera.params[3] + 2.0 * camera.params[4] * r2;
      return camera.params[3] * r2 + camera.params[4] * r2 * r2;
    default:
      *derivative = 0.0;
      return 0.0;
  }
}

std::string DescribeObservation(const BAObservation& obs) {
  return "observation (image " + std::to_string(obs.image_id) + ", point " +
         std::to_string(obs.point_id) + ")";
}

}  // namespace

void BAProblem::AddObservation(const BAObservation& observation) {
  const auto key = [](const BAObservation& o) {
    return std::tie(o.image_id, o.point_id);
  };
  const auto it = std::upper_bound(
      observations_.begin(), observations_.end(), observation,
      [&](const BAObservation& a, const BAObservation& b) {
        return key(a) < key(b);
      });
  observations_.insert(it, observation);
}

void BAProblem::Verify() const {
  for (const BAObservation& obs : observations_) {
    if (!images.count(obs.image_id) || !points.count(obs.point_id)) {
      throw InputError(DescribeObservation(obs) +
                       " references a missing parameter block");
    }
  }
  for (const auto& [id, image] : images) VerifyCamera(image.camera);
}

int BAProblem::NumParameters() const { return MakeLayout(*this).total; }

Eigen::VectorXd BAProblem::Residuals() const {
  Eigen::VectorXd r(NumResiduals());
  std::map<ImageId, Eigen::Matrix3d> rotations;
  for (const auto& [id, image] : images) rotations[id] = QuatToRotation(image.qvec);
  for (std::size_t i = 0; i < observations_.size(); ++i) {
    const BAObservation& obs = observations_[i];
    const BAImage& image = images.at(obs.image_id);
    const Eigen::Vector3d x_cam =
        rotations.at(obs.image_id) * points.at(obs.point_id) + image.tvec;
    if (!(x_cam.z() > kMinDepth)) {
      throw GeometryError(DescribeObservation(obs) + " has non-positive depth");
    }
    r.segment<2>(2 * static_cast<Eigen::Index>(i)) =
        CameraToImage(image.camera, x_cam.head<2>() / x_cam.z()) - obs.measured;
  }
  return r;
}

Eigen::MatrixXd BAProblem::AnalyticJacobian() const {
  const ParameterLayout layout = MakeLayout(*this);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(NumResiduals(), layout.total);
  for (std::size_t i = 0; i < observations_.size(); ++i) {
    const BAObservation& obs = observations_[i];
    const BAImage& image = images.at(obs.image_id);
    const Camera& camera = image.camera;
    const Eigen::Matrix3d R = QuatToRotation(image.qvec);
    const Eigen::Vector3d rotated = R * points.at(obs.point_id);
    const Eigen::Vector3d x_cam = rotated + image.tvec;
    if (!(x_cam.z() > kMinDepth)) {
      throw GeometryError(DescribeObservation(obs) + " has non-positive depth");
    }
    const double z = x_cam.z();
    const double u = x_cam.x() / z;
    const double v = x_cam.y() / z;

    Eigen::Matrix<double, 2, 3> d_uv_d_cam;
    d_uv_d_cam << 1.0 / z, 0.0, -u / z,
                  0.0, 1.0 / z, -v / z;

    double rho_prime = 0.0;
    const double rho = RadialFactor(camera, u * u + v * v, &rho_prime);
    Eigen::Matrix2d d_dist;
    d_dist << 1.0 + rho + 2.0 * u * u * rho_prime, 2.0 * u * v * rho_prime,
              2.0 * u * v * rho_prime, 1.0 + rho + 2.0 * v * v * rho_prime;
    const Eigen::Matrix2d focal =
        Eigen::Vector2d(camera.FocalX(), camera.FocalY()).asDiagonal();
    const Eigen::Matrix<double, 2, 3> d_pix_d_cam = focal * d_dist * d_uv_d_cam;

    const auto row = 2 * static_cast<Eigen::Index>(i);
    const int rot = layout.rotation.at(obs.image_id);
    if (rot >= 0) {
      // d(Exp(delta) R X)/d delta at delta = 0 is -[R X]_x.
      Eigen::Matrix3d skew;
      skew << 0, -rotated.z(), rotated.y(),
              rotated.z(), 0, -rotated.x(),
              -rotated.y(), rotated.x(), 0;
      J.block<2, 3>(row, rot) = -d_pix_d_cam * skew;
    }
    const auto& trans = layout.translation.at(obs.image_id);
    for (int k = 0; k < 3; ++k) {
      if (trans[k] >= 0) J.block<2, 1>(row, trans[k]) = d_pix_d_cam.col(k);
    }
    J.block<2, 3>(row, layout.point.at(obs.point_id)) = d_pix_d_cam * R;
  }
  return J;
}

BAProblem BAProblem::Plus(const Eigen::VectorXd& delta) const {
  const ParameterLayout layout = MakeLayout(*this);
  if (delta.size() != layout.total) {
    throw std::invalid_argument("parameter increment has wrong size");
  }
  BAProblem out = *this;
  for (auto& [id, image] : out.images) {
    const int rot = layout.rotation.at(id);
    if (rot >= 0) {
      image.qvec = QuatMultiply(AxisAngleToQuat(delta.segment<3>(rot)), image.qvec);
      image.qvec.normalize();
    }
    const auto& trans = layout.translation.at(id);
    for (int k = 0; k < 3; ++k) {
      if (trans[k] >= 0) image.tvec[k] += delta(trans[k]);
    }
  }
  for (auto& [id, xyz] : out.points) xyz += delta.segment<3>(layout.point.at(id));
  return out;
}

BAProblem BAProblemFromModel(const SparseModel& model) {
  BAProblem problem;
  for (const auto& [id, image] : model.images) {
    BAImage ba;
    ba.image_id = id;
    ba.qvec = image.qvec;
    ba.tvec = image.tvec;
    ba.camera = model.cameras.at(image.camera_id);
    problem.images.emplace(id, ba);
  }
  for (const auto& [id, point] : model.points) {
    problem.points.emplace(id, point.xyz);
    for (const TrackElement& el : point.track) {
      problem.AddObservation(
          {el.image_id, id, model.images.at(el.image_id).points2d.at(el.point2d_idx).xy});
    }
  }
  return problem;
}

double ReprojectionCost(const BAProblem& problem) {
  return problem.Residuals().squaredNorm();
}

Eigen::MatrixXd NumericJacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite-difference step must be > 0");
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd J(f0.size(), x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    probe(k) = x(k) + step;
    const Eigen::VectorXd plus = f(probe);
    probe(k) = x(k) - step;
    const Eigen::VectorXd minus = f(probe);
    probe(k) = x(k);
    J.col(k) = (plus - minus) / (2.0 * step);
  }
  return J;
}

Eigen::MatrixXd NumericJacobian(const BAProblem& problem, double step) {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(problem.NumParameters());
  return NumericJacobian(
      [&](const Eigen::VectorXd& delta) { return problem.Plus(delta).Residuals(); },
      zero, step);
}

BAResult LmRefine(const BAProblem& problem, const BAOptions& options) {
  problem.Verify();
  LmProblem<BAProblem> lm;
  lm.residuals = [](const BAProblem& p) { return p.Residuals(); };
  lm.jacobian = [](const BAProblem& p) { return p.AnalyticJacobian(); };
  lm.plus = [](const BAProblem& p, const Eigen::VectorXd& delta) {
    return p.Plus(delta);
  };
  LmOptions lm_options;
  lm_options.lambda0 = options.lambda0;
  lm_options.max_iters = options.max_iters;
  lm_options.cost_tol = options.cost_tol;

  // A step that drives a point behind a camera counts as a cost increase.
  LmProblem<BAProblem> guarded = lm;
  guarded.residuals = [](const BAProblem& p) -> Eigen::VectorXd {
    try {
      return p.Residuals();
    } catch (const GeometryError&) {
      return Eigen::VectorXd::Constant(p.NumResiduals(),
                                       std::numeric_limits<double>::infinity());
    }
  };
  ReprojectionCost(problem);  // surfaces a bad initial state as GeometryError
  auto result = LevenbergMarquardt<BAProblem>(problem, guarded, lm_options);
  return BAResult{std::move(result.state), std::move(result.cost_trace),
                  result.iterations, result.termination};
}

}  // namespace sfmsemval
