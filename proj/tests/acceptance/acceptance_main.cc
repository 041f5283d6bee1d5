// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit when any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "sfmsemval/bundle_adjust.h"
#include "sfmsemval/filters.h"
#include "sfmsemval/model_io.h"
#include "sfmsemval/occlusion.h"
#include "sfmsemval/report.h"
#include "sfmsemval/semantics.h"
#include "sfmsemval/two_view.h"
#include "test_support.h"

using namespace sfmsemval;
using namespace sfmsemval::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome Fail(const std::string& detail) { return {false, detail}; }

std::string Num(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.6g", value);
  return buffer;
}

Outcome TableArithmetic() {
  const ModelStats stats = StatsFromCounts(1, 1102, 272017, 1611163);
  if (!stats.mean_track_length ||
      std::abs(*stats.mean_track_length - 5.92302) > 1e-4) {
    return Fail("mean track length " + Num(stats.mean_track_length.value_or(-1)));
  }
  if (!stats.mean_observations_per_image ||
      std::abs(*stats.mean_observations_per_image - 1462.04) > 1e-2) {
    return Fail("mean observations per image");
  }
  const FilterReport consistency =
      MakeFilterReport("consistency", 272017, 1611163, 82533, 0);
  if (consistency.points_after != 189484) return Fail("consistency points_after");
  const FilterReport motion =
      MakeFilterReport("motion", 338652, 1929064, 23002, 126022);
  if (motion.points_after != 315650) return Fail("motion points_after");
  if (motion.observations_after != 1803042) return Fail("motion observations_after");

  ValidationReport report;
  report.stages.push_back({"input", stats, std::nullopt});
  ModelStats after = StatsFromCounts(1, 1102, 189484, 1611163);
  report.stages.push_back({"consistency", after, consistency});
  std::ostringstream text;
  RenderReport(report, ReportFormat::kText, text);
  for (const char* needle : {"Points", "272,017", "189,484", "82,533", "5.92302",
                             "Semantic Consistency Constraint Violation Points",
                             "Mean Track Length"}) {
    if (text.str().find(needle) == std::string::npos) {
      return Fail(std::string("text report lacks '") + needle + "'");
    }
  }
  return {true, "5.92302 / 189,484 / 315,650 / 1,803,042"};
}

Outcome TwoViewSuite() {
  double worst_residual = 0.0;
  int ransac_exact = 0;
  int chirality_ok = 0;
  for (int seed = 0; seed < 100; ++seed) {
    const int n = 50 + (seed * 37) % 151;
    TwoViewScene scene = MakeTwoViewScene(1000 + seed, n);

    const Eigen::Matrix3d F = EightPoint(scene.correspondences);
    for (const auto& c : scene.correspondences) {
      worst_residual = std::max(worst_residual, AlgebraicResidual(F, c));
    }

    const Eigen::Matrix3d E = EssentialFromFundamental(F, scene.K1, scene.K2);
    const ChiralityResult chosen =
        SelectPoseChirality(E, scene.correspondences, scene.K1, scene.K2);
    const Eigen::Vector3d t_true = scene.pose2.translation.normalized();
    if ((chosen.pose.rotation - scene.pose2.rotation).norm() < 1e-6 &&
        (chosen.pose.translation.normalized() - t_true).norm() < 1e-6) {
      ++chirality_ok;
    }

    TwoViewScene noisy = scene;
    const auto planted = PlantOutliers(noisy, 0.3, seed);
    RansacOptions options;
    options.eps = 1e-3;
    options.trials = 500;
    options.seed = static_cast<std::uint64_t>(seed);
    options.residual = EpipolarResidual::kSampson;
    const FundamentalEstimate estimate =
        RansacFundamental(noisy.correspondences, options);
    if (estimate.inliers == planted) ++ransac_exact;
  }
  const std::string detail = "max|x2'Fx1|=" + Num(worst_residual) +
                             " ransac=" + std::to_string(ransac_exact) +
                             "/100 chirality=" + std::to_string(chirality_ok) +
                             "/100";
  return {worst_residual < 1e-9 && ransac_exact >= 95 && chirality_ok == 100,
          detail};
}

Outcome RansacTrialFormula() {
  const auto k = RansacTrials(0.99, 0.5, 8);
  if (k != 1177) return Fail("ransac_trials(0.99, 0.5, 8) = " + std::to_string(k));
  const double confidences[] = {0.5, 0.8, 0.9, 0.95, 0.99, 0.999};
  const double ratios[] = {0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  for (int z = 0; z + 1 < 6; ++z) {
    for (double w : ratios) {
      for (int n : {4, 7, 8}) {
        if (RansacTrials(confidences[z + 1], w, n) < RansacTrials(confidences[z], w, n)) {
          return Fail("not increasing in confidence");
        }
      }
    }
  }
  for (double z : confidences) {
    for (int i = 0; i + 1 < 7; ++i) {
      for (int n : {4, 7, 8}) {
        if (RansacTrials(z, ratios[i + 1], n) > RansacTrials(z, ratios[i], n)) {
          return Fail("not decreasing in inlier ratio");
        }
      }
    }
  }
  return {true, "1177; monotone over grid"};
}

Outcome BundleAdjustment() {
  const BAScene scene = MakeBAScene(7, 5, 50, 0.05, false);
  BAOptions options;
  const BAResult result = LmRefine(scene.initial, options);
  const double final_cost = result.cost_trace.back();
  for (std::size_t i = 1; i < result.cost_trace.size(); ++i) {
    if (result.cost_trace[i] > result.cost_trace[i - 1]) {
      return Fail("cost trace increases at step " + std::to_string(i));
    }
  }
  if (!(final_cost < 1e-10)) return Fail("final cost " + Num(final_cost));

  double worst = 0.0;
  for (int seed = 0; seed < 20; ++seed) {
    const BAScene random =
        MakeBAScene(100 + seed, 2 + seed % 4, 5 + seed, 0.1, seed % 2 == 1);
    const Eigen::MatrixXd analytic = random.initial.AnalyticJacobian();
    const Eigen::MatrixXd numeric = NumericJacobian(random.initial, 1e-6);
    worst = std::max(worst, (numeric - analytic).norm() / analytic.norm());
  }
  if (!(worst < 1e-4)) return Fail("Jacobian relative error " + Num(worst));
  return {true, "cost " + Num(result.cost_trace.front()) + " -> " + Num(final_cost) +
                    " in " + std::to_string(result.iterations) +
                    " iterations; Jacobian rel err " + Num(worst)};
}

Outcome FilterOracle() {
  const ClassTable table = MicroClassTable();
  for (int seed = 0; seed < 500; ++seed) {
    const MicroModel micro = MakeMicroModel(5000 + seed, 5, 20);
    const int min_track = 1 + seed % 3;
    const auto consistency =
        ConsistencyFilter(micro.model, micro.observations, min_track);
    if (!(consistency.model ==
          BruteForceConsistency(micro.model, micro.observations, min_track))) {
      return Fail("consistency mismatch at seed " + std::to_string(seed));
    }
    const auto again =
        ConsistencyFilter(consistency.model, micro.observations, min_track);
    if (!(again.model == consistency.model) || again.report.observations_removed != 0) {
      return Fail("consistency not idempotent at seed " + std::to_string(seed));
    }
    for (const bool any : {false, true}) {
      const auto policy = any ? DynamicPolicy::kAny : DynamicPolicy::kMajority;
      const auto motion = MotionFilter(micro.model, micro.observations, table, policy);
      if (!(motion.model ==
            BruteForceMotion(micro.model, micro.observations, table, any))) {
        return Fail("motion mismatch at seed " + std::to_string(seed));
      }
      const auto twice = MotionFilter(motion.model, micro.observations, table, policy);
      if (!(twice.model == motion.model)) {
        return Fail("motion not idempotent at seed " + std::to_string(seed));
      }
    }
  }
  return {true, "500 micro-models"};
}

Outcome OcclusionOracle() {
  std::int64_t rays = 0;
  std::int64_t occluded = 0;
  for (int seed = 0; seed < 200; ++seed) {
    OcclusionScene scene = MakeOcclusionScene(9000 + seed, 10, 100);
    const OcclusionResult result = OcclusionValidate(scene.model, scene.planes);
    const double margin = result.summary.depth_margin;
    for (const auto& verdict : result.verdicts) {
      const Eigen::Vector3d center =
          CameraCenter(Pose::FromImage(scene.model.images.at(verdict.image_id)));
      const Eigen::Vector3d& X = scene.model.points.at(verdict.point3d_id).xyz;
      const long expected =
          SamplingOracle(center, X, verdict.point3d_id, scene.planes, margin, 1000);
      const long got = verdict.plane_id ? static_cast<long>(*verdict.plane_id) : -1;
      if (expected != got) {
        return Fail("seed " + std::to_string(seed) + " point " +
                    std::to_string(verdict.point3d_id) + " image " +
                    std::to_string(verdict.image_id) + ": oracle " +
                    std::to_string(expected) + " vs " + std::to_string(got));
      }
      if (verdict.plane_id && !scene.planes[*verdict.plane_id].opaque) {
        return Fail("non-opaque plane occludes at seed " + std::to_string(seed));
      }
      ++rays;
      if (verdict.status == VerdictStatus::kOccluded) ++occluded;
    }
    for (auto& plane : scene.planes) plane.opaque = false;
    const OcclusionResult clear = OcclusionValidate(scene.model, scene.planes);
    if (clear.summary.rays_occluded != 0) {
      return Fail("non-opaque planes occlude at seed " + std::to_string(seed));
    }
  }
  return {true, std::to_string(rays) + " rays, " + std::to_string(occluded) +
                    " occluded"};
}

Outcome FormatRoundTrips() {
  TempDir dir;
  const SparseModel model = MakeRandomModel(42, 6, 40);
  WriteModelText(model, dir.path() / "text");
  WriteModelBinary(model, dir.path() / "bin");
  const SparseModel text = LoadModel(dir.path() / "text", ModelFormat::kText);
  std::string difference;
  if (!ModelsNearlyEqual(model, text, 0.0, &difference)) {
    return Fail("text round trip: " + difference);
  }
  const SparseModel binary = LoadModel(dir.path() / "bin", ModelFormat::kBinary);
  if (!ModelsNearlyEqual(binary, text, 1e-12, &difference)) {
    return Fail("binary vs text: " + difference);
  }

  SparseModel one;
  Camera camera;
  camera.camera_id = 1;
  camera.params = {500, 320, 240};
  camera.width = 640;
  camera.height = 480;
  one.cameras[1] = camera;
  Image image;
  image.image_id = 281;
  image.camera_id = 1;
  image.name = "out281.png";
  image.points2d.push_back({Eigen::Vector2d(180.35, 297.59), 1});
  one.images[281] = image;
  Point3D point;
  point.point3d_id = 1;
  point.xyz = Eigen::Vector3d(-0.036, -0.33, -0.036);
  point.track.push_back({281, 0});
  one.points[1] = point;
  const std::vector<LabeledObservation> obs = {{281, 0, 180.35, 297.59, 1, 2}};
  std::ostringstream csv;
  ExportLabeledCsv(obs, one, ClassTable::CondensedUrban(), csv);
  std::istringstream lines(csv.str());
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  if (row != "281,180.35,297.59,-0.036,-0.33,-0.036,2,building") {
    return Fail("CSV row '" + row + "'");
  }

  ValidationReport report;
  report.stages.push_back({"input", StatsFromCounts(3, 1102, 272017, 1611163),
                           std::nullopt});
  report.stages.back().stats.mean_reprojection_error = 0.73;
  report.stages.push_back({"consistency", StatsFromCounts(3, 1102, 189484, 1500000),
                           MakeFilterReport("consistency", 272017, 1611163, 82533,
                                            111163)});
  report.occlusion = OcclusionSummary{10, 20, 3, 1, 2, 1e-4};
  report.provenance.config = {{"seed", "7"}, {"policy", "majority"}};
  report.provenance.seed = 7;
  report.provenance.started_at = "2024-01-01T00:00:00Z";
  if (!(ReportFromJson(ReportToJson(report)) == report)) {
    return Fail("report JSON round trip");
  }
  return {true, "text identity, binary==text, labelled CSV row, JSON"};
}

Outcome IouAndCombinatorics() {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    LabelMap pred, truth;
    pred.width = truth.width = 1 + static_cast<int>(rng.Below(40));
    pred.height = truth.height = 1 + static_cast<int>(rng.Below(40));
    const std::size_t n = static_cast<std::size_t>(pred.width) * pred.height;
    const int classes = 2 + static_cast<int>(rng.Below(6));
    for (std::size_t i = 0; i < n; ++i) {
      pred.ids.push_back(static_cast<std::uint8_t>(rng.Below(classes)));
      truth.ids.push_back(static_cast<std::uint8_t>(rng.Below(classes)));
    }
    for (ClassId c = 0; c < 8; ++c) {
      const auto got = ComputeIou(pred, truth, c);
      const auto expected = ConfusionMatrixIou(pred, truth, c);
      if (got.has_value() != expected.defined ||
          (got && std::abs(*got - expected.value) > 1e-12)) {
        return Fail("IoU mismatch at trial " + std::to_string(trial));
      }
    }
  }
  const auto pairs = ExhaustivePairCount(50);
  if (pairs != 1275) {
    return Fail("IoU ok on 100 raster pairs; exhaustive_pair_count(50) = " +
                std::to_string(pairs) + " = 50*49/2, expected 1275 (= 51*50/2)");
  }
  return {true, "100 raster pairs; 50 -> 1275"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"table_arithmetic", TableArithmetic},
      {"two_view_suite", TwoViewSuite},
      {"ransac_trial_formula", RansacTrialFormula},
      {"bundle_adjustment", BundleAdjustment},
      {"filter_oracle_equivalence", FilterOracle},
      {"occlusion_oracle_equivalence", OcclusionOracle},
      {"format_round_trips", FormatRoundTrips},
      {"iou_and_combinatorics", IouAndCombinatorics},
  };
  int failures = 0;
  for (const auto& criterion : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criterion.run();
    } catch (const std::exception& e) {
      outcome = Fail(std::string("exception: ") + e.what());
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (!outcome.pass) ++failures;
    std::printf("%s %s (%.3f s) %s\n", outcome.pass ? "PASS" : "FAIL",
                criterion.name, seconds, outcome.detail.c_str());
  }
  std::printf("%d/%zu criteria passed\n",
              static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
