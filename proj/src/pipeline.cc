#include "sfmsemval/pipeline.h"

#include <chrono>
#include <ctime>
#include <fstream>

#include "sfmsemval/error.h"
#include "sfmsemval/text_format.h"

namespace fs = std::filesystem;

namespace sfmsemval {

namespace {

void RequirePath(const fs::path& path, const std::string& what, bool directory) {
  const bool ok = directory ? fs::is_directory(path) : fs::is_regular_file(path);
  if (!ok) {
    throw InputError(what + " '" + path.string() + "' does not exist");
  }
}

std::string UtcNow() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

std::string FormatName(ModelFormat format) {
  switch (format) {
    case ModelFormat::kText:
      return "text";
    case ModelFormat::kBinary:
      return "binary";
    case ModelFormat::kAuto:
      break;
  }
  return "auto";
}

std::string OptionalValue(const std::optional<double>& value) {
  return value ? FormatDouble(*value) : "default";
}

// Observations whose 2D point is still linked to the same 3D point.
std::vector<LabeledObservation> SurvivingObservations(
    const SparseModel& model, const std::vector<LabeledObservation>& observations) {
  std::vector<LabeledObservation> kept;
  for (const auto& obs : observations) {
    const auto image = model.images.find(obs.image_id);
    if (image == model.images.end() ||
        obs.point2d_idx >= image->second.points2d.size()) {
      continue;
    }
    if (image->second.points2d[obs.point2d_idx].point3d_id == obs.point3d_id) {
      kept.push_back(obs);
    }
  }
  return kept;
}

template <typename Write>
void WriteFile(const fs::path& path, Write write) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  write(out);
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

void PipelineConfig::Validate(bool need_labels) const {
  RequirePath(model_dir, "model directory", true);
  if (need_labels) RequirePath(labels_dir, "label directory", true);
  if (!palette.empty()) RequirePath(palette, "palette file", false);
  if (!planes_file.empty()) RequirePath(planes_file, "plane file", false);
  if (!database.empty()) RequirePath(database, "database", false);
  if (label_scale && !(*label_scale > 0.0)) {
    throw InputError("label scale must be positive");
  }
  if (min_track < 1) throw InputError("min-track must be at least 1");
  if (!(eps > 0.0)) throw InputError("eps must be positive");
  if (trials < 1) throw InputError("trials must be positive");
  if (min_inliers < 3) throw InputError("min-inliers must be at least 3");
  if (!(cluster_radius > 0.0)) throw InputError("cluster radius must be positive");
  if (depth_margin && !(*depth_margin > 0.0)) {
    throw InputError("depth margin must be positive");
  }
  if (extent_margin && !(*extent_margin >= 0.0)) {
    throw InputError("extent margin must be non-negative");
  }
  if (!(erroneous_fraction > 0.0 && erroneous_fraction <= 1.0)) {
    throw InputError("erroneous fraction must lie in (0, 1]");
  }
}

std::map<std::string, std::string> PipelineConfig::Echo() const {
  std::map<std::string, std::string> echo;
  echo["model_dir"] = model_dir.string();
  echo["format"] = FormatName(format);
  echo["labels_dir"] = labels_dir.string();
  echo["label_scale"] = OptionalValue(label_scale);
  echo["class_table"] = class_table;
  echo["palette"] = palette.string();
  echo["missing_labels"] = missing_maps == MissingMapPolicy::kSkip ? "skip" : "strict";
  echo["policy"] = policy == DynamicPolicy::kAny ? "any" : "majority";
  echo["min_track"] = std::to_string(min_track);
  echo["order"] = order == StageOrder::kMotionFirst ? "motion-first"
                                                     : "consistency-first";
  echo["eps"] = FormatDouble(eps);
  echo["trials"] = std::to_string(trials);
  echo["seed"] = std::to_string(seed);
  echo["min_inliers"] = std::to_string(min_inliers);
  echo["cluster_radius"] = FormatDouble(cluster_radius);
  echo["planes_file"] = planes_file.string();
  echo["depth_margin"] = OptionalValue(depth_margin);
  echo["extent_margin"] = OptionalValue(extent_margin);
  echo["erroneous_fraction"] = FormatDouble(erroneous_fraction);
  echo["drop_occluded"] = drop_occluded ? "true" : "false";
  echo["database"] = database.string();
  echo["match_source"] = match_source == MatchSource::kMatches
                             ? "matches"
                             : "two_view_geometries";
  return echo;
}

ClassTable ResolveClassTable(const std::string& name) {
  if (name == "cityscapes" || name == "condensed") return ClassTable::Preset(name);
  return ClassTable::Load(name);
}

PipelineOutput RunPipeline(const PipelineConfig& config) {
  config.Validate(true);
  PipelineOutput output;
  ValidationReport& report = output.report;
  report.provenance.config = config.Echo();
  report.provenance.seed = config.seed;
  report.provenance.started_at = UtcNow();

  output.model = LoadModel(config.model_dir, config.format);
  const ClassTable table = ResolveClassTable(config.class_table);
  std::optional<ColorPalette> palette;
  if (!config.palette.empty()) palette = ColorPalette::Load(config.palette);
  const auto maps =
      LoadLabelMaps(config.labels_dir, table, palette ? &*palette : nullptr);
  LabelOptions label_options;
  label_options.scale = config.label_scale;
  label_options.missing = config.missing_maps;
  output.observations = LabelModel(output.model, maps, table, label_options);

  report.stages.push_back({"input", ComputeModelStats(output.model), std::nullopt});
  auto run_motion = [&] {
    auto result = MotionFilter(output.model, output.observations, table,
                               config.policy);
    output.model = std::move(result.model);
    report.stages.push_back(
        {"motion", ComputeModelStats(output.model), std::move(result.report)});
  };
  auto run_consistency = [&] {
    auto result =
        ConsistencyFilter(output.model, output.observations, config.min_track);
    output.model = std::move(result.model);
    report.stages.push_back({"consistency", ComputeModelStats(output.model),
                             std::move(result.report)});
  };
  if (config.order == StageOrder::kMotionFirst) {
    run_motion();
    run_consistency();
  } else {
    run_consistency();
    run_motion();
  }
  output.observations = SurvivingObservations(output.model, output.observations);

  if (!config.planes_file.empty()) {
    output.planes = ReadPlanes(config.planes_file);
  } else {
    PlaneExtractionOptions plane_options;
    plane_options.eps = config.eps;
    plane_options.trials = config.trials;
    plane_options.seed = config.seed;
    plane_options.min_inliers = config.min_inliers;
    plane_options.cluster_radius = config.cluster_radius;
    output.planes =
        ExtractSemanticPlanes(output.model, output.observations, table, plane_options);
  }

  OcclusionOptions occlusion_options;
  occlusion_options.depth_margin = config.depth_margin;
  occlusion_options.extent_margin = config.extent_margin;
  occlusion_options.erroneous_fraction = config.erroneous_fraction;
  output.occlusion = OcclusionValidate(output.model, output.planes, occlusion_options);
  report.occlusion = output.occlusion.summary;

  std::map<Point3DId, int> status;
  for (const Point3DId id : output.occlusion.erroneous_points) status[id] = 1;
  if (config.drop_occluded) {
    const auto points_before = static_cast<std::int64_t>(output.model.points.size());
    const auto observations_before =
        static_cast<std::int64_t>(output.model.NumObservations());
    std::int64_t observations_removed = 0;
    for (const Point3DId id : output.occlusion.erroneous_points) {
      observations_removed +=
          static_cast<std::int64_t>(output.model.points.at(id).track.size());
      DeletePoint(output.model, id);
    }
    report.stages.push_back(
        {"occlusion", ComputeModelStats(output.model),
         MakeFilterReport("occlusion", points_before, observations_before,
                          static_cast<std::int64_t>(
                              output.occlusion.erroneous_points.size()),
                          observations_removed)});
    output.observations = SurvivingObservations(output.model, output.observations);
  }
  report.provenance.finished_at = UtcNow();

  if (!config.out_dir.empty()) {
    const fs::path& out = config.out_dir;
    fs::create_directories(out / "model");
    WriteModelText(output.model, out / "model");
    WriteFile(out / "labeled_points.csv", [&](std::ostream& s) {
      ExportLabeledCsv(output.observations, output.model, table, s);
    });
    WritePlanes(output.planes, out / "planes.txt");
    WriteFile(out / "verdicts.csv", [&](std::ostream& s) {
      WriteVerdictsCsv(output.occlusion.verdicts, s);
    });
    WritePointsPly(output.model, status, out / "points.ply");
    WriteFile(out / "report.txt",
              [&](std::ostream& s) { RenderReport(report, ReportFormat::kText, s); });
    WriteFile(out / "report.json",
              [&](std::ostream& s) { RenderReport(report, ReportFormat::kJson, s); });
    WriteFile(out / "report.csv",
              [&](std::ostream& s) { RenderReport(report, ReportFormat::kCsv, s); });
    if (!config.database.empty()) {
      const MatchMatrix matrix =
          LoadMatchMatrix(config.database, config.match_source);
      WriteFile(out / "match_matrix.csv",
                [&](std::ostream& s) { WriteMatchMatrixCsv(matrix, s); });
    }
  }
  return output;
}

}  // namespace sfmsemval
