// Command-line front end. Every subcommand reads the shared options declared
// on the top-level app, so flags may appear before or after the command name
// and may also come from a key=value file passed with --config.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sfmsemval/error.h"
#include "sfmsemval/pipeline.h"
#include "sfmsemval/text_format.h"

namespace fs = std::filesystem;
using namespace sfmsemval;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitInternal = 2;

struct Options {
  PipelineConfig config;
  std::string format = "auto";
  std::string policy = "majority";
  std::string order = "motion-first";
  std::string missing = "strict";
  std::string source = "two_view_geometries";
  std::string report_format = "text";
  double label_scale = 0.0;
  double depth_margin = 0.0;
  double extent_margin = -1.0;

  // Resolves the string-valued flags into `config`.
  void Finalize() {
    config.format = ModelFormatFromName(format);
    config.policy = DynamicPolicyFromName(policy);
    if (order == "motion-first") {
      config.order = StageOrder::kMotionFirst;
    } else if (order == "consistency-first") {
      config.order = StageOrder::kConsistencyFirst;
    } else {
      throw InputError("unknown stage order '" + order +
                       "' (expected motion-first or consistency-first)");
    }
    if (missing == "strict") {
      config.missing_maps = MissingMapPolicy::kStrict;
    } else if (missing == "skip") {
      config.missing_maps = MissingMapPolicy::kSkip;
    } else {
      throw InputError("unknown missing-label policy '" + missing +
                       "' (expected strict or skip)");
    }
    config.match_source = MatchSourceFromName(source);
    if (label_scale != 0.0) config.label_scale = label_scale;
    if (depth_margin != 0.0) config.depth_margin = depth_margin;
    if (extent_margin != -1.0) config.extent_margin = extent_margin;
  }
};

struct Labelled {
  SparseModel model;
  ClassTable table;
  std::vector<LabeledObservation> observations;
};

Labelled LoadAndLabel(const PipelineConfig& config) {
  Labelled out;
  out.model = LoadModel(config.model_dir, config.format);
  out.table = ResolveClassTable(config.class_table);
  std::optional<ColorPalette> palette;
  if (!config.palette.empty()) palette = ColorPalette::Load(config.palette);
  const auto maps =
      LoadLabelMaps(config.labels_dir, out.table, palette ? &*palette : nullptr);
  LabelOptions options;
  options.scale = config.label_scale;
  options.missing = config.missing_maps;
  out.observations = LabelModel(out.model, maps, out.table, options);
  return out;
}

// Writes to `path`, or to stdout when the path is empty.
template <typename Write>
void Emit(const fs::path& path, Write write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  write(out);
  if (!out) throw Error("failed writing " + path.string());
}

ValidationReport BaseReport(const Options& options) {
  ValidationReport report;
  report.provenance.config = options.config.Echo();
  report.provenance.seed = options.config.seed;
  return report;
}

int RunStats(const Options& options) {
  options.config.Validate(false);
  const SparseModel model =
      LoadModel(options.config.model_dir, options.config.format);
  ValidationReport report = BaseReport(options);
  report.stages.push_back({"input", ComputeModelStats(model), std::nullopt});
  RenderReport(report, ReportFormatFromName(options.report_format), std::cout);
  return kExitOk;
}

int RunLabel(const Options& options) {
  options.config.Validate(true);
  const Labelled labelled = LoadAndLabel(options.config);
  std::map<ClassId, std::int64_t> histogram;
  for (const auto& obs : labelled.observations) ++histogram[obs.class_id];
  std::cout << "Labelled observations: "
            << FormatCount(static_cast<std::int64_t>(labelled.observations.size()))
            << '\n';
  for (const auto& [id, count] : histogram) {
    std::cout << "  " << labelled.table.Get(id).name << " (" << id
              << "): " << FormatCount(count) << '\n';
  }
  if (!options.config.out_dir.empty()) {
    Emit(options.config.out_dir / "observations.csv", [&](std::ostream& out) {
      out << "image_id,point2d_idx,x,y,point3d_id,class_id\n";
      for (const auto& obs : labelled.observations) {
        out << obs.image_id << ',' << obs.point2d_idx << ',' << FormatDouble(obs.x)
            << ',' << FormatDouble(obs.y) << ',' << obs.point3d_id << ','
            << obs.class_id << '\n';
      }
    });
  }
  return kExitOk;
}

int RunExportCsv(const Options& options) {
  options.config.Validate(true);
  const Labelled labelled = LoadAndLabel(options.config);
  const fs::path path = options.config.out_dir.empty()
                            ? fs::path()
                            : options.config.out_dir / "labeled_points.csv";
  Emit(path, [&](std::ostream& out) {
    ExportLabeledCsv(labelled.observations, labelled.model, labelled.table, out);
  });
  return kExitOk;
}

int RunFilter(const Options& options, bool motion) {
  options.config.Validate(true);
  const Labelled labelled = LoadAndLabel(options.config);
  const FilterResult result =
      motion ? MotionFilter(labelled.model, labelled.observations, labelled.table,
                            options.config.policy)
             : ConsistencyFilter(labelled.model, labelled.observations,
                                 options.config.min_track);
  ValidationReport report = BaseReport(options);
  report.stages.push_back(
      {"input", ComputeModelStats(labelled.model), std::nullopt});
  report.stages.push_back(
      {result.report.stage, ComputeModelStats(result.model), result.report});
  RenderReport(report, ReportFormatFromName(options.report_format), std::cout);
  if (!options.config.out_dir.empty()) {
    fs::create_directories(options.config.out_dir / "model");
    WriteModelText(result.model, options.config.out_dir / "model");
    Emit(options.config.out_dir / "report.json", [&](std::ostream& out) {
      RenderReport(report, ReportFormat::kJson, out);
    });
  }
  return kExitOk;
}

int RunOcclusion(const Options& options) {
  const PipelineConfig& config = options.config;
  const bool need_labels = config.planes_file.empty();
  config.Validate(need_labels);
  SparseModel model;
  std::vector<LabeledPlane> planes;
  if (need_labels) {
    const Labelled labelled = LoadAndLabel(config);
    PlaneExtractionOptions plane_options;
    plane_options.eps = config.eps;
    plane_options.trials = config.trials;
    plane_options.seed = config.seed;
    plane_options.min_inliers = config.min_inliers;
    plane_options.cluster_radius = config.cluster_radius;
    planes = ExtractSemanticPlanes(labelled.model, labelled.observations,
                                   labelled.table, plane_options);
    model = labelled.model;
  } else {
    model = LoadModel(config.model_dir, config.format);
    planes = ReadPlanes(config.planes_file);
  }
  OcclusionOptions occlusion_options;
  occlusion_options.depth_margin = config.depth_margin;
  occlusion_options.extent_margin = config.extent_margin;
  occlusion_options.erroneous_fraction = config.erroneous_fraction;
  const OcclusionResult result = OcclusionValidate(model, planes, occlusion_options);

  ValidationReport report = BaseReport(options);
  report.stages.push_back({"input", ComputeModelStats(model), std::nullopt});
  report.occlusion = result.summary;
  RenderReport(report, ReportFormatFromName(options.report_format), std::cout);
  if (!config.out_dir.empty()) {
    Emit(config.out_dir / "verdicts.csv", [&](std::ostream& out) {
      WriteVerdictsCsv(result.verdicts, out);
    });
    fs::create_directories(config.out_dir);
    WritePlanes(planes, config.out_dir / "planes.txt");
  }
  return kExitOk;
}

int RunMatchMatrix(const Options& options) {
  if (options.config.database.empty()) {
    throw InputError("match-matrix needs --db");
  }
  if (!fs::is_regular_file(options.config.database)) {
    throw InputError("database '" + options.config.database.string() +
                     "' does not exist");
  }
  const MatchMatrix matrix =
      LoadMatchMatrix(options.config.database, options.config.match_source);
  const fs::path path = options.config.out_dir.empty()
                            ? fs::path()
                            : options.config.out_dir / "match_matrix.csv";
  Emit(path, [&](std::ostream& out) { WriteMatchMatrixCsv(matrix, out); });
  return kExitOk;
}

int RunPipelineCommand(const Options& options) {
  const PipelineOutput output = RunPipeline(options.config);
  RenderReport(output.report, ReportFormatFromName(options.report_format),
               std::cout);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic validation of SfM sparse reconstructions"};
  app.set_config("--config", "", "key=value configuration file");
  app.fallthrough();
  app.require_subcommand(1);

  Options options;
  PipelineConfig& c = options.config;
  app.add_option("--model-dir", c.model_dir, "COLMAP sparse model directory");
  app.add_option("--format", options.format, "Model format: text, binary, auto");
  app.add_option("--labels-dir", c.labels_dir, "Directory of label maps");
  app.add_option("--label-scale", options.label_scale,
                 "Label-map / image resolution ratio (derived when omitted)");
  app.add_option("--class-table", c.class_table,
                 "Class-table preset (cityscapes, condensed) or file");
  app.add_option("--palette", c.palette, "RGB -> class id palette file");
  app.add_option("--missing-labels", options.missing,
                 "Images without a label map: strict or skip");
  app.add_option("--policy", options.policy, "Dynamic policy: majority or any");
  app.add_option("--min-track", c.min_track, "Minimum surviving track length");
  app.add_option("--order", options.order,
                 "Filter order: motion-first or consistency-first");
  app.add_option("--eps", c.eps, "Plane inlier distance");
  app.add_option("--trials", c.trials, "Plane RANSAC trials");
  app.add_option("--seed", c.seed, "RANSAC seed");
  app.add_option("--min-inliers", c.min_inliers, "Minimum points per plane");
  app.add_option("--cluster-radius", c.cluster_radius,
                 "Linkage distance for plane clusters");
  app.add_option("--planes-file", c.planes_file, "Read planes instead of fitting");
  app.add_option("--depth-margin", options.depth_margin,
                 "Ray end margin (default 1e-4 x scene diameter)");
  app.add_option("--extent-margin", options.extent_margin,
                 "Plane extent growth (default per-plane margin)");
  app.add_option("--erroneous-fraction", c.erroneous_fraction,
                 "Blocked-ray fraction that marks a point erroneous");
  app.add_flag("--drop-occluded", c.drop_occluded,
               "Delete erroneous points from the output model");
  app.add_option("--db", c.database, "COLMAP database");
  app.add_option("--source", options.source,
                 "Match table: matches or two_view_geometries");
  app.add_option("--out", c.out_dir, "Output directory");
  app.add_option("--report-format", options.report_format,
                 "Report on stdout: text, json, csv");

  auto* stats = app.add_subcommand("stats", "Model statistics");
  auto* label = app.add_subcommand("label", "Label every observation");
  auto* export_csv =
      app.add_subcommand("export-csv", "Semantically labelled points CSV");
  auto* motion = app.add_subcommand("motion-filter", "Remove dynamic points");
  auto* consistency = app.add_subcommand(
      "consistency-filter", "Enforce semantic consistency along tracks");
  auto* occlusion =
      app.add_subcommand("occlusion", "Flag points hidden behind opaque planes");
  auto* match_matrix =
      app.add_subcommand("match-matrix", "Image-by-image match counts");
  auto* pipeline = app.add_subcommand("pipeline", "Run every stage");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitInput;
  }

  try {
    options.Finalize();
    ReportFormatFromName(options.report_format);
    if (stats->parsed()) return RunStats(options);
    if (label->parsed()) return RunLabel(options);
    if (export_csv->parsed()) return RunExportCsv(options);
    if (motion->parsed()) return RunFilter(options, true);
    if (consistency->parsed()) return RunFilter(options, false);
    if (occlusion->parsed()) return RunOcclusion(options);
    if (match_matrix->parsed()) return RunMatchMatrix(options);
    if (pipeline->parsed()) return RunPipelineCommand(options);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const GeometryError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  std::cerr << app.help();
  return kExitInput;
}
