#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "sfmsemval/filters.h"
#include "sfmsemval/match_matrix.h"
#include "sfmsemval/model_io.h"
#include "sfmsemval/occlusion.h"
#include "sfmsemval/planes.h"
#include "sfmsemval/report.h"
#include "sfmsemval/semantics.h"

namespace sfmsemval {

enum class StageOrder { kMotionFirst, kConsistencyFirst };

struct PipelineConfig {
  std::filesystem::path model_dir;
  ModelFormat format = ModelFormat::kAuto;
  std::filesystem::path labels_dir;
  std::optional<double> label_scale;
  // Preset name ("cityscapes", "condensed") or a class-table file.
  std::string class_table = "cityscapes";
  std::filesystem::path palette;
  MissingMapPolicy missing_maps = MissingMapPolicy::kStrict;
  DynamicPolicy policy = DynamicPolicy::kMajority;
  int min_track = 2;
  StageOrder order = StageOrder::kMotionFirst;
  // Plane fitting.
  double eps = 0.05;
  int trials = 500;
  std::uint64_t seed = 0;
  int min_inliers = 10;
  double cluster_radius = 0.5;
  std::filesystem::path planes_file;
  // Occlusion.
  std::optional<double> depth_margin;
  std::optional<double> extent_margin;
  double erroneous_fraction = 0.5;
  bool drop_occluded = false;
  // Match matrix.
  std::filesystem::path database;
  MatchSource match_source = MatchSource::kTwoViewGeometries;
  std::filesystem::path out_dir;

  // Throws InputError for non-positive numeric options or missing paths.
  void Validate(bool need_labels) const;
  std::map<std::string, std::string> Echo() const;
};

ClassTable ResolveClassTable(const std::string& name);

struct PipelineOutput {
  SparseModel model;
  ValidationReport report;
  std::vector<LabeledObservation> observations;
  std::vector<LabeledPlane> planes;
  OcclusionResult occlusion;
};

// Label -> motion filter -> consistency filter (or the reverse order) ->
// plane extraction (or planes_file) -> occlusion. When out_dir is set, writes
// model/ (text), labeled_points.csv, planes.txt, verdicts.csv, points.ply,
// report.{txt,json,csv} and match_matrix.csv when a database is given.
PipelineOutput RunPipeline(const PipelineConfig& config);

}  // namespace sfmsemval
