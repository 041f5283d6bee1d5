#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sfmsemval/camera_geometry.h"
#include "sfmsemval/model.h"
#include "sfmsemval/semantics.h"

namespace sfmsemval {

struct MajorityVote {
  ClassId winner = kUnknownClass;
  int count = 0;
};

// Most frequent label; ties go to the smallest class id. Throws
// std::invalid_argument for an empty input.
MajorityVote MajorityLabel(std::span<const ClassId> labels);

// Before/after counts of one filtering stage. violation_points counts the
// deleted points ("... Violation Points" / "Motion Points Removed").
struct FilterReport {
  std::string stage;
  std::int64_t points_before = 0;
  std::int64_t points_after = 0;
  std::int64_t observations_before = 0;
  std::int64_t observations_after = 0;
  std::int64_t violation_points = 0;
  std::int64_t observations_removed = 0;
  std::optional<double> mean_track_length_before;
  std::optional<double> mean_track_length_after;

  bool operator==(const FilterReport&) const = default;
};

// Builds a report from counts alone, filling the track-length means.
FilterReport MakeFilterReport(std::string stage, std::int64_t points_before,
                              std::int64_t observations_before,
                              std::int64_t points_removed,
                              std::int64_t observations_removed);

struct FilterResult {
  SparseModel model;
  FilterReport report;
};

// Looks up the label of each track element. Elements without a labelled
// observation are kUnknownClass, or an InputError under `strict`.
class ObservationLabels {
 public:
  explicit ObservationLabels(std::span<const LabeledObservation> observations);
  std::optional<ClassId> Find(const TrackElement& element) const;
  // Labels of a whole track, in track order.
  std::vector<ClassId> TrackLabels(const Point3D& point, bool strict) const;

 private:
  std::map<TrackElement, ClassId> labels_;
};

// Drops every track element whose label differs from the track's majority
// label, then deletes points left with fewer than `min_track` observations.
FilterResult ConsistencyFilter(const SparseModel& model,
                               std::span<const LabeledObservation> observations,
                               int min_track = 2, bool strict = false);

enum class DynamicPolicy { kMajority, kAny };
DynamicPolicy DynamicPolicyFromName(const std::string& name);

// Deletes points whose majority label (kMajority) or any label (kAny) is a
// dynamic class of `table`.
FilterResult MotionFilter(const SparseModel& model,
                          std::span<const LabeledObservation> observations,
                          const ClassTable& table,
                          DynamicPolicy policy = DynamicPolicy::kMajority,
                          bool strict = false);

// n (n - 1) / 2.
std::uint64_t ExhaustivePairCount(std::uint64_t n);

inline ModelStats ComputeModelStats(const SparseModel& model) {
  return MeanReprojectionStats(model);
}

}  // namespace sfmsemval
