#include "sfmsemval/filters.h"

#include <algorithm>
#include <stdexcept>

#include "sfmsemval/error.h"
#include "sfmsemval/parallel.h"

namespace sfmsemval {

MajorityVote MajorityLabel(std::span<const ClassId> labels) {
  if (labels.empty()) {
    throw std::invalid_argument("majority label of an empty label set");
  }
  std::map<ClassId, int> counts;
  for (const ClassId label : labels) ++counts[label];
  MajorityVote vote;
  vote.winner = counts.begin()->first;
  // Ascending id order, so a strict comparison keeps the smallest id on ties.
  for (const auto& [label, count] : counts) {
    if (count > vote.count) vote = {label, count};
  }
  return vote;
}

FilterReport MakeFilterReport(std::string stage, std::int64_t points_before,
                              std::int64_t observations_before,
                              std::int64_t points_removed,
                              std::int64_t observations_removed) {
  FilterReport report;
  report.stage = std::move(stage);
  report.points_before = points_before;
  report.points_after = points_before - points_removed;
  report.observations_before = observations_before;
  report.observations_after = observations_before - observations_removed;
  report.violation_points = points_removed;
  report.observations_removed = observations_removed;
  if (report.points_before > 0) {
    report.mean_track_length_before =
        static_cast<double>(report.observations_before) / report.points_before;
  }
  if (report.points_after > 0) {
    report.mean_track_length_after =
        static_cast<double>(report.observations_after) / report.points_after;
  }
  return report;
}

ObservationLabels::ObservationLabels(
    std::span<const LabeledObservation> observations) {
  for (const auto& obs : observations) {
    labels_[{obs.image_id, obs.point2d_idx}] = obs.class_id;
  }
}

std::optional<ClassId> ObservationLabels::Find(const TrackElement& element) const {
  const auto it = labels_.find(element);
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

std::vector<ClassId> ObservationLabels::TrackLabels(const Point3D& point,
                                                    bool strict) const {
  std::vector<ClassId> labels;
  labels.reserve(point.track.size());
  for (const auto& element : point.track) {
    const auto label = Find(element);
    if (!label && strict) {
      throw InputError("observation (image " + std::to_string(element.image_id) +
                       ", point2D " + std::to_string(element.point2d_idx) +
                       ") of point " + std::to_string(point.point3d_id) +
                       " has no label");
    }
    labels.push_back(label.value_or(kUnknownClass));
  }
  return labels;
}

namespace {

struct PointDecision {
  bool remove_point = false;
  std::vector<TrackElement> unlink;
};

template <typename Decide>
FilterResult ApplyDecisions(const SparseModel& model, const std::string& stage,
                            Decide decide) {
  std::vector<const Point3D*> points;
  points.reserve(model.points.size());
  for (const auto& [id, point] : model.points) points.push_back(&point);

  std::vector<PointDecision> decisions(points.size());
  ParallelFor(points.size(),
              [&](std::size_t i) { decisions[i] = decide(*points[i]); });

  FilterResult result{model, {}};
  std::int64_t points_removed = 0;
  std::int64_t observations_removed = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point3DId id = points[i]->point3d_id;
    for (const auto& element : decisions[i].unlink) {
      if (UnlinkObservation(result.model, id, element)) ++observations_removed;
    }
    if (decisions[i].remove_point) {
      observations_removed +=
          static_cast<std::int64_t>(result.model.points.at(id).track.size());
      DeletePoint(result.model, id);
      ++points_removed;
    }
  }
  result.report = MakeFilterReport(
      stage, static_cast<std::int64_t>(model.points.size()),
      static_cast<std::int64_t>(model.NumObservations()), points_removed,
      observations_removed);
  return result;
}

}  // namespace

FilterResult ConsistencyFilter(const SparseModel& model,
                               std::span<const LabeledObservation> observations,
                               int min_track, bool strict) {
  if (min_track < 1) throw InputError("min_track must be at least 1");
  const ObservationLabels labels(observations);
  return ApplyDecisions(model, "consistency", [&](const Point3D& point) {
    PointDecision decision;
    if (point.track.empty()) {
      decision.remove_point = true;
      return decision;
    }
    const auto track_labels = labels.TrackLabels(point, strict);
    const ClassId winner = MajorityLabel(track_labels).winner;
    std::size_t kept = 0;
    for (std::size_t k = 0; k < point.track.size(); ++k) {
      if (track_labels[k] == winner) {
        ++kept;
      } else {
        decision.unlink.push_back(point.track[k]);
      }
    }
    decision.remove_point = kept < static_cast<std::size_t>(min_track);
    return decision;
  });
}

DynamicPolicy DynamicPolicyFromName(const std::string& name) {
  if (name == "majority") return DynamicPolicy::kMajority;
  if (name == "any") return DynamicPolicy::kAny;
  throw InputError("unknown dynamic policy '" + name +
                   "' (expected majority or any)");
}

FilterResult MotionFilter(const SparseModel& model,
                          std::span<const LabeledObservation> observations,
                          const ClassTable& table, DynamicPolicy policy,
                          bool strict) {
  const ObservationLabels labels(observations);
  return ApplyDecisions(model, "motion", [&](const Point3D& point) {
    PointDecision decision;
    if (point.track.empty()) return decision;
    const auto track_labels = labels.TrackLabels(point, strict);
    if (policy == DynamicPolicy::kMajority) {
      decision.remove_point =
          table.IsDynamic(MajorityLabel(track_labels).winner);
    } else {
      decision.remove_point =
          std::any_of(track_labels.begin(), track_labels.end(),
                      [&](ClassId id) { return table.IsDynamic(id); });
    }
    return decision;
  });
}

std::uint64_t ExhaustivePairCount(std::uint64_t n) {
  return n < 2 ? 0 : (n % 2 == 0 ? (n / 2) * (n - 1) : n * ((n - 1) / 2));
}

}  // namespace sfmsemval
