#include "sfmsemval/report.h"

#include <algorithm>
#include <functional>

#include <json.hpp>

#include "sfmsemval/error.h"
#include "sfmsemval/text_format.h"

namespace sfmsemval {

using Json = nlohmann::ordered_json;

ReportFormat ReportFormatFromName(const std::string& name) {
  if (name == "text") return ReportFormat::kText;
  if (name == "json") return ReportFormat::kJson;
  if (name == "csv") return ReportFormat::kCsv;
  throw InputError("unknown report format '" + name + "'");
}

namespace {

std::string Mean(const std::optional<double>& value) {
  return value ? FormatSignificant(*value, 6) : std::string();
}

// Label for the count of points a filter stage deleted.
std::string RemovedPointsLabel(const std::string& stage) {
  if (stage == "consistency") {
    return "Semantic Consistency Constraint Violation Points";
  }
  if (stage == "motion") return "Motion Points Removed";
  if (stage == "occlusion") return "Occluded Points Removed";
  return "Points Removed";
}

struct Row {
  std::string label;
  std::vector<std::string> cells;
};

void RenderText(const ValidationReport& report, std::ostream& out) {
  std::vector<Row> rows;
  auto add_stat_row = [&](const std::string& label,
                          const std::function<std::string(const ModelStats&)>& cell) {
    Row row{label, {}};
    for (const auto& stage : report.stages) row.cells.push_back(cell(stage.stats));
    rows.push_back(std::move(row));
  };
  add_stat_row("Cameras", [](const ModelStats& s) { return FormatCount(s.cameras); });
  add_stat_row("Images", [](const ModelStats& s) { return FormatCount(s.images); });
  add_stat_row("Registered Images",
               [](const ModelStats& s) { return FormatCount(s.registered_images); });
  add_stat_row("Points", [](const ModelStats& s) { return FormatCount(s.points); });
  add_stat_row("Observations",
               [](const ModelStats& s) { return FormatCount(s.observations); });
  add_stat_row("Mean Track Length",
               [](const ModelStats& s) { return Mean(s.mean_track_length); });
  add_stat_row("Mean Observations per Image", [](const ModelStats& s) {
    return Mean(s.mean_observations_per_image);
  });
  add_stat_row("Mean Re-projection Error",
               [](const ModelStats& s) { return Mean(s.mean_reprojection_error); });

  std::vector<std::string> filter_labels;
  for (const auto& stage : report.stages) {
    if (!stage.filter) continue;
    const std::string label = RemovedPointsLabel(stage.filter->stage);
    if (std::find(filter_labels.begin(), filter_labels.end(), label) ==
        filter_labels.end()) {
      filter_labels.push_back(label);
    }
  }
  for (const auto& label : filter_labels) {
    Row row{label, {}};
    for (const auto& stage : report.stages) {
      row.cells.push_back(stage.filter && RemovedPointsLabel(stage.filter->stage) == label
                              ? FormatCount(stage.filter->violation_points)
                              : std::string());
    }
    rows.push_back(std::move(row));
  }
  if (!filter_labels.empty()) {
    Row row{"Observations Removed", {}};
    for (const auto& stage : report.stages) {
      row.cells.push_back(stage.filter
                              ? FormatCount(stage.filter->observations_removed)
                              : std::string());
    }
    rows.push_back(std::move(row));
  }

  std::size_t label_width = std::string("Statistic").size();
  std::vector<std::size_t> widths;
  for (const auto& stage : report.stages) widths.push_back(stage.name.size());
  for (const auto& row : rows) {
    label_width = std::max(label_width, row.label.size());
    for (std::size_t c = 0; c < row.cells.size(); ++c) {
      widths[c] = std::max(widths[c], row.cells[c].size());
    }
  }
  auto pad_right = [](const std::string& s, std::size_t w) {
    return s + std::string(w - s.size(), ' ');
  };
  auto pad_left = [](const std::string& s, std::size_t w) {
    return std::string(w - s.size(), ' ') + s;
  };
  std::string header = pad_right("Statistic", label_width);
  for (std::size_t c = 0; c < report.stages.size(); ++c) {
    header += "  " + pad_left(report.stages[c].name, widths[c]);
  }
  while (!header.empty() && header.back() == ' ') header.pop_back();
  out << header << '\n';
  for (const auto& row : rows) {
    if (std::all_of(row.cells.begin(), row.cells.end(),
                    [](const std::string& c) { return c.empty(); })) {
      continue;
    }
    std::string line = pad_right(row.label, label_width);
    for (std::size_t c = 0; c < row.cells.size(); ++c) {
      line += "  " + pad_left(row.cells[c], widths[c]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
  }
  if (report.occlusion) {
    const auto& o = *report.occlusion;
    out << "\nOcclusion\n"
        << "  Opaque Planes     " << FormatCount(o.opaque_planes) << '\n'
        << "  Points Checked    " << FormatCount(o.points_checked) << '\n'
        << "  Rays Checked      " << FormatCount(o.rays_checked) << '\n'
        << "  Rays Occluded     " << FormatCount(o.rays_occluded) << '\n'
        << "  Erroneous Points  " << FormatCount(o.erroneous_points) << '\n'
        << "  Depth Margin      " << FormatSignificant(o.depth_margin, 6) << '\n';
  }
}

std::string Raw(const std::optional<double>& value) {
  return value ? FormatDouble(*value) : std::string();
}

void RenderCsv(const ValidationReport& report, std::ostream& out) {
  out << "stage,cameras,images,registered_images,points,observations,"
         "mean_track_length,mean_observations_per_image,"
         "mean_reprojection_error,points_removed,observations_removed\n";
  for (const auto& stage : report.stages) {
    const auto& s = stage.stats;
    out << stage.name << ',' << s.cameras << ',' << s.images << ','
        << s.registered_images << ',' << s.points << ',' << s.observations << ','
        << Raw(s.mean_track_length) << ',' << Raw(s.mean_observations_per_image)
        << ',' << Raw(s.mean_reprojection_error) << ',';
    if (stage.filter) out << stage.filter->violation_points;
    out << ',';
    if (stage.filter) out << stage.filter->observations_removed;
    out << '\n';
  }
}

Json OptionalToJson(const std::optional<double>& value) {
  return value ? Json(*value) : Json(nullptr);
}

std::optional<double> OptionalFromJson(const Json& value) {
  if (value.is_null()) return std::nullopt;
  return value.get<double>();
}

Json StatsToJson(const ModelStats& s) {
  Json j;
  j["cameras"] = s.cameras;
  j["images"] = s.images;
  j["registered_images"] = s.registered_images;
  j["points"] = s.points;
  j["observations"] = s.observations;
  j["mean_track_length"] = OptionalToJson(s.mean_track_length);
  j["mean_observations_per_image"] = OptionalToJson(s.mean_observations_per_image);
  j["mean_reprojection_error"] = OptionalToJson(s.mean_reprojection_error);
  j["unprojectable_observations"] = s.unprojectable_observations;
  return j;
}

ModelStats StatsFromJson(const Json& j) {
  ModelStats s;
  s.cameras = j.at("cameras").get<std::int64_t>();
  s.images = j.at("images").get<std::int64_t>();
  s.registered_images = j.at("registered_images").get<std::int64_t>();
  s.points = j.at("points").get<std::int64_t>();
  s.observations = j.at("observations").get<std::int64_t>();
  s.mean_track_length = OptionalFromJson(j.at("mean_track_length"));
  s.mean_observations_per_image =
      OptionalFromJson(j.at("mean_observations_per_image"));
  s.mean_reprojection_error = OptionalFromJson(j.at("mean_reprojection_error"));
  s.unprojectable_observations =
      j.at("unprojectable_observations").get<std::int64_t>();
  return s;
}

Json FilterToJson(const FilterReport& f) {
  Json j;
  j["stage"] = f.stage;
  j["points_before"] = f.points_before;
  j["points_after"] = f.points_after;
  j["observations_before"] = f.observations_before;
  j["observations_after"] = f.observations_after;
  j["violation_points"] = f.violation_points;
  j["observations_removed"] = f.observations_removed;
  j["mean_track_length_before"] = OptionalToJson(f.mean_track_length_before);
  j["mean_track_length_after"] = OptionalToJson(f.mean_track_length_after);
  return j;
}

FilterReport FilterFromJson(const Json& j) {
  FilterReport f;
  f.stage = j.at("stage").get<std::string>();
  f.points_before = j.at("points_before").get<std::int64_t>();
  f.points_after = j.at("points_after").get<std::int64_t>();
  f.observations_before = j.at("observations_before").get<std::int64_t>();
  f.observations_after = j.at("observations_after").get<std::int64_t>();
  f.violation_points = j.at("violation_points").get<std::int64_t>();
  f.observations_removed = j.at("observations_removed").get<std::int64_t>();
  f.mean_track_length_before = OptionalFromJson(j.at("mean_track_length_before"));
  f.mean_track_length_after = OptionalFromJson(j.at("mean_track_length_after"));
  return f;
}

Json OcclusionToJson(const OcclusionSummary& o) {
  Json j;
  j["points_checked"] = o.points_checked;
  j["rays_checked"] = o.rays_checked;
  j["rays_occluded"] = o.rays_occluded;
  j["erroneous_points"] = o.erroneous_points;
  j["opaque_planes"] = o.opaque_planes;
  j["depth_margin"] = o.depth_margin;
  return j;
}

OcclusionSummary OcclusionFromJson(const Json& j) {
  OcclusionSummary o;
  o.points_checked = j.at("points_checked").get<std::int64_t>();
  o.rays_checked = j.at("rays_checked").get<std::int64_t>();
  o.rays_occluded = j.at("rays_occluded").get<std::int64_t>();
  o.erroneous_points = j.at("erroneous_points").get<std::int64_t>();
  o.opaque_planes = j.at("opaque_planes").get<std::int64_t>();
  o.depth_margin = j.at("depth_margin").get<double>();
  return o;
}

}  // namespace

void RenderReport(const ValidationReport& report, ReportFormat format,
                  std::ostream& out) {
  switch (format) {
    case ReportFormat::kText:
      RenderText(report, out);
      break;
    case ReportFormat::kJson:
      out << ReportToJson(report) << '\n';
      break;
    case ReportFormat::kCsv:
      RenderCsv(report, out);
      break;
  }
}

std::string ReportToJson(const ValidationReport& report) {
  Json j;
  j["stages"] = Json::array();
  for (const auto& stage : report.stages) {
    Json s;
    s["name"] = stage.name;
    s["stats"] = StatsToJson(stage.stats);
    s["filter"] = stage.filter ? FilterToJson(*stage.filter) : Json(nullptr);
    j["stages"].push_back(std::move(s));
  }
  j["occlusion"] =
      report.occlusion ? OcclusionToJson(*report.occlusion) : Json(nullptr);
  Json provenance;
  provenance["config"] = Json::object();
  for (const auto& [key, value] : report.provenance.config) {
    provenance["config"][key] = value;
  }
  provenance["seed"] = report.provenance.seed;
  provenance["started_at"] = report.provenance.started_at;
  provenance["finished_at"] = report.provenance.finished_at;
  j["provenance"] = std::move(provenance);
  return j.dump(2);
}

ValidationReport ReportFromJson(const std::string& text) {
  try {
    const Json j = Json::parse(text);
    ValidationReport report;
    for (const auto& s : j.at("stages")) {
      StageReport stage;
      stage.name = s.at("name").get<std::string>();
      stage.stats = StatsFromJson(s.at("stats"));
      if (!s.at("filter").is_null()) stage.filter = FilterFromJson(s.at("filter"));
      report.stages.push_back(std::move(stage));
    }
    if (!j.at("occlusion").is_null()) {
      report.occlusion = OcclusionFromJson(j.at("occlusion"));
    }
    const Json& p = j.at("provenance");
    for (const auto& [key, value] : p.at("config").items()) {
      report.provenance.config[key] = value.get<std::string>();
    }
    report.provenance.seed = p.at("seed").get<std::uint64_t>();
    report.provenance.started_at = p.at("started_at").get<std::string>();
    report.provenance.finished_at = p.at("finished_at").get<std::string>();
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed report JSON: ") + e.what());
  }
}

}  // namespace sfmsemval
