#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sfmsemval/camera_geometry.h"
#include "sfmsemval/filters.h"
#include "sfmsemval/occlusion.h"

namespace sfmsemval {

// Model statistics after one stage, plus the filter counts that produced it
// (absent for the raw input).
struct StageReport {
  std::string name;
  ModelStats stats;
  std::optional<FilterReport> filter;

  bool operator==(const StageReport&) const = default;
};

struct Provenance {
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;
  std::string started_at;
  std::string finished_at;

  bool operator==(const Provenance&) const = default;
};

struct ValidationReport {
  std::vector<StageReport> stages;
  std::optional<OcclusionSummary> occlusion;
  Provenance provenance;

  bool operator==(const ValidationReport&) const = default;
};

enum class ReportFormat { kText, kJson, kCsv };
ReportFormat ReportFormatFromName(const std::string& name);

// Text: column-aligned table, one column per stage, rows labelled
// "Cameras", "Images", "Registered Images", "Points", "Observations",
// "Mean Track Length", "Mean Observations per Image",
// "Mean Re-projection Error", then per-filter rows. Rows without any value
// are omitted, so an empty report renders the header alone.
void RenderReport(const ValidationReport& report, ReportFormat format,
                  std::ostream& out);

// JSON schema (keys):
//   {"stages": [{"name", "stats": {...}, "filter": {...}|null}],
//    "occlusion": {...}|null,
//    "provenance": {"config", "seed", "started_at", "finished_at"}}
std::string ReportToJson(const ValidationReport& report);
// Throws InputError on malformed input.
ValidationReport ReportFromJson(const std::string& json);

}  // namespace sfmsemval
