#include "sfmsemval/semantics.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <tuple>

#include "sfmsemval/error.h"
#include "sfmsemval/parallel.h"
#include "sfmsemval/text_format.h"

namespace fs = std::filesystem;

namespace sfmsemval {

namespace {

const SemanticClass kUnknownEntry{kUnknownClass, "unknown", false, false};

bool ParseBool(std::string_view text, bool* value) {
  if (text == "1" || text == "true" || text == "yes") {
    *value = true;
    return true;
  }
  if (text == "0" || text == "false" || text == "no") {
    *value = false;
    return true;
  }
  return false;
}

}  // namespace

ClassTable::ClassTable() { Add(kUnknownEntry); }

ClassTable::ClassTable(const std::vector<SemanticClass>& entries) : ClassTable() {
  for (const auto& entry : entries) Add(entry);
}

void ClassTable::Add(const SemanticClass& entry) {
  if (entry.class_id < 0 || entry.class_id > 255) {
    throw InputError("class id " + std::to_string(entry.class_id) +
                     " outside [0, 255]");
  }
  if (entry.name.empty()) {
    throw InputError("class " + std::to_string(entry.class_id) + " has no name");
  }
  if (entry.class_id == kUnknownClass) {
    if (entry.opaque || entry.dynamic) {
      throw InputError("class 255 is reserved UNKNOWN and cannot be opaque or "
                       "dynamic");
    }
    const auto old = by_id_.find(kUnknownClass);
    if (old != by_id_.end()) {
      by_name_.erase(old->second.name);
      by_id_.erase(old);
    }
  } else if (by_id_.count(entry.class_id)) {
    throw InputError("duplicate class id " + std::to_string(entry.class_id));
  }
  if (by_name_.count(entry.name)) {
    throw InputError("duplicate class name '" + entry.name + "'");
  }
  by_id_[entry.class_id] = entry;
  by_name_[entry.name] = entry.class_id;
}

ClassTable ClassTable::Cityscapes() {
  static const char* const kNames[] = {
      "unlabeled", "ego vehicle", "rectification border", "out of roi",
      "static", "dynamic", "ground", "road", "sidewalk", "parking",
      "rail track", "building", "wall", "fence", "guard rail", "bridge",
      "tunnel", "pole", "polegroup", "traffic light", "traffic sign",
      "vegetation", "terrain", "sky", "person", "rider", "car", "truck", "bus",
      "caravan", "trailer", "train", "motorcycle", "bicycle"};
  const std::vector<std::string> opaque = {"building", "wall", "fence",
                                           "bridge", "tunnel"};
  const std::vector<std::string> dynamic = {"sky", "person", "rider",
                                            "car", "truck", "bus",
                                            "train", "motorcycle", "bicycle"};
  ClassTable table;
  for (int id = 0; id < 34; ++id) {
    const std::string name = kNames[id];
    table.Add({id, name,
               std::find(opaque.begin(), opaque.end(), name) != opaque.end(),
               std::find(dynamic.begin(), dynamic.end(), name) != dynamic.end()});
  }
  return table;
}

ClassTable ClassTable::CondensedUrban() {
  return ClassTable({{1, "road", false, false},
                     {2, "building", true, false},
                     {3, "sky", false, true},
                     {4, "car", false, true},
                     {6, "foliage", false, false},
                     {9, "dynamic", false, true}});
}

ClassTable ClassTable::Preset(const std::string& name) {
  if (name == "cityscapes") return Cityscapes();
  if (name == "condensed") return CondensedUrban();
  throw InputError("unknown class-table preset '" + name + "'");
}

ClassTable ClassTable::Parse(std::istream& in, const std::string& source) {
  ClassTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    const std::string_view trimmed = Trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    SemanticClass entry;
    bool has_id = false;
    std::size_t pos = 0;
    while (pos <= trimmed.size()) {
      const std::size_t end = std::min(trimmed.find(';', pos), trimmed.size());
      const std::string_view field = Trim(trimmed.substr(pos, end - pos));
      pos = end + 1;
      if (field.empty()) continue;
      const std::size_t eq = field.find('=');
      if (eq == std::string_view::npos) {
        throw InputError(where + ": expected key=value, got '" +
                         std::string(field) + "'");
      }
      const std::string_view key = Trim(field.substr(0, eq));
      const std::string_view value = Trim(field.substr(eq + 1));
      if (key == "id") {
        std::int64_t id = 0;
        if (!ParseInt64(value, &id) || id < 0 || id > 255) {
          throw InputError(where + ": bad class id '" + std::string(value) + "'");
        }
        entry.class_id = static_cast<ClassId>(id);
        has_id = true;
      } else if (key == "name") {
        entry.name = std::string(value);
      } else if (key == "opaque" || key == "dynamic") {
        bool flag = false;
        if (!ParseBool(value, &flag)) {
          throw InputError(where + ": bad boolean '" + std::string(value) + "'");
        }
        (key == "opaque" ? entry.opaque : entry.dynamic) = flag;
      } else {
        throw InputError(where + ": unknown key '" + std::string(key) + "'");
      }
    }
    if (!has_id) throw InputError(where + ": missing id");
    try {
      table.Add(entry);
    } catch (const InputError& e) {
      throw InputError(where + ": " + e.what());
    }
  }
  return table;
}

ClassTable ClassTable::Load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open class table " + path.string());
  return Parse(in, path.string());
}

void ClassTable::Write(std::ostream& out) const {
  for (const auto& [id, entry] : by_id_) {
    out << "id=" << id << "; name=" << entry.name
        << "; opaque=" << (entry.opaque ? "true" : "false")
        << "; dynamic=" << (entry.dynamic ? "true" : "false") << '\n';
  }
}

const SemanticClass& ClassTable::Get(ClassId id) const {
  const auto it = by_id_.find(id);
  if (it == by_id_.end()) {
    throw InputError("unknown class id " + std::to_string(id));
  }
  return it->second;
}

ClassId ClassTable::IdOf(const std::string& name) const {
  const auto it = by_name_.find(name);
  if (it == by_name_.end()) throw InputError("unknown class name '" + name + "'");
  return it->second;
}

bool ClassTable::IsOpaque(ClassId id) const {
  const auto it = by_id_.find(id);
  return it != by_id_.end() && it->second.opaque;
}

bool ClassTable::IsDynamic(ClassId id) const {
  const auto it = by_id_.find(id);
  return it != by_id_.end() && it->second.dynamic;
}

std::vector<SemanticClass> ClassTable::Entries() const {
  std::vector<SemanticClass> out;
  for (const auto& [id, entry] : by_id_) out.push_back(entry);
  return out;
}

std::vector<ClassId> ClassTable::DynamicIds() const {
  std::vector<ClassId> out;
  for (const auto& [id, entry] : by_id_) {
    if (entry.dynamic) out.push_back(id);
  }
  return out;
}

std::vector<ClassId> ClassTable::OpaqueIds() const {
  std::vector<ClassId> out;
  for (const auto& [id, entry] : by_id_) {
    if (entry.opaque) out.push_back(id);
  }
  return out;
}

ColorPalette ColorPalette::Load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open palette " + path.string());
  ColorPalette palette;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view trimmed = Trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto tokens = SplitWhitespace(trimmed);
    std::int64_t v[4];
    bool ok = tokens.size() == 4;
    for (int k = 0; ok && k < 4; ++k) {
      ok = ParseInt64(tokens[k], &v[k]) && v[k] >= 0 && v[k] <= 255;
    }
    if (!ok) {
      throw InputError(path.string() + ":" + std::to_string(line_no) +
                       ": expected 'r g b class_id'");
    }
    palette.colors[Key(static_cast<int>(v[0]), static_cast<int>(v[1]),
                       static_cast<int>(v[2]))] = static_cast<ClassId>(v[3]);
  }
  return palette;
}

ClassId LabelAt(const LabelMap& map, double x, double y, double scale) {
  if (!std::isfinite(x) || !std::isfinite(y)) {
    throw InputError("label lookup at non-finite coordinates");
  }
  if (!(scale > 0.0)) throw InputError("label scale must be positive");
  const double col = std::floor(x * scale);
  const double row = std::floor(y * scale);
  const int c = static_cast<int>(std::clamp(col, 0.0, map.width - 1.0));
  const int r = static_cast<int>(std::clamp(row, 0.0, map.height - 1.0));
  return map.At(c, r);
}

std::string LabelKeyForImageName(const std::string& image_name) {
  return fs::path(image_name).stem().string();
}

std::vector<LabeledObservation> LabelModel(
    const SparseModel& model, const std::map<std::string, LabelMap>& maps,
    const ClassTable& table, const LabelOptions& options) {
  std::vector<const Image*> images;
  for (const auto& [id, image] : model.images) images.push_back(&image);

  std::vector<std::vector<LabeledObservation>> per_image(images.size());
  ParallelFor(images.size(), [&](std::size_t i) {
    const Image& image = *images[i];
    const auto map_it = maps.find(LabelKeyForImageName(image.name));
    if (map_it == maps.end() && options.missing == MissingMapPolicy::kStrict) {
      throw InputError("no label map for image " +
                       std::to_string(image.image_id) + " ('" + image.name +
                       "')");
    }
    double scale = 1.0;
    if (map_it != maps.end()) {
      if (options.scale) {
        scale = *options.scale;
      } else {
        const Camera& camera = model.cameras.at(image.camera_id);
        scale = static_cast<double>(map_it->second.width) /
                static_cast<double>(camera.width);
      }
    }
    auto& out = per_image[i];
    for (std::size_t idx = 0; idx < image.points2d.size(); ++idx) {
      const Point2D& p2 = image.points2d[idx];
      if (!p2.HasPoint3D()) continue;
      LabeledObservation obs;
      obs.image_id = image.image_id;
      obs.point2d_idx = static_cast<Point2DIdx>(idx);
      obs.x = p2.xy.x();
      obs.y = p2.xy.y();
      obs.point3d_id = p2.point3d_id;
      obs.class_id = map_it == maps.end()
                         ? kUnknownClass
                         : LabelAt(map_it->second, obs.x, obs.y, scale);
      if (!table.Contains(obs.class_id)) {
        throw InputError("label map '" + map_it->first +
                         "' contains unknown class id " +
                         std::to_string(obs.class_id));
      }
      out.push_back(obs);
    }
  });
  std::vector<LabeledObservation> all;
  for (auto& part : per_image) {
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

void ExportLabeledCsv(const std::vector<LabeledObservation>& observations,
                      const SparseModel& model, const ClassTable& table,
                      std::ostream& out) {
  std::vector<const LabeledObservation*> ordered;
  ordered.reserve(observations.size());
  for (const auto& obs : observations) ordered.push_back(&obs);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const LabeledObservation* a, const LabeledObservation* b) {
                     return std::tie(a->image_id, a->point2d_idx) <
                            std::tie(b->image_id, b->point2d_idx);
                   });
  out << "imageid,X2D,Y2D,X3D,Y3D,Z3D,INTENSITY,SEMANTIC_LABEL\n";
  for (const LabeledObservation* obs : ordered) {
    if (!model.images.count(obs->image_id)) {
      throw InputError("labelled observation references missing image " +
                       std::to_string(obs->image_id));
    }
    const auto point = model.points.find(obs->point3d_id);
    if (point == model.points.end()) {
      throw InputError("labelled observation references missing point " +
                       std::to_string(obs->point3d_id));
    }
    const Eigen::Vector3d& X = point->second.xyz;
    out << obs->image_id << ',' << FormatDouble(obs->x) << ','
        << FormatDouble(obs->y) << ',' << FormatDouble(X.x()) << ','
        << FormatDouble(X.y()) << ',' << FormatDouble(X.z()) << ','
        << obs->class_id << ',' << table.Get(obs->class_id).name << '\n';
  }
}

std::optional<double> ComputeIou(const LabelMap& pred, const LabelMap& truth,
                                 ClassId class_id) {
  if (pred.width != truth.width || pred.height != truth.height) {
    throw InputError("IoU: label maps differ in size (" +
                     std::to_string(pred.width) + "x" +
                     std::to_string(pred.height) + " vs " +
                     std::to_string(truth.width) + "x" +
                     std::to_string(truth.height) + ")");
  }
  std::int64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.ids.size(); ++i) {
    const bool p = pred.ids[i] == class_id;
    const bool t = truth.ids[i] == class_id;
    tp += p && t;
    fp += p && !t;
    fn += !p && t;
  }
  if (tp + fp + fn == 0) return std::nullopt;
  return static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
}

std::optional<double> MeanIou(const LabelMap& pred, const LabelMap& truth,
                              const std::vector<ClassId>& classes) {
  double sum = 0.0;
  int defined = 0;
  for (const ClassId c : classes) {
    if (const auto iou = ComputeIou(pred, truth, c)) {
      sum += *iou;
      ++defined;
    }
  }
  if (defined == 0) return std::nullopt;
  return sum / defined;
}

}  // namespace sfmsemval
