#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "sfmsemval/model.h"

namespace sfmsemval {

using ClassId = int;

// Reserved for pixels/observations without a usable label. Never opaque,
// never dynamic.
inline constexpr ClassId kUnknownClass = 255;

struct SemanticClass {
  ClassId class_id = 0;
  std::string name;
  bool opaque = false;
  bool dynamic = false;

  bool operator==(const SemanticClass&) const = default;
};

// Registry of class id <-> name <-> opacity <-> dynamic flag. Always holds the
// UNKNOWN entry.
class ClassTable {
 public:
  ClassTable();
  explicit ClassTable(const std::vector<SemanticClass>& entries);

  // Cityscapes label ids 0..33. Opaque: building, wall, fence, bridge, tunnel.
  // Dynamic: sky, person, rider, car, truck, bus, train, motorcycle, bicycle.
  static ClassTable Cityscapes();
  // Six-class urban labelling: road=1, building=2, sky=3, car=4, foliage=6,
  // dynamic=9.
  static ClassTable CondensedUrban();
  // Preset names: "cityscapes", "condensed".
  static ClassTable Preset(const std::string& name);

  // Parses the config format: one class per line,
  //   id=11; name=building; opaque=true; dynamic=false
  // '#' starts a comment line. opaque/dynamic default to false.
  static ClassTable Parse(std::istream& in, const std::string& source = "<stream>");
  static ClassTable Load(const std::filesystem::path& path);
  void Write(std::ostream& out) const;

  void Add(const SemanticClass& entry);

  bool Contains(ClassId id) const { return by_id_.count(id) > 0; }
  // Throws InputError for unknown ids/names.
  const SemanticClass& Get(ClassId id) const;
  ClassId IdOf(const std::string& name) const;
  bool IsOpaque(ClassId id) const;
  bool IsDynamic(ClassId id) const;
  std::vector<SemanticClass> Entries() const;
  std::vector<ClassId> DynamicIds() const;
  std::vector<ClassId> OpaqueIds() const;

 private:
  std::map<ClassId, SemanticClass> by_id_;
  std::map<std::string, ClassId> by_name_;
};

// Per-image raster of class ids, row-major.
struct LabelMap {
  std::string name;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> ids;

  ClassId At(int col, int row) const {
    return ids[static_cast<std::size_t>(row) * width + col];
  }
  bool operator==(const LabelMap&) const = default;
};

// RGB -> class id lookup for colorized segmentations. File format: one entry
// per line "r g b class_id".
struct ColorPalette {
  std::map<std::uint32_t, ClassId> colors;

  static ColorPalette Load(const std::filesystem::path& path);
  static std::uint32_t Key(int r, int g, int b) {
    return (static_cast<std::uint32_t>(r) << 16) |
           (static_cast<std::uint32_t>(g) << 8) | static_cast<std::uint32_t>(b);
  }
};

// Reads a binary PGM (P5, maxval <= 255) or an 8-bit grayscale / indexed PNG
// whose pixel value is the class id. RGB PNGs are accepted when `palette` is
// given. Every id must exist in `table`. LabelMap::name is the file stem.
LabelMap LoadLabelMap(const std::filesystem::path& path, const ClassTable& table,
                      const ColorPalette* palette = nullptr);
void WriteLabelMapPgm(const LabelMap& map, const std::filesystem::path& path);
void WriteLabelMapPng(const LabelMap& map, const std::filesystem::path& path);

// Class id of the pixel containing (x, y) after scaling by `scale` (label map
// resolution / image resolution); indices are clamped to the raster. Pixel
// (0, 0) covers [0, 1) x [0, 1), so its centre is (0.5, 0.5).
ClassId LabelAt(const LabelMap& map, double x, double y, double scale);

struct LabeledObservation {
  ImageId image_id = 0;
  Point2DIdx point2d_idx = 0;
  double x = 0.0;
  double y = 0.0;
  Point3DId point3d_id = 0;
  ClassId class_id = kUnknownClass;

  bool operator==(const LabeledObservation&) const = default;
};

enum class MissingMapPolicy { kStrict, kSkip };

struct LabelOptions {
  // Label-map / image resolution ratio; derived per image from the map and
  // camera widths when empty.
  std::optional<double> scale;
  MissingMapPolicy missing = MissingMapPolicy::kStrict;
};

// Label maps are matched to images by image name; the name's directory part
// and extension are ignored, so "seq/out90.jpg" matches map "out90".
std::string LabelKeyForImageName(const std::string& image_name);

// One observation per track element, ordered by (image_id, point2d_idx).
// Under kSkip, images without a map yield kUnknownClass observations.
std::vector<LabeledObservation> LabelModel(
    const SparseModel& model, const std::map<std::string, LabelMap>& maps,
    const ClassTable& table, const LabelOptions& options = {});

// Loads every .pgm/.png in `dir`, keyed by file stem.
std::map<std::string, LabelMap> LoadLabelMaps(const std::filesystem::path& dir,
                                              const ClassTable& table,
                                              const ColorPalette* palette = nullptr);

// Header "imageid,X2D,Y2D,X3D,Y3D,Z3D,INTENSITY,SEMANTIC_LABEL", one row per
// observation ordered by (imageid, point2d_idx). Throws InputError on a
// dangling image/point reference.
void ExportLabeledCsv(const std::vector<LabeledObservation>& observations,
                      const SparseModel& model, const ClassTable& table,
                      std::ostream& out);

// TP / (TP + FP + FN) for one class; empty when the class is absent from
// both rasters. Throws InputError when dimensions differ.
std::optional<double> ComputeIou(const LabelMap& pred, const LabelMap& truth,
                                 ClassId class_id);
// Mean over classes with a defined IoU; empty if none is defined.
std::optional<double> MeanIou(const LabelMap& pred, const LabelMap& truth,
                              const std::vector<ClassId>& classes);

}  // namespace sfmsemval
