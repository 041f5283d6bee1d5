#include "sfmsemval/model_io.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sfmsemval/error.h"
#include "sfmsemval/text_format.h"

namespace fs = std::filesystem;

namespace sfmsemval {

ModelFormat ModelFormatFromName(const std::string& name) {
  if (name == "text" || name == "txt") return ModelFormat::kText;
  if (name == "binary" || name == "bin") return ModelFormat::kBinary;
  if (name == "auto") return ModelFormat::kAuto;
  throw InputError("unknown model format '" + name +
                   "' (expected text, binary or auto)");
}

namespace {

// Source location of every record, used to report integrity failures.
struct Locations {
  std::map<ImageId, std::string> images;
  std::map<Point3DId, std::string> points;
};

void NormalizeQvec(Image& image, const std::string& where,
                   LoadDiagnostics* diagnostics) {
  const double norm = image.qvec.norm();
  if (!std::isfinite(norm) || norm == 0.0) {
    throw InputError(where + ": zero or non-finite quaternion");
  }
  if (std::abs(norm - 1.0) > 1e-6 && diagnostics) {
    diagnostics->warnings.push_back(where + ": quaternion norm " +
                                    FormatDouble(norm) + " renormalized");
  }
  image.qvec /= norm;
}

// ---------------------------------------------------------------- text

class TextFile {
 public:
  explicit TextFile(const fs::path& path) : path_(path), in_(path) {
    if (!in_) throw InputError("cannot open " + path.string());
    name_ = path.filename().string();
  }

  // Next non-empty, non-comment line.
  bool NextRecord(std::string* line) {
    while (std::getline(in_, *line)) {
      ++line_no_;
      const std::string_view trimmed = Trim(*line);
      if (trimmed.empty() || trimmed.front() == '#') continue;
      return true;
    }
    return false;
  }

  // The next physical line, which may be empty (image observation lines).
  bool NextRaw(std::string* line) {
    if (!std::getline(in_, *line)) {
      line->clear();
      return false;
    }
    ++line_no_;
    return true;
  }

  std::string Where() const { return name_ + ":" + std::to_string(line_no_); }

  [[noreturn]] void Fail(const std::string& what) const {
    throw InputError(Where() + ": " + what);
  }

 private:
  fs::path path_;
  std::ifstream in_;
  std::string name_;
  int line_no_ = 0;
};

template <typename T>
T ParseUnsigned(const TextFile& file, std::string_view token,
                const char* field) {
  std::uint64_t value = 0;
  if (!ParseUInt64(token, &value) || value > std::numeric_limits<T>::max()) {
    file.Fail(std::string("bad ") + field + " '" + std::string(token) + "'");
  }
  return static_cast<T>(value);
}

double ParseReal(const TextFile& file, std::string_view token,
                 const char* field) {
  double value = 0;
  if (!ParseDouble(token, &value)) {
    file.Fail(std::string("bad ") + field + " '" + std::string(token) + "'");
  }
  return value;
}

void ReadCamerasText(const fs::path& path, SparseModel& model) {
  TextFile file(path);
  std::string line;
  while (file.NextRecord(&line)) {
    const auto tokens = SplitWhitespace(line);
    if (tokens.size() < 4) file.Fail("camera record needs at least 4 fields");
    Camera camera;
    camera.camera_id = ParseUnsigned<CameraId>(file, tokens[0], "camera id");
    try {
      camera.model = CameraModelFromName(tokens[1]);
    } catch (const InputError& e) {
      file.Fail(e.what());
    }
    camera.width = ParseUnsigned<std::uint64_t>(file, tokens[2], "width");
    camera.height = ParseUnsigned<std::uint64_t>(file, tokens[3], "height");
    for (std::size_t k = 4; k < tokens.size(); ++k) {
      camera.params.push_back(ParseReal(file, tokens[k], "camera parameter"));
    }
    try {
      VerifyCamera(camera);
    } catch (const InputError& e) {
      file.Fail(e.what());
    }
    if (!model.cameras.emplace(camera.camera_id, camera).second) {
      file.Fail("duplicate camera id " + std::to_string(camera.camera_id));
    }
  }
}

void ReadImagesText(const fs::path& path, SparseModel& model, Locations& loc,
                    LoadDiagnostics* diagnostics) {
  TextFile file(path);
  std::string line;
  while (file.NextRecord(&line)) {
    const std::string where = file.Where();
    const auto tokens = SplitWhitespace(line);
    if (tokens.size() < 10) file.Fail("image record needs 10 fields");
    Image image;
    image.image_id = ParseUnsigned<ImageId>(file, tokens[0], "image id");
    for (int k = 0; k < 4; ++k) {
      image.qvec[k] = ParseReal(file, tokens[1 + k], "quaternion");
    }
    for (int k = 0; k < 3; ++k) {
      image.tvec[k] = ParseReal(file, tokens[5 + k], "translation");
    }
    image.camera_id = ParseUnsigned<CameraId>(file, tokens[8], "camera id");
    // The name is the remainder of the line, so it may contain spaces.
    const std::size_t name_start = tokens[9].data() - line.data();
    image.name = std::string(Trim(std::string_view(line).substr(name_start)));
    NormalizeQvec(image, where, diagnostics);

    std::string obs_line;
    file.NextRaw(&obs_line);
    const auto obs = SplitWhitespace(obs_line);
    if (obs.size() % 3 != 0) {
      file.Fail("observation line must hold (X, Y, POINT3D_ID) triples");
    }
    for (std::size_t k = 0; k < obs.size(); k += 3) {
      Point2D p2;
      p2.xy.x() = ParseReal(file, obs[k], "x");
      p2.xy.y() = ParseReal(file, obs[k + 1], "y");
      std::int64_t pid = 0;
      if (!ParseInt64(obs[k + 2], &pid) || pid < -1) {
        file.Fail("bad point3d id '" + std::string(obs[k + 2]) + "'");
      }
      p2.point3d_id = pid == -1 ? kInvalidPoint3DId
                                : static_cast<Point3DId>(pid);
      image.points2d.push_back(p2);
    }
    const ImageId id = image.image_id;
    if (!model.images.emplace(id, std::move(image)).second) {
      throw InputError(where + ": duplicate image id " + std::to_string(id));
    }
    loc.images[id] = where;
  }
}

void ReadPoints3DText(const fs::path& path, SparseModel& model, Locations& loc) {
  TextFile file(path);
  std::string line;
  while (file.NextRecord(&line)) {
    const auto tokens = SplitWhitespace(line);
    if (tokens.size() < 8) file.Fail("point record needs at least 8 fields");
    if ((tokens.size() - 8) % 2 != 0) {
      file.Fail("track must hold (IMAGE_ID, POINT2D_IDX) pairs");
    }
    Point3D point;
    point.point3d_id = ParseUnsigned<Point3DId>(file, tokens[0], "point3d id");
    if (point.point3d_id == kInvalidPoint3DId) file.Fail("reserved point id");
    for (int k = 0; k < 3; ++k) {
      point.xyz[k] = ParseReal(file, tokens[1 + k], "coordinate");
    }
    for (int k = 0; k < 3; ++k) {
      point.rgb[k] = ParseUnsigned<std::uint8_t>(file, tokens[4 + k], "color");
    }
    point.error = ParseReal(file, tokens[7], "error");
    for (std::size_t k = 8; k < tokens.size(); k += 2) {
      point.track.push_back(
          {ParseUnsigned<ImageId>(file, tokens[k], "track image id"),
           ParseUnsigned<Point2DIdx>(file, tokens[k + 1], "track index")});
    }
    if (point.track.empty()) file.Fail("point has an empty track");
    const Point3DId id = point.point3d_id;
    if (!model.points.emplace(id, std::move(point)).second) {
      file.Fail("duplicate point id " + std::to_string(id));
    }
    loc.points[id] = file.Where();
  }
}

// -------------------------------------------------------------- binary

template <typename T>
T FromLittleEndian(T value) {
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return value;
}

class BinaryReader {
 public:
  explicit BinaryReader(const fs::path& path)
      : in_(path, std::ios::binary), name_(path.filename().string()) {
    if (!in_) throw InputError("cannot open " + path.string());
  }

  template <typename T>
  T Read() {
    T value;
    if (!in_.read(reinterpret_cast<char*>(&value), sizeof(T))) {
      Fail("unexpected end of file");
    }
    offset_ += sizeof(T);
    return FromLittleEndian(value);
  }

  std::string ReadCString() {
    std::string out;
    char c;
    while (true) {
      if (!in_.get(c)) Fail("unterminated string");
      ++offset_;
      if (c == '\0') break;
      out.push_back(c);
    }
    return out;
  }

  void ExpectEnd() {
    if (in_.peek() != std::char_traits<char>::eof()) {
      Fail("trailing bytes after last record");
    }
  }

  std::uint64_t Offset() const { return offset_; }
  std::string Where(std::uint64_t offset) const {
    return name_ + "@" + std::to_string(offset);
  }
  [[noreturn]] void Fail(const std::string& what) const {
    throw InputError(Where(offset_) + ": " + what);
  }

 private:
  std::ifstream in_;
  std::string name_;
  std::uint64_t offset_ = 0;
};

void ReadCamerasBinary(const fs::path& path, SparseModel& model) {
  BinaryReader file(path);
  const auto count = file.Read<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t record = file.Offset();
    Camera camera;
    camera.camera_id = file.Read<std::uint32_t>();
    const int model_id = file.Read<std::int32_t>();
    try {
      camera.model = CameraModelFromId(model_id);
    } catch (const InputError& e) {
      throw InputError(file.Where(record) + ": " + e.what());
    }
    camera.width = file.Read<std::uint64_t>();
    camera.height = file.Read<std::uint64_t>();
    camera.params.resize(CameraModelNumParams(camera.model));
    for (double& p : camera.params) p = file.Read<double>();
    try {
      VerifyCamera(camera);
    } catch (const InputError& e) {
      throw InputError(file.Where(record) + ": " + e.what());
    }
    if (!model.cameras.emplace(camera.camera_id, camera).second) {
      throw InputError(file.Where(record) + ": duplicate camera id " +
                       std::to_string(camera.camera_id));
    }
  }
  file.ExpectEnd();
}

void ReadImagesBinary(const fs::path& path, SparseModel& model, Locations& loc,
                      LoadDiagnostics* diagnostics) {
  BinaryReader file(path);
  const auto count = file.Read<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string where = file.Where(file.Offset());
    Image image;
    image.image_id = file.Read<std::uint32_t>();
    for (int k = 0; k < 4; ++k) image.qvec[k] = file.Read<double>();
    for (int k = 0; k < 3; ++k) image.tvec[k] = file.Read<double>();
    image.camera_id = file.Read<std::uint32_t>();
    image.name = file.ReadCString();
    NormalizeQvec(image, where, diagnostics);
    const auto num_points2d = file.Read<std::uint64_t>();
    for (std::uint64_t k = 0; k < num_points2d; ++k) {
      Point2D p2;
      p2.xy.x() = file.Read<double>();
      p2.xy.y() = file.Read<double>();
      p2.point3d_id = file.Read<std::uint64_t>();
      image.points2d.push_back(p2);
    }
    const ImageId id = image.image_id;
    if (!model.images.emplace(id, std::move(image)).second) {
      throw InputError(where + ": duplicate image id " + std::to_string(id));
    }
    loc.images[id] = where;
  }
  file.ExpectEnd();
}

void ReadPoints3DBinary(const fs::path& path, SparseModel& model,
                        Locations& loc) {
  BinaryReader file(path);
  const auto count = file.Read<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string where = file.Where(file.Offset());
    Point3D point;
    point.point3d_id = file.Read<std::uint64_t>();
    for (int k = 0; k < 3; ++k) point.xyz[k] = file.Read<double>();
    for (int k = 0; k < 3; ++k) point.rgb[k] = file.Read<std::uint8_t>();
    point.error = file.Read<double>();
    const auto track_length = file.Read<std::uint64_t>();
    if (track_length == 0) throw InputError(where + ": empty track");
    for (std::uint64_t k = 0; k < track_length; ++k) {
      TrackElement el;
      el.image_id = file.Read<std::uint32_t>();
      el.point2d_idx = file.Read<std::uint32_t>();
      point.track.push_back(el);
    }
    const Point3DId id = point.point3d_id;
    if (!model.points.emplace(id, std::move(point)).second) {
      throw InputError(where + ": duplicate point id " + std::to_string(id));
    }
    loc.points[id] = where;
  }
  file.ExpectEnd();
}

// Integrity checks that can name the record that introduced the problem.
void CheckReferences(const SparseModel& model, const Locations& loc) {
  for (const auto& [id, image] : model.images) {
    const std::string& where = loc.images.at(id);
    if (!model.cameras.count(image.camera_id)) {
      throw InputError(where + ": image " + std::to_string(id) +
                       " references unknown camera " +
                       std::to_string(image.camera_id));
    }
    for (std::size_t k = 0; k < image.points2d.size(); ++k) {
      const Point3DId pid = image.points2d[k].point3d_id;
      if (pid != kInvalidPoint3DId && !model.points.count(pid)) {
        throw InputError(where + ": image " + std::to_string(id) +
                         " point2d " + std::to_string(k) +
                         " references missing point " + std::to_string(pid));
      }
    }
  }
  for (const auto& [id, point] : model.points) {
    const std::string& where = loc.points.at(id);
    for (const TrackElement& el : point.track) {
      const auto image = model.images.find(el.image_id);
      if (image == model.images.end()) {
        throw InputError(where + ": point " + std::to_string(id) +
                         " track references missing image " +
                         std::to_string(el.image_id));
      }
      if (el.point2d_idx >= image->second.points2d.size()) {
        throw InputError(where + ": point " + std::to_string(id) +
                         " track index " + std::to_string(el.point2d_idx) +
                         " out of range for image " +
                         std::to_string(el.image_id));
      }
    }
  }
  try {
    VerifyModel(model);
  } catch (const InputError& e) {
    throw InputError(std::string("model integrity: ") + e.what());
  }
}

void RequireFile(const fs::path& path) {
  if (!fs::is_regular_file(path)) {
    throw InputError("missing model file " + path.string());
  }
}

// ---------------------------------------------------------------- write

std::ofstream OpenForWrite(const fs::path& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc
                                 : std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

template <typename T>
void WriteLittleEndian(std::ostream& out, T value) {
  value = FromLittleEndian(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

void Finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

SparseModel LoadModel(const fs::path& dir, ModelFormat format,
                      LoadDiagnostics* diagnostics) {
  if (!fs::is_directory(dir)) {
    throw InputError("model directory " + dir.string() + " does not exist");
  }
  if (format == ModelFormat::kAuto) {
    format = fs::exists(dir / "cameras.bin") ? ModelFormat::kBinary
                                             : ModelFormat::kText;
  }
  SparseModel model;
  Locations loc;
  if (format == ModelFormat::kBinary) {
    for (const char* name : {"cameras.bin", "images.bin", "points3D.bin"}) {
      RequireFile(dir / name);
    }
    ReadCamerasBinary(dir / "cameras.bin", model);
    ReadImagesBinary(dir / "images.bin", model, loc, diagnostics);
    ReadPoints3DBinary(dir / "points3D.bin", model, loc);
  } else {
    for (const char* name : {"cameras.txt", "images.txt", "points3D.txt"}) {
      RequireFile(dir / name);
    }
    ReadCamerasText(dir / "cameras.txt", model);
    ReadImagesText(dir / "images.txt", model, loc, diagnostics);
    ReadPoints3DText(dir / "points3D.txt", model, loc);
  }
  CheckReferences(model, loc);
  return model;
}

void WriteModelText(const SparseModel& model, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  {
    const fs::path path = dir / "cameras.txt";
    auto out = OpenForWrite(path, false);
    out << "# Camera list with one line of data per camera:\n"
        << "#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n"
        << "# Number of cameras: " << model.cameras.size() << "\n";
    for (const auto& [id, camera] : model.cameras) {
      out << id << ' ' << CameraModelName(camera.model) << ' ' << camera.width
          << ' ' << camera.height;
      for (const double p : camera.params) out << ' ' << FormatDouble(p);
      out << '\n';
    }
    Finish(out, path);
  }
  {
    const fs::path path = dir / "images.txt";
    auto out = OpenForWrite(path, false);
    out << "# Image list with two lines of data per image:\n"
        << "#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n"
        << "#   POINTS2D[] as (X, Y, POINT3D_ID)\n"
        << "# Number of images: " << model.images.size() << "\n";
    for (const auto& [id, image] : model.images) {
      out << id;
      for (int k = 0; k < 4; ++k) out << ' ' << FormatDouble(image.qvec[k]);
      for (int k = 0; k < 3; ++k) out << ' ' << FormatDouble(image.tvec[k]);
      out << ' ' << image.camera_id << ' ' << image.name << '\n';
      bool first = true;
      for (const Point2D& p2 : image.points2d) {
        if (!first) out << ' ';
        first = false;
        out << FormatDouble(p2.xy.x()) << ' ' << FormatDouble(p2.xy.y()) << ' ';
        if (p2.HasPoint3D()) {
          out << p2.point3d_id;
        } else {
          out << -1;
        }
      }
      out << '\n';
    }
    Finish(out, path);
  }
  {
    const fs::path path = dir / "points3D.txt";
    auto out = OpenForWrite(path, false);
    out << "# 3D point list with one line of data per point:\n"
        << "#   POINT3D_ID, X, Y, Z, R, G, B, ERROR, TRACK[] as (IMAGE_ID, "
           "POINT2D_IDX)\n"
        << "# Number of points: " << model.points.size() << "\n";
    for (const auto& [id, point] : model.points) {
      out << id;
      for (int k = 0; k < 3; ++k) out << ' ' << FormatDouble(point.xyz[k]);
      for (int k = 0; k < 3; ++k) out << ' ' << static_cast<int>(point.rgb[k]);
      out << ' ' << FormatDouble(point.error);
      for (const TrackElement& el : point.track) {
        out << ' ' << el.image_id << ' ' << el.point2d_idx;
      }
      out << '\n';
    }
    Finish(out, path);
  }
}

void WriteModelBinary(const SparseModel& model, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  {
    const fs::path path = dir / "cameras.bin";
    auto out = OpenForWrite(path, true);
    WriteLittleEndian<std::uint64_t>(out, model.cameras.size());
    for (const auto& [id, camera] : model.cameras) {
      WriteLittleEndian<std::uint32_t>(out, id);
      WriteLittleEndian<std::int32_t>(out, static_cast<int>(camera.model));
      WriteLittleEndian<std::uint64_t>(out, camera.width);
      WriteLittleEndian<std::uint64_t>(out, camera.height);
      for (const double p : camera.params) WriteLittleEndian<double>(out, p);
    }
    Finish(out, path);
  }
  {
    const fs::path path = dir / "images.bin";
    auto out = OpenForWrite(path, true);
    WriteLittleEndian<std::uint64_t>(out, model.images.size());
    for (const auto& [id, image] : model.images) {
      WriteLittleEndian<std::uint32_t>(out, id);
      for (int k = 0; k < 4; ++k) WriteLittleEndian<double>(out, image.qvec[k]);
      for (int k = 0; k < 3; ++k) WriteLittleEndian<double>(out, image.tvec[k]);
      WriteLittleEndian<std::uint32_t>(out, image.camera_id);
      out.write(image.name.c_str(),
                static_cast<std::streamsize>(image.name.size() + 1));
      WriteLittleEndian<std::uint64_t>(out, image.points2d.size());
      for (const Point2D& p2 : image.points2d) {
        WriteLittleEndian<double>(out, p2.xy.x());
        WriteLittleEndian<double>(out, p2.xy.y());
        WriteLittleEndian<std::uint64_t>(out, p2.point3d_id);
      }
    }
    Finish(out, path);
  }
  {
    const fs::path path = dir / "points3D.bin";
    auto out = OpenForWrite(path, true);
    WriteLittleEndian<std::uint64_t>(out, model.points.size());
    for (const auto& [id, point] : model.points) {
      WriteLittleEndian<std::uint64_t>(out, id);
      for (int k = 0; k < 3; ++k) WriteLittleEndian<double>(out, point.xyz[k]);
      for (int k = 0; k < 3; ++k) WriteLittleEndian<std::uint8_t>(out, point.rgb[k]);
      WriteLittleEndian<double>(out, point.error);
      WriteLittleEndian<std::uint64_t>(out, point.track.size());
      for (const TrackElement& el : point.track) {
        WriteLittleEndian<std::uint32_t>(out, el.image_id);
        WriteLittleEndian<std::uint32_t>(out, el.point2d_idx);
      }
    }
    Finish(out, path);
  }
}

void WritePointsPly(const SparseModel& model,
                    const std::map<Point3DId, int>& status,
                    const fs::path& path) {
  auto out = OpenForWrite(path, false);
  out << "ply\nformat ascii 1.0\n"
      << "element vertex " << model.points.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "property uchar status\nend_header\n";
  for (const auto& [id, point] : model.points) {
    const auto it = status.find(id);
    out << FormatDouble(point.xyz.x()) << ' ' << FormatDouble(point.xyz.y())
        << ' ' << FormatDouble(point.xyz.z()) << ' '
        << static_cast<int>(point.rgb[0]) << ' '
        << static_cast<int>(point.rgb[1]) << ' '
        << static_cast<int>(point.rgb[2]) << ' '
        << (it == status.end() ? 0 : it->second) << '\n';
  }
  Finish(out, path);
}

}  // namespace sfmsemval
