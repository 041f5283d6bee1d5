#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include <png.h>

#include "sfmsemval/error.h"
#include "sfmsemval/semantics.h"

namespace fs = std::filesystem;

namespace sfmsemval {

namespace {

std::vector<unsigned char> ReadAll(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open label map " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

// Binary PGM: "P5" <ws> width <ws> height <ws> maxval <single ws> raster.
LabelMap DecodePgm(const std::vector<unsigned char>& bytes,
                   const std::string& where) {
  std::size_t pos = 2;
  auto next_int = [&](const char* field) {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    long value = 0;
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      value = value * 10 + (bytes[pos] - '0');
      if (value > (1L << 30)) break;
      ++pos;
    }
    if (pos == start) throw InputError(where + ": bad PGM " + field);
    return value;
  };
  LabelMap map;
  map.width = static_cast<int>(next_int("width"));
  map.height = static_cast<int>(next_int("height"));
  const long maxval = next_int("maxval");
  if (maxval > 255 || maxval <= 0) {
    throw InputError(where + ": unsupported bit depth (PGM maxval " +
                     std::to_string(maxval) + ", need <= 255)");
  }
  ++pos;  // single whitespace before the raster
  if (map.width <= 0 || map.height <= 0) {
    throw InputError(where + ": label map dimensions must be positive");
  }
  const std::size_t size = static_cast<std::size_t>(map.width) * map.height;
  if (bytes.size() < pos + size) throw InputError(where + ": truncated PGM raster");
  map.ids.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                 bytes.begin() + static_cast<std::ptrdiff_t>(pos + size));
  return map;
}

struct PngReadState {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReadState() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct MemoryReader {
  const std::vector<unsigned char>* bytes;
  std::size_t pos;
};

void ReadFromMemory(png_structp png, png_bytep out, png_size_t length) {
  auto* reader = static_cast<MemoryReader*>(png_get_io_ptr(png));
  if (reader->pos + length > reader->bytes->size()) {
    png_error(png, "truncated PNG");
  }
  std::memcpy(out, reader->bytes->data() + reader->pos, length);
  reader->pos += length;
}

[[noreturn]] void PngErrorHandler(png_structp, png_const_charp message) {
  throw InputError(std::string("PNG decode error: ") + message);
}

void PngWarningHandler(png_structp, png_const_charp) {}

LabelMap DecodePng(const std::vector<unsigned char>& bytes,
                   const std::string& where, const ColorPalette* palette) {
  PngReadState state;
  state.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                     PngErrorHandler, PngWarningHandler);
  if (!state.png) throw Error("libpng initialization failed");
  state.info = png_create_info_struct(state.png);
  if (!state.info) throw Error("libpng initialization failed");
  MemoryReader reader{&bytes, 0};
  png_set_read_fn(state.png, &reader, ReadFromMemory);

  LabelMap map;
  try {
    png_read_info(state.png, state.info);
    const int bit_depth = png_get_bit_depth(state.png, state.info);
    const int color_type = png_get_color_type(state.png, state.info);
    map.width = static_cast<int>(png_get_image_width(state.png, state.info));
    map.height = static_cast<int>(png_get_image_height(state.png, state.info));
    if (bit_depth > 8) {
      throw InputError(where + ": unsupported bit depth " +
                       std::to_string(bit_depth));
    }
    const bool rgb = color_type == PNG_COLOR_TYPE_RGB ||
                     color_type == PNG_COLOR_TYPE_RGB_ALPHA;
    if (color_type != PNG_COLOR_TYPE_GRAY &&
        color_type != PNG_COLOR_TYPE_PALETTE && !rgb) {
      throw InputError(where + ": unsupported PNG color type " +
                       std::to_string(color_type));
    }
    if (rgb && !palette) {
      throw InputError(where + ": RGB label map needs a color palette");
    }
    if (bit_depth < 8) png_set_packing(state.png);
    if (color_type == PNG_COLOR_TYPE_RGB_ALPHA) png_set_strip_alpha(state.png);
    png_read_update_info(state.png, state.info);
    const std::size_t channels = rgb ? 3 : 1;
    const std::size_t row_bytes = png_get_rowbytes(state.png, state.info);
    if (row_bytes != channels * static_cast<std::size_t>(map.width)) {
      throw InputError(where + ": unexpected PNG row layout");
    }
    std::vector<unsigned char> raster(row_bytes * map.height);
    std::vector<png_bytep> rows(map.height);
    for (int r = 0; r < map.height; ++r) rows[r] = raster.data() + r * row_bytes;
    png_read_image(state.png, rows.data());
    png_read_end(state.png, nullptr);
    if (!rgb) {
      map.ids = std::move(raster);
    } else {
      map.ids.resize(static_cast<std::size_t>(map.width) * map.height);
      for (std::size_t i = 0; i < map.ids.size(); ++i) {
        const auto key = ColorPalette::Key(raster[3 * i], raster[3 * i + 1],
                                           raster[3 * i + 2]);
        const auto it = palette->colors.find(key);
        if (it == palette->colors.end()) {
          throw InputError(where + ": color (" + std::to_string(raster[3 * i]) +
                           "," + std::to_string(raster[3 * i + 1]) + "," +
                           std::to_string(raster[3 * i + 2]) +
                           ") not in palette");
        }
        map.ids[i] = static_cast<std::uint8_t>(it->second);
      }
    }
  } catch (const InputError& e) {
    const std::string message = e.what();
    if (message.rfind(where, 0) == 0) throw;
    throw InputError(where + ": " + message);
  }
  return map;
}

}  // namespace

LabelMap LoadLabelMap(const fs::path& path, const ClassTable& table,
                      const ColorPalette* palette) {
  const std::string where = path.string();
  const auto bytes = ReadAll(path);
  LabelMap map;
  static const unsigned char kPngMagic[8] = {0x89, 'P', 'N', 'G',
                                             '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') {
    map = DecodePgm(bytes, where);
  } else if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngMagic, 8) == 0) {
    map = DecodePng(bytes, where, palette);
  } else {
    throw InputError(where + ": not a binary PGM or PNG file");
  }
  if (map.width <= 0 || map.height <= 0) {
    throw InputError(where + ": label map dimensions must be positive");
  }
  map.name = path.stem().string();
  bool seen[256] = {};
  for (const std::uint8_t id : map.ids) seen[id] = true;
  for (int id = 0; id < 256; ++id) {
    if (seen[id] && !table.Contains(id)) {
      throw InputError(where + ": raster contains class id " +
                       std::to_string(id) + " absent from the class table");
    }
  }
  return map;
}

void WriteLabelMapPgm(const LabelMap& map, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << "P5\n" << map.width << ' ' << map.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(map.ids.data()),
            static_cast<std::streamsize>(map.ids.size()));
  if (!out) throw Error("failed writing " + path.string());
}

void WriteLabelMapPng(const LabelMap& map, const fs::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "wb"),
                                             std::fclose);
  if (!file) throw Error("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            PngErrorHandler, PngWarningHandler);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("libpng initialization failed");
  }
  try {
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(map.width),
                 static_cast<png_uint_32>(map.height), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int r = 0; r < map.height; ++r) {
      png_write_row(png, const_cast<png_bytep>(map.ids.data() +
                                               static_cast<std::size_t>(r) * map.width));
    }
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
}

std::map<std::string, LabelMap> LoadLabelMaps(const fs::path& dir,
                                              const ClassTable& table,
                                              const ColorPalette* palette) {
  if (!fs::is_directory(dir)) {
    throw InputError("label directory " + dir.string() + " does not exist");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string ext = entry.path().extension().string();
    if (entry.is_regular_file() && (ext == ".pgm" || ext == ".png")) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::map<std::string, LabelMap> maps;
  for (const auto& file : files) {
    LabelMap map = LoadLabelMap(file, table, palette);
    const std::string key = map.name;
    if (!maps.emplace(key, std::move(map)).second) {
      throw InputError("two label maps share the name '" + key + "' in " +
                       dir.string());
    }
  }
  return maps;
}

}  // namespace sfmsemval
