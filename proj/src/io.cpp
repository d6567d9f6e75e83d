#include "fvc/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <png.h>

#include "fvc/errors.hpp"

namespace fvc {

namespace {

constexpr float kFloSentinel = 1e9f;
constexpr int kMaxFloSide = 99999;

void put_le32(std::ostream& os, std::uint32_t v) {
  char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff),
               char((v >> 24) & 0xff)};
  os.write(b, 4);
}

std::uint32_t get_le32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw TruncatedFile("flo: unexpected end of file");
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
         (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}

}  // namespace

void write_flo(const FlowField& flow, const std::filesystem::path& path) {
  if (flow.width > kMaxFloSide || flow.height > kMaxFloSide) {
    throw DimensionOverflow("flo: dimensions exceed 99999");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoFailure("flo: cannot open " + path.string());
  os.write("PIEH", 4);
  put_le32(os, static_cast<std::uint32_t>(flow.width));
  put_le32(os, static_cast<std::uint32_t>(flow.height));
  std::vector<float> row(static_cast<std::size_t>(flow.width) * 2);
  for (int y = 0; y < flow.height; ++y) {
    for (int x = 0; x < flow.width; ++x) {
      const bool ok = flow.valid.at(x, y);
      row[2 * x] = ok ? flow.u[flow.idx(x, y)] : kFloSentinel;
      row[2 * x + 1] = ok ? flow.v[flow.idx(x, y)] : kFloSentinel;
    }
    std::uint32_t bits;
    for (float f : row) {
      std::memcpy(&bits, &f, 4);
      put_le32(os, bits);
    }
  }
  if (!os) throw IoFailure("flo: write failed for " + path.string());
}

FlowField read_flo(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoFailure("flo: cannot open " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is) throw TruncatedFile("flo: file shorter than header");
  if (std::memcmp(magic, "PIEH", 4) != 0) {
    throw BadMagic("flo: bad magic in " + path.string());
  }
  const std::uint32_t w = get_le32(is);
  const std::uint32_t h = get_le32(is);
  if (w == 0 || h == 0 || w > kMaxFloSide || h > kMaxFloSide) {
    throw DimensionOverflow("flo: implausible dimensions");
  }
  FlowField flow(static_cast<int>(w), static_cast<int>(h));
  for (int y = 0; y < flow.height; ++y) {
    for (int x = 0; x < flow.width; ++x) {
      const std::uint32_t bu = get_le32(is);
      const std::uint32_t bv = get_le32(is);
      float fu, fv;
      std::memcpy(&fu, &bu, 4);
      std::memcpy(&fv, &bv, 4);
      if (fu >= kFloSentinel || fv >= kFloSentinel) {
        flow.valid.set(x, y, false);
      } else {
        flow.set(x, y, fu, fv);
      }
    }
  }
  return flow;
}

namespace {

// ---- PGM / PPM ----

void write_pnm(const Frame& frame, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoFailure("pnm: cannot open " + path.string());
  os << (frame.channels == 1 ? "P5" : "P6") << "\n"
     << frame.width << " " << frame.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(frame.data.data()),
           static_cast<std::streamsize>(frame.data.size()));
  if (!os) throw IoFailure("pnm: write failed for " + path.string());
}

int pnm_token(std::istream& is) {
  // Skips whitespace and '#' comments, then reads one non-negative integer.
  int c = is.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = is.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = is.get();
  }
  if (c == EOF || !std::isdigit(c)) throw CorruptFile("pnm: bad header token");
  int value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    if (value > 1000000) throw CorruptFile("pnm: header value out of range");
    c = is.get();
  }
  return value;
}

Frame read_pnm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoFailure("pnm: cannot open " + path.string());
  char p = 0, kind = 0;
  is.get(p);
  is.get(kind);
  if (p != 'P' || (kind != '5' && kind != '6')) {
    throw CorruptFile("pnm: not a binary PGM/PPM file");
  }
  const int w = pnm_token(is);
  const int h = pnm_token(is);
  const int maxval = pnm_token(is);
  if (w < 1 || h < 1) throw CorruptFile("pnm: bad dimensions");
  if (maxval != 255) throw UnsupportedFormat("pnm: only maxval 255 supported");
  Frame frame(w, h, kind == '5' ? 1 : 3);
  is.read(reinterpret_cast<char*>(frame.data.data()),
          static_cast<std::streamsize>(frame.data.size()));
  if (is.gcount() != static_cast<std::streamsize>(frame.data.size())) {
    throw TruncatedFile("pnm: pixel data truncated");
  }
  return frame;
}

// ---- PNG via libpng ----

void png_error_fn(png_structp png, png_const_charp msg) {
  throw CorruptFile(std::string("png: ") + msg);
}
void png_warn_fn(png_structp, png_const_charp) {}

struct FileHandle {
  std::FILE* f = nullptr;
  explicit FileHandle(const std::filesystem::path& p, const char* mode)
      : f(std::fopen(p.string().c_str(), mode)) {}
  ~FileHandle() {
    if (f) std::fclose(f);
  }
};

void write_png(const Frame& frame, const std::filesystem::path& path) {
  FileHandle fh(path, "wb");
  if (!fh.f) throw IoFailure("png: cannot open " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            png_error_fn, png_warn_fn);
  png_infop info = png_create_info_struct(png);
  try {
    png_init_io(png, fh.f);
    // Fixed filter and compression settings keep output byte-stable.
    png_set_filter(png, 0, PNG_FILTER_NONE);
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, frame.width, frame.height, 8,
                 frame.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t stride =
        static_cast<std::size_t>(frame.width) * frame.channels;
    for (int y = 0; y < frame.height; ++y) {
      png_write_row(png, const_cast<png_bytep>(frame.data.data() + y * stride));
    }
    png_write_end(png, info);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
}

Frame read_png(const std::filesystem::path& path) {
  FileHandle fh(path, "rb");
  if (!fh.f) throw IoFailure("png: cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fh.f) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw CorruptFile("png: bad signature in " + path.string());
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           png_error_fn, png_warn_fn);
  png_infop info = png_create_info_struct(png);
  Frame frame;
  try {
    png_init_io(png, fh.f);
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    png_set_expand(png);          // palette/low-depth -> 8-bit
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);
    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int ch = png_get_channels(png, info);
    if (ch != 1 && ch != 3) {
      throw UnsupportedFormat("png: only gray and RGB supported");
    }
    frame = Frame(static_cast<int>(w), static_cast<int>(h), ch);
    const std::size_t stride = static_cast<std::size_t>(w) * ch;
    for (png_uint_32 y = 0; y < h; ++y) {
      png_read_row(png, frame.data.data() + y * stride, nullptr);
    }
    png_read_end(png, nullptr);
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return frame;
}

std::string lower_ext(const std::filesystem::path& path) {
  std::string e = path.extension().string();
  for (char& c : e) c = static_cast<char>(std::tolower(c));
  return e;
}

}  // namespace

void write_frame(const Frame& frame, const std::filesystem::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".png") {
    write_png(frame, path);
  } else if (ext == ".pgm" || ext == ".ppm") {
    write_pnm(frame, path);
  } else {
    throw UnsupportedFormat("write_frame: unsupported extension " + ext);
  }
}

Frame read_frame(const std::filesystem::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm" || ext == ".ppm") return read_pnm(path);
  throw UnsupportedFormat("read_frame: unsupported extension " + ext);
}

void write_mask(const ValidityMask& mask, const std::filesystem::path& path) {
  Frame f(mask.width, mask.height, 1, 0);
  for (std::size_t i = 0; i < mask.valid.size(); ++i) {
    f.data[i] = mask.valid[i] ? 255 : 0;
  }
  write_frame(f, path);
}

ValidityMask read_mask(const std::filesystem::path& path) {
  const Frame f = read_frame(path);
  if (f.channels != 1) throw CorruptFile("mask: expected grayscale");
  ValidityMask mask(f.width, f.height, false);
  for (std::size_t i = 0; i < mask.valid.size(); ++i) {
    mask.valid[i] = f.data[i] >= 128 ? 1 : 0;
  }
  return mask;
}

void write_manifest(const Manifest& m, const std::filesystem::path& path) {
  nlohmann::json j;
  j["dataset_id"] = m.dataset_id;
  j["version"] = m.version;
  j["generator_config"] =
      m.generator_config.empty()
          ? nlohmann::json(nullptr)
          : nlohmann::json::parse(m.generator_config);
  auto& ts = j["timestamps"] = nlohmann::json::array();
  for (const auto& r : m.timestamps) {
    ts.push_back({{"timestamp_id", r.timestamp_id},
                  {"source_id", r.source_id},
                  {"frames", r.frame_paths},
                  {"refs", r.ref_paths},
                  {"flow", r.flow_path},
                  {"params", r.params_path}});
  }
  const auto dir = path.parent_path();
  for (const auto& r : m.timestamps) {
    for (const auto& f : r.frame_paths) {
      if (!std::filesystem::exists(dir / f)) {
        throw IoFailure("manifest: missing artifact " + f);
      }
    }
    for (const auto& f : r.ref_paths) {
      if (!std::filesystem::exists(dir / f)) {
        throw IoFailure("manifest: missing artifact " + f);
      }
    }
    if (!std::filesystem::exists(dir / r.flow_path) ||
        !std::filesystem::exists(dir / r.params_path)) {
      throw IoFailure("manifest: missing artifact for " + r.timestamp_id);
    }
  }
  write_text_file(path, j.dump(2) + "\n");
}

Manifest read_manifest(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptFile("manifest: " + std::string(e.what()));
  }
  Manifest m;
  try {
    m.dataset_id = j.at("dataset_id").get<std::string>();
    m.version = j.at("version").get<std::string>();
    if (!j.at("generator_config").is_null()) {
      m.generator_config = j.at("generator_config").dump();
    }
    for (const auto& t : j.at("timestamps")) {
      TimestampRecord r;
      r.timestamp_id = t.at("timestamp_id").get<std::string>();
      r.source_id = t.at("source_id").get<std::string>();
      r.frame_paths = t.at("frames").get<std::vector<std::string>>();
      if (t.contains("refs")) {
        r.ref_paths = t.at("refs").get<std::vector<std::string>>();
      }
      r.flow_path = t.at("flow").get<std::string>();
      r.params_path = t.at("params").get<std::string>();
      m.timestamps.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CorruptFile("manifest: " + std::string(e.what()));
  }
  return m;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoFailure("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoFailure("cannot open " + path.string());
  os << text;
  if (!os) throw IoFailure("write failed for " + path.string());
}

}  // namespace fvc
