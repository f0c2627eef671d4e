#include "geodepth/io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include "json.hpp"

#include "geodepth/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary codecs assume a little-endian host");

namespace geodepth::io {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& expected,
                       const std::string& what) {
  throw FormatError(path + ": " + what + " (expected " + expected + ")");
}

std::ifstream open_in(const std::string& path, const std::string& expected,
                      bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) fail(path, expected, "cannot open for reading");
  return in;
}

std::ofstream open_out(const std::string& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw FormatError(path + ": cannot open for writing");
  return out;
}

template <typename T>
T read_raw(std::istream& in, const std::string& path, const std::string& expected) {
  T v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) fail(path, expected, "truncated file");
  return v;
}

template <typename T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw FormatError(path + ": write failed");
}

// Shortest text that parses back to the same double.
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------- PNG

struct PngPixels {
  int width = 0;
  int height = 0;
  int channels = 0;   // after alpha stripping: 1 or 3
  int bit_depth = 8;  // 8 or 16
  std::vector<std::uint16_t> values;
};

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};

PngPixels load_png(const std::string& path, const std::string& expected) {
  std::unique_ptr<FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
  if (!fp) fail(path, expected, "cannot open for reading");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    fail(path, expected, "not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(path, expected, "libpng initialization failed");
  }
  PngPixels out;
  std::vector<png_bytep> rows;
  std::vector<unsigned char> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, expected, "corrupt PNG data");
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) {
    png_set_strip_alpha(png);
  }
  if (depth == 16) png_set_swap(png);  // host order
  png_read_update_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  buffer.resize(stride * out.height);
  rows.resize(out.height);
  for (int y = 0; y < out.height; ++y) rows[y] = buffer.data() + stride * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (out.channels != 1 && out.channels != 3) fail(path, expected, "unsupported channel layout");
  const std::size_t n = static_cast<std::size_t>(out.width) * out.height * out.channels;
  out.values.resize(n);
  if (out.bit_depth == 16) {
    std::memcpy(out.values.data(), buffer.data(), n * 2);
  } else {
    for (std::size_t i = 0; i < n; ++i) out.values[i] = buffer[i];
  }
  return out;
}

void save_png(const std::string& path, int width, int height, int channels,
              int bit_depth, const std::vector<std::uint16_t>& values) {
  std::unique_ptr<FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw FormatError(path + ": cannot open for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw FormatError(path + ": libpng initialization failed");
  }
  const int bytes = bit_depth / 8;
  const std::size_t stride = static_cast<std::size_t>(width) * channels * bytes;
  std::vector<unsigned char> buffer(stride * height);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (bytes == 2) {
      buffer[2 * i] = static_cast<unsigned char>(values[i] >> 8);  // PNG is big-endian
      buffer[2 * i + 1] = static_cast<unsigned char>(values[i] & 0xff);
    } else {
      buffer[i] = static_cast<unsigned char>(values[i]);
    }
  }
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = buffer.data() + stride * y;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw FormatError(path + ": PNG encoding failed");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, bit_depth,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// ---------------------------------------------------------------- JSON helpers

json load_json(const std::string& path, const std::string& expected) {
  std::ifstream in = open_in(path, expected, false);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(path, expected, e.what());
  }
}

double get_num(const json& j, const char* key, const std::string& path,
               const std::string& expected) {
  if (!j.contains(key) || !j[key].is_number()) {
    fail(path, expected, std::string("missing numeric field '") + key + "'");
  }
  return j[key].get<double>();
}

double get_num_or(const json& j, const char* key, double fallback) {
  return j.contains(key) && j[key].is_number() ? j[key].get<double>() : fallback;
}

template <int N>
Eigen::Matrix<double, N, 1> get_vec(const json& j, const char* key,
                                    const std::string& path,
                                    const std::string& expected) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != N) {
    fail(path, expected,
         std::string("field '") + key + "' must be an array of " + std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) {
    if (!j[key][i].is_number()) fail(path, expected, std::string("non-numeric entry in '") + key + "'");
    v(i) = j[key][i].get<double>();
  }
  return v;
}

Box2D get_box(const json& j, const std::string& path, const std::string& expected) {
  const Eigen::Vector4d b = get_vec<4>(j, "box2d", path, expected);
  return {b(0), b(1), b(2), b(3)};
}

int get_category(const json& j, const std::string& path, const std::string& expected) {
  if (!j.contains("category")) return 0;
  const json& c = j["category"];
  if (c.is_number_integer()) return c.get<int>();
  if (c.is_string()) {
    const int id = category_id(c.get<std::string>());
    if (id < 0) fail(path, expected, "unknown category name '" + c.get<std::string>() + "'");
    return id;
  }
  fail(path, expected, "category must be an integer id or a name");
}

json camera_to_json(const CameraModel& cam) {
  json j;
  j["width"] = cam.width();
  j["height"] = cam.height();
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, PinholeParams>) {
          j["model"] = "pinhole";
          j["fx"] = p.fx;
          j["fy"] = p.fy;
          j["cx"] = p.cx;
          j["cy"] = p.cy;
        } else if constexpr (std::is_same_v<P, MeiParams>) {
          j["model"] = "mei";
          j["gamma_x"] = p.gamma_x;
          j["gamma_y"] = p.gamma_y;
          j["u0"] = p.u0;
          j["v0"] = p.v0;
          j["xi"] = p.xi;
          j["k1"] = p.k1;
          j["k2"] = p.k2;
        } else {
          j["model"] = "fisheye_poly";
          j["fx"] = p.fx;
          j["fy"] = p.fy;
          j["cx"] = p.cx;
          j["cy"] = p.cy;
          j["k1"] = p.k[0];
          j["k2"] = p.k[1];
          j["k3"] = p.k[2];
          j["k4"] = p.k[3];
        }
      },
      cam.params());
  return j;
}

CameraModel camera_from_json(const json& j, const std::string& path) {
  const std::string expected = "camera JSON with model pinhole|mei|fisheye_poly";
  if (!j.is_object() || !j.contains("model") || !j["model"].is_string()) {
    fail(path, expected, "missing 'model'");
  }
  const std::string model = j["model"].get<std::string>();
  const int w = static_cast<int>(get_num(j, "width", path, expected));
  const int h = static_cast<int>(get_num(j, "height", path, expected));
  auto n = [&](const char* k) { return get_num(j, k, path, expected); };
  try {
    if (model == "pinhole") {
      return CameraModel::pinhole({n("fx"), n("fy"), n("cx"), n("cy")}, w, h);
    }
    if (model == "mei") {
      return CameraModel::mei({n("gamma_x"), n("gamma_y"), n("u0"), n("v0"), n("xi"),
                               get_num_or(j, "k1", 0.0), get_num_or(j, "k2", 0.0)},
                              w, h);
    }
    if (model == "fisheye_poly") {
      FisheyePolyParams p{n("fx"), n("fy"), n("cx"), n("cy"), {}};
      p.k = {get_num_or(j, "k1", 0.0), get_num_or(j, "k2", 0.0), get_num_or(j, "k3", 0.0),
             get_num_or(j, "k4", 0.0)};
      return CameraModel::fisheye_poly(p, w, h);
    }
  } catch (const InvalidArgument& e) {
    fail(path, expected, e.what());
  }
  fail(path, expected, "unknown model '" + model + "'");
}

RigidPose pose_from_values(const std::array<double, 12>& v, const std::string& path,
                           const std::string& expected) {
  Eigen::Matrix<double, 3, 4> m;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) m(r, c) = v[r * 4 + c];
  }
  try {
    return RigidPose::from_matrix_3x4_nearest(m);
  } catch (const InvalidArgument& e) {
    fail(path, expected, e.what());
  }
}

std::vector<std::string> read_lines(const std::string& path, const std::string& expected) {
  std::ifstream in = open_in(path, expected, false);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

bool blank_or_comment(const std::string& line) {
  const auto pos = line.find_first_not_of(" \t");
  return pos == std::string::npos || line[pos] == '#';
}

}  // namespace

// ---------------------------------------------------------------- images

Image read_png(const std::string& path) {
  const PngPixels px = load_png(path, "8/16-bit gray or RGB PNG");
  Image img(px.width, px.height, px.channels,
            px.channels == 1 ? ColorSpace::kGray : ColorSpace::kRgb);
  const float scale = px.bit_depth == 16 ? 65535.0f : 255.0f;
  for (std::size_t i = 0; i < px.values.size(); ++i) img.data()[i] = px.values[i] / scale;
  return img;
}

void write_png(const std::string& path, const Image& image) {
  if (image.color_space() == ColorSpace::kLab) {
    throw InvalidArgument(path + ": LAB images cannot be written as PNG");
  }
  std::vector<std::uint16_t> v(image.data().size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const float c = std::clamp(image.data()[i], 0.0f, 1.0f);
    v[i] = static_cast<std::uint16_t>(std::lround(c * 255.0f));
  }
  save_png(path, image.width(), image.height(), image.channels(), 8, v);
}

DepthMap read_depth_png(const std::string& path) {
  const std::string expected = "16-bit single-channel depth PNG (value / 256 m, 0 = invalid)";
  const PngPixels px = load_png(path, expected);
  if (px.channels != 1 || px.bit_depth != 16) fail(path, expected, "wrong PNG layout");
  DepthMap d(px.width, px.height);
  for (int y = 0; y < px.height; ++y) {
    for (int x = 0; x < px.width; ++x) {
      const std::uint16_t v = px.values[static_cast<std::size_t>(y) * px.width + x];
      if (v != 0) d.set(x, y, v / 256.0);
    }
  }
  return d;
}

void write_depth_png(const std::string& path, const DepthMap& depth) {
  std::vector<std::uint16_t> v(static_cast<std::size_t>(depth.width()) * depth.height(), 0);
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      if (!depth.valid(x, y)) continue;
      const double q = std::round(depth.depth(x, y) * 256.0);
      if (q > 65535.0) {
        throw InvalidArgument(path + ": depth " + num(depth.depth(x, y)) +
                              " m exceeds the 16-bit PNG range (255.99 m); use PFM");
      }
      // Depths below 1/512 m would round to the invalid marker.
      v[static_cast<std::size_t>(y) * depth.width() + x] =
          static_cast<std::uint16_t>(std::max(1.0, q));
    }
  }
  save_png(path, depth.width(), depth.height(), 1, 16, v);
}

FloatMap read_pfm(const std::string& path) {
  const std::string expected = "PFM float map (Pf or PF header)";
  std::ifstream in = open_in(path, expected, true);
  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  if (!(in >> magic >> w >> h >> scale)) fail(path, expected, "bad header");
  if (magic != "Pf" && magic != "PF") fail(path, expected, "bad magic '" + magic + "'");
  if (w <= 0 || h <= 0 || scale == 0.0) fail(path, expected, "bad dimensions or scale");
  in.get();  // single whitespace byte before the raster
  FloatMap m;
  m.width = w;
  m.height = h;
  m.channels = magic == "PF" ? 3 : 1;
  const std::size_t row = static_cast<std::size_t>(w) * m.channels;
  m.data.resize(row * h);
  for (int y = h - 1; y >= 0; --y) {
    if (!in.read(reinterpret_cast<char*>(m.data.data() + row * y),
                 static_cast<std::streamsize>(row * sizeof(float)))) {
      fail(path, expected, "truncated raster");
    }
  }
  if (scale > 0.0) {  // big-endian payload
    for (float& f : m.data) {
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      u = __builtin_bswap32(u);
      std::memcpy(&f, &u, 4);
    }
  }
  return m;
}

void write_pfm(const std::string& path, const FloatMap& map) {
  if (map.channels != 1 && map.channels != 3) {
    throw InvalidArgument(path + ": PFM supports 1 or 3 channels");
  }
  std::ofstream out = open_out(path, true);
  out << (map.channels == 3 ? "PF" : "Pf") << "\n" << map.width << " " << map.height << "\n-1\n";
  const std::size_t row = static_cast<std::size_t>(map.width) * map.channels;
  for (int y = map.height - 1; y >= 0; --y) {
    out.write(reinterpret_cast<const char*>(map.data.data() + row * y),
              static_cast<std::streamsize>(row * sizeof(float)));
  }
  finish(out, path);
}

DepthMap read_depth_pfm(const std::string& path) {
  const FloatMap m = read_pfm(path);
  if (m.channels != 1) fail(path, "single-channel PFM depth", "color PFM");
  DepthMap d(m.width, m.height);
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) d.set(x, y, m.data[static_cast<std::size_t>(y) * m.width + x]);
  }
  return d;
}

void write_depth_pfm(const std::string& path, const DepthMap& depth) {
  FloatMap m;
  m.width = depth.width();
  m.height = depth.height();
  m.data.assign(static_cast<std::size_t>(m.width) * m.height, 0.0f);
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      if (depth.valid(x, y)) {
        m.data[static_cast<std::size_t>(y) * m.width + x] = static_cast<float>(depth.depth(x, y));
      }
    }
  }
  write_pfm(path, m);
}

namespace {
bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         std::equal(suffix.rbegin(), suffix.rend(), s.rbegin(),
                    [](char a, char b) { return std::tolower(a) == b; });
}
}  // namespace

DepthMap read_depth(const std::string& path) {
  if (ends_with(path, ".pfm")) return read_depth_pfm(path);
  if (ends_with(path, ".png")) return read_depth_png(path);
  fail(path, "depth file ending in .png or .pfm", "unknown extension");
}

void write_depth(const std::string& path, const DepthMap& depth) {
  if (ends_with(path, ".pfm")) return write_depth_pfm(path, depth);
  if (ends_with(path, ".png")) return write_depth_png(path, depth);
  throw InvalidArgument(path + ": depth output must end in .png or .pfm");
}

FloatMap to_float_map(const Grid<float>& grid) {
  FloatMap m;
  m.width = grid.width();
  m.height = grid.height();
  m.data = grid.data();
  return m;
}

// ---------------------------------------------------------------- flow

namespace {
constexpr float kFloTag = 202021.25f;
constexpr float kUnknownFlow = 1e10f;
}  // namespace

FlowField read_flo(const std::string& path) {
  const std::string expected = "Middlebury .flo (PIEH tag, int32 width/height, float pairs)";
  std::ifstream in = open_in(path, expected, true);
  if (read_raw<float>(in, path, expected) != kFloTag) fail(path, expected, "bad tag");
  const std::int32_t w = read_raw<std::int32_t>(in, path, expected);
  const std::int32_t h = read_raw<std::int32_t>(in, path, expected);
  if (w <= 0 || h <= 0 || w > (1 << 16) || h > (1 << 16)) fail(path, expected, "bad dimensions");
  FlowField f(w, h);
  std::vector<float> buf(static_cast<std::size_t>(w) * h * 2);
  if (!in.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(buf.size() * sizeof(float)))) {
    fail(path, expected, "truncated flow data");
  }
  for (std::size_t i = 0; i < f.dx.size(); ++i) {
    const float u = buf[2 * i];
    const float v = buf[2 * i + 1];
    f.valid[i] = std::isfinite(u) && std::isfinite(v) && std::abs(u) <= 1e9f &&
                 std::abs(v) <= 1e9f;
    f.dx[i] = f.valid[i] ? u : 0.0f;
    f.dy[i] = f.valid[i] ? v : 0.0f;
  }
  return f;
}

void write_flo(const std::string& path, const FlowField& flow) {
  std::ofstream out = open_out(path, true);
  write_raw(out, kFloTag);
  write_raw(out, static_cast<std::int32_t>(flow.width()));
  write_raw(out, static_cast<std::int32_t>(flow.height()));
  for (std::size_t i = 0; i < flow.dx.size(); ++i) {
    write_raw(out, flow.valid[i] ? flow.dx[i] : kUnknownFlow);
    write_raw(out, flow.valid[i] ? flow.dy[i] : kUnknownFlow);
  }
  finish(out, path);
}

// ---------------------------------------------------------------- SEG1 / BINS

Grid<std::int32_t> read_seg(const std::string& path) {
  const std::string expected = "SEG1 label file (u32 width, u32 height, u32 ids)";
  std::ifstream in = open_in(path, expected, true);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "SEG1", 4) != 0) fail(path, expected, "bad magic");
  const auto w = read_raw<std::uint32_t>(in, path, expected);
  const auto h = read_raw<std::uint32_t>(in, path, expected);
  if (w == 0 || h == 0 || w > (1u << 16) || h > (1u << 16)) fail(path, expected, "bad dimensions");
  Grid<std::int32_t> labels(static_cast<int>(w), static_cast<int>(h));
  std::vector<std::uint32_t> ids(labels.size());
  if (!in.read(reinterpret_cast<char*>(ids.data()),
               static_cast<std::streamsize>(ids.size() * sizeof(std::uint32_t)))) {
    fail(path, expected, "truncated ids");
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= ids.size()) fail(path, expected, "segment id exceeds the pixel count");
    labels[i] = static_cast<std::int32_t>(ids[i]);
  }
  return labels;
}

void write_seg(const std::string& path, const Grid<std::int32_t>& labels) {
  for (std::int32_t l : labels.data()) {
    if (l < 0) throw InvalidArgument(path + ": negative segment label");
  }
  std::ofstream out = open_out(path, true);
  out.write("SEG1", 4);
  write_raw(out, static_cast<std::uint32_t>(labels.width()));
  write_raw(out, static_cast<std::uint32_t>(labels.height()));
  for (std::int32_t l : labels.data()) write_raw(out, static_cast<std::uint32_t>(l));
  finish(out, path);
}

BinVolume read_bins(const std::string& path) {
  const std::string expected = "BINS logit volume";
  std::ifstream in = open_in(path, expected, true);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "BINS", 4) != 0) fail(path, expected, "bad magic");
  BinVolume v;
  v.width = static_cast<int>(read_raw<std::uint32_t>(in, path, expected));
  v.height = static_cast<int>(read_raw<std::uint32_t>(in, path, expected));
  v.bins = static_cast<int>(read_raw<std::uint32_t>(in, path, expected));
  if (v.width <= 0 || v.height <= 0 || v.bins < 2 || v.bins > 65536 ||
      v.width > (1 << 16) || v.height > (1 << 16)) {
    fail(path, expected, "bad dimensions");
  }
  v.logits.resize(static_cast<std::size_t>(v.width) * v.height * v.bins);
  if (!in.read(reinterpret_cast<char*>(v.logits.data()),
               static_cast<std::streamsize>(v.logits.size() * sizeof(float)))) {
    fail(path, expected, "truncated logits");
  }
  return v;
}

void write_bins(const std::string& path, const BinVolume& volume) {
  if (volume.logits.size() != static_cast<std::size_t>(volume.width) * volume.height * volume.bins) {
    throw InvalidArgument(path + ": logit count does not match the volume shape");
  }
  std::ofstream out = open_out(path, true);
  out.write("BINS", 4);
  write_raw(out, static_cast<std::uint32_t>(volume.width));
  write_raw(out, static_cast<std::uint32_t>(volume.height));
  write_raw(out, static_cast<std::uint32_t>(volume.bins));
  out.write(reinterpret_cast<const char*>(volume.logits.data()),
            static_cast<std::streamsize>(volume.logits.size() * sizeof(float)));
  finish(out, path);
}

// ---------------------------------------------------------------- text formats

SparseDepth read_vo_csv(const std::string& path) {
  const std::string expected = "CSV lines 'u,v,depth'";
  SparseDepth out;
  const auto lines = read_lines(path, expected);
  bool first = true;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (blank_or_comment(line)) continue;
    // Header row: the first data line starting with a letter.
    const bool header = first && std::isalpha(static_cast<unsigned char>(
                                     line[line.find_first_not_of(" \t")]));
    first = false;
    if (header) continue;
    std::string s = line;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream ss(s);
    SparseSample p;
    std::string extra;
    if (!(ss >> p.u >> p.v >> p.depth) || (ss >> extra)) {
      fail(path, expected, "line " + std::to_string(i + 1) + " is malformed");
    }
    out.push_back(p);
  }
  return out;
}

void write_vo_csv(const std::string& path, const SparseDepth& samples) {
  std::ofstream out = open_out(path, false);
  out << "u,v,depth\n";
  for (const SparseSample& s : samples) out << num(s.u) << ',' << num(s.v) << ',' << num(s.depth) << '\n';
  finish(out, path);
}

std::vector<RigidPose> read_poses(const std::string& path) {
  const std::string expected = "pose file with 12 floats (row-major 3x4) per line";
  std::vector<RigidPose> out;
  const auto lines = read_lines(path, expected);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (blank_or_comment(lines[i])) continue;
    std::istringstream ss(lines[i]);
    std::array<double, 12> v{};
    std::string extra;
    for (double& x : v) {
      if (!(ss >> x)) fail(path, expected, "line " + std::to_string(i + 1) + " has fewer than 12 values");
    }
    if (ss >> extra) fail(path, expected, "line " + std::to_string(i + 1) + " has more than 12 values");
    out.push_back(pose_from_values(v, path, expected));
  }
  return out;
}

void write_poses(const std::string& path, const std::vector<RigidPose>& poses) {
  std::ofstream out = open_out(path, false);
  for (const RigidPose& p : poses) {
    const auto m = p.matrix_3x4();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) out << num(m(r, c)) << (r == 2 && c == 3 ? '\n' : ' ');
    }
  }
  finish(out, path);
}

CameraModel read_camera(const std::string& path) {
  return camera_from_json(load_json(path, "camera JSON"), path);
}

void write_camera(const std::string& path, const CameraModel& cam) {
  std::ofstream out = open_out(path, false);
  out << camera_to_json(cam).dump(2) << '\n';
  finish(out, path);
}

namespace {
const std::array<const char*, 8> kCategories = {
    "Car", "Pedestrian", "Cyclist", "Van", "Truck", "Person_sitting", "Tram", "Misc"};
}  // namespace

int category_id(const std::string& name) {
  for (std::size_t i = 0; i < kCategories.size(); ++i) {
    if (name == kCategories[i]) return static_cast<int>(i);
  }
  return -1;
}

std::string category_name(int id) {
  if (id >= 0 && id < static_cast<int>(kCategories.size())) return kCategories[id];
  return std::to_string(id);
}

std::vector<DetectionBox> read_kitti_labels(const std::string& path) {
  const std::string expected =
      "KITTI label lines 'type trunc occ alpha x1 y1 x2 y2 h w l x y z ry [score]'";
  std::vector<DetectionBox> out;
  const auto lines = read_lines(path, expected);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (blank_or_comment(lines[i])) continue;
    std::istringstream ss(lines[i]);
    std::string type;
    double trunc, occ, alpha, x1, y1, x2, y2, h, w, l, x, y, z, ry;
    if (!(ss >> type >> trunc >> occ >> alpha >> x1 >> y1 >> x2 >> y2 >> h >> w >> l >> x >> y >> z >> ry)) {
      fail(path, expected, "line " + std::to_string(i + 1) + " is malformed");
    }
    if (type == "DontCare") continue;
    DetectionBox b;
    b.box2d = {x1, y1, x2, y2};
    b.dims = {w, h, l};
    b.center = {x, y - h / 2, z};
    b.yaw = ry;
    b.alpha = alpha;
    double score;
    b.score = (ss >> score) ? score : 1.0;
    b.category = category_id(type);
    if (b.category < 0) fail(path, expected, "unknown category '" + type + "'");
    out.push_back(b);
  }
  return out;
}

std::vector<DetectionBox> read_detections_jsonl(const std::string& path) {
  const std::string expected = "JSON lines with box2d, center, dims, yaw, score, category";
  std::vector<DetectionBox> out;
  const auto lines = read_lines(path, expected);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (blank_or_comment(lines[i])) continue;
    json j;
    try {
      j = json::parse(lines[i]);
    } catch (const json::exception& e) {
      fail(path, expected, "line " + std::to_string(i + 1) + ": " + e.what());
    }
    DetectionBox b;
    b.box2d = get_box(j, path, expected);
    b.center = get_vec<3>(j, "center", path, expected);
    b.dims = j.contains("dims") ? Eigen::Vector3d(get_vec<3>(j, "dims", path, expected))
                                : Eigen::Vector3d::Ones();
    b.yaw = get_num_or(j, "yaw", 0.0);
    if (j.contains("alpha")) {
      b.alpha = get_num(j, "alpha", path, expected);
    } else if (b.center.z() > 0.0) {
      b.alpha = obs_angle(b.center.x(), b.center.z(), b.yaw);
    }
    b.score = get_num_or(j, "score", 1.0);
    b.category = get_category(j, path, expected);
    out.push_back(b);
  }
  return out;
}

void write_detections_jsonl(const std::string& path, const std::vector<DetectionBox>& boxes) {
  std::ofstream out = open_out(path, false);
  for (const DetectionBox& b : boxes) {
    json j;
    j["box2d"] = {b.box2d.x1, b.box2d.y1, b.box2d.x2, b.box2d.y2};
    j["center"] = {b.center.x(), b.center.y(), b.center.z()};
    j["dims"] = {b.dims.x(), b.dims.y(), b.dims.z()};
    j["yaw"] = b.yaw;
    j["alpha"] = b.alpha;
    j["score"] = b.score;
    j["category"] = b.category;
    out << j.dump() << '\n';
  }
  finish(out, path);
}

std::vector<Annotation2D> read_annotations_jsonl(const std::string& path) {
  const std::string expected = "JSON lines with box2d and category";
  std::vector<Annotation2D> out;
  const auto lines = read_lines(path, expected);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (blank_or_comment(lines[i])) continue;
    json j;
    try {
      j = json::parse(lines[i]);
    } catch (const json::exception& e) {
      fail(path, expected, "line " + std::to_string(i + 1) + ": " + e.what());
    }
    out.push_back({get_box(j, path, expected), get_category(j, path, expected)});
  }
  return out;
}

std::vector<AnchorTemplate> read_anchors(const std::string& path) {
  const std::string expected = "JSON array of anchors {box2d, category, prior}";
  const json j = load_json(path, expected);
  if (!j.is_array()) fail(path, expected, "top level is not an array");
  std::vector<AnchorTemplate> out;
  for (const json& a : j) {
    AnchorTemplate t;
    t.box = get_box(a, path, expected);
    t.category = a.contains("category") ? get_category(a, path, expected) : -1;
    if (a.contains("prior")) {
      const json& p = a["prior"];
      t.prior.mean_z = get_num_or(p, "mean_z", 0.0);
      t.prior.var_z = get_num_or(p, "var_z", 0.0);
      t.prior.mean_sin_alpha = get_num_or(p, "mean_sin_alpha", 0.0);
      t.prior.var_sin_alpha = get_num_or(p, "var_sin_alpha", 0.0);
      t.prior.mean_cos_alpha = get_num_or(p, "mean_cos_alpha", 0.0);
      t.prior.var_cos_alpha = get_num_or(p, "var_cos_alpha", 0.0);
      t.prior.matches = static_cast<int>(get_num_or(p, "matches", 0));
      t.prior.flagged = p.value("flagged", t.prior.matches == 0);
    }
    out.push_back(t);
  }
  return out;
}

void write_anchors(const std::string& path, const std::vector<AnchorTemplate>& anchors) {
  json arr = json::array();
  for (const AnchorTemplate& t : anchors) {
    json a;
    a["box2d"] = {t.box.x1, t.box.y1, t.box.x2, t.box.y2};
    a["category"] = t.category;
    a["prior"] = {{"mean_z", t.prior.mean_z},
                  {"var_z", t.prior.var_z},
                  {"mean_sin_alpha", t.prior.mean_sin_alpha},
                  {"var_sin_alpha", t.prior.var_sin_alpha},
                  {"mean_cos_alpha", t.prior.mean_cos_alpha},
                  {"var_cos_alpha", t.prior.var_cos_alpha},
                  {"matches", t.prior.matches},
                  {"flagged", t.prior.flagged}};
    arr.push_back(a);
  }
  std::ofstream out = open_out(path, false);
  out << arr.dump(2) << '\n';
  finish(out, path);
}

SceneSpec read_scene(const std::string& path) {
  const std::string expected = "scene JSON {camera, ground_elevation, boxes, poses, texture_seed, vo}";
  const json j = load_json(path, expected);
  if (!j.is_object()) fail(path, expected, "top level is not an object");
  SceneSpec s;
  if (!j.contains("camera")) fail(path, expected, "missing 'camera'");
  s.camera = camera_from_json(j["camera"], path);
  s.ground_elevation = get_num_or(j, "ground_elevation", s.ground_elevation);
  if (j.contains("boxes")) {
    for (const json& b : j["boxes"]) {
      SceneBox box;
      box.center = get_vec<3>(b, "center", path, expected);
      box.dims = get_vec<3>(b, "dims", path, expected);
      box.yaw = get_num_or(b, "yaw", 0.0);
      if (b.contains("albedo")) box.albedo = get_vec<3>(b, "albedo", path, expected);
      if (b.contains("velocity")) box.velocity = get_vec<3>(b, "velocity", path, expected);
      s.boxes.push_back(box);
    }
  }
  if (!j.contains("poses") || !j["poses"].is_array()) fail(path, expected, "missing 'poses'");
  for (const json& p : j["poses"]) {
    if (!p.is_array() || p.size() != 12) fail(path, expected, "each pose must hold 12 numbers");
    std::array<double, 12> v{};
    for (int i = 0; i < 12; ++i) {
      if (!p[i].is_number()) fail(path, expected, "non-numeric pose entry");
      v[i] = p[i].get<double>();
    }
    s.poses.push_back(pose_from_values(v, path, expected));
  }
  if (j.contains("texture_seed")) s.texture_seed = j["texture_seed"].get<std::uint64_t>();
  if (j.contains("vo")) {
    const json& vo = j["vo"];
    s.vo.coverage = get_num_or(vo, "coverage", s.vo.coverage);
    s.vo.noise = get_num_or(vo, "noise", s.vo.noise);
    if (vo.contains("seed")) s.vo.seed = vo["seed"].get<std::uint64_t>();
  }
  try {
    s.validate();
  } catch (const Error& e) {
    fail(path, expected, e.what());
  }
  return s;
}

// ---------------------------------------------------------------- visualization

Image colorize_depth(const DepthMap& depth, double max_depth) {
  Image out(depth.width(), depth.height(), 3, ColorSpace::kRgb, 0.0f);
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      if (!depth.valid(x, y)) continue;
      // Near is warm, far is cool, on inverse depth.
      const double t = std::clamp(1.0 - std::min(depth.depth(x, y), max_depth) / max_depth, 0.0, 1.0);
      out.at(x, y, 0) = static_cast<float>(std::clamp(1.5 * t - 0.25, 0.0, 1.0));
      out.at(x, y, 1) = static_cast<float>(1.0 - std::abs(2.0 * t - 1.0));
      out.at(x, y, 2) = static_cast<float>(std::clamp(1.25 - 1.5 * t, 0.0, 1.0));
    }
  }
  return out;
}

Image overlay_mask(const Image& rgb, const Mask& mask, const Eigen::Vector3f& color) {
  if (mask.width() != rgb.width() || mask.height() != rgb.height()) {
    throw InvalidArgument("overlay_mask: shapes differ");
  }
  Image out(rgb.width(), rgb.height(), 3, ColorSpace::kRgb);
  for (int y = 0; y < rgb.height(); ++y) {
    for (int x = 0; x < rgb.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        const float base = rgb.at(x, y, rgb.channels() == 3 ? c : 0);
        out.at(x, y, c) = mask(x, y) ? 0.4f * base + 0.6f * color(c) : base;
      }
    }
  }
  return out;
}

}  // namespace geodepth::io
