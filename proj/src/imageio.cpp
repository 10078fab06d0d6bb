#include "varbg/imageio.hpp"

#include <png.h>

#include <cctype>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>
#include <vector>

namespace varbg {

namespace {

namespace fs = std::filesystem;

std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError(path, "cannot open file");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Reads one whitespace-delimited header token, skipping '#' comments.
bool next_token(const std::vector<unsigned char>& buf, std::size_t& pos, std::string& token) {
  token.clear();
  while (pos < buf.size()) {
    if (buf[pos] == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
    } else if (std::isspace(buf[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  while (pos < buf.size() && !std::isspace(buf[pos]) && buf[pos] != '#') token.push_back(static_cast<char>(buf[pos++]));
  return !token.empty();
}

int parse_positive(const fs::path& path, const std::string& token, const char* what) {
  if (token.empty() || token.size() > 9) throw ImageError(path, std::string("malformed image (bad ") + what + ")");
  for (char c : token) {
    if (!std::isdigit(static_cast<unsigned char>(c))) throw ImageError(path, std::string("malformed image (bad ") + what + ")");
  }
  return std::stoi(token);
}

Frame decode_pgm(const fs::path& path, const std::vector<unsigned char>& buf) {
  std::size_t pos = 0;
  std::string token;
  if (!next_token(buf, pos, token) || token != "P5") throw ImageError(path, "malformed image (not a binary P5 PGM)");
  int dims[3];
  const char* names[3] = {"width", "height", "maxval"};
  for (int k = 0; k < 3; ++k) {
    if (!next_token(buf, pos, token)) throw ImageError(path, "malformed image (truncated header)");
    dims[k] = parse_positive(path, token, names[k]);
  }
  if (dims[0] < 1 || dims[1] < 1) throw ImageError(path, "malformed image (zero dimension)");
  if (dims[2] != 255) throw ImageError(path, "unsupported bit depth (maxval must be 255)");
  // Exactly one whitespace byte separates the header from the raster.
  if (pos >= buf.size() || !std::isspace(buf[pos])) throw ImageError(path, "malformed image (truncated header)");
  ++pos;
  const std::size_t count = static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]);
  if (buf.size() - pos < count) throw ImageError(path, "malformed image (truncated payload)");
  Frame frame(dims[1], dims[0]);
  std::copy_n(buf.begin() + static_cast<std::ptrdiff_t>(pos), count, frame.data());
  return frame;
}

struct PngReadGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReadGuard() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

Frame decode_png(const fs::path& path) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "rb"));
  if (!file) throw ImageError(path, "cannot open file");

  PngReadGuard guard;
  guard.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!guard.png) throw ImageError(path, "libpng initialisation failed");
  guard.info = png_create_info_struct(guard.png);
  if (!guard.info) throw ImageError(path, "libpng initialisation failed");

  png_uint_32 width = 0, height = 0;
  int bit_depth = 0, color_type = 0;
  std::vector<png_byte> raster;
  std::vector<png_bytep> rows;
  std::size_t row_bytes = 0;
  int channels = 1;

  if (setjmp(png_jmpbuf(guard.png))) throw ImageError(path, "malformed image (png decode error)");
  png_init_io(guard.png, file.get());
  png_read_info(guard.png, guard.info);
  png_get_IHDR(guard.png, guard.info, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);
  if (bit_depth != 8) throw ImageError(path, "unsupported bit depth (" + std::to_string(bit_depth) + ")");
  if (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_RGB) {
    throw ImageError(path, "unsupported color type (8-bit gray or RGB only)");
  }
  channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
  row_bytes = static_cast<std::size_t>(width) * channels;
  raster.resize(row_bytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = raster.data() + y * row_bytes;
  png_read_image(guard.png, rows.data());
  png_read_end(guard.png, nullptr);

  Frame frame(static_cast<Eigen::Index>(height), static_cast<Eigen::Index>(width));
  for (Eigen::Index y = 0; y < frame.rows(); ++y) {
    const png_byte* row = rows[static_cast<std::size_t>(y)];
    for (Eigen::Index x = 0; x < frame.cols(); ++x) {
      frame(y, x) = channels == 1 ? row[x] : to_grayscale(row[3 * x], row[3 * x + 1], row[3 * x + 2]);
    }
  }
  return frame;
}

struct PngWriteGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriteGuard() { png_destroy_write_struct(&png, info ? &info : nullptr); }
};

}  // namespace

Frame load_frame(const fs::path& path) {
  const auto bytes = read_bytes(path);
  static constexpr unsigned char png_magic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::equal(png_magic, png_magic + 8, bytes.begin())) return decode_png(path);
  if (bytes.size() >= 2 && bytes[0] == 'P') return decode_pgm(path, bytes);
  throw ImageError(path, "malformed image (unrecognised format)");
}

void save_pgm(const fs::path& path, const Frame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageError(path, "cannot open file for writing");
  out << "P5\n" << frame.cols() << ' ' << frame.rows() << "\n255\n";
  out.write(reinterpret_cast<const char*>(frame.data()), static_cast<std::streamsize>(frame.size()));
  if (!out) throw ImageError(path, "write failed");
}

void save_png(const fs::path& path, const Frame& frame) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "wb"));
  if (!file) throw ImageError(path, "cannot open file for writing");
  PngWriteGuard guard;
  guard.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!guard.png) throw ImageError(path, "libpng initialisation failed");
  guard.info = png_create_info_struct(guard.png);
  if (!guard.info) throw ImageError(path, "libpng initialisation failed");
  if (setjmp(png_jmpbuf(guard.png))) throw ImageError(path, "png encode error");
  png_init_io(guard.png, file.get());
  png_set_IHDR(guard.png, guard.info, static_cast<png_uint_32>(frame.cols()), static_cast<png_uint_32>(frame.rows()), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(guard.png, guard.info);
  for (Eigen::Index y = 0; y < frame.rows(); ++y) {
    png_write_row(guard.png, const_cast<png_bytep>(frame.data() + y * frame.cols()));
  }
  png_write_end(guard.png, nullptr);
}

void save_mask(const fs::path& path, const BinaryMask& mask) {
  save_pgm(path, mask.cast<std::uint8_t>().matrix() * std::uint8_t{255});
}

std::uint8_t to_grayscale(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const double luma = 0.299 * r + 0.587 * g + 0.114 * b;
  return static_cast<std::uint8_t>(std::clamp(std::floor(luma + 0.5), 0.0, 255.0));
}

namespace {

// Source coordinate for a destination index under half-pixel-centre mapping.
double source_coord(Eigen::Index dst, double scale) { return (static_cast<double>(dst) + 0.5) * scale - 0.5; }

Eigen::Index nearest_index(Eigen::Index dst, double scale, Eigen::Index src_size) {
  const auto idx = static_cast<Eigen::Index>(std::floor((static_cast<double>(dst) + 0.5) * scale));
  return std::clamp<Eigen::Index>(idx, 0, src_size - 1);
}

void check_target(int out_width, int out_height) {
  if (out_width < 1 || out_height < 1) throw std::invalid_argument("resize: zero target dimension");
}

}  // namespace

Frame resize(const Frame& frame, int out_width, int out_height, ResizeMode mode) {
  check_target(out_width, out_height);
  if (frame.cols() == out_width && frame.rows() == out_height) return frame;
  const double sx = static_cast<double>(frame.cols()) / out_width;
  const double sy = static_cast<double>(frame.rows()) / out_height;
  Frame out(out_height, out_width);
  if (mode == ResizeMode::nearest) {
    for (Eigen::Index y = 0; y < out.rows(); ++y) {
      const Eigen::Index srcy = nearest_index(y, sy, frame.rows());
      for (Eigen::Index x = 0; x < out.cols(); ++x) out(y, x) = frame(srcy, nearest_index(x, sx, frame.cols()));
    }
    return out;
  }
  const double maxx = static_cast<double>(frame.cols() - 1);
  const double maxy = static_cast<double>(frame.rows() - 1);
  for (Eigen::Index y = 0; y < out.rows(); ++y) {
    const double fy = std::clamp(source_coord(y, sy), 0.0, maxy);
    const auto y0 = static_cast<Eigen::Index>(std::floor(fy));
    const Eigen::Index y1 = std::min<Eigen::Index>(y0 + 1, frame.rows() - 1);
    const double ty = fy - static_cast<double>(y0);
    for (Eigen::Index x = 0; x < out.cols(); ++x) {
      const double fx = std::clamp(source_coord(x, sx), 0.0, maxx);
      const auto x0 = static_cast<Eigen::Index>(std::floor(fx));
      const Eigen::Index x1 = std::min<Eigen::Index>(x0 + 1, frame.cols() - 1);
      const double tx = fx - static_cast<double>(x0);
      const double top = (1.0 - tx) * frame(y0, x0) + tx * frame(y0, x1);
      const double bottom = (1.0 - tx) * frame(y1, x0) + tx * frame(y1, x1);
      const double v = (1.0 - ty) * top + ty * bottom;
      out(y, x) = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
    }
  }
  return out;
}

BinaryMask resize(const BinaryMask& mask, int out_width, int out_height) {
  check_target(out_width, out_height);
  if (mask.cols() == out_width && mask.rows() == out_height) return mask;
  const double sx = static_cast<double>(mask.cols()) / out_width;
  const double sy = static_cast<double>(mask.rows()) / out_height;
  BinaryMask out(out_height, out_width);
  for (Eigen::Index y = 0; y < out.rows(); ++y) {
    const Eigen::Index srcy = nearest_index(y, sy, mask.rows());
    for (Eigen::Index x = 0; x < out.cols(); ++x) out(y, x) = mask(srcy, nearest_index(x, sx, mask.cols()));
  }
  return out;
}

}  // namespace varbg
