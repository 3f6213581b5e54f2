#include "retseg/codec.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>
#include <vector>

namespace retseg {
namespace {

namespace fs = std::filesystem;

struct RawImage {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1 or 3 after decoding
  double maxval = 255.0;
  std::vector<std::uint16_t> samples;  // interleaved, row-major
};

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::vector<unsigned char> read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::UnreadableFile, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Netpbm header token reader; skips whitespace and '#' comments.
class PnmHeader {
 public:
  PnmHeader(const std::vector<unsigned char>& bytes, const fs::path& path) : bytes_(bytes), path_(path) {}

  long next_int() {
    skip_space();
    long value = 0;
    bool any = false;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000'000L) fail(ErrorCode::UnsupportedFormat, "header value overflow in " + path_.string());
      ++pos_;
      any = true;
    }
    if (!any) fail(ErrorCode::UnsupportedFormat, "malformed netpbm header in " + path_.string());
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() const { return pos_ + 1; }
  void seek(std::size_t pos) { pos_ = pos; }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      unsigned char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<unsigned char>& bytes_;
  const fs::path& path_;
  std::size_t pos_ = 0;
};

RawImage decode_pnm(const std::vector<unsigned char>& bytes, const fs::path& path) {
  RawImage raw;
  raw.channels = bytes[1] == '5' ? 1 : 3;
  PnmHeader header(bytes, path);
  header.seek(2);
  raw.width = static_cast<int>(header.next_int());
  raw.height = static_cast<int>(header.next_int());
  long maxval = header.next_int();
  if (raw.width == 0 || raw.height == 0) fail(ErrorCode::ZeroSizedImage, path.string() + " has zero size");
  if (maxval < 1 || maxval > 65535) fail(ErrorCode::UnsupportedFormat, "bad maxval in " + path.string());
  raw.maxval = static_cast<double>(maxval);

  const std::size_t count = static_cast<std::size_t>(raw.width) * raw.height * raw.channels;
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  const std::size_t offset = header.raster_offset();
  if (bytes.size() < offset + count * bytes_per)
    fail(ErrorCode::UnreadableFile, "truncated raster in " + path.string());

  raw.samples.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    raw.samples[i] = bytes_per == 2
                         ? static_cast<std::uint16_t>((bytes[offset + 2 * i] << 8) | bytes[offset + 2 * i + 1])
                         : bytes[offset + i];
  }
  return raw;
}

struct PngReadGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReadGuard() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

// libpng reports errors via longjmp; the handler copies the message so it can be
// rethrown as a C++ exception after unwinding back into decode_png.
void png_error_to_buffer(png_structp png, png_const_charp msg) {
  auto* buffer = static_cast<std::string*>(png_get_error_ptr(png));
  *buffer = msg;
  png_longjmp(png, 1);
}

void png_warning_ignore(png_structp, png_const_charp) {}

RawImage decode_png(const fs::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) fail(ErrorCode::UnreadableFile, "cannot open " + path.string());

  std::string error;
  PngReadGuard guard;
  guard.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, png_error_to_buffer, png_warning_ignore);
  if (!guard.png) fail(ErrorCode::UnreadableFile, "libpng init failed");
  guard.info = png_create_info_struct(guard.png);
  if (!guard.info) fail(ErrorCode::UnreadableFile, "libpng init failed");

  RawImage raw;
  std::vector<png_bytep> rows;
  std::vector<unsigned char> buffer;
  if (setjmp(png_jmpbuf(guard.png))) {
    fail(ErrorCode::UnreadableFile, "PNG decode error in " + path.string() + ": " + error);
  }

  png_init_io(guard.png, file.get());
  png_read_info(guard.png, guard.info);

  const png_uint_32 width = png_get_image_width(guard.png, guard.info);
  const png_uint_32 height = png_get_image_height(guard.png, guard.info);
  const int color = png_get_color_type(guard.png, guard.info);
  const int depth = png_get_bit_depth(guard.png, guard.info);

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(guard.png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(guard.png);
  if (png_get_valid(guard.png, guard.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(guard.png);
  png_set_strip_alpha(guard.png);
  png_read_update_info(guard.png, guard.info);

  const int channels = png_get_channels(guard.png, guard.info);
  const int out_depth = png_get_bit_depth(guard.png, guard.info);
  const std::size_t rowbytes = png_get_rowbytes(guard.png, guard.info);

  buffer.resize(rowbytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = buffer.data() + y * rowbytes;
  png_read_image(guard.png, rows.data());
  png_read_end(guard.png, nullptr);

  raw.width = static_cast<int>(width);
  raw.height = static_cast<int>(height);
  raw.channels = channels;
  raw.maxval = out_depth == 16 ? 65535.0 : 255.0;
  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  raw.samples.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    raw.samples[i] = out_depth == 16
                         ? static_cast<std::uint16_t>((buffer[2 * i] << 8) | buffer[2 * i + 1])
                         : buffer[i];
  }
  return raw;
}

RawImage decode(const fs::path& path) {
  std::array<unsigned char, 8> magic{};
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::UnreadableFile, "cannot open " + path.string());
    in.read(reinterpret_cast<char*>(magic.data()), magic.size());
    if (in.gcount() < 2) fail(ErrorCode::UnsupportedFormat, path.string() + " is too short to identify");
  }
  static constexpr std::array<unsigned char, 8> png_sig{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  RawImage raw;
  if (magic == png_sig) {
    raw = decode_png(path);
  } else if (magic[0] == 'P' && (magic[1] == '5' || magic[1] == '6')) {
    raw = decode_pnm(read_all(path), path);
  } else {
    fail(ErrorCode::UnsupportedFormat, path.string() + " is not PNG, P5 PGM or P6 PPM");
  }
  if (raw.width == 0 || raw.height == 0) fail(ErrorCode::ZeroSizedImage, path.string() + " has zero size");
  if (raw.channels != 1 && raw.channels != 3)
    fail(ErrorCode::UnsupportedFormat, path.string() + " has an unsupported channel layout");
  return raw;
}

void write_pgm(const fs::path& path, int width, int height, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::WriteFailure, "cannot write " + path.string());
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::WriteFailure, "short write to " + path.string());
}

struct PngWriteGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriteGuard() { png_destroy_write_struct(&png, info ? &info : nullptr); }
};

void write_png(const fs::path& path, int width, int height, const std::vector<unsigned char>& bytes) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) fail(ErrorCode::WriteFailure, "cannot write " + path.string());

  std::string error;
  PngWriteGuard guard;
  guard.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_error_to_buffer, png_warning_ignore);
  if (!guard.png) fail(ErrorCode::WriteFailure, "libpng init failed");
  guard.info = png_create_info_struct(guard.png);
  if (!guard.info) fail(ErrorCode::WriteFailure, "libpng init failed");

  std::vector<png_bytep> rows(height);
  if (setjmp(png_jmpbuf(guard.png))) {
    fail(ErrorCode::WriteFailure, "PNG encode error for " + path.string() + ": " + error);
  }
  png_init_io(guard.png, file.get());
  png_set_IHDR(guard.png, guard.info, width, height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(guard.png, guard.info);
  for (int y = 0; y < height; ++y)
    rows[y] = const_cast<png_bytep>(bytes.data() + static_cast<std::size_t>(y) * width);
  png_write_image(guard.png, rows.data());
  png_write_end(guard.png, nullptr);
  if (std::fflush(file.get()) != 0) fail(ErrorCode::WriteFailure, "flush failed for " + path.string());
}

void write_gray8(const fs::path& path, int width, int height, const std::vector<unsigned char>& bytes) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".pgm")
    write_pgm(path, width, height, bytes);
  else
    write_png(path, width, height, bytes);
}

}  // namespace

GrayImage load_image(const fs::path& path, GrayMode mode) {
  RawImage raw = decode(path);
  const std::size_t n = static_cast<std::size_t>(raw.width) * raw.height;
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v;
    if (raw.channels == 1) {
      v = raw.samples[i];
    } else {
      const std::uint16_t* px = &raw.samples[3 * i];
      v = mode == GrayMode::GreenChannel ? px[1] : 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
    }
    out[i] = std::clamp(static_cast<float>(v / raw.maxval), 0.0f, 1.0f);
  }
  return GrayImage(raw.width, raw.height, std::move(out));
}

BinaryMask load_mask(const fs::path& path, float thresh, std::optional<std::pair<int, int>> resize_to) {
  BinaryMask mask = threshold(load_image(path, GrayMode::Luminance), thresh);
  if (resize_to) mask = resize_nearest(mask, resize_to->first, resize_to->second);
  return mask;
}

void save_image(const GrayImage& img, const fs::path& path) {
  require(!img.empty(), ErrorCode::EmptyImage, "cannot save an empty image");
  std::vector<unsigned char> bytes(img.size());
  auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i)
    bytes[i] = static_cast<unsigned char>(std::lround(std::clamp(px[i], 0.0f, 1.0f) * 255.0f));
  write_gray8(path, img.width(), img.height(), bytes);
}

void save_image(const BinaryMask& mask, const fs::path& path) {
  require(!mask.empty(), ErrorCode::EmptyImage, "cannot save an empty mask");
  std::vector<unsigned char> bytes(mask.size());
  auto px = mask.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) bytes[i] = px[i] ? 255 : 0;
  write_gray8(path, mask.width(), mask.height(), bytes);
}

}  // namespace retseg
