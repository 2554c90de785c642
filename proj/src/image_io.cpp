#include <png.h>

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>

#include "iqaforge/csv.hpp"
#include "iqaforge/error.hpp"
#include "iqaforge/pixels.hpp"

namespace iqaforge::pixels {

namespace {

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DecodeError(path.string() + ": cannot open file");
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

std::uint32_t read_be32(const unsigned char* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

ImageBuffer from_bytes(std::size_t w, std::size_t h, std::size_t c, const unsigned char* bytes) {
  std::vector<double> data(w * h * c);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = bytes[i] / 255.0;
  return ImageBuffer(w, h, c, std::move(data));
}

ImageBuffer decode_png(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  // IHDR sits at a fixed offset: signature(8) length(4) type(4) w(4) h(4) depth(1) color(1).
  constexpr std::array<unsigned char, 8> kSignature{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() < 33 || !std::equal(kSignature.begin(), kSignature.end(), bytes.begin()) ||
      std::string(bytes.begin() + 12, bytes.begin() + 16) != "IHDR") {
    throw DecodeError(path.string() + ": not a PNG file");
  }
  const int bit_depth = bytes[24];
  const int color_type = bytes[25];
  if (bit_depth != 8) {
    throw DecodeError(path.string() + ": unsupported PNG bit depth " + std::to_string(bit_depth));
  }
  if (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_RGB) {
    throw DecodeError(path.string() + ": unsupported PNG color type " +
                      std::to_string(color_type));
  }

  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    const std::string message = image.message;
    png_image_free(&image);
    throw DecodeError(path.string() + ": " + message);
  }
  const std::size_t channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
  image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<unsigned char> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    throw DecodeError(path.string() + ": " + message);
  }
  const std::size_t w = image.width;
  const std::size_t h = image.height;
  png_image_free(&image);
  if (w != read_be32(&bytes[16]) || h != read_be32(&bytes[20])) {
    throw DecodeError(path.string() + ": inconsistent PNG header");
  }
  return from_bytes(w, h, channels, pixels.data());
}

// Binary PPM (P6) with maxval 255. Header tokens may be separated by
// whitespace and '#' comments.
ImageBuffer decode_ppm(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::size_t pos = 2;
  auto next_token = [&]() -> long {
    for (;;) {
      while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    std::string token;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) token.push_back(static_cast<char>(bytes[pos++]));
    if (token.empty() || token.size() > 9) throw DecodeError(path.string() + ": malformed PPM header");
    return std::stol(token);
  };
  const long w = next_token();
  const long h = next_token();
  const long maxval = next_token();
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw DecodeError(path.string() + ": malformed PPM header");
  }
  ++pos;
  if (maxval != 255) {
    throw DecodeError(path.string() + ": unsupported PPM maxval " + std::to_string(maxval));
  }
  if (w <= 0 || h <= 0) throw DecodeError(path.string() + ": invalid PPM dimensions");
  const std::size_t needed = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
  if (bytes.size() - pos < needed) throw DecodeError(path.string() + ": truncated PPM data");
  return from_bytes(static_cast<std::size_t>(w), static_cast<std::size_t>(h), 3, bytes.data() + pos);
}

}  // namespace

ImageBuffer load_image(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw DecodeError(path.string() + ": no such file");
  const auto bytes = read_bytes(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(path, bytes);
  if (bytes.size() >= 1 && bytes[0] == 0x89) return decode_png(path, bytes);
  throw DecodeError(path.string() + ": unsupported image format");
}

namespace {

void append_bytes(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<unsigned char>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void flush_nothing(png_structp) {}

// The simplified write API encodes twice (size query, then write), and the
// default zlib level dominates corpus build time, so the classic API is used
// with a fast deflate setting.
bool write_png(std::vector<unsigned char>& out, const std::vector<unsigned char>& raw,
               png_uint_32 width, png_uint_32 height, int color_type, std::size_t row_bytes) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, &out, append_bytes, flush_nothing);
  png_set_compression_level(png, 1);
  png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_SUB);
  png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (png_uint_32 r = 0; r < height; ++r) {
    png_write_row(png, const_cast<png_bytep>(raw.data() + r * row_bytes));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace

std::vector<unsigned char> encode_png(const ImageBuffer& img) {
  const auto samples = img.samples();
  std::vector<unsigned char> raw(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    raw[i] = static_cast<unsigned char>(std::floor(samples[i] * 255.0 + 0.5));
  }
  std::vector<unsigned char> out;
  out.reserve(raw.size() / 2 + 1024);
  const int color_type = img.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
  if (!write_png(out, raw, static_cast<png_uint_32>(img.width()),
                 static_cast<png_uint_32>(img.height()), color_type,
                 img.width() * img.channels())) {
    throw IoError("PNG encode failed");
  }
  return out;
}

void save_image(const ImageBuffer& img, const std::filesystem::path& path) {
  write_file_atomic(path, encode_png(img));
}

}  // namespace iqaforge::pixels
