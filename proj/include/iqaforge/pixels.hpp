#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace iqaforge::pixels {

// H x W x C raster with samples in [0,1], row-major, channel-interleaved.
// Immutable once constructed; the constructor enforces the invariants.
class ImageBuffer {
 public:
  ImageBuffer(std::size_t width, std::size_t height, std::size_t channels,
              std::vector<double> data);

  static ImageBuffer filled(std::size_t width, std::size_t height, std::size_t channels,
                            double value);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t channels() const { return channels_; }
  std::size_t pixel_count() const { return width_ * height_; }
  std::span<const double> samples() const { return data_; }

  double at(std::size_t row, std::size_t col, std::size_t channel = 0) const {
    return data_[(row * width_ + col) * channels_ + channel];
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::size_t channels_;
  std::vector<double> data_;
};

// Unconstrained single-channel working plane used inside filters and metrics.
struct Plane {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;

  Plane() = default;
  Plane(std::size_t w, std::size_t h, double fill = 0.0) : width(w), height(h), values(w * h, fill) {}

  double& operator()(std::size_t row, std::size_t col) { return values[row * width + col]; }
  double operator()(std::size_t row, std::size_t col) const { return values[row * width + col]; }
};

Plane channel_plane(const ImageBuffer& img, std::size_t channel);
// Interleaves planes into an image, clamping every sample to [0,1].
ImageBuffer from_planes(std::span<const Plane> planes);

struct PatchOrigin {
  std::size_t row;
  std::size_t col;
  friend bool operator==(const PatchOrigin&, const PatchOrigin&) = default;
};

struct PatchGrid {
  std::size_t patch_size;
  std::size_t stride;
  std::vector<PatchOrigin> origins;
};

ImageBuffer load_image(const std::filesystem::path& path);
void save_image(const ImageBuffer& img, const std::filesystem::path& path);
// PNG bytes as save_image would write them.
std::vector<unsigned char> encode_png(const ImageBuffer& img);

ImageBuffer to_luma(const ImageBuffer& img);
Plane luma_plane(const ImageBuffer& img);

// Grid origins {0, stride, 2*stride, ...} per axis, with origins past
// (dim - size) pulled back to exactly (dim - size), so the last patch is
// flush with the edge.
PatchGrid extract_patches(const ImageBuffer& img, std::size_t size, std::size_t stride);
ImageBuffer crop(const ImageBuffer& img, PatchOrigin origin, std::size_t size);

// 2x2 block means; an odd trailing row/column is dropped.
ImageBuffer downsample2x(const ImageBuffer& img);
Plane downsample2x(const Plane& plane);

}  // namespace iqaforge::pixels
