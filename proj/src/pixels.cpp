#include "iqaforge/pixels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "iqaforge/error.hpp"

namespace iqaforge::pixels {

ImageBuffer::ImageBuffer(std::size_t width, std::size_t height, std::size_t channels,
                         std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  if (width_ == 0 || height_ == 0) throw DimensionError("image must be at least 1x1");
  if (channels_ != 1 && channels_ != 3) {
    throw DimensionError("unsupported channel count " + std::to_string(channels_));
  }
  if (data_.size() != width_ * height_ * channels_) {
    throw DimensionError("sample count does not match " + std::to_string(width_) + "x" +
                         std::to_string(height_) + "x" + std::to_string(channels_));
  }
  for (double v : data_) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("image sample outside [0,1]");
  }
}

ImageBuffer ImageBuffer::filled(std::size_t width, std::size_t height, std::size_t channels,
                                double value) {
  return ImageBuffer(width, height, channels,
                     std::vector<double>(width * height * channels, value));
}

Plane channel_plane(const ImageBuffer& img, std::size_t channel) {
  Plane plane(img.width(), img.height());
  const auto samples = img.samples();
  const std::size_t c = img.channels();
  for (std::size_t i = 0; i < plane.values.size(); ++i) plane.values[i] = samples[i * c + channel];
  return plane;
}

ImageBuffer from_planes(std::span<const Plane> planes) {
  if (planes.empty()) throw DimensionError("no planes");
  const std::size_t w = planes[0].width;
  const std::size_t h = planes[0].height;
  const std::size_t c = planes.size();
  std::vector<double> data(w * h * c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    if (planes[ch].width != w || planes[ch].height != h) {
      throw DimensionError("plane size mismatch");
    }
    for (std::size_t i = 0; i < w * h; ++i) {
      data[i * c + ch] = std::clamp(planes[ch].values[i], 0.0, 1.0);
    }
  }
  return ImageBuffer(w, h, c, std::move(data));
}

Plane luma_plane(const ImageBuffer& img) {
  if (img.channels() == 1) return channel_plane(img, 0);
  Plane plane(img.width(), img.height());
  const auto s = img.samples();
  for (std::size_t i = 0; i < plane.values.size(); ++i) {
    plane.values[i] = 0.299 * s[3 * i] + 0.587 * s[3 * i + 1] + 0.114 * s[3 * i + 2];
  }
  return plane;
}

ImageBuffer to_luma(const ImageBuffer& img) {
  if (img.channels() == 1) return img;
  const Plane plane = luma_plane(img);
  return from_planes(std::span(&plane, 1));
}

namespace {

std::vector<std::size_t> axis_origins(std::size_t dim, std::size_t size, std::size_t stride) {
  std::vector<std::size_t> origins;
  const std::size_t last = dim - size;
  // A stride wider than the patch would leave gaps, so patches then abut.
  const std::size_t step = std::min(stride, size);
  for (std::size_t o = 0;; o += step) {
    const std::size_t clamped = std::min(o, last);
    if (origins.empty() || origins.back() != clamped) origins.push_back(clamped);
    if (o >= last) break;
  }
  return origins;
}

}  // namespace

PatchGrid extract_patches(const ImageBuffer& img, std::size_t size, std::size_t stride) {
  if (size == 0 || stride == 0) throw DomainError("patch size and stride must be positive");
  if (img.height() < size || img.width() < size) {
    throw DimensionError("image " + std::to_string(img.width()) + "x" +
                         std::to_string(img.height()) + " smaller than patch size " +
                         std::to_string(size));
  }
  PatchGrid grid{size, stride, {}};
  for (std::size_t r : axis_origins(img.height(), size, stride)) {
    for (std::size_t c : axis_origins(img.width(), size, stride)) grid.origins.push_back({r, c});
  }
  return grid;
}

ImageBuffer crop(const ImageBuffer& img, PatchOrigin origin, std::size_t size) {
  if (origin.row + size > img.height() || origin.col + size > img.width()) {
    throw DimensionError("crop window exceeds image");
  }
  const std::size_t c = img.channels();
  std::vector<double> data;
  data.reserve(size * size * c);
  const auto s = img.samples();
  for (std::size_t r = 0; r < size; ++r) {
    const std::size_t begin = ((origin.row + r) * img.width() + origin.col) * c;
    data.insert(data.end(), s.begin() + begin, s.begin() + begin + size * c);
  }
  return ImageBuffer(size, size, c, std::move(data));
}

Plane downsample2x(const Plane& plane) {
  if (plane.width < 2 || plane.height < 2) throw DimensionError("downsample2x needs at least 2x2");
  Plane out(plane.width / 2, plane.height / 2);
  for (std::size_t r = 0; r < out.height; ++r) {
    for (std::size_t c = 0; c < out.width; ++c) {
      out(r, c) = 0.25 * (plane(2 * r, 2 * c) + plane(2 * r, 2 * c + 1) + plane(2 * r + 1, 2 * c) +
                          plane(2 * r + 1, 2 * c + 1));
    }
  }
  return out;
}

ImageBuffer downsample2x(const ImageBuffer& img) {
  std::vector<Plane> planes;
  for (std::size_t ch = 0; ch < img.channels(); ++ch) {
    planes.push_back(downsample2x(channel_plane(img, ch)));
  }
  return from_planes(planes);
}

}  // namespace iqaforge::pixels
