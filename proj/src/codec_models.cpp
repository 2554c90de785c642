// Transform-quantization models of JPEG and JPEG2000 artifacts. Neither
// produces a bitstream; both reproduce the codec's quantization loss.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "iqaforge/distort.hpp"
#include "iqaforge/error.hpp"

namespace iqaforge::distort {

using pixels::Plane;

namespace {

constexpr std::array<int, 64> kLuminanceTable = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99};

// Orthonormal DCT-II basis: basis[u][x] = a(u) cos((2x+1) u pi / 16).
const std::array<std::array<double, 8>, 8>& dct_basis() {
  static const auto basis = [] {
    std::array<std::array<double, 8>, 8> b{};
    for (int u = 0; u < 8; ++u) {
      const double a = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int x = 0; x < 8; ++x) {
        b[u][x] = a * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
      }
    }
    return b;
  }();
  return basis;
}

using Block = std::array<double, 64>;

void forward_dct(Block& block) {
  const auto& b = dct_basis();
  Block tmp{};
  for (int r = 0; r < 8; ++r) {
    for (int u = 0; u < 8; ++u) {
      double acc = 0.0;
      for (int x = 0; x < 8; ++x) acc += b[u][x] * block[r * 8 + x];
      tmp[r * 8 + u] = acc;
    }
  }
  for (int u = 0; u < 8; ++u) {
    for (int v = 0; v < 8; ++v) {
      double acc = 0.0;
      for (int y = 0; y < 8; ++y) acc += b[v][y] * tmp[y * 8 + u];
      block[v * 8 + u] = acc;
    }
  }
}

void inverse_dct(Block& block) {
  const auto& b = dct_basis();
  Block tmp{};
  for (int v = 0; v < 8; ++v) {
    for (int x = 0; x < 8; ++x) {
      double acc = 0.0;
      for (int u = 0; u < 8; ++u) acc += b[u][x] * block[v * 8 + u];
      tmp[v * 8 + x] = acc;
    }
  }
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      double acc = 0.0;
      for (int v = 0; v < 8; ++v) acc += b[v][y] * tmp[v * 8 + x];
      block[y * 8 + x] = acc;
    }
  }
}

Plane jpeg_plane(const Plane& in, const std::vector<double>& table) {
  Plane out(in.width, in.height);
  for (std::size_t by = 0; by < in.height; by += 8) {
    for (std::size_t bx = 0; bx < in.width; bx += 8) {
      Block block{};
      for (std::size_t y = 0; y < 8; ++y) {
        const std::size_t r = std::min(by + y, in.height - 1);
        for (std::size_t x = 0; x < 8; ++x) {
          const std::size_t c = std::min(bx + x, in.width - 1);
          block[y * 8 + x] = in(r, c) * 255.0 - 128.0;
        }
      }
      forward_dct(block);
      for (std::size_t i = 0; i < 64; ++i) block[i] = std::round(block[i] / table[i]) * table[i];
      inverse_dct(block);
      for (std::size_t y = 0; y < 8 && by + y < in.height; ++y) {
        for (std::size_t x = 0; x < 8 && bx + x < in.width; ++x) {
          out(by + y, bx + x) = (block[y * 8 + x] + 128.0) / 255.0;
        }
      }
    }
  }
  return out;
}

// In-place 1-D LeGall 5/3 analysis by lifting with whole-sample symmetric
// extension. Output layout: ceil(n/2) lowpass samples, then floor(n/2)
// highpass samples.
void lift53_forward(std::vector<double>& x, std::vector<double>& scratch) {
  const std::size_t n = x.size();
  if (n < 2) return;
  const std::size_t ns = (n + 1) / 2;
  const std::size_t nd = n / 2;
  scratch.resize(n);
  double* s = scratch.data();
  double* d = scratch.data() + ns;
  for (std::size_t i = 0; i < nd; ++i) {
    const double right = 2 * i + 2 < n ? x[2 * i + 2] : x[2 * i];
    d[i] = x[2 * i + 1] - 0.5 * (x[2 * i] + right);
  }
  for (std::size_t i = 0; i < ns; ++i) {
    const double left = i > 0 ? d[i - 1] : d[0];
    const double right = i < nd ? d[i] : d[nd - 1];
    s[i] = x[2 * i] + 0.25 * (left + right);
  }
  x.swap(scratch);
}

void lift53_inverse(std::vector<double>& x, std::vector<double>& scratch) {
  const std::size_t n = x.size();
  if (n < 2) return;
  const std::size_t ns = (n + 1) / 2;
  const std::size_t nd = n / 2;
  scratch.resize(n);
  const double* s = x.data();
  const double* d = x.data() + ns;
  for (std::size_t i = 0; i < ns; ++i) {
    const double left = i > 0 ? d[i - 1] : d[0];
    const double right = i < nd ? d[i] : d[nd - 1];
    scratch[2 * i] = s[i] - 0.25 * (left + right);
  }
  for (std::size_t i = 0; i < nd; ++i) {
    const double right = 2 * i + 2 < n ? scratch[2 * i + 2] : scratch[2 * i];
    scratch[2 * i + 1] = d[i] + 0.5 * (scratch[2 * i] + right);
  }
  x.swap(scratch);
}

constexpr int kWaveletLevels = 3;

struct Region {
  std::size_t width;
  std::size_t height;
};

std::vector<Region> decomposition_regions(std::size_t width, std::size_t height) {
  std::vector<Region> regions;
  Region r{width, height};
  for (int level = 0; level < kWaveletLevels && r.width >= 2 && r.height >= 2; ++level) {
    regions.push_back(r);
    r = {(r.width + 1) / 2, (r.height + 1) / 2};
  }
  return regions;
}

void transform_region(Plane& p, Region region, bool forward) {
  std::vector<double> line;
  std::vector<double> scratch;
  auto rows = [&] {
    line.resize(region.width);
    for (std::size_t r = 0; r < region.height; ++r) {
      for (std::size_t c = 0; c < region.width; ++c) line[c] = p(r, c);
      forward ? lift53_forward(line, scratch) : lift53_inverse(line, scratch);
      for (std::size_t c = 0; c < region.width; ++c) p(r, c) = line[c];
    }
  };
  auto cols = [&] {
    line.resize(region.height);
    for (std::size_t c = 0; c < region.width; ++c) {
      for (std::size_t r = 0; r < region.height; ++r) line[r] = p(r, c);
      forward ? lift53_forward(line, scratch) : lift53_inverse(line, scratch);
      for (std::size_t r = 0; r < region.height; ++r) p(r, c) = line[r];
    }
  };
  if (forward) {
    rows();
    cols();
  } else {
    cols();
    rows();
  }
}

double deadzone(double coefficient, double step) {
  const double index = std::floor(std::abs(coefficient) / step);
  if (index == 0.0) return 0.0;
  return std::copysign((index + 0.5) * step, coefficient);
}

Plane jp2k_plane(const Plane& in, double step) {
  Plane p = in;
  const auto regions = decomposition_regions(p.width, p.height);
  if (regions.empty()) return p;
  for (const auto& region : regions) transform_region(p, region, true);

  const std::size_t ll_w = (regions.back().width + 1) / 2;
  const std::size_t ll_h = (regions.back().height + 1) / 2;
  for (std::size_t r = 0; r < p.height; ++r) {
    for (std::size_t c = 0; c < p.width; ++c) {
      if (r < ll_h && c < ll_w) continue;
      p(r, c) = deadzone(p(r, c), step);
    }
  }

  for (auto it = regions.rbegin(); it != regions.rend(); ++it) transform_region(p, *it, false);
  return p;
}

}  // namespace

std::vector<double> jpeg_quant_table(double quality) {
  validate({Kind::jpeg_like, quality, 0});
  const double scale = quality < 50.0 ? 5000.0 / quality : 200.0 - 2.0 * quality;
  std::vector<double> table(64);
  for (std::size_t i = 0; i < 64; ++i) {
    table[i] = std::clamp(std::floor((kLuminanceTable[i] * scale + 50.0) / 100.0), 1.0, 255.0);
  }
  return table;
}

ImageBuffer jpeg_like(const ImageBuffer& img, double quality) {
  const auto table = jpeg_quant_table(quality);
  std::vector<Plane> planes;
  for (std::size_t ch = 0; ch < img.channels(); ++ch) {
    planes.push_back(jpeg_plane(pixels::channel_plane(img, ch), table));
  }
  return pixels::from_planes(planes);
}

ImageBuffer jp2k_like(const ImageBuffer& img, double step) {
  validate({Kind::jp2k_like, step, 0});
  if (step == 0.0) return img;
  std::vector<Plane> planes;
  for (std::size_t ch = 0; ch < img.channels(); ++ch) {
    planes.push_back(jp2k_plane(pixels::channel_plane(img, ch), step));
  }
  return pixels::from_planes(planes);
}

}  // namespace iqaforge::distort
