#include "iqaforge/distort.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <random>

#include "iqaforge/csv.hpp"
#include "iqaforge/error.hpp"

namespace iqaforge::distort {

using pixels::Plane;

std::string_view kind_name(Kind kind) {
  switch (kind) {
    case Kind::gaussian_noise: return "gaussian_noise";
    case Kind::gaussian_blur: return "gaussian_blur";
    case Kind::jpeg_like: return "jpeg_like";
    case Kind::jp2k_like: return "jp2k_like";
  }
  return "unknown";
}

Kind parse_kind(std::string_view name) {
  for (Kind k : {Kind::gaussian_noise, Kind::gaussian_blur, Kind::jpeg_like, Kind::jp2k_like}) {
    if (kind_name(k) == name) return k;
  }
  throw DomainError("unsupported distortion kind '" + std::string(name) + "'");
}

double identity_param(Kind kind) { return kind == Kind::jpeg_like ? 100.0 : 0.0; }

void validate(const DistortionSpec& spec) {
  const double p = spec.param;
  if (!std::isfinite(p)) throw DomainError("non-finite distortion parameter");
  switch (spec.kind) {
    case Kind::gaussian_noise:
    case Kind::gaussian_blur:
    case Kind::jp2k_like:
      if (p < 0.0) {
        throw DomainError(std::string(kind_name(spec.kind)) + " parameter must be >= 0");
      }
      break;
    case Kind::jpeg_like:
      if (p < 1.0 || p > 100.0) throw DomainError("jpeg_like quality must be in [1,100]");
      break;
  }
}

ImageBuffer gaussian_noise(const ImageBuffer& img, double sigma, std::uint64_t seed) {
  validate({Kind::gaussian_noise, sigma, seed});
  if (sigma == 0.0) return img;

  // Box-Muller over mt19937_64 so the stream is identical on every standard
  // library (std::normal_distribution is implementation-defined).
  std::mt19937_64 engine(seed);
  constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
  const auto in = img.samples();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); i += 2) {
    const double u1 = (static_cast<double>(engine() >> 11) + 1.0) * kScale;
    const double u2 = static_cast<double>(engine() >> 11) * kScale;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    out[i] = std::clamp(in[i] + sigma * radius * std::cos(angle), 0.0, 1.0);
    if (i + 1 < in.size()) {
      out[i + 1] = std::clamp(in[i + 1] + sigma * radius * std::sin(angle), 0.0, 1.0);
    }
  }
  return ImageBuffer(img.width(), img.height(), img.channels(), std::move(out));
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("blur sigma must be >= 0");
  if (sigma == 0.0) return {1.0};
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double x = static_cast<double>(i);
    taps[static_cast<std::size_t>(i + radius)] = std::exp(-x * x / (2.0 * sigma * sigma));
    sum += taps[static_cast<std::size_t>(i + radius)];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

namespace {

// Separable convolution with replicate edges.
Plane convolve_separable(const Plane& in, const std::vector<double>& taps) {
  const auto radius = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const auto w = static_cast<std::ptrdiff_t>(in.width);
  const auto h = static_cast<std::ptrdiff_t>(in.height);
  Plane tmp(in.width, in.height);
  std::vector<double> padded(static_cast<std::size_t>(w + 2 * radius));
  for (std::ptrdiff_t r = 0; r < h; ++r) {
    const double* row = &in.values[static_cast<std::size_t>(r * w)];
    for (std::ptrdiff_t c = -radius; c < w + radius; ++c) {
      padded[static_cast<std::size_t>(c + radius)] = row[std::clamp<std::ptrdiff_t>(c, 0, w - 1)];
    }
    double* dst = &tmp.values[static_cast<std::size_t>(r * w)];
    for (std::ptrdiff_t c = 0; c < w; ++c) {
      const double* src = &padded[static_cast<std::size_t>(c)];
      double acc = 0.0;
      for (std::size_t k = 0; k < taps.size(); ++k) acc += taps[k] * src[k];
      dst[c] = acc;
    }
  }
  Plane out(in.width, in.height);
  for (std::ptrdiff_t r = 0; r < h; ++r) {
    double* dst = &out.values[static_cast<std::size_t>(r * w)];
    for (std::size_t k = 0; k < taps.size(); ++k) {
      const std::ptrdiff_t src_row =
          std::clamp<std::ptrdiff_t>(r + static_cast<std::ptrdiff_t>(k) - radius, 0, h - 1);
      const double* src = &tmp.values[static_cast<std::size_t>(src_row * w)];
      const double t = taps[k];
      for (std::ptrdiff_t c = 0; c < w; ++c) dst[c] += t * src[c];
    }
  }
  return out;
}

}  // namespace

ImageBuffer gaussian_blur(const ImageBuffer& img, double sigma) {
  validate({Kind::gaussian_blur, sigma, 0});
  if (sigma == 0.0) return img;
  const auto taps = gaussian_kernel(sigma);
  std::vector<Plane> planes;
  for (std::size_t ch = 0; ch < img.channels(); ++ch) {
    planes.push_back(convolve_separable(pixels::channel_plane(img, ch), taps));
  }
  return pixels::from_planes(planes);
}

ImageBuffer apply(const ImageBuffer& img, const DistortionSpec& spec) {
  switch (spec.kind) {
    case Kind::gaussian_noise: return gaussian_noise(img, spec.param, spec.seed);
    case Kind::gaussian_blur: return gaussian_blur(img, spec.param);
    case Kind::jpeg_like: return jpeg_like(img, spec.param);
    case Kind::jp2k_like: return jp2k_like(img, spec.param);
  }
  throw DomainError("unsupported distortion kind");
}

ImageBuffer apply_chain(const ImageBuffer& img, const DistortionChain& chain) {
  for (const auto& spec : chain) validate(spec);
  ImageBuffer current = img;
  for (const auto& spec : chain) current = apply(current, spec);
  return current;
}

std::string serialize(const DistortionSpec& spec) {
  return std::string(kind_name(spec.kind)) + ":" + format_double(spec.param) + ":" +
         std::to_string(spec.seed);
}

std::string serialize(const DistortionChain& chain) {
  std::string out;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (i) out.push_back('+');
    out += serialize(chain[i]);
  }
  return out;
}

DistortionSpec parse_spec(std::string_view text) {
  const auto first = text.find(':');
  const auto second = first == std::string_view::npos ? first : text.find(':', first + 1);
  if (second == std::string_view::npos) {
    throw FormatError("malformed distortion spec '" + std::string(text) + "'");
  }
  DistortionSpec spec{parse_kind(text.substr(0, first)),
                      parse_double(text.substr(first + 1, second - first - 1), "distortion param"),
                      0};
  const auto seed_text = text.substr(second + 1);
  const auto result =
      std::from_chars(seed_text.data(), seed_text.data() + seed_text.size(), spec.seed);
  if (result.ec != std::errc() || result.ptr != seed_text.data() + seed_text.size()) {
    throw FormatError("malformed distortion seed '" + std::string(seed_text) + "'");
  }
  validate(spec);
  return spec;
}

DistortionChain parse_chain(std::string_view text) {
  DistortionChain chain;
  if (text.empty()) return chain;
  std::size_t start = 0;
  for (;;) {
    const auto plus = text.find('+', start);
    chain.push_back(parse_spec(text.substr(start, plus - start)));
    if (plus == std::string_view::npos) return chain;
    start = plus + 1;
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::string_view ref_id, Kind kind, int level, int stage,
                          std::uint64_t root) {
  const std::string key = std::to_string(root) + "|" + std::string(ref_id) + "|" +
                          std::string(kind_name(kind)) + "|" + std::to_string(level) + "|" +
                          std::to_string(stage);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char byte : key) {
    hash ^= byte;
    hash *= 0x100000001b3ULL;
  }
  return splitmix64(hash);
}

}  // namespace iqaforge::distort
