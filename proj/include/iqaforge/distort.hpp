#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "iqaforge/pixels.hpp"

namespace iqaforge::distort {

using pixels::ImageBuffer;

enum class Kind { gaussian_noise, gaussian_blur, jpeg_like, jp2k_like };

std::string_view kind_name(Kind kind);
Kind parse_kind(std::string_view name);

// One distortion application. `param` is sigma for noise/blur (in [0,1]
// sample units), the quality factor in [1,100] for jpeg_like and the
// quantization step for jp2k_like. `seed` only drives gaussian_noise but is
// always carried so that provenance ids stay unique.
struct DistortionSpec {
  Kind kind;
  double param;
  std::uint64_t seed = 0;

  friend bool operator==(const DistortionSpec&, const DistortionSpec&) = default;
};

// Applied strictly left to right.
using DistortionChain = std::vector<DistortionSpec>;

ImageBuffer gaussian_noise(const ImageBuffer& img, double sigma, std::uint64_t seed);
ImageBuffer gaussian_blur(const ImageBuffer& img, double sigma);
ImageBuffer jpeg_like(const ImageBuffer& img, double quality);
ImageBuffer jp2k_like(const ImageBuffer& img, double step);

ImageBuffer apply(const ImageBuffer& img, const DistortionSpec& spec);
ImageBuffer apply_chain(const ImageBuffer& img, const DistortionChain& chain);

// Throws DomainError when param is outside the kind's domain.
void validate(const DistortionSpec& spec);

// Parameter value that leaves an image untouched (jpeg_like: q = 100, which is
// an identity only up to DC rounding).
double identity_param(Kind kind);

// `kind:param:seed`, stages joined with '+'. Params use the shortest
// round-trip decimal form.
std::string serialize(const DistortionSpec& spec);
std::string serialize(const DistortionChain& chain);
DistortionSpec parse_spec(std::string_view text);
DistortionChain parse_chain(std::string_view text);

// Reproducible per-application seed: FNV-1a over the identifying fields,
// finished with a splitmix64 mix.
std::uint64_t derive_seed(std::string_view ref_id, Kind kind, int level, int stage,
                          std::uint64_t root = 0);

// Normalized 1-D Gaussian taps for radius ceil(3*sigma); {1} for sigma == 0.
std::vector<double> gaussian_kernel(double sigma);

// Quantization table used by jpeg_like at quality q (row-major 8x8).
std::vector<double> jpeg_quant_table(double quality);

}  // namespace iqaforge::distort
