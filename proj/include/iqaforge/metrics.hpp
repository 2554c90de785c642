#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iqaforge/pixels.hpp"

namespace iqaforge::metrics {

using pixels::ImageBuffer;

enum class Orientation { higher_better, lower_better };

std::string_view orientation_name(Orientation orientation);
Orientation parse_orientation(std::string_view name);

using MetricFn = std::function<double(const ImageBuffer& ref, const ImageBuffer& dist)>;

// A pluggable full-reference metric. Rank fusion needs the orientation of
// every input, so it is part of the descriptor rather than a convention.
struct FrMetricDescriptor {
  std::string id;
  Orientation orientation;
  double lo;
  double hi;
  MetricFn compute;
};

inline constexpr double kPsnrCap = 100.0;

// 10 log10(1 / MSE) over all samples; kPsnrCap for identical images.
double psnr(const ImageBuffer& ref, const ImageBuffer& dist);

// Mean SSIM over the valid region of an 11x11 Gaussian (sigma 1.5) window,
// C1 = 0.01^2, C2 = 0.03^2. Colour inputs are reduced to luma first.
double ssim(const ImageBuffer& ref, const ImageBuffer& dist);

// Five-scale MS-SSIM. Scales that would leave fewer than 11 pixels on the
// short side are dropped and the remaining exponents renormalized. Per-scale
// terms are floored at 0 before exponentiation.
double ms_ssim(const ImageBuffer& ref, const ImageBuffer& dist);

// Standard deviation of the Prewitt gradient-magnitude similarity map.
double gms_deviation(const ImageBuffer& ref, const ImageBuffer& dist);

// 0-100 quality scale: 100 (1 - (1 - m)^0.7), m = max(ms_ssim, 0).
double quality100(const ImageBuffer& ref, const ImageBuffer& dist);
double quality_from_ms_ssim(double m);

// Number of MS-SSIM scales usable for the given dimensions (0 if none).
std::size_t ms_ssim_scales(std::size_t width, std::size_t height);

// Precomputes the reference-side pyramid and local statistics so repeated
// comparisons against one reference (calibration, corpus building) only pay
// for the distorted side.
class QualityReference {
 public:
  explicit QualityReference(const ImageBuffer& ref);

  double ms_ssim(const ImageBuffer& dist) const;
  double quality100(const ImageBuffer& dist) const;
  const ImageBuffer& image() const { return ref_; }

  struct Scale {
    pixels::Plane plane;
    pixels::Plane mean;
    pixels::Plane variance;
  };

 private:
  ImageBuffer ref_;
  std::vector<Scale> scales_;
};

// psnr, ssim, ms_ssim, gms_deviation.
const std::vector<FrMetricDescriptor>& default_quartet();
// Descriptor from the default quartet, or quality100; FormatError otherwise.
const FrMetricDescriptor& find_metric(std::string_view id);

struct ImagePair {
  std::reference_wrapper<const ImageBuffer> ref;
  std::reference_wrapper<const ImageBuffer> dist;
};

// Scores in input order regardless of worker count. A failing pair aborts
// the batch with an Error naming its index.
std::vector<double> score_pairs(const FrMetricDescriptor& metric, std::span<const ImagePair> pairs,
                                std::size_t workers = 1);

}  // namespace iqaforge::metrics
