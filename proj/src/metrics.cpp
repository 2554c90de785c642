#include "iqaforge/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "iqaforge/error.hpp"
#include "iqaforge/parallel.hpp"

namespace iqaforge::metrics {

using pixels::Plane;

std::string_view orientation_name(Orientation orientation) {
  return orientation == Orientation::higher_better ? "higher_better" : "lower_better";
}

Orientation parse_orientation(std::string_view name) {
  if (name == "higher_better") return Orientation::higher_better;
  if (name == "lower_better") return Orientation::lower_better;
  throw FormatError("unknown orientation '" + std::string(name) + "'");
}

namespace {

constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;
constexpr std::size_t kWindow = 11;
constexpr std::array<double, 5> kMsSsimWeights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

void require_same_shape(const ImageBuffer& a, const ImageBuffer& b) {
  if (a.width() != b.width() || a.height() != b.height() || a.channels() != b.channels()) {
    throw DimensionError("image shapes differ: " + std::to_string(a.width()) + "x" +
                         std::to_string(a.height()) + "x" + std::to_string(a.channels()) +
                         " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()) +
                         "x" + std::to_string(b.channels()));
  }
}

const std::array<double, kWindow>& window_taps() {
  static const auto taps = [] {
    std::array<double, kWindow> t{};
    double sum = 0.0;
    for (std::size_t i = 0; i < kWindow; ++i) {
      const double x = static_cast<double>(i) - 5.0;
      t[i] = std::exp(-x * x / (2.0 * 1.5 * 1.5));
      sum += t[i];
    }
    for (double& v : t) v /= sum;
    return t;
  }();
  return taps;
}

// Gaussian-window filtering restricted to positions where the window fits.
Plane filter_valid(const Plane& in) {
  const auto& taps = window_taps();
  const std::size_t ow = in.width - kWindow + 1;
  const std::size_t oh = in.height - kWindow + 1;
  Plane horizontal(ow, in.height);
  for (std::size_t r = 0; r < in.height; ++r) {
    const double* src = &in.values[r * in.width];
    double* dst = &horizontal.values[r * ow];
    for (std::size_t c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < kWindow; ++k) acc += taps[k] * src[c + k];
      dst[c] = acc;
    }
  }
  Plane out(ow, oh);
  for (std::size_t r = 0; r < oh; ++r) {
    double* dst = &out.values[r * ow];
    for (std::size_t k = 0; k < kWindow; ++k) {
      const double* src = &horizontal.values[(r + k) * ow];
      const double t = taps[k];
      for (std::size_t c = 0; c < ow; ++c) dst[c] += t * src[c];
    }
  }
  return out;
}

Plane product(const Plane& a, const Plane& b) {
  Plane out(a.width, a.height);
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = a.values[i] * b.values[i];
  return out;
}

struct SsimMeans {
  double ssim;
  double cs;
};

// Local statistics of the reference side are passed in precomputed.
SsimMeans ssim_means(const Plane& ref_mean, const Plane& ref_var, const Plane& x, const Plane& y) {
  const Plane mu_y = filter_valid(y);
  const Plane yy = filter_valid(product(y, y));
  const Plane xy = filter_valid(product(x, y));
  double ssim_sum = 0.0;
  double cs_sum = 0.0;
  const std::size_t n = mu_y.values.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double mx = ref_mean.values[i];
    const double my = mu_y.values[i];
    const double vx = ref_var.values[i];
    const double vy = yy.values[i] - my * my;
    const double cov = xy.values[i] - mx * my;
    const double cs = (2.0 * cov + kC2) / (vx + vy + kC2);
    const double l = (2.0 * mx * my + kC1) / (mx * mx + my * my + kC1);
    ssim_sum += l * cs;
    cs_sum += cs;
  }
  return {ssim_sum / static_cast<double>(n), cs_sum / static_cast<double>(n)};
}

QualityReference::Scale make_scale(Plane plane) {
  Plane mean = filter_valid(plane);
  Plane variance = filter_valid(product(plane, plane));
  for (std::size_t i = 0; i < variance.values.size(); ++i) {
    variance.values[i] -= mean.values[i] * mean.values[i];
  }
  return {std::move(plane), std::move(mean), std::move(variance)};
}

void require_window(const Plane& p, std::string_view metric) {
  if (p.width < kWindow || p.height < kWindow) {
    throw DimensionError(std::string(metric) + " needs images of at least 11x11");
  }
}

double ms_ssim_from_scales(const std::vector<QualityReference::Scale>& ref_scales, Plane y) {
  const std::size_t scales = ref_scales.size();
  double weight_sum = 0.0;
  for (std::size_t j = 0; j < scales; ++j) weight_sum += kMsSsimWeights[j];
  double result = 1.0;
  for (std::size_t j = 0; j < scales; ++j) {
    if (j > 0) y = pixels::downsample2x(y);
    const auto& rs = ref_scales[j];
    const SsimMeans means = ssim_means(rs.mean, rs.variance, rs.plane, y);
    const double term = std::max(j + 1 == scales ? means.ssim : means.cs, 0.0);
    result *= std::pow(term, kMsSsimWeights[j] / weight_sum);
  }
  return std::min(result, 1.0);
}

}  // namespace

double psnr(const ImageBuffer& ref, const ImageBuffer& dist) {
  require_same_shape(ref, dist);
  const auto a = ref.samples();
  const auto b = dist.samples();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  if (sum == 0.0) return kPsnrCap;
  const double mse = sum / static_cast<double>(a.size());
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const ImageBuffer& ref, const ImageBuffer& dist) {
  require_same_shape(ref, dist);
  const Plane x = pixels::luma_plane(ref);
  const Plane y = pixels::luma_plane(dist);
  require_window(x, "ssim");
  const auto scale = make_scale(x);
  return std::clamp(ssim_means(scale.mean, scale.variance, x, y).ssim, -1.0, 1.0);
}

std::size_t ms_ssim_scales(std::size_t width, std::size_t height) {
  std::size_t scales = 0;
  std::size_t shortest = std::min(width, height);
  while (scales < kMsSsimWeights.size() && shortest >= kWindow) {
    ++scales;
    shortest /= 2;
  }
  return scales;
}

QualityReference::QualityReference(const ImageBuffer& ref) : ref_(ref) {
  const std::size_t scales = ms_ssim_scales(ref.width(), ref.height());
  if (scales == 0) throw DimensionError("ms_ssim needs images of at least 11x11");
  Plane plane = pixels::luma_plane(ref);
  for (std::size_t j = 0; j < scales; ++j) {
    if (j > 0) plane = pixels::downsample2x(plane);
    scales_.push_back(make_scale(plane));
  }
}

double QualityReference::ms_ssim(const ImageBuffer& dist) const {
  require_same_shape(ref_, dist);
  return ms_ssim_from_scales(scales_, pixels::luma_plane(dist));
}

double QualityReference::quality100(const ImageBuffer& dist) const {
  return quality_from_ms_ssim(ms_ssim(dist));
}

double ms_ssim(const ImageBuffer& ref, const ImageBuffer& dist) {
  require_same_shape(ref, dist);
  return QualityReference(ref).ms_ssim(dist);
}

double quality_from_ms_ssim(double m) {
  const double clamped = std::clamp(m, 0.0, 1.0);
  return 100.0 * (1.0 - std::pow(1.0 - clamped, 0.7));
}

double quality100(const ImageBuffer& ref, const ImageBuffer& dist) {
  return quality_from_ms_ssim(ms_ssim(ref, dist));
}

namespace {

Plane prewitt_magnitude(const Plane& p) {
  Plane out(p.width - 2, p.height - 2);
  for (std::size_t r = 0; r < out.height; ++r) {
    for (std::size_t c = 0; c < out.width; ++c) {
      double gx = 0.0;
      double gy = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        gx += p(r + k, c) - p(r + k, c + 2);
        gy += p(r, c + k) - p(r + 2, c + k);
      }
      gx /= 3.0;
      gy /= 3.0;
      out(r, c) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

}  // namespace

double gms_deviation(const ImageBuffer& ref, const ImageBuffer& dist) {
  require_same_shape(ref, dist);
  if (ref.width() < 3 || ref.height() < 3) {
    throw DimensionError("gms_deviation needs images of at least 3x3");
  }
  constexpr double kStabilizer = 0.0026;
  const Plane g1 = prewitt_magnitude(pixels::luma_plane(ref));
  const Plane g2 = prewitt_magnitude(pixels::luma_plane(dist));
  const std::size_t n = g1.values.size();
  std::vector<double> map(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = g1.values[i];
    const double b = g2.values[i];
    map[i] = (2.0 * a * b + kStabilizer) / (a * a + b * b + kStabilizer);
    sum += map[i];
  }
  const double mean = sum / static_cast<double>(n);
  double var = 0.0;
  for (double v : map) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(n));
}

const std::vector<FrMetricDescriptor>& default_quartet() {
  static const std::vector<FrMetricDescriptor> quartet = {
      {"psnr", Orientation::higher_better, 0.0, kPsnrCap, psnr},
      {"ssim", Orientation::higher_better, -1.0, 1.0, ssim},
      {"ms_ssim", Orientation::higher_better, 0.0, 1.0, ms_ssim},
      {"gms_deviation", Orientation::lower_better, 0.0, 1.0, gms_deviation},
  };
  return quartet;
}

const FrMetricDescriptor& find_metric(std::string_view id) {
  static const FrMetricDescriptor q100{"quality100", Orientation::higher_better, 0.0, 100.0,
                                       quality100};
  for (const auto& m : default_quartet()) {
    if (m.id == id) return m;
  }
  if (id == q100.id) return q100;
  throw FormatError("unknown metric '" + std::string(id) + "'");
}

std::vector<double> score_pairs(const FrMetricDescriptor& metric, std::span<const ImagePair> pairs,
                                std::size_t workers) {
  std::vector<double> scores(pairs.size());
  parallel_for(pairs.size(), workers, [&](std::size_t i) {
    try {
      scores[i] = metric.compute(pairs[i].ref.get(), pairs[i].dist.get());
    } catch (const std::exception& e) {
      throw Error(metric.id + ": pair " + std::to_string(i) + ": " + e.what());
    }
  });
  return scores;
}

}  // namespace iqaforge::metrics
