#include <json.hpp>

#include <algorithm>
#include <cmath>

#include "iqaforge/builder.hpp"
#include "iqaforge/error.hpp"

namespace iqaforge::builder {

double spatial_information(const ImageBuffer& img) {
  const pixels::Plane luma = pixels::luma_plane(img);
  const auto w = static_cast<std::ptrdiff_t>(luma.width);
  const auto h = static_cast<std::ptrdiff_t>(luma.height);
  auto at = [&](std::ptrdiff_t r, std::ptrdiff_t c) {
    return luma(static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(r, 0, h - 1)),
                static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(c, 0, w - 1)));
  };
  double sum = 0.0;
  for (std::ptrdiff_t r = 0; r < h; ++r) {
    for (std::ptrdiff_t c = 0; c < w; ++c) {
      const double gx = (at(r - 1, c + 1) + 2.0 * at(r, c + 1) + at(r + 1, c + 1)) -
                        (at(r - 1, c - 1) + 2.0 * at(r, c - 1) + at(r + 1, c - 1));
      const double gy = (at(r + 1, c - 1) + 2.0 * at(r + 1, c) + at(r + 1, c + 1)) -
                        (at(r - 1, c - 1) + 2.0 * at(r - 1, c) + at(r - 1, c + 1));
      sum += std::sqrt(gx * gx + gy * gy);
    }
  }
  return sum / static_cast<double>(luma.values.size());
}

double colorfulness(const ImageBuffer& img) {
  if (img.channels() != 3) throw DimensionError("colorfulness needs a 3-channel image");
  const auto s = img.samples();
  const std::size_t n = img.pixel_count();
  double sum_rg = 0, sum_yb = 0, sq_rg = 0, sq_yb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = s[3 * i], g = s[3 * i + 1], b = s[3 * i + 2];
    const double rg = r - g;
    const double yb = 0.5 * (r + g) - b;
    sum_rg += rg;
    sum_yb += yb;
    sq_rg += rg * rg;
    sq_yb += yb * yb;
  }
  const double count = static_cast<double>(n);
  const double mean_rg = sum_rg / count;
  const double mean_yb = sum_yb / count;
  const double var_rg = std::max(0.0, sq_rg / count - mean_rg * mean_rg);
  const double var_yb = std::max(0.0, sq_yb / count - mean_yb * mean_yb);
  return std::sqrt(var_rg + var_yb) + 0.3 * std::sqrt(mean_rg * mean_rg + mean_yb * mean_yb);
}

namespace {

// Linear interpolation between order statistics at position p (n - 1).
double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

DistributionSummary summarize(std::vector<double> sqb) {
  if (sqb.empty()) throw DomainError("cannot summarize an empty score set");
  for (double v : sqb) {
    if (!(v >= 0.0 && v <= 100.0)) throw DomainError("SQB value outside [0,100]");
  }
  std::sort(sqb.begin(), sqb.end());
  DistributionSummary s;
  s.count = sqb.size();
  for (double v : sqb) {
    ++s.histogram[static_cast<std::size_t>(std::floor(v))];
    ++s.deciles[std::min<std::size_t>(9, static_cast<std::size_t>(std::floor(v / 10.0)))];
  }
  s.min = sqb.front();
  s.max = sqb.back();
  s.q1 = quantile_sorted(sqb, 0.25);
  s.median = quantile_sorted(sqb, 0.5);
  s.q3 = quantile_sorted(sqb, 0.75);
  const double iqr = s.q3 - s.q1;
  const double low_fence = s.q1 - 1.5 * iqr;
  const double high_fence = s.q3 + 1.5 * iqr;
  s.whisker_low = s.max;
  s.whisker_high = s.min;
  for (double v : sqb) {
    if (v < low_fence) {
      ++s.outliers_low;
    } else if (v > high_fence) {
      ++s.outliers_high;
    } else {
      s.whisker_low = std::min(s.whisker_low, v);
      s.whisker_high = std::max(s.whisker_high, v);
    }
  }
  return s;
}

DistributionSummary summarize(const std::vector<ManifestRecord>& manifest) {
  std::vector<double> values;
  for (const auto& record : manifest) {
    if (record.stage == 0) continue;
    if (!record.sqb) throw Error("manifest row " + record.image_id + " has no sqb value");
    values.push_back(*record.sqb);
  }
  return summarize(std::move(values));
}

std::string summary_json(const DistributionSummary& s) {
  nlohmann::ordered_json j;
  j["count"] = s.count;
  j["min"] = s.min;
  j["max"] = s.max;
  j["q1"] = s.q1;
  j["median"] = s.median;
  j["q3"] = s.q3;
  j["whisker_low"] = s.whisker_low;
  j["whisker_high"] = s.whisker_high;
  j["outliers_low"] = s.outliers_low;
  j["outliers_high"] = s.outliers_high;
  nlohmann::ordered_json histogram = nlohmann::ordered_json::object();
  for (std::size_t b = 0; b < s.histogram.size(); ++b) {
    if (s.histogram[b]) histogram[std::to_string(b)] = s.histogram[b];
  }
  j["histogram"] = histogram;
  j["deciles"] = s.deciles;
  return j.dump(2) + "\n";
}

}  // namespace iqaforge::builder
