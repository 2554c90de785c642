// Five-parameter logistic fitting by Nelder-Mead.
//
// The fit runs on standardized R and S (zero mean, unit deviation) so the
// simplex sees well-scaled parameters whatever the input ranges are; the
// logistic family is closed under affine changes of R and S, so the result is
// mapped back exactly.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "iqaforge/error.hpp"
#include "iqaforge/sqb.hpp"

namespace iqaforge::sqb {

double LogisticParams::operator()(double r) const {
  const auto& b = beta;
  return b[0] * (0.5 - 1.0 / (1.0 + std::exp(b[1] * (r - b[2])))) + b[3] * r + b[4];
}

std::vector<double> apply_logistic(const LogisticParams& params, std::span<const double> r) {
  std::vector<double> out(r.size());
  std::transform(r.begin(), r.end(), out.begin(), [&](double x) { return params(x); });
  return out;
}

double logistic_sse(const LogisticParams& params, std::span<const double> r,
                    std::span<const double> s) {
  double sse = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double e = s[i] - params(r[i]);
    sse += e * e;
  }
  return sse;
}

namespace {

constexpr int kMaxIterations = 2000;
constexpr double kRelativeTolerance = 1e-10;

using Point = std::array<double, 5>;

struct Vertex {
  Point x;
  double f;
};

class SimplexSearch {
 public:
  SimplexSearch(std::span<const double> z, std::span<const double> t) : z_(z), t_(t) {}

  double objective(const Point& p) const {
    double sse = 0.0;
    for (std::size_t i = 0; i < z_.size(); ++i) {
      const double model = p[0] * (0.5 - 1.0 / (1.0 + std::exp(p[1] * (z_[i] - p[2])))) +
                           p[3] * z_[i] + p[4];
      const double e = t_[i] - model;
      sse += e * e;
    }
    return std::isfinite(sse) ? sse : std::numeric_limits<double>::infinity();
  }

  // Runs until the simplex values agree to the relative tolerance or the
  // iteration budget is spent; a converged run is restarted once from its
  // best vertex with a fresh simplex, which rescues collapsed simplices.
  Vertex minimize(Point start) {
    int budget = kMaxIterations;
    Vertex best{start, objective(start)};
    for (;;) {
      const double before = best.f;
      best = run(best.x, budget);
      if (budget <= 0) return best;
      const double gain = before - best.f;
      if (!(gain > kRelativeTolerance * std::abs(best.f))) return best;
    }
  }

 private:
  Vertex run(const Point& start, int& budget) {
    std::array<Vertex, 6> simplex;
    simplex[0] = {start, objective(start)};
    for (std::size_t i = 0; i < 5; ++i) {
      Point p = start;
      p[i] += 0.1 * std::max(std::abs(p[i]), 0.5);
      simplex[i + 1] = {p, objective(p)};
    }
    auto by_value = [](const Vertex& a, const Vertex& b) { return a.f < b.f; };

    while (budget > 0) {
      std::sort(simplex.begin(), simplex.end(), by_value);
      const double spread = simplex.back().f - simplex.front().f;
      if (spread <= kRelativeTolerance * std::abs(simplex.front().f) ||
          spread <= std::numeric_limits<double>::min()) {
        break;
      }
      --budget;

      Point centroid{};
      for (std::size_t v = 0; v < 5; ++v) {
        for (std::size_t i = 0; i < 5; ++i) centroid[i] += simplex[v].x[i] / 5.0;
      }
      auto along = [&](double t) {
        Point p;
        for (std::size_t i = 0; i < 5; ++i) p[i] = centroid[i] + t * (simplex[5].x[i] - centroid[i]);
        return Vertex{p, objective(p)};
      };

      const Vertex reflected = along(-1.0);
      if (reflected.f < simplex[0].f) {
        const Vertex expanded = along(-2.0);
        simplex[5] = expanded.f < reflected.f ? expanded : reflected;
        continue;
      }
      if (reflected.f < simplex[4].f) {
        simplex[5] = reflected;
        continue;
      }
      const bool outside = reflected.f < simplex[5].f;
      const Vertex contracted = along(outside ? -0.5 : 0.5);
      if (contracted.f < (outside ? reflected.f : simplex[5].f)) {
        simplex[5] = contracted;
        continue;
      }
      for (std::size_t v = 1; v < 6; ++v) {
        for (std::size_t i = 0; i < 5; ++i) {
          simplex[v].x[i] = simplex[0].x[i] + 0.5 * (simplex[v].x[i] - simplex[0].x[i]);
        }
        simplex[v].f = objective(simplex[v].x);
      }
    }
    return *std::min_element(simplex.begin(), simplex.end(), by_value);
  }

  std::span<const double> z_;
  std::span<const double> t_;
};

struct Moments {
  double mean;
  double sd;
};

Moments moments(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / n)};
}

double quantile(std::vector<double> sorted, double p) {
  std::sort(sorted.begin(), sorted.end());
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

LogisticParams fit_logistic(std::span<const double> r, std::span<const double> s) {
  if (r.size() != s.size()) throw DomainError("fit_logistic: length mismatch");
  if (r.size() < 10) throw DomainError("fit_logistic: needs at least 10 points");
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!std::isfinite(r[i]) || !std::isfinite(s[i])) {
      throw DomainError("fit_logistic: non-finite input");
    }
  }
  const Moments mr = moments(r);
  if (!(mr.sd > 0.0)) throw DomainError("fit_logistic: constant R");
  Moments ms = moments(s);
  if (!(ms.sd > 0.0)) ms.sd = 1.0;

  std::vector<double> z(r.size());
  std::vector<double> t(s.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    z[i] = (r[i] - mr.mean) / mr.sd;
    t[i] = (s[i] - ms.mean) / ms.sd;
  }

  const auto [zmin, zmax] = std::minmax_element(z.begin(), z.end());
  const auto [tmin, tmax] = std::minmax_element(t.begin(), t.end());
  // Least-squares line of t on z (both centred): slope = covariance.
  double slope = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) slope += z[i] * t[i];
  slope /= static_cast<double>(z.size());
  const double direction = slope < 0.0 ? -1.0 : 1.0;

  SimplexSearch search(z, t);
  Vertex best{{}, std::numeric_limits<double>::infinity()};
  for (double p : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const Point start = {*tmax - *tmin, direction * 4.0 / (*zmax - *zmin), quantile(z, p), slope,
                         0.0};
    const Vertex candidate = search.minimize(start);
    if (candidate.f < best.f) best = candidate;
  }
  if (!std::isfinite(best.f)) throw FitError("fit_logistic: no finite solution");

  const auto& b = best.x;
  LogisticParams params;
  params.beta = {ms.sd * b[0], b[1] / mr.sd, mr.mean + mr.sd * b[2], ms.sd * b[3] / mr.sd,
                 ms.sd * b[4] + ms.mean - ms.sd * b[3] * mr.mean / mr.sd};
  for (double v : params.beta) {
    if (!std::isfinite(v)) throw FitError("fit_logistic: non-finite parameters");
  }
  return params;
}

}  // namespace iqaforge::sqb
