#include "iqaforge/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "iqaforge/csv.hpp"
#include "iqaforge/error.hpp"
#include "iqaforge/parallel.hpp"

namespace iqaforge::eval {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y, std::size_t min_n,
                const char* what) {
  if (x.size() != y.size()) throw DimensionError(std::string(what) + ": length mismatch");
  if (x.size() < min_n) {
    throw DomainError(std::string(what) + ": needs at least " + std::to_string(min_n) +
                      " points");
  }
}

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double plcc_raw(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, 3, "plcc");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw DomainError("plcc: constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> fractional_ranks(std::span<const double> v) {
  return sqb::rank_scores(v, metrics::Orientation::lower_better);
}

double srcc(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, 3, "srcc");
  const auto rx = fractional_ranks(x);
  const auto ry = fractional_ranks(y);
  return plcc_raw(rx, ry);
}

EvalResult evaluate(std::span<const double> objective, std::span<const double> subjective) {
  check_pair(objective, subjective, 3, "evaluate");
  EvalResult result;
  result.n = objective.size();
  result.params = sqb::fit_logistic(objective, subjective);
  const auto mapped = sqb::apply_logistic(result.params, objective);
  result.plcc = plcc_raw(mapped, subjective);
  result.srcc = srcc(objective, subjective);
  return result;
}

double plcc_mapped(std::span<const double> objective, std::span<const double> subjective) {
  check_pair(objective, subjective, 3, "plcc_mapped");
  const auto params = sqb::fit_logistic(objective, subjective);
  return plcc_raw(sqb::apply_logistic(params, objective), subjective);
}

std::vector<double> residuals(std::span<const double> objective,
                              std::span<const double> subjective) {
  check_pair(objective, subjective, 1, "residuals");
  const auto params = sqb::fit_logistic(objective, subjective);
  auto out = sqb::apply_logistic(params, objective);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = subjective[i] - out[i];
  return out;
}

double weighted_average(std::span<const double> values, std::span<const double> weights) {
  if (values.empty()) throw DomainError("weighted_average: empty input");
  if (values.size() != weights.size()) throw DimensionError("weighted_average: length mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(weights[i] > 0.0)) throw DomainError("weighted_average: weights must be positive");
    num += weights[i] * values[i];
    den += weights[i];
  }
  return num / den;
}

double kurtosis(std::span<const double> v) {
  if (v.size() < 4) throw DomainError("kurtosis: needs at least 4 values");
  const double m = mean(v);
  double m2 = 0.0, m4 = 0.0;
  for (double x : v) {
    const double d2 = (x - m) * (x - m);
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= static_cast<double>(v.size());
  m4 /= static_cast<double>(v.size());
  if (!(m2 > 0.0)) throw DomainError("kurtosis: constant input");
  return m4 / (m2 * m2);
}

double sample_variance(std::span<const double> v) {
  if (v.size() < 2) throw DomainError("variance: needs at least 2 values");
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

bool gaussian_gate(std::span<const double> res) {
  const double k = kurtosis(res);
  return k >= 2.0 && k <= 4.0;
}

std::string_view verdict_symbol(VerdictValue v) {
  switch (v) {
    case VerdictValue::better: return "1";
    case VerdictValue::worse: return "0";
    case VerdictValue::indistinguishable: break;
  }
  return "-";
}

Verdict variance_f_test(std::span<const double> res_a, std::span<const double> res_b,
                        double alpha) {
  if (!(alpha > 0.0 && alpha < 0.5)) throw DomainError("F-test: alpha must lie in (0, 0.5)");
  const double var_a = sample_variance(res_a);
  const double var_b = sample_variance(res_b);
  if (!(var_a > 0.0) || !(var_b > 0.0)) throw DomainError("F-test: zero residual variance");
  const double da = static_cast<double>(res_a.size() - 1);
  const double db = static_cast<double>(res_b.size() - 1);

  Verdict verdict;
  verdict.f = var_a / var_b;
  verdict.gaussian_a = res_a.size() >= 4 && gaussian_gate(res_a);
  verdict.gaussian_b = res_b.size() >= 4 && gaussian_gate(res_b);
  if (verdict.f < f_quantile(alpha, da, db)) {
    verdict.value = VerdictValue::better;
  } else if (1.0 / verdict.f < f_quantile(alpha, db, da)) {
    verdict.value = VerdictValue::worse;
  }
  return verdict;
}

SignificanceMatrix significance_matrix(const ResidualTable& table,
                                       std::string_view reference_method, double alpha,
                                       std::size_t workers) {
  const auto ref_it = table.find(std::string(reference_method));
  if (ref_it == table.end()) {
    throw FormatError("no residuals for method '" + std::string(reference_method) + "'");
  }
  SignificanceMatrix m;
  m.reference_method = std::string(reference_method);
  std::set<std::string> datasets;
  for (const auto& [method, cells] : table) {
    m.methods.push_back(method);
    for (const auto& [dataset, res] : cells) datasets.insert(dataset);
  }
  m.datasets.assign(datasets.begin(), datasets.end());

  std::vector<const std::vector<double>*> cells;
  for (const auto& method : m.methods) {
    const auto& row = table.at(method);
    for (const auto& dataset : m.datasets) {
      const auto it = row.find(dataset);
      if (it == row.end()) {
        throw FormatError("missing residuals for method '" + method + "' on dataset '" +
                          dataset + "'");
      }
      cells.push_back(&it->second);
    }
  }

  const std::size_t nd = m.datasets.size();
  m.verdicts.assign(m.methods.size(), std::vector<Verdict>(nd));
  parallel_for(cells.size(), workers, [&](std::size_t i) {
    const std::size_t mi = i / nd;
    const std::size_t di = i % nd;
    const auto& reference = ref_it->second.at(m.datasets[di]);
    m.verdicts[mi][di] = variance_f_test(reference, *cells[i], alpha);
  });

  std::size_t passed = 0;
  for (const auto* res : cells) {
    if (res->size() >= 4 && gaussian_gate(*res)) ++passed;
  }
  m.gaussian_pass_rate =
      cells.empty() ? 0.0 : static_cast<double>(passed) / static_cast<double>(cells.size());
  return m;
}

std::string format_significance_csv(const SignificanceMatrix& m) {
  CsvTable table;
  table.header.push_back("method");
  for (const auto& d : m.datasets) table.header.push_back(d);
  for (std::size_t i = 0; i < m.methods.size(); ++i) {
    std::vector<std::string> row{m.methods[i]};
    for (const auto& v : m.verdicts[i]) row.emplace_back(verdict_symbol(v.value));
    table.rows.push_back(std::move(row));
  }
  return format_csv(table);
}

}  // namespace iqaforge::eval
