#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iqaforge/sqb.hpp"

namespace iqaforge::eval {

struct EvalResult {
  double plcc = 0.0;
  double srcc = 0.0;
  std::size_t n = 0;
  sqb::LogisticParams params;
};

// Sample Pearson correlation. Needs >= 3 points and non-constant inputs.
double plcc_raw(std::span<const double> x, std::span<const double> y);
// Pearson correlation of average-tie ranks.
double srcc(std::span<const double> x, std::span<const double> y);
// Fractional ranks, 1 = smallest value.
std::vector<double> fractional_ranks(std::span<const double> v);

// Logistic-map objective onto subjective, then correlate. Fit failures
// surface as FitError, correlation failures as DomainError.
EvalResult evaluate(std::span<const double> objective, std::span<const double> subjective);
double plcc_mapped(std::span<const double> objective, std::span<const double> subjective);
std::vector<double> residuals(std::span<const double> objective,
                              std::span<const double> subjective);

double weighted_average(std::span<const double> values, std::span<const double> weights);

// Non-excess population kurtosis m4 / m2^2.
double kurtosis(std::span<const double> v);
// Unbiased (n - 1) variance.
double sample_variance(std::span<const double> v);
bool gaussian_gate(std::span<const double> residuals);

// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);
double f_cdf(double x, double d1, double d2);
double f_quantile(double p, double d1, double d2);

enum class VerdictValue { better, indistinguishable, worse };

struct Verdict {
  VerdictValue value = VerdictValue::indistinguishable;
  double f = 1.0;
  bool gaussian_a = false;
  bool gaussian_b = false;
};

// "1", "-" or "0" as seen from the first argument.
std::string_view verdict_symbol(VerdictValue v);

// Left-tailed F-tests in both directions on residual variances.
Verdict variance_f_test(std::span<const double> res_a, std::span<const double> res_b,
                        double alpha = 0.05);

// method -> dataset -> residual vector
using ResidualTable = std::map<std::string, std::map<std::string, std::vector<double>>>;

struct SignificanceMatrix {
  std::string reference_method;
  std::vector<std::string> methods;
  std::vector<std::string> datasets;
  // verdicts[m][d]: reference_method versus methods[m] on datasets[d]
  std::vector<std::vector<Verdict>> verdicts;
  // Share of (method, dataset) residual sets whose kurtosis lies in [2, 4].
  double gaussian_pass_rate = 0.0;
};

SignificanceMatrix significance_matrix(const ResidualTable& table,
                                       std::string_view reference_method, double alpha = 0.05,
                                       std::size_t workers = 1);
std::string format_significance_csv(const SignificanceMatrix& m);

}  // namespace iqaforge::eval
