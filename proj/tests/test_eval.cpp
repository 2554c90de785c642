#include <doctest.h>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <numeric>
#include <random>

#include "iqaforge/error.hpp"
#include "iqaforge/eval.hpp"
#include "oracles.hpp"

using namespace iqaforge;
using eval::VerdictValue;

namespace {

std::vector<double> normals(std::size_t n, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("plcc_raw examples") {
    const std::vector<double> x = {0.3, 1.7, 2.2, 5.0};
    std::vector<double> y, z;
    for (double v : x) {
      y.push_back(2 * v + 1);
      z.push_back(-v);
    }
    CHECK(eval::plcc_raw(x, y) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(eval::plcc_raw(x, z) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(eval::plcc_raw(std::vector{1.0, 2.0, 3.0}, std::vector{1.0, 2.0, 4.0}) ==
          doctest::Approx(9 / std::sqrt(84.0)).epsilon(1e-15));
    CHECK_THROWS_AS(eval::plcc_raw(std::vector{1.0, 1.0, 1.0}, std::vector{1.0, 2.0, 3.0}), DomainError);
    CHECK_THROWS_AS(eval::plcc_raw(std::vector{1.0, 2.0}, std::vector{1.0, 2.0}), DomainError);
  }

  TEST_CASE("srcc examples") {
    const std::vector<double> x = {1, 2, 3, 4};
    CHECK(eval::srcc(x, std::vector{10.0, 20.0, 35.0, 90.0}) == doctest::Approx(1.0));
    CHECK(eval::srcc(x, std::vector{4.0, 3.0, 2.0, 1.0}) == doctest::Approx(-1.0));
    CHECK(eval::srcc(x, std::vector{1.0, 3.0, 2.0, 4.0}) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK_THROWS_AS(eval::srcc(x, std::vector{2.0, 2.0, 2.0, 2.0}), DomainError);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> a(50), b(50), ta(50);
    for (std::size_t i = 0; i < 50; ++i) {
      a[i] = u(rng);
      b[i] = a[i] + 0.3 * u(rng);
      ta[i] = std::exp(3 * a[i]) - 7;
    }
    CHECK(eval::srcc(ta, b) == doctest::Approx(eval::srcc(a, b)).epsilon(1e-15));
  }

  TEST_CASE("agreement with brute-force oracles on random vectors") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int t = 0; t < 100; ++t) {
      const std::size_t n = 4 + rng() % 200;
      std::vector<double> x(n), y(n);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = t % 3 == 0 ? std::round(u(rng)) : u(rng);
        y[i] = 0.5 * x[i] + u(rng);
      }
      CHECK(std::abs(eval::plcc_raw(x, y) - oracle::pearson(x, y)) <= 1e-12);
      CHECK(std::abs(eval::srcc(x, y) - oracle::spearman(x, y)) <= 1e-12);
      CHECK(std::abs(eval::kurtosis(x) - oracle::kurtosis(x)) <= 1e-12);
    }
  }

  TEST_CASE("mapped PLCC") {
    const sqb::LogisticParams truth{{40, 10, 0.5, 5, 20}};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> obj(150);
    for (auto& x : obj) x = u(rng);
    const auto subj = sqb::apply_logistic(truth, obj);
    CHECK(eval::plcc_mapped(obj, subj) >= 0.9999);
    CHECK(eval::plcc_mapped(obj, obj) >= eval::plcc_raw(obj, obj) - 1e-12);
    for (int t = 0; t < 30; ++t) {
      std::vector<double> s(obj.size());
      const double p = 0.3 + 3 * u(rng);
      for (std::size_t i = 0; i < obj.size(); ++i) s[i] = std::pow(obj[i], p) + 0.2 * u(rng);
      CHECK(eval::plcc_mapped(obj, s) >= eval::plcc_raw(obj, s) - 1e-9);
    }
    const auto r = eval::evaluate(obj, subj);
    CHECK(r.n == obj.size());
    CHECK(r.srcc == doctest::Approx(1.0));
    CHECK_THROWS_AS(eval::plcc_mapped(std::vector<double>(12, 0.5), std::vector<double>(12, 1.0)), DomainError);
  }

  TEST_CASE("weighted average") {
    CHECK(eval::weighted_average(std::vector{0.2, 0.4, 0.9}, std::vector{1.0, 1.0, 1.0}) ==
          doctest::Approx(0.5));
    CHECK(eval::weighted_average(std::vector{0.9, 0.8}, std::vector{779.0, 3000.0}) ==
          doctest::Approx((0.9 * 779 + 0.8 * 3000) / 3779.0).epsilon(1e-15));
    CHECK(eval::weighted_average(std::vector{0.8206}, std::vector{3.0}) == doctest::Approx(0.8206).epsilon(1e-15));
    CHECK_THROWS_AS(eval::weighted_average(std::vector<double>{}, std::vector<double>{}), DomainError);
  }

  TEST_CASE("residuals") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> obj(120);
    for (auto& x : obj) x = u(rng);
    const auto exact = sqb::apply_logistic({{2, 6, 0.4, 1, 0.5}}, obj);
    const auto r0 = eval::residuals(obj, exact);
    CHECK(r0.size() == obj.size());
    for (double r : r0) CHECK(std::abs(r) < 1e-6);

    std::vector<double> noisy = exact;
    for (auto& s : noisy) s += 0.2 * (u(rng) - 0.5);
    const auto r1 = eval::residuals(obj, noisy);
    const double mean = std::accumulate(r1.begin(), r1.end(), 0.0) / r1.size();
    const auto [lo, hi] = std::minmax_element(noisy.begin(), noisy.end());
    CHECK(std::abs(mean) < 1e-4 * (*hi - *lo));
  }

  TEST_CASE("kurtosis") {
    CHECK(eval::kurtosis(std::vector{-1.0, 1.0, -1.0, 1.0}) == 1.0);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> uni(100000);
    for (auto& x : uni) x = u(rng);
    CHECK(std::abs(eval::kurtosis(uni) - 1.8) < 0.05);
    CHECK(std::abs(eval::kurtosis(normals(100000, 1.0, 6)) - 3.0) < 0.1);
    CHECK(eval::gaussian_gate(normals(100000, 2.0, 7)));
    CHECK_FALSE(eval::gaussian_gate(uni));
    CHECK_THROWS_AS(eval::kurtosis(std::vector{2.0, 2.0, 2.0, 2.0}), DomainError);
  }

  TEST_CASE("incomplete beta and F quantiles against Boost") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 300; ++t) {
      const double a = 0.5 + 200 * u(rng), b = 0.5 + 200 * u(rng), x = u(rng);
      const double expect = boost::math::ibeta(a, b, x);
      const double got = eval::incomplete_beta(a, b, x);
      CHECK(std::abs(got - expect) <= 1e-10 * std::max(expect, 1e-300) + 1e-300);
    }
    for (double d1 : {1.0, 4.0, 19.0, 120.0, 999.0}) {
      for (double d2 : {2.0, 9.0, 120.0, 640.0}) {
        const boost::math::fisher_f_distribution<double> f(d1, d2);
        for (double p : {0.01, 0.05, 0.5, 0.95}) {
          const double expect = boost::math::quantile(f, p);
          CHECK(eval::f_quantile(p, d1, d2) == doctest::Approx(expect).epsilon(1e-9));
        }
      }
    }
    CHECK(eval::f_quantile(0.05, 120, 120) == doctest::Approx(0.741).epsilon(1e-3));
  }

  TEST_CASE("variance F-test") {
    const auto a = normals(121, 1.0, 9);
    CHECK(eval::variance_f_test(a, a).value == VerdictValue::indistinguishable);
    CHECK(eval::variance_f_test(a, a).f == 1.0);

    // Exactly 4x variance gap.
    std::vector<double> wide = a;
    for (auto& x : wide) x *= 2;
    const auto v = eval::variance_f_test(a, wide);
    CHECK(v.f == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(v.value == VerdictValue::better);
    CHECK(eval::variance_f_test(wide, a).value == VerdictValue::worse);
    CHECK(v.gaussian_a == eval::gaussian_gate(a));
    CHECK_THROWS_AS(eval::variance_f_test(a, std::vector<double>(10, 3.0)), DomainError);

    // Smaller alpha never turns "better" into anything stronger the other way.
    for (int t = 0; t < 50; ++t) {
      const auto x = normals(30 + t, 1.0, 100 + t);
      const auto y = normals(40 + t, 1.0 + 0.03 * t, 200 + t);
      const auto loose = eval::variance_f_test(x, y, 0.1).value;
      const auto tight = eval::variance_f_test(x, y, 0.01).value;
      if (loose != VerdictValue::better) CHECK(tight != VerdictValue::better);
      CHECK(eval::variance_f_test(y, x, 0.05).value ==
            (eval::variance_f_test(x, y, 0.05).value == VerdictValue::better ? VerdictValue::worse
             : eval::variance_f_test(x, y, 0.05).value == VerdictValue::worse ? VerdictValue::better
                                                                               : VerdictValue::indistinguishable));
    }
  }

  TEST_CASE("significance matrix") {
    eval::ResidualTable table;
    table["ours"]["d1"] = normals(200, 1.0, 1);
    table["ours"]["d2"] = normals(200, 1.0, 2);
    table["twin"] = table["ours"];
    table["loose"]["d1"] = normals(200, 2.0, 3);
    table["loose"]["d2"] = normals(200, 2.0, 4);
    const auto m = eval::significance_matrix(table, "ours", 0.05, 3);
    CHECK(m.methods == std::vector<std::string>{"loose", "ours", "twin"});
    CHECK(m.datasets == std::vector<std::string>{"d1", "d2"});
    for (std::size_t d = 0; d < 2; ++d) {
      CHECK(m.verdicts[0][d].value == VerdictValue::better);
      CHECK(m.verdicts[1][d].value == VerdictValue::indistinguishable);
      CHECK(m.verdicts[2][d].value == VerdictValue::indistinguishable);
    }
    CHECK(eval::format_significance_csv(m) == "method,d1,d2\nloose,1,1\nours,-,-\ntwin,-,-\n");
    CHECK(m.gaussian_pass_rate == 1.0);

    table["loose"].erase("d2");
    try {
      eval::significance_matrix(table, "ours");
      FAIL("expected error");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("loose") != std::string::npos);
    }
    CHECK_THROWS_AS(eval::significance_matrix(table, "absent"), FormatError);
  }
}
