#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "iqaforge/error.hpp"
#include "iqaforge/eval.hpp"
#include "iqaforge/sqb.hpp"
#include "oracles.hpp"

using namespace iqaforge;
using metrics::Orientation;
using sqb::DatasetSegment;
using sqb::ScoreMatrix;

namespace {

std::vector<std::size_t> order_desc(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] > v[b]; });
  return idx;
}

double rmse(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / a.size());
}

ScoreMatrix random_matrix(std::size_t n, std::size_t j, std::mt19937_64& rng, bool with_ties) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ScoreMatrix m;
  m.n = n;
  for (std::size_t c = 0; c < j; ++c) {
    sqb::ScoreColumn col{"m" + std::to_string(c),
                         c % 2 ? Orientation::lower_better : Orientation::higher_better, {}};
    for (std::size_t i = 0; i < n; ++i) {
      col.scores.push_back(with_ties ? std::floor(u(rng) * 6) : u(rng));
    }
    m.columns.push_back(std::move(col));
  }
  return m;
}

}  // namespace

TEST_SUITE("sqb") {
  TEST_CASE("rank_scores examples") {
    CHECK(sqb::rank_scores(std::vector{0.9, 0.5, 0.7}, Orientation::higher_better) ==
          std::vector{1.0, 3.0, 2.0});
    CHECK(sqb::rank_scores(std::vector{0.9, 0.5, 0.7}, Orientation::lower_better) ==
          std::vector{3.0, 1.0, 2.0});
    CHECK(sqb::rank_scores(std::vector{0.5, 0.5, 0.1}, Orientation::higher_better) ==
          std::vector{1.5, 1.5, 3.0});
    CHECK_THROWS_AS(sqb::rank_scores(std::vector{0.1, std::nan("")}, Orientation::higher_better),
                    DomainError);
  }

  TEST_CASE("ranks match the counting oracle and sum to n(n+1)/2") {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 100; ++t) {
      const auto m = random_matrix(1 + rng() % 60, 1, rng, t % 2 == 0);
      const auto& col = m.columns[0];
      const auto r = sqb::rank_scores(col.scores, col.orientation);
      CHECK(r == oracle::ranks(col.scores, col.orientation == Orientation::higher_better));
      const double n = static_cast<double>(m.n);
      CHECK(std::accumulate(r.begin(), r.end(), 0.0) == n * (n + 1) / 2);
    }
  }

  TEST_CASE("rrf examples") {
    const std::vector<std::vector<double>> ranks = {{1, 2, 3}, {2, 1, 3}};
    const auto v = sqb::rrf(ranks, 60);
    CHECK(v[0] == 1.0 / 61 + 1.0 / 62);
    CHECK(v[1] == v[0]);
    CHECK(v[2] == 2.0 / 63);
    CHECK(v[2] < v[0]);
    CHECK_THROWS_AS(sqb::rrf(ranks, 0.0), DomainError);
    CHECK_THROWS_AS(sqb::rrf(ranks, -3.0), DomainError);

    std::mt19937_64 rng(2);
    for (int t = 0; t < 20; ++t) {
      const auto m = random_matrix(30, 1, rng, false);
      const auto r = sqb::rank_matrix(m);
      for (double k : {0.5, 60.0, 1e6}) {
        const auto fused = sqb::rrf(r, k);
        for (std::size_t i = 0; i < 30; ++i) {
          for (std::size_t j = 0; j < 30; ++j) {
            if (r[0][i] < r[0][j]) CHECK(fused[i] > fused[j]);
          }
        }
      }
      // All metrics agreeing means RRF agrees with them.
      auto agree = m;
      agree.columns.push_back(agree.columns[0]);
      agree.columns.push_back(agree.columns[0]);
      CHECK(order_desc(sqb::rrf(sqb::rank_matrix(agree), 60)) ==
            order_desc(sqb::rrf(sqb::rank_matrix(m), 60)));
    }
  }

  TEST_CASE("rrf strictly increases when one rank improves") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 200; ++t) {
      std::vector<std::vector<double>> ranks(3, std::vector<double>(10));
      for (auto& col : ranks) {
        std::iota(col.begin(), col.end(), 1.0);
        std::shuffle(col.begin(), col.end(), rng);
      }
      const std::size_t i = rng() % 10, j = rng() % 3;
      if (ranks[j][i] == 1.0) continue;
      const double before = sqb::rrf(ranks, 60)[i];
      ranks[j][i] -= 0.5;
      CHECK(sqb::rrf(ranks, 60)[i] > before);
    }
  }

  TEST_CASE("normalize_rrf") {
    CHECK(sqb::normalize_rrf(std::vector{2.0, 4.0}) == std::vector{0.5, 1.0});
    CHECK(sqb::normalize_rrf(std::vector{0.3}) == std::vector{1.0});
    CHECK_THROWS_AS(sqb::normalize_rrf(std::vector<double>{}), DomainError);
    CHECK_THROWS_AS(sqb::normalize_rrf(std::vector{0.0, 0.0}), DomainError);
    const std::vector<double> v = {0.1, 0.7, 0.3};
    const auto nv = sqb::normalize_rrf(v);
    CHECK(std::max_element(nv.begin(), nv.end()) - nv.begin() == 1);
  }

  TEST_CASE("fit_logistic recovers generated data") {
    const sqb::LogisticParams truth{{1, 8, 0.5, 0.2, 3}};
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> r(200);
    for (auto& x : r) x = u(rng);
    const auto s = sqb::apply_logistic(truth, r);
    const auto fit = sqb::fit_logistic(r, s);
    CHECK(rmse(sqb::apply_logistic(fit, r), s) < 1e-6);

    std::vector<double> lin(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) lin[i] = 2 * r[i] + 1;
    const auto fit_lin = sqb::fit_logistic(r, lin);
    CHECK(rmse(sqb::apply_logistic(fit_lin, r), lin) < 1e-8);

    const auto& b = fit.beta;
    CHECK(fit(b[2]) == doctest::Approx(b[3] * b[2] + b[4]).epsilon(1e-14));

    CHECK_THROWS_AS(sqb::fit_logistic(std::vector<double>(9, 0.1), std::vector<double>(9, 1.0)),
                    DomainError);
    CHECK_THROWS_AS(sqb::fit_logistic(std::vector<double>(20, 0.4), s), Error);
  }

  TEST_CASE("apply_logistic examples") {
    const std::vector<double> r = {0.0, 0.25, 0.9, 3.0};
    CHECK(sqb::apply_logistic({{0, 1, 0, 1, 0}}, r) == r);
    for (double q : sqb::apply_logistic({{0, 1, 0, 0, 4.5}}, r)) CHECK(q == 4.5);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int t = 0; t < 100; ++t) {
      const sqb::LogisticParams p{{std::abs(u(rng)), std::abs(u(rng)) * 5, u(rng), std::abs(u(rng)), u(rng)}};
      std::vector<double> grid(200);
      for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = -2 + 4.0 * i / 199;
      const auto q = sqb::apply_logistic(p, grid);
      for (std::size_t i = 1; i < q.size(); ++i) CHECK(q[i] >= q[i - 1] - 1e-12);
    }
  }

  TEST_CASE("rescale_0_100") {
    CHECK(sqb::rescale_0_100(std::vector{2.0, 4.0, 6.0}) == std::vector{0.0, 50.0, 100.0});
    const std::vector<double> q = {0.3, -1.2, 7.5, 2.0};
    std::vector<double> affine;
    for (double x : q) affine.push_back(3.5 * x - 11.0);
    const auto a = sqb::rescale_0_100(q);
    const auto b = sqb::rescale_0_100(affine);
    for (std::size_t i = 0; i < q.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    CHECK_THROWS_AS(sqb::rescale_0_100(std::vector{1.0, 1.0}), DomainError);
  }

  TEST_CASE("generate_sqb structure") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t n = 40;
    ScoreMatrix m;
    m.n = n;
    sqb::ScoreColumn col{"a", Orientation::higher_better, {}};
    for (std::size_t i = 0; i < n; ++i) col.scores.push_back(u(rng));
    m.columns = {col, col};
    m.columns[1].metric_id = "b";
    std::vector<double> mos;
    for (double x : col.scores) mos.push_back(5 * x + 0.1 * u(rng));
    const std::vector<DatasetSegment> one = {{"anchor", 0, n, {{"anchor", mos, sqb::SubjectiveOrientation::mos_higher_better}}}};
    const auto res = sqb::generate_sqb(one, m, 80, "anchor");
    CHECK(order_desc(res.sqb) == order_desc(col.scores));
    CHECK(*std::min_element(res.sqb.begin(), res.sqb.end()) == 0.0);
    CHECK(*std::max_element(res.sqb.begin(), res.sqb.end()) == 100.0);

    std::vector<DatasetSegment> gap = one;
    gap[0].length = n - 1;
    CHECK_THROWS_AS(sqb::generate_sqb(gap, m, 80, "anchor"), FormatError);
    std::vector<DatasetSegment> unrated = {{"anchor", 0, n, {}}};
    CHECK_THROWS_AS(sqb::generate_sqb(unrated, m, 80, "anchor"), FormatError);
    CHECK_THROWS_AS(sqb::generate_sqb(one, m, 80, "nope"), FormatError);
  }

  TEST_CASE("dmos anchors are folded before fitting") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t n = 30;
    ScoreMatrix m;
    m.n = n;
    m.columns = {{"a", Orientation::higher_better, {}}, {"b", Orientation::higher_better, {}}};
    std::vector<double> dmos;
    for (std::size_t i = 0; i < n; ++i) {
      const double q = u(rng);
      m.columns[0].scores.push_back(q);
      m.columns[1].scores.push_back(q * q);
      dmos.push_back(100 - 60 * q);
    }
    const std::vector<DatasetSegment> segs = {{"x", 0, n, {{"x", dmos, sqb::SubjectiveOrientation::dmos_lower_better}}}};
    const auto res = sqb::generate_sqb(segs, m, 60, "x");
    CHECK(eval::srcc(res.sqb, m.columns[0].scores) > 0.99);
  }

  TEST_CASE("segment declaration order does not change per-image values") {
    std::mt19937_64 rng(8);
    const auto m = random_matrix(45, 3, rng, false);
    std::vector<double> mos(15);
    for (std::size_t i = 0; i < 15; ++i) mos[i] = m.columns[0].scores[15 + i] * 3 + 0.01 * i;
    const std::vector<DatasetSegment> a = {{"s0", 0, 15, {}},
                                           {"anc", 15, 15, {{"anc", mos, sqb::SubjectiveOrientation::mos_higher_better}}},
                                           {"s2", 30, 15, {}}};
    std::vector<DatasetSegment> b = {a[2], a[0], a[1]};
    const auto ra = sqb::generate_sqb(a, m, 90, "anc");
    const auto rb = sqb::generate_sqb(b, m, 90, "anc");
    CHECK(ra.sqb == rb.sqb);
    CHECK(ra.segment(a[1]).size() == 15);
  }

  TEST_CASE("large k ordering equals ascending rank sum") {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 300; ++t) {
      const std::size_t n = 2 + rng() % 49, j = 1 + rng() % 5;
      std::vector<std::vector<double>> ranks(j, std::vector<double>(n));
      for (auto& col : ranks) {
        std::iota(col.begin(), col.end(), 1.0);
        std::shuffle(col.begin(), col.end(), rng);
      }
      std::vector<double> borda(n, 0.0);
      for (const auto& col : ranks) {
        for (std::size_t i = 0; i < n; ++i) borda[i] += col[i];
      }
      const double k = 100.0 * n * j;
      const auto fused = sqb::rrf(ranks, k);
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
          if (borda[a] < borda[b]) CHECK(fused[a] > fused[b]);
        }
      }
    }
  }

  TEST_CASE("k_sweep and weighted_srcc") {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t n = 60;
    ScoreMatrix m;
    m.n = n;
    m.columns = {{"a", Orientation::higher_better, {}}, {"b", Orientation::lower_better, {}}};
    std::vector<double> latent;
    for (std::size_t i = 0; i < n; ++i) {
      const double q = u(rng);
      latent.push_back(q);
      m.columns[0].scores.push_back(q + 0.1 * u(rng));
      m.columns[1].scores.push_back(-q + 0.1 * u(rng));
    }
    const std::vector<double> first(latent.begin(), latent.begin() + 20);
    const std::vector<double> rest(latent.begin() + 20, latent.end());
    const std::vector<DatasetSegment> segs = {
        {"anc", 0, 20, {{"anc", first, sqb::SubjectiveOrientation::mos_higher_better}}},
        {"other", 20, 40, {{"v1", rest, sqb::SubjectiveOrientation::mos_higher_better},
                           {"v2", rest, sqb::SubjectiveOrientation::mos_higher_better}}}};
    const std::vector<double> single = {120.0};
    const auto one = sqb::k_sweep(segs, m, single, "anc");
    REQUIRE(one.size() == 1);
    CHECK(one[0].first == 120.0);

    const auto res = sqb::generate_sqb(segs, m, 120.0, "anc");
    const double s0 = eval::srcc(res.segment(segs[0]), first);
    const double s1 = eval::srcc(res.segment(segs[1]), rest);
    CHECK(sqb::weighted_srcc(segs, res.sqb) == doctest::Approx((20 * s0 + 80 * s1) / 100).epsilon(1e-12));
    CHECK(one[0].second == sqb::weighted_srcc(segs, res.sqb));

    const std::vector<double> ks = {1, 10, 60, 600, 6000};
    CHECK(sqb::k_sweep(segs, m, ks, "anc", 1) == sqb::k_sweep(segs, m, ks, "anc", 4));
    CHECK(sqb::auto_k(500) == 1000.0);
    CHECK(sqb::auto_k(3530595) == 8e6);
  }

  TEST_CASE("benchmark assembly from CSV and JSON") {
    const std::string csv =
        "image_id,metric_id,score\n"
        "a1,ssim,0.9\na1,gms_deviation,0.01\na1,custom,3\n"
        "a2,ssim,0.5\na2,gms_deviation,0.2\na2,custom,1\n"
        "b1,ssim,0.7\nb1,gms_deviation,0.05\nb1,custom,2\n"
        "zz,ssim,0.1\n";
    const std::string json = R"({"segments": [
        {"name": "A", "image_ids": ["a1", "a2"], "subjective": [80, 20], "orientation": "mos"},
        {"name": "B", "image_ids": ["b1"], "subjective_sets": [{"name": "B-near", "scores": [1.5], "orientation": "dmos"}]}]})";
    const std::vector<std::string> lower = {"custom"};
    const auto bench = sqb::assemble_benchmark(csv, json, lower);
    CHECK(bench.image_ids == std::vector<std::string>{"a1", "a2", "b1"});
    CHECK(bench.scores.n == 3);
    REQUIRE(bench.scores.columns.size() == 3);
    for (const auto& c : bench.scores.columns) {
      if (c.metric_id == "gms_deviation" || c.metric_id == "custom") {
        CHECK(c.orientation == Orientation::lower_better);
      } else {
        CHECK(c.orientation == Orientation::higher_better);
      }
    }
    CHECK(bench.segments[1].offset == 2);
    CHECK(bench.segments[1].subjective[0].name == "B-near");
    CHECK(bench.segments[1].subjective[0].folded() == std::vector<double>{-1.5});

    const std::string bare = R"([{"name": "A", "image_ids": ["a1", "a2", "b1"]}])";
    CHECK(sqb::assemble_benchmark(csv, bare).segments.size() == 1);
    const std::string holes = "image_id,metric_id,score\na1,ssim,0.9\na1,psnr,30\na2,ssim,0.4\n";
    CHECK_THROWS_AS(sqb::assemble_benchmark(holes, R"([{"name": "A", "image_ids": ["a1", "a2"]}])"),
                    FormatError);
    CHECK_THROWS_AS(sqb::assemble_benchmark(csv, "{not json"), FormatError);
    CHECK_THROWS_AS(sqb::parse_subjective_orientation("zscore"), FormatError);
  }
}
