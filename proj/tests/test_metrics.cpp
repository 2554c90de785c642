#include <doctest.h>

#include <cmath>
#include <random>

#include "iqaforge/distort.hpp"
#include "iqaforge/error.hpp"
#include "iqaforge/metrics.hpp"
#include "synth.hpp"

using namespace iqaforge;
using pixels::ImageBuffer;

TEST_SUITE("metrics") {
  TEST_CASE("psnr") {
    const auto img = testsupport::natural_image(32, 32, 1);
    CHECK(metrics::psnr(img, img) == metrics::kPsnrCap);
    const auto a = ImageBuffer::filled(16, 16, 1, 0.5);
    const auto b = ImageBuffer::filled(16, 16, 1, 0.5 + 1.0 / 255.0);
    CHECK(metrics::psnr(a, b) == doctest::Approx(20 * std::log10(255.0)).epsilon(1e-9));
    CHECK(metrics::psnr(ImageBuffer::filled(8, 8, 3, 0.0), ImageBuffer::filled(8, 8, 3, 1.0)) ==
          doctest::Approx(0.0));
    CHECK_THROWS_AS(metrics::psnr(a, ImageBuffer::filled(16, 15, 1, 0.5)), DimensionError);
  }

  TEST_CASE("ssim") {
    const auto img = testsupport::natural_image(48, 48, 2);
    CHECK(metrics::ssim(img, img) == doctest::Approx(1.0).epsilon(1e-12));
    std::mt19937_64 rng(1);
    for (int t = 0; t < 10; ++t) {
      const auto d = distort::gaussian_noise(img, 0.05 + 0.02 * t, rng());
      CHECK(metrics::ssim(img, d) == doctest::Approx(metrics::ssim(d, img)).epsilon(1e-12));
    }
    const double c1 = 0.01 * 0.01;
    CHECK(metrics::ssim(ImageBuffer::filled(64, 64, 1, 0.0), ImageBuffer::filled(64, 64, 1, 1.0)) ==
          doctest::Approx(c1 / (1 + c1)).epsilon(1e-9));
    CHECK_THROWS_AS(metrics::ssim(ImageBuffer::filled(10, 40, 1, 0.1),
                                  ImageBuffer::filled(10, 40, 1, 0.1)),
                    DimensionError);
  }

  TEST_CASE("ms_ssim") {
    const auto img = testsupport::natural_image(192, 192, 3);
    CHECK(metrics::ms_ssim_scales(192, 192) == 5);
    CHECK(metrics::ms_ssim_scales(64, 64) == 3);
    CHECK(metrics::ms_ssim(img, img) == doctest::Approx(1.0).epsilon(1e-12));
    double previous = 1.0;
    for (double sigma : {0.5, 1.0, 2.0, 4.0}) {
      const double m = metrics::ms_ssim(img, distort::gaussian_blur(img, sigma));
      CHECK(m <= previous);
      previous = m;
    }
    const metrics::QualityReference cached(img);
    const auto d = distort::jpeg_like(img, 20);
    CHECK(cached.ms_ssim(d) == metrics::ms_ssim(img, d));
    CHECK(cached.quality100(d) == metrics::quality100(img, d));
    CHECK_THROWS_AS(metrics::ms_ssim(ImageBuffer::filled(8, 8, 1, 0.1), ImageBuffer::filled(8, 8, 1, 0.1)),
                    DimensionError);
  }

  TEST_CASE("gms_deviation") {
    const auto img = testsupport::natural_image(64, 64, 4);
    CHECK(metrics::gms_deviation(img, img) == 0.0);
    CHECK(metrics::gms_deviation(ImageBuffer::filled(9, 9, 1, 0.2), ImageBuffer::filled(9, 9, 1, 0.9)) ==
          0.0);
    CHECK(metrics::gms_deviation(img, distort::gaussian_blur(img, 2.0)) > 1e-4);
  }

  TEST_CASE("quality100") {
    const auto img = testsupport::natural_image(64, 64, 5);
    CHECK(metrics::quality100(img, img) == doctest::Approx(100.0).epsilon(1e-10));
    CHECK(metrics::quality_from_ms_ssim(0.0) == 0.0);
    CHECK(metrics::quality_from_ms_ssim(1.0) == 100.0);
    double previous = -1;
    for (int i = 1; i <= 9; ++i) {
      const double q = metrics::quality_from_ms_ssim(i / 10.0);
      CHECK(q > previous);
      previous = q;
    }
  }

  TEST_CASE("fixpoints and ranges over random pairs") {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 1000; ++t) {
      const auto ref = testsupport::natural_image(32, 32, rng() % 50, t % 2 ? 3 : 1);
      const auto kind = static_cast<distort::Kind>(t % 4);
      const double p = kind == distort::Kind::jpeg_like ? 1.0 + rng() % 100
                       : kind == distort::Kind::gaussian_blur ? (rng() % 100) / 20.0
                                                              : (rng() % 100) / 200.0;
      const auto dist = distort::apply(ref, {kind, p, rng()});
      for (const auto& m : metrics::default_quartet()) {
        const double s = m.compute(ref, dist);
        INFO(m.id, " ", s, " kind ", distort::kind_name(kind), " p ", p);
        CHECK((s >= m.lo && s <= m.hi));
      }
      const double q = metrics::quality100(ref, dist);
      CHECK((q >= 0.0 && q <= 100.0));
      if (t % 50 == 0) {
        CHECK(metrics::psnr(ref, ref) == metrics::kPsnrCap);
        CHECK(metrics::ssim(ref, ref) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(metrics::ms_ssim(ref, ref) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(metrics::gms_deviation(ref, ref) == 0.0);
      }
    }
  }

  TEST_CASE("orientation puts the mild distortion first") {
    for (std::uint64_t seed = 20; seed < 25; ++seed) {
      const auto ref = testsupport::natural_image(96, 96, seed);
      const auto mild = distort::gaussian_blur(ref, 0.6);
      const auto heavy = distort::gaussian_blur(ref, 3.0);
      for (const auto& m : metrics::default_quartet()) {
        const double a = m.compute(ref, mild);
        const double b = m.compute(ref, heavy);
        if (m.orientation == metrics::Orientation::higher_better) {
          CHECK(a > b);
        } else {
          CHECK(a < b);
        }
      }
    }
  }

  TEST_CASE("score_pairs keeps input order for any worker count") {
    const auto& ssim = metrics::find_metric("ssim");
    CHECK(metrics::score_pairs(ssim, {}).empty());
    const auto img = testsupport::natural_image(32, 32, 6);
    const std::vector<metrics::ImagePair> same = {{img, img}};
    CHECK(metrics::score_pairs(ssim, same) == std::vector<double>{metrics::ssim(img, img)});

    std::vector<ImageBuffer> dists;
    for (int i = 0; i < 24; ++i) dists.push_back(distort::gaussian_noise(img, 0.01 * i, i));
    std::vector<metrics::ImagePair> pairs;
    for (const auto& d : dists) pairs.push_back({img, d});
    const auto one = metrics::score_pairs(ssim, pairs, 1);
    const auto eight = metrics::score_pairs(ssim, pairs, 8);
    CHECK(one == eight);
    for (std::size_t i = 0; i < pairs.size(); ++i) CHECK(one[i] == metrics::ssim(img, dists[i]));

    const auto small = ImageBuffer::filled(5, 5, 1, 0.5);
    pairs.push_back({small, small});
    try {
      metrics::score_pairs(ssim, pairs, 4);
      FAIL("expected failure");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("pair 24") != std::string::npos);
    }
    CHECK_THROWS_AS(metrics::find_metric("vif"), FormatError);
  }
}
