#include <doctest.h>

#include <cmath>
#include <random>

#include "ttn/errors.hpp"
#include "ttn/feature_map.hpp"

using ttn::FeatureConfig;

TEST_CASE("feature_vector: endpoints at d=2") {
  auto v0 = ttn::feature_vector(0.0, FeatureConfig{2});
  CHECK(v0[0] == 1.0);
  CHECK(v0[1] == 0.0);

  auto v1 = ttn::feature_vector(1.0, FeatureConfig{2});
  CHECK(v1[0] == doctest::Approx(std::cos(std::numbers::pi / 4)).epsilon(1e-15));
  CHECK(v1[1] == doctest::Approx(std::sin(std::numbers::pi / 4)).epsilon(1e-15));
}

TEST_CASE("feature_vector: x=0.5, d=3 matches the frozen termwise values") {
  // Independently evaluated: [cos^2(pi/8), sqrt(2) cos(pi/8) sin(pi/8), sin^2(pi/8)].
  auto v = ttn::feature_vector(0.5, FeatureConfig{3});
  REQUIRE(v.size() == 3);
  CHECK(v[0] == doctest::Approx(0.85355339059327373).epsilon(1e-14));
  CHECK(v[1] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(v[2] == doctest::Approx(0.14644660940672624).epsilon(1e-14));
  CHECK(std::abs(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] - 1.0) <= 1e-12);
}

TEST_CASE("feature_vector: binomial weights match Pascal's triangle") {
  // Rebuild the coefficients from an explicit Pascal triangle and compare.
  const std::size_t d = 7;
  std::vector<std::vector<double>> pascal(d);
  for (std::size_t n = 0; n < d; ++n) {
    pascal[n].assign(n + 1, 1.0);
    for (std::size_t k = 1; k < n; ++k) pascal[n][k] = pascal[n - 1][k - 1] + pascal[n - 1][k];
  }
  const double x = 0.37;
  const double theta = ttn::kFeatureAngleFactor * x;
  auto v = ttn::feature_vector(x, FeatureConfig{d});
  for (std::size_t s = 0; s < d; ++s) {
    const double expected = std::sqrt(pascal[d - 1][s]) *
                            std::pow(std::cos(theta), static_cast<double>(d - 1 - s)) *
                            std::pow(std::sin(theta), static_cast<double>(s));
    CHECK(v[s] == doctest::Approx(expected).epsilon(1e-13));
  }
}

TEST_CASE("feature_vector: unit norm for d in 2..10") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (std::size_t d = 2; d <= 10; ++d) {
    for (int rep = 0; rep < 200; ++rep) {
      auto v = ttn::feature_vector(dist(rng), FeatureConfig{d});
      double norm2 = 0.0;
      for (double c : v) norm2 += c * c;
      CHECK(std::abs(std::sqrt(norm2) - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("feature_vector: overlap is cos(angle difference)^(d-1)") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (std::size_t d : {2, 3, 5, 8}) {
    for (int rep = 0; rep < 100; ++rep) {
      const double x1 = dist(rng), x2 = dist(rng);
      auto v1 = ttn::feature_vector(x1, FeatureConfig{d});
      auto v2 = ttn::feature_vector(x2, FeatureConfig{d});
      double dot = 0.0;
      for (std::size_t s = 0; s < d; ++s) dot += v1[s] * v2[s];
      const double expected =
          std::pow(std::cos(ttn::kFeatureAngleFactor * (x1 - x2)), static_cast<double>(d - 1));
      CHECK(std::abs(dot - expected) <= 1e-10);
    }
  }
}

TEST_CASE("feature_vector: first component is cos^(d-1) exactly") {
  for (std::size_t d : {2, 4, 9}) {
    const double x = 0.73;
    auto v = ttn::feature_vector(x, FeatureConfig{d});
    CHECK(v[0] == std::pow(std::cos(ttn::kFeatureAngleFactor * x), static_cast<double>(d - 1)));
  }
}

TEST_CASE("feature_vector: domain and config errors") {
  CHECK_THROWS_AS(ttn::feature_vector(-0.1, FeatureConfig{2}), ttn::DomainError);
  CHECK_THROWS_AS(ttn::feature_vector(1.1, FeatureConfig{2}), ttn::DomainError);
  CHECK_THROWS_AS(ttn::feature_vector(0.5, FeatureConfig{1}), ttn::ConfigError);
}

TEST_CASE("vectorize_image: constant images map to repeated vectors") {
  const std::vector<double> zeros(4, 0.0);
  auto img0 = ttn::vectorize_image(zeros, 2, FeatureConfig{2});
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 2; ++c) {
      CHECK(img0.pixel(r, c)[0] == 1.0);
      CHECK(img0.pixel(r, c)[1] == 0.0);
    }

  const std::vector<double> ones(4, 1.0);
  auto img1 = ttn::vectorize_image(ones, 2, FeatureConfig{2});
  for (std::size_t p = 0; p < 4; ++p) {
    CHECK(img1.values[2 * p] == doctest::Approx(std::cos(std::numbers::pi / 4)));
    CHECK(img1.values[2 * p + 1] == doctest::Approx(std::sin(std::numbers::pi / 4)));
  }
}

TEST_CASE("vectorize_image: mixed pixels match per-pixel evaluation") {
  const std::vector<double> pixels = {0.0, 1.0, 0.5, 0.25};
  auto img = ttn::vectorize_image(pixels, 2, FeatureConfig{2});
  for (std::size_t p = 0; p < 4; ++p) {
    auto expected = ttn::feature_vector(pixels[p], FeatureConfig{2});
    CHECK(img.values[2 * p] == expected[0]);
    CHECK(img.values[2 * p + 1] == expected[1]);
  }
}

TEST_CASE("vectorize_image: rejects non-power-of-two sides") {
  const std::vector<double> pixels(9, 0.5);
  CHECK_THROWS_AS(ttn::vectorize_image(pixels, 3, FeatureConfig{2}), ttn::LayoutError);
}
