#pragma once

#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace ttn {

// Angle per unit pixel value in the trigonometric feature map. The map takes
// a normalized pixel x in [0,1] to the angle x * angle_factor.
inline constexpr double kFeatureAngleFactor = std::numbers::pi / 4.0;

struct FeatureConfig {
  std::size_t d = 2;                          // local feature dimension
  double angle_factor = kFeatureAngleFactor;  // radians per unit pixel

  void validate() const;
};

// Maps one normalized pixel to a unit vector of length cfg.d:
//   v[s] = sqrt(binom(d-1, s)) * cos(theta)^(d-1-s) * sin(theta)^s,
// with theta = x * angle_factor and s = 0..d-1.
std::vector<double> feature_vector(double x, const FeatureConfig& cfg);
void feature_vector(double x, const FeatureConfig& cfg, std::span<double> out);

// A whole image mapped pixel-by-pixel: side*side unit vectors of length d,
// stored row-major as (row, col, component).
struct VectorizedImage {
  std::size_t side = 0;
  std::size_t d = 0;
  std::vector<double> values;

  std::span<const double> pixel(std::size_t row, std::size_t col) const {
    return std::span<const double>(values).subspan((row * side + col) * d, d);
  }
};

// pixels holds side*side normalized values in [0,1], row-major.
VectorizedImage vectorize_image(std::span<const double> pixels, std::size_t side,
                                const FeatureConfig& cfg);

bool is_power_of_two(std::size_t n);

}  // namespace ttn
