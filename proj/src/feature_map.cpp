#include "ttn/feature_map.hpp"

#include <cmath>
#include <string>

#include "ttn/errors.hpp"

namespace ttn {

void FeatureConfig::validate() const {
  if (d < 2) throw ConfigError("feature dimension d must be >= 2, got " + std::to_string(d));
  if (!(angle_factor > 0.0)) throw ConfigError("feature angle factor must be positive");
}

void feature_vector(double x, const FeatureConfig& cfg, std::span<double> out) {
  cfg.validate();
  if (!(x >= 0.0 && x <= 1.0)) {
    throw DomainError("pixel value " + std::to_string(x) + " outside [0,1]");
  }
  if (out.size() != cfg.d) throw ShapeError("feature output span has wrong length");

  const double theta = cfg.angle_factor * x;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const std::size_t n = cfg.d - 1;
  // binom(n, k) built multiplicatively alongside the powers.
  double binom = 1.0;
  for (std::size_t k = 0; k <= n; ++k) {
    out[k] = std::sqrt(binom) * std::pow(c, static_cast<double>(n - k)) *
             std::pow(s, static_cast<double>(k));
    binom = binom * static_cast<double>(n - k) / static_cast<double>(k + 1);
  }
}

std::vector<double> feature_vector(double x, const FeatureConfig& cfg) {
  std::vector<double> out(cfg.d);
  feature_vector(x, cfg, out);
  return out;
}

bool is_power_of_two(std::size_t n) { return n >= 1 && (n & (n - 1)) == 0; }

VectorizedImage vectorize_image(std::span<const double> pixels, std::size_t side,
                                const FeatureConfig& cfg) {
  cfg.validate();
  if (side < 2 || !is_power_of_two(side)) {
    throw LayoutError("image side must be a power of two >= 2, got " + std::to_string(side));
  }
  if (pixels.size() != side * side) {
    throw LayoutError("pixel count " + std::to_string(pixels.size()) +
                      " does not match side " + std::to_string(side));
  }
  VectorizedImage image;
  image.side = side;
  image.d = cfg.d;
  image.values.resize(side * side * cfg.d);
  for (std::size_t p = 0; p < side * side; ++p) {
    feature_vector(pixels[p], cfg, std::span<double>(image.values).subspan(p * cfg.d, cfg.d));
  }
  return image;
}

}  // namespace ttn
