#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ttn/feature_map.hpp"
#include "ttn/tensor.hpp"

namespace ttn {

// Geometry of the tree: layer k (1-based) holds (side/2^k)^2 tensors, each
// coarse-graining a 2x2 block of the layer below. Layer 0 refers to the
// pixels themselves.
struct TtnLayout {
  std::size_t side = 0;
  std::size_t num_layers = 0;
  std::size_t d = 2;          // input bond dimension
  std::size_t chi = 2;        // virtual bond dimension (uniform)
  std::size_t output_dim = 2; // top bond dimension

  static TtnLayout make(std::size_t side, std::size_t d, std::size_t chi,
                        std::size_t output_dim = 2);

  std::size_t layer_width(std::size_t k) const { return side >> k; }
  std::size_t layer_nodes(std::size_t k) const { return layer_width(k) * layer_width(k); }
  std::size_t up_dim(std::size_t k) const { return k == num_layers ? output_dim : chi; }
  std::size_t down_dim(std::size_t k) const { return k == 1 ? d : chi; }

  // Node ids of the 2x2 child block in layer k-1 (pixel ids for k == 1),
  // in quadrant order: top-left, top-right, bottom-left, bottom-right.
  std::array<std::size_t, 4> child_nodes(std::size_t k, std::size_t m) const;

  bool operator==(const TtnLayout&) const = default;
};

std::string to_string(const TtnLayout& layout);

// Renormalized vectors of one image at one layer; layer 0 is the raw
// feature grid, the top layer is the classifier output.
struct LayerRepresentation {
  std::size_t layer = 0;
  std::size_t width = 0;  // grid edge: side / 2^layer
  std::size_t dim = 0;    // vector length per grid node
  std::vector<double> values;  // (node row-major, component)

  std::span<const double> node(std::size_t m) const {
    return std::span<const double>(values).subspan(m * dim, dim);
  }
};

// The hierarchy of isometric tensors. Each tensor has axes
// (up, child1..child4) with children in quadrant order.
class TtnModel {
 public:
  TtnModel() = default;

  // Every tensor is an exact isometry obtained by orthonormalizing a seeded
  // Gaussian matrix; identical seeds give identical models.
  static TtnModel random(const TtnLayout& layout, std::uint64_t seed);

  const TtnLayout& layout() const { return layout_; }
  bool empty() const { return tensors_.empty(); }

  const Tensor& tensor(std::size_t k, std::size_t m) const;
  void set_tensor(std::size_t k, std::size_t m, Tensor t);

  // Bumped by every set_tensor; lets caches detect staleness.
  std::uint64_t revision() const { return revision_; }

  // Bottom-up contraction of the tree with one vectorized image; returns the
  // output_dim-dimensional predicted label vector.
  std::vector<double> forward(const VectorizedImage& image) const;

  // All intermediate renormalized vectors, layer 0 (input copy) through the
  // top layer (equal to forward output).
  std::vector<LayerRepresentation> layer_representations(const VectorizedImage& image) const;

  // Max over tensors of ||T T^t - I||_max with the down axes grouped.
  double max_isometry_defect() const;

  void save(const std::string& path) const;
  static TtnModel load(const std::string& path);
  static TtnModel load(const std::string& path, const TtnLayout& expected);

 private:
  TtnLayout layout_;
  std::vector<std::vector<Tensor>> tensors_;  // [k-1][m]
  std::uint64_t revision_ = 0;
};

}  // namespace ttn
