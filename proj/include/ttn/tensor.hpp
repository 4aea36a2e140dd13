#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ttn {

// Dense real tensor with row-major flat storage. Values are immutable in
// spirit: every operation returns a new tensor, so instances can be shared
// across threads freely.
class Tensor {
 public:
  Tensor() = default;

  // Zero-filled tensor of the given shape.
  explicit Tensor(std::vector<std::size_t> shape);

  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  // Rank-0 tensor holding a single value.
  static Tensor scalar(double value);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  double operator[](std::size_t flat) const { return data_[flat]; }
  double& operator[](std::size_t flat) { return data_[flat]; }

  double at(std::span<const std::size_t> index) const;
  double& at(std::span<const std::size_t> index);
  double at(std::initializer_list<std::size_t> index) const {
    return at(std::span<const std::size_t>(index.begin(), index.size()));
  }
  double& at(std::initializer_list<std::size_t> index) {
    return at(std::span<const std::size_t>(index.begin(), index.size()));
  }

  // Optional per-axis tags used for contraction bookkeeping. Empty unless
  // set; operations that keep axes intact carry them along.
  const std::vector<std::string>& axis_labels() const { return labels_; }
  void set_axis_labels(std::vector<std::string> labels);

  // Returns the transposed tensor with axes reordered so that result axis i
  // is this tensor's axis order[i].
  Tensor permuted(std::span<const std::size_t> order) const;
  Tensor permuted(std::initializer_list<std::size_t> order) const {
    return permuted(std::span<const std::size_t>(order.begin(), order.size()));
  }

  // Reinterprets the flat data under a new shape of equal total size.
  Tensor reshaped(std::vector<std::size_t> new_shape) const;

  double max_abs() const;
  bool all_finite() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
  std::vector<std::string> labels_;
};

struct SvdResult {
  Tensor u;               // shape (row axes..., r); orthonormal columns as a matrix
  std::vector<double> s;  // singular values, descending, non-negative
  Tensor vt;              // shape (r, col axes...); orthonormal rows as a matrix
};

using AxisPair = std::pair<std::size_t, std::size_t>;

// Sums products over every paired axis. The result carries a's unpaired axes
// followed by b's unpaired axes.
Tensor contract(const Tensor& a, const Tensor& b, std::span<const AxisPair> pairs);
inline Tensor contract(const Tensor& a, const Tensor& b,
                       std::initializer_list<AxisPair> pairs) {
  return contract(a, b, std::span<const AxisPair>(pairs.begin(), pairs.size()));
}

// Thin SVD of the matrix obtained by grouping row_axes (in the given order)
// against the remaining axes (in their original order).
SvdResult svd(const Tensor& a, std::span<const std::size_t> row_axes);
inline SvdResult svd(const Tensor& a, std::initializer_list<std::size_t> row_axes) {
  return svd(a, std::span<const std::size_t>(row_axes.begin(), row_axes.size()));
}

// Permutes axes to the concatenation of the groups, then merges each group
// into a single axis. groups must partition the axes.
Tensor reshape_group(const Tensor& a, const std::vector<std::vector<std::size_t>>& groups);

// Sum of elementwise products; both tensors must share a shape.
double tensor_dot(const Tensor& a, const Tensor& b);

}  // namespace ttn
