#include "ttn/tensor.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ttn/errors.hpp"

namespace ttn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::size_t shape_product(std::span<const std::size_t> shape) {
  std::size_t n = 1;
  for (std::size_t len : shape) n *= len;
  return n;
}

void check_shape(std::span<const std::size_t> shape) {
  for (std::size_t len : shape) {
    if (len == 0) throw ShapeError("tensor axis length must be >= 1");
  }
}

std::string shape_string(std::span<const std::size_t> shape) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ')';
  return out.str();
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {
  check_shape(shape_);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (shape_product(shape_) != data_.size()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_string(shape_));
  }
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

double Tensor::at(std::span<const std::size_t> index) const {
  return const_cast<Tensor*>(this)->at(index);
}

double& Tensor::at(std::span<const std::size_t> index) {
  if (index.size() != rank()) throw ShapeError("index rank does not match tensor rank");
  std::size_t flat = 0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= shape_[i]) throw ShapeError("index out of range on axis " + std::to_string(i));
    flat = flat * shape_[i] + index[i];
  }
  return data_[flat];
}

void Tensor::set_axis_labels(std::vector<std::string> labels) {
  if (!labels.empty() && labels.size() != rank()) {
    throw ShapeError("axis label count does not match tensor rank");
  }
  labels_ = std::move(labels);
}

Tensor Tensor::permuted(std::span<const std::size_t> order) const {
  if (order.size() != rank()) throw ShapeError("permutation rank does not match tensor rank");
  std::vector<bool> seen(rank(), false);
  bool identity = true;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (order[i] >= rank() || seen[order[i]]) throw ShapeError("invalid axis permutation");
    seen[order[i]] = true;
    if (order[i] != i) identity = false;
  }
  if (identity) return *this;

  std::vector<std::size_t> new_shape(rank());
  for (std::size_t i = 0; i < rank(); ++i) new_shape[i] = shape_[order[i]];

  // Stride of each source axis in the flat input.
  std::vector<std::size_t> src_stride(rank(), 1);
  for (std::size_t i = rank(); i-- > 1;) src_stride[i - 1] = src_stride[i] * shape_[i];

  Tensor out(new_shape);
  std::vector<std::size_t> idx(rank(), 0);
  std::size_t src = 0;
  // Strides of the output axes expressed in source-flat units.
  std::vector<std::size_t> step(rank());
  for (std::size_t i = 0; i < rank(); ++i) step[i] = src_stride[order[i]];
  for (std::size_t dst = 0; dst < out.size(); ++dst) {
    out.data_[dst] = data_[src];
    for (std::size_t axis = rank(); axis-- > 0;) {
      if (++idx[axis] < new_shape[axis]) {
        src += step[axis];
        break;
      }
      idx[axis] = 0;
      src -= step[axis] * (new_shape[axis] - 1);
    }
  }
  if (!labels_.empty()) {
    std::vector<std::string> new_labels(rank());
    for (std::size_t i = 0; i < rank(); ++i) new_labels[i] = labels_[order[i]];
    out.labels_ = std::move(new_labels);
  }
  return out;
}

Tensor Tensor::reshaped(std::vector<std::size_t> new_shape) const {
  check_shape(new_shape);
  if (shape_product(new_shape) != size()) {
    throw ShapeError("reshape from " + shape_string(shape_) + " to " +
                     shape_string(new_shape) + " changes element count");
  }
  return Tensor(std::move(new_shape), data_);
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor contract(const Tensor& a, const Tensor& b, std::span<const AxisPair> pairs) {
  std::vector<bool> a_paired(a.rank(), false), b_paired(b.rank(), false);
  for (const auto& [ai, bi] : pairs) {
    if (ai >= a.rank() || bi >= b.rank()) throw ShapeError("contraction axis out of range");
    if (a_paired[ai] || b_paired[bi]) throw ShapeError("contraction axis paired twice");
    if (a.shape()[ai] != b.shape()[bi]) {
      throw ShapeError("contraction bond mismatch: a axis " + std::to_string(ai) + " has length " +
                       std::to_string(a.shape()[ai]) + ", b axis " + std::to_string(bi) +
                       " has length " + std::to_string(b.shape()[bi]));
    }
    a_paired[ai] = true;
    b_paired[bi] = true;
  }

  std::vector<std::size_t> a_order, b_order, out_shape;
  for (std::size_t i = 0; i < a.rank(); ++i)
    if (!a_paired[i]) {
      a_order.push_back(i);
      out_shape.push_back(a.shape()[i]);
    }
  std::size_t bond = 1;
  for (const auto& [ai, bi] : pairs) {
    a_order.push_back(ai);
    bond *= a.shape()[ai];
  }
  std::vector<std::size_t> b_order_front;
  for (const auto& [ai, bi] : pairs) b_order_front.push_back(bi);
  b_order = b_order_front;
  for (std::size_t i = 0; i < b.rank(); ++i)
    if (!b_paired[i]) {
      b_order.push_back(i);
      out_shape.push_back(b.shape()[i]);
    }

  const Tensor ap = a.permuted(a_order);
  const Tensor bp = b.permuted(b_order);

  const std::size_t rows = ap.size() / bond;
  const std::size_t cols = bp.size() / bond;
  Eigen::Map<const RowMat> ma(ap.data().data(), static_cast<Eigen::Index>(rows),
                              static_cast<Eigen::Index>(bond));
  Eigen::Map<const RowMat> mb(bp.data().data(), static_cast<Eigen::Index>(bond),
                              static_cast<Eigen::Index>(cols));
  Tensor out(out_shape);
  Eigen::Map<RowMat> mo(out.data().data(), static_cast<Eigen::Index>(rows),
                        static_cast<Eigen::Index>(cols));
  mo.noalias() = ma * mb;

  if (!a.axis_labels().empty() || !b.axis_labels().empty()) {
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < a.rank(); ++i)
      if (!a_paired[i]) labels.push_back(a.axis_labels().empty() ? "" : a.axis_labels()[i]);
    for (std::size_t i = 0; i < b.rank(); ++i)
      if (!b_paired[i]) labels.push_back(b.axis_labels().empty() ? "" : b.axis_labels()[i]);
    out.set_axis_labels(std::move(labels));
  }
  return out;
}

SvdResult svd(const Tensor& a, std::span<const std::size_t> row_axes) {
  if (!a.all_finite()) throw NumericError("svd input contains non-finite entries");
  std::vector<bool> is_row(a.rank(), false);
  for (std::size_t axis : row_axes) {
    if (axis >= a.rank()) throw ShapeError("svd row axis out of range");
    if (is_row[axis]) throw ShapeError("svd row axis listed twice");
    is_row[axis] = true;
  }
  std::vector<std::size_t> order(row_axes.begin(), row_axes.end());
  std::vector<std::size_t> row_shape, col_shape;
  for (std::size_t axis : row_axes) row_shape.push_back(a.shape()[axis]);
  for (std::size_t i = 0; i < a.rank(); ++i)
    if (!is_row[i]) {
      order.push_back(i);
      col_shape.push_back(a.shape()[i]);
    }

  const Tensor ap = a.permuted(order);
  const std::size_t rows = shape_product(row_shape);
  const std::size_t cols = shape_product(col_shape);
  Eigen::Map<const RowMat> m(ap.data().data(), static_cast<Eigen::Index>(rows),
                             static_cast<Eigen::Index>(cols));

  Eigen::BDCSVD<Eigen::MatrixXd> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const std::size_t r = static_cast<std::size_t>(solver.singularValues().size());

  std::vector<std::size_t> u_shape = row_shape;
  u_shape.push_back(r);
  Tensor u(u_shape);
  Eigen::Map<RowMat>(u.data().data(), static_cast<Eigen::Index>(rows),
                     static_cast<Eigen::Index>(r)) = solver.matrixU();

  std::vector<std::size_t> vt_shape{r};
  vt_shape.insert(vt_shape.end(), col_shape.begin(), col_shape.end());
  Tensor vt(vt_shape);
  Eigen::Map<RowMat>(vt.data().data(), static_cast<Eigen::Index>(r),
                     static_cast<Eigen::Index>(cols)) = solver.matrixV().transpose();

  std::vector<double> s(r);
  for (std::size_t i = 0; i < r; ++i) s[i] = solver.singularValues()(static_cast<Eigen::Index>(i));
  return SvdResult{std::move(u), std::move(s), std::move(vt)};
}

Tensor reshape_group(const Tensor& a, const std::vector<std::vector<std::size_t>>& groups) {
  std::vector<bool> seen(a.rank(), false);
  std::size_t covered = 0;
  std::vector<std::size_t> order;
  std::vector<std::size_t> merged_shape;
  for (const auto& group : groups) {
    if (group.empty()) throw ShapeError("reshape group must not be empty");
    std::size_t len = 1;
    for (std::size_t axis : group) {
      if (axis >= a.rank() || seen[axis]) throw ShapeError("reshape groups must partition the axes");
      seen[axis] = true;
      ++covered;
      order.push_back(axis);
      len *= a.shape()[axis];
    }
    merged_shape.push_back(len);
  }
  if (covered != a.rank()) throw ShapeError("reshape groups must partition the axes");
  Tensor permuted = a.permuted(order);
  permuted.set_axis_labels({});
  return permuted.reshaped(std::move(merged_shape));
}

double tensor_dot(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("tensor_dot requires identical shapes");
  double sum = 0.0;
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) sum += da[i] * db[i];
  return sum;
}

}  // namespace ttn
