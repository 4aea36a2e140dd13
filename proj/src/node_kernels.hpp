#pragma once

// Internal per-node contraction kernels shared by the model forward pass and
// the trainer caches. Not installed; include from src/ only.

#include <Eigen/Core>
#include <cstddef>
#include <vector>

namespace ttn::detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// out[up] = sum over children of t[up, c1..c4] * c1[..] * c2[..] * c3[..] * c4[..].
// t is the row-major payload of a (up, dn, dn, dn, dn) tensor. Child axes are
// contracted last to first, so each step is a trailing-axis mat-vec.
inline void contract_node_children(const double* t, std::size_t up, std::size_t dn,
                                   const double* const children[4], std::vector<double>& buf_a,
                                   std::vector<double>& buf_b, double* out) {
  buf_a.resize(up * dn * dn * dn);
  buf_b.resize(up * dn * dn);
  const double* src = t;
  std::size_t rows = up * dn * dn * dn;
  for (int j = 3; j >= 0; --j) {
    double* dst = (j == 0) ? out : ((j % 2 == 1) ? buf_a.data() : buf_b.data());
    Eigen::Map<const RowMat> m(src, static_cast<Eigen::Index>(rows),
                               static_cast<Eigen::Index>(dn));
    Eigen::Map<const Eigen::VectorXd> v(children[j], static_cast<Eigen::Index>(dn));
    Eigen::Map<Eigen::VectorXd>(dst, static_cast<Eigen::Index>(rows)).noalias() = m * v;
    src = dst;
    rows /= dn;
  }
}

// Kronecker product of the four child vectors in row-major (c1..c4) order:
// out[((i1*dn+i2)*dn+i3)*dn+i4] = c1[i1] c2[i2] c3[i3] c4[i4].
inline void kron_children(std::size_t dn, const double* const children[4],
                          std::vector<double>& scratch, double* out) {
  const std::size_t dn2 = dn * dn;
  scratch.resize(dn2);
  double* tail = scratch.data();  // c3 (x) c4
  for (std::size_t i = 0; i < dn; ++i)
    for (std::size_t j = 0; j < dn; ++j) tail[i * dn + j] = children[2][i] * children[3][j];
  for (std::size_t i1 = 0; i1 < dn; ++i1) {
    for (std::size_t i2 = 0; i2 < dn; ++i2) {
      const double a = children[0][i1] * children[1][i2];
      double* block = out + (i1 * dn + i2) * dn2;
      for (std::size_t j = 0; j < dn2; ++j) block[j] = a * tail[j];
    }
  }
}

}  // namespace ttn::detail
