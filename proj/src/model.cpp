#include "ttn/model.hpp"

#include <Eigen/Dense>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "node_kernels.hpp"
#include "ttn/errors.hpp"

namespace ttn {

namespace {

using detail::RowMat;

std::size_t log2_exact(std::size_t n) {
  std::size_t k = 0;
  while ((std::size_t{1} << k) < n) ++k;
  return k;
}

// --- seeded Gaussian sampling (stateless mixing, stable across platforms) ---

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : state_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // Box-Muller on uniforms in (0,1].
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

std::uint64_t tensor_seed(std::uint64_t seed, std::size_t k, std::size_t m) {
  return mix64(mix64(seed ^ (0x9E3779B97F4A7C15ULL * (k + 1))) ^ (m + 1));
}

constexpr std::array<std::uint8_t, 4> kMagic = {'T', 'T', 'N', 'M'};
constexpr std::uint32_t kFormatVersion = 1;

}  // namespace

TtnLayout TtnLayout::make(std::size_t side, std::size_t d, std::size_t chi,
                          std::size_t output_dim) {
  if (side < 2 || !is_power_of_two(side)) {
    throw LayoutError("image side must be a power of two >= 2, got " + std::to_string(side));
  }
  if (d < 2) throw LayoutError("input bond dimension must be >= 2, got " + std::to_string(d));
  if (chi < 1) throw LayoutError("virtual bond dimension must be >= 1");
  if (output_dim < 1) throw LayoutError("output bond dimension must be >= 1");

  TtnLayout layout;
  layout.side = side;
  layout.num_layers = log2_exact(side);
  layout.d = d;
  layout.chi = chi;
  layout.output_dim = output_dim;

  for (std::size_t k = 1; k <= layout.num_layers; ++k) {
    const std::size_t dn = layout.down_dim(k);
    const std::size_t up = layout.up_dim(k);
    if (up > dn * dn * dn * dn) {
      throw LayoutError("layer " + std::to_string(k) + " cannot be isometric: up dimension " +
                        std::to_string(up) + " exceeds down dimension " + std::to_string(dn) +
                        "^4");
    }
  }
  return layout;
}

std::array<std::size_t, 4> TtnLayout::child_nodes(std::size_t k, std::size_t m) const {
  const std::size_t w = layer_width(k);
  const std::size_t r = m / w, c = m % w;
  const std::size_t cw = layer_width(k - 1);
  return {(2 * r) * cw + 2 * c, (2 * r) * cw + 2 * c + 1,
          (2 * r + 1) * cw + 2 * c, (2 * r + 1) * cw + 2 * c + 1};
}

std::string to_string(const TtnLayout& layout) {
  std::ostringstream out;
  out << "side=" << layout.side << " layers=" << layout.num_layers << " d=" << layout.d
      << " chi=" << layout.chi << " D=" << layout.output_dim;
  return out.str();
}

TtnModel TtnModel::random(const TtnLayout& layout, std::uint64_t seed) {
  // Re-validate so hand-filled layouts go through the same checks.
  TtnLayout checked = TtnLayout::make(layout.side, layout.d, layout.chi, layout.output_dim);
  if (checked.num_layers != layout.num_layers && layout.num_layers != 0) {
    throw LayoutError("layout layer count is inconsistent with side");
  }

  TtnModel model;
  model.layout_ = checked;
  model.tensors_.resize(checked.num_layers);
  for (std::size_t k = 1; k <= checked.num_layers; ++k) {
    const std::size_t dn = checked.down_dim(k);
    const std::size_t up = checked.up_dim(k);
    const std::size_t down4 = dn * dn * dn * dn;
    model.tensors_[k - 1].reserve(checked.layer_nodes(k));
    for (std::size_t m = 0; m < checked.layer_nodes(k); ++m) {
      GaussianStream gauss(tensor_seed(seed, k, m));
      Eigen::MatrixXd g(down4, up);
      for (Eigen::Index col = 0; col < g.cols(); ++col)
        for (Eigen::Index row = 0; row < g.rows(); ++row) g(row, col) = gauss.next();

      Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
      Eigen::MatrixXd q = qr.householderQ() *
                          Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(down4),
                                                    static_cast<Eigen::Index>(up));
      // Fix the gauge so the factorization (and thus the model) is unique.
      for (Eigen::Index j = 0; j < q.cols(); ++j) {
        if (qr.matrixQR()(j, j) < 0.0) q.col(j) = -q.col(j);
      }

      Tensor t({up, dn, dn, dn, dn});
      Eigen::Map<RowMat>(t.data().data(), static_cast<Eigen::Index>(up),
                         static_cast<Eigen::Index>(down4)) = q.transpose();
      model.tensors_[k - 1].push_back(std::move(t));
    }
  }
  return model;
}

const Tensor& TtnModel::tensor(std::size_t k, std::size_t m) const {
  if (k < 1 || k > layout_.num_layers || m >= layout_.layer_nodes(k)) {
    throw LayoutError("no tensor at layer " + std::to_string(k) + ", node " + std::to_string(m));
  }
  return tensors_[k - 1][m];
}

void TtnModel::set_tensor(std::size_t k, std::size_t m, Tensor t) {
  if (k < 1 || k > layout_.num_layers || m >= layout_.layer_nodes(k)) {
    throw LayoutError("no tensor at layer " + std::to_string(k) + ", node " + std::to_string(m));
  }
  const std::size_t dn = layout_.down_dim(k);
  const std::vector<std::size_t> expected{layout_.up_dim(k), dn, dn, dn, dn};
  if (t.shape() != expected) {
    throw LayoutError("tensor shape does not match layout at layer " + std::to_string(k));
  }
  tensors_[k - 1][m] = std::move(t);
  ++revision_;
}

std::vector<double> TtnModel::forward(const VectorizedImage& image) const {
  auto reps = layer_representations(image);
  const auto& top = reps.back();
  return {top.values.begin(), top.values.end()};
}

std::vector<LayerRepresentation> TtnModel::layer_representations(
    const VectorizedImage& image) const {
  if (empty()) throw LayoutError("model holds no tensors");
  if (image.side != layout_.side || image.d != layout_.d) {
    throw LayoutError("image geometry side=" + std::to_string(image.side) + " d=" +
                      std::to_string(image.d) + " does not match model " + to_string(layout_));
  }

  std::vector<LayerRepresentation> reps;
  reps.reserve(layout_.num_layers + 1);
  reps.push_back(LayerRepresentation{0, layout_.side, layout_.d, image.values});

  std::vector<double> buf_a, buf_b;
  for (std::size_t k = 1; k <= layout_.num_layers; ++k) {
    const auto& below = reps.back();
    LayerRepresentation rep;
    rep.layer = k;
    rep.width = layout_.layer_width(k);
    rep.dim = layout_.up_dim(k);
    rep.values.resize(rep.width * rep.width * rep.dim);
    const std::size_t dn = layout_.down_dim(k);
    for (std::size_t m = 0; m < layout_.layer_nodes(k); ++m) {
      const auto kids = layout_.child_nodes(k, m);
      const double* children[4] = {
          below.values.data() + kids[0] * dn, below.values.data() + kids[1] * dn,
          below.values.data() + kids[2] * dn, below.values.data() + kids[3] * dn};
      detail::contract_node_children(tensor(k, m).data().data(), rep.dim, dn, children, buf_a,
                                     buf_b, rep.values.data() + m * rep.dim);
    }
    reps.push_back(std::move(rep));
  }
  return reps;
}

double TtnModel::max_isometry_defect() const {
  double worst = 0.0;
  for (std::size_t k = 1; k <= layout_.num_layers; ++k) {
    const std::size_t dn = layout_.down_dim(k);
    const std::size_t up = layout_.up_dim(k);
    const std::size_t down4 = dn * dn * dn * dn;
    for (std::size_t m = 0; m < layout_.layer_nodes(k); ++m) {
      Eigen::Map<const RowMat> t(tensor(k, m).data().data(), static_cast<Eigen::Index>(up),
                                 static_cast<Eigen::Index>(down4));
      const double defect =
          (t * t.transpose() - Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(up),
                                                         static_cast<Eigen::Index>(up)))
              .cwiseAbs()
              .maxCoeff();
      worst = std::max(worst, defect);
    }
  }
  return worst;
}

void TtnModel::save(const std::string& path) const {
  if (empty()) throw LayoutError("refusing to save an empty model");
  std::vector<std::uint8_t> bytes;
  bytes.insert(bytes.end(), kMagic.begin(), kMagic.end());
  detail::append_u32(bytes, kFormatVersion);
  detail::append_u32(bytes, static_cast<std::uint32_t>(layout_.side));
  detail::append_u32(bytes, static_cast<std::uint32_t>(layout_.num_layers));
  detail::append_u32(bytes, static_cast<std::uint32_t>(layout_.d));
  detail::append_u32(bytes, static_cast<std::uint32_t>(layout_.chi));
  detail::append_u32(bytes, static_cast<std::uint32_t>(layout_.output_dim));
  for (std::size_t k = 1; k <= layout_.num_layers; ++k) {
    for (std::size_t m = 0; m < layout_.layer_nodes(k); ++m) {
      const Tensor& t = tensor(k, m);
      detail::append_u32(bytes, static_cast<std::uint32_t>(t.rank()));
      for (std::size_t axis : t.shape()) detail::append_u32(bytes, static_cast<std::uint32_t>(axis));
      for (double v : t.data()) detail::append_f64(bytes, v);
    }
  }
  detail::append_u32(bytes, detail::crc32(bytes));

  detail::write_file_bytes(path, bytes);
}

TtnModel TtnModel::load(const std::string& path) {
  const std::vector<std::uint8_t> bytes = detail::read_file_bytes(path);
  detail::Cursor cur{bytes};

  cur.need(4, "magic");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw FormatError("bad magic at byte 0 of " + path + ": expected \"TTNM\"");
  }
  cur.pos = 4;
  const std::uint32_t version = cur.u32("format version");
  if (version != kFormatVersion) {
    throw FormatError("unsupported model format version " + std::to_string(version) +
                      " at byte 4 (expected " + std::to_string(kFormatVersion) + ")");
  }
  const std::uint32_t side = cur.u32("side");
  const std::uint32_t layers = cur.u32("layer count");
  const std::uint32_t d = cur.u32("input bond");
  const std::uint32_t chi = cur.u32("virtual bond");
  const std::uint32_t output_dim = cur.u32("output bond");

  TtnLayout layout;
  try {
    layout = TtnLayout::make(side, d, chi, output_dim);
  } catch (const LayoutError& e) {
    throw FormatError("invalid layout block in " + path + ": " + e.what());
  }
  if (layout.num_layers != layers) {
    throw FormatError("layer count " + std::to_string(layers) + " at byte 12 does not match side " +
                      std::to_string(side));
  }

  TtnModel model;
  model.layout_ = layout;
  model.tensors_.resize(layout.num_layers);
  for (std::size_t k = 1; k <= layout.num_layers; ++k) {
    const std::size_t dn = layout.down_dim(k);
    const std::vector<std::size_t> expected{layout.up_dim(k), dn, dn, dn, dn};
    for (std::size_t m = 0; m < layout.layer_nodes(k); ++m) {
      const std::size_t record_at = cur.pos;
      const std::uint32_t rank = cur.u32("tensor rank");
      if (rank != 5) {
        throw FormatError("tensor record at byte " + std::to_string(record_at) + " has rank " +
                          std::to_string(rank) + ", expected 5");
      }
      std::vector<std::size_t> shape(5);
      for (auto& axis : shape) axis = cur.u32("axis length");
      if (shape != expected) {
        throw FormatError("tensor record at byte " + std::to_string(record_at) +
                          " does not match layout (layer " + std::to_string(k) + ", node " +
                          std::to_string(m) + ")");
      }
      std::size_t count = 1;
      for (std::size_t axis : shape) count *= axis;
      std::vector<double> data(count);
      for (auto& v : data) v = cur.f64("tensor payload");
      model.tensors_[k - 1].emplace_back(std::move(shape), std::move(data));
    }
  }

  detail::finish_crc(cur, path);
  return model;
}

TtnModel TtnModel::load(const std::string& path, const TtnLayout& expected) {
  TtnModel model = load(path);
  if (!(model.layout_ == expected)) {
    throw LayoutError("model file " + path + " has layout [" + to_string(model.layout_) +
                      "], expected [" + to_string(expected) + "]");
  }
  return model;
}

}  // namespace ttn
