#include "ttn/trainer.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <array>
#include <chrono>
#include <cmath>
#include <ostream>

#include "node_kernels.hpp"
#include "ttn/csv.hpp"
#include "ttn/errors.hpp"
#include "ttn/runtime.hpp"

namespace ttn {

namespace {

using detail::RowMat;

constexpr double kIsometryTol = 1e-8;

void check_compatible(const TtnModel& model, const Dataset& data, const Eigen::MatrixXd& labels) {
  if (model.empty()) throw DomainError("model holds no tensors");
  if (data.size() == 0) throw DomainError("dataset is empty");
  const TtnLayout& layout = model.layout();
  if (data.side != layout.side || data.d != layout.d) {
    throw LayoutError("dataset geometry side=" + std::to_string(data.side) + " d=" +
                      std::to_string(data.d) + " does not match model " + to_string(layout));
  }
  if (static_cast<std::size_t>(labels.rows()) != layout.output_dim ||
      static_cast<std::size_t>(labels.cols()) != data.size()) {
    throw ShapeError("label matrix must be output_dim x sample_count");
  }
}

std::size_t parent_node(const TtnLayout& layout, std::size_t k, std::size_t m) {
  const std::size_t w = layout.layer_width(k);
  const std::size_t r = m / w, c = m % w;
  return (r / 2) * (w / 2) + (c / 2);
}

// Quadrant position (0..3, TL TR BL BR) of node (k, m) within its parent.
std::size_t quadrant_in_parent(const TtnLayout& layout, std::size_t k, std::size_t m) {
  const std::size_t w = layout.layer_width(k);
  const std::size_t r = m / w, c = m % w;
  return (r % 2) * 2 + (c % 2);
}

// Recomputes the cached up vectors of node (k, m) for all samples.
void refresh_up_node(const TtnModel& model, UpCache& up, std::size_t k, std::size_t m) {
  const TtnLayout& layout = model.layout();
  const std::size_t dn = layout.down_dim(k);
  const std::size_t up_dim = layout.up_dim(k);
  const auto kids = layout.child_nodes(k, m);
  const Eigen::MatrixXd& c0 = up.layers[k - 1][kids[0]];
  const Eigen::MatrixXd& c1 = up.layers[k - 1][kids[1]];
  const Eigen::MatrixXd& c2 = up.layers[k - 1][kids[2]];
  const Eigen::MatrixXd& c3 = up.layers[k - 1][kids[3]];
  Eigen::MatrixXd& dst = up.layers[k][m];
  const std::size_t n_samples = static_cast<std::size_t>(c0.cols());
  if (dst.rows() != static_cast<Eigen::Index>(up_dim) ||
      dst.cols() != static_cast<Eigen::Index>(n_samples)) {
    dst.resize(static_cast<Eigen::Index>(up_dim), static_cast<Eigen::Index>(n_samples));
  }
  const double* t = model.tensor(k, m).data().data();

  parallel_tasks(block_count(n_samples), [&](std::size_t block) {
    const std::size_t begin = block * kSampleBlock;
    const std::size_t end = std::min(begin + kSampleBlock, n_samples);
    std::vector<double> buf_a, buf_b;
    for (std::size_t n = begin; n < end; ++n) {
      const double* children[4] = {c0.col(static_cast<Eigen::Index>(n)).data(),
                                   c1.col(static_cast<Eigen::Index>(n)).data(),
                                   c2.col(static_cast<Eigen::Index>(n)).data(),
                                   c3.col(static_cast<Eigen::Index>(n)).data()};
      detail::contract_node_children(t, up_dim, dn, children, buf_a, buf_b,
                                     dst.col(static_cast<Eigen::Index>(n)).data());
    }
  });
}

// Recomputes (k, m) and every node above it, bottom-up.
void refresh_up_path(const TtnModel& model, UpCache& up, std::size_t k, std::size_t m) {
  const TtnLayout& layout = model.layout();
  std::size_t layer = k, node = m;
  for (;;) {
    refresh_up_node(model, up, layer, node);
    if (layer == layout.num_layers) break;
    node = parent_node(layout, layer, node);
    ++layer;
  }
  up.revision = model.revision();
}

// Applies one top-down step: given the parent's down matrix, produce the down
// matrix of its child in quadrant position `quadrant`, contracting the other
// three children's cached up vectors.
Eigen::MatrixXd down_step(const TtnModel& model, const UpCache& up, std::size_t parent_layer,
                          std::size_t parent_node_idx, std::size_t quadrant,
                          const Eigen::MatrixXd& parent_down) {
  const TtnLayout& layout = model.layout();
  const std::size_t dn = layout.down_dim(parent_layer);
  const std::size_t up_dim = layout.up_dim(parent_layer);
  const std::size_t dn4 = dn * dn * dn * dn;
  const auto kids = layout.child_nodes(parent_layer, parent_node_idx);
  const std::size_t n_samples = static_cast<std::size_t>(parent_down.cols());

  std::array<const Eigen::MatrixXd*, 4> child_up{};
  for (std::size_t j = 0; j < 4; ++j) child_up[j] = &up.layers[parent_layer - 1][kids[j]];

  Eigen::Map<const RowMat> t_mat(model.tensor(parent_layer, parent_node_idx).data().data(),
                                 static_cast<Eigen::Index>(up_dim),
                                 static_cast<Eigen::Index>(dn4));

  Eigen::MatrixXd out(static_cast<Eigen::Index>(dn), static_cast<Eigen::Index>(n_samples));
  parallel_tasks(block_count(n_samples), [&](std::size_t block) {
    const std::size_t begin = block * kSampleBlock;
    const std::size_t end = std::min(begin + kSampleBlock, n_samples);
    const std::size_t count = end - begin;
    // All samples of the block at once: g = T^t * down.
    Eigen::MatrixXd g(static_cast<Eigen::Index>(dn4), static_cast<Eigen::Index>(count));
    g.noalias() = t_mat.transpose() *
                  parent_down.middleCols(static_cast<Eigen::Index>(begin),
                                         static_cast<Eigen::Index>(count));
    std::vector<double> buf_a(dn * dn * dn), buf_b(dn * dn);
    for (std::size_t n = 0; n < count; ++n) {
      const double* cur = g.col(static_cast<Eigen::Index>(n)).data();
      std::size_t elems = dn4;
      int  toggle = 0;
      // Front axes before the kept quadrant: out(rest) = sum_i v[i] cur[i, rest].
      for (std::size_t axis = 0; axis < quadrant; ++axis) {
        const std::size_t rest = elems / dn;
        const double* v = child_up[axis]->col(static_cast<Eigen::Index>(begin + n)).data();
        double* dst = (toggle++ % 2 == 0) ? buf_a.data() : buf_b.data();
        Eigen::Map<Eigen::VectorXd>(dst, static_cast<Eigen::Index>(rest)).noalias() =
            Eigen::Map<const RowMat>(cur, static_cast<Eigen::Index>(dn),
                                     static_cast<Eigen::Index>(rest))
                .transpose() *
            Eigen::Map<const Eigen::VectorXd>(v, static_cast<Eigen::Index>(dn));
        cur = dst;
        elems = rest;
      }
      // Back axes after the kept quadrant, last first.
      for (std::size_t axis = 3; axis > quadrant; --axis) {
        const std::size_t rest = elems / dn;
        const double* v = child_up[axis]->col(static_cast<Eigen::Index>(begin + n)).data();
        double* dst = (toggle++ % 2 == 0) ? buf_a.data() : buf_b.data();
        Eigen::Map<Eigen::VectorXd>(dst, static_cast<Eigen::Index>(rest)).noalias() =
            Eigen::Map<const RowMat>(cur, static_cast<Eigen::Index>(rest),
                                     static_cast<Eigen::Index>(dn)) *
            Eigen::Map<const Eigen::VectorXd>(v, static_cast<Eigen::Index>(dn));
        cur = dst;
        elems = rest;
      }
      out.col(static_cast<Eigen::Index>(begin + n)) =
          Eigen::Map<const Eigen::VectorXd>(cur, static_cast<Eigen::Index>(dn));
    }
  });
  return out;
}

// Fresh down matrix of node (k, m), recomputed from the root through the
// ancestor chain using the current up cache.
Eigen::MatrixXd down_for_node(const TtnModel& model, const UpCache& up,
                              const Eigen::MatrixXd& labels, std::size_t k, std::size_t m) {
  const TtnLayout& layout = model.layout();
  const std::size_t hops = layout.num_layers - k;
  // Ancestor node index at each layer from k up to the root.
  std::vector<std::size_t> chain(hops + 1);
  chain[0] = m;
  for (std::size_t i = 0; i < hops; ++i) chain[i + 1] = parent_node(layout, k + i, chain[i]);

  Eigen::MatrixXd down = labels;
  for (std::size_t i = hops; i-- > 0;) {
    const std::size_t parent_layer = k + i + 1;
    const std::size_t child_layer = k + i;
    const std::size_t quadrant = quadrant_in_parent(layout, child_layer, chain[i]);
    down = down_step(model, up, parent_layer, chain[i + 1], quadrant, down);
  }
  return down;
}

// E[up, c1..c4] = sum_n down[:, n] (x) c1[:, n] (x) ... (x) c4[:, n], assembled
// as one GEMM per fixed sample block and reduced in block order so the result
// is independent of the worker count.
Tensor environment_from(const Eigen::MatrixXd& down,
                        const std::array<const Eigen::MatrixXd*, 4>& children, std::size_t up_dim,
                        std::size_t dn) {
  const std::size_t dn4 = dn * dn * dn * dn;
  const std::size_t n_samples = static_cast<std::size_t>(down.cols());
  const std::size_t blocks = block_count(n_samples);

  std::vector<Eigen::MatrixXd> partial(blocks);
  parallel_tasks(blocks, [&](std::size_t block) {
    const std::size_t begin = block * kSampleBlock;
    const std::size_t end = std::min(begin + kSampleBlock, n_samples);
    const std::size_t count = end - begin;
    Eigen::MatrixXd w(static_cast<Eigen::Index>(dn4), static_cast<Eigen::Index>(count));
    std::vector<double> scratch;
    for (std::size_t n = 0; n < count; ++n) {
      const double* cols[4];
      for (std::size_t j = 0; j < 4; ++j)
        cols[j] = children[j]->col(static_cast<Eigen::Index>(begin + n)).data();
      detail::kron_children(dn, cols, scratch, w.col(static_cast<Eigen::Index>(n)).data());
    }
    partial[block].noalias() =
        down.middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count)) *
        w.transpose();
  });

  Tensor env({up_dim, dn, dn, dn, dn});
  Eigen::Map<RowMat> acc(env.data().data(), static_cast<Eigen::Index>(up_dim),
                         static_cast<Eigen::Index>(dn4));
  for (std::size_t block = 0; block < blocks; ++block) acc += partial[block];
  return env;
}

std::array<const Eigen::MatrixXd*, 4> child_matrices(const TtnModel& model, const UpCache& up,
                                                     std::size_t k, std::size_t m) {
  const auto kids = model.layout().child_nodes(k, m);
  return {&up.layers[k - 1][kids[0]], &up.layers[k - 1][kids[1]], &up.layers[k - 1][kids[2]],
          &up.layers[k - 1][kids[3]]};
}

double accuracy_from_outputs(const Eigen::MatrixXd& outputs, const Eigen::MatrixXd& labels) {
  std::size_t correct = 0;
  for (Eigen::Index n = 0; n < outputs.cols(); ++n) {
    Eigen::Index pred = 0, truth = 0;
    outputs.col(n).cwiseAbs().maxCoeff(&pred);
    labels.col(n).maxCoeff(&truth);
    if (pred == truth) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(outputs.cols());
}

}  // namespace

void TrainConfig::validate() const {
  if (max_sweeps < 1) throw ConfigError("max_sweeps must be >= 1");
  if (!(cost_tolerance > 0.0)) throw ConfigError("cost_tolerance must be positive");
  if (!full_batch) throw ConfigError("only full-batch training is supported");
}

Eigen::MatrixXd basis_label_matrix(const Dataset& data, std::size_t dim) {
  Eigen::MatrixXd labels = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                                 static_cast<Eigen::Index>(data.size()));
  for (std::size_t n = 0; n < data.size(); ++n) {
    const int label = data.labels[n];
    if (label < 0 || static_cast<std::size_t>(label) >= dim) {
      throw DomainError("label " + std::to_string(label) + " outside output dimension " +
                        std::to_string(dim));
    }
    labels(label, static_cast<Eigen::Index>(n)) = 1.0;
  }
  return labels;
}

Eigen::MatrixXd one_vs_all_label_matrix(const Dataset& data, int positive_class) {
  Eigen::MatrixXd labels = Eigen::MatrixXd::Zero(2, static_cast<Eigen::Index>(data.size()));
  for (std::size_t n = 0; n < data.size(); ++n) {
    labels(data.labels[n] == positive_class ? 0 : 1, static_cast<Eigen::Index>(n)) = 1.0;
  }
  return labels;
}

UpCache up_pass(const TtnModel& model, const Dataset& data) {
  if (model.empty()) throw DomainError("model holds no tensors");
  if (data.size() == 0) throw DomainError("dataset is empty");
  const TtnLayout& layout = model.layout();
  if (data.side != layout.side || data.d != layout.d) {
    throw LayoutError("dataset geometry does not match model " + to_string(layout));
  }
  const std::size_t n_samples = data.size();

  UpCache up;
  up.layers.resize(layout.num_layers + 1);

  // Layer 0: one d x N matrix per pixel.
  const std::size_t pixels = layout.side * layout.side;
  up.layers[0].resize(pixels);
  for (std::size_t p = 0; p < pixels; ++p) {
    up.layers[0][p].resize(static_cast<Eigen::Index>(layout.d),
                           static_cast<Eigen::Index>(n_samples));
  }
  parallel_tasks(block_count(n_samples), [&](std::size_t block) {
    const std::size_t begin = block * kSampleBlock;
    const std::size_t end = std::min(begin + kSampleBlock, n_samples);
    for (std::size_t n = begin; n < end; ++n) {
      const auto& values = data.samples[n].values;
      for (std::size_t p = 0; p < pixels; ++p) {
        for (std::size_t s = 0; s < layout.d; ++s) {
          up.layers[0][p](static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(n)) =
              values[p * layout.d + s];
        }
      }
    }
  });

  for (std::size_t k = 1; k <= layout.num_layers; ++k) {
    up.layers[k].resize(layout.layer_nodes(k));
    for (std::size_t m = 0; m < layout.layer_nodes(k); ++m) refresh_up_node(model, up, k, m);
  }
  up.revision = model.revision();
  return up;
}

DownCache down_pass(const TtnModel& model, const Dataset& data, const Eigen::MatrixXd& labels,
                    const UpCache& up) {
  check_compatible(model, data, labels);
  if (up.revision != model.revision()) {
    throw CacheError("up cache is stale: model changed since it was built");
  }
  const TtnLayout& layout = model.layout();

  DownCache down;
  down.layers.resize(layout.num_layers);
  down.layers[layout.num_layers - 1] = {labels};
  for (std::size_t k = layout.num_layers; k >= 2; --k) {
    down.layers[k - 2].resize(layout.layer_nodes(k - 1));
    for (std::size_t m = 0; m < layout.layer_nodes(k); ++m) {
      const auto kids = layout.child_nodes(k, m);
      for (std::size_t q = 0; q < 4; ++q) {
        down.layers[k - 2][kids[q]] = down_step(model, up, k, m, q, down.layers[k - 1][m]);
      }
    }
  }
  down.revision = model.revision();
  return down;
}

Tensor environment(const TtnModel& model, std::size_t k, std::size_t m, const UpCache& up,
                   const DownCache& down) {
  if (up.revision != model.revision() || down.revision != model.revision()) {
    throw CacheError("cache is stale: model changed since it was built");
  }
  const TtnLayout& layout = model.layout();
  if (k < 1 || k > layout.num_layers || m >= layout.layer_nodes(k)) {
    throw LayoutError("no tensor at layer " + std::to_string(k) + ", node " + std::to_string(m));
  }
  return environment_from(down.node(k, m), child_matrices(model, up, k, m), layout.up_dim(k),
                          layout.down_dim(k));
}

TensorUpdate update_tensor(const Tensor& current, const Tensor& env) {
  if (env.shape() != current.shape()) {
    throw ShapeError("environment shape does not match tensor shape");
  }
  if (env.rank() < 2) throw ShapeError("environment must have an up axis and down axes");
  if (!env.all_finite()) throw NumericError("environment contains non-finite entries");

  const std::size_t up_dim = env.shape()[0];
  std::size_t down_total = 1;
  for (std::size_t i = 1; i < env.rank(); ++i) down_total *= env.shape()[i];
  if (up_dim > down_total) {
    throw ShapeError("no isometry exists: up dimension exceeds total down dimension");
  }
  if (env.max_abs() == 0.0) {
    // Any isometry is optimal for a zero environment; keep the current one.
    return TensorUpdate{current, 0.0};
  }

  Eigen::Map<const RowMat> e(env.data().data(), static_cast<Eigen::Index>(up_dim),
                             static_cast<Eigen::Index>(down_total));
  Eigen::BDCSVD<Eigen::MatrixXd> solver(e, Eigen::ComputeThinU | Eigen::ComputeThinV);

  Tensor next(std::vector<std::size_t>(env.shape()));
  Eigen::Map<RowMat> t(next.data().data(), static_cast<Eigen::Index>(up_dim),
                       static_cast<Eigen::Index>(down_total));
  t.noalias() = solver.matrixU() * solver.matrixV().transpose();
  return TensorUpdate{std::move(next), solver.singularValues().sum()};
}

double cost(const TtnModel& model, const Dataset& data, const Eigen::MatrixXd& labels) {
  check_compatible(model, data, labels);
  UpCache up = up_pass(model, data);
  const Eigen::MatrixXd& top = up.layers[model.layout().num_layers][0];
  return -top.cwiseProduct(labels).sum();
}

SweepTrace train(TtnModel& model, const Dataset& data, const Eigen::MatrixXd& labels,
                 const TrainConfig& cfg, const UpdateObserver& observer) {
  cfg.validate();
  check_compatible(model, data, labels);
  if (model.max_isometry_defect() > kIsometryTol) {
    throw DomainError("initial model is not isometric");
  }

  const TtnLayout& layout = model.layout();
  UpCache up = up_pass(model, data);

  SweepTrace trace;
  double prev_cost = 0.0;
  for (std::size_t sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t k = 1; k <= layout.num_layers; ++k) {
      for (std::size_t m = 0; m < layout.layer_nodes(k); ++m) {
        const Eigen::MatrixXd down = down_for_node(model, up, labels, k, m);
        const Tensor env = environment_from(down, child_matrices(model, up, k, m),
                                            layout.up_dim(k), layout.down_dim(k));
        TensorUpdate update = [&] {
          try {
            return update_tensor(model.tensor(k, m), env);
          } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) + " at sweep " + std::to_string(sweep));
          }
        }();
        const double singular_sum = update.singular_sum;
        model.set_tensor(k, m, std::move(update.tensor));
        refresh_up_path(model, up, k, m);
        if (observer) observer(model, UpdateEvent{k, m, env, singular_sum});
      }
    }

    const Eigen::MatrixXd& top = up.layers[layout.num_layers][0];
    const double sweep_cost = -top.cwiseProduct(labels).sum();
    if (!std::isfinite(sweep_cost)) {
      throw NumericError("cost diverged (non-finite) at sweep " + std::to_string(sweep));
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    trace.push_back(SweepStats{sweep, sweep_cost, accuracy_from_outputs(top, labels), seconds});

    if (sweep > 1) {
      const double rel = std::abs(sweep_cost - prev_cost) /
                         std::max(std::abs(prev_cost), 1e-300);
      if (rel < cfg.cost_tolerance) break;
    }
    prev_cost = sweep_cost;
  }
  return trace;
}

SweepTrace train(TtnModel& model, const Dataset& data, const TrainConfig& cfg,
                 const UpdateObserver& observer) {
  return train(model, data, basis_label_matrix(data, model.layout().output_dim), cfg, observer);
}

void write_trace_csv(const SweepTrace& trace, std::ostream& out) {
  out << "sweep,cost,train_accuracy,seconds\n";
  for (const auto& row : trace) {
    out << row.sweep << ',' << csv_real(row.cost) << ',' << csv_real(row.train_accuracy) << ','
        << csv_real(row.seconds) << '\n';
  }
}

}  // namespace ttn
