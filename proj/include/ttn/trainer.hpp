#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "ttn/dataset.hpp"
#include "ttn/model.hpp"
#include "ttn/tensor.hpp"

namespace ttn {

struct TrainConfig {
  std::size_t max_sweeps = 20;
  double cost_tolerance = 1e-4;  // relative cost-change convergence threshold
  std::uint64_t seed = 0;        // seeds model initialization in the callers
  bool full_batch = true;        // environments always sum over all samples

  void validate() const;
};

struct SweepStats {
  std::size_t sweep = 0;  // 1-based
  double cost = 0.0;
  double train_accuracy = 0.0;
  double seconds = 0.0;
};
using SweepTrace = std::vector<SweepStats>;

// Per-sample renormalized vectors for every node, bottom-up. layers[0][p]
// holds the feature vectors of pixel p; layers[k][m] is up_dim(k) x N.
struct UpCache {
  std::vector<std::vector<Eigen::MatrixXd>> layers;
  std::uint64_t revision = 0;

  const Eigen::MatrixXd& node(std::size_t k, std::size_t m) const { return layers[k][m]; }
};

// Per-sample label-side vectors for every tensor node, top-down. layers[k-1][m]
// is up_dim(k) x N; the root entry equals the label matrix.
struct DownCache {
  std::vector<std::vector<Eigen::MatrixXd>> layers;
  std::uint64_t revision = 0;

  const Eigen::MatrixXd& node(std::size_t k, std::size_t m) const { return layers[k - 1][m]; }
};

// Label matrix with one basis column e_{label} per sample.
Eigen::MatrixXd basis_label_matrix(const Dataset& data, std::size_t dim);

// Binary one-against-all labels: [1,0] for the positive class, [0,1] otherwise.
Eigen::MatrixXd one_vs_all_label_matrix(const Dataset& data, int positive_class);

UpCache up_pass(const TtnModel& model, const Dataset& data);

DownCache down_pass(const TtnModel& model, const Dataset& data, const Eigen::MatrixXd& labels,
                    const UpCache& up);

// Environment tensor of node (k, m): the cost network contracted with the
// node's tensor removed, summed over samples. Same axes as the tensor.
Tensor environment(const TtnModel& model, std::size_t k, std::size_t m, const UpCache& up,
                   const DownCache& down);

struct TensorUpdate {
  Tensor tensor;
  double singular_sum = 0.0;  // sum of environment singular values = -cost at optimum
};

// Optimal isometry for a fixed environment: thin SVD of the environment
// matrix and recombination of its factors. A zero environment keeps the
// previous tensor (any isometry is optimal there).
TensorUpdate update_tensor(const Tensor& current, const Tensor& env);

double cost(const TtnModel& model, const Dataset& data, const Eigen::MatrixXd& labels);

struct UpdateEvent {
  std::size_t layer = 0;
  std::size_t node = 0;
  const Tensor& environment;
  double singular_sum = 0.0;
};
using UpdateObserver = std::function<void(const TtnModel&, const UpdateEvent&)>;

// Alternating single-tensor optimization, sweeping layer 1 to the top with
// ascending node index; caches are kept fresh so every update sees the exact
// current environment. Stops on relative cost change below cost_tolerance or
// after max_sweeps. The observer, when set, runs after every tensor update.
SweepTrace train(TtnModel& model, const Dataset& data, const Eigen::MatrixXd& labels,
                 const TrainConfig& cfg, const UpdateObserver& observer = {});

// Convenience overload: labels taken from data.labels as basis vectors.
SweepTrace train(TtnModel& model, const Dataset& data, const TrainConfig& cfg,
                 const UpdateObserver& observer = {});

// CSV trace with header sweep,cost,train_accuracy,seconds.
void write_trace_csv(const SweepTrace& trace, std::ostream& out);

}  // namespace ttn
