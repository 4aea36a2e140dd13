#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <vector>

#include "ttn/ensemble.hpp"
#include "ttn/model.hpp"

namespace ttn {

// |<psi_a|psi_b>| between the class states of two models, contracted
// layer-by-layer through per-node transfer matrices. The models must share
// side and input bond dimension; virtual bonds may differ.
double ttn_overlap(const TtnModel& a, const TtnModel& b);

// Symmetric matrix of pairwise class-state fidelities, unit diagonal; rows
// and columns follow ensemble member order.
Eigen::MatrixXd fidelity_matrix(const Ensemble& ensemble);

// Spatial bipartition of the image: upper vs lower half, or left vs right.
enum class Cut { UpDown, LeftRight };

struct EntanglementSpectrum {
  std::vector<double> spectrum;  // descending, normalized so sum of squares = 1
  double entropy = 0.0;          // -sum lambda^2 ln lambda^2
  double squared_sum_raw = 0.0;  // sum of squared singular values before normalization
};

// Schmidt spectrum of the class state across the cut: the singular values of
// the top tensor contracted with the yes label, with the four quadrant axes
// grouped by the cut. Requires an isometric model; the identification with
// the state's Schmidt spectrum holds only then.
EntanglementSpectrum entanglement_spectrum(const TtnModel& model, Cut cut);

struct ClassEntanglement {
  int class_id = 0;
  EntanglementSpectrum up_down;
  EntanglementSpectrum left_right;
};
using EntanglementReport = std::vector<ClassEntanglement>;

EntanglementReport entanglement_report(const Ensemble& ensemble);

void write_fidelity_csv(const Eigen::MatrixXd& fidelity, const std::vector<int>& classes,
                        std::ostream& out);
void write_entanglement_csv(const EntanglementReport& report, std::ostream& out);

// Coarse text rendering of the fidelity matrix on a log scale.
void print_fidelity_heatmap(const Eigen::MatrixXd& fidelity, const std::vector<int>& classes,
                            std::ostream& out);

}  // namespace ttn
