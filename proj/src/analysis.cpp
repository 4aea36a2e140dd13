#include "ttn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "ttn/csv.hpp"
#include "ttn/errors.hpp"
#include "ttn/tensor.hpp"

namespace ttn {

namespace {

constexpr double kIsometryTol = 1e-8;

// Transfer matrix of one leaf node: the two layer-1 tensors contracted over
// their four shared input bonds, leaving (up_a, up_b).
Tensor leaf_transfer(const Tensor& ta, const Tensor& tb) {
  return contract(ta, tb, {{1, 1}, {2, 2}, {3, 3}, {4, 4}});
}

// Propagates four child transfer matrices through a pair of parent tensors.
Tensor merge_transfer(const Tensor& ta, const Tensor& tb, const Tensor& r1, const Tensor& r2,
                      const Tensor& r3, const Tensor& r4) {
  // tb: (up_b, b1..b4): fold each child matrix (a_i, b_i) in over b_i.
  Tensor x = contract(tb, r1, {{1, 1}});  // (up_b, b2, b3, b4, a1)
  x = contract(x, r2, {{1, 1}});          // (up_b, b3, b4, a1, a2)
  x = contract(x, r3, {{1, 1}});          // (up_b, b4, a1, a2, a3)
  x = contract(x, r4, {{1, 1}});          // (up_b, a1, a2, a3, a4)
  return contract(ta, x, {{1, 1}, {2, 2}, {3, 3}, {4, 4}});  // (up_a, up_b)
}

}  // namespace

double ttn_overlap(const TtnModel& a, const TtnModel& b) {
  if (a.empty() || b.empty()) throw DomainError("overlap of an empty model");
  const TtnLayout& la = a.layout();
  const TtnLayout& lb = b.layout();
  if (la.side != lb.side || la.d != lb.d || la.output_dim != lb.output_dim) {
    throw LayoutError("models are not overlap-compatible: [" + to_string(la) + "] vs [" +
                      to_string(lb) + "]");
  }

  std::vector<Tensor> transfer(la.layer_nodes(1));
  for (std::size_t m = 0; m < la.layer_nodes(1); ++m) {
    transfer[m] = leaf_transfer(a.tensor(1, m), b.tensor(1, m));
  }
  for (std::size_t k = 2; k <= la.num_layers; ++k) {
    std::vector<Tensor> next(la.layer_nodes(k));
    for (std::size_t m = 0; m < la.layer_nodes(k); ++m) {
      const auto kids = la.child_nodes(k, m);
      next[m] = merge_transfer(a.tensor(k, m), b.tensor(k, m), transfer[kids[0]],
                               transfer[kids[1]], transfer[kids[2]], transfer[kids[3]]);
    }
    transfer = std::move(next);
  }
  // Close with the yes label on both output bonds.
  return std::abs(transfer[0].at({0, 0}));
}

Eigen::MatrixXd fidelity_matrix(const Ensemble& ensemble) {
  ensemble.validate();
  if (ensemble.size() < 2) throw DomainError("fidelity matrix needs at least 2 classes");
  const Eigen::Index p = static_cast<Eigen::Index>(ensemble.size());
  Eigen::MatrixXd f(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    f(i, i) = ttn_overlap(ensemble.members[static_cast<std::size_t>(i)].model,
                          ensemble.members[static_cast<std::size_t>(i)].model);
    for (Eigen::Index j = i + 1; j < p; ++j) {
      const double value = ttn_overlap(ensemble.members[static_cast<std::size_t>(i)].model,
                                       ensemble.members[static_cast<std::size_t>(j)].model);
      f(i, j) = value;
      f(j, i) = value;
    }
  }
  return f;
}

EntanglementSpectrum entanglement_spectrum(const TtnModel& model, Cut cut) {
  if (model.empty()) throw DomainError("entanglement of an empty model");
  if (model.max_isometry_defect() > kIsometryTol) {
    throw DomainError("entanglement spectrum requires an isometric model; defect " +
                      std::to_string(model.max_isometry_defect()));
  }
  const TtnLayout& layout = model.layout();
  const std::size_t top = layout.num_layers;

  // M = top tensor contracted with the yes label over its up axis; axes are
  // the four quadrants (TL, TR, BL, BR).
  Tensor yes({layout.output_dim});
  yes[0] = 1.0;
  const Tensor m = contract(yes, model.tensor(top, 0), {{0, 0}});

  // Up-down keeps the two upper quadrants on one side; left-right keeps the
  // two left quadrants.
  const std::vector<std::vector<std::size_t>> groups =
      cut == Cut::UpDown ? std::vector<std::vector<std::size_t>>{{0, 1}, {2, 3}}
                         : std::vector<std::vector<std::size_t>>{{0, 2}, {1, 3}};
  const Tensor grouped = reshape_group(m, groups);
  SvdResult factors = svd(grouped, {0});

  EntanglementSpectrum result;
  result.spectrum = std::move(factors.s);
  double squared = 0.0;
  for (double s : result.spectrum) squared += s * s;
  result.squared_sum_raw = squared;
  if (squared <= 0.0) throw NumericError("entanglement spectrum vanishes");
  const double scale = 1.0 / std::sqrt(squared);
  double entropy = 0.0;
  for (double& s : result.spectrum) {
    s *= scale;
    const double p = s * s;
    if (p > 0.0) entropy -= p * std::log(p);
  }
  result.entropy = entropy;
  return result;
}

EntanglementReport entanglement_report(const Ensemble& ensemble) {
  ensemble.validate();
  EntanglementReport report;
  report.reserve(ensemble.size());
  for (const auto& member : ensemble.members) {
    report.push_back(ClassEntanglement{member.class_id,
                                       entanglement_spectrum(member.model, Cut::UpDown),
                                       entanglement_spectrum(member.model, Cut::LeftRight)});
  }
  return report;
}

void write_fidelity_csv(const Eigen::MatrixXd& fidelity, const std::vector<int>& classes,
                        std::ostream& out) {
  out << "class";
  for (int c : classes) out << ",class_" << c;
  out << '\n';
  for (std::size_t i = 0; i < classes.size(); ++i) {
    out << classes[i];
    for (std::size_t j = 0; j < classes.size(); ++j) {
      out << ',' << csv_real(fidelity(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    out << '\n';
  }
}

void write_entanglement_csv(const EntanglementReport& report, std::ostream& out) {
  std::size_t max_len = 0;
  for (const auto& row : report) {
    max_len = std::max({max_len, row.up_down.spectrum.size(), row.left_right.spectrum.size()});
  }
  out << "class,cut,entropy";
  for (std::size_t i = 0; i < max_len; ++i) out << ",lambda_" << i + 1;
  out << '\n';
  auto emit = [&](int class_id, const char* cut, const EntanglementSpectrum& s) {
    out << class_id << ',' << cut << ',' << csv_real(s.entropy);
    for (std::size_t i = 0; i < max_len; ++i) {
      out << ',';
      if (i < s.spectrum.size()) out << csv_real(s.spectrum[i]);
    }
    out << '\n';
  };
  for (const auto& row : report) {
    emit(row.class_id, "up-down", row.up_down);
    emit(row.class_id, "left-right", row.left_right);
  }
}

void print_fidelity_heatmap(const Eigen::MatrixXd& fidelity, const std::vector<int>& classes,
                            std::ostream& out) {
  // One glyph per decade below 1: '#' ~ O(1) down to '.' ~ O(1e-5) and ' ' smaller.
  static const char glyphs[] = "#*+=-. ";
  out << "     ";
  for (int c : classes) out << ' ' << c;
  out << '\n';
  for (std::size_t i = 0; i < classes.size(); ++i) {
    out << std::setw(4) << classes[i] << "  ";
    for (std::size_t j = 0; j < classes.size(); ++j) {
      const double v =
          fidelity(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      int decade = v <= 0.0 ? 6 : static_cast<int>(std::min(6.0, -std::log10(std::max(v, 1e-12))));
      decade = std::clamp(decade, 0, 6);
      out << glyphs[decade] << ' ';
    }
    out << '\n';
  }
}

}  // namespace ttn
