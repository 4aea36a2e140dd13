#include "ttn/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <set>

#include "ttn/csv.hpp"
#include "ttn/errors.hpp"
#include "ttn/runtime.hpp"

namespace ttn {

namespace {

std::uint64_t class_seed(std::uint64_t base, int class_id) {
  std::uint64_t x = base ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(class_id) + 2));
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

void Ensemble::validate() const {
  if (members.empty()) throw DomainError("ensemble has no members");
  std::set<int> ids;
  for (const auto& member : members) {
    if (!ids.insert(member.class_id).second) {
      throw DomainError("duplicate class id " + std::to_string(member.class_id) + " in ensemble");
    }
    const TtnLayout& layout = member.model.layout();
    const TtnLayout& first = members.front().model.layout();
    if (layout.side != first.side || layout.d != first.d) {
      throw LayoutError("ensemble members must share side and input bond dimension");
    }
  }
}

std::vector<ClassTrainSpec> uniform_specs(const std::vector<int>& classes,
                                          const TtnLayout& layout, const TrainConfig& config) {
  std::vector<ClassTrainSpec> specs;
  specs.reserve(classes.size());
  for (int id : classes) {
    ClassTrainSpec spec{id, layout, config};
    spec.config.seed = class_seed(config.seed, id);
    specs.push_back(spec);
  }
  return specs;
}

EnsembleTrainResult train_one_vs_all(const Dataset& train_data,
                                     const std::vector<ClassTrainSpec>& specs) {
  if (specs.size() < 2) throw DomainError("one-against-all needs at least 2 classes");
  for (const auto& spec : specs) {
    const bool has_positive = std::any_of(train_data.labels.begin(), train_data.labels.end(),
                                          [&](int l) { return l == spec.class_id; });
    if (!has_positive) {
      throw DomainError("class " + std::to_string(spec.class_id) + " has no training samples");
    }
  }

  EnsembleTrainResult result;
  for (const auto& spec : specs) {
    TtnModel model = TtnModel::random(spec.layout, spec.config.seed);
    const Eigen::MatrixXd labels = one_vs_all_label_matrix(train_data, spec.class_id);
    result.traces.push_back(train(model, train_data, labels, spec.config));
    result.ensemble.members.push_back(ClassModel{spec.class_id, std::move(model)});
  }
  result.ensemble.validate();
  return result;
}

double class_state_overlap(const TtnModel& model, const VectorizedImage& image) {
  return std::abs(model.forward(image)[0]);
}

Prediction predict(const Ensemble& ensemble, const VectorizedImage& image) {
  if (ensemble.members.empty()) throw DomainError("ensemble has no members");
  Prediction pred;
  pred.fidelities.reserve(ensemble.size());
  for (const auto& member : ensemble.members) {
    pred.fidelities.push_back(class_state_overlap(member.model, image));
  }
  double best = -1.0;
  int best_id = 0;
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const int id = ensemble.members[i].class_id;
    const double f = pred.fidelities[i];
    if (f > best || (f == best && id < best_id)) {
      best = f;
      best_id = id;
    }
  }
  pred.class_id = best_id;
  return pred;
}

Evaluation evaluate(const Ensemble& ensemble, const Dataset& data) {
  ensemble.validate();
  if (data.size() == 0) throw DomainError("dataset is empty");

  std::vector<int> classes;
  classes.reserve(ensemble.size());
  for (const auto& member : ensemble.members) classes.push_back(member.class_id);

  auto class_row = [&](int label) {
    for (std::size_t i = 0; i < classes.size(); ++i)
      if (classes[i] == label) return i;
    throw DomainError("sample label " + std::to_string(label) + " is not covered by the ensemble");
  };

  std::vector<int> predicted(data.size());
  parallel_tasks(block_count(data.size()), [&](std::size_t block) {
    const std::size_t begin = block * kSampleBlock;
    const std::size_t end = std::min(begin + kSampleBlock, data.size());
    for (std::size_t n = begin; n < end; ++n) {
      predicted[n] = predict(ensemble, data.samples[n]).class_id;
    }
  });

  Evaluation eval;
  eval.classes = classes;
  eval.confusion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(classes.size()),
                                         static_cast<Eigen::Index>(classes.size()));
  std::size_t correct = 0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    const std::size_t row = class_row(data.labels[n]);
    const std::size_t col = class_row(predicted[n]);
    eval.confusion(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) += 1.0;
    if (row == col) ++correct;
  }
  eval.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  eval.per_class_accuracy.resize(classes.size(), 0.0);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const double total = eval.confusion.row(static_cast<Eigen::Index>(i)).sum();
    if (total > 0) {
      eval.per_class_accuracy[i] =
          eval.confusion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) / total;
    }
  }
  return eval;
}

Evaluation evaluate_binary(const TtnModel& model, const Dataset& data, int positive_class,
                           int negative_class) {
  if (data.size() == 0) throw DomainError("dataset is empty");
  if (model.layout().output_dim != 2) throw LayoutError("binary evaluation needs output_dim 2");

  std::vector<int> predicted(data.size());
  parallel_tasks(block_count(data.size()), [&](std::size_t block) {
    const std::size_t begin = block * kSampleBlock;
    const std::size_t end = std::min(begin + kSampleBlock, data.size());
    for (std::size_t n = begin; n < end; ++n) {
      const auto out = model.forward(data.samples[n]);
      predicted[n] = std::abs(out[0]) >= std::abs(out[1]) ? positive_class : negative_class;
    }
  });

  Evaluation eval;
  eval.classes = {positive_class, negative_class};
  eval.confusion = Eigen::MatrixXd::Zero(2, 2);
  std::size_t correct = 0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    const int label = data.labels[n];
    if (label != positive_class && label != negative_class) {
      throw DomainError("sample label " + std::to_string(label) +
                        " is not part of the binary pair");
    }
    const Eigen::Index row = label == positive_class ? 0 : 1;
    const Eigen::Index col = predicted[n] == positive_class ? 0 : 1;
    eval.confusion(row, col) += 1.0;
    if (row == col) ++correct;
  }
  eval.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  eval.per_class_accuracy.resize(2, 0.0);
  for (Eigen::Index i = 0; i < 2; ++i) {
    const double total = eval.confusion.row(i).sum();
    if (total > 0) eval.per_class_accuracy[static_cast<std::size_t>(i)] = eval.confusion(i, i) / total;
  }
  return eval;
}

void write_evaluation_csv(const Evaluation& eval, std::ostream& out) {
  out << "class,accuracy";
  for (int c : eval.classes) out << ",predicted_" << c;
  out << '\n';
  for (std::size_t i = 0; i < eval.classes.size(); ++i) {
    out << eval.classes[i] << ',' << csv_real(eval.per_class_accuracy[i]);
    for (std::size_t j = 0; j < eval.classes.size(); ++j) {
      out << ',' << eval.confusion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    out << '\n';
  }
  out << "aggregate," << csv_real(eval.accuracy);
  for (std::size_t j = 0; j < eval.classes.size(); ++j) out << ',';
  out << '\n';
}

void print_evaluation(const Evaluation& eval, std::ostream& out) {
  out << "accuracy: " << std::fixed << std::setprecision(4) << eval.accuracy << '\n';
  out << "class  acc     predicted counts\n";
  for (std::size_t i = 0; i < eval.classes.size(); ++i) {
    out << std::setw(5) << eval.classes[i] << "  " << std::setprecision(4)
        << eval.per_class_accuracy[i] << " ";
    for (std::size_t j = 0; j < eval.classes.size(); ++j) {
      out << ' ' << std::setw(6)
          << static_cast<long long>(
                 eval.confusion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    out << '\n';
  }
  out.unsetf(std::ios::fixed);
}

}  // namespace ttn
