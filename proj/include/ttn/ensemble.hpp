#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <vector>

#include "ttn/dataset.hpp"
#include "ttn/model.hpp"
#include "ttn/trainer.hpp"

namespace ttn {

// One-against-all multi-class classifier: one binary TTN per class, sharing
// the image side and input bond dimension (virtual bonds may differ).
struct ClassModel {
  int class_id = 0;
  TtnModel model;
};

struct Ensemble {
  std::vector<ClassModel> members;

  std::size_t size() const { return members.size(); }
  void validate() const;  // shared side/d, unique class ids
};

struct ClassTrainSpec {
  int class_id = 0;
  TtnLayout layout;
  TrainConfig config;
};

// Uniform specs over a class list, decorrelating per-class init seeds from
// the base seed in config.
std::vector<ClassTrainSpec> uniform_specs(const std::vector<int>& classes,
                                          const TtnLayout& layout, const TrainConfig& config);

struct EnsembleTrainResult {
  Ensemble ensemble;
  std::vector<SweepTrace> traces;  // parallel to ensemble.members
};

// Trains one model per spec on the shared dataset; for class p the positives
// are p's samples and the negatives are everything else.
EnsembleTrainResult train_one_vs_all(const Dataset& train_data,
                                     const std::vector<ClassTrainSpec>& specs);

// |first component of forward(model, image)|: the fidelity between the image
// and the model's class state.
double class_state_overlap(const TtnModel& model, const VectorizedImage& image);

struct Prediction {
  int class_id = 0;
  std::vector<double> fidelities;  // parallel to ensemble.members
};

// Argmax of the per-class fidelities; ties go to the lowest class id.
Prediction predict(const Ensemble& ensemble, const VectorizedImage& image);

struct Evaluation {
  std::vector<int> classes;
  double accuracy = 0.0;
  std::vector<double> per_class_accuracy;  // parallel to classes
  Eigen::MatrixXd confusion;               // counts; rows = true class, cols = predicted
};

Evaluation evaluate(const Ensemble& ensemble, const Dataset& data);

// Binary evaluation of a single model: output component 0 wins -> positive.
Evaluation evaluate_binary(const TtnModel& model, const Dataset& data, int positive_class,
                           int negative_class);

void write_evaluation_csv(const Evaluation& eval, std::ostream& out);
void print_evaluation(const Evaluation& eval, std::ostream& out);

}  // namespace ttn
