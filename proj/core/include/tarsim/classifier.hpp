#pragma once

#include <span>
#include <vector>

#include "tarsim/corpus.hpp"
#include "tarsim/sparse_features.hpp"

namespace tarsim {

struct TrainConfig {
  /// C in (1/2C)·||w||² + Σ cw·log(1 + exp(-y·(w·x + b))).
  double regularization_strength = 1.0;
  int max_iterations = 1000;
  /// Stop once the max-norm of the full gradient (weights and bias) is below this.
  double gradient_tolerance = 1e-6;
  /// cw for relevant rows; non-relevant rows always weigh 1.
  double positive_class_weight = 1.0;
  /// Number of correction pairs kept by the quasi-Newton solver.
  int history = 10;
};

struct LogRegModel {
  std::vector<double> weights;
  double bias = 0.0;
  TrainConfig config;
  int iterations = 0;
  bool converged = false;
};

/// A zero model over `n_features` columns; predicts 0.5 everywhere.
LogRegModel zero_model(std::size_t n_features, const TrainConfig& config = {});

double sigmoid(double z) noexcept;

/// Training objective at (model.weights, model.bias). The bias is not
/// regularized.
double objective(const LogRegModel& model, const SparseMatrix& matrix,
                 std::span<const DocIndex> rows, std::span<const Relevance> labels,
                 const TrainConfig& config);

/// Analytic gradient of objective(): n_cols weight partials followed by the
/// bias partial.
std::vector<double> gradient(const LogRegModel& model, const SparseMatrix& matrix,
                             std::span<const DocIndex> rows, std::span<const Relevance> labels,
                             const TrainConfig& config);

/// Fits from zero (or from `warm_start` when given) with limited-memory BFGS.
/// Throws tarsim::Error("degenerate training set") unless both classes occur.
LogRegModel train(const SparseMatrix& matrix, std::span<const DocIndex> rows,
                  std::span<const Relevance> labels, const TrainConfig& config = {},
                  const LogRegModel* warm_start = nullptr);

/// sigmoid(w·x + b) for each requested row, in the given order.
std::vector<double> predict_proba(const LogRegModel& model, const SparseMatrix& matrix,
                                  std::span<const DocIndex> rows);

}  // namespace tarsim
