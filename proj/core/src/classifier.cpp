#include "tarsim/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "tarsim/error.hpp"

namespace tarsim {
namespace {

// log(1 + exp(-z)) without overflow.
double logistic_loss(double z) noexcept {
  return z > 0.0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
}

double dot_row(std::span<const double> w, std::span<const FeatureEntry> row) noexcept {
  double acc = 0.0;
  for (const auto& e : row) acc += w[e.index] * static_cast<double>(e.weight);
  return acc;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double max_abs(std::span<const double> v) noexcept {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void check_inputs(const SparseMatrix& matrix, std::span<const DocIndex> rows,
                  std::span<const Relevance> labels) {
  if (rows.size() != labels.size()) {
    throw Error(fmt::format("dimension mismatch: {} rows but {} labels", rows.size(),
                            labels.size()));
  }
  for (DocIndex r : rows) {
    if (r >= matrix.n_rows()) {
      throw Error(fmt::format("dimension mismatch: row {} outside matrix of {} rows", r,
                              matrix.n_rows()));
    }
  }
}

void check_model(const LogRegModel& model, const SparseMatrix& matrix) {
  if (model.weights.size() != matrix.n_cols()) {
    throw Error(fmt::format("dimension mismatch: model has {} weights, matrix has {} columns",
                            model.weights.size(), matrix.n_cols()));
  }
}

// Objective and gradient over the packed parameter vector [w..., b].
class Problem {
 public:
  Problem(const SparseMatrix& matrix, std::span<const DocIndex> rows,
          std::span<const Relevance> labels, const TrainConfig& config)
      : matrix_(matrix), rows_(rows), labels_(labels), config_(config),
        dim_(matrix.n_cols() + 1) {}

  std::size_t dim() const noexcept { return dim_; }

  double evaluate(std::span<const double> theta, std::span<double> grad) const {
    const std::size_t n_w = dim_ - 1;
    const auto w = theta.first(n_w);
    const double b = theta[n_w];
    const double inv_c = 1.0 / config_.regularization_strength;

    double f = 0.0;
    for (std::size_t j = 0; j < n_w; ++j) {
      f += 0.5 * inv_c * w[j] * w[j];
      grad[j] = inv_c * w[j];
    }
    grad[n_w] = 0.0;

    for (std::size_t i = 0; i < rows_.size(); ++i) {
      const auto row = matrix_.row(rows_[i]);
      const bool positive = labels_[i] == Relevance::relevant;
      const double y = positive ? 1.0 : -1.0;
      const double cw = positive ? config_.positive_class_weight : 1.0;
      const double z = y * (dot_row(w, row) + b);
      f += cw * logistic_loss(z);
      // d/dm log(1+exp(-y m)) = -y * sigmoid(-z)
      const double coeff = -cw * y * sigmoid(-z);
      for (const auto& e : row) grad[e.index] += coeff * static_cast<double>(e.weight);
      grad[n_w] += coeff;
    }
    return f;
  }

 private:
  const SparseMatrix& matrix_;
  std::span<const DocIndex> rows_;
  std::span<const Relevance> labels_;
  const TrainConfig& config_;
  std::size_t dim_;
};

struct Point {
  std::vector<double> x;
  std::vector<double> g;
  double f = 0.0;
};

// Strong Wolfe line search (bracketing + zoom). Returns false when no
// acceptable step was found; `trial` then holds the last evaluation.
class LineSearch {
 public:
  explicit LineSearch(const Problem& problem) : problem_(problem) {}

  bool search(const Point& start, std::span<const double> direction, double initial_step,
              Point& result) {
    f0_ = start.f;
    slope0_ = dot(start.g, direction);
    if (!(slope0_ < 0.0)) return false;
    // Slack at the level of floating-point noise in f; near the optimum the
    // slope decides between steps whose values are indistinguishable.
    slack_ = 8.0 * std::numeric_limits<double>::epsilon() * std::abs(f0_);

    double step_prev = 0.0;
    double f_prev = f0_;
    double slope_prev = slope0_;
    double step = initial_step;
    for (int i = 0; i < kMaxBracket; ++i) {
      const double slope = eval(start, direction, step, result);
      if (!armijo(step, result.f) || (i > 0 && result.f > f_prev + slack_)) {
        return zoom(start, direction, step_prev, f_prev, slope_prev, step, result.f, result);
      }
      if (std::abs(slope) <= -kCurvature * slope0_) return true;
      if (slope >= 0.0) {
        return zoom(start, direction, step, result.f, slope, step_prev, f_prev, result);
      }
      step_prev = step;
      f_prev = result.f;
      slope_prev = slope;
      step *= 2.0;
    }
    return false;
  }

 private:
  static constexpr double kSufficientDecrease = 1e-4;
  static constexpr double kCurvature = 0.9;
  static constexpr int kMaxBracket = 40;
  static constexpr int kMaxZoom = 60;

  bool armijo(double step, double f) const {
    return f <= f0_ + kSufficientDecrease * step * slope0_ + slack_;
  }

  double eval(const Point& start, std::span<const double> direction, double step, Point& out) {
    out.x.resize(start.x.size());
    out.g.resize(start.x.size());
    for (std::size_t j = 0; j < out.x.size(); ++j) out.x[j] = start.x[j] + step * direction[j];
    out.f = problem_.evaluate(out.x, out.g);
    return dot(out.g, direction);
  }

  bool zoom(const Point& start, std::span<const double> direction, double lo, double f_lo,
            double slope_lo, double hi, double f_hi, Point& result) {
    for (int i = 0; i < kMaxZoom; ++i) {
      // Minimizer of the quadratic through (lo, f_lo, slope_lo) and hi,
      // kept away from the interval ends.
      const double width = hi - lo;
      double step = lo + 0.5 * width;
      const double lower = std::min(lo, hi) + 0.1 * std::abs(width);
      const double upper = std::max(lo, hi) - 0.1 * std::abs(width);
      const double denom = 2.0 * (f_hi - f_lo - slope_lo * width);
      if (denom > 0.0) {
        const double candidate = lo - slope_lo * width * width / denom;
        if (candidate > lower && candidate < upper) step = candidate;
      }
      if (std::abs(width) < 1e-16 * std::max(1.0, std::abs(lo))) return false;

      const double slope = eval(start, direction, step, result);
      if (!armijo(step, result.f) || result.f > f_lo + slack_) {
        hi = step;
        f_hi = result.f;
      } else {
        if (std::abs(slope) <= -kCurvature * slope0_) return true;
        if (slope * (hi - lo) >= 0.0) {
          hi = lo;
          f_hi = f_lo;
        }
        lo = step;
        f_lo = result.f;
        slope_lo = slope;
      }
    }
    return false;
  }

  const Problem& problem_;
  double f0_ = 0.0;
  double slope0_ = 0.0;
  double slack_ = 0.0;
};

struct Correction {
  std::vector<double> s;
  std::vector<double> y;
  double rho;
};

// Two-loop recursion: returns -H·g for the implicit inverse Hessian H.
std::vector<double> search_direction(const std::deque<Correction>& memory,
                                     std::span<const double> g) {
  std::vector<double> q(g.begin(), g.end());
  std::vector<double> alpha(memory.size());
  for (std::size_t k = memory.size(); k-- > 0;) {
    alpha[k] = memory[k].rho * dot(memory[k].s, q);
    for (std::size_t j = 0; j < q.size(); ++j) q[j] -= alpha[k] * memory[k].y[j];
  }
  if (!memory.empty()) {
    const auto& last = memory.back();
    const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
    for (double& v : q) v *= gamma;
  }
  for (std::size_t k = 0; k < memory.size(); ++k) {
    const double beta = memory[k].rho * dot(memory[k].y, q);
    for (std::size_t j = 0; j < q.size(); ++j) q[j] += (alpha[k] - beta) * memory[k].s[j];
  }
  for (double& v : q) v = -v;
  return q;
}

}  // namespace

LogRegModel zero_model(std::size_t n_features, const TrainConfig& config) {
  LogRegModel model;
  model.weights.assign(n_features, 0.0);
  model.config = config;
  return model;
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double objective(const LogRegModel& model, const SparseMatrix& matrix,
                 std::span<const DocIndex> rows, std::span<const Relevance> labels,
                 const TrainConfig& config) {
  check_inputs(matrix, rows, labels);
  check_model(model, matrix);
  std::vector<double> theta(model.weights);
  theta.push_back(model.bias);
  std::vector<double> grad(theta.size());
  return Problem(matrix, rows, labels, config).evaluate(theta, grad);
}

std::vector<double> gradient(const LogRegModel& model, const SparseMatrix& matrix,
                             std::span<const DocIndex> rows, std::span<const Relevance> labels,
                             const TrainConfig& config) {
  check_inputs(matrix, rows, labels);
  check_model(model, matrix);
  std::vector<double> theta(model.weights);
  theta.push_back(model.bias);
  std::vector<double> grad(theta.size());
  Problem(matrix, rows, labels, config).evaluate(theta, grad);
  return grad;
}

LogRegModel train(const SparseMatrix& matrix, std::span<const DocIndex> rows,
                  std::span<const Relevance> labels, const TrainConfig& config,
                  const LogRegModel* warm_start) {
  check_inputs(matrix, rows, labels);
  if (!(config.regularization_strength > 0.0)) {
    throw Error("train: regularization strength must be positive");
  }
  if (!(config.positive_class_weight > 0.0)) {
    throw Error("train: positive class weight must be positive");
  }
  const auto positives = std::count(labels.begin(), labels.end(), Relevance::relevant);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(labels.size())) {
    throw Error("degenerate training set");
  }

  const Problem problem(matrix, rows, labels, config);
  Point current;
  current.x.assign(problem.dim(), 0.0);
  if (warm_start != nullptr) {
    check_model(*warm_start, matrix);
    std::copy(warm_start->weights.begin(), warm_start->weights.end(), current.x.begin());
    current.x.back() = warm_start->bias;
  }
  current.g.resize(problem.dim());
  current.f = problem.evaluate(current.x, current.g);

  std::deque<Correction> memory;
  const auto history = static_cast<std::size_t>(std::max(config.history, 1));
  int iteration = 0;
  bool converged = max_abs(current.g) <= config.gradient_tolerance;
  Point next;

  while (!converged && iteration < config.max_iterations) {
    ++iteration;
    auto direction = search_direction(memory, current.g);
    if (!(dot(direction, current.g) < 0.0)) {
      memory.clear();
      direction = search_direction(memory, current.g);
    }
    double step = 1.0;
    if (memory.empty()) {
      step = std::min(1.0, 1.0 / std::sqrt(dot(current.g, current.g)));
    }

    LineSearch line_search(problem);
    if (!line_search.search(current, direction, step, next)) {
      if (memory.empty()) break;  // steepest descent also failed: at noise floor
      memory.clear();
      continue;
    }

    Correction c;
    c.s.resize(problem.dim());
    c.y.resize(problem.dim());
    for (std::size_t j = 0; j < problem.dim(); ++j) {
      c.s[j] = next.x[j] - current.x[j];
      c.y[j] = next.g[j] - current.g[j];
    }
    const double sy = dot(c.s, c.y);
    if (sy > 1e-12 * dot(c.y, c.y)) {
      c.rho = 1.0 / sy;
      memory.push_back(std::move(c));
      if (memory.size() > history) memory.pop_front();
    }
    std::swap(current, next);
    converged = max_abs(current.g) <= config.gradient_tolerance;
  }

  LogRegModel model;
  model.weights.assign(current.x.begin(), current.x.end() - 1);
  model.bias = current.x.back();
  model.config = config;
  model.iterations = iteration;
  model.converged = converged;
  return model;
}

std::vector<double> predict_proba(const LogRegModel& model, const SparseMatrix& matrix,
                                  std::span<const DocIndex> rows) {
  check_model(model, matrix);
  std::vector<double> out;
  out.reserve(rows.size());
  for (DocIndex r : rows) {
    if (r >= matrix.n_rows()) {
      throw Error(fmt::format("dimension mismatch: row {} outside matrix of {} rows", r,
                              matrix.n_rows()));
    }
    out.push_back(sigmoid(dot_row(model.weights, matrix.row(r)) + model.bias));
  }
  return out;
}

}  // namespace tarsim
