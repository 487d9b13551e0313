#pragma once

#include <cstdint>
#include <vector>

#include "hpd/classifier.hpp"

namespace hpd {

enum class LrSolver {
  Saga,       // stochastic average gradient with variance reduction
  FullBatch,  // deterministic L-BFGS on the full objective
};

struct LogisticRegressionParams {
  double C = 10.0;
  int max_iter = 100;  // epochs (Saga) or iterations (FullBatch)
  LrSolver solver = LrSolver::Saga;
  double tolerance = 1e-6;  // on the gradient norm of the full objective
  std::uint64_t seed = 0;   // Saga sample order

  void validate() const;
};

// Objective minimized by both solvers, with y in {-1, +1}:
//   (1/C) * 0.5 * |w|^2 + sum_i log(1 + exp(-y_i (w . x_i + b)))
double lr_objective(const LabeledVectors& data, std::span<const double> w,
                    double b, double C);
// Writes dF/dw into grad_w and returns dF/db.
double lr_gradient(const LabeledVectors& data, std::span<const double> w,
                   double b, double C, std::span<double> grad_w);

class LogisticRegression final : public VectorClassifier {
 public:
  explicit LogisticRegression(LogisticRegressionParams params = {});
  LogisticRegression(LogisticRegressionParams params,
                     std::vector<double> weights, double intercept);

  std::string_view model_type() const override { return "lr"; }
  void fit(const LabeledVectors& train) override;
  bool trained() const override { return trained_; }
  std::size_t dimension() const override { return weights_.size(); }
  ProbaRow predict_row(const SparseVector& x) const override;
  nlohmann::json hyperparams() const override;
  nlohmann::json to_json() const override;

  static LogisticRegressionParams params_from_json(const nlohmann::json& j);
  static std::unique_ptr<LogisticRegression> from_json(const nlohmann::json& j);

  double decision_value(const SparseVector& x) const;
  const LogisticRegressionParams& params() const noexcept { return params_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double intercept() const noexcept { return intercept_; }
  bool converged() const noexcept { return converged_; }
  int iterations() const noexcept { return iterations_; }
  // Objective value after each iteration of the last fit.
  const std::vector<double>& objective_trace() const noexcept {
    return trace_;
  }

 private:
  void fit_saga(const LabeledVectors& train);
  void fit_lbfgs(const LabeledVectors& train);

  LogisticRegressionParams params_;
  std::vector<double> weights_;
  double intercept_ = 0.0;
  bool trained_ = false;
  bool converged_ = false;
  int iterations_ = 0;
  std::vector<double> trace_;
};

}  // namespace hpd
