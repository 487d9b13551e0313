#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hpd/classifier.hpp"

namespace hpd {

// (gamma * <x, z> + coef0)^degree
double poly_kernel(const SparseVector& x, const SparseVector& z, double gamma,
                   double coef0, int degree);

// 1 / (dimension * variance of every entry of the dense training matrix),
// or 1 when that variance is zero.
double scale_gamma(const LabeledVectors& train);

struct SvmParams {
  double C = 10.0;
  int degree = 3;
  double coef0 = 0.1;
  std::optional<double> gamma;  // nullopt = "scale"
  double tolerance = 1e-3;      // KKT violation at which SMO stops
  int max_passes = 1000;        // iteration cap = max_passes * max(n, 100)
  bool probability = true;      // Platt scaling on out-of-fold values
  int platt_folds = 3;
  std::uint64_t seed = 0;       // Platt fold assignment
  std::size_t cache_mb = 256;   // kernel row cache

  void validate() const;
};

// Result of one SMO run on a labeled set.
struct SmoSolution {
  std::vector<double> alpha;  // 0 <= alpha_i <= C
  double bias = 0.0;          // f(x) = sum alpha_i y_i k(x_i, x) + bias
  double dual_objective = 0.0;  // sum alpha - 0.5 alpha' Q alpha
  double max_violation = 0.0;   // KKT residual at exit
  long iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;  // filled when requested
};

// Soft-margin dual solved by sequential minimal optimization with
// second-order working-set selection.
SmoSolution solve_smo(const LabeledVectors& train, double C, double gamma,
                      double coef0, int degree, double tolerance,
                      long max_iterations, std::size_t cache_bytes,
                      bool trace_objective = false);

// Sigmoid fit p(y=1|f) = 1 / (1 + exp(A f + B)) by regularized maximum
// likelihood (Newton with backtracking).
struct PlattCoefficients {
  double A = 0.0;
  double B = 0.0;
};
PlattCoefficients fit_platt(std::span<const double> decision_values,
                            std::span<const Label> labels);

class Svm final : public VectorClassifier {
 public:
  explicit Svm(SvmParams params = {});

  std::string_view model_type() const override { return "svm"; }
  void fit(const LabeledVectors& train) override;
  bool trained() const override { return trained_; }
  std::size_t dimension() const override { return dimension_; }
  ProbaRow predict_row(const SparseVector& x) const override;
  nlohmann::json hyperparams() const override;
  nlohmann::json to_json() const override;

  static SvmParams params_from_json(const nlohmann::json& j);
  static std::unique_ptr<Svm> from_json(const nlohmann::json& j);

  double decision_value(const SparseVector& x) const;
  const SvmParams& params() const noexcept { return params_; }
  double gamma() const noexcept { return gamma_value_; }
  const std::vector<SparseVector>& support_vectors() const noexcept {
    return support_vectors_;
  }
  // alpha_i * y_i for each support vector.
  const std::vector<double>& dual_coefs() const noexcept { return dual_coefs_; }
  double bias() const noexcept { return bias_; }
  PlattCoefficients platt() const noexcept { return platt_; }
  bool converged() const noexcept { return converged_; }
  const SmoSolution& last_solution() const noexcept { return solution_; }

 private:
  SvmParams params_;
  std::size_t dimension_ = 0;
  bool trained_ = false;
  bool converged_ = false;
  double gamma_value_ = 1.0;
  std::vector<SparseVector> support_vectors_;
  std::vector<double> dual_coefs_;
  double bias_ = 0.0;
  PlattCoefficients platt_;
  SmoSolution solution_;
};

}  // namespace hpd
