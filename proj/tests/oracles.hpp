#pragma once

// Independent reference computations. None of these call the solver or
// estimator they check; they use plain loops over dense arithmetic.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hpd/classifier.hpp"

namespace hpd::testing {

using Matrix = std::vector<std::vector<double>>;

struct PolyKernel {
  double gamma = 1.0;
  double coef0 = 0.0;
  int degree = 1;
  double operator()(const SparseVector& x, const SparseVector& z) const;
};

double label_sign(Label y);

// Q_ij = y_i y_j k(x_i, x_j)
Matrix dual_matrix(const LabeledVectors& d, const PolyKernel& k);
// sum alpha - 0.5 alpha' Q alpha
double dual_objective(const Matrix& q, const std::vector<double>& alpha);

// Maximizes the dual over a grid on the first n-1 multipliers; the last one
// follows from sum alpha_i y_i = 0. The grid is refined around the best point
// until its step falls below 1e-7.
double brute_force_dual(const LabeledVectors& d, const PolyKernel& k, double C);

// max over I_up of -y_i G_i minus min over I_low of -y_i G_i, where
// G = Q alpha - 1; zero at an exact optimum.
double kkt_residual(const LabeledVectors& d, const PolyKernel& k, double C,
                    const std::vector<double>& alpha);

// Multinomial naive Bayes posterior from raw per-class feature sums with
// Lidstone smoothing alpha.
ProbaRow nb_posterior(const LabeledVectors& d, double alpha, bool fit_prior,
                      const SparseVector& query);

// 0.5 |w|^2 / C + sum_i log(1 + exp(-y_i (w . x_i + b))), y in {-1, +1}.
double lr_objective_dense(const LabeledVectors& d,
                          const std::vector<double>& w, double b, double C);
// Central differences of lr_objective_dense; the last entry is d/db.
std::vector<double> lr_numeric_gradient(const LabeledVectors& d,
                                        const std::vector<double>& w, double b,
                                        double C, double step = 1e-6);

// For each of n binary inputs: the mean over all 2^(n-1) settings of the
// others of f(with j) - f(without j).
std::vector<double> main_effects(
    std::size_t n, const std::function<double(const std::vector<bool>&)>& f);

// F1 of the positive class; 0 when nothing is predicted or present.
double f1_score(const std::vector<Label>& truth, const std::vector<Label>& pred);
double accuracy_score(const std::vector<Label>& truth,
                      const std::vector<Label>& pred);

// Fits a fresh model on every fold complement and scores the held-out part.
std::vector<double> fold_scores(const std::string& model_type,
                                const nlohmann::json& params,
                                const LabeledVectors& data,
                                const std::vector<std::size_t>& assignment,
                                std::size_t folds, bool use_f1);

}  // namespace hpd::testing
