#include "hpd/logistic_regression.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "hpd/error.hpp"
#include "hpd/rng.hpp"
#include "param_reader.hpp"

namespace hpd {

namespace {

double sign_of(Label y) { return y == Label::Hyperpartisan ? 1.0 : -1.0; }

// log(1 + exp(-m)), stable for large |m|.
double logistic_loss(double m) {
  return m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

// sigma(t) = 1 / (1 + exp(-t)), stable.
double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// d/dz log(1 + exp(-y z)) = -y * sigma(-y z)
double loss_derivative(double y, double z) { return -y * sigmoid(-y * z); }

double l2_norm(std::span<const double> v, double extra = 0.0) {
  double s = extra * extra;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::string_view solver_name(LrSolver s) {
  return s == LrSolver::Saga ? "saga" : "full_batch";
}

}  // namespace

void LogisticRegressionParams::validate() const {
  if (!(C > 0.0) || !std::isfinite(C)) throw ConfigError("lr: C must be > 0");
  if (max_iter < 1) throw ConfigError("lr: max_iter must be >= 1");
  if (!(tolerance > 0.0)) throw ConfigError("lr: tol must be > 0");
}

double lr_objective(const LabeledVectors& data, std::span<const double> w,
                    double b, double C) {
  double reg = 0.0;
  for (double v : w) reg += v * v;
  double loss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double z = dot(data.x[i], w) + b;
    loss += logistic_loss(sign_of(data.y[i]) * z);
  }
  return 0.5 * reg / C + loss;
}

double lr_gradient(const LabeledVectors& data, std::span<const double> w,
                   double b, double C, std::span<double> grad_w) {
  for (std::size_t k = 0; k < w.size(); ++k) grad_w[k] = w[k] / C;
  double grad_b = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double z = dot(data.x[i], w) + b;
    const double g = loss_derivative(sign_of(data.y[i]), z);
    for (const auto& [k, v] : data.x[i].entries()) grad_w[k] += g * v;
    grad_b += g;
  }
  return grad_b;
}

LogisticRegression::LogisticRegression(LogisticRegressionParams params)
    : params_(params) {
  params_.validate();
}

LogisticRegression::LogisticRegression(LogisticRegressionParams params,
                                       std::vector<double> weights,
                                       double intercept)
    : params_(params),
      weights_(std::move(weights)),
      intercept_(intercept),
      trained_(true) {
  params_.validate();
}

void LogisticRegression::fit(const LabeledVectors& train) {
  train.require_both_classes("lr");
  weights_.assign(train.dimension, 0.0);
  intercept_ = 0.0;
  trace_.clear();
  converged_ = false;
  iterations_ = 0;
  if (params_.solver == LrSolver::Saga) {
    fit_saga(train);
  } else {
    fit_lbfgs(train);
  }
  trained_ = true;
}

// SAGA on F/n with per-sample terms loss_i + (lambda/2)|w|^2, lambda =
// 1/(C n). Coordinates outside the current sample are updated lazily: between
// two touches of coordinate k its averaged gradient is constant, so the
// skipped steps collapse into a closed-form geometric sum.
void LogisticRegression::fit_saga(const LabeledVectors& train) {
  const std::size_t n = train.size();
  const std::size_t d = train.dimension;
  const double lambda = 1.0 / (params_.C * static_cast<double>(n));
  double max_sq = 0.0;
  for (const auto& x : train.x) max_sq = std::max(max_sq, x.squared_norm());
  const double lipschitz = 0.25 * (max_sq + 1.0) + lambda;
  const double eta = 1.0 / (3.0 * lipschitz);
  const double decay = 1.0 - eta * lambda;

  std::vector<double> memory(n, 0.0);  // stored dloss/dz per sample
  std::vector<double> avg_grad(d, 0.0);
  double avg_grad_b = 0.0;
  std::vector<std::uint64_t> last(d, 0);
  std::uint64_t step = 0;
  const double inv_n = 1.0 / static_cast<double>(n);

  auto catch_up = [&](std::uint32_t k) {
    const std::uint64_t m = step - last[k];
    if (m == 0) return;
    if (lambda == 0.0) {
      weights_[k] -= eta * avg_grad[k] * static_cast<double>(m);
    } else {
      const double am = std::pow(decay, static_cast<double>(m));
      weights_[k] = am * weights_[k] - eta * avg_grad[k] * (1.0 - am) /
                                           (1.0 - decay);
    }
    last[k] = step;
  };

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(params_.seed);
  std::vector<double> grad(d);

  for (int epoch = 0; epoch < params_.max_iter; ++epoch) {
    rng.shuffle(std::span(order));
    for (std::size_t j : order) {
      const auto& x = train.x[j];
      for (const auto& [k, _] : x.entries()) catch_up(k);
      const double z = dot(x, weights_) + intercept_;
      const double g = loss_derivative(sign_of(train.y[j]), z);
      const double delta = g - memory[j];
      for (const auto& [k, v] : x.entries()) {
        weights_[k] = decay * weights_[k] - eta * (delta * v + avg_grad[k]);
        last[k] = step + 1;
      }
      intercept_ -= eta * (delta + avg_grad_b);
      for (const auto& [k, v] : x.entries()) avg_grad[k] += delta * v * inv_n;
      avg_grad_b += delta * inv_n;
      memory[j] = g;
      ++step;
    }
    for (std::uint32_t k = 0; k < d; ++k) catch_up(k);
    ++iterations_;
    trace_.push_back(lr_objective(train, weights_, intercept_, params_.C));
    const double gb = lr_gradient(train, weights_, intercept_, params_.C, grad);
    if (l2_norm(grad, gb) < params_.tolerance) {
      converged_ = true;
      break;
    }
  }
}

// Limited-memory BFGS with Armijo backtracking; every accepted step
// strictly decreases the objective.
void LogisticRegression::fit_lbfgs(const LabeledVectors& train) {
  const std::size_t d = train.dimension;
  const std::size_t dim = d + 1;  // last coordinate is the intercept
  const double C = params_.C;
  constexpr std::size_t kMemory = 10;

  std::vector<double> theta(dim, 0.0), grad(dim), dir(dim), next(dim),
      next_grad(dim);
  auto evaluate = [&](const std::vector<double>& t, std::vector<double>& g) {
    std::span<const double> w(t.data(), d);
    const double f = lr_objective(train, w, t[d], C);
    g[d] = lr_gradient(train, w, t[d], C, std::span(g.data(), d));
    return f;
  };

  double f = evaluate(theta, grad);
  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;

  for (int iter = 0; iter < params_.max_iter; ++iter) {
    if (l2_norm(grad) < params_.tolerance) {
      converged_ = true;
      break;
    }
    // Two-loop recursion.
    dir = grad;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t h = s_hist.size(); h-- > 0;) {
      alpha[h] = rho_hist[h] *
                 std::inner_product(s_hist[h].begin(), s_hist[h].end(),
                                    dir.begin(), 0.0);
      for (std::size_t k = 0; k < dim; ++k) dir[k] -= alpha[h] * y_hist[h][k];
    }
    if (!s_hist.empty()) {
      const auto& s = s_hist.back();
      const auto& y = y_hist.back();
      const double gamma =
          std::inner_product(s.begin(), s.end(), y.begin(), 0.0) /
          std::inner_product(y.begin(), y.end(), y.begin(), 0.0);
      for (double& v : dir) v *= gamma;
    } else {
      const double scale = 1.0 / std::max(1.0, l2_norm(grad));
      for (double& v : dir) v *= scale;
    }
    for (std::size_t h = 0; h < s_hist.size(); ++h) {
      const double beta =
          rho_hist[h] * std::inner_product(y_hist[h].begin(), y_hist[h].end(),
                                           dir.begin(), 0.0);
      for (std::size_t k = 0; k < dim; ++k) {
        dir[k] += s_hist[h][k] * (alpha[h] - beta);
      }
    }
    for (double& v : dir) v = -v;
    double slope = std::inner_product(grad.begin(), grad.end(), dir.begin(), 0.0);
    if (!(slope < 0.0)) {  // not a descent direction: restart from -grad
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t k = 0; k < dim; ++k) dir[k] = -grad[k];
      slope = -std::inner_product(grad.begin(), grad.end(), grad.begin(), 0.0);
    }

    double step = 1.0;
    double f_next = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t k = 0; k < dim; ++k) next[k] = theta[k] + step * dir[k];
      f_next = evaluate(next, next_grad);
      if (f_next <= f + 1e-4 * step * slope && f_next < f) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++iterations_;
    if (!accepted) {
      trace_.push_back(f);
      break;  // no further decrease is representable
    }
    std::vector<double> s(dim), y(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      s[k] = next[k] - theta[k];
      y[k] = next_grad[k] - grad[k];
    }
    const double sy = std::inner_product(s.begin(), s.end(), y.begin(), 0.0);
    if (sy > 1e-12) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > kMemory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    theta.swap(next);
    grad.swap(next_grad);
    f = f_next;
    trace_.push_back(f);
  }
  if (!converged_ && l2_norm(grad) < params_.tolerance) converged_ = true;
  weights_.assign(theta.begin(), theta.begin() + static_cast<long>(d));
  intercept_ = theta[d];
}

double LogisticRegression::decision_value(const SparseVector& x) const {
  check_input(x);
  return dot(x, weights_) + intercept_;
}

ProbaRow LogisticRegression::predict_row(const SparseVector& x) const {
  const double z = dot(x, weights_) + intercept_;
  const double p1 = sigmoid(z);
  const double p0 = sigmoid(-z);
  const double total = p0 + p1;
  return {p0 / total, p1 / total};
}

nlohmann::json LogisticRegression::hyperparams() const {
  return {{"C", params_.C},
          {"max_iter", params_.max_iter},
          {"penalty", "l2"},
          {"solver", solver_name(params_.solver)},
          {"tol", params_.tolerance},
          {"seed", params_.seed}};
}

nlohmann::json LogisticRegression::to_json() const {
  auto j = hyperparams();
  j["weights"] = weights_;
  j["intercept"] = intercept_;
  j["converged"] = converged_;
  j["iterations"] = iterations_;
  return j;
}

LogisticRegressionParams LogisticRegression::params_from_json(
    const nlohmann::json& j) {
  detail::ParamReader r(j, "lr");
  LogisticRegressionParams p;
  p.C = r.get("C", p.C);
  p.max_iter = r.get("max_iter", p.max_iter);
  const auto penalty = r.get<std::string>("penalty", "l2");
  if (penalty != "l2") throw ConfigError("lr: only penalty 'l2' is supported");
  const auto solver = r.get<std::string>("solver", "saga");
  if (solver == "saga") {
    p.solver = LrSolver::Saga;
  } else if (solver == "full_batch" || solver == "lbfgs") {
    p.solver = LrSolver::FullBatch;
  } else {
    throw ConfigError("lr: unknown solver '" + solver + "'");
  }
  p.tolerance = r.get("tol", p.tolerance);
  p.seed = r.get("seed", p.seed);
  // Trained state keys are accepted (and ignored) here.
  for (const char* key : {"weights", "intercept", "converged", "iterations"}) {
    if (r.has(key)) r.raw(key);
  }
  r.finish();
  p.validate();
  return p;
}

std::unique_ptr<LogisticRegression> LogisticRegression::from_json(
    const nlohmann::json& j) {
  auto params = params_from_json(j);
  auto model = std::make_unique<LogisticRegression>(
      params, j.at("weights").get<std::vector<double>>(),
      j.at("intercept").get<double>());
  model->converged_ = j.value("converged", false);
  model->iterations_ = j.value("iterations", 0);
  return model;
}

}  // namespace hpd
