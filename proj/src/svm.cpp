#include "hpd/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>

#include "hpd/error.hpp"
#include "hpd/folds.hpp"
#include "hpd/util.hpp"
#include "param_reader.hpp"

namespace hpd {

double poly_kernel(const SparseVector& x, const SparseVector& z, double gamma,
                   double coef0, int degree) {
  return std::pow(gamma * dot(x, z) + coef0, degree);
}

double scale_gamma(const LabeledVectors& train) {
  const double cells =
      static_cast<double>(train.size()) * static_cast<double>(train.dimension);
  if (cells == 0.0) return 1.0;
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& x : train.x) {
    for (const auto& [_, v] : x.entries()) {
      sum += v;
      sum_sq += v * v;
    }
  }
  const double mean = sum / cells;
  const double var = sum_sq / cells - mean * mean;
  if (!(var > 0.0)) return 1.0;
  return 1.0 / (static_cast<double>(train.dimension) * var);
}

void SvmParams::validate() const {
  if (!(C > 0.0) || !std::isfinite(C)) throw ConfigError("svm: C must be > 0");
  if (degree < 1) throw ConfigError("svm: degree must be >= 1");
  if (gamma && !(*gamma > 0.0)) throw ConfigError("svm: gamma must be > 0");
  if (!(tolerance > 0.0)) throw ConfigError("svm: tol must be > 0");
  if (max_passes < 1) throw ConfigError("svm: max_passes must be >= 1");
  if (platt_folds < 2) throw ConfigError("svm: platt_folds must be >= 2");
}

namespace {

constexpr double kTau = 1e-12;

double label_sign(Label y) { return y == Label::Hyperpartisan ? 1.0 : -1.0; }

// Rows of Q_ij = y_i y_j k(x_i, x_j), computed on demand and kept in an LRU
// cache bounded by bytes.
class KernelRows {
 public:
  KernelRows(const LabeledVectors& data, std::span<const double> y,
             double gamma, double coef0, int degree, std::size_t cache_bytes)
      : data_(data), y_(y), gamma_(gamma), coef0_(coef0), degree_(degree) {
    const std::size_t n = data.size();
    capacity_ = std::max<std::size_t>(
        2, cache_bytes / std::max<std::size_t>(1, n * sizeof(double)));
    rows_.resize(n);
    where_.resize(n, lru_.end());
    diag_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      diag_[i] = kernel(i, i);
    }
  }

  double kernel(std::size_t i, std::size_t j) const {
    return poly_kernel(data_.x[i], data_.x[j], gamma_, coef0_, degree_);
  }
  double diag(std::size_t i) const { return diag_[i]; }

  const std::vector<double>& row(std::size_t i) {
    if (where_[i] != lru_.end()) {
      lru_.splice(lru_.begin(), lru_, where_[i]);
      return rows_[i];
    }
    if (lru_.size() >= capacity_) {
      const std::size_t victim = lru_.back();
      lru_.pop_back();
      where_[victim] = lru_.end();
      std::vector<double>().swap(rows_[victim]);
    }
    auto& r = rows_[i];
    r.resize(data_.size());
    for (std::size_t j = 0; j < data_.size(); ++j) {
      r[j] = y_[i] * y_[j] * kernel(i, j);
    }
    lru_.push_front(i);
    where_[i] = lru_.begin();
    return r;
  }

 private:
  const LabeledVectors& data_;
  std::span<const double> y_;
  double gamma_, coef0_;
  int degree_;
  std::size_t capacity_;
  std::vector<std::vector<double>> rows_;
  std::list<std::size_t> lru_;
  std::vector<std::list<std::size_t>::iterator> where_;
  std::vector<double> diag_;
};

}  // namespace

SmoSolution solve_smo(const LabeledVectors& train, double C, double gamma,
                      double coef0, int degree, double tolerance,
                      long max_iterations, std::size_t cache_bytes,
                      bool trace_objective) {
  const std::size_t n = train.size();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = label_sign(train.y[i]);
  KernelRows Q(train, y, gamma, coef0, degree, cache_bytes);

  SmoSolution sol;
  auto& alpha = sol.alpha;
  alpha.assign(n, 0.0);
  // Gradient of 0.5 a'Qa - e'a.
  std::vector<double> G(n, -1.0);

  auto is_upper = [&](std::size_t t) { return alpha[t] >= C; };
  auto is_lower = [&](std::size_t t) { return alpha[t] <= 0.0; };
  auto dual_value = [&] {
    double f = 0.0;
    for (std::size_t t = 0; t < n; ++t) f += alpha[t] * (G[t] - 1.0);
    return -0.5 * f;
  };
  if (trace_objective) sol.objective_trace.push_back(dual_value());

  constexpr double kInf = std::numeric_limits<double>::infinity();
  while (true) {
    // Working-set selection: i maximizes -y_t G_t over I_up, j minimizes
    // the second-order decrease estimate over I_low.
    double g_max = -kInf, g_max2 = -kInf;
    long i_idx = -1, j_idx = -1;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] > 0) {
        if (!is_upper(t) && -G[t] >= g_max) {
          g_max = -G[t];
          i_idx = static_cast<long>(t);
        }
      } else if (!is_lower(t) && G[t] >= g_max) {
        g_max = G[t];
        i_idx = static_cast<long>(t);
      }
    }
    double obj_diff_min = kInf;
    if (i_idx >= 0) {
      const auto& Qi = Q.row(static_cast<std::size_t>(i_idx));
      const double qd_i = Q.diag(static_cast<std::size_t>(i_idx));
      const double yi = y[static_cast<std::size_t>(i_idx)];
      for (std::size_t t = 0; t < n; ++t) {
        double grad_diff = 0.0, quad = 0.0;
        if (y[t] > 0) {
          if (is_lower(t)) continue;
          grad_diff = g_max + G[t];
          g_max2 = std::max(g_max2, G[t]);
          quad = qd_i + Q.diag(t) - 2.0 * yi * Qi[t];
        } else {
          if (is_upper(t)) continue;
          grad_diff = g_max - G[t];
          g_max2 = std::max(g_max2, -G[t]);
          quad = qd_i + Q.diag(t) + 2.0 * yi * Qi[t];
        }
        if (grad_diff > 0) {
          const double obj_diff =
              -(grad_diff * grad_diff) / (quad > 0 ? quad : kTau);
          if (obj_diff <= obj_diff_min) {
            j_idx = static_cast<long>(t);
            obj_diff_min = obj_diff;
          }
        }
      }
    }
    sol.max_violation = (i_idx < 0) ? 0.0 : std::max(0.0, g_max + g_max2);
    if (i_idx < 0 || j_idx < 0 || g_max + g_max2 < tolerance) {
      sol.converged = true;
      break;
    }
    if (sol.iterations >= max_iterations) break;
    ++sol.iterations;

    const auto i = static_cast<std::size_t>(i_idx);
    const auto j = static_cast<std::size_t>(j_idx);
    const auto& Qi = Q.row(i);
    const auto& Qj = Q.row(j);
    const double old_ai = alpha[i], old_aj = alpha[j];

    if (y[i] != y[j]) {
      double quad = Q.diag(i) + Q.diag(j) + 2.0 * Qi[j];
      if (quad <= 0) quad = kTau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = Q.diag(i) + Q.diag(j) - 2.0 * Qi[j];
      if (quad <= 0) quad = kTau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
      } else if (alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = sum;
      }
      if (sum > C) {
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = sum;
      }
    }

    const double d_ai = alpha[i] - old_ai;
    const double d_aj = alpha[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) G[t] += Qi[t] * d_ai + Qj[t] * d_aj;
    if (trace_objective) sol.objective_trace.push_back(dual_value());
  }

  // Bias: average over free multipliers, else midpoint of the feasible
  // interval.
  double ub = kInf, lb = -kInf, sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yG = y[t] * G[t];
    if (is_upper(t)) {
      if (y[t] < 0) ub = std::min(ub, yG);
      else lb = std::max(lb, yG);
    } else if (is_lower(t)) {
      if (y[t] > 0) ub = std::min(ub, yG);
      else lb = std::max(lb, yG);
    } else {
      ++n_free;
      sum_free += yG;
    }
  }
  const double rho =
      n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
  sol.bias = -rho;
  sol.dual_objective = dual_value();
  return sol;
}

PlattCoefficients fit_platt(std::span<const double> dec,
                            std::span<const Label> labels) {
  const std::size_t n = dec.size();
  double prior1 = 0, prior0 = 0;
  for (auto l : labels) (l == Label::Hyperpartisan ? prior1 : prior0) += 1;
  constexpr int kMaxIter = 100;
  constexpr double kMinStep = 1e-10, kSigma = 1e-12, kEps = 1e-5;
  const double hi = (prior1 + 1.0) / (prior1 + 2.0);
  const double lo = 1.0 / (prior0 + 2.0);
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = labels[i] == Label::Hyperpartisan ? hi : lo;
  }
  double A = 0.0, B = std::log((prior0 + 1.0) / (prior1 + 1.0));
  auto objective = [&](double a, double b) {
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double fApB = dec[i] * a + b;
      f += fApB >= 0 ? t[i] * fApB + std::log1p(std::exp(-fApB))
                     : (t[i] - 1.0) * fApB + std::log1p(std::exp(fApB));
    }
    return f;
  };
  double fval = objective(A, B);
  for (int iter = 0; iter < kMaxIter; ++iter) {
    double h11 = kSigma, h22 = kSigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double fApB = dec[i] * A + B;
      double p, q;
      if (fApB >= 0) {
        p = std::exp(-fApB) / (1.0 + std::exp(-fApB));
        q = 1.0 / (1.0 + std::exp(-fApB));
      } else {
        p = 1.0 / (1.0 + std::exp(fApB));
        q = std::exp(fApB) / (1.0 + std::exp(fApB));
      }
      const double d2 = p * q;
      h11 += dec[i] * dec[i] * d2;
      h22 += d2;
      h21 += dec[i] * d2;
      const double d1 = t[i] - p;
      g1 += dec[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < kEps && std::abs(g2) < kEps) break;
    const double det = h11 * h22 - h21 * h21;
    const double dA = -(h22 * g1 - h21 * g2) / det;
    const double dB = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * dA + g2 * dB;
    double step = 1.0;
    while (step >= kMinStep) {
      const double nA = A + step * dA, nB = B + step * dB;
      const double nf = objective(nA, nB);
      if (nf < fval + 1e-4 * step * gd) {
        A = nA;
        B = nB;
        fval = nf;
        break;
      }
      step /= 2.0;
    }
    if (step < kMinStep) break;
  }
  return {A, B};
}

Svm::Svm(SvmParams params) : params_(params) { params_.validate(); }

void Svm::fit(const LabeledVectors& train) {
  train.require_both_classes("svm");
  const std::size_t n = train.size();
  gamma_value_ = params_.gamma ? *params_.gamma : scale_gamma(train);
  const long max_iter =
      static_cast<long>(params_.max_passes) *
      static_cast<long>(std::max<std::size_t>(n, 100));
  const std::size_t cache = params_.cache_mb * 1024 * 1024;
  auto solve = [&](const LabeledVectors& data) {
    return solve_smo(data, params_.C, gamma_value_, params_.coef0,
                     params_.degree, params_.tolerance, max_iter, cache);
  };

  solution_ = solve(train);
  converged_ = solution_.converged;
  if (!converged_) {
    warn("svm: SMO stopped after " + std::to_string(solution_.iterations) +
         " iterations with KKT violation " +
         std::to_string(solution_.max_violation));
  }
  support_vectors_.clear();
  dual_coefs_.clear();
  for (std::size_t i = 0; i < n; ++i) {
    if (solution_.alpha[i] > 0.0) {
      support_vectors_.push_back(train.x[i]);
      dual_coefs_.push_back(solution_.alpha[i] * label_sign(train.y[i]));
    }
  }
  bias_ = solution_.bias;
  dimension_ = train.dimension;
  trained_ = true;

  if (!params_.probability) {
    platt_ = {-1.0, 0.0};
    return;
  }
  // Platt scaling on out-of-fold decision values; fall back to in-sample
  // values when the data is too small for every fold to hold both classes.
  std::vector<double> dec(n);
  bool out_of_fold = false;
  const auto k = static_cast<std::size_t>(params_.platt_folds);
  const auto counts = train.class_counts();
  if (counts[0] >= k && counts[1] >= k) {
    const auto folds = make_folds(train.y, k, params_.seed);
    out_of_fold = true;
    for (std::size_t f = 0; f < k && out_of_fold; ++f) {
      std::vector<std::size_t> in, out;
      for (std::size_t i = 0; i < n; ++i) {
        (folds[i] == f ? out : in).push_back(i);
      }
      const auto part = train.subset(in);
      const auto pc = part.class_counts();
      if (pc[0] == 0 || pc[1] == 0) {
        out_of_fold = false;
        break;
      }
      const auto s = solve(part);
      for (std::size_t i : out) {
        double f_val = s.bias;
        for (std::size_t m = 0; m < part.size(); ++m) {
          if (s.alpha[m] == 0.0) continue;
          f_val += s.alpha[m] * label_sign(part.y[m]) *
                   poly_kernel(part.x[m], train.x[i], gamma_value_,
                               params_.coef0, params_.degree);
        }
        dec[i] = f_val;
      }
    }
  }
  if (!out_of_fold) {
    for (std::size_t i = 0; i < n; ++i) dec[i] = decision_value(train.x[i]);
  }
  platt_ = fit_platt(dec, train.y);
}

double Svm::decision_value(const SparseVector& x) const {
  double f = bias_;
  for (std::size_t s = 0; s < support_vectors_.size(); ++s) {
    f += dual_coefs_[s] * poly_kernel(support_vectors_[s], x, gamma_value_,
                                      params_.coef0, params_.degree);
  }
  return f;
}

ProbaRow Svm::predict_row(const SparseVector& x) const {
  const double fApB = platt_.A * decision_value(x) + platt_.B;
  // p1 = 1 / (1 + exp(fApB)), p0 = 1 - p1, both computed without overflow.
  double p1, p0;
  if (fApB >= 0) {
    const double e = std::exp(-fApB);
    p1 = e / (1.0 + e);
    p0 = 1.0 / (1.0 + e);
  } else {
    const double e = std::exp(fApB);
    p1 = 1.0 / (1.0 + e);
    p0 = e / (1.0 + e);
  }
  const double total = p0 + p1;
  return {p0 / total, p1 / total};
}

nlohmann::json Svm::hyperparams() const {
  nlohmann::json j = {{"C", params_.C},
                      {"kernel", "poly"},
                      {"degree", params_.degree},
                      {"coef0", params_.coef0},
                      {"tol", params_.tolerance},
                      {"max_passes", params_.max_passes},
                      {"probability", params_.probability},
                      {"platt_folds", params_.platt_folds},
                      {"seed", params_.seed},
                      {"cache_mb", params_.cache_mb}};
  j["gamma"] = params_.gamma ? nlohmann::json(*params_.gamma)
                             : nlohmann::json("scale");
  return j;
}

nlohmann::json Svm::to_json() const {
  auto j = hyperparams();
  j["dimension"] = dimension_;
  j["gamma_value"] = gamma_value_;
  j["bias"] = bias_;
  j["platt_A"] = platt_.A;
  j["platt_B"] = platt_.B;
  j["dual_coefs"] = dual_coefs_;
  j["converged"] = converged_;
  auto svs = nlohmann::json::array();
  for (const auto& sv : support_vectors_) {
    auto entries = nlohmann::json::array();
    for (const auto& [i, v] : sv.entries()) entries.push_back({i, v});
    svs.push_back(std::move(entries));
  }
  j["support_vectors"] = std::move(svs);
  return j;
}

SvmParams Svm::params_from_json(const nlohmann::json& j) {
  detail::ParamReader r(j, "svm");
  SvmParams p;
  p.C = r.get("C", p.C);
  const auto kernel = r.get<std::string>("kernel", "poly");
  if (kernel != "poly") throw ConfigError("svm: only kernel 'poly' is supported");
  p.degree = r.get("degree", p.degree);
  p.coef0 = r.get("coef0", p.coef0);
  if (r.has("gamma")) {
    const auto& g = r.raw("gamma");
    if (g.is_string()) {
      if (g.get<std::string>() != "scale") {
        throw ConfigError("svm: gamma must be 'scale' or a number");
      }
    } else if (g.is_number()) {
      p.gamma = g.get<double>();
    } else {
      throw ConfigError("svm: gamma must be 'scale' or a number");
    }
  }
  p.tolerance = r.get("tol", p.tolerance);
  p.max_passes = r.get("max_passes", p.max_passes);
  p.probability = r.get("probability", p.probability);
  p.platt_folds = r.get("platt_folds", p.platt_folds);
  p.seed = r.get("seed", p.seed);
  p.cache_mb = r.get("cache_mb", p.cache_mb);
  for (const char* key : {"dimension", "gamma_value", "bias", "platt_A",
                          "platt_B", "dual_coefs", "converged",
                          "support_vectors"}) {
    if (r.has(key)) r.raw(key);
  }
  r.finish();
  p.validate();
  return p;
}

std::unique_ptr<Svm> Svm::from_json(const nlohmann::json& j) {
  auto model = std::make_unique<Svm>(params_from_json(j));
  model->dimension_ = j.at("dimension").get<std::size_t>();
  model->gamma_value_ = j.at("gamma_value").get<double>();
  model->bias_ = j.at("bias").get<double>();
  model->platt_ = {j.at("platt_A").get<double>(), j.at("platt_B").get<double>()};
  model->dual_coefs_ = j.at("dual_coefs").get<std::vector<double>>();
  model->converged_ = j.value("converged", true);
  for (const auto& sv : j.at("support_vectors")) {
    std::vector<SparseVector::Entry> entries;
    for (const auto& e : sv) {
      entries.emplace_back(e.at(0).get<std::uint32_t>(), e.at(1).get<double>());
    }
    model->support_vectors_.emplace_back(model->dimension_, std::move(entries));
  }
  if (model->support_vectors_.size() != model->dual_coefs_.size()) {
    throw ModelFormatError("params", "svm: support vector count mismatch");
  }
  model->trained_ = true;
  return model;
}

}  // namespace hpd
