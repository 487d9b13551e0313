#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hpd::testing {

namespace {

double dense_dot(const SparseVector& x, const SparseVector& z) {
  const auto a = x.to_dense();
  const auto b = z.to_dense();
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

}  // namespace

double PolyKernel::operator()(const SparseVector& x,
                              const SparseVector& z) const {
  return std::pow(gamma * dense_dot(x, z) + coef0, degree);
}

double label_sign(Label y) { return y == Label::Hyperpartisan ? 1.0 : -1.0; }

Matrix dual_matrix(const LabeledVectors& d, const PolyKernel& k) {
  Matrix q(d.size(), std::vector<double>(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = 0; j < d.size(); ++j) {
      q[i][j] = label_sign(d.y[i]) * label_sign(d.y[j]) * k(d.x[i], d.x[j]);
    }
  }
  return q;
}

double dual_objective(const Matrix& q, const std::vector<double>& alpha) {
  double linear = 0.0;
  double quad = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    linear += alpha[i];
    for (std::size_t j = 0; j < alpha.size(); ++j) {
      quad += alpha[i] * alpha[j] * q[i][j];
    }
  }
  return linear - 0.5 * quad;
}

double brute_force_dual(const LabeledVectors& d, const PolyKernel& k,
                        double C) {
  const auto q = dual_matrix(d, k);
  const std::size_t n = d.size();
  const std::size_t free = n - 1;
  const int points = 11;
  std::vector<double> lo(free, 0.0);
  std::vector<double> hi(free, C);
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> best_alpha(n, 0.0);
  for (int level = 0; level < 60; ++level) {
    std::vector<double> step(free);
    for (std::size_t i = 0; i < free; ++i) {
      step[i] = (hi[i] - lo[i]) / (points - 1);
    }
    std::vector<int> idx(free, 0);
    std::vector<double> alpha(n);
    while (true) {
      double balance = 0.0;
      for (std::size_t i = 0; i < free; ++i) {
        alpha[i] = lo[i] + step[i] * idx[i];
        balance += alpha[i] * label_sign(d.y[i]);
      }
      alpha[n - 1] = -balance * label_sign(d.y[n - 1]);
      if (alpha[n - 1] >= 0.0 && alpha[n - 1] <= C) {
        const double f = dual_objective(q, alpha);
        if (f > best) {
          best = f;
          best_alpha = alpha;
        }
      }
      std::size_t pos = 0;
      while (pos < free && ++idx[pos] == points) idx[pos++] = 0;
      if (pos == free) break;
    }
    double widest = 0.0;
    for (std::size_t i = 0; i < free; ++i) {
      const double half = 2.0 * step[i];
      lo[i] = std::max(0.0, best_alpha[i] - half);
      hi[i] = std::min(C, best_alpha[i] + half);
      widest = std::max(widest, step[i]);
    }
    if (widest < 1e-7) break;
  }
  return best;
}

double kkt_residual(const LabeledVectors& d, const PolyKernel& k, double C,
                    const std::vector<double>& alpha) {
  const auto q = dual_matrix(d, k);
  double up = -std::numeric_limits<double>::infinity();
  double low = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d.size(); ++i) {
    double g = -1.0;
    for (std::size_t j = 0; j < d.size(); ++j) g += q[i][j] * alpha[j];
    const double y = label_sign(d.y[i]);
    const double v = -y * g;
    const bool in_up = (y > 0 && alpha[i] < C) || (y < 0 && alpha[i] > 0);
    const bool in_low = (y > 0 && alpha[i] > 0) || (y < 0 && alpha[i] < C);
    if (in_up) up = std::max(up, v);
    if (in_low) low = std::min(low, v);
  }
  return std::max(0.0, up - low);
}

ProbaRow nb_posterior(const LabeledVectors& d, double alpha, bool fit_prior,
                      const SparseVector& query) {
  std::vector<std::vector<double>> sums(2, std::vector<double>(d.dimension));
  double docs[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto c = class_index(d.y[i]);
    docs[c] += 1.0;
    const auto x = d.x[i].to_dense();
    for (std::size_t j = 0; j < x.size(); ++j) sums[c][j] += x[j];
  }
  const auto q = query.to_dense();
  double log_score[2];
  for (std::size_t c = 0; c < 2; ++c) {
    double total = 0.0;
    for (double s : sums[c]) total += s + alpha;
    log_score[c] = fit_prior ? std::log(docs[c] / (docs[0] + docs[1]))
                             : std::log(0.5);
    for (std::size_t j = 0; j < q.size(); ++j) {
      log_score[c] += q[j] * std::log((sums[c][j] + alpha) / total);
    }
  }
  const double top = std::max(log_score[0], log_score[1]);
  const double e0 = std::exp(log_score[0] - top);
  const double e1 = std::exp(log_score[1] - top);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

double lr_objective_dense(const LabeledVectors& d,
                          const std::vector<double>& w, double b, double C) {
  double loss = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto x = d.x[i].to_dense();
    double z = b;
    for (std::size_t j = 0; j < x.size(); ++j) z += w[j] * x[j];
    const double m = label_sign(d.y[i]) * z;
    loss += m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
  }
  double reg = 0.0;
  for (double v : w) reg += v * v;
  return 0.5 * reg / C + loss;
}

std::vector<double> lr_numeric_gradient(const LabeledVectors& d,
                                        const std::vector<double>& w, double b,
                                        double C, double step) {
  std::vector<double> grad(w.size() + 1);
  for (std::size_t j = 0; j <= w.size(); ++j) {
    auto wp = w;
    auto wm = w;
    double bp = b;
    double bm = b;
    if (j < w.size()) {
      wp[j] += step;
      wm[j] -= step;
    } else {
      bp += step;
      bm -= step;
    }
    grad[j] = (lr_objective_dense(d, wp, bp, C) -
               lr_objective_dense(d, wm, bm, C)) /
              (2.0 * step);
  }
  return grad;
}

std::vector<double> main_effects(
    std::size_t n, const std::function<double(const std::vector<bool>&)>& f) {
  std::vector<double> effects(n, 0.0);
  const std::size_t settings = std::size_t{1} << n;
  for (std::size_t bits = 0; bits < settings; ++bits) {
    std::vector<bool> on(n);
    for (std::size_t k = 0; k < n; ++k) on[k] = (bits >> k) & 1;
    const double value = f(on);
    for (std::size_t j = 0; j < n; ++j) effects[j] += on[j] ? value : -value;
  }
  for (auto& e : effects) e /= static_cast<double>(settings / 2);
  return effects;
}

double f1_score(const std::vector<Label>& truth,
                const std::vector<Label>& pred) {
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] == Label::Hyperpartisan;
    const bool p = pred[i] == Label::Hyperpartisan;
    tp += t && p;
    fp += !t && p;
    fn += t && !p;
  }
  return tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
}

double accuracy_score(const std::vector<Label>& truth,
                      const std::vector<Label>& pred) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == pred[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

std::vector<double> fold_scores(const std::string& model_type,
                                const nlohmann::json& params,
                                const LabeledVectors& data,
                                const std::vector<std::size_t>& assignment,
                                std::size_t folds, bool use_f1) {
  std::vector<double> scores;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < data.size(); ++i) {
      (assignment[i] == f ? test_rows : train_rows).push_back(i);
    }
    auto model = make_classifier(model_type, params);
    model->fit(data.subset(train_rows));
    const auto held = data.subset(test_rows);
    std::vector<Label> pred;
    for (const auto& row : model->predict_proba(held.x)) {
      pred.push_back(argmax_label(row));
    }
    scores.push_back(use_f1 ? f1_score(held.y, pred)
                            : accuracy_score(held.y, pred));
  }
  return scores;
}

}  // namespace hpd::testing
