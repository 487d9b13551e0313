#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>

#include "hpd/error.hpp"
#include "hpd/rng.hpp"
#include "hpd/svm.hpp"
#include "hpd/util.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace hpd;
using hpd::testing::brute_force_dual;
using hpd::testing::dual_matrix;
using hpd::testing::dual_objective;
using Kernel = hpd::testing::PolyKernel;

namespace {

LabeledVectors dense_points(const std::vector<std::vector<double>>& rows,
                            const std::vector<int>& labels) {
  LabeledVectors d;
  d.dimension = rows.front().size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<SparseVector::Entry> e;
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      e.emplace_back(static_cast<std::uint32_t>(j), rows[i][j]);
    }
    d.x.emplace_back(d.dimension, std::move(e));
    d.y.push_back(labels[i] > 0 ? Label::Hyperpartisan : Label::NotHyperpartisan);
  }
  return d;
}

double sign(Label y) { return testing::label_sign(y); }

SvmParams linear_params(double C) {
  SvmParams p;
  p.C = C;
  p.degree = 1;
  p.coef0 = 0.0;
  p.gamma = 1.0;
  p.tolerance = 1e-6;
  p.probability = false;
  return p;
}

SmoSolution solve(const LabeledVectors& d, const SvmParams& p, bool trace = false) {
  return solve_smo(d, p.C, *p.gamma, p.coef0, p.degree, p.tolerance,
                   1'000'000, 1 << 20, trace);
}

}  // namespace

TEST_CASE("polynomial kernel values") {
  const SparseVector x(3, {{0, 1.0}});
  const SparseVector z(3, {{1, 1.0}});
  CHECK(poly_kernel(x, z, 1.0, 0.1, 3) == doctest::Approx(0.001).epsilon(1e-12));
  CHECK(poly_kernel(x, x, 1.0, 0.1, 3) == doctest::Approx(1.331).epsilon(1e-12));
  CHECK_THROWS_AS(poly_kernel(x, SparseVector(2), 1.0, 0.1, 3), DataError);
  const auto data = testing::random_vectors(20, 15, 0.3, 4);
  for (std::size_t i = 0; i + 1 < data.size(); ++i) {
    CHECK(poly_kernel(data.x[i], data.x[i + 1], 0.7, 0.1, 3) ==
          poly_kernel(data.x[i + 1], data.x[i], 0.7, 0.1, 3));
  }
}

TEST_CASE("scale gamma uses the variance of the dense training matrix") {
  const auto data = testing::random_vectors(12, 7, 0.4, 6);
  double sum = 0.0;
  for (const auto& x : data.x) {
    for (double v : x.to_dense()) sum += v;
  }
  const double cells = 12.0 * 7.0;
  const double mean = sum / cells;
  double var = 0.0;
  for (const auto& x : data.x) {
    for (double v : x.to_dense()) var += (v - mean) * (v - mean);
  }
  var /= cells;
  CHECK(scale_gamma(data) == doctest::Approx(1.0 / (7.0 * var)).epsilon(1e-12));
}

TEST_CASE("four separable points: dual optimum matches the grid oracle") {
  const auto d = dense_points({{1.0, 0.0}, {2.0, 1.0}, {-1.0, 0.0}, {0.0, -1.5}},
                              {1, 1, -1, -1});
  const auto p = linear_params(1.0);
  const auto sol = solve(d, p);
  CHECK(sol.converged);
  const double oracle = brute_force_dual(d, Kernel{}, p.C);
  CHECK(std::abs(sol.dual_objective - oracle) <= 1e-4);
  CHECK(std::abs(dual_objective(dual_matrix(d, Kernel{}), sol.alpha) - sol.dual_objective) <= 1e-9);
}

TEST_CASE("six overlapping points with a cubic kernel match the grid oracle") {
  const auto d = dense_points({{0.2, 0.9}, {0.8, 0.1}, {0.5, 0.5},
                               {0.3, 0.4}, {0.9, 0.8}, {0.1, 0.2}},
                              {1, -1, 1, -1, -1, 1});
  SvmParams p = linear_params(2.0);
  p.degree = 3;
  p.coef0 = 0.1;
  p.gamma = 1.5;
  const auto sol = solve(d, p);
  CHECK(sol.converged);
  const Kernel k{1.5, 0.1, 3};
  CHECK(std::abs(sol.dual_objective - brute_force_dual(d, k, p.C)) <= 1e-4);
}

TEST_CASE("multipliers stay in the box and satisfy KKT at convergence") {
  const auto d = testing::random_vectors(80, 10, 0.5, 13);
  SvmParams p = linear_params(10.0);
  p.degree = 3;
  p.coef0 = 0.1;
  p.gamma = scale_gamma(d);
  p.tolerance = 1e-3;
  const auto sol = solve(d, p);
  REQUIRE(sol.converged);
  CHECK(sol.max_violation <= p.tolerance);
  double balance = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(sol.alpha[i] >= 0.0);
    CHECK(sol.alpha[i] <= p.C);
    balance += sol.alpha[i] * sign(d.y[i]);
  }
  CHECK(std::abs(balance) <= 1e-9);
  // Gradient-based KKT residual: max over I_up minus min over I_low.
  double up = -std::numeric_limits<double>::infinity();
  double low = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d.size(); ++i) {
    double f = 0.0;
    for (std::size_t j = 0; j < d.size(); ++j) {
      f += sol.alpha[j] * sign(d.y[j]) *
           poly_kernel(d.x[i], d.x[j], *p.gamma, p.coef0, p.degree);
    }
    const double yi = sign(d.y[i]);
    const double value = yi - f;  // -y_i * grad_i of the minimization form
    const bool in_up = (yi > 0 && sol.alpha[i] < p.C) || (yi < 0 && sol.alpha[i] > 0);
    const bool in_low = (yi > 0 && sol.alpha[i] > 0) || (yi < 0 && sol.alpha[i] < p.C);
    if (in_up) up = std::max(up, value);
    if (in_low) low = std::min(low, value);
  }
  CHECK(up - low <= p.tolerance + 1e-9);

  Svm svm(p);
  svm.fit(d);
  CHECK(svm.support_vectors().size() <= d.size());
  for (double c : svm.dual_coefs()) CHECK(std::abs(c) <= p.C);
}

TEST_CASE("dual objective is non-decreasing across SMO iterations") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto d = testing::random_vectors(50, 8, 0.5, seed);
    SvmParams p = linear_params(10.0);
    p.degree = 3;
    p.coef0 = 0.1;
    p.gamma = scale_gamma(d);
    const auto sol = solve(d, p, true);
    REQUIRE(sol.objective_trace.size() >= 2);
    for (std::size_t i = 1; i < sol.objective_trace.size(); ++i) {
      CHECK(sol.objective_trace[i] >=
            sol.objective_trace[i - 1] - 1e-12 * std::abs(sol.objective_trace[i - 1]));
    }
  }
}

TEST_CASE("flipping every label negates the decision function") {
  auto d = testing::random_vectors(60, 10, 0.5, 21);
  SvmParams p = linear_params(10.0);
  p.degree = 3;
  p.coef0 = 0.1;
  p.gamma.reset();
  p.tolerance = 1e-8;
  Svm a(p);
  a.fit(d);
  for (auto& y : d.y) {
    y = y == Label::Hyperpartisan ? Label::NotHyperpartisan : Label::Hyperpartisan;
  }
  Svm b(p);
  b.fit(d);
  for (const auto& x : d.x) {
    const double fa = a.decision_value(x);
    const double fb = b.decision_value(x);
    CHECK(std::abs(fa + fb) <= 1e-5);
    if (std::abs(fa) > 1e-4) {
      CHECK(argmax_label(a.predict_row(x)) != argmax_label(b.predict_row(x)));
    }
  }
}

TEST_CASE("Platt probabilities follow the decision value") {
  auto d = testing::random_vectors(90, 12, 0.6, 33);
  Rng rng(34);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double margin = d.x[i].value(0) - d.x[i].value(1) + 0.3 * (rng.uniform() - 0.5);
    d.y[i] = margin > 0.0 ? Label::Hyperpartisan : Label::NotHyperpartisan;
  }
  Svm svm;
  svm.fit(d);
  CHECK(svm.platt().A < 0.0);
  std::vector<std::pair<double, double>> pairs;
  for (const auto& x : d.x) pairs.emplace_back(svm.decision_value(x), svm.predict_row(x)[1]);
  std::sort(pairs.begin(), pairs.end());
  for (std::size_t i = 1; i < pairs.size(); ++i) {
    CHECK(pairs[i].second >= pairs[i - 1].second);
  }
}

TEST_CASE("Platt fit recovers a known sigmoid") {
  Rng rng(2);
  std::vector<double> f;
  std::vector<Label> y;
  for (int i = 0; i < 4000; ++i) {
    const double v = 6.0 * rng.uniform() - 3.0;
    const double p1 = 1.0 / (1.0 + std::exp(-2.0 * v + 0.5));
    f.push_back(v);
    y.push_back(rng.uniform() < p1 ? Label::Hyperpartisan : Label::NotHyperpartisan);
  }
  const auto c = fit_platt(f, y);
  CHECK(c.A == doctest::Approx(-2.0).epsilon(0.1));
  CHECK(c.B == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("iteration cap yields an unconverged but usable model") {
  const auto d = testing::random_vectors(300, 30, 0.3, 41);
  SvmParams p;
  p.max_passes = 1;
  p.tolerance = 1e-12;
  p.probability = false;
  set_warnings_enabled(false);
  Svm svm(p);
  svm.fit(d);
  set_warnings_enabled(true);
  CHECK_FALSE(svm.converged());
  const auto row = svm.predict_row(d.x[0]);
  CHECK(row[0] + row[1] == doctest::Approx(1.0));
}

TEST_CASE("svm input errors") {
  auto d = testing::random_vectors(10, 4, 0.5, 1);
  for (auto& y : d.y) y = Label::Hyperpartisan;
  CHECK_THROWS_AS(Svm().fit(d), FitError);
  SvmParams p;
  p.C = -1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}
