#include "hpd/explain.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_map>

#include "hpd/error.hpp"
#include "hpd/rng.hpp"
#include "hpd/util.hpp"

namespace hpd {

void ExplainConfig::validate() const {
  if (num_samples < 1) throw ConfigError("explain: num_samples must be >= 1");
  if (!(kernel_width > 0)) {
    throw ConfigError("explain: kernel_width must be positive");
  }
  if (!(ridge_lambda >= 0)) {
    throw ConfigError("explain: ridge_lambda must be >= 0");
  }
  if (batch_size < 1) throw ConfigError("explain: batch_size must be >= 1");
}

std::vector<Mask> perturbation_masks(std::size_t n, const ExplainConfig& cfg) {
  if (n == 0) throw DataError("explain", "cannot perturb zero tokens");
  std::vector<Mask> masks;
  const bool exhaustive = cfg.exhaustive_when_feasible && n < 64 &&
                          (std::uint64_t{1} << n) <= kMaxExhaustiveMasks;
  if (exhaustive) {
    const std::uint64_t count = std::uint64_t{1} << n;
    masks.reserve(count);
    for (std::uint64_t k = count; k-- > 0;) {
      Mask m(n);
      for (std::size_t j = 0; j < n; ++j) m[j] = (k >> (n - 1 - j)) & 1U;
      masks.push_back(std::move(m));
    }
    return masks;
  }
  Rng rng(cfg.seed);
  masks.reserve(cfg.num_samples);
  masks.emplace_back(n, 1);
  std::vector<std::size_t> order(n);
  while (masks.size() < cfg.num_samples) {
    const std::size_t drop = 1 + rng.below(n);
    std::iota(order.begin(), order.end(), 0);
    Mask m(n, 1);
    for (std::size_t i = 0; i < drop; ++i) {
      const std::size_t j = i + rng.below(n - i);
      std::swap(order[i], order[j]);
      m[order[i]] = 0;
    }
    masks.push_back(std::move(m));
  }
  return masks;
}

double mask_distance(const Mask& mask) {
  if (mask.empty()) return 1.0;
  const auto active = static_cast<double>(std::count(mask.begin(), mask.end(), 1));
  return 1.0 - std::sqrt(active / static_cast<double>(mask.size()));
}

double kernel_weight(double distance, double width) {
  return std::exp(-(distance * distance) / (width * width));
}

SurrogateFit fit_local_surrogate(std::span<const Mask> masks,
                                 std::span<const double> responses,
                                 std::span<const double> weights,
                                 double lambda) {
  const std::size_t m = masks.size();
  if (responses.size() != m || weights.size() != m) {
    throw DataError("explain", "surrogate inputs have different lengths");
  }
  if (m < 2) throw DataError("explain", "surrogate needs at least 2 masks");
  const std::size_t n = masks.front().size();
  bool distinct = false;
  for (const auto& mask : masks) {
    if (mask.size() != n) throw DataError("explain", "masks differ in length");
    distinct = distinct || mask != masks.front();
  }
  if (!distinct) throw DataError("explain", "surrogate needs 2 distinct masks");

  Eigen::MatrixXd X(m, n);
  Eigen::VectorXd y(m), w(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) X(i, j) = masks[i][j];
    y(i) = responses[i];
    w(i) = weights[i];
  }
  const double wsum = w.sum();
  if (!(wsum > 0)) throw DataError("explain", "surrogate weights sum to zero");
  const Eigen::RowVectorXd x_mean = (w.transpose() * X) / wsum;
  const double y_mean = w.dot(y) / wsum;
  const Eigen::MatrixXd Xc = X.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;
  const double ss_tot = (w.array() * yc.array().square()).sum();

  SurrogateFit fit;
  fit.coefficients.assign(n, 0.0);
  fit.intercept = y_mean;
  fit.r2 = 1.0;
  if (ss_tot <= 0.0) return fit;

  Eigen::MatrixXd A = Xc.transpose() * w.asDiagonal() * Xc;
  A.diagonal().array() += lambda;
  const Eigen::VectorXd b = Xc.transpose() * (w.asDiagonal() * yc);
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  bool singular = llt.info() != Eigen::Success;
  if (!singular && lambda == 0.0) {
    const Eigen::MatrixXd L = llt.matrixL();
    const Eigen::ArrayXd d = L.diagonal().array().square();
    singular = d.minCoeff() <= 1e-12 * d.maxCoeff();
  }
  if (singular) {
    throw DataError("singular",
                    "surrogate normal equations are singular; use "
                    "ridge_lambda > 0");
  }
  const Eigen::VectorXd beta = llt.solve(b);
  for (std::size_t j = 0; j < n; ++j) fit.coefficients[j] = beta(j);
  fit.intercept = y_mean - x_mean.dot(beta);
  const Eigen::VectorXd resid = yc - Xc * beta;
  fit.r2 = 1.0 - (w.array() * resid.array().square()).sum() / ss_tot;
  return fit;
}

nlohmann::ordered_json Explanation::to_json() const {
  nlohmann::ordered_json j;
  j["doc_id"] = doc_id;
  j["explained_class"] = std::string(label_name(explained_class));
  j["original_probability"] = original_probability;
  j["intercept"] = intercept;
  j["r2"] = r2;
  j["sample_count"] = sample_count;
  auto weights = nlohmann::ordered_json::array();
  for (const auto& tw : token_weights) {
    weights.push_back({{"token", tw.token}, {"weight", tw.weight}});
  }
  j["weights"] = std::move(weights);
  return j;
}

std::vector<std::string> unique_tokens(const TokenList& tokens) {
  std::vector<std::string> out;
  std::unordered_map<std::string_view, std::size_t> seen;
  for (const auto& t : tokens) {
    if (seen.emplace(t, out.size()).second) out.push_back(t);
  }
  return out;
}

Explanation explain(const TextClassifier& model, const Document& doc,
                    const ExplainConfig& cfg) {
  cfg.validate();
  if (!doc.tokens || doc.tokens->empty()) {
    throw DataError("explain", "document '" + doc.id + "' has no tokens");
  }
  const TokenList& tokens = *doc.tokens;
  const auto vocab = unique_tokens(tokens);
  std::unordered_map<std::string_view, std::size_t> slot;
  for (std::size_t j = 0; j < vocab.size(); ++j) slot.emplace(vocab[j], j);
  std::vector<std::size_t> token_slot;
  token_slot.reserve(tokens.size());
  for (const auto& t : tokens) token_slot.push_back(slot.at(t));

  const auto masks = perturbation_masks(vocab.size(), cfg);
  std::vector<ProbaRow> rows;
  rows.reserve(masks.size());
  for (std::size_t start = 0; start < masks.size(); start += cfg.batch_size) {
    const std::size_t end = std::min(masks.size(), start + cfg.batch_size);
    std::vector<TokenList> batch;
    batch.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) {
      TokenList kept;
      for (std::size_t k = 0; k < tokens.size(); ++k) {
        if (masks[i][token_slot[k]]) kept.push_back(tokens[k]);
      }
      batch.push_back(std::move(kept));
    }
    auto out = model.predict_tokens(batch);
    rows.insert(rows.end(), out.begin(), out.end());
  }

  Explanation e;
  e.doc_id = doc.id;
  e.explained_class = cfg.target_class.value_or(argmax_label(rows.front()));
  const std::size_t target = class_index(e.explained_class);
  e.original_probability = rows.front()[target];
  e.sample_count = masks.size();

  std::vector<double> responses, weights;
  responses.reserve(masks.size());
  weights.reserve(masks.size());
  for (std::size_t i = 0; i < masks.size(); ++i) {
    responses.push_back(rows[i][target]);
    weights.push_back(kernel_weight(mask_distance(masks[i]), cfg.kernel_width));
  }
  const auto fit =
      fit_local_surrogate(masks, responses, weights, cfg.ridge_lambda);
  e.intercept = fit.intercept;
  e.r2 = fit.r2;

  std::vector<std::size_t> order(vocab.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(fit.coefficients[a]) > std::abs(fit.coefficients[b]);
  });
  order.resize(std::min(order.size(), cfg.top_k));
  for (std::size_t j : order) {
    e.token_weights.push_back({vocab[j], fit.coefficients[j]});
  }
  return e;
}

namespace {

std::string html_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string page_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "doc-%04zu.html", index);
  return buf;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

constexpr const char* kStyle =
    "body{font-family:sans-serif;max-width:60em;margin:2em auto;"
    "line-height:1.8}span.t{padding:0 .15em;border-radius:3px}"
    "table{border-collapse:collapse}td,th{padding:.2em .8em;"
    "border-bottom:1px solid #ddd;text-align:left}";

}  // namespace

std::string render_html(const Explanation& e, const Document& doc) {
  std::unordered_map<std::string_view, double> weight;
  double max_abs = 0.0;
  for (const auto& tw : e.token_weights) {
    weight.emplace(tw.token, tw.weight);
    max_abs = std::max(max_abs, std::abs(tw.weight));
  }
  std::string html = "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">";
  html += "<title>" + html_escape(e.doc_id) + "</title><style>";
  html += kStyle;
  html += "</style></head><body>\n";
  html += "<h1>" + html_escape(doc.title.empty() ? e.doc_id : doc.title) +
          "</h1>\n";
  html += "<p>Prediction: <b>" +
          html_escape(std::string(label_name(e.explained_class))) +
          "</b> with probability " + fixed(e.original_probability, 2) +
          " (surrogate R&sup2; " + fixed(e.r2, 3) + ", " +
          std::to_string(e.sample_count) + " samples)</p>\n";
  html += "<table><tr><th>Token</th><th>Weight</th></tr>\n";
  for (const auto& tw : e.token_weights) {
    html += "<tr><td>" + html_escape(tw.token) + "</td><td>" +
            fixed(tw.weight, 4) + "</td></tr>\n";
  }
  html += "</table>\n<p>";
  if (doc.tokens) {
    for (const auto& t : *doc.tokens) {
      auto it = weight.find(t);
      if (it == weight.end() || max_abs == 0.0) {
        html += "<span class=\"t\">" + html_escape(t) + "</span> ";
        continue;
      }
      const double alpha = std::abs(it->second) / max_abs;
      const char* rgb = it->second > 0 ? "0,150,0" : "200,0,0";
      html += "<span class=\"t\" style=\"background:rgba(" + std::string(rgb) +
              "," + fixed(alpha, 3) + ")\">" + html_escape(t) + "</span> ";
    }
  }
  html += "</p>\n<p><a href=\"index.html\">index</a></p>\n</body></html>\n";
  return html;
}

void write_html_report(const std::filesystem::path& dir,
                       std::span<const Explanation> explanations,
                       std::span<const Document> docs) {
  if (explanations.size() != docs.size()) {
    throw InvariantError("one document per explanation expected");
  }
  std::string index =
      "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>"
      "Explanations</title><style>";
  index += kStyle;
  index += "</style></head><body>\n<h1>Explanations</h1>\n<table><tr><th>"
           "Document</th><th>Class</th><th>Probability</th><th>Top token</th>"
           "</tr>\n";
  for (std::size_t i = 0; i < explanations.size(); ++i) {
    const auto& e = explanations[i];
    write_file(dir / page_name(i), render_html(e, docs[i]));
    index += "<tr><td><a href=\"" + page_name(i) + "\">" +
             html_escape(e.doc_id) + "</a></td><td>" +
             html_escape(std::string(label_name(e.explained_class))) +
             "</td><td>" + fixed(e.original_probability, 2) + "</td><td>" +
             (e.token_weights.empty() ? std::string()
                                      : html_escape(e.token_weights[0].token)) +
             "</td></tr>\n";
  }
  index += "</table>\n</body></html>\n";
  write_file(dir / "index.html", index);
}

}  // namespace hpd
