#include "hpd/naive_bayes.hpp"

#include <cmath>

#include "hpd/error.hpp"
#include "param_reader.hpp"

namespace hpd {

void NaiveBayesParams::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ConfigError("nb: alpha must be > 0");
  }
}

NaiveBayes::NaiveBayes(NaiveBayesParams params) : params_(params) {
  params_.validate();
}

void NaiveBayes::fit(const LabeledVectors& train) {
  train.require_both_classes("nb");
  const std::size_t d = train.dimension;
  std::array<std::vector<double>, kNumClasses> counts;
  for (auto& c : counts) c.assign(d, 0.0);
  for (std::size_t i = 0; i < train.size(); ++i) {
    auto& row = counts[class_index(train.y[i])];
    for (const auto& [k, v] : train.x[i].entries()) {
      if (v < 0.0) {
        throw DataError("negative_feature",
                        "nb: negative feature value at sample " +
                            std::to_string(i) + ", feature " +
                            std::to_string(k));
      }
      row[k] += v;
    }
  }
  const auto class_counts = train.class_counts();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    double total = 0.0;
    for (double v : counts[c]) total += v;
    const double denom = std::log(total + params_.alpha * static_cast<double>(d));
    feature_log_prob_[c].resize(d);
    for (std::size_t k = 0; k < d; ++k) {
      feature_log_prob_[c][k] = std::log(counts[c][k] + params_.alpha) - denom;
    }
    log_prior_[c] =
        params_.fit_prior
            ? std::log(static_cast<double>(class_counts[c]) /
                       static_cast<double>(train.size()))
            : -std::log(static_cast<double>(kNumClasses));
  }
  dimension_ = d;
  trained_ = true;
}

ProbaRow NaiveBayes::predict_row(const SparseVector& x) const {
  std::array<double, kNumClasses> jll = log_prior_;
  for (const auto& [k, v] : x.entries()) {
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      jll[c] += v * feature_log_prob_[c][k];
    }
  }
  const double top = std::max(jll[0], jll[1]);
  const double e0 = std::exp(jll[0] - top);
  const double e1 = std::exp(jll[1] - top);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

nlohmann::json NaiveBayes::hyperparams() const {
  return {{"alpha", params_.alpha}, {"fit_prior", params_.fit_prior}};
}

nlohmann::json NaiveBayes::to_json() const {
  auto j = hyperparams();
  j["dimension"] = dimension_;
  j["log_prior"] = log_prior_;
  j["feature_log_prob"] = feature_log_prob_;
  return j;
}

NaiveBayesParams NaiveBayes::params_from_json(const nlohmann::json& j) {
  detail::ParamReader r(j, "nb");
  NaiveBayesParams p;
  p.alpha = r.get("alpha", p.alpha);
  p.fit_prior = r.get("fit_prior", p.fit_prior);
  for (const char* key : {"dimension", "log_prior", "feature_log_prob"}) {
    if (r.has(key)) r.raw(key);
  }
  r.finish();
  p.validate();
  return p;
}

std::unique_ptr<NaiveBayes> NaiveBayes::from_json(const nlohmann::json& j) {
  auto model = std::make_unique<NaiveBayes>(params_from_json(j));
  model->dimension_ = j.at("dimension").get<std::size_t>();
  model->log_prior_ = j.at("log_prior").get<std::array<double, kNumClasses>>();
  model->feature_log_prob_ =
      j.at("feature_log_prob")
          .get<std::array<std::vector<double>, kNumClasses>>();
  for (const auto& row : model->feature_log_prob_) {
    if (row.size() != model->dimension_) {
      throw ModelFormatError("params", "nb: feature_log_prob has wrong size");
    }
  }
  model->trained_ = true;
  return model;
}

}  // namespace hpd
