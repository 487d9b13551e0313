#pragma once

#include <array>
#include <vector>

#include "hpd/classifier.hpp"

namespace hpd {

struct NaiveBayesParams {
  double alpha = 0.01;
  bool fit_prior = true;

  void validate() const;
};

// Multinomial naive Bayes over non-negative (e.g. TF-IDF) feature values:
//   log p(f | c) = ln((count(f, c) + alpha) / (sum_f count(f, c) + alpha V))
class NaiveBayes final : public VectorClassifier {
 public:
  explicit NaiveBayes(NaiveBayesParams params = {});

  std::string_view model_type() const override { return "nb"; }
  void fit(const LabeledVectors& train) override;
  bool trained() const override { return trained_; }
  std::size_t dimension() const override { return dimension_; }
  ProbaRow predict_row(const SparseVector& x) const override;
  nlohmann::json hyperparams() const override;
  nlohmann::json to_json() const override;

  static NaiveBayesParams params_from_json(const nlohmann::json& j);
  static std::unique_ptr<NaiveBayes> from_json(const nlohmann::json& j);

  const std::array<double, kNumClasses>& log_prior() const noexcept {
    return log_prior_;
  }
  // [class][feature]
  const std::array<std::vector<double>, kNumClasses>& feature_log_prob()
      const noexcept {
    return feature_log_prob_;
  }

 private:
  NaiveBayesParams params_;
  std::size_t dimension_ = 0;
  bool trained_ = false;
  std::array<double, kNumClasses> log_prior_{};
  std::array<std::vector<double>, kNumClasses> feature_log_prob_;
};

}  // namespace hpd
