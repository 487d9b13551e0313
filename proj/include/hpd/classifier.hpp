#pragma once

#include <array>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hpd/corpus.hpp"
#include "hpd/features.hpp"

namespace hpd {

// [p(NotHyperpartisan), p(Hyperpartisan)]
using ProbaRow = std::array<double, kNumClasses>;

// Confidence is always the larger entry of a row; argmax ties go to index 0.
inline double confidence(const ProbaRow& row) noexcept {
  return row[1] > row[0] ? row[1] : row[0];
}
inline Label argmax_label(const ProbaRow& row) noexcept {
  return row[1] > row[0] ? Label::Hyperpartisan : Label::NotHyperpartisan;
}

struct LabeledVectors {
  std::size_t dimension = 0;
  std::vector<SparseVector> x;
  std::vector<Label> y;

  std::size_t size() const noexcept { return x.size(); }
  ClassCounts class_counts() const;
  LabeledVectors subset(std::span<const std::size_t> indices) const;
  // Throws FitError unless both classes are present and shapes agree.
  void require_both_classes(std::string_view model) const;
};

// A locally trained model over sparse feature vectors.
class VectorClassifier {
 public:
  virtual ~VectorClassifier() = default;

  // "lr", "nb", "svm" or "rf".
  virtual std::string_view model_type() const = 0;
  virtual void fit(const LabeledVectors& train) = 0;
  virtual bool trained() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual ProbaRow predict_row(const SparseVector& x) const = 0;

  // Hyperparameters only, in the same shape make_classifier() accepts.
  virtual nlohmann::json hyperparams() const = 0;
  // Hyperparameters plus trained state.
  virtual nlohmann::json to_json() const = 0;

  // Throws DataError on dimension mismatch or an untrained model.
  std::vector<ProbaRow> predict_proba(std::span<const SparseVector> x) const;
  ProbaRow predict_proba(const SparseVector& x) const;

 protected:
  void check_input(const SparseVector& x) const;
};

std::vector<std::string> known_model_types();
// Unknown keys and out-of-range values are ConfigErrors.
std::unique_ptr<VectorClassifier> make_classifier(
    std::string_view model_type, const nlohmann::json& hyperparams);
std::unique_ptr<VectorClassifier> classifier_from_json(
    std::string_view model_type, const nlohmann::json& state);
// The best values reported for each family after grid search (C=10 etc.).
nlohmann::json table2_params(std::string_view model_type);

// Anything that maps documents (or token sequences) to probability rows:
// local TF-IDF pipelines and the remote transformer alike.
class TextClassifier {
 public:
  virtual ~TextClassifier() = default;
  virtual std::string describe() const = 0;
  virtual std::vector<ProbaRow> predict_tokens(
      std::span<const TokenList> inputs) const = 0;
  // Defaults to predict_tokens over the documents' token lists.
  virtual std::vector<ProbaRow> predict_documents(
      std::span<const Document> docs) const;
  // Ids of the documents the model was fitted on, when known.
  virtual std::span<const std::string> training_ids() const { return {}; }
};

}  // namespace hpd
