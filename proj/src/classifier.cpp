#include "hpd/classifier.hpp"

#include <cmath>

#include "hpd/error.hpp"
#include "hpd/logistic_regression.hpp"
#include "hpd/naive_bayes.hpp"
#include "hpd/random_forest.hpp"
#include "hpd/svm.hpp"

namespace hpd {

ClassCounts LabeledVectors::class_counts() const {
  ClassCounts counts{};
  for (Label label : y) ++counts[class_index(label)];
  return counts;
}

LabeledVectors LabeledVectors::subset(
    std::span<const std::size_t> indices) const {
  LabeledVectors out;
  out.dimension = dimension;
  out.x.reserve(indices.size());
  out.y.reserve(indices.size());
  for (std::size_t i : indices) {
    out.x.push_back(x.at(i));
    out.y.push_back(y.at(i));
  }
  return out;
}

void LabeledVectors::require_both_classes(std::string_view model) const {
  const std::string name(model);
  if (x.size() != y.size()) {
    throw FitError(name + ": " + std::to_string(x.size()) + " vectors but " +
                   std::to_string(y.size()) + " labels");
  }
  for (const auto& v : x) {
    if (v.dimension() != dimension) {
      throw FitError(name + ": vector dimension " +
                     std::to_string(v.dimension()) + " != " +
                     std::to_string(dimension));
    }
  }
  const auto counts = class_counts();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (counts[c] == 0) {
      throw FitError(name + ": training data has no " +
                     std::string(label_name(label_from_index(c))) +
                     " examples; both classes are required");
    }
  }
}

void VectorClassifier::check_input(const SparseVector& x) const {
  if (!trained()) {
    throw DataError("untrained", std::string(model_type()) +
                                     ": predict called before fit");
  }
  if (x.dimension() != dimension()) {
    throw DataError("dimension", std::string(model_type()) +
                                     ": input dimension " +
                                     std::to_string(x.dimension()) +
                                     " != model dimension " +
                                     std::to_string(dimension()));
  }
}

ProbaRow VectorClassifier::predict_proba(const SparseVector& x) const {
  check_input(x);
  ProbaRow row = predict_row(x);
  if (!std::isfinite(row[0]) || !std::isfinite(row[1])) {
    throw InvariantError(std::string(model_type()) +
                         ": non-finite probability");
  }
  const double total = row[0] + row[1];
  row[0] /= total;
  row[1] = 1.0 - row[0];
  return row;
}

std::vector<ProbaRow> VectorClassifier::predict_proba(
    std::span<const SparseVector> x) const {
  std::vector<ProbaRow> rows;
  rows.reserve(x.size());
  for (const auto& v : x) rows.push_back(predict_proba(v));
  return rows;
}

std::vector<std::string> known_model_types() {
  return {"lr", "nb", "svm", "rf"};
}

std::unique_ptr<VectorClassifier> make_classifier(
    std::string_view model_type, const nlohmann::json& hyperparams) {
  if (model_type == "lr") {
    return std::make_unique<LogisticRegression>(
        LogisticRegression::params_from_json(hyperparams));
  }
  if (model_type == "nb") {
    return std::make_unique<NaiveBayes>(
        NaiveBayes::params_from_json(hyperparams));
  }
  if (model_type == "svm") {
    return std::make_unique<Svm>(Svm::params_from_json(hyperparams));
  }
  if (model_type == "rf") {
    return std::make_unique<RandomForest>(
        RandomForest::params_from_json(hyperparams));
  }
  throw ConfigError("unknown model type '" + std::string(model_type) +
                    "' (expected lr, nb, svm or rf)");
}

std::unique_ptr<VectorClassifier> classifier_from_json(
    std::string_view model_type, const nlohmann::json& state) {
  try {
    if (model_type == "lr") return LogisticRegression::from_json(state);
    if (model_type == "nb") return NaiveBayes::from_json(state);
    if (model_type == "svm") return Svm::from_json(state);
    if (model_type == "rf") return RandomForest::from_json(state);
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError("params", std::string(model_type) +
                                         ": malformed model state: " +
                                         e.what());
  }
  throw ModelFormatError("model_type",
                         "unknown model_type '" + std::string(model_type) + "'");
}

nlohmann::json table2_params(std::string_view model_type) {
  if (model_type == "lr") {
    return {{"C", 10.0}, {"max_iter", 100}, {"penalty", "l2"},
            {"solver", "saga"}};
  }
  if (model_type == "nb") return {{"alpha", 0.01}, {"fit_prior", true}};
  if (model_type == "svm") {
    return {{"C", 10.0},
            {"coef0", 0.1},
            {"degree", 3},
            {"gamma", "scale"},
            {"kernel", "poly"}};
  }
  if (model_type == "rf") {
    return {{"bootstrap", false},
            {"max_depth", nullptr},
            {"min_samples_leaf", 1},
            {"min_samples_split", 10},
            {"n_estimators", 200}};
  }
  throw ConfigError("unknown model type '" + std::string(model_type) + "'");
}

std::vector<ProbaRow> TextClassifier::predict_documents(
    std::span<const Document> docs) const {
  std::vector<TokenList> tokens;
  tokens.reserve(docs.size());
  for (const auto& doc : docs) {
    if (!doc.tokens) {
      throw DataError("unprocessed",
                      "document '" + doc.id + "' has not been preprocessed");
    }
    tokens.push_back(*doc.tokens);
  }
  return predict_tokens(tokens);
}

}  // namespace hpd
