#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "hpd/classifier.hpp"
#include "hpd/features.hpp"

namespace hpd {

inline constexpr int kModelFormatVersion = 1;

struct ModelSpec {
  std::string model_type;  // lr, nb, svm or rf
  nlohmann::json params = nlohmann::json::object();
};

// Vectorizes a labeled, preprocessed corpus.
LabeledVectors vectorize(const TfidfModel& vectorizer, const Corpus& corpus);

// A TF-IDF vectorizer feeding a local classifier.
class TextModel final : public TextClassifier {
 public:
  TextModel(TfidfModel vectorizer,
            std::unique_ptr<VectorClassifier> classifier,
            std::vector<std::string> training_ids);

  // Fits the vectorizer and the classifier on train, which must be labeled
  // and preprocessed.
  static TextModel fit(const Corpus& train, const ModelSpec& spec,
                       const TfidfConfig& tfidf = {});

  std::string describe() const override;
  std::vector<ProbaRow> predict_tokens(
      std::span<const TokenList> inputs) const override;
  std::span<const std::string> training_ids() const override {
    return training_ids_;
  }

  const TfidfModel& vectorizer() const noexcept { return vectorizer_; }
  const VectorClassifier& classifier() const noexcept { return *classifier_; }

 private:
  TfidfModel vectorizer_;
  std::unique_ptr<VectorClassifier> classifier_;
  std::vector<std::string> training_ids_;
};

// JSON envelope {format_version, model_type, created_unix, vectorizer,
// params, training_ids, sha256}; sha256 covers the compact dump of every
// other field.
std::string serialize_model(const TextModel& model);
TextModel deserialize_model(std::string_view text);

void save_model(const TextModel& model, const std::filesystem::path& path);
TextModel load_model(const std::filesystem::path& path);

}  // namespace hpd
