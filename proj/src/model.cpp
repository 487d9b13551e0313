#include "hpd/model.hpp"

#include "hpd/error.hpp"
#include "hpd/util.hpp"

namespace hpd {

LabeledVectors vectorize(const TfidfModel& vectorizer, const Corpus& corpus) {
  corpus.require_labeled("vectorize");
  LabeledVectors out;
  out.dimension = vectorizer.dimension();
  out.x = vectorizer.transform(corpus);
  out.y.reserve(corpus.size());
  for (const auto& doc : corpus) out.y.push_back(*doc.label);
  return out;
}

TextModel::TextModel(TfidfModel vectorizer,
                     std::unique_ptr<VectorClassifier> classifier,
                     std::vector<std::string> training_ids)
    : vectorizer_(std::move(vectorizer)),
      classifier_(std::move(classifier)),
      training_ids_(std::move(training_ids)) {
  if (!classifier_) throw InvariantError("TextModel needs a classifier");
  if (classifier_->trained() &&
      classifier_->dimension() != vectorizer_.dimension()) {
    throw ModelFormatError(
        "dimension", "classifier dimension " +
                         std::to_string(classifier_->dimension()) +
                         " does not match vocabulary size " +
                         std::to_string(vectorizer_.dimension()));
  }
}

TextModel TextModel::fit(const Corpus& train, const ModelSpec& spec,
                         const TfidfConfig& tfidf) {
  if (train.empty()) throw FitError("cannot fit on an empty corpus");
  train.require_labeled("training");
  auto classifier = make_classifier(spec.model_type, spec.params);
  auto vectorizer = TfidfModel::fit(train, tfidf);
  classifier->fit(vectorize(vectorizer, train));
  std::vector<std::string> ids;
  ids.reserve(train.size());
  for (const auto& doc : train) ids.push_back(doc.id);
  return TextModel(std::move(vectorizer), std::move(classifier),
                   std::move(ids));
}

std::string TextModel::describe() const {
  return std::string(classifier_->model_type());
}

std::vector<ProbaRow> TextModel::predict_tokens(
    std::span<const TokenList> inputs) const {
  std::vector<ProbaRow> rows(inputs.size());
  parallel_for(inputs.size(), [&](std::size_t i) {
    rows[i] = classifier_->predict_proba(vectorizer_.transform(inputs[i]));
  });
  return rows;
}

namespace {

nlohmann::json envelope_payload(const TextModel& model) {
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["model_type"] = std::string(model.classifier().model_type());
  j["created_unix"] = timestamp_now();
  j["vectorizer"] = model.vectorizer().to_json();
  j["params"] = model.classifier().to_json();
  auto ids = model.training_ids();
  j["training_ids"] = std::vector<std::string>(ids.begin(), ids.end());
  return j;
}

}  // namespace

std::string serialize_model(const TextModel& model) {
  auto j = envelope_payload(model);
  j["sha256"] = sha256_hex(j.dump());
  return j.dump() + "\n";
}

TextModel deserialize_model(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    throw ModelFormatError("checksum",
                           "model file is truncated or corrupt (not valid "
                           "JSON)");
  }
  if (!j.is_object() || !j.contains("sha256") || !j["sha256"].is_string()) {
    throw ModelFormatError("checksum", "model file has no sha256 field");
  }
  const auto expected = j["sha256"].get<std::string>();
  j.erase("sha256");
  if (sha256_hex(j.dump()) != expected) {
    throw ModelFormatError("checksum", "model checksum mismatch");
  }
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw ModelFormatError(
          "version", "unsupported model format_version " +
                         std::to_string(version) + " (this build reads " +
                         std::to_string(kModelFormatVersion) + ")");
    }
    const auto type = j.at("model_type").get<std::string>();
    if (j.at("vectorizer").is_null()) {
      throw ModelFormatError("vectorizer",
                             "local models need a vectorizer block");
    }
    auto vectorizer = TfidfModel::from_json(j.at("vectorizer"));
    auto classifier = classifier_from_json(type, j.at("params"));
    auto ids = j.value("training_ids", std::vector<std::string>{});
    return TextModel(std::move(vectorizer), std::move(classifier),
                     std::move(ids));
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError("envelope",
                           std::string("malformed model envelope: ") + e.what());
  }
}

void save_model(const TextModel& model, const std::filesystem::path& path) {
  write_file(path, serialize_model(model));
}

TextModel load_model(const std::filesystem::path& path) {
  return deserialize_model(read_file(path));
}

}  // namespace hpd
