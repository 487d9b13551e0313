#include "hpd/remote.hpp"

#include <cmath>
#include <cstdlib>

#include "hpd/error.hpp"
#include "hpd/util.hpp"
#include "http.hpp"

namespace hpd {

void RemoteConfig::validate() const {
  if (endpoint.empty()) {
    throw ConfigError(
        "no prediction endpoint: pass one or set PREDICT_ENDPOINT");
  }
  if (!(timeout_seconds > 0)) throw ConfigError("timeout must be positive");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (retries < 0) throw ConfigError("retries must be >= 0");
  if (concurrency < 1) throw ConfigError("concurrency must be >= 1");
}

RemoteConfig RemoteConfig::from_environment(std::string endpoint) {
  RemoteConfig cfg;
  if (endpoint.empty()) {
    if (const char* env = std::getenv("PREDICT_ENDPOINT")) endpoint = env;
  }
  cfg.endpoint = std::move(endpoint);
  return cfg;
}

RemoteClassifier::RemoteClassifier(RemoteConfig config)
    : config_(std::move(config)) {
  config_.validate();
}

std::string RemoteClassifier::describe() const {
  return "remote " + config_.endpoint;
}

std::vector<ProbaRow> RemoteClassifier::predict_tokens(
    std::span<const TokenList> inputs) const {
  std::vector<std::string> texts;
  texts.reserve(inputs.size());
  for (const auto& tokens : inputs) {
    std::string text;
    for (const auto& t : tokens) {
      if (!text.empty()) text.push_back(' ');
      text += t;
    }
    texts.push_back(std::move(text));
  }
  return predict_texts(texts);
}

std::vector<ProbaRow> RemoteClassifier::predict_documents(
    std::span<const Document> docs) const {
  std::vector<std::string> texts;
  texts.reserve(docs.size());
  for (const auto& doc : docs) {
    const std::string merged =
        doc.text ? *doc.text : merge_title_content(doc).text.value();
    std::string text;
    std::size_t words = 0;
    for (auto word : split_whitespace(merged)) {
      if (words++ == config_.max_words) break;
      if (!text.empty()) text.push_back(' ');
      text += word;
    }
    texts.push_back(std::move(text));
  }
  return predict_texts(texts);
}

namespace {

std::vector<ProbaRow> parse_rows(const nlohmann::json& response,
                                 std::size_t expected) {
  const auto fail = [&](const std::string& what) {
    return RemoteError("protocol", "malformed prediction response (" + what +
                                       "): " +
                                       detail::excerpt(response.dump()));
  };
  if (!response.is_object() || !response.contains("probabilities") ||
      !response["probabilities"].is_array()) {
    throw fail("no probabilities array");
  }
  const auto& rows = response["probabilities"];
  if (rows.size() != expected) {
    throw fail("expected " + std::to_string(expected) + " rows, got " +
               std::to_string(rows.size()));
  }
  std::vector<ProbaRow> out;
  out.reserve(expected);
  for (const auto& row : rows) {
    if (!row.is_array() || row.size() != kNumClasses || !row[0].is_number() ||
        !row[1].is_number()) {
      throw fail("row is not a pair of numbers");
    }
    ProbaRow p{row[0].get<double>(), row[1].get<double>()};
    for (double v : p) {
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        throw RemoteError("validation", "probability out of [0,1] in row " +
                                            row.dump());
      }
    }
    const double total = p[0] + p[1];
    if (std::abs(total - 1.0) > 1e-6) {
      throw RemoteError("validation",
                        "probability row sums to " + std::to_string(total) +
                            ": " + row.dump());
    }
    p[0] /= total;
    p[1] = 1.0 - p[0];
    out.push_back(p);
  }
  return out;
}

}  // namespace

std::vector<ProbaRow> RemoteClassifier::predict_texts(
    std::span<const std::string> texts) const {
  std::vector<ProbaRow> out(texts.size());
  if (texts.empty()) return out;
  const std::size_t batches =
      (texts.size() + config_.batch_size - 1) / config_.batch_size;
  const detail::HttpOptions options{config_.timeout_seconds, config_.retries};

  auto run_batch = [&](std::size_t b) {
    const std::size_t begin = b * config_.batch_size;
    const std::size_t end = std::min(texts.size(), begin + config_.batch_size);
    nlohmann::json body;
    body["texts"] = std::vector<std::string>(texts.begin() + begin,
                                             texts.begin() + end);
    requests_.increment();
    auto rows = parse_rows(
        detail::post_json(config_.endpoint, "/predict", body, options),
        end - begin);
    std::copy(rows.begin(), rows.end(), out.begin() + begin);
  };
  if (config_.concurrency <= 1) {
    for (std::size_t b = 0; b < batches; ++b) run_batch(b);
  } else {
    // Batches write disjoint slices of out, so order is kept.
    const auto lanes = static_cast<std::size_t>(config_.concurrency);
    parallel_for(std::min(lanes, batches), [&](std::size_t lane) {
      for (std::size_t b = lane; b < batches; b += lanes) run_batch(b);
    });
  }
  return out;
}

}  // namespace hpd
