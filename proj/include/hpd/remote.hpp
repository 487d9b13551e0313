#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hpd/classifier.hpp"
#include "hpd/util.hpp"

namespace hpd {

struct RemoteConfig {
  std::string endpoint;  // base URL; /predict is appended
  double timeout_seconds = 30.0;
  std::size_t batch_size = 32;
  int retries = 2;
  int concurrency = 1;          // batches in flight
  std::size_t max_words = 500;  // documents are cut to their first words

  void validate() const;
  // endpoint from PREDICT_ENDPOINT when the flag is empty.
  static RemoteConfig from_environment(std::string endpoint = {});
};

// Client for an external classifier served over HTTP:
//   POST {endpoint}/predict {"texts": [...]} -> {"probabilities": [[p0, p1]]}
// Never trains; rows are validated (sum within 1e-6) and renormalized.
class RemoteClassifier final : public TextClassifier {
 public:
  explicit RemoteClassifier(RemoteConfig config);

  std::string describe() const override;
  // Sends the tokens joined by single spaces.
  std::vector<ProbaRow> predict_tokens(
      std::span<const TokenList> inputs) const override;
  // Sends the merged title and content, truncated to max_words words.
  std::vector<ProbaRow> predict_documents(
      std::span<const Document> docs) const override;

  std::vector<ProbaRow> predict_texts(std::span<const std::string> texts) const;

  const RemoteConfig& config() const noexcept { return config_; }
  std::size_t request_count() const noexcept { return requests_.get(); }

 private:
  RemoteConfig config_;
  mutable Counter requests_;
};

}  // namespace hpd
