#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hpd/classifier.hpp"
#include "hpd/corpus.hpp"

namespace hpd {

struct ExplainConfig {
  std::size_t num_samples = 1000;
  double kernel_width = 25.0;  // infinity gives a uniform kernel
  std::size_t top_k = 10;
  double ridge_lambda = 1.0;
  std::uint64_t seed = 0;
  std::optional<Label> target_class;  // nullopt = argmax of the prediction
  bool exhaustive_when_feasible = true;
  std::size_t batch_size = 256;  // perturbations per classifier call

  void validate() const;
};

// mask[j] == 1 keeps every occurrence of unique token j.
using Mask = std::vector<std::uint8_t>;

inline constexpr std::size_t kMaxExhaustiveMasks = 4096;

// Exhaustive when enabled and 2^n <= 4096: every mask once, all-ones first
// and then in descending binary order (token 0 is the high bit). Otherwise
// num_samples masks: all-ones first, then each drawn by picking how many
// tokens to drop uniformly in 1..n and which ones uniformly.
std::vector<Mask> perturbation_masks(std::size_t unique_tokens,
                                     const ExplainConfig& cfg);

// Cosine distance between a mask and the all-ones mask: 1 - sqrt(k / n) for
// k active tokens.
double mask_distance(const Mask& mask);

// exp(-distance^2 / width^2)
double kernel_weight(double distance, double width);

struct SurrogateFit {
  std::vector<double> coefficients;
  double intercept = 0.0;
  double r2 = 1.0;  // weighted; 1 for a constant response
};

// Minimizes sum w_i (y_i - b - beta . m_i)^2 + lambda |beta|^2 with the
// intercept unpenalized. Throws DataError when lambda = 0 and the system is
// singular.
SurrogateFit fit_local_surrogate(std::span<const Mask> masks,
                                 std::span<const double> responses,
                                 std::span<const double> weights,
                                 double lambda);

struct TokenWeight {
  std::string token;
  double weight = 0.0;
};

struct Explanation {
  std::string doc_id;
  Label explained_class = Label::NotHyperpartisan;
  double original_probability = 0.0;
  std::vector<TokenWeight> token_weights;  // by |weight| descending
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t sample_count = 0;

  nlohmann::ordered_json to_json() const;
};

// Unique tokens in first-occurrence order.
std::vector<std::string> unique_tokens(const TokenList& tokens);

// A positive weight pushes the prediction toward explained_class.
Explanation explain(const TextClassifier& model, const Document& doc,
                    const ExplainConfig& cfg);

// One page per document plus index.html; tokens tinted green (toward the
// explained class) or red, opacity by |weight|.
void write_html_report(const std::filesystem::path& dir,
                       std::span<const Explanation> explanations,
                       std::span<const Document> docs);
std::string render_html(const Explanation& explanation, const Document& doc);

}  // namespace hpd
