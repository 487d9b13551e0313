#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hpd/corpus.hpp"
#include "hpd/util.hpp"

namespace hpd {

class TranslationProvider {
 public:
  virtual ~TranslationProvider() = default;
  virtual std::string name() const = 0;
  // variant is the 1-based augmentation round (0 outside augmentation);
  // providers that ignore it must return the same text for every variant.
  virtual std::string translate(const std::string& text,
                                const std::string& source_lang,
                                const std::string& target_lang,
                                int variant) const = 0;
  virtual bool variant_sensitive() const { return false; }
};

class IdentityProvider final : public TranslationProvider {
 public:
  std::string name() const override { return "identity"; }
  std::string translate(const std::string& text, const std::string&,
                        const std::string&, int) const override {
    return text;
  }
};

// Deterministic stand-in for a translation service. Toward the pivot it maps
// whitespace-separated words through the dictionary and uppercases ASCII;
// back from the pivot it lowercases ASCII, maps words back and swaps at most
// one word using the synonym table. With variant salting the synonym search
// starts at rule (variant mod rules), so variants differ.
struct MockProviderConfig {
  std::vector<std::pair<std::string, std::string>> dictionary;  // src, pivot
  std::vector<std::pair<std::string, std::string>> synonyms;    // from, to
  bool uppercase_pivot = true;
  bool variant_salt = false;
  std::string source_lang = "bn";
};

class MockProvider final : public TranslationProvider {
 public:
  explicit MockProvider(MockProviderConfig config);
  // Small Bangla/English dictionary, a few synonyms and variant salting.
  static MockProvider standard();

  std::string name() const override { return "mock"; }
  std::string translate(const std::string& text, const std::string& source_lang,
                        const std::string& target_lang,
                        int variant) const override;
  bool variant_sensitive() const override { return config_.variant_salt; }

  std::size_t call_count() const noexcept { return calls_.get(); }

 private:
  MockProviderConfig config_;
  std::map<std::string, std::string> forward_, backward_;
  mutable Counter calls_;
};

struct HttpProviderConfig {
  std::string endpoint;  // base URL; /translate is appended
  double timeout_seconds = 30.0;
  int retries = 2;

  // endpoint from TRANSLATE_ENDPOINT when the flag is empty.
  static HttpProviderConfig from_environment(std::string endpoint = {});
};

// POST {endpoint}/translate {"text", "source", "target"} -> {"text"}
class HttpTranslationProvider final : public TranslationProvider {
 public:
  explicit HttpTranslationProvider(HttpProviderConfig config);
  std::string name() const override { return "http:" + config_.endpoint; }
  std::string translate(const std::string& text, const std::string& source_lang,
                        const std::string& target_lang,
                        int variant) const override;

 private:
  HttpProviderConfig config_;
};

// JSONL cache of translations keyed by (provider, source, target,
// SHA-256 of the input). Safe for concurrent use; writes go straight to the
// file. A corrupt file disables the cache with a warning.
class TranslationCache {
 public:
  TranslationCache() = default;  // in-memory only
  explicit TranslationCache(std::filesystem::path path);

  static std::string make_key(const std::string& provider,
                              const std::string& source_lang,
                              const std::string& target_lang,
                              const std::string& input_sha256);

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const std::string& source_lang,
           const std::string& target_lang, const std::string& input_sha256,
           const std::string& output);

  bool enabled() const noexcept { return enabled_; }
  std::size_t size() const;

 private:
  std::optional<std::filesystem::path> path_;
  bool enabled_ = true;
  mutable std::mutex mutex_;
  std::map<std::string, std::string> entries_;
};

struct AugmentConfig {
  int rounds = 3;
  std::string pivot_lang = "en";
  std::string source_lang = "bn";
  bool dedupe = true;
  std::optional<std::filesystem::path> cache_path;

  void validate() const;
};

// source -> pivot -> source. Uses and fills cache when given.
std::string round_trip(const std::string& text,
                       const TranslationProvider& provider,
                       const AugmentConfig& cfg,
                       TranslationCache* cache = nullptr, int variant = 0);

struct AugmentResult {
  Corpus corpus;
  std::size_t deduplicated = 0;
  std::vector<std::string> failures;  // "<id> round <r>: <message>"
};

// Originals followed, per document, by up to cfg.rounds variants with ids
// "<id>~aug<r>", the origin's label and Augmented(r) provenance. Title and
// content are translated separately.
AugmentResult augment_corpus(const Corpus& corpus,
                             const TranslationProvider& provider,
                             const AugmentConfig& cfg);

}  // namespace hpd
