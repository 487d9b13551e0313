#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "hpd/corpus.hpp"

namespace hpd {

// Tokenizer-level limit of the downstream transformer; informational.
inline constexpr std::size_t kHardTokenLimit = 512;

// Ordered suffix table, always kept longest-first (by code points); entries
// of equal length keep their file order.
class StemRules {
 public:
  StemRules() = default;
  explicit StemRules(std::vector<std::string> suffixes);

  const std::vector<std::string>& suffixes() const noexcept {
    return suffixes_;
  }

 private:
  std::vector<std::string> suffixes_;
};

struct PreprocessConfig {
  bool remove_digits = true;
  std::unordered_set<std::string> stopwords;
  StemRules stem_rules;
  std::size_t max_tokens = 500;
  std::size_t min_stem_length = 2;

  // Shipped Bangla stopword list and suffix table.
  static PreprocessConfig defaults();
  void validate() const;
};

// Word lists: UTF-8, one entry per line, '#' starts a comment line. Entries
// are normalized the same way clean() normalizes text.
std::vector<std::string> parse_word_list(std::string_view data);
std::unordered_set<std::string> load_stopwords(
    const std::filesystem::path& path);
StemRules load_stem_rules(const std::filesystem::path& path);

std::string_view default_stopwords_asset();
std::string_view default_stem_rules_asset();

// Canonical composition for Bengali: nukta letters are decomposed
// (U+09DC, U+09DD, U+09DF have composition exclusions) and the two-part
// vowel signs O/AU are composed.
std::u32string normalize_bengali(std::u32string_view text);

// Keeps Bengali letters and orthographic signs (plus digits when
// !remove_digits); every other character acts as a word boundary, except
// ZWJ/ZWNJ which are dropped. Whitespace is collapsed and trimmed.
std::string clean(std::string_view text, const PreprocessConfig& cfg);
TokenList tokenize(std::string_view text);
TokenList remove_stopwords(TokenList tokens, const PreprocessConfig& cfg);
std::string stem(std::string_view token, const PreprocessConfig& cfg);

struct PreprocessResult {
  Document doc;
  bool empty = false;  // no tokens survived; the caller decides to drop
};

// merge -> clean -> tokenize -> stopwords -> stem -> truncate to max_tokens.
PreprocessResult preprocess_document(Document doc,
                                     const PreprocessConfig& cfg);

struct PreprocessedCorpus {
  Corpus corpus;
  std::vector<std::string> dropped_ids;
};

// Preprocesses every document that has no tokens yet and drops the ones
// that end up empty.
PreprocessedCorpus ensure_tokens(const Corpus& corpus,
                                 const PreprocessConfig& cfg);

}  // namespace hpd
