#include "hpd/textprep.hpp"

#include <algorithm>

#include "hpd/error.hpp"
#include "hpd/util.hpp"

namespace hpd {

namespace {

bool is_bengali_orthographic(char32_t c) {
  if (c < 0x0980 || c > 0x09FF) return false;
  return (c >= 0x0980 && c <= 0x0983) ||  // signs: anji, candrabindu..visarga
         (c >= 0x0985 && c <= 0x098C) || (c >= 0x098F && c <= 0x0990) ||
         (c >= 0x0993 && c <= 0x09A8) || (c >= 0x09AA && c <= 0x09B0) ||
         c == 0x09B2 || (c >= 0x09B6 && c <= 0x09B9) ||
         (c >= 0x09BC && c <= 0x09C4) ||  // nukta, avagraha, vowel signs
         (c >= 0x09C7 && c <= 0x09C8) ||
         (c >= 0x09CB && c <= 0x09CE) ||  // o, au, virama, khanda ta
         c == 0x09D7 || (c >= 0x09DC && c <= 0x09DD) ||
         (c >= 0x09DF && c <= 0x09E3) || (c >= 0x09F0 && c <= 0x09F1) ||
         c == 0x09FC || c == 0x09FE;
}

bool is_digit(char32_t c) {
  return (c >= U'0' && c <= U'9') || (c >= 0x09E6 && c <= 0x09EF);
}

bool is_joiner(char32_t c) { return c == 0x200C || c == 0x200D; }

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.substr(s.size() - suffix.size()) == suffix;
}

std::string normalize_utf8(std::string_view text) {
  return utf8::encode(normalize_bengali(utf8::decode(text)));
}

}  // namespace

std::u32string normalize_bengali(std::u32string_view text) {
  std::u32string out;
  out.reserve(text.size() + 4);
  for (char32_t c : text) {
    switch (c) {
      case 0x09DC:
        out += U"\u09A1\u09BC";
        continue;
      case 0x09DD:
        out += U"\u09A2\u09BC";
        continue;
      case 0x09DF:
        out += U"\u09AF\u09BC";
        continue;
      case 0x09BE:
        if (!out.empty() && out.back() == 0x09C7) {
          out.back() = 0x09CB;
          continue;
        }
        break;
      case 0x09D7:
        if (!out.empty() && out.back() == 0x09C7) {
          out.back() = 0x09CC;
          continue;
        }
        break;
      default:
        break;
    }
    out.push_back(c);
  }
  return out;
}

StemRules::StemRules(std::vector<std::string> suffixes) {
  for (auto& s : suffixes) {
    s = normalize_utf8(trim(s));
    if (s.empty()) throw ConfigError("stem rule table has an empty suffix");
  }
  std::stable_sort(suffixes.begin(), suffixes.end(),
                   [](const std::string& a, const std::string& b) {
                     return utf8::length(a) > utf8::length(b);
                   });
  suffixes_ = std::move(suffixes);
}

std::vector<std::string> parse_word_list(std::string_view data) {
  std::vector<std::string> words;
  std::size_t pos = 0;
  while (pos <= data.size()) {
    auto end = data.find('\n', pos);
    if (end == std::string_view::npos) end = data.size();
    auto line = trim(data.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty() || line.front() == '#') continue;
    words.push_back(normalize_utf8(line));
  }
  return words;
}

std::unordered_set<std::string> load_stopwords(
    const std::filesystem::path& path) {
  auto words = parse_word_list(read_file(path));
  return {words.begin(), words.end()};
}

StemRules load_stem_rules(const std::filesystem::path& path) {
  return StemRules(parse_word_list(read_file(path)));
}

PreprocessConfig PreprocessConfig::defaults() {
  PreprocessConfig cfg;
  auto words = parse_word_list(default_stopwords_asset());
  cfg.stopwords = {words.begin(), words.end()};
  cfg.stem_rules = StemRules(parse_word_list(default_stem_rules_asset()));
  return cfg;
}

void PreprocessConfig::validate() const {
  if (max_tokens == 0 || max_tokens > kHardTokenLimit) {
    throw ConfigError("max_tokens must be in 1.." +
                      std::to_string(kHardTokenLimit));
  }
}

std::string clean(std::string_view text, const PreprocessConfig& cfg) {
  const auto cps = normalize_bengali(utf8::decode(text));
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char32_t c : cps) {
    if (is_joiner(c)) continue;
    const bool keep =
        is_bengali_orthographic(c) || (!cfg.remove_digits && is_digit(c));
    if (!keep) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    utf8::append(out, c);
  }
  return out;
}

TokenList tokenize(std::string_view text) {
  TokenList tokens;
  for (auto piece : split_whitespace(text)) tokens.emplace_back(piece);
  return tokens;
}

TokenList remove_stopwords(TokenList tokens, const PreprocessConfig& cfg) {
  if (cfg.stopwords.empty()) return tokens;
  std::erase_if(tokens, [&](const std::string& t) {
    return cfg.stopwords.contains(t);
  });
  return tokens;
}

std::string stem(std::string_view token, const PreprocessConfig& cfg) {
  const std::size_t length = utf8::length(token);
  for (const auto& suffix : cfg.stem_rules.suffixes()) {
    if (!ends_with(token, suffix)) continue;
    // Longest match wins; if it would leave too short a stem, no shorter
    // rule is tried.
    if (length - utf8::length(suffix) < cfg.min_stem_length) break;
    return std::string(token.substr(0, token.size() - suffix.size()));
  }
  return std::string(token);
}

PreprocessResult preprocess_document(Document doc,
                                     const PreprocessConfig& cfg) {
  doc = merge_title_content(std::move(doc));
  auto tokens = remove_stopwords(tokenize(clean(*doc.text, cfg)), cfg);
  for (auto& t : tokens) t = stem(t, cfg);
  if (tokens.size() > cfg.max_tokens) tokens.resize(cfg.max_tokens);
  const bool empty = tokens.empty();
  doc.tokens = std::move(tokens);
  return {std::move(doc), empty};
}

PreprocessedCorpus ensure_tokens(const Corpus& corpus,
                                 const PreprocessConfig& cfg) {
  std::vector<Document> docs;
  std::vector<std::string> dropped;
  docs.reserve(corpus.size());
  for (const auto& doc : corpus) {
    if (doc.tokens && !doc.tokens->empty()) {
      docs.push_back(doc);
      continue;
    }
    auto result = preprocess_document(doc, cfg);
    if (result.empty) {
      dropped.push_back(doc.id);
    } else {
      docs.push_back(std::move(result.doc));
    }
  }
  return {Corpus(std::move(docs)), std::move(dropped)};
}

}  // namespace hpd
