#include "hpd/augment.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hpd/error.hpp"
#include "hpd/util.hpp"
#include "http.hpp"

namespace hpd {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

// Applies fn to every whitespace-separated word, keeping the separators.
template <typename Fn>
std::string map_words(const std::string& text, Fn fn) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      out.push_back(text[i++]);
      continue;
    }
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    out += fn(text.substr(start, i - start));
  }
  return out;
}

std::string ascii_case(std::string s, bool upper) {
  for (auto& c : s) {
    if (upper && c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    if (!upper && c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

}  // namespace

MockProvider::MockProvider(MockProviderConfig config)
    : config_(std::move(config)) {
  for (const auto& [src, pivot] : config_.dictionary) {
    if (!forward_.emplace(src, pivot).second ||
        !backward_.emplace(pivot, src).second) {
      throw ConfigError("mock provider dictionary is not one-to-one at '" +
                        src + "'");
    }
  }
}

MockProvider MockProvider::standard() {
  MockProviderConfig cfg;
  cfg.dictionary = {{"সরকার", "government"}, {"নির্বাচন", "election"},
                    {"দল", "party"},          {"নেতা", "leader"},
                    {"জনগণ", "people"},       {"দেশ", "country"},
                    {"সংবাদ", "news"},        {"বিরোধী", "opposition"}};
  cfg.synonyms = {{"সরকার", "প্রশাসন"},
                  {"নেতা", "নেতৃত্ব"},
                  {"দেশ", "রাষ্ট্র"},
                  {"জনগণ", "মানুষ"}};
  cfg.variant_salt = true;
  return MockProvider(std::move(cfg));
}

std::string MockProvider::translate(const std::string& text,
                                    const std::string& source_lang,
                                    const std::string& target_lang,
                                    int variant) const {
  calls_.increment();
  if (source_lang == config_.source_lang) {
    auto out = map_words(text, [&](const std::string& w) {
      auto it = forward_.find(w);
      return it == forward_.end() ? w : it->second;
    });
    return config_.uppercase_pivot ? ascii_case(std::move(out), true) : out;
  }
  if (target_lang != config_.source_lang) return text;
  auto out = map_words(config_.uppercase_pivot ? ascii_case(text, false) : text,
                       [&](const std::string& w) {
                         auto it = backward_.find(w);
                         return it == backward_.end() ? w : it->second;
                       });
  if (config_.synonyms.empty()) return out;
  const std::size_t rules = config_.synonyms.size();
  const std::size_t offset =
      config_.variant_salt ? static_cast<std::size_t>(variant) % rules : 0;
  for (std::size_t r = 0; r < rules; ++r) {
    const auto& [from, to] = config_.synonyms[(offset + r) % rules];
    bool swapped = false;
    auto result = map_words(out, [&](const std::string& w) {
      if (swapped || w != from) return w;
      swapped = true;
      return to;
    });
    if (swapped) return result;
  }
  return out;
}

HttpProviderConfig HttpProviderConfig::from_environment(std::string endpoint) {
  HttpProviderConfig cfg;
  if (endpoint.empty()) {
    if (const char* env = std::getenv("TRANSLATE_ENDPOINT")) endpoint = env;
  }
  cfg.endpoint = std::move(endpoint);
  return cfg;
}

HttpTranslationProvider::HttpTranslationProvider(HttpProviderConfig config)
    : config_(std::move(config)) {
  if (config_.endpoint.empty()) {
    throw ConfigError(
        "no translation endpoint: pass one or set TRANSLATE_ENDPOINT");
  }
}

std::string HttpTranslationProvider::translate(const std::string& text,
                                               const std::string& source_lang,
                                               const std::string& target_lang,
                                               int) const {
  const nlohmann::json body = {
      {"text", text}, {"source", source_lang}, {"target", target_lang}};
  const auto response = detail::post_json(
      config_.endpoint, "/translate", body,
      {config_.timeout_seconds, config_.retries});
  if (!response.is_object() || !response.contains("text") ||
      !response["text"].is_string()) {
    throw RemoteError("protocol", "translation response has no text field: " +
                                      detail::excerpt(response.dump()));
  }
  return response["text"].get<std::string>();
}

TranslationCache::TranslationCache(std::filesystem::path path)
    : path_(std::move(path)) {
  if (!std::filesystem::exists(*path_)) return;
  std::istringstream in(read_file(*path_));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto key = j.at("key").get<std::string>();
      const auto sha = j.at("input_sha256").get<std::string>();
      const auto expected = make_key(
          key.substr(0, key.find('|')), j.at("source_lang").get<std::string>(),
          j.at("target_lang").get<std::string>(), sha);
      if (key != expected) throw std::runtime_error("key does not match fields");
      entries_[key] = j.at("output_text").get<std::string>();
    } catch (const std::exception& e) {
      warn("translation cache " + path_->string() + " is corrupt at line " +
           std::to_string(line_no) + " (" + e.what() + "); cache bypassed");
      entries_.clear();
      enabled_ = false;
      return;
    }
  }
}

std::string TranslationCache::make_key(const std::string& provider,
                                       const std::string& source_lang,
                                       const std::string& target_lang,
                                       const std::string& input_sha256) {
  return provider + "|" + source_lang + "|" + target_lang + "|" +
         input_sha256;
}

std::optional<std::string> TranslationCache::get(const std::string& key) const {
  if (!enabled_) return std::nullopt;
  std::lock_guard lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void TranslationCache::put(const std::string& key,
                           const std::string& source_lang,
                           const std::string& target_lang,
                           const std::string& input_sha256,
                           const std::string& output) {
  if (!enabled_) return;
  std::lock_guard lock(mutex_);
  if (!entries_.insert_or_assign(key, output).second) return;
  if (!path_) return;
  nlohmann::ordered_json j;
  j["key"] = key;
  j["source_lang"] = source_lang;
  j["target_lang"] = target_lang;
  j["input_sha256"] = input_sha256;
  j["output_text"] = output;
  if (path_->has_parent_path()) {
    std::filesystem::create_directories(path_->parent_path());
  }
  std::ofstream out(*path_, std::ios::binary | std::ios::app);
  out << j.dump() << '\n';
  if (!out) throw DataError("io", "cannot append to " + path_->string());
}

std::size_t TranslationCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

void AugmentConfig::validate() const {
  if (rounds < 0) throw ConfigError("augment: rounds must be >= 0");
  if (pivot_lang.empty() || source_lang.empty()) {
    throw ConfigError("augment: language codes must be non-empty");
  }
}

namespace {

std::string cached_translate(const std::string& text,
                             const TranslationProvider& provider,
                             const std::string& source,
                             const std::string& target,
                             TranslationCache* cache, int variant) {
  if (!cache) return provider.translate(text, source, target, variant);
  std::string name = provider.name();
  if (provider.variant_sensitive()) name += "#v" + std::to_string(variant);
  const auto sha = sha256_hex(text);
  const auto key = TranslationCache::make_key(name, source, target, sha);
  if (auto hit = cache->get(key)) return *hit;
  auto out = provider.translate(text, source, target, variant);
  cache->put(key, source, target, sha, out);
  return out;
}

}  // namespace

std::string round_trip(const std::string& text,
                       const TranslationProvider& provider,
                       const AugmentConfig& cfg, TranslationCache* cache,
                       int variant) {
  try {
    const auto pivot = cached_translate(text, provider, cfg.source_lang,
                                        cfg.pivot_lang, cache, variant);
    return cached_translate(pivot, provider, cfg.pivot_lang, cfg.source_lang,
                            cache, variant);
  } catch (const RemoteError& e) {
    throw RemoteError(e.code(), provider.name() + ": " + e.what(), true);
  }
}

AugmentResult augment_corpus(const Corpus& corpus,
                             const TranslationProvider& provider,
                             const AugmentConfig& cfg) {
  cfg.validate();
  corpus.require_labeled("augmentation");
  std::optional<TranslationCache> cache;
  if (cfg.cache_path) cache.emplace(*cfg.cache_path);

  struct Slot {
    std::optional<Document> doc;
    std::string failure;
  };
  const std::size_t rounds = static_cast<std::size_t>(cfg.rounds);
  std::vector<Slot> slots(corpus.size() * rounds);
  parallel_for(slots.size(), [&](std::size_t k) {
    const Document& origin = corpus[k / rounds];
    const int round = static_cast<int>(k % rounds) + 1;
    try {
      Document v;
      v.id = origin.id + "~aug" + std::to_string(round);
      v.title = round_trip(origin.title, provider, cfg,
                           cache ? &*cache : nullptr, round);
      v.content = round_trip(origin.content, provider, cfg,
                             cache ? &*cache : nullptr, round);
      v.source = origin.source;
      v.label = origin.label;
      v.provenance = Provenance::augmented(round);
      slots[k].doc = std::move(v);
    } catch (const Error& e) {
      slots[k].failure =
          origin.id + " round " + std::to_string(round) + ": " + e.what();
    }
  });

  AugmentResult result;
  std::vector<Document> docs;
  docs.reserve(corpus.size() * (1 + rounds));
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Document& origin = corpus[i];
    docs.push_back(origin);
    std::vector<std::pair<std::string, std::string>> seen{
        {origin.title, origin.content}};
    for (std::size_t r = 0; r < rounds; ++r) {
      auto& slot = slots[i * rounds + r];
      if (!slot.doc) {
        warn("augment: skipped " + slot.failure);
        result.failures.push_back(std::move(slot.failure));
        continue;
      }
      std::pair<std::string, std::string> text{slot.doc->title,
                                               slot.doc->content};
      if (cfg.dedupe &&
          std::find(seen.begin(), seen.end(), text) != seen.end()) {
        ++result.deduplicated;
        continue;
      }
      seen.push_back(std::move(text));
      docs.push_back(std::move(*slot.doc));
    }
  }
  result.corpus = Corpus(std::move(docs));
  return result;
}

}  // namespace hpd
