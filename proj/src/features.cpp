#include "hpd/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "hpd/error.hpp"

namespace hpd {

SparseVector::SparseVector(std::size_t dimension, std::vector<Entry> entries)
    : dimension_(dimension) {
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.first < b.first; });
  for (const auto& [index, value] : entries) {
    if (index >= dimension) {
      throw InvariantError("sparse index " + std::to_string(index) +
                           " out of range for dimension " +
                           std::to_string(dimension));
    }
    if (!entries_.empty() && entries_.back().first == index) {
      entries_.back().second += value;
    } else {
      entries_.emplace_back(index, value);
    }
  }
  std::erase_if(entries_, [](const Entry& e) { return e.second == 0.0; });
}

double SparseVector::value(std::uint32_t index) const {
  auto it = std::lower_bound(
      entries_.begin(), entries_.end(), index,
      [](const Entry& e, std::uint32_t i) { return e.first < i; });
  return it != entries_.end() && it->first == index ? it->second : 0.0;
}

double SparseVector::squared_norm() const {
  double sum = 0.0;
  for (const auto& e : entries_) sum += e.second * e.second;
  return sum;
}

double SparseVector::norm() const { return std::sqrt(squared_norm()); }

void SparseVector::scale(double factor) {
  for (auto& e : entries_) e.second *= factor;
  std::erase_if(entries_, [](const Entry& e) { return e.second == 0.0; });
}

std::vector<double> SparseVector::to_dense() const {
  std::vector<double> out(dimension_, 0.0);
  for (const auto& [i, v] : entries_) out[i] = v;
  return out;
}

double dot(const SparseVector& a, const SparseVector& b) {
  if (a.dimension() != b.dimension()) {
    throw DataError("dimension", "dot product of vectors with dimensions " +
                                     std::to_string(a.dimension()) + " and " +
                                     std::to_string(b.dimension()));
  }
  const auto& x = a.entries();
  const auto& y = b.entries();
  double sum = 0.0;
  std::size_t i = 0, j = 0;
  while (i < x.size() && j < y.size()) {
    if (x[i].first == y[j].first) {
      sum += x[i++].second * y[j++].second;
    } else if (x[i].first < y[j].first) {
      ++i;
    } else {
      ++j;
    }
  }
  return sum;
}

double dot(const SparseVector& a, std::span<const double> dense) {
  double sum = 0.0;
  for (const auto& [i, v] : a.entries()) sum += v * dense[i];
  return sum;
}

double smoothed_idf(std::size_t documents, std::size_t document_frequency) {
  return std::log((1.0 + static_cast<double>(documents)) /
                  (1.0 + static_cast<double>(document_frequency))) +
         1.0;
}

TfidfModel::TfidfModel(TfidfConfig config, std::vector<std::string> terms,
                       std::vector<double> idf)
    : config_(config), terms_(std::move(terms)), idf_(std::move(idf)) {
  if (terms_.size() != idf_.size()) {
    throw ModelFormatError("vectorizer", "vocabulary and idf sizes differ");
  }
  index_.reserve(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (!(idf_[i] > 0.0)) {
      throw ModelFormatError("vectorizer", "idf must be positive");
    }
    if (!index_.emplace(terms_[i], static_cast<std::uint32_t>(i)).second) {
      throw ModelFormatError("vectorizer", "duplicate term '" + terms_[i] + "'");
    }
  }
}

TfidfModel TfidfModel::fit(std::span<const TokenList> documents,
                           const TfidfConfig& config) {
  if (documents.empty()) throw FitError("cannot fit TF-IDF on zero documents");
  struct Stats {
    std::size_t df = 0;
    std::size_t total = 0;
    std::size_t last_doc = SIZE_MAX;
  };
  std::map<std::string, Stats> stats;  // ordered: lexicographic term order
  for (std::size_t d = 0; d < documents.size(); ++d) {
    for (const auto& token : documents[d]) {
      auto& s = stats[token];
      ++s.total;
      if (s.last_doc != d) {
        ++s.df;
        s.last_doc = d;
      }
    }
  }
  std::vector<std::pair<std::string, Stats>> kept;
  for (auto& [term, s] : stats) {
    if (s.df >= config.min_df) kept.emplace_back(term, s);
  }
  if (config.max_features && kept.size() > *config.max_features) {
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
      return a.second.total > b.second.total;  // ties stay lexicographic
    });
    kept.resize(*config.max_features);
    std::sort(kept.begin(), kept.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
  }
  if (kept.empty()) throw FitError("TF-IDF vocabulary is empty after min_df");

  std::vector<std::string> terms;
  std::vector<double> idf;
  for (auto& [term, s] : kept) {
    terms.push_back(term);
    idf.push_back(smoothed_idf(documents.size(), s.df));
  }
  return TfidfModel(config, std::move(terms), std::move(idf));
}

TfidfModel TfidfModel::fit(const Corpus& train, const TfidfConfig& config) {
  std::vector<TokenList> docs;
  docs.reserve(train.size());
  for (const auto& doc : train) {
    if (!doc.tokens) {
      throw DataError("unprocessed", "document '" + doc.id + "' has no tokens");
    }
    docs.push_back(*doc.tokens);
  }
  return fit(docs, config);
}

std::optional<std::uint32_t> TfidfModel::index_of(
    const std::string& term) const {
  auto it = index_.find(term);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

SparseVector TfidfModel::transform(const TokenList& tokens) const {
  std::vector<SparseVector::Entry> entries;
  entries.reserve(tokens.size());
  for (const auto& token : tokens) {
    if (auto idx = index_of(token)) entries.emplace_back(*idx, 1.0);
  }
  SparseVector v(dimension(), std::move(entries));  // sums raw counts
  std::vector<SparseVector::Entry> weighted(v.entries());
  for (auto& [i, value] : weighted) value *= idf_[i];
  SparseVector out(dimension(), std::move(weighted));
  if (config_.l2_normalize && !out.empty()) out.scale(1.0 / out.norm());
  return out;
}

SparseVector TfidfModel::transform(const Document& doc) const {
  if (!doc.tokens) {
    throw DataError("unprocessed", "document '" + doc.id + "' has no tokens");
  }
  return transform(*doc.tokens);
}

std::vector<SparseVector> TfidfModel::transform(const Corpus& corpus) const {
  std::vector<SparseVector> out;
  out.reserve(corpus.size());
  for (const auto& doc : corpus) out.push_back(transform(doc));
  return out;
}

nlohmann::json TfidfModel::to_json() const {
  nlohmann::json vocab = nlohmann::json::object();
  for (std::size_t i = 0; i < terms_.size(); ++i) vocab[terms_[i]] = i;
  nlohmann::json cfg = {{"min_df", config_.min_df},
                        {"l2_normalize", config_.l2_normalize}};
  cfg["max_features"] = config_.max_features
                            ? nlohmann::json(*config_.max_features)
                            : nlohmann::json(nullptr);
  return {{"vocabulary", vocab}, {"idf", idf_}, {"config", cfg}};
}

TfidfModel TfidfModel::from_json(const nlohmann::json& j) {
  TfidfConfig cfg;
  const auto& c = j.at("config");
  cfg.min_df = c.at("min_df").get<std::size_t>();
  cfg.l2_normalize = c.at("l2_normalize").get<bool>();
  if (!c.at("max_features").is_null()) {
    cfg.max_features = c.at("max_features").get<std::size_t>();
  }
  auto idf = j.at("idf").get<std::vector<double>>();
  std::vector<std::string> terms(idf.size());
  std::vector<bool> seen(idf.size(), false);
  for (const auto& [term, index] : j.at("vocabulary").items()) {
    const auto i = index.get<std::size_t>();
    if (i >= terms.size() || seen[i]) {
      throw ModelFormatError("vectorizer", "vocabulary indices are not 0..V-1");
    }
    seen[i] = true;
    terms[i] = term;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw ModelFormatError("vectorizer", "vocabulary indices are not 0..V-1");
  }
  return TfidfModel(cfg, std::move(terms), std::move(idf));
}

}  // namespace hpd
