#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hpd/corpus.hpp"

namespace hpd {

// Sparse real vector with strictly increasing indices and no stored zeros.
class SparseVector {
 public:
  using Entry = std::pair<std::uint32_t, double>;

  SparseVector() = default;
  explicit SparseVector(std::size_t dimension) : dimension_(dimension) {}
  // Entries may come in any order; duplicates are summed and zeros dropped.
  SparseVector(std::size_t dimension, std::vector<Entry> entries);

  std::size_t dimension() const noexcept { return dimension_; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t nnz() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  double value(std::uint32_t index) const;
  double squared_norm() const;
  double norm() const;
  void scale(double factor);
  std::vector<double> to_dense() const;

  bool operator==(const SparseVector&) const = default;

 private:
  std::size_t dimension_ = 0;
  std::vector<Entry> entries_;
};

double dot(const SparseVector& a, const SparseVector& b);
// Dot product against a dense weight vector of the same dimension.
double dot(const SparseVector& a, std::span<const double> dense);

struct TfidfConfig {
  std::size_t min_df = 1;
  std::optional<std::size_t> max_features;
  bool l2_normalize = true;
};

// Smoothed idf: ln((1 + N) / (1 + df)) + 1.
double smoothed_idf(std::size_t documents, std::size_t document_frequency);

class TfidfModel {
 public:
  TfidfModel() = default;
  TfidfModel(TfidfConfig config, std::vector<std::string> terms,
             std::vector<double> idf);

  // Fits on token lists of the training documents only.
  static TfidfModel fit(std::span<const TokenList> documents,
                        const TfidfConfig& config = {});
  static TfidfModel fit(const Corpus& train, const TfidfConfig& config = {});

  SparseVector transform(const TokenList& tokens) const;
  SparseVector transform(const Document& doc) const;
  std::vector<SparseVector> transform(const Corpus& corpus) const;

  std::size_t dimension() const noexcept { return terms_.size(); }
  const std::vector<std::string>& terms() const noexcept { return terms_; }
  const std::vector<double>& idf() const noexcept { return idf_; }
  const TfidfConfig& config() const noexcept { return config_; }
  std::optional<std::uint32_t> index_of(const std::string& term) const;

  nlohmann::json to_json() const;
  static TfidfModel from_json(const nlohmann::json& j);

 private:
  TfidfConfig config_;
  std::vector<std::string> terms_;  // index -> term
  std::vector<double> idf_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

}  // namespace hpd
