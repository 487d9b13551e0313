#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hpd/classifier.hpp"
#include "hpd/folds.hpp"

namespace hpd {

enum class Metric { Accuracy, F1 };

std::string_view metric_name(Metric metric) noexcept;
Metric parse_metric(std::string_view name);

// Accuracy or F1 (Hyperpartisan positive) of predictions against truth.
double score(Metric metric, std::span<const Label> truth,
             std::span<const Label> predicted);

struct GridAxis {
  std::string name;
  std::vector<nlohmann::json> values;
};

struct GridSpec {
  std::string model_type;
  std::vector<GridAxis> axes;  // enumeration order: first axis slowest
  std::size_t folds = 5;
  Metric metric = Metric::F1;
  std::uint64_t seed = 0;

  void validate() const;
  // {model_type, axes: {name: [values]}, folds, metric, seed}; axis order
  // follows the file.
  static GridSpec from_json(const nlohmann::ordered_json& j);
  nlohmann::ordered_json to_json() const;
  // Toolkit default grid for a model family; each axis contains the value
  // from table2_params().
  static GridSpec defaults(std::string_view model_type);
};

// Cartesian product of the axes, axis-major.
std::vector<nlohmann::json> enumerate_candidates(const GridSpec& grid);

// Per-fold scores of one parameter set over a fixed fold assignment. The
// grid seed reaches models that take one unless the params set it.
std::vector<double> cross_validate(const std::string& model_type,
                                   const nlohmann::json& params,
                                   const LabeledVectors& data,
                                   std::span<const std::size_t> assignment,
                                   std::size_t folds, Metric metric,
                                   std::uint64_t seed);

struct CandidateResult {
  nlohmann::json params;
  std::vector<double> fold_scores;
  double mean_score = 0.0;
};

struct GridResult {
  std::string model_type;
  Metric metric = Metric::F1;
  nlohmann::json best_params;
  double best_score = 0.0;
  std::size_t best_index = 0;
  std::vector<CandidateResult> table;  // enumeration order

  nlohmann::ordered_json to_json() const;
  std::string to_text_table() const;
};

// Every candidate sees the same stratified folds; ties go to the earliest
// candidate.
GridResult grid_search(const GridSpec& grid, const LabeledVectors& train);

// Params to fit with: the candidate plus the grid seed where applicable.
nlohmann::json with_seed(std::string_view model_type, nlohmann::json params,
                         std::uint64_t seed);

}  // namespace hpd
