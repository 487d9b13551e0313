#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hpd/classifier.hpp"

namespace hpd {

struct RandomForestParams {
  int tree_count = 200;
  bool bootstrap = false;
  std::optional<int> max_depth;  // nullopt = unlimited
  int min_samples_split = 10;
  int min_samples_leaf = 1;
  // Features examined per split; nullopt = floor(sqrt(dimension)).
  std::optional<int> features_per_split;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // x[feature] <= threshold goes left
  std::int32_t left = -1;
  std::int32_t right = -1;
  ProbaRow proba{0.0, 0.0};   // leaf class frequencies
  std::uint32_t samples = 0;
};

// Binary CART tree with Gini splits; nodes[0] is the root.
struct DecisionTree {
  std::vector<TreeNode> nodes;
  const TreeNode& leaf_for(const SparseVector& x) const;
  std::size_t depth() const;
};

// Builds one tree over samples[...] (with repetition when bootstrapping).
// Split search visits features in a seeded random order until
// features_per_split non-constant features have been evaluated; the best
// weighted Gini wins, ties going to the lower feature index and then the
// lower threshold.
DecisionTree grow_tree(const LabeledVectors& train,
                       std::span<const std::size_t> samples,
                       const RandomForestParams& params,
                       std::size_t features_per_split, std::uint64_t seed);

class RandomForest final : public VectorClassifier {
 public:
  explicit RandomForest(RandomForestParams params = {});

  std::string_view model_type() const override { return "rf"; }
  void fit(const LabeledVectors& train) override;
  bool trained() const override { return trained_; }
  std::size_t dimension() const override { return dimension_; }
  ProbaRow predict_row(const SparseVector& x) const override;
  nlohmann::json hyperparams() const override;
  nlohmann::json to_json() const override;

  static RandomForestParams params_from_json(const nlohmann::json& j);
  static std::unique_ptr<RandomForest> from_json(const nlohmann::json& j);

  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
  const RandomForestParams& params() const noexcept { return params_; }

 private:
  RandomForestParams params_;
  std::size_t dimension_ = 0;
  bool trained_ = false;
  std::vector<DecisionTree> trees_;
};

}  // namespace hpd
