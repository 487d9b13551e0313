#include "hpd/random_forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>
#include <unordered_map>

#include "hpd/error.hpp"
#include "hpd/rng.hpp"
#include "hpd/util.hpp"
#include "param_reader.hpp"

namespace hpd {

void RandomForestParams::validate() const {
  if (tree_count < 1) throw ConfigError("rf: n_estimators must be >= 1");
  if (max_depth && *max_depth < 1) {
    throw ConfigError("rf: max_depth must be >= 1 or null");
  }
  if (min_samples_split < 2) {
    throw ConfigError("rf: min_samples_split must be >= 2");
  }
  if (min_samples_leaf < 1) throw ConfigError("rf: min_samples_leaf must be >= 1");
  if (features_per_split && *features_per_split < 1) {
    throw ConfigError("rf: max_features must be >= 1");
  }
}

const TreeNode& DecisionTree::leaf_for(const SparseVector& x) const {
  const TreeNode* node = &nodes.front();
  while (node->feature >= 0) {
    const double v = x.value(static_cast<std::uint32_t>(node->feature));
    node = &nodes[static_cast<std::size_t>(v <= node->threshold ? node->left
                                                                : node->right)];
  }
  return *node;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

namespace {

// Column-major copy of the training matrix: per feature, (sample, value).
using Columns = std::vector<std::vector<std::pair<std::uint32_t, double>>>;

Columns build_columns(const LabeledVectors& train) {
  Columns cols(train.dimension);
  for (std::size_t s = 0; s < train.size(); ++s) {
    for (const auto& [f, v] : train.x[s].entries()) {
      cols[f].emplace_back(static_cast<std::uint32_t>(s), v);
    }
  }
  return cols;
}

struct Split {
  double impurity = std::numeric_limits<double>::infinity();
  std::uint32_t feature = 0;
  double threshold = 0.0;
  bool found = false;

  bool better_than(const Split& o) const {
    if (!o.found) return true;
    return std::tie(impurity, feature, threshold) <
           std::tie(o.impurity, o.feature, o.threshold);
  }
};

double weighted_gini(const std::array<std::size_t, 2>& left,
                     const std::array<std::size_t, 2>& right) {
  auto part = [](const std::array<std::size_t, 2>& c) {
    const double n = static_cast<double>(c[0] + c[1]);
    const double a = static_cast<double>(c[0]), b = static_cast<double>(c[1]);
    return n - (a * a + b * b) / n;
  };
  return part(left) + part(right);
}

// Draws features without replacement in O(draws) memory.
class FeatureSampler {
 public:
  FeatureSampler(std::size_t dimension, Rng& rng)
      : remaining_(dimension), rng_(rng) {}
  bool done() const { return remaining_ == 0; }
  std::uint32_t next() {
    const std::size_t j = rng_.below(remaining_);
    const std::size_t last = remaining_ - 1;
    const std::size_t picked = at(j);
    swapped_[j] = at(last);
    --remaining_;
    return static_cast<std::uint32_t>(picked);
  }

 private:
  std::size_t at(std::size_t i) const {
    auto it = swapped_.find(i);
    return it == swapped_.end() ? i : it->second;
  }
  std::size_t remaining_;
  Rng& rng_;
  std::unordered_map<std::size_t, std::size_t> swapped_;
};

class TreeBuilder {
 public:
  TreeBuilder(const LabeledVectors& train, const Columns& cols,
              const RandomForestParams& params, std::size_t mtry,
              std::uint64_t seed)
      : train_(train),
        cols_(cols),
        params_(params),
        mtry_(mtry),
        rng_(seed),
        stamp_(train.size(), 0),
        mult_(train.size(), 0) {}

  DecisionTree build(std::vector<std::size_t> samples) {
    DecisionTree tree;
    struct Task {
      std::size_t node;
      std::vector<std::size_t> samples;
      int depth;
    };
    std::vector<Task> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, std::move(samples), 0});
    while (!stack.empty()) {
      Task task = std::move(stack.back());
      stack.pop_back();
      auto& idx = task.samples;
      std::array<std::size_t, 2> counts{0, 0};
      for (auto s : idx) ++counts[class_index(train_.y[s])];
      const std::size_t n = idx.size();
      {
        auto& node = tree.nodes[task.node];
        node.samples = static_cast<std::uint32_t>(n);
        node.proba = {static_cast<double>(counts[0]) / static_cast<double>(n),
                      static_cast<double>(counts[1]) / static_cast<double>(n)};
      }
      const auto min_leaf = static_cast<std::size_t>(params_.min_samples_leaf);
      const bool stop =
          n < static_cast<std::size_t>(params_.min_samples_split) ||
          counts[0] == 0 || counts[1] == 0 || n < 2 * min_leaf ||
          (params_.max_depth && task.depth >= *params_.max_depth);
      if (stop) continue;

      const Split split = find_split(idx, counts);
      if (!split.found) continue;

      std::vector<std::size_t> left, right;
      for (auto s : idx) {
        (train_.x[s].value(split.feature) <= split.threshold ? left : right)
            .push_back(s);
      }
      const auto left_id = tree.nodes.size();
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& node = tree.nodes[task.node];
      node.feature = static_cast<std::int32_t>(split.feature);
      node.threshold = split.threshold;
      node.left = static_cast<std::int32_t>(left_id);
      node.right = static_cast<std::int32_t>(left_id + 1);
      // Right pushed first so the left subtree is grown first.
      stack.push_back({left_id + 1, std::move(right), task.depth + 1});
      stack.push_back({left_id, std::move(left), task.depth + 1});
    }
    return tree;
  }

 private:
  Split find_split(const std::vector<std::size_t>& idx,
                   const std::array<std::size_t, 2>& counts) {
    ++token_;
    for (auto s : idx) {
      if (stamp_[s] != token_) {
        stamp_[s] = token_;
        mult_[s] = 0;
      }
      ++mult_[s];
    }
    const std::size_t n = idx.size();
    const auto min_leaf = static_cast<std::size_t>(params_.min_samples_leaf);

    Split best;
    std::size_t visited = 0;
    FeatureSampler sampler(train_.dimension, rng_);
    struct Value {
      double v;
      std::array<std::size_t, 2> c;
    };
    std::vector<Value> values;
    while (visited < mtry_ && !sampler.done()) {
      const std::uint32_t f = sampler.next();
      values.clear();
      std::array<std::size_t, 2> nz{0, 0};
      for (const auto& [s, v] : cols_[f]) {
        if (stamp_[s] != token_) continue;
        std::array<std::size_t, 2> c{0, 0};
        c[class_index(train_.y[s])] = mult_[s];
        nz[0] += c[0];
        nz[1] += c[1];
        values.push_back({v, c});
      }
      const std::size_t nz_total = nz[0] + nz[1];
      if (nz_total < n) {
        values.push_back({0.0, {counts[0] - nz[0], counts[1] - nz[1]}});
      }
      std::sort(values.begin(), values.end(),
                [](const Value& a, const Value& b) { return a.v < b.v; });
      if (values.empty() || values.front().v == values.back().v) continue;
      ++visited;

      std::array<std::size_t, 2> left{0, 0};
      for (std::size_t k = 0; k + 1 < values.size(); ++k) {
        left[0] += values[k].c[0];
        left[1] += values[k].c[1];
        if (values[k].v == values[k + 1].v) continue;
        const std::size_t n_left = left[0] + left[1];
        if (n_left < min_leaf || n - n_left < min_leaf) continue;
        const std::array<std::size_t, 2> right{counts[0] - left[0],
                                               counts[1] - left[1]};
        double threshold = values[k].v + (values[k + 1].v - values[k].v) / 2.0;
        if (!(threshold < values[k + 1].v)) threshold = values[k].v;
        Split candidate{weighted_gini(left, right), f, threshold, true};
        if (candidate.better_than(best)) best = candidate;
      }
    }
    return best;
  }

  const LabeledVectors& train_;
  const Columns& cols_;
  const RandomForestParams& params_;
  std::size_t mtry_;
  Rng rng_;
  std::vector<std::uint64_t> stamp_;
  std::vector<std::size_t> mult_;
  std::uint64_t token_ = 0;
};

std::size_t default_mtry(std::size_t dimension) {
  return std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(std::sqrt(dimension))));
}

}  // namespace

DecisionTree grow_tree(const LabeledVectors& train,
                       std::span<const std::size_t> samples,
                       const RandomForestParams& params,
                       std::size_t features_per_split, std::uint64_t seed) {
  const auto cols = build_columns(train);
  TreeBuilder builder(train, cols, params, features_per_split, seed);
  return builder.build({samples.begin(), samples.end()});
}

RandomForest::RandomForest(RandomForestParams params) : params_(params) {
  params_.validate();
}

void RandomForest::fit(const LabeledVectors& train) {
  if (train.size() == 0) throw FitError("rf: empty training set");
  if (train.y.size() != train.x.size()) {
    throw FitError("rf: feature and label counts differ");
  }
  const std::size_t n = train.size();
  const std::size_t mtry =
      params_.features_per_split
          ? std::min<std::size_t>(
                static_cast<std::size_t>(*params_.features_per_split),
                std::max<std::size_t>(1, train.dimension))
          : default_mtry(train.dimension);
  const auto cols = build_columns(train);
  trees_.assign(static_cast<std::size_t>(params_.tree_count), {});
  parallel_for(trees_.size(), [&](std::size_t t) {
    const std::uint64_t tree_seed = substream_seed(params_.seed, t);
    std::vector<std::size_t> samples(n);
    if (params_.bootstrap) {
      Rng boot(substream_seed(tree_seed, 0xb007));
      for (auto& s : samples) s = boot.below(n);
    } else {
      std::iota(samples.begin(), samples.end(), 0);
    }
    TreeBuilder builder(train, cols, params_, mtry, tree_seed);
    trees_[t] = builder.build(std::move(samples));
  });
  dimension_ = train.dimension;
  trained_ = true;
}

ProbaRow RandomForest::predict_row(const SparseVector& x) const {
  ProbaRow sum{0.0, 0.0};
  for (const auto& tree : trees_) {
    const auto& leaf = tree.leaf_for(x);
    sum[0] += leaf.proba[0];
    sum[1] += leaf.proba[1];
  }
  const double total = sum[0] + sum[1];
  return {sum[0] / total, sum[1] / total};
}

nlohmann::json RandomForest::hyperparams() const {
  nlohmann::json j = {{"n_estimators", params_.tree_count},
                      {"bootstrap", params_.bootstrap},
                      {"min_samples_split", params_.min_samples_split},
                      {"min_samples_leaf", params_.min_samples_leaf},
                      {"seed", params_.seed}};
  j["max_depth"] = params_.max_depth ? nlohmann::json(*params_.max_depth)
                                     : nlohmann::json(nullptr);
  j["max_features"] = params_.features_per_split
                          ? nlohmann::json(*params_.features_per_split)
                          : nlohmann::json("sqrt");
  return j;
}

nlohmann::json RandomForest::to_json() const {
  auto j = hyperparams();
  j["dimension"] = dimension_;
  auto trees = nlohmann::json::array();
  for (const auto& tree : trees_) {
    nlohmann::json feature = nlohmann::json::array(),
                   threshold = nlohmann::json::array(),
                   left = nlohmann::json::array(),
                   right = nlohmann::json::array(),
                   value = nlohmann::json::array(),
                   samples = nlohmann::json::array();
    for (const auto& node : tree.nodes) {
      feature.push_back(node.feature);
      threshold.push_back(node.threshold);
      left.push_back(node.left);
      right.push_back(node.right);
      value.push_back(node.proba);
      samples.push_back(node.samples);
    }
    trees.push_back({{"feature", feature},
                     {"threshold", threshold},
                     {"left", left},
                     {"right", right},
                     {"value", value},
                     {"samples", samples}});
  }
  j["trees"] = std::move(trees);
  return j;
}

RandomForestParams RandomForest::params_from_json(const nlohmann::json& j) {
  detail::ParamReader r(j, "rf");
  RandomForestParams p;
  p.tree_count = r.get("n_estimators", p.tree_count);
  p.bootstrap = r.get("bootstrap", p.bootstrap);
  if (r.has("max_depth") && !r.raw("max_depth").is_null()) {
    p.max_depth = r.get("max_depth", 0);
  }
  p.min_samples_split = r.get("min_samples_split", p.min_samples_split);
  p.min_samples_leaf = r.get("min_samples_leaf", p.min_samples_leaf);
  if (r.has("max_features")) {
    const auto& mf = r.raw("max_features");
    if (mf.is_string() && mf.get<std::string>() == "sqrt") {
      p.features_per_split.reset();
    } else if (mf.is_number_integer()) {
      p.features_per_split = mf.get<int>();
    } else {
      throw ConfigError("rf: max_features must be 'sqrt' or an integer");
    }
  }
  p.seed = r.get("seed", p.seed);
  for (const char* key : {"dimension", "trees"}) {
    if (r.has(key)) r.raw(key);
  }
  r.finish();
  p.validate();
  return p;
}

std::unique_ptr<RandomForest> RandomForest::from_json(const nlohmann::json& j) {
  auto model = std::make_unique<RandomForest>(params_from_json(j));
  model->dimension_ = j.at("dimension").get<std::size_t>();
  for (const auto& t : j.at("trees")) {
    DecisionTree tree;
    const auto& feature = t.at("feature");
    const std::size_t count = feature.size();
    for (std::size_t i = 0; i < count; ++i) {
      TreeNode node;
      node.feature = feature.at(i).get<std::int32_t>();
      node.threshold = t.at("threshold").at(i).get<double>();
      node.left = t.at("left").at(i).get<std::int32_t>();
      node.right = t.at("right").at(i).get<std::int32_t>();
      node.proba = t.at("value").at(i).get<ProbaRow>();
      node.samples = t.at("samples").at(i).get<std::uint32_t>();
      if (node.feature >= 0 &&
          (node.left <= static_cast<std::int32_t>(i) ||
           node.right <= static_cast<std::int32_t>(i) ||
           static_cast<std::size_t>(std::max(node.left, node.right)) >= count)) {
        throw ModelFormatError("params", "rf: malformed tree links");
      }
      tree.nodes.push_back(node);
    }
    if (tree.nodes.empty()) throw ModelFormatError("params", "rf: empty tree");
    model->trees_.push_back(std::move(tree));
  }
  model->trained_ = true;
  return model;
}

}  // namespace hpd
