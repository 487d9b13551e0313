#include "hpd/tuning.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "hpd/error.hpp"
#include "hpd/eval.hpp"
#include "hpd/util.hpp"

namespace hpd {

std::string_view metric_name(Metric metric) noexcept {
  return metric == Metric::Accuracy ? "accuracy" : "f1";
}

Metric parse_metric(std::string_view name) {
  if (name == "accuracy") return Metric::Accuracy;
  if (name == "f1") return Metric::F1;
  throw ConfigError("unknown metric '" + std::string(name) +
                    "' (expected accuracy or f1)");
}

double score(Metric metric, std::span<const Label> truth,
             std::span<const Label> predicted) {
  const auto report = metrics(confusion(truth, predicted));
  return metric == Metric::Accuracy ? report.accuracy : report.f1;
}

void GridSpec::validate() const {
  const auto types = known_model_types();
  if (std::ranges::find(types, model_type) == types.end()) {
    throw ConfigError("grid: unknown model_type '" + model_type + "'");
  }
  if (folds < 2) throw ConfigError("grid: folds must be >= 2");
  for (const auto& axis : axes) {
    if (axis.values.empty()) {
      throw ConfigError("grid: axis '" + axis.name + "' is empty");
    }
  }
  for (std::size_t i = 0; i < axes.size(); ++i) {
    for (std::size_t k = i + 1; k < axes.size(); ++k) {
      if (axes[i].name == axes[k].name) {
        throw ConfigError("grid: axis '" + axes[i].name + "' appears twice");
      }
    }
  }
}

GridSpec GridSpec::from_json(const nlohmann::ordered_json& j) {
  GridSpec g;
  try {
    g.model_type = j.at("model_type").get<std::string>();
    for (const auto& [name, values] : j.at("axes").items()) {
      if (!values.is_array()) {
        throw ConfigError("grid: axis '" + name + "' must be a list");
      }
      GridAxis axis{name, {}};
      for (const auto& v : values) {
        axis.values.push_back(nlohmann::json::parse(v.dump()));
      }
      g.axes.push_back(std::move(axis));
    }
    g.folds = j.value("folds", g.folds);
    g.metric = parse_metric(j.value("metric", std::string("f1")));
    g.seed = j.value("seed", g.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("grid: malformed spec: ") + e.what());
  }
  g.validate();
  return g;
}

nlohmann::ordered_json GridSpec::to_json() const {
  nlohmann::ordered_json j;
  j["model_type"] = model_type;
  nlohmann::ordered_json ax = nlohmann::ordered_json::object();
  for (const auto& axis : axes) {
    auto values = nlohmann::ordered_json::array();
    for (const auto& v : axis.values) {
      values.push_back(nlohmann::ordered_json::parse(v.dump()));
    }
    ax[axis.name] = std::move(values);
  }
  j["axes"] = std::move(ax);
  j["folds"] = folds;
  j["metric"] = std::string(metric_name(metric));
  j["seed"] = seed;
  return j;
}

GridSpec GridSpec::defaults(std::string_view model_type) {
  using J = nlohmann::json;
  GridSpec g;
  g.model_type = std::string(model_type);
  if (model_type == "lr") {
    g.axes = {{"C", {0.1, 1.0, 10.0}},
              {"penalty", {"l2"}},
              {"solver", {"saga", "full_batch"}},
              {"max_iter", {100, 500}}};
  } else if (model_type == "nb") {
    g.axes = {{"alpha", {0.01, 0.1, 1.0}}, {"fit_prior", {true, false}}};
  } else if (model_type == "svm") {
    g.axes = {{"C", {1.0, 10.0}},
              {"degree", {2, 3}},
              {"coef0", {0.0, 0.1}},
              {"gamma", {"scale"}}};
  } else if (model_type == "rf") {
    g.axes = {{"n_estimators", {100, 200}},
              {"bootstrap", {true, false}},
              {"min_samples_split", {2, 10}},
              {"min_samples_leaf", {1, 2}},
              {"max_depth", {J(nullptr), 20}}};
  } else {
    throw ConfigError("no default grid for model type '" +
                      std::string(model_type) + "'");
  }
  return g;
}

std::vector<nlohmann::json> enumerate_candidates(const GridSpec& grid) {
  std::vector<nlohmann::json> out{nlohmann::json::object()};
  for (const auto& axis : grid.axes) {
    std::vector<nlohmann::json> next;
    next.reserve(out.size() * axis.values.size());
    for (const auto& partial : out) {
      for (const auto& value : axis.values) {
        auto c = partial;
        c[axis.name] = value;
        next.push_back(std::move(c));
      }
    }
    out = std::move(next);
  }
  return out;
}

nlohmann::json with_seed(std::string_view model_type, nlohmann::json params,
                         std::uint64_t seed) {
  if (model_type != "nb" && !params.contains("seed")) params["seed"] = seed;
  return params;
}

std::vector<double> cross_validate(const std::string& model_type,
                                   const nlohmann::json& params,
                                   const LabeledVectors& data,
                                   std::span<const std::size_t> assignment,
                                   std::size_t folds, Metric metric,
                                   std::uint64_t seed) {
  const auto fit_params = with_seed(model_type, params, seed);
  std::vector<double> scores(folds, 0.0);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
      (assignment[i] == f ? test_idx : train_idx).push_back(i);
    }
    auto model = make_classifier(model_type, fit_params);
    model->fit(data.subset(train_idx));
    const auto held_out = data.subset(test_idx);
    std::vector<Label> predicted;
    predicted.reserve(held_out.size());
    for (const auto& row : model->predict_proba(held_out.x)) {
      predicted.push_back(argmax_label(row));
    }
    scores[f] = score(metric, held_out.y, predicted);
  }
  return scores;
}

GridResult grid_search(const GridSpec& grid, const LabeledVectors& train) {
  grid.validate();
  const auto assignment = make_folds(train.y, grid.folds, grid.seed);
  check_fold_feasibility(train.y, assignment, grid.folds);
  // Folds hold the complement as training data, so each class must also
  // appear outside every fold.
  const auto counts = train.class_counts();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (counts[c] < 2) {
      throw DataError("folds",
                      "class " + std::string(label_name(label_from_index(c))) +
                          " has fewer than 2 samples; cannot cross-validate");
    }
  }

  const auto candidates = enumerate_candidates(grid);
  GridResult result;
  result.model_type = grid.model_type;
  result.metric = grid.metric;
  result.table.resize(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t k) {
    auto scores = cross_validate(grid.model_type, candidates[k], train,
                                 assignment, grid.folds, grid.metric,
                                 grid.seed);
    const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) /
                        static_cast<double>(scores.size());
    result.table[k] = {candidates[k], std::move(scores), mean};
  });
  for (std::size_t k = 0; k < result.table.size(); ++k) {
    if (k == 0 || result.table[k].mean_score > result.best_score) {
      result.best_score = result.table[k].mean_score;
      result.best_index = k;
    }
  }
  result.best_params = result.table[result.best_index].params;
  return result;
}

nlohmann::ordered_json GridResult::to_json() const {
  nlohmann::ordered_json j;
  j["model_type"] = model_type;
  j["metric"] = std::string(metric_name(metric));
  j["grid_source"] = "toolkit choice; published results list winners only";
  j["best_params"] = nlohmann::ordered_json::parse(best_params.dump());
  j["best_score"] = best_score;
  j["best_index"] = best_index;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& c : table) {
    nlohmann::ordered_json row;
    row["params"] = nlohmann::ordered_json::parse(c.params.dump());
    row["mean_score"] = c.mean_score;
    row["fold_scores"] = c.fold_scores;
    rows.push_back(std::move(row));
  }
  j["table"] = std::move(rows);
  return j;
}

std::string GridResult::to_text_table() const {
  std::vector<std::string> params;
  std::size_t width = 6;
  for (const auto& c : table) {
    params.push_back(c.params.dump());
    width = std::max(width, params.back().size());
  }
  std::string out;
  char buf[64];
  const auto pad = [&](const std::string& s) {
    return s + std::string(width - s.size(), ' ');
  };
  out += "  " + pad("params") + "  mean     folds\n";
  for (std::size_t k = 0; k < table.size(); ++k) {
    out += k == best_index ? "* " : "  ";
    out += pad(params[k]);
    std::snprintf(buf, sizeof buf, "  %.4f  ", table[k].mean_score);
    out += buf;
    for (double s : table[k].fold_scores) {
      std::snprintf(buf, sizeof buf, " %.4f", s);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace hpd
