// hpd: command-line front end for the hyperpartisan-news toolkit.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hpd/assets.hpp"
#include "hpd/augment.hpp"
#include "hpd/corpus.hpp"
#include "hpd/error.hpp"
#include "hpd/eval.hpp"
#include "hpd/explain.hpp"
#include "hpd/model.hpp"
#include "hpd/remote.hpp"
#include "hpd/ssl.hpp"
#include "hpd/textprep.hpp"
#include "hpd/tuning.hpp"
#include "hpd/util.hpp"

#ifndef HPD_VERSION
#define HPD_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

// One manifest per command, written next to its outputs.
class Manifest {
 public:
  explicit Manifest(std::string command)
      : command_(std::move(command)),
        start_(std::chrono::steady_clock::now()) {}

  ojson config = ojson::object();
  ojson inputs = ojson::array();
  ojson outputs = ojson::array();
  ojson seeds = ojson::object();

  void input(const fs::path& p) { inputs.push_back(p.string()); }
  void output(const fs::path& p) { outputs.push_back(p.string()); }

  void write(const fs::path& path) const {
    ojson j;
    j["command"] = command_;
    j["toolkit_version"] = HPD_VERSION;
    j["config"] = config;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["seeds"] = seeds;
    j["wall_time_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
    hpd::write_file(path, j.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::chrono::steady_clock::time_point start_;
};

fs::path manifest_for_file(const fs::path& output) {
  auto p = output;
  p += ".manifest.json";
  return p;
}

void info(const std::string& message) { std::cerr << message << '\n'; }

hpd::Corpus read_corpus(const fs::path& path) {
  auto report = hpd::load_dataset(path, hpd::format_from_path(path));
  for (const auto& e : report.errors) {
    hpd::warn(path.string() + ":" + std::to_string(e.line) + ": " + e.message);
  }
  if (report.dropped_empty > 0) {
    info(path.string() + ": dropped " + std::to_string(report.dropped_empty) +
         " row(s) with empty Title or Content");
  }
  return std::move(report.corpus);
}

void write_corpus(const hpd::Corpus& corpus, const fs::path& path) {
  hpd::save_dataset(corpus, path, hpd::format_from_path(path));
}

nlohmann::json read_json_file(const fs::path& path) {
  try {
    return nlohmann::json::parse(hpd::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw hpd::ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
}

// ---- preprocessing ----------------------------------------------------

struct PrepOptions {
  std::string stopwords;
  std::string stem_rules;
  bool keep_digits = false;
  std::size_t max_tokens = 500;

  hpd::PreprocessConfig config() const {
    auto cfg = hpd::PreprocessConfig::defaults();
    if (!stopwords.empty()) cfg.stopwords = hpd::load_stopwords(stopwords);
    if (!stem_rules.empty()) cfg.stem_rules = hpd::load_stem_rules(stem_rules);
    cfg.remove_digits = !keep_digits;
    cfg.max_tokens = max_tokens;
    cfg.validate();
    return cfg;
  }
  ojson to_json() const {
    return {{"stopwords", stopwords.empty() ? "builtin" : stopwords},
            {"stem_rules", stem_rules.empty() ? "builtin" : stem_rules},
            {"remove_digits", !keep_digits},
            {"max_tokens", max_tokens}};
  }
};

void add_prep_flags(CLI::App* cmd, PrepOptions& o) {
  cmd->add_option("--stopwords", o.stopwords, "Stopword file (default: built-in)");
  cmd->add_option("--stem-rules", o.stem_rules, "Suffix table (default: built-in)");
  cmd->add_flag("--keep-digits", o.keep_digits, "Keep ASCII and Bangla digits");
  cmd->add_option("--max-tokens", o.max_tokens, "Keep the first N tokens")
      ->check(CLI::Range(1, 512));
}

hpd::Corpus with_tokens(const hpd::Corpus& corpus, const PrepOptions& o,
                        const std::string& what) {
  auto result = hpd::ensure_tokens(corpus, o.config());
  if (!result.dropped_ids.empty()) {
    info(what + ": dropped " + std::to_string(result.dropped_ids.size()) +
         " document(s) with no tokens left");
  }
  return std::move(result.corpus);
}

// ---- model parameters -------------------------------------------------

nlohmann::json resolve_params(const std::string& model,
                              const std::string& params,
                              std::optional<std::uint64_t> seed) {
  nlohmann::json p;
  if (params == "table2") {
    p = hpd::table2_params(model);
  } else if (params.empty() || params == "default") {
    p = nlohmann::json::object();
  } else {
    p = read_json_file(params);
  }
  if (seed) p = hpd::with_seed(model, std::move(p), *seed);
  hpd::make_classifier(model, p);  // validates
  return p;
}

void check_model_type(const std::string& model) {
  const auto types = hpd::known_model_types();
  if (std::find(types.begin(), types.end(), model) == types.end()) {
    throw hpd::ConfigError("unknown --model '" + model +
                           "' (expected lr, nb, svm or rf)");
  }
}

// A local model file, or the literal "remote" for the prediction service.
struct ClassifierHandle {
  std::optional<hpd::TextModel> local;
  std::optional<hpd::RemoteClassifier> remote;

  const hpd::TextClassifier& get() const {
    if (local) return *local;
    return *remote;
  }
};

ClassifierHandle open_classifier(const std::string& model,
                                 const std::string& endpoint,
                                 std::size_t batch_size) {
  ClassifierHandle h;
  if (model == "remote") {
    auto cfg = hpd::RemoteConfig::from_environment(endpoint);
    cfg.batch_size = batch_size;
    h.remote.emplace(cfg);
  } else {
    h.local.emplace(hpd::load_model(model));
  }
  return h;
}

// ---- commands ---------------------------------------------------------

struct PrepArgs {
  std::string input, output;
  PrepOptions prep;
};

void run_prep(const PrepArgs& a) {
  Manifest m("prep");
  m.input(a.input);
  m.config = a.prep.to_json();
  auto corpus = read_corpus(a.input);
  const auto cfg = a.prep.config();
  std::vector<hpd::Document> kept;
  std::size_t dropped = 0;
  for (const auto& doc : corpus) {
    auto r = hpd::preprocess_document(doc, cfg);
    if (r.empty) {
      ++dropped;
      continue;
    }
    kept.push_back(std::move(r.doc));
  }
  write_corpus(hpd::Corpus(std::move(kept)), a.output);
  info("prep: " + std::to_string(corpus.size() - dropped) + " kept, " +
       std::to_string(dropped) + " dropped as empty");
  m.config["dropped_empty"] = dropped;
  m.output(a.output);
  m.write(manifest_for_file(a.output));
}

struct AugmentArgs {
  std::string input, output;
  int rounds = 3;
  std::string provider = "mock";
  std::string endpoint;
  bool no_dedupe = false;
  std::string cache;
  std::string pivot = "en";
  double timeout = 30.0;
  int retries = 2;
};

std::unique_ptr<hpd::TranslationProvider> make_provider(const AugmentArgs& a) {
  if (a.provider == "mock") {
    return std::make_unique<hpd::MockProvider>(hpd::MockProvider::standard());
  }
  if (a.provider == "identity") return std::make_unique<hpd::IdentityProvider>();
  if (a.provider == "http") {
    auto cfg = hpd::HttpProviderConfig::from_environment(a.endpoint);
    cfg.timeout_seconds = a.timeout;
    cfg.retries = a.retries;
    return std::make_unique<hpd::HttpTranslationProvider>(cfg);
  }
  throw hpd::ConfigError("unknown provider '" + a.provider + "'");
}

hpd::AugmentConfig augment_config(const AugmentArgs& a) {
  hpd::AugmentConfig cfg;
  cfg.rounds = a.rounds;
  cfg.dedupe = !a.no_dedupe;
  cfg.pivot_lang = a.pivot;
  if (!a.cache.empty()) cfg.cache_path = a.cache;
  cfg.validate();
  return cfg;
}

ojson augment_json(const AugmentArgs& a) {
  return {{"rounds", a.rounds},        {"provider", a.provider},
          {"dedupe", !a.no_dedupe},    {"pivot_lang", a.pivot},
          {"cache", a.cache},          {"timeout_seconds", a.timeout},
          {"retries", a.retries}};
}

void run_augment(const AugmentArgs& a) {
  Manifest m("augment");
  m.input(a.input);
  m.config = augment_json(a);
  const auto provider = make_provider(a);
  auto result =
      hpd::augment_corpus(read_corpus(a.input), *provider, augment_config(a));
  write_corpus(result.corpus, a.output);
  info("augment: " + std::to_string(result.corpus.size()) + " documents, " +
       std::to_string(result.deduplicated) + " duplicate variant(s) dropped, " +
       std::to_string(result.failures.size()) + " failure(s)");
  m.config["deduplicated"] = result.deduplicated;
  m.config["failures"] = result.failures;
  m.output(a.output);
  m.write(manifest_for_file(a.output));
}

struct SplitArgs {
  std::string input, outdir;
  std::vector<double> ratios{0.70, 0.15, 0.15};
  std::uint64_t seed = 0;
  bool no_stratify = false;
};

hpd::SplitConfig split_config(const SplitArgs& a) {
  if (a.ratios.size() != 3) {
    throw hpd::ConfigError("--ratios needs three values: train,val,test");
  }
  hpd::SplitConfig cfg{a.ratios[0], a.ratios[1], a.ratios[2], a.seed,
                       !a.no_stratify};
  cfg.validate();
  return cfg;
}

std::array<fs::path, 3> write_split(const hpd::CorpusSplit& parts,
                                    const fs::path& dir,
                                    const std::string& ext) {
  std::array<fs::path, 3> paths{dir / ("train" + ext), dir / ("val" + ext),
                                dir / ("test" + ext)};
  write_corpus(parts.train, paths[0]);
  write_corpus(parts.val, paths[1]);
  write_corpus(parts.test, paths[2]);
  return paths;
}

void run_split(const SplitArgs& a) {
  Manifest m("split");
  m.input(a.input);
  const auto cfg = split_config(a);
  m.config = {{"ratios", a.ratios}, {"stratified", cfg.stratified}};
  m.seeds["split"] = a.seed;
  const auto parts = hpd::split(read_corpus(a.input), cfg);
  const auto ext = fs::path(a.input).extension().string();
  for (const auto& p : write_split(parts, a.outdir, ext)) m.output(p);
  info("split: train " + std::to_string(parts.train.size()) + ", val " +
       std::to_string(parts.val.size()) + ", test " +
       std::to_string(parts.test.size()));
  m.write(fs::path(a.outdir) / "manifest.json");
}

struct TuneArgs {
  std::string train, model, grid = "default", output;
  std::optional<std::size_t> folds;
  std::string metric;
  std::optional<std::uint64_t> seed;
  PrepOptions prep;
};

void run_tune(const TuneArgs& a) {
  check_model_type(a.model);
  Manifest m("tune");
  m.input(a.train);
  auto grid = a.grid == "default"
                  ? hpd::GridSpec::defaults(a.model)
                  : hpd::GridSpec::from_json(
                        ojson::parse(hpd::read_file(a.grid)));
  if (grid.model_type != a.model) {
    throw hpd::ConfigError("grid is for '" + grid.model_type +
                           "' but --model is '" + a.model + "'");
  }
  if (a.folds) grid.folds = *a.folds;
  if (!a.metric.empty()) grid.metric = hpd::parse_metric(a.metric);
  if (a.seed) grid.seed = *a.seed;
  grid.validate();
  m.config = {{"grid", grid.to_json()}, {"prep", a.prep.to_json()}};
  m.seeds["folds"] = grid.seed;

  const auto train = with_tokens(read_corpus(a.train), a.prep, a.train);
  const auto vectorizer = hpd::TfidfModel::fit(train);
  const auto result = hpd::grid_search(grid, hpd::vectorize(vectorizer, train));
  const fs::path out =
      a.output.empty() ? fs::path("tune_" + a.model + ".json") : fs::path(a.output);
  hpd::write_file(out, result.to_json().dump(2) + "\n");
  auto table = out;
  table.replace_extension(".txt");
  hpd::write_file(table, result.to_text_table());
  std::cout << result.to_text_table();
  m.output(out);
  m.output(table);
  m.write(manifest_for_file(out));
}

struct TrainArgs {
  std::string train, model, params = "table2", output;
  std::optional<std::uint64_t> seed;
  PrepOptions prep;
};

void run_train(const TrainArgs& a) {
  check_model_type(a.model);
  Manifest m("train");
  m.input(a.train);
  const auto params = resolve_params(a.model, a.params, a.seed);
  m.config = {{"model", a.model},
              {"params_source", a.params},
              {"params", ojson::parse(params.dump())},
              {"prep", a.prep.to_json()}};
  if (params.contains("seed")) m.seeds["model"] = params["seed"];
  const auto train = with_tokens(read_corpus(a.train), a.prep, a.train);
  const auto model = hpd::TextModel::fit(train, {a.model, params});
  const fs::path out =
      a.output.empty() ? fs::path(a.model + ".model.json") : fs::path(a.output);
  hpd::save_model(model, out);
  m.output(out);
  m.write(manifest_for_file(out));
  info("train: " + a.model + " fitted on " + std::to_string(train.size()) +
       " documents, vocabulary " +
       std::to_string(model.vectorizer().dimension()));
}

struct SelfTrainArgs {
  std::string train, unlabeled, val, model, params = "table2", output,
      history;
  double threshold = 0.90;
  int rounds = 1;
  std::optional<std::size_t> max_added;
  std::optional<double> balance_cap;
  bool no_reeval = false;
  std::optional<std::uint64_t> seed;
  PrepOptions prep;
};

hpd::SelfTrainConfig selftrain_config(const SelfTrainArgs& a) {
  hpd::SelfTrainConfig cfg;
  cfg.confidence_threshold = a.threshold;
  cfg.rounds = a.rounds;
  cfg.max_added_per_round = a.max_added;
  cfg.class_balance_cap = a.balance_cap;
  cfg.reeval_on_val = !a.no_reeval;
  cfg.validate();
  return cfg;
}

void run_selftrain(const SelfTrainArgs& a) {
  check_model_type(a.model);
  Manifest m("selftrain");
  m.input(a.train);
  m.input(a.unlabeled);
  m.input(a.val);
  const auto params = resolve_params(a.model, a.params, a.seed);
  const auto cfg = selftrain_config(a);
  m.config = {{"model", a.model},
              {"params", ojson::parse(params.dump())},
              {"threshold", a.threshold},
              {"rounds", a.rounds},
              {"reeval_on_val", cfg.reeval_on_val},
              {"prep", a.prep.to_json()}};
  if (a.max_added) m.config["max_added_per_round"] = *a.max_added;
  if (a.balance_cap) m.config["class_balance_cap"] = *a.balance_cap;
  if (params.contains("seed")) m.seeds["model"] = params["seed"];

  const auto labeled = with_tokens(read_corpus(a.train), a.prep, a.train);
  const auto pool = with_tokens(read_corpus(a.unlabeled), a.prep, a.unlabeled);
  const auto val = with_tokens(read_corpus(a.val), a.prep, a.val);
  auto result =
      hpd::self_train(labeled, pool, val, {a.model, params}, cfg);
  const fs::path out = a.output.empty() ? fs::path("selftrain.model.json")
                                        : fs::path(a.output);
  fs::path history = a.history;
  if (history.empty()) {
    history = out;
    history.replace_extension(".history.jsonl");
  }
  hpd::save_model(result.model, out);
  hpd::write_file(history, hpd::history_jsonl(result.history));
  m.config["selected_round"] = result.selected_round;
  m.output(out);
  m.output(history);
  m.write(manifest_for_file(out));
  info("selftrain: selected round " + std::to_string(result.selected_round));
}

struct EvalArgs {
  std::string model, test, output, endpoint, reference;
  bool allow_train_eval = false;
  std::size_t batch_size = 32;
  PrepOptions prep;
};

void run_eval(const EvalArgs& a) {
  Manifest m("eval");
  m.input(a.model);
  m.input(a.test);
  m.config = {{"allow_train_eval", a.allow_train_eval},
              {"reference", a.reference},
              {"prep", a.prep.to_json()}};
  const auto handle = open_classifier(a.model, a.endpoint, a.batch_size);
  auto test = read_corpus(a.test);
  if (handle.local) test = with_tokens(test, a.prep, a.test);
  auto report = hpd::evaluate(handle.get(), test,
                              {fs::path(a.test).filename().string(),
                               a.allow_train_eval});
  if (a.reference == "transformer") {
    hpd::compare_to_reference(report, hpd::transformer_reference());
  } else if (!a.reference.empty()) {
    throw hpd::ConfigError("unknown --reference '" + a.reference + "'");
  }
  const fs::path out = a.output.empty() ? fs::path("eval.json") : fs::path(a.output);
  hpd::write_file(out, report.to_json().dump(2) + "\n");
  auto table = out;
  table.replace_extension(".txt");
  const std::string text = hpd::format_table(std::span(&report, 1));
  hpd::write_file(table, text);
  std::cout << text;
  m.output(out);
  m.output(table);
  m.write(manifest_for_file(out));
}

struct ExplainArgs {
  std::string model, docs, outdir, endpoint;
  std::size_t samples = 1000, top_k = 10, limit = 0, batch_size = 32;
  double width = 25.0, lambda = 1.0;
  std::uint64_t seed = 0;
  PrepOptions prep;
};

void run_explain(const ExplainArgs& a) {
  Manifest m("explain");
  m.input(a.model);
  m.input(a.docs);
  m.config = {{"samples", a.samples}, {"top_k", a.top_k},
              {"kernel_width", a.width}, {"ridge_lambda", a.lambda},
              {"limit", a.limit},       {"prep", a.prep.to_json()}};
  m.seeds["explain"] = a.seed;
  const auto handle = open_classifier(a.model, a.endpoint, a.batch_size);
  const auto corpus = with_tokens(read_corpus(a.docs), a.prep, a.docs);
  hpd::ExplainConfig cfg;
  cfg.num_samples = a.samples;
  cfg.top_k = a.top_k;
  cfg.kernel_width = a.width;
  cfg.ridge_lambda = a.lambda;
  cfg.seed = a.seed;
  const std::size_t count =
      a.limit == 0 ? corpus.size() : std::min(a.limit, corpus.size());
  std::vector<hpd::Explanation> out;
  std::vector<hpd::Document> docs(corpus.begin(), corpus.begin() + count);
  auto all = ojson::array();
  for (const auto& doc : docs) {
    out.push_back(hpd::explain(handle.get(), doc, cfg));
    all.push_back(out.back().to_json());
  }
  const fs::path dir(a.outdir);
  hpd::write_file(dir / "explanations.json", all.dump(2) + "\n");
  hpd::write_html_report(dir, out, docs);
  m.output(dir / "explanations.json");
  m.output(dir / "index.html");
  m.write(dir / "manifest.json");
  info("explain: " + std::to_string(out.size()) + " document(s) explained");
}

struct PipelineArgs {
  std::string preset = "paper", input, unlabeled, outdir = "run";
  std::string provider = "mock", endpoint;
};

ojson load_preset(const std::string& preset) {
  if (preset == "paper") return ojson::parse(hpd::paper_preset_asset());
  return ojson::parse(hpd::read_file(preset));
}

void run_pipeline(const PipelineArgs& a) {
  Manifest m("pipeline");
  m.input(a.input);
  if (!a.unlabeled.empty()) m.input(a.unlabeled);
  const ojson preset = load_preset(a.preset);
  m.config = {{"preset", a.preset}, {"bundle", preset}, {"provider", a.provider}};
  const fs::path dir(a.outdir);

  PrepOptions prep;
  prep.max_tokens = preset.at("prep").value("max_tokens", 500);
  prep.keep_digits = !preset.at("prep").value("remove_digits", true);

  // Unlabeled rows of the input join the self-training pool.
  std::vector<hpd::Document> labeled_docs, pool_docs;
  for (const auto& doc : read_corpus(a.input)) {
    (doc.label ? labeled_docs : pool_docs).push_back(doc);
  }
  if (!a.unlabeled.empty()) {
    for (const auto& doc : read_corpus(a.unlabeled)) pool_docs.push_back(doc);
  }
  for (auto& doc : pool_docs) doc.label.reset();
  const auto labeled = with_tokens(hpd::Corpus(labeled_docs), prep, "labeled");
  const auto pool = with_tokens(hpd::Corpus(pool_docs), prep, "unlabeled");
  write_corpus(labeled, dir / "prep.jsonl");
  m.output(dir / "prep.jsonl");

  AugmentArgs aug;
  aug.rounds = preset.at("augment").value("rounds", 3);
  aug.no_dedupe = !preset.at("augment").value("dedupe", false);
  aug.pivot = preset.at("augment").value("pivot_lang", std::string("en"));
  aug.provider = a.provider;
  aug.endpoint = a.endpoint;
  const auto provider = make_provider(aug);
  const auto augmented = with_tokens(
      hpd::augment_corpus(labeled, *provider, augment_config(aug)).corpus, prep,
      "augmented");
  write_corpus(augmented, dir / "augmented.jsonl");
  m.output(dir / "augmented.jsonl");

  SplitArgs sp;
  sp.ratios = preset.at("split").value("ratios", sp.ratios);
  sp.seed = preset.at("split").value("seed", std::uint64_t{0});
  sp.no_stratify = !preset.at("split").value("stratified", true);
  m.seeds["split"] = sp.seed;
  const auto parts = hpd::split(augmented, split_config(sp));
  for (const auto& p : write_split(parts, dir / "split", ".jsonl")) m.output(p);

  const auto& train_cfg = preset.at("train");
  const auto seed = train_cfg.value("seed", std::uint64_t{0});
  m.seeds["models"] = seed;
  const auto params_source = train_cfg.value("params", std::string("table2"));
  std::vector<hpd::EvaluationReport> reports;
  for (const auto& model : train_cfg.at("models")) {
    const auto type = model.get<std::string>();
    const auto params = resolve_params(type, params_source, seed);
    const auto fitted = hpd::TextModel::fit(parts.train, {type, params});
    const auto path = dir / "models" / (type + ".model.json");
    hpd::save_model(fitted, path);
    m.output(path);
    reports.push_back(hpd::evaluate(fitted, parts.test, {"test"}));
    info("pipeline: " + type + " test accuracy " +
         std::to_string(reports.back().accuracy));
  }

  const auto& st = preset.at("selftrain");
  const auto st_type = st.value("model", std::string("lr"));
  hpd::SelfTrainConfig st_cfg;
  st_cfg.confidence_threshold = st.value("threshold", 0.90);
  st_cfg.rounds = st.value("rounds", 1);
  st_cfg.validate();
  auto st_result =
      hpd::self_train(parts.train, pool, parts.val,
                      {st_type, resolve_params(st_type, params_source, seed)},
                      st_cfg);
  hpd::save_model(st_result.model, dir / "selftrain" / "model.json");
  hpd::write_file(dir / "selftrain" / "history.jsonl",
                  hpd::history_jsonl(st_result.history));
  m.output(dir / "selftrain" / "model.json");
  m.output(dir / "selftrain" / "history.jsonl");
  auto st_report = hpd::evaluate(st_result.model, parts.test, {"test"});
  st_report.model = "selftrain-" + st_type;
  reports.push_back(st_report);

  auto all = ojson::array();
  for (const auto& r : reports) all.push_back(r.to_json());
  hpd::write_file(dir / "eval" / "reports.json", all.dump(2) + "\n");
  const auto table = hpd::format_table(reports);
  hpd::write_file(dir / "eval" / "table.txt", table);
  m.output(dir / "eval" / "reports.json");
  m.output(dir / "eval" / "table.txt");
  std::cout << table;

  const auto& ex = preset.at("explain");
  hpd::ExplainConfig ex_cfg;
  ex_cfg.num_samples = ex.value("samples", std::size_t{1000});
  ex_cfg.top_k = ex.value("top_k", std::size_t{10});
  ex_cfg.seed = ex.value("seed", std::uint64_t{0});
  m.seeds["explain"] = ex_cfg.seed;
  const std::size_t count =
      std::min(ex.value("count", std::size_t{3}), parts.test.size());
  std::vector<hpd::Document> ex_docs(parts.test.begin(),
                                     parts.test.begin() + count);
  std::vector<hpd::Explanation> explanations;
  auto ex_json = ojson::array();
  for (const auto& doc : ex_docs) {
    explanations.push_back(hpd::explain(st_result.model, doc, ex_cfg));
    ex_json.push_back(explanations.back().to_json());
  }
  hpd::write_file(dir / "explain" / "explanations.json", ex_json.dump(2) + "\n");
  hpd::write_html_report(dir / "explain", explanations, ex_docs);
  m.output(dir / "explain" / "explanations.json");
  m.output(dir / "explain" / "index.html");
  m.write(dir / "manifest.json");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperpartisan news detection toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", HPD_VERSION);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Silence warnings");

  PrepArgs prep;
  auto* c_prep = app.add_subcommand("prep", "Clean, tokenize, filter and stem");
  c_prep->add_option("input", prep.input)->required()->check(CLI::ExistingFile);
  c_prep->add_option("output", prep.output)->required();
  add_prep_flags(c_prep, prep.prep);

  AugmentArgs aug;
  auto* c_aug = app.add_subcommand("augment", "Round-trip translation variants");
  c_aug->add_option("input", aug.input)->required()->check(CLI::ExistingFile);
  c_aug->add_option("output", aug.output)->required();
  c_aug->add_option("--rounds", aug.rounds, "Variants per document");
  c_aug->add_option("--provider", aug.provider)
      ->check(CLI::IsMember({"mock", "http", "identity"}));
  c_aug->add_option("--endpoint", aug.endpoint,
                    "Translation base URL (default: $TRANSLATE_ENDPOINT)");
  c_aug->add_flag("--no-dedupe", aug.no_dedupe);
  c_aug->add_option("--cache", aug.cache, "JSONL translation cache");
  c_aug->add_option("--pivot", aug.pivot, "Pivot language code");
  c_aug->add_option("--timeout", aug.timeout, "Seconds per request");
  c_aug->add_option("--retries", aug.retries);

  SplitArgs sp;
  auto* c_split = app.add_subcommand("split", "Train/val/test split");
  c_split->add_option("input", sp.input)->required()->check(CLI::ExistingFile);
  c_split->add_option("outdir", sp.outdir)->required();
  c_split->add_option("--ratios", sp.ratios)->delimiter(',')->expected(3);
  c_split->add_option("--seed", sp.seed);
  c_split->add_flag("--no-stratify", sp.no_stratify);

  TuneArgs tune;
  auto* c_tune = app.add_subcommand("tune", "Grid search with k-fold CV");
  c_tune->add_option("train", tune.train)->required()->check(CLI::ExistingFile);
  c_tune->add_option("--model", tune.model)->required();
  c_tune->add_option("--grid", tune.grid, "Grid JSON file or 'default'");
  c_tune->add_option("--folds", tune.folds);
  c_tune->add_option("--metric", tune.metric)
      ->check(CLI::IsMember({"accuracy", "f1"}));
  c_tune->add_option("--seed", tune.seed);
  c_tune->add_option("--out", tune.output);
  add_prep_flags(c_tune, tune.prep);

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Fit a model and save it");
  c_train->add_option("train", train.train)->required()->check(CLI::ExistingFile);
  c_train->add_option("--model", train.model)->required();
  c_train->add_option("--params", train.params,
                      "'table2', 'default' or a JSON file");
  c_train->add_option("--seed", train.seed);
  c_train->add_option("--out", train.output);
  add_prep_flags(c_train, train.prep);

  SelfTrainArgs st;
  auto* c_st = app.add_subcommand("selftrain", "Confidence-filtered self-training");
  c_st->add_option("train", st.train)->required()->check(CLI::ExistingFile);
  c_st->add_option("unlabeled", st.unlabeled)->required()->check(CLI::ExistingFile);
  c_st->add_option("val", st.val)->required()->check(CLI::ExistingFile);
  c_st->add_option("--model", st.model)->required();
  c_st->add_option("--params", st.params);
  c_st->add_option("--threshold", st.threshold);
  c_st->add_option("--rounds", st.rounds);
  c_st->add_option("--max-added", st.max_added);
  c_st->add_option("--balance-cap", st.balance_cap);
  c_st->add_flag("--no-reeval", st.no_reeval,
                 "Return the last round instead of the best on val");
  c_st->add_option("--seed", st.seed);
  c_st->add_option("--out", st.output);
  c_st->add_option("--history", st.history);
  add_prep_flags(c_st, st.prep);

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Evaluate on a labeled test set");
  c_eval->add_option("model", ev.model, "Model file or 'remote'")->required();
  c_eval->add_option("test", ev.test)->required()->check(CLI::ExistingFile);
  c_eval->add_option("--out", ev.output);
  c_eval->add_option("--endpoint", ev.endpoint,
                     "Prediction base URL (default: $PREDICT_ENDPOINT)");
  c_eval->add_option("--batch-size", ev.batch_size);
  c_eval->add_option("--reference", ev.reference,
                     "Compare against published values: 'transformer'");
  c_eval->add_flag("--allow-train-eval", ev.allow_train_eval);
  add_prep_flags(c_eval, ev.prep);

  ExplainArgs ex;
  auto* c_ex = app.add_subcommand("explain", "Local surrogate explanations");
  c_ex->add_option("model", ex.model, "Model file or 'remote'")->required();
  c_ex->add_option("docs", ex.docs)->required()->check(CLI::ExistingFile);
  c_ex->add_option("--out", ex.outdir)->required();
  c_ex->add_option("--samples", ex.samples);
  c_ex->add_option("--top-k", ex.top_k);
  c_ex->add_option("--seed", ex.seed);
  c_ex->add_option("--width", ex.width, "Kernel width");
  c_ex->add_option("--lambda", ex.lambda, "Ridge penalty");
  c_ex->add_option("--limit", ex.limit, "Explain the first N documents");
  c_ex->add_option("--endpoint", ex.endpoint);
  c_ex->add_option("--batch-size", ex.batch_size);
  add_prep_flags(c_ex, ex.prep);

  PipelineArgs pl;
  auto* c_pl = app.add_subcommand("pipeline", "Run every stage end to end");
  c_pl->add_option("--preset", pl.preset, "'paper' or a preset JSON file");
  c_pl->add_option("--input", pl.input, "Dataset; unlabeled rows feed self-training")
      ->required()
      ->check(CLI::ExistingFile);
  c_pl->add_option("--unlabeled", pl.unlabeled)->check(CLI::ExistingFile);
  c_pl->add_option("--out", pl.outdir);
  c_pl->add_option("--provider", pl.provider)
      ->check(CLI::IsMember({"mock", "http", "identity"}));
  c_pl->add_option("--endpoint", pl.endpoint);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[usage]: " << e.what() << '\n';
    return static_cast<int>(hpd::ErrorKind::Config);
  }
  hpd::set_warnings_enabled(!quiet);

  try {
    if (*c_prep) run_prep(prep);
    else if (*c_aug) run_augment(aug);
    else if (*c_split) run_split(sp);
    else if (*c_tune) run_tune(tune);
    else if (*c_train) run_train(train);
    else if (*c_st) run_selftrain(st);
    else if (*c_eval) run_eval(ev);
    else if (*c_ex) run_explain(ex);
    else if (*c_pl) run_pipeline(pl);
  } catch (const hpd::Error& e) {
    std::cerr << "error[" << e.code() << "]: " << e.what() << '\n';
    return e.exit_code();
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error[config]: " << e.what() << '\n';
    return static_cast<int>(hpd::ErrorKind::Config);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error[io]: " << e.what() << '\n';
    return static_cast<int>(hpd::ErrorKind::Data);
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << '\n';
    return static_cast<int>(hpd::ErrorKind::Invariant);
  }
  return 0;
}
