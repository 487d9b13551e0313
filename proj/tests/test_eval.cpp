#include <doctest.h>

#include <cmath>

#include "hpd/error.hpp"
#include "hpd/eval.hpp"
#include "hpd/model.hpp"
#include "hpd/rng.hpp"
#include "support.hpp"

using namespace hpd;

namespace {

constexpr Label P = Label::Hyperpartisan;
constexpr Label N = Label::NotHyperpartisan;

// Predicts one class for everything.
class ConstantModel final : public TextClassifier {
 public:
  explicit ConstantModel(Label label) : label_(label) {}
  std::string describe() const override { return "constant"; }
  std::vector<ProbaRow> predict_tokens(std::span<const TokenList> inputs) const override {
    const ProbaRow row = label_ == P ? ProbaRow{0.2, 0.8} : ProbaRow{0.8, 0.2};
    return std::vector<ProbaRow>(inputs.size(), row);
  }

 private:
  Label label_;
};

Corpus labeled_corpus(std::size_t pos, std::size_t neg) {
  std::vector<Document> docs;
  for (std::size_t i = 0; i < pos + neg; ++i) {
    Document d;
    d.id = "d" + std::to_string(i);
    d.label = i < pos ? P : N;
    d.tokens = TokenList{"x"};
    docs.push_back(d);
  }
  return Corpus(docs);
}

}  // namespace

TEST_CASE("confusion counts") {
  CHECK(confusion(std::vector<Label>{P, P, N}, std::vector<Label>{P, N, N}) ==
        ConfusionMatrix{1, 0, 1, 1});
  const std::vector<Label> truth{P, N, N, P, N};
  const auto perfect = confusion(truth, truth);
  CHECK(perfect.fp == 0);
  CHECK(perfect.fn == 0);
  CHECK(perfect.total() == 5);
  CHECK_THROWS_AS(confusion(truth, std::vector<Label>{P}), DataError);
}

TEST_CASE("confusion is invariant under joint permutation") {
  Rng rng(3);
  std::vector<Label> t(50), p(50);
  for (std::size_t i = 0; i < 50; ++i) {
    t[i] = rng.uniform() < 0.5 ? P : N;
    p[i] = rng.uniform() < 0.5 ? P : N;
  }
  const auto cm = confusion(t, p);
  std::vector<std::size_t> order(50);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span(order));
  std::vector<Label> t2, p2;
  for (auto i : order) {
    t2.push_back(t[i]);
    p2.push_back(p[i]);
  }
  CHECK(confusion(t2, p2) == cm);
}

TEST_CASE("reported counts reproduce the reported recall") {
  const auto r = metrics({.tp = 220, .fp = 20, .tn = 242, .fn = 11});
  CHECK(r.recall == doctest::Approx(220.0 / 231.0).epsilon(1e-15));
  CHECK(std::abs(r.recall - 0.9524) <= 5e-5);
  // The same counts give accuracy 462/493 and precision 220/240.
  CHECK(r.accuracy == doctest::Approx(462.0 / 493.0).epsilon(1e-15));
  CHECK(r.precision == doctest::Approx(220.0 / 240.0).epsilon(1e-15));
}

TEST_CASE("reference comparison flags the inconsistent metrics") {
  auto r = metrics({.tp = 220, .fp = 20, .tn = 242, .fn = 11}, "Bangla BERT", "test");
  compare_to_reference(r, transformer_reference());
  CHECK(r.has_flag("reference_discrepancy"));
  CHECK(r.has_flag("reference_discrepancy:accuracy"));
  CHECK(r.has_flag("reference_discrepancy:precision"));
  CHECK_FALSE(r.has_flag("reference_discrepancy:recall"));
  REQUIRE(r.reference);
  const auto j = r.to_json();
  CHECK(j["reference"]["recall"] == 0.9524);

  auto matching = metrics({.tp = 220, .fp = 20, .tn = 242, .fn = 11});
  ReferenceMetrics only_recall{"x", std::nullopt, std::nullopt, 0.9524, std::nullopt};
  compare_to_reference(matching, only_recall);
  CHECK_FALSE(matching.has_flag("reference_discrepancy"));
}

TEST_CASE("simple metric values") {
  const auto half = metrics({1, 1, 1, 1});
  CHECK(half.accuracy == 0.5);
  CHECK(half.precision == 0.5);
  CHECK(half.recall == 0.5);
  CHECK(half.f1 == 0.5);
  const auto perfect = metrics({3, 0, 4, 0});
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);
  CHECK(perfect.flags.empty());
}

TEST_CASE("zero denominators give zero with a flag") {
  const auto r = metrics({0, 0, 5, 3});
  CHECK(r.precision == 0.0);
  CHECK(r.recall == 0.0);
  CHECK(r.f1 == 0.0);
  CHECK(r.has_flag("precision_undefined"));
  CHECK(r.has_flag("f1_undefined"));
  CHECK_FALSE(r.has_flag("recall_undefined"));
  const auto no_pos = metrics({0, 2, 5, 0});
  CHECK(no_pos.has_flag("recall_undefined"));
  CHECK_THROWS_AS(metrics({}), DataError);
}

TEST_CASE("metric identities over random matrices") {
  Rng rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    ConfusionMatrix cm{rng.below(40), rng.below(40), rng.below(40), rng.below(40)};
    if (cm.total() == 0) continue;
    const auto r = metrics(cm);
    for (double v : {r.accuracy, r.precision, r.recall, r.f1}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    if (r.precision + r.recall > 0) {
      CHECK(std::abs(r.f1 * (r.precision + r.recall) - 2 * r.precision * r.recall) <= 1e-12);
    }
    const double scaled = r.accuracy * static_cast<double>(cm.total());
    CHECK(static_cast<std::size_t>(std::llround(scaled)) == cm.tp + cm.tn);
    CHECK(std::abs(scaled - std::round(scaled)) <= 1e-9);

    // Swapping the classes swaps tp<->tn and fp<->fn.
    const auto s = metrics({cm.tn, cm.fn, cm.tp, cm.fp});
    CHECK(s.accuracy == r.accuracy);
    if (cm.tn + cm.fn > 0) {
      CHECK(s.precision == doctest::Approx(double(cm.tn) / double(cm.tn + cm.fn)));
    }
    if (cm.tn + cm.fp > 0) {
      CHECK(s.recall == doctest::Approx(double(cm.tn) / double(cm.tn + cm.fp)));
    }
  }
}

TEST_CASE("majority-class model on a 60/40 corpus") {
  const auto corpus = labeled_corpus(60, 40);
  const auto pos = evaluate(ConstantModel(P), corpus);
  CHECK(pos.accuracy == doctest::Approx(0.6));
  CHECK(pos.recall == 1.0);
  const auto rev = labeled_corpus(40, 60);
  const auto neg = evaluate(ConstantModel(N), rev);
  CHECK(neg.accuracy == doctest::Approx(0.6));
  CHECK(neg.recall == 0.0);
  CHECK(neg.has_flag("precision_undefined"));
}

TEST_CASE("leakage and pseudo-label refusals") {
  const auto train = testing::synthetic_corpus(80, 40, "tr");
  const auto test = testing::synthetic_corpus(30, 41, "te");
  const auto model = TextModel::fit(train, {"nb", {}});
  CHECK_NOTHROW(evaluate(model, test));
  try {
    evaluate(model, train);
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(e.code() == "leakage");
  }
  const auto allowed = evaluate(model, train, {.dataset = "train", .allow_train_eval = true});
  CHECK(allowed.has_flag("evaluated_on_training_data"));
  CHECK(allowed.dataset == "train");

  std::vector<Document> docs(test.begin(), test.end());
  docs[0].provenance = Provenance::pseudo_labeled(0.95);
  try {
    evaluate(model, Corpus(docs));
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(e.code() == "pseudo_label_test");
  }
  CHECK_THROWS_AS(evaluate(model, testing::strip_labels(test)), DataError);
}

TEST_CASE("a loaded model reports exactly what the in-memory one did") {
  const auto train = testing::synthetic_corpus(100, 42, "tr");
  const auto test = testing::synthetic_corpus(50, 43, "te");
  testing::TempDir dir;
  for (const auto& type : known_model_types()) {
    auto params = table2_params(type);
    if (type == "rf") params["n_estimators"] = 10;
    const auto model = TextModel::fit(train, {type, params});
    save_model(model, dir / "m.json");
    const auto loaded = load_model(dir / "m.json");
    CHECK(evaluate(model, test).to_json() == evaluate(loaded, test).to_json());
  }
}

TEST_CASE("report JSON and text table") {
  auto r = metrics({220, 20, 242, 11}, "lr", "test");
  const auto j = r.to_json();
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"model", "dataset", "confusion", "metrics", "flags"});
  CHECK(j["confusion"]["tp"] == 220);
  CHECK(j["confusion"]["fn"] == 11);
  CHECK(j["metrics"]["recall"] == doctest::Approx(220.0 / 231.0));

  const auto table = format_table(std::vector<EvaluationReport>{r, metrics({1, 1, 1, 1}, "nb")});
  CHECK(table.find("Model") != std::string::npos);
  CHECK(table.find("Accuracy") != std::string::npos);
  CHECK(table.find("F1") != std::string::npos);
  CHECK(table.find("0.9524") != std::string::npos);
  CHECK(table.find("0.5000") != std::string::npos);
  const auto header_end = table.find('\n');
  CHECK(table.substr(0, header_end).find("Precision") < table.substr(0, header_end).find("Recall"));
}
