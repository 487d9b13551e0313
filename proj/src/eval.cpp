#include "hpd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_set>

#include "hpd/error.hpp"

namespace hpd {

ConfusionMatrix confusion(std::span<const Label> truth,
                          std::span<const Label> predicted) {
  if (truth.size() != predicted.size()) {
    throw DataError("length", "confusion: " + std::to_string(truth.size()) +
                                  " labels but " +
                                  std::to_string(predicted.size()) +
                                  " predictions");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool actual = truth[i] == Label::Hyperpartisan;
    const bool guess = predicted[i] == Label::Hyperpartisan;
    if (actual && guess) ++cm.tp;
    else if (actual) ++cm.fn;
    else if (guess) ++cm.fp;
    else ++cm.tn;
  }
  return cm;
}

ReferenceMetrics transformer_reference() {
  return {"Bangla BERT", 0.9565, 0.9565, 0.9524, 0.9544, 5e-5};
}

bool EvaluationReport::has_flag(std::string_view flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

nlohmann::ordered_json EvaluationReport::to_json() const {
  nlohmann::ordered_json j;
  j["model"] = model;
  j["dataset"] = dataset;
  j["confusion"] = {{"tp", confusion.tp},
                    {"fp", confusion.fp},
                    {"tn", confusion.tn},
                    {"fn", confusion.fn}};
  j["metrics"] = {{"accuracy", accuracy},
                  {"precision", precision},
                  {"recall", recall},
                  {"f1", f1}};
  j["flags"] = flags;
  if (reference) {
    nlohmann::ordered_json ref;
    ref["name"] = reference->name;
    ref["tolerance"] = reference->tolerance;
    const auto put = [&](const char* key, const std::optional<double>& v) {
      if (v) ref[key] = *v;
    };
    put("accuracy", reference->accuracy);
    put("precision", reference->precision);
    put("recall", reference->recall);
    put("f1", reference->f1);
    j["reference"] = std::move(ref);
  }
  return j;
}

EvaluationReport metrics(const ConfusionMatrix& cm, std::string model,
                         std::string dataset) {
  if (cm.total() == 0) {
    throw DataError("empty", "cannot compute metrics on zero documents");
  }
  EvaluationReport r;
  r.model = std::move(model);
  r.dataset = std::move(dataset);
  r.confusion = cm;
  const auto ratio = [&](std::size_t num, std::size_t den, const char* name) {
    if (den == 0) {
      r.flags.push_back(std::string(name) + "_undefined");
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  r.accuracy = ratio(cm.tp + cm.tn, cm.total(), "accuracy");
  r.precision = ratio(cm.tp, cm.tp + cm.fp, "precision");
  r.recall = ratio(cm.tp, cm.tp + cm.fn, "recall");
  if (r.precision + r.recall > 0.0) {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  } else {
    r.flags.push_back("f1_undefined");
  }
  return r;
}

void compare_to_reference(EvaluationReport& report,
                          const ReferenceMetrics& reference) {
  bool any = false;
  const auto check = [&](const char* name, double actual,
                         const std::optional<double>& expected) {
    if (expected && std::abs(actual - *expected) > reference.tolerance) {
      report.flags.push_back(std::string("reference_discrepancy:") + name);
      any = true;
    }
  };
  check("accuracy", report.accuracy, reference.accuracy);
  check("precision", report.precision, reference.precision);
  check("recall", report.recall, reference.recall);
  check("f1", report.f1, reference.f1);
  if (any) report.flags.push_back("reference_discrepancy");
  report.reference = reference;
}

EvaluationReport evaluate(const TextClassifier& model, const Corpus& test,
                          const EvalOptions& options) {
  if (test.empty()) throw DataError("empty", "test corpus is empty");
  test.require_labeled("evaluation");
  for (const auto& doc : test) {
    if (doc.provenance.kind == Provenance::Kind::PseudoLabeled) {
      throw DataError("pseudo_label_test",
                      "test document '" + doc.id +
                          "' carries a pseudo-label; pseudo-labels are not "
                          "ground truth");
    }
  }
  const auto train_ids = model.training_ids();
  const std::unordered_set<std::string> seen(train_ids.begin(),
                                             train_ids.end());
  std::size_t overlap = 0;
  std::string first_overlap;
  for (const auto& doc : test) {
    if (seen.contains(doc.id)) {
      if (overlap++ == 0) first_overlap = doc.id;
    }
  }
  if (overlap > 0 && !options.allow_train_eval) {
    throw DataError("leakage", std::to_string(overlap) +
                                   " test document(s) were used in training, "
                                   "e.g. '" + first_overlap + "'");
  }
  const auto rows = model.predict_documents(test.documents());
  std::vector<Label> truth, predicted;
  truth.reserve(test.size());
  predicted.reserve(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    truth.push_back(*test[i].label);
    predicted.push_back(argmax_label(rows[i]));
  }
  auto report = metrics(confusion(truth, predicted), model.describe(),
                        options.dataset);
  if (overlap > 0) report.flags.push_back("evaluated_on_training_data");
  return report;
}

std::string format_table(std::span<const EvaluationReport> reports) {
  std::size_t width = 5;
  for (const auto& r : reports) width = std::max(width, r.model.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %9s  %9s  %9s  %9s\n",
                static_cast<int>(width), "Model", "Accuracy", "Precision",
                "Recall", "F1");
  out += buf;
  out += std::string(width + 4 * 11, '-') + "\n";
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%-*s  %9.4f  %9.4f  %9.4f  %9.4f\n",
                  static_cast<int>(width), r.model.c_str(), r.accuracy,
                  r.precision, r.recall, r.f1);
    out += buf;
  }
  return out;
}

}  // namespace hpd
