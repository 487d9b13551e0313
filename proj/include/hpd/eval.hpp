#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hpd/classifier.hpp"
#include "hpd/corpus.hpp"

namespace hpd {

// Hyperpartisan is the positive class.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const Label> truth,
                          std::span<const Label> predicted);

// Published metric values to hold a report against. Values given with four
// decimals match when within half a unit of the last digit.
struct ReferenceMetrics {
  std::string name;
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  double tolerance = 5e-5;
};

// Published metrics of the fine-tuned transformer; its confusion matrix is
// tp 220, fn 11, tn 242, fp 20.
ReferenceMetrics transformer_reference();

struct EvaluationReport {
  std::string model;
  std::string dataset;
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // e.g. "precision_undefined", "reference_discrepancy:accuracy",
  // "evaluated_on_training_data".
  std::vector<std::string> flags;
  std::optional<ReferenceMetrics> reference;

  bool has_flag(std::string_view flag) const;
  nlohmann::ordered_json to_json() const;
};

// A zero denominator yields 0 for that metric plus an "<metric>_undefined"
// flag. Throws DataError when the matrix is empty.
EvaluationReport metrics(const ConfusionMatrix& cm, std::string model = {},
                         std::string dataset = {});

// Flags every metric that differs from the reference by more than its
// tolerance, plus an overall "reference_discrepancy" flag.
void compare_to_reference(EvaluationReport& report,
                          const ReferenceMetrics& reference);

struct EvalOptions {
  std::string dataset;
  // Permits overlap with the model's training ids; the report is flagged.
  bool allow_train_eval = false;
};

// Argmax predictions over a labeled test corpus. Refuses pseudo-labeled test
// documents and documents the model was trained on.
EvaluationReport evaluate(const TextClassifier& model, const Corpus& test,
                          const EvalOptions& options = {});

// Model | Accuracy | Precision | Recall | F1, four decimals.
std::string format_table(std::span<const EvaluationReport> reports);

}  // namespace hpd
