#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hpd/classifier.hpp"
#include "hpd/corpus.hpp"
#include "hpd/model.hpp"

namespace hpd {

struct SelfTrainConfig {
  double confidence_threshold = 0.90;  // in (0.5, 1]
  int rounds = 1;
  std::optional<std::size_t> max_added_per_round;
  // Largest allowed ratio between the per-class counts added in a round.
  std::optional<double> class_balance_cap;
  bool reeval_on_val = true;

  void validate() const;
};

struct PseudoLabelBatch {
  std::vector<Document> documents;  // label = argmax, PseudoLabeled(conf)
  int round = 1;
  ClassCounts counts{};
};

// Keeps every document whose max class probability reaches threshold.
PseudoLabelBatch pseudo_label(const TextClassifier& model,
                              const Corpus& unlabeled, double threshold,
                              int round = 1);

// Orders by descending confidence (ties by id) and trims to the caps.
PseudoLabelBatch apply_caps(PseudoLabelBatch batch,
                            const SelfTrainConfig& cfg);

struct RoundRecord {
  int round = 0;  // 0 = supervised fit on the labeled data alone
  std::size_t added_total = 0;
  ClassCounts added_per_class{};
  std::optional<double> val_accuracy;
  std::optional<double> val_f1;
  std::size_t pool_remaining = 0;

  nlohmann::ordered_json to_json() const;
};

struct SelfTrainResult {
  TextModel model;
  std::vector<RoundRecord> history;
  int selected_round = 0;
};

// Round r fits on labeled plus every pseudo-label accepted before r, then
// labels the remaining pool. Stops after cfg.rounds or once a round adds
// nothing. With reeval_on_val the round with the best validation F1 wins
// (earliest on ties); otherwise the last model.
SelfTrainResult self_train(const Corpus& labeled, const Corpus& unlabeled,
                           const Corpus& val, const ModelSpec& base,
                           const SelfTrainConfig& cfg,
                           const TfidfConfig& tfidf = {});

// One JSON object per line.
std::string history_jsonl(std::span<const RoundRecord> history);

}  // namespace hpd
