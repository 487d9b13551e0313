#include "hpd/ssl.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "hpd/error.hpp"
#include "hpd/eval.hpp"

namespace hpd {

void SelfTrainConfig::validate() const {
  if (!(confidence_threshold > 0.5 && confidence_threshold <= 1.0)) {
    throw ConfigError("confidence threshold must be in (0.5, 1]");
  }
  if (rounds < 1) throw ConfigError("rounds must be >= 1");
  if (class_balance_cap && !(*class_balance_cap >= 1.0)) {
    throw ConfigError("class balance cap must be >= 1");
  }
}

PseudoLabelBatch pseudo_label(const TextClassifier& model,
                              const Corpus& unlabeled, double threshold,
                              int round) {
  PseudoLabelBatch batch;
  batch.round = round;
  if (unlabeled.empty()) return batch;
  const auto rows = model.predict_documents(unlabeled.documents());
  for (std::size_t i = 0; i < unlabeled.size(); ++i) {
    const double conf = confidence(rows[i]);
    if (conf < threshold) continue;
    Document doc = unlabeled[i];
    doc.label = argmax_label(rows[i]);
    doc.provenance = Provenance::pseudo_labeled(conf);
    ++batch.counts[class_index(*doc.label)];
    batch.documents.push_back(std::move(doc));
  }
  return batch;
}

namespace {

void recount(PseudoLabelBatch& batch) {
  batch.counts = {};
  for (const auto& doc : batch.documents) ++batch.counts[class_index(*doc.label)];
}

}  // namespace

PseudoLabelBatch apply_caps(PseudoLabelBatch batch,
                            const SelfTrainConfig& cfg) {
  auto& docs = batch.documents;
  std::sort(docs.begin(), docs.end(), [](const Document& a, const Document& b) {
    if (a.provenance.confidence != b.provenance.confidence) {
      return a.provenance.confidence > b.provenance.confidence;
    }
    return a.id < b.id;
  });
  // Each pass only removes documents, so this terminates.
  for (bool changed = true; changed;) {
    changed = false;
    recount(batch);
    if (cfg.class_balance_cap) {
      ClassCounts allowed{};
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        const double other = static_cast<double>(batch.counts[1 - c]);
        allowed[c] = std::min(
            batch.counts[c],
            static_cast<std::size_t>(std::floor(*cfg.class_balance_cap * other)));
      }
      if (allowed != batch.counts) {
        ClassCounts kept{};
        std::erase_if(docs, [&](const Document& d) {
          const auto c = class_index(*d.label);
          return kept[c]++ >= allowed[c];
        });
        changed = true;
        continue;
      }
    }
    if (cfg.max_added_per_round && docs.size() > *cfg.max_added_per_round) {
      docs.resize(*cfg.max_added_per_round);
      changed = true;
    }
  }
  recount(batch);
  return batch;
}

nlohmann::ordered_json RoundRecord::to_json() const {
  nlohmann::ordered_json j;
  j["round"] = round;
  j["added_total"] = added_total;
  j["added_per_class"] = {
      {std::string(label_name(Label::NotHyperpartisan)), added_per_class[0]},
      {std::string(label_name(Label::Hyperpartisan)), added_per_class[1]}};
  j["val_accuracy"] = val_accuracy ? nlohmann::ordered_json(*val_accuracy)
                                   : nlohmann::ordered_json(nullptr);
  j["val_f1"] = val_f1 ? nlohmann::ordered_json(*val_f1)
                       : nlohmann::ordered_json(nullptr);
  j["pool_remaining"] = pool_remaining;
  return j;
}

std::string history_jsonl(std::span<const RoundRecord> history) {
  std::string out;
  for (const auto& r : history) out += r.to_json().dump() + "\n";
  return out;
}

SelfTrainResult self_train(const Corpus& labeled, const Corpus& unlabeled,
                           const Corpus& val, const ModelSpec& base,
                           const SelfTrainConfig& cfg,
                           const TfidfConfig& tfidf) {
  cfg.validate();
  labeled.require_labeled("self-training");
  const auto counts = labeled.class_counts();
  if (counts[0] == 0 || counts[1] == 0) {
    throw FitError("self-training needs labeled examples of both classes");
  }
  const bool use_val = cfg.reeval_on_val && !val.empty();
  if (use_val) val.require_labeled("validation");

  const auto score_round = [&](const TextModel& model, RoundRecord& record) {
    if (!use_val) return;
    const auto report = evaluate(model, val);
    record.val_accuracy = report.accuracy;
    record.val_f1 = report.f1;
  };

  std::vector<Document> training(labeled.begin(), labeled.end());
  std::vector<Document> pool(unlabeled.begin(), unlabeled.end());

  RoundRecord first;
  first.pool_remaining = pool.size();
  TextModel best = TextModel::fit(labeled, base, tfidf);
  score_round(best, first);
  std::vector<RoundRecord> history{first};
  int selected = 0;
  if (pool.empty()) return {std::move(best), std::move(history), selected};

  std::optional<TextModel> current;
  const auto current_model = [&]() -> const TextModel& {
    return current ? *current : best;
  };
  for (int round = 1; round <= cfg.rounds; ++round) {
    auto batch = apply_caps(
        pseudo_label(current_model(), Corpus(pool), cfg.confidence_threshold,
                     round),
        cfg);
    std::unordered_set<std::string> accepted;
    for (auto& doc : batch.documents) {
      accepted.insert(doc.id);
      training.push_back(std::move(doc));
    }
    std::erase_if(pool,
                  [&](const Document& d) { return accepted.contains(d.id); });

    RoundRecord record;
    record.round = round;
    record.added_total = accepted.size();
    record.added_per_class = batch.counts;
    record.pool_remaining = pool.size();
    if (accepted.empty()) {
      // Nothing new to learn from; the model of the previous round stands.
      record.val_accuracy = history.back().val_accuracy;
      record.val_f1 = history.back().val_f1;
      history.push_back(record);
      break;
    }
    TextModel next = TextModel::fit(Corpus(training), base, tfidf);
    score_round(next, record);
    history.push_back(record);

    const bool improves =
        !use_val || record.val_f1.value_or(0.0) >
                        history[static_cast<std::size_t>(selected)].val_f1.value_or(0.0);
    if (improves) {
      best = std::move(next);
      selected = round;
      current.reset();
    } else {
      current = std::move(next);
    }
    if (pool.empty()) break;
  }
  return {std::move(best), std::move(history), selected};
}

}  // namespace hpd
