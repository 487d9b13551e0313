#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hpd {

// Class order is fixed everywhere: index 0 = NotHyperpartisan,
// index 1 = Hyperpartisan (the positive class).
enum class Label : int { NotHyperpartisan = 0, Hyperpartisan = 1 };

inline constexpr std::size_t kNumClasses = 2;

constexpr std::size_t class_index(Label label) noexcept {
  return static_cast<std::size_t>(label);
}
constexpr Label label_from_index(std::size_t index) noexcept {
  return index == 0 ? Label::NotHyperpartisan : Label::Hyperpartisan;
}

std::string_view label_name(Label label) noexcept;
// Accepts "1"/"0", "true"/"false" and the class names (case-insensitive,
// '_' '-' and ' ' interchangeable). Returns nullopt for anything else.
std::optional<Label> parse_label(std::string_view text);

struct Provenance {
  enum class Kind { Original, Augmented, PseudoLabeled };

  Kind kind = Kind::Original;
  int round = 0;            // Augmented: variant index, 1-based
  double confidence = 0.0;  // PseudoLabeled: max class probability

  static Provenance original() { return {}; }
  static Provenance augmented(int round) {
    return {Kind::Augmented, round, 0.0};
  }
  static Provenance pseudo_labeled(double confidence) {
    return {Kind::PseudoLabeled, 0, confidence};
  }
  bool operator==(const Provenance&) const = default;
};

using TokenList = std::vector<std::string>;

struct Document {
  std::string id;
  std::string title;
  std::string content;
  std::string source;
  std::optional<Label> label;
  std::optional<std::string> text;  // merged title + content
  std::optional<TokenList> tokens;  // filled by preprocessing
  Provenance provenance;

  bool operator==(const Document&) const = default;
};

// text = title + " " + content. Reads only title/content, so it is
// idempotent.
Document merge_title_content(Document doc);

using ClassCounts = std::array<std::size_t, kNumClasses>;

// An immutable ordered collection of documents with unique ids.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Document> documents);

  const std::vector<Document>& documents() const noexcept { return docs_; }
  std::size_t size() const noexcept { return docs_.size(); }
  bool empty() const noexcept { return docs_.empty(); }
  const Document& operator[](std::size_t i) const { return docs_[i]; }
  auto begin() const noexcept { return docs_.begin(); }
  auto end() const noexcept { return docs_.end(); }

  const ClassCounts& class_counts() const noexcept { return counts_; }
  std::size_t unlabeled_count() const noexcept { return unlabeled_; }
  bool fully_labeled() const noexcept { return unlabeled_ == 0; }
  bool fully_unlabeled() const noexcept { return unlabeled_ == docs_.size(); }

  // Throws DataError unless every document carries a label; training
  // operations may not mix labeled and unlabeled documents.
  void require_labeled(std::string_view what) const;

 private:
  std::vector<Document> docs_;
  ClassCounts counts_{};
  std::size_t unlabeled_ = 0;
};

enum class FileFormat { Csv, Jsonl };

// Picks the format from the extension (.csv, .jsonl/.json); throws
// ConfigError otherwise.
FileFormat format_from_path(const std::filesystem::path& path);

struct RowError {
  std::size_t line = 0;
  std::string message;
};

struct LoadReport {
  Corpus corpus;
  std::size_t rows_read = 0;
  std::size_t dropped_empty = 0;  // empty Title or Content
  std::vector<RowError> errors;   // malformed rows, skipped
};

// CSV: header row with Title, Content and optional Source, Label, Id columns.
// JSONL: keys title, content and optional source, label, id, tokens,
// provenance. Rows without an id get "row-<line>".
LoadReport load_dataset(const std::filesystem::path& path, FileFormat format);
LoadReport parse_dataset(std::string_view data, FileFormat format);

std::string serialize_dataset(const Corpus& corpus, FileFormat format);
void save_dataset(const Corpus& corpus, const std::filesystem::path& path,
                  FileFormat format);

struct SplitConfig {
  double train_fraction = 0.70;
  double val_fraction = 0.15;
  double test_fraction = 0.15;
  std::uint64_t seed = 0;
  bool stratified = true;

  void validate() const;
};

struct CorpusSplit {
  Corpus train;
  Corpus val;
  Corpus test;
};

// |test| = floor(test_fraction * n), |val| = floor(val_fraction * n), train
// takes the remainder. Within each part documents keep corpus order.
CorpusSplit split(const Corpus& corpus, const SplitConfig& cfg);

}  // namespace hpd
