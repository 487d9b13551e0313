#include "hpd/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <unordered_set>

#include "hpd/error.hpp"
#include "hpd/rng.hpp"
#include "hpd/util.hpp"

namespace hpd {

using ojson = nlohmann::ordered_json;

std::string_view label_name(Label label) noexcept {
  return label == Label::Hyperpartisan ? "Hyperpartisan" : "NotHyperpartisan";
}

std::optional<Label> parse_label(std::string_view text) {
  std::string norm;
  for (char c : trim(text)) {
    if (c == '_' || c == '-' || c == ' ') continue;
    norm.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (norm == "1" || norm == "true" || norm == "hyperpartisan") {
    return Label::Hyperpartisan;
  }
  if (norm == "0" || norm == "false" || norm == "nothyperpartisan") {
    return Label::NotHyperpartisan;
  }
  return std::nullopt;
}

Document merge_title_content(Document doc) {
  doc.text = doc.title + " " + doc.content;
  return doc;
}

Corpus::Corpus(std::vector<Document> documents) : docs_(std::move(documents)) {
  std::unordered_set<std::string_view> ids;
  ids.reserve(docs_.size());
  for (const auto& doc : docs_) {
    if (!ids.insert(doc.id).second) {
      throw DataError("duplicate_id", "duplicate document id '" + doc.id + "'");
    }
    if (doc.label) {
      ++counts_[class_index(*doc.label)];
    } else {
      ++unlabeled_;
    }
  }
}

void Corpus::require_labeled(std::string_view what) const {
  if (unlabeled_ != 0) {
    throw DataError("unlabeled",
                    std::string(what) + ": " + std::to_string(unlabeled_) +
                        " document(s) have no label");
  }
}

FileFormat format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (ext == ".csv") return FileFormat::Csv;
  if (ext == ".jsonl" || ext == ".json" || ext == ".ndjson") {
    return FileFormat::Jsonl;
  }
  throw ConfigError("cannot infer dataset format from '" + path.string() +
                    "' (expected .csv or .jsonl)");
}

namespace {

struct CsvRecord {
  std::size_t line = 0;
  std::vector<std::string> fields;
  std::string error;
};

// RFC 4180 reader: quoted fields may contain separators, doubled quotes and
// newlines.
std::vector<CsvRecord> read_csv(std::string_view data) {
  std::vector<CsvRecord> records;
  if (data.size() >= 3 && data.substr(0, 3) == "\xEF\xBB\xBF") {
    data.remove_prefix(3);
  }
  std::size_t i = 0;
  std::size_t line = 1;
  while (i < data.size()) {
    CsvRecord rec;
    rec.line = line;
    std::string field;
    bool in_quotes = false;
    bool done = false;
    bool quoted_field = false;
    while (!done) {
      if (i >= data.size()) {
        if (in_quotes) rec.error = "unterminated quoted field";
        rec.fields.push_back(std::move(field));
        break;
      }
      const char c = data[i];
      if (in_quotes) {
        if (c == '"') {
          if (i + 1 < data.size() && data[i + 1] == '"') {
            field.push_back('"');
            i += 2;
          } else {
            in_quotes = false;
            ++i;
          }
        } else {
          if (c == '\n') ++line;
          field.push_back(c);
          ++i;
        }
        continue;
      }
      switch (c) {
        case '"':
          if (field.empty() && !quoted_field) {
            in_quotes = true;
            quoted_field = true;
          } else if (rec.error.empty()) {
            rec.error = "stray quote inside unquoted field";
          }
          ++i;
          break;
        case ',':
          rec.fields.push_back(std::move(field));
          field.clear();
          quoted_field = false;
          ++i;
          break;
        case '\r':
          ++i;
          break;
        case '\n':
          rec.fields.push_back(std::move(field));
          ++line;
          ++i;
          done = true;
          break;
        default:
          if (quoted_field && rec.error.empty()) {
            rec.error = "text after closing quote";
          }
          field.push_back(c);
          ++i;
      }
    }
    const bool blank = rec.fields.size() == 1 && rec.fields[0].empty() &&
                       rec.error.empty();
    if (!blank) records.push_back(std::move(rec));
  }
  return records;
}

std::string lower(std::string_view s) {
  std::string out(trim(s));
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool blank_text(std::string_view s) { return trim(s).empty(); }

class Loader {
 public:
  void add(Document doc, std::size_t line) {
    ++report_.rows_read;
    if (doc.id.empty()) doc.id = "row-" + std::to_string(line);
    if (blank_text(doc.title) || blank_text(doc.content)) {
      ++report_.dropped_empty;
      return;
    }
    if (!ids_.insert(doc.id).second) {
      report_.errors.push_back({line, "duplicate id '" + doc.id + "'"});
      return;
    }
    docs_.push_back(std::move(doc));
  }
  void fail(std::size_t line, std::string message) {
    ++report_.rows_read;
    report_.errors.push_back({line, std::move(message)});
  }
  LoadReport finish() {
    report_.corpus = Corpus(std::move(docs_));
    return std::move(report_);
  }

 private:
  LoadReport report_;
  std::vector<Document> docs_;
  std::unordered_set<std::string> ids_;
};

LoadReport parse_csv(std::string_view data) {
  auto records = read_csv(data);
  if (records.empty()) throw SchemaError("CSV input has no header row");
  const auto& header = records.front();
  std::optional<std::size_t> title_col, content_col, source_col, label_col,
      id_col;
  for (std::size_t c = 0; c < header.fields.size(); ++c) {
    const auto name = lower(header.fields[c]);
    if (name == "title") title_col = c;
    else if (name == "content") content_col = c;
    else if (name == "source") source_col = c;
    else if (name == "label") label_col = c;
    else if (name == "id") id_col = c;
  }
  if (!title_col) throw SchemaError("missing required column 'Title'");
  if (!content_col) throw SchemaError("missing required column 'Content'");

  Loader loader;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (!rec.error.empty()) {
      loader.fail(rec.line, rec.error);
      continue;
    }
    if (rec.fields.size() != header.fields.size()) {
      loader.fail(rec.line, "expected " + std::to_string(header.fields.size()) +
                                " fields, found " +
                                std::to_string(rec.fields.size()));
      continue;
    }
    Document doc;
    doc.title = rec.fields[*title_col];
    doc.content = rec.fields[*content_col];
    if (source_col) doc.source = rec.fields[*source_col];
    if (id_col) doc.id = std::string(trim(rec.fields[*id_col]));
    if (label_col && !blank_text(rec.fields[*label_col])) {
      doc.label = parse_label(rec.fields[*label_col]);
      if (!doc.label) {
        loader.fail(rec.line,
                    "unrecognized label '" + rec.fields[*label_col] + "'");
        continue;
      }
    }
    loader.add(std::move(doc), rec.line);
  }
  return loader.finish();
}

std::optional<Label> label_from_json(const ojson& value) {
  if (value.is_null()) return std::nullopt;
  if (value.is_boolean()) {
    return value.get<bool>() ? Label::Hyperpartisan : Label::NotHyperpartisan;
  }
  if (value.is_number_integer() || value.is_number_unsigned()) {
    const auto v = value.get<std::int64_t>();
    if (v == 1) return Label::Hyperpartisan;
    if (v == 0) return Label::NotHyperpartisan;
    throw DataError("label", "label must be 0 or 1, got " + value.dump());
  }
  if (value.is_string()) {
    if (auto label = parse_label(value.get<std::string>())) return label;
  }
  throw DataError("label", "unrecognized label " + value.dump());
}

Provenance provenance_from_json(const ojson& value) {
  const auto kind = value.at("kind").get<std::string>();
  if (kind == "original") return Provenance::original();
  if (kind == "augmented") {
    return Provenance::augmented(value.at("round").get<int>());
  }
  if (kind == "pseudo_labeled") {
    return Provenance::pseudo_labeled(value.at("confidence").get<double>());
  }
  throw DataError("provenance", "unknown provenance kind '" + kind + "'");
}

LoadReport parse_jsonl(std::string_view data) {
  Loader loader;
  std::size_t line_no = 0;
  std::size_t objects = 0, with_title = 0, with_content = 0;
  std::size_t pos = 0;
  while (pos < data.size()) {
    auto end = data.find('\n', pos);
    if (end == std::string_view::npos) end = data.size();
    auto line = trim(data.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    ojson obj;
    try {
      obj = ojson::parse(line);
    } catch (const nlohmann::json::exception& e) {
      loader.fail(line_no, std::string("malformed JSON: ") + e.what());
      continue;
    }
    if (!obj.is_object()) {
      loader.fail(line_no, "expected a JSON object");
      continue;
    }
    ++objects;
    const bool has_title = obj.contains("title");
    const bool has_content = obj.contains("content");
    with_title += has_title;
    with_content += has_content;
    if (!has_title || !has_content) {
      loader.fail(line_no, has_title ? "missing key 'content'"
                                     : "missing key 'title'");
      continue;
    }
    try {
      Document doc;
      doc.title = obj.at("title").get<std::string>();
      doc.content = obj.at("content").get<std::string>();
      if (obj.contains("source") && !obj["source"].is_null()) {
        doc.source = obj["source"].get<std::string>();
      }
      if (obj.contains("id")) {
        const auto& id = obj["id"];
        doc.id = id.is_string() ? id.get<std::string>() : id.dump();
      }
      if (obj.contains("label")) doc.label = label_from_json(obj["label"]);
      if (obj.contains("tokens")) {
        doc.tokens = obj["tokens"].get<TokenList>();
      }
      if (obj.contains("provenance")) {
        doc.provenance = provenance_from_json(obj["provenance"]);
      }
      loader.add(std::move(doc), line_no);
    } catch (const nlohmann::json::exception& e) {
      loader.fail(line_no, std::string("bad field type: ") + e.what());
    } catch (const DataError& e) {
      loader.fail(line_no, e.what());
    }
  }
  if (objects > 0 && with_title == 0) {
    throw SchemaError("missing required key 'title'");
  }
  if (objects > 0 && with_content == 0) {
    throw SchemaError("missing required key 'content'");
  }
  return loader.finish();
}

std::string csv_escape(std::string_view field) {
  const bool needs_quotes =
      field.find_first_of(",\"\n\r") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

ojson provenance_to_json(const Provenance& p) {
  ojson out;
  switch (p.kind) {
    case Provenance::Kind::Original:
      out["kind"] = "original";
      break;
    case Provenance::Kind::Augmented:
      out["kind"] = "augmented";
      out["round"] = p.round;
      break;
    case Provenance::Kind::PseudoLabeled:
      out["kind"] = "pseudo_labeled";
      out["confidence"] = p.confidence;
      break;
  }
  return out;
}

}  // namespace

LoadReport parse_dataset(std::string_view data, FileFormat format) {
  return format == FileFormat::Csv ? parse_csv(data) : parse_jsonl(data);
}

LoadReport load_dataset(const std::filesystem::path& path, FileFormat format) {
  if (!std::filesystem::exists(path)) {
    throw DataError("io", "dataset file not found: " + path.string());
  }
  return parse_dataset(read_file(path), format);
}

std::string serialize_dataset(const Corpus& corpus, FileFormat format) {
  std::string out;
  if (format == FileFormat::Csv) {
    out = "Id,Title,Content,Source,Label\n";
    for (const auto& doc : corpus) {
      out += csv_escape(doc.id) + ',' + csv_escape(doc.title) + ',' +
             csv_escape(doc.content) + ',' + csv_escape(doc.source) + ',';
      if (doc.label) out += doc.label == Label::Hyperpartisan ? "1" : "0";
      out += '\n';
    }
    return out;
  }
  for (const auto& doc : corpus) {
    ojson obj;
    obj["id"] = doc.id;
    obj["title"] = doc.title;
    obj["content"] = doc.content;
    obj["source"] = doc.source;
    if (doc.label) obj["label"] = static_cast<int>(*doc.label);
    if (doc.provenance.kind != Provenance::Kind::Original) {
      obj["provenance"] = provenance_to_json(doc.provenance);
    }
    if (doc.tokens) obj["tokens"] = *doc.tokens;
    out += obj.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

void save_dataset(const Corpus& corpus, const std::filesystem::path& path,
                  FileFormat format) {
  write_file(path, serialize_dataset(corpus, format));
}

void SplitConfig::validate() const {
  const double fractions[] = {train_fraction, val_fraction, test_fraction};
  for (double f : fractions) {
    if (!(f > 0.0) || !std::isfinite(f)) {
      throw ConfigError("split fractions must be positive");
    }
  }
  if (std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
}

namespace {

// Rounds each stratum's proportional share of each part to a neighbouring
// integer so that stratum totals and part totals are both met exactly.
std::vector<std::array<std::size_t, 3>> allocate_strata(
    const std::vector<std::size_t>& stratum_sizes,
    const std::array<std::size_t, 3>& part_sizes, std::size_t n) {
  std::vector<std::array<std::size_t, 3>> alloc(stratum_sizes.size());
  auto remaining_part = part_sizes;
  for (std::size_t s = 0; s < stratum_sizes.size(); ++s) {
    const std::size_t size = stratum_sizes[s];
    if (s + 1 == stratum_sizes.size()) {
      alloc[s] = remaining_part;
      break;
    }
    std::array<double, 3> frac{};
    std::size_t assigned = 0;
    for (std::size_t p = 0; p < 3; ++p) {
      const double ideal =
          static_cast<double>(size) * static_cast<double>(part_sizes[p]) /
          static_cast<double>(n);
      alloc[s][p] = std::min<std::size_t>(
          static_cast<std::size_t>(std::floor(ideal)), remaining_part[p]);
      frac[p] = ideal - static_cast<double>(alloc[s][p]);
      assigned += alloc[s][p];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
      return frac[a] > frac[b];
    });
    while (assigned < size) {
      bool progressed = false;
      for (std::size_t p : order) {
        if (assigned == size) break;
        if (alloc[s][p] < remaining_part[p]) {
          ++alloc[s][p];
          ++assigned;
          progressed = true;
        }
      }
      if (!progressed) break;
    }
    for (std::size_t p = 0; p < 3; ++p) remaining_part[p] -= alloc[s][p];
  }
  return alloc;
}

}  // namespace

CorpusSplit split(const Corpus& corpus, const SplitConfig& cfg) {
  cfg.validate();
  const std::size_t n = corpus.size();
  if (n == 0) throw DataError("empty", "cannot split an empty corpus");

  const auto test_size = static_cast<std::size_t>(
      std::floor(cfg.test_fraction * static_cast<double>(n)));
  const auto val_size = static_cast<std::size_t>(
      std::floor(cfg.val_fraction * static_cast<double>(n)));
  const std::array<std::size_t, 3> part_sizes{n - val_size - test_size,
                                              val_size, test_size};

  // Strata: one per class, plus one for unlabeled documents.
  std::vector<std::vector<std::size_t>> strata(cfg.stratified ? 3 : 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t s = 0;
    if (cfg.stratified) {
      const auto& label = corpus[i].label;
      s = label ? class_index(*label) : 2;
    }
    strata[s].push_back(i);
  }
  std::erase_if(strata, [](const auto& s) { return s.empty(); });

  if (cfg.stratified) {
    const auto nonempty_parts = static_cast<std::size_t>(
        std::count_if(part_sizes.begin(), part_sizes.end(),
                      [](std::size_t v) { return v > 0; }));
    for (const auto& stratum : strata) {
      if (stratum.size() < nonempty_parts) {
        const auto& doc = corpus[stratum.front()];
        const std::string name =
            doc.label ? std::string(label_name(*doc.label)) : "unlabeled";
        throw DataError("stratification",
                        "class " + name + " has " +
                            std::to_string(stratum.size()) +
                            " document(s), too few to appear in every part");
      }
    }
  }

  std::vector<std::size_t> sizes;
  for (const auto& s : strata) sizes.push_back(s.size());
  const auto alloc = allocate_strata(sizes, part_sizes, n);

  std::array<std::vector<std::size_t>, 3> members;
  for (std::size_t s = 0; s < strata.size(); ++s) {
    auto idx = strata[s];
    Rng rng(substream_seed(cfg.seed, s));
    rng.shuffle(std::span(idx));
    // Test first, then validation; train keeps the rest.
    std::size_t offset = 0;
    for (std::size_t p : {2, 1, 0}) {
      members[p].insert(members[p].end(), idx.begin() + offset,
                        idx.begin() + offset + alloc[s][p]);
      offset += alloc[s][p];
    }
  }

  auto build = [&](std::vector<std::size_t>& ids) {
    std::sort(ids.begin(), ids.end());
    std::vector<Document> docs;
    docs.reserve(ids.size());
    for (auto i : ids) docs.push_back(corpus[i]);
    return Corpus(std::move(docs));
  };
  return CorpusSplit{build(members[0]), build(members[1]), build(members[2])};
}

}  // namespace hpd
