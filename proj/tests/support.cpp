#include "support.hpp"

#include <httplib.h>

#include <chrono>
#include <cstdlib>

#include "hpd/rng.hpp"

namespace hpd::testing {

TempDir::TempDir() {
  std::string tmpl =
      (std::filesystem::temp_directory_path() / "hpd-test-XXXXXX").string();
  if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

MockServer::MockServer(const std::string& path, Handler handler)
    : server_(std::make_unique<httplib::Server>()) {
  server_->Post(path, [handler](const httplib::Request& req,
                                httplib::Response& res) { handler(req, res); });
  port_ = server_->bind_to_any_port("127.0.0.1");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

MockServer::~MockServer() {
  server_->stop();
  thread_.join();
}

std::string MockServer::url() const {
  return "http://127.0.0.1:" + std::to_string(port_);
}

namespace {
std::string token_name(std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "w%03zu", i);
  return buf;
}
}  // namespace

Corpus synthetic_corpus(std::size_t n, std::uint64_t seed,
                        const std::string& id_prefix,
                        const SyntheticConfig& cfg) {
  Rng rng(seed);
  const std::size_t block = cfg.vocabulary / 5;
  std::vector<Document> docs;
  docs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool positive = rng.uniform() < cfg.positive_rate;
    TokenList tokens;
    tokens.reserve(cfg.tokens_per_doc);
    for (std::size_t t = 0; t < cfg.tokens_per_doc; ++t) {
      std::size_t index;
      if (rng.uniform() < cfg.signal) {
        index = (positive ? block : 0) + rng.below(block);
      } else {
        index = rng.below(cfg.vocabulary);
      }
      tokens.push_back(token_name(index));
    }
    Document doc;
    doc.id = id_prefix + std::to_string(i);
    doc.title = tokens.front();
    std::string content;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      if (!content.empty()) content.push_back(' ');
      content += tokens[t];
    }
    doc.content = content.empty() ? tokens.front() : content;
    doc.source = "synthetic";
    doc.label = positive ? Label::Hyperpartisan : Label::NotHyperpartisan;
    doc.tokens = std::move(tokens);
    docs.push_back(std::move(doc));
  }
  return Corpus(std::move(docs));
}

Corpus strip_labels(const Corpus& corpus) {
  std::vector<Document> docs(corpus.begin(), corpus.end());
  for (auto& d : docs) d.label.reset();
  return Corpus(std::move(docs));
}

Corpus as_bangla_text(const Corpus& corpus) {
  // No vowel signs and no য, so no word ends in a stemming suffix.
  static const std::vector<std::string> kConsonants{
      "ক", "খ", "গ", "ঘ", "চ", "ছ", "জ", "ঝ", "ট", "ঠ", "ড", "ঢ", "ত",
      "থ", "দ", "ধ", "ন", "প", "ফ", "ব", "ম", "ল", "শ", "স", "হ"};
  const auto word = [](const std::string& token) {
    const std::size_t i = std::stoul(token.substr(1));
    const std::size_t n = kConsonants.size();
    return kConsonants[(i / (n * n)) % n] + kConsonants[(i / n) % n] +
           kConsonants[i % n];
  };
  std::vector<Document> docs;
  for (const auto& doc : corpus) {
    Document d = doc;
    std::string text;
    for (const auto& t : *doc.tokens) {
      if (!text.empty()) text.push_back(' ');
      text += word(t);
    }
    const auto space = text.find(' ');
    d.title = text.substr(0, space);
    d.content = space == std::string::npos ? d.title : text.substr(space + 1);
    d.tokens.reset();
    docs.push_back(std::move(d));
  }
  return Corpus(std::move(docs));
}

LabeledVectors random_vectors(std::size_t n, std::size_t dim, double density,
                              std::uint64_t seed) {
  Rng rng(seed);
  LabeledVectors data;
  data.dimension = dim;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<SparseVector::Entry> entries;
    for (std::size_t j = 0; j < dim; ++j) {
      if (rng.uniform() < density) {
        entries.emplace_back(static_cast<std::uint32_t>(j), rng.uniform());
      }
    }
    data.x.emplace_back(dim, std::move(entries));
    Label y = rng.uniform() < 0.5 ? Label::Hyperpartisan
                                  : Label::NotHyperpartisan;
    if (i == 0) y = Label::NotHyperpartisan;
    if (i == 1) y = Label::Hyperpartisan;
    data.y.push_back(y);
  }
  return data;
}

}  // namespace hpd::testing
