#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <thread>

#include "hpd/classifier.hpp"
#include "hpd/corpus.hpp"

namespace httplib {
class Server;
struct Request;
struct Response;
}  // namespace httplib

namespace hpd::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

// Local HTTP server on an ephemeral port, for exercising the remote clients.
class MockServer {
 public:
  using Handler =
      std::function<void(const httplib::Request&, httplib::Response&)>;
  MockServer(const std::string& path, Handler handler);
  ~MockServer();
  std::string url() const;

 private:
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

// Two-class token corpus: tokens w000..w<vocab-1>; the first fifth of the
// vocabulary leans to NotHyperpartisan, the second fifth to Hyperpartisan,
// the rest is shared noise. Documents carry tokens (already preprocessed).
struct SyntheticConfig {
  std::size_t vocabulary = 500;
  std::size_t tokens_per_doc = 40;
  double signal = 0.35;       // share of tokens drawn from the class block
  double positive_rate = 0.5;
};
Corpus synthetic_corpus(std::size_t n, std::uint64_t seed,
                        const std::string& id_prefix,
                        const SyntheticConfig& cfg = {});

Corpus strip_labels(const Corpus& corpus);

// Rewrites each synthetic token as a distinct three-consonant Bangla word and
// drops the token lists, so the documents go through full preprocessing.
Corpus as_bangla_text(const Corpus& corpus);

// Random sparse vectors with non-negative entries and random labels; both
// classes are guaranteed when n >= 2.
LabeledVectors random_vectors(std::size_t n, std::size_t dim, double density,
                              std::uint64_t seed);

}  // namespace hpd::testing
