#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <json.hpp>
#include <map>
#include <string>

#include "hpd/corpus.hpp"
#include "hpd/eval.hpp"
#include "hpd/model.hpp"
#include "hpd/util.hpp"
#include "support.hpp"

using namespace hpd;
using hpd::testing::TempDir;
namespace fs = std::filesystem;

namespace {

// Runs the CLI inside dir with a pinned SOURCE_DATE_EPOCH and stdout/stderr
// captured to files; returns the exit status.
int run_cli(const TempDir& dir, const std::string& args,
            std::string* err = nullptr) {
  const auto out_path = dir / "stdout.txt";
  const auto err_path = dir / "stderr.txt";
  const std::string cmd = "cd '" + dir.path().string() +
                          "' && SOURCE_DATE_EPOCH=1700000000 '" +
                          HPD_CLI_PATH + "' " + args + " >'" +
                          out_path.string() + "' 2>'" + err_path.string() + "'";
  const int status = std::system(cmd.c_str());
  if (err) *err = read_file(err_path);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

fs::path write_synthetic(const TempDir& dir, const std::string& name,
                         std::size_t n, std::uint64_t seed) {
  const auto path = dir / name;
  save_dataset(hpd::testing::synthetic_corpus(n, seed, name.substr(0, 2)),
               path, FileFormat::Jsonl);
  return path;
}

std::map<Label, std::size_t> class_counts(const Corpus& corpus) {
  std::map<Label, std::size_t> counts;
  for (const auto& doc : corpus) ++counts[*doc.label];
  return counts;
}

const std::string kFixture = std::string(HPD_TEST_DATA) + "/fixture_bn.jsonl";

}  // namespace

TEST_CASE("prep reproduces the golden tokens and leaves its input untouched") {
  TempDir dir;
  const auto before = read_file(kFixture);
  REQUIRE(run_cli(dir, "prep '" + kFixture + "' prep.jsonl") == 0);
  CHECK(read_file(kFixture) == before);

  const auto prepped =
      load_dataset(dir / "prep.jsonl", FileFormat::Jsonl).corpus;
  std::string tsv;
  for (const auto& doc : prepped) {
    tsv += doc.id + "\t";
    for (std::size_t i = 0; i < doc.tokens->size(); ++i) {
      if (i) tsv += ' ';
      tsv += (*doc.tokens)[i];
    }
    tsv += '\n';
  }
  CHECK(tsv == read_file(std::string(HPD_TEST_DATA) + "/fixture_bn.golden.tsv"));

  const auto manifest =
      nlohmann::json::parse(read_file(dir / "prep.jsonl.manifest.json"));
  CHECK(manifest.at("command") == "prep");
  CHECK(manifest.at("inputs").at(0) == kFixture);
  CHECK(manifest.at("config").at("max_tokens") == 500);
  CHECK(manifest.contains("toolkit_version"));
  CHECK(manifest.contains("wall_time_seconds"));
}

TEST_CASE("augment then split gives 3220 and 2254/483/483") {
  TempDir dir;
  write_synthetic(dir, "base.jsonl", 805, 3);
  REQUIRE(run_cli(dir, "-q augment base.jsonl aug.jsonl --provider mock "
                       "--rounds 3 --no-dedupe") == 0);
  const auto base = load_dataset(dir / "base.jsonl", FileFormat::Jsonl).corpus;
  const auto aug = load_dataset(dir / "aug.jsonl", FileFormat::Jsonl).corpus;
  CHECK(aug.size() == 3220);
  const auto base_counts = class_counts(base);
  const auto aug_counts = class_counts(aug);
  for (const auto& [label, n] : base_counts) CHECK(aug_counts.at(label) == 4 * n);

  REQUIRE(run_cli(dir, "split aug.jsonl parts --seed 7") == 0);
  const auto train = load_dataset(dir / "parts/train.jsonl", FileFormat::Jsonl);
  const auto val = load_dataset(dir / "parts/val.jsonl", FileFormat::Jsonl);
  const auto test = load_dataset(dir / "parts/test.jsonl", FileFormat::Jsonl);
  CHECK(train.corpus.size() == 2254);
  CHECK(val.corpus.size() == 483);
  CHECK(test.corpus.size() == 483);
  CHECK(fs::exists(dir / "parts/manifest.json"));

  const auto first = read_file(dir / "parts/train.jsonl");
  REQUIRE(run_cli(dir, "split aug.jsonl parts2 --seed 7") == 0);
  CHECK(read_file(dir / "parts2/train.jsonl") == first);
  CHECK(read_file(dir / "parts2/test.jsonl") == read_file(dir / "parts/test.jsonl"));
}

TEST_CASE("train with table2 records the published SVM parameters") {
  TempDir dir;
  write_synthetic(dir, "train.jsonl", 120, 5);
  REQUIRE(run_cli(dir, "train train.jsonl --model svm --params table2 "
                       "--out svm.model.json") == 0);
  const auto manifest =
      nlohmann::json::parse(read_file(dir / "svm.model.json.manifest.json"));
  const auto params = manifest.at("config").at("params");
  CHECK(params.at("C") == 10.0);
  CHECK(params.at("degree") == 3);
  CHECK(params.at("coef0") == doctest::Approx(0.1));
  CHECK(load_model(dir / "svm.model.json").classifier().model_type() == "svm");
}

TEST_CASE("eval output matches the library report byte for byte") {
  TempDir dir;
  write_synthetic(dir, "train.jsonl", 150, 8);
  write_synthetic(dir, "test.jsonl", 60, 9);
  REQUIRE(run_cli(dir, "train train.jsonl --model lr --params table2 "
                       "--out lr.model.json") == 0);
  REQUIRE(run_cli(dir, "eval lr.model.json test.jsonl --out eval.json") == 0);

  const auto model = load_model(dir / "lr.model.json");
  const auto test = load_dataset(dir / "test.jsonl", FileFormat::Jsonl).corpus;
  const auto report = evaluate(model, test, {"test.jsonl"});
  CHECK(read_file(dir / "eval.json") == report.to_json().dump(2) + "\n");

  const auto again = metrics(report.confusion, report.model, report.dataset);
  CHECK(again.to_json().dump(2) + "\n" == read_file(dir / "eval.json"));
  CHECK(fs::exists(dir / "eval.txt"));
  CHECK(fs::exists(dir / "eval.json.manifest.json"));
}

TEST_CASE("train is byte-identical across reruns") {
  TempDir dir;
  write_synthetic(dir, "train.jsonl", 100, 11);
  for (const char* type : {"lr", "nb", "svm", "rf"}) {
    const std::string t(type);
    REQUIRE(run_cli(dir, "train train.jsonl --model " + t +
                             " --params table2 --seed 3 --out a.json") == 0);
    REQUIRE(run_cli(dir, "train train.jsonl --model " + t +
                             " --params table2 --seed 3 --out b.json") == 0);
    CHECK(read_file(dir / "a.json") == read_file(dir / "b.json"));
  }
}

TEST_CASE("exit codes follow the error kind") {
  TempDir dir;
  std::string err;
  CHECK(run_cli(dir, "", &err) == 2);
  CHECK(run_cli(dir, "bogus", &err) == 2);

  write_synthetic(dir, "train.jsonl", 40, 1);
  CHECK(run_cli(dir, "train train.jsonl --model knn", &err) == 2);
  CHECK(err.rfind("error[", 0) == 0);
  CHECK(err.find("knn") != std::string::npos);

  CHECK(run_cli(dir, "split train.jsonl out --ratios 0.5,0.5,0.5", &err) == 2);
  CHECK(err.rfind("error[config]", 0) == 0);

  write_file(dir / "broken.model.json", "{\"format_version\": 1");
  CHECK(run_cli(dir, "eval broken.model.json train.jsonl", &err) == 3);
  CHECK(err.rfind("error[", 0) == 0);

  CHECK(run_cli(dir, "eval remote train.jsonl --endpoint http://127.0.0.1:1",
                &err) == 4);
  CHECK(err.rfind("error[", 0) == 0);
}

TEST_CASE("eval on training documents is refused unless allowed") {
  TempDir dir;
  write_synthetic(dir, "train.jsonl", 60, 2);
  REQUIRE(run_cli(dir, "train train.jsonl --model nb --out nb.json") == 0);
  std::string err;
  CHECK(run_cli(dir, "eval nb.json train.jsonl", &err) == 3);
  CHECK(err.find("leak") != std::string::npos);
  CHECK(run_cli(dir, "eval nb.json train.jsonl --allow-train-eval --out e.json") == 0);
  const auto report = nlohmann::json::parse(read_file(dir / "e.json"));
  CHECK(report.at("flags").dump().find("evaluated_on_training_data") !=
        std::string::npos);
}

TEST_CASE("selftrain and explain write their artifacts") {
  TempDir dir;
  write_synthetic(dir, "train.jsonl", 80, 21);
  save_dataset(hpd::testing::strip_labels(
                   hpd::testing::synthetic_corpus(200, 22, "un")),
               dir / "pool.jsonl", FileFormat::Jsonl);
  write_synthetic(dir, "val.jsonl", 40, 23);
  REQUIRE(run_cli(dir, "selftrain train.jsonl pool.jsonl val.jsonl --model lr "
                       "--params table2 --threshold 0.9 --rounds 2 "
                       "--out st.json --history hist.jsonl") == 0);
  CHECK(fs::exists(dir / "st.json"));
  const auto history = read_file(dir / "hist.jsonl");
  CHECK(std::count(history.begin(), history.end(), '\n') >= 1);

  REQUIRE(run_cli(dir, "explain st.json val.jsonl --out ex --limit 2 "
                       "--samples 200") == 0);
  CHECK(fs::exists(dir / "ex/index.html"));
  CHECK(fs::exists(dir / "ex/doc-0000.html"));
  CHECK(fs::exists(dir / "ex/doc-0001.html"));
  CHECK(fs::exists(dir / "ex/manifest.json"));
}
