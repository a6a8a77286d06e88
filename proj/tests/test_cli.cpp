// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <json.hpp>

#include "chartcf/jsonl.hpp"
#include "corpus.hpp"

using namespace chartcf;
using namespace chartcf::testing;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + CHARTCF_CLI + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int cli_to(const std::string& args, const fs::path& out) {
  const std::string cmd =
      std::string(CHARTCF_CLI) + " " + args + " >" + out.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t line_count(const fs::path& file) {
  const std::string text = slurp(file);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

std::size_t file_count(const fs::path& dir) {
  std::size_t n = 0;
  for (auto it = fs::recursive_directory_iterator(dir); it != fs::recursive_directory_iterator();
       ++it) {
    ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(cli("") == 2);
  CHECK(cli("--bogus") == 2);
  CHECK(cli("select --rho 40") == 2);
  CHECK(cli("frobnicate") == 2);
  CHECK(cli("--help") == 0);
  CHECK(cli("loss-check --help") == 0);
}

TEST_CASE("loss-check over the reference vectors") {
  const fs::path dir = fresh_dir("cli-loss");
  CHECK(cli("loss-check --input " + std::string(CHARTCF_TEST_DATA) +
            "/loss_vectors.jsonl --output " + (dir / "out.jsonl").string()) == 0);
  const auto rows = read_jsonl(dir / "out.jsonl");
  CHECK(rows.size() == 208);
  for (const auto& r : rows) CHECK(r.at("ok") == true);
  CHECK(rows[0].at("loss").get<double>() == doctest::Approx(0.6931471805599453));

  write_text_atomic(dir / "bad.jsonl", R"({"lp_policy_chosen":0,"lp_ref_chosen":0,"lp_policy_rejected":0,"lp_ref_rejected":0,"expected_loss":0.5})"
                                       "\n");
  CHECK(cli("loss-check --input " + (dir / "bad.jsonl").string()) == 1);
  CHECK(cli("loss-check --input " + (dir / "bad.jsonl").string() + " --h -1") == 2);
}

TEST_CASE("missing API key is a usage error") {
  const fs::path dir = fresh_dir("cli-key");
  const auto layout = write_corpus(dir, {{"a", QuestionType::kDescriptive, {Step::kOk}}});
  CHECK(cli("synthesize --manifest " + layout.manifest.string() + " --out " +
                (dir / "run").string(),
            "env -u CHARTCF_API_KEY") == 2);
  CHECK_FALSE(fs::exists(dir / "run"));
}

TEST_CASE("dry run writes nothing") {
  const fs::path dir = fresh_dir("cli-dry");
  const auto layout = write_corpus(dir, hundred_sample_corpus());
  const std::size_t before = file_count(dir);
  CHECK(cli("synthesize --dry-run --transport mock:" + layout.transcripts.string() +
            " --manifest " + layout.manifest.string() + " --out " + (dir / "run").string()) ==
        0);
  CHECK(cli("synthesize --dry-run --manifest " + layout.manifest.string() + " --out " +
                (dir / "run").string(),
            "CHARTCF_API_KEY=sk-test CHARTCF_API_BASE=http://127.0.0.1:9/v1") == 0);
  CHECK_FALSE(fs::exists(dir / "run"));
  CHECK(file_count(dir) == before);
}

TEST_CASE("synthesize, score, select, emit end to end") {
  const fs::path dir = fresh_dir("cli-e2e");
  auto scripts = hundred_sample_corpus();
  scripts.resize(12);
  const auto layout = write_corpus(dir, scripts);
  // Judge transcripts: totals 60 + i for pair i.
  fs::create_directories(layout.transcripts / "judge");
  for (std::size_t i = 0; i < scripts.size(); ++i) {
    const int total = 60 + static_cast<int>(i);
    write_text_atomic(layout.transcripts / "judge" / (scripts[i].id + ".jsonl"),
                      json{{"status", 200}, {"content", "Close match.\nScore: " +
                                                            std::to_string(total)}}
                              .dump() +
                          "\n");
  }
  const std::string mock = " --transport mock:" + layout.transcripts.string();
  const fs::path run = dir / "run";
  REQUIRE(cli_to("synthesize --worker fixture --workers 2 --concurrency 3" + mock +
                     " --manifest " + layout.manifest.string() + " --out " + run.string(),
                 dir / "synth.json") == 0);
  const json report = json::parse(slurp(run / "report.json"));
  CHECK(report.at("seeds") == 12);
  CHECK(report.at("infeasible") == 1);
  CHECK(report.at("succeeded") == 11);
  CHECK(line_count(run / "pairs.jsonl") == 11);
  CHECK(cli("report --report " + (run / "report.json").string()) == 0);

  REQUIRE(cli("score" + mock + " --pairs " + (run / "pairs.jsonl").string() + " --out " +
              (run / "scored.jsonl").string()) == 0);
  CHECK(line_count(run / "scored.jsonl") == 11);

  REQUIRE(cli_to("select --scored " + (run / "scored.jsonl").string() +
                     " --strategy keep_low --rho 40 --ids-only",
                 dir / "ids.txt") == 0);
  CHECK(slurp(dir / "ids.txt") == "s00000\ns00001\ns00002\ns00003\n");
  REQUIRE(cli("select --scored " + (run / "scored.jsonl").string() +
              " --rho 40 --out " + (run / "selected.jsonl").string()) == 0);
  CHECK(line_count(run / "selected.jsonl") == 4);

  REQUIRE(cli("emit --pairs " + (run / "selected.jsonl").string() + " --mode both --symmetric true --out " +
              (run / "dpo").string()) == 0);
  CHECK(line_count(run / "dpo" / "text_dpo.jsonl") == 8);
  CHECK(line_count(run / "dpo" / "image_dpo.jsonl") == 8);
}

TEST_CASE("select over a 10,428-entry index") {
  const fs::path dir = fresh_dir("cli-select");
  std::vector<json> rows;
  for (int i = 0; i < 10428; ++i) {
    rows.push_back(json{{"id", "p" + std::to_string(100000 + i)}, {"total", 40 + (i * 37) % 61}});
  }
  write_jsonl_atomic(dir / "index.jsonl", rows);
  REQUIRE(cli_to("select --scored " + (dir / "index.jsonl").string() +
                     " --strategy keep_low --rho 40 --ids-only",
                 dir / "ids.txt") == 0);
  CHECK(line_count(dir / "ids.txt") == 4171);
  REQUIRE(cli_to("select --scored " + (dir / "index.jsonl").string() + " --half low --ids-only",
                 dir / "low.txt") == 0);
  CHECK(line_count(dir / "low.txt") == 5214);
  CHECK(cli("select --scored " + (dir / "index.jsonl").string() + " --half low --rho 40") == 2);
}
