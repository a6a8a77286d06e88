// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Per-seed lifecycle: modify -> parse reply -> validate -> parse-check ->
// render -> pair, with up to three modifier calls per seed, plus the
// corpus driver with checkpointed, order-independent output.

#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "chartcf/chat_client.hpp"
#include "chartcf/dataset.hpp"
#include "chartcf/prompts.hpp"
#include "chartcf/sandbox.hpp"

namespace chartcf {

inline constexpr int kMaxModifierAttempts = 3;

struct PipelineOptions {
  int max_attempts = kMaxModifierAttempts;
  // Replaces the per-question-type default template (distractor mode).
  std::optional<PromptTemplate> template_override;
  // Successful counterfactual images are copied here as <id>.png.
  std::filesystem::path image_dir;
  // Timestamp source for provenance; defaults to the UTC wall clock.
  std::function<std::string()> clock;
};

std::string utc_timestamp();

struct SampleResult {
  Outcome outcome = Outcome::kValidatorFailed;
  int attempts = 0;
  std::optional<CounterfactualPair> pair;
  std::optional<FailureRecord> failure;
};

struct CorpusOptions {
  int concurrency = 1;
  bool resume = false;
  // Polled between samples; when set, in-flight samples finish, results are
  // flushed and run_corpus returns with complete = false.
  const std::atomic<bool>* cancel = nullptr;
};

struct CorpusResult {
  std::vector<CounterfactualPair> pairs;
  std::vector<FailureRecord> failures;
  PipelineReport report;
  bool complete = true;
};

// Output files inside the run directory.
struct RunFiles {
  explicit RunFiles(const std::filesystem::path& out_dir);

  std::filesystem::path pairs;     // pairs.jsonl, sorted by id at the end
  std::filesystem::path done;      // pairs.done.jsonl checkpoint sidecar
  std::filesystem::path failures;  // failures.jsonl
  std::filesystem::path report;    // report.json
  std::filesystem::path images;    // images/
};

class SynthesisPipeline {
 public:
  SynthesisPipeline(const ChatClient& modifier, RenderSandbox& sandbox,
                    PipelineOptions options);

  // Throws only on kAuthError (fatal for the run) and I/O failures; every
  // per-sample problem comes back as a FailureRecord.
  SampleResult run_sample(const SeedSample& seed) const;

  // Reads the manifest, processes pending seeds with bounded concurrency and
  // writes pairs.jsonl, failures.jsonl, pairs.done.jsonl and report.json
  // into out_dir. With resume, seeds listed in the done sidecar are skipped.
  CorpusResult run_corpus(const std::filesystem::path& manifest,
                          const std::filesystem::path& out_dir,
                          const CorpusOptions& options);

 private:
  const ChatClient& modifier_;
  RenderSandbox& sandbox_;
  PipelineOptions options_;
};

}  // namespace chartcf
