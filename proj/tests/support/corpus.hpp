// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Scripted seed corpora for pipeline tests: seed images, plotting scripts, a
// manifest and one mock modifier transcript per seed, plus the report the
// script implies.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "chartcf/dataset.hpp"
#include "chartcf/sandbox.hpp"

namespace chartcf::testing {

// What one modifier call in a transcript leads to.
enum class Step {
  kOk,             // feasible, renders cleanly
  kInfeasible,     // Feasibility NO
  kParseError,     // code fails the compile-only check
  kRenderError,    // code raises during render
  kPathChanged,    // save path rewritten, rejected by the validator
  kNoOutput,       // render finishes without writing the image
  kAnswerUnchanged,
};

struct SeedScript {
  std::string id;
  QuestionType type = QuestionType::kDescriptive;
  std::vector<Step> steps;  // one entry per modifier call the seed receives
};

struct CorpusLayout {
  std::filesystem::path root;
  std::filesystem::path manifest;
  std::filesystem::path transcripts;
};

std::string seed_code(int index);
std::string modified_code(int index, int attempt, Step step);

// Writes seeds/, manifest.jsonl and transcripts/ under root.
CorpusLayout write_corpus(const std::filesystem::path& root,
                          const std::vector<SeedScript>& scripts);

// The report a script implies under the three-call cap.
PipelineReport expected_report(const std::vector<SeedScript>& scripts,
                               int max_attempts = 3);

// 1 infeasible, 2 parse-fail-then-recover, 8 render-fail-then-recover,
// 1 triple failure, 88 first-try successes.
std::vector<SeedScript> hundred_sample_corpus();

// 10,512 seeds: 8 infeasible, 160 first-attempt parse failures, 832
// first-attempt render failures. 16 parse and 60 render failures never
// recover, leaving 10,428 pairs.
std::vector<SeedScript> proportions_corpus();

std::filesystem::path fixture_worker_path();

SandboxOptions fixture_sandbox(const std::filesystem::path& scratch,
                               std::size_t workers = 2);

// Fresh empty directory under the system temp dir.
std::filesystem::path fresh_dir(const std::string& name);

std::string slurp(const std::filesystem::path& file);

}  // namespace chartcf::testing
