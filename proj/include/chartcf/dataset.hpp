// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Records that flow between pipeline stages and their JSONL encodings.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace chartcf {

enum class QuestionType { kDescriptive, kReasoning };

std::string to_string(QuestionType type);
QuestionType parse_question_type(const std::string& text);

// One row of the seed manifest: image, plotting code, question and answer.
struct SeedSample {
  std::string id;
  std::filesystem::path image;
  std::string code;
  std::string question;
  std::string answer;
  std::optional<std::string> reasoning;
  QuestionType question_type = QuestionType::kDescriptive;
};

struct CounterfactualSample {
  std::filesystem::path image;
  std::string code;
  std::string answer;
  std::optional<std::string> reasoning;
};

struct Provenance {
  std::string modifier_model;
  std::string started_at;
  std::string finished_at;
  std::string raw_sha256;
  std::string sampling = "provider-default";
  long long prompt_tokens = 0;
  long long completion_tokens = 0;
};

struct SimilarityScore {
  std::optional<int> chart_types;
  std::optional<int> layout;
  std::optional<int> text_content;
  std::optional<int> data;
  std::optional<int> style;
  int total = 0;
  std::string judge_model;
  std::string raw;

  bool has_all_subscores() const;
};

struct CounterfactualPair {
  SeedSample seed;
  CounterfactualSample counterfactual;
  std::optional<SimilarityScore> similarity;
  int attempts = 1;
  Provenance provenance;

  const std::string& id() const { return seed.id; }
};

// Terminal outcome categories; every seed lands in exactly one.
enum class Outcome {
  kSucceeded,
  kInfeasible,
  kParseFailed,
  kRenderFailed,
  kValidatorFailed,
  kApiFailed,
};

std::string to_string(Outcome outcome);
Outcome parse_outcome(const std::string& text);

struct FailureRecord {
  std::string id;
  Outcome outcome = Outcome::kValidatorFailed;
  std::string stage;
  std::string reason;
  int attempts = 1;
};

struct PipelineReport {
  long long seeds = 0;
  long long infeasible = 0;
  long long parse_failed_final = 0;
  long long render_failed_final = 0;
  long long validator_failed_final = 0;
  long long api_failed_final = 0;
  long long succeeded = 0;
  std::map<int, long long> retry_histogram;

  void record(Outcome outcome, int attempts);
  long long category_sum() const;
  bool closed() const { return category_sum() == seeds; }

  bool operator==(const PipelineReport&) const = default;
};

nlohmann::json to_json(const SimilarityScore& score);
SimilarityScore similarity_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PipelineReport& report);
PipelineReport report_from_json(const nlohmann::json& j);

nlohmann::json to_json(const FailureRecord& failure);
FailureRecord failure_from_json(const nlohmann::json& j);

// Relative image paths are written relative to `base`; absolute paths are kept.
nlohmann::json to_json(const CounterfactualPair& pair,
                       const std::filesystem::path& base);
CounterfactualPair pair_from_json(const nlohmann::json& j,
                                  const std::filesystem::path& base);

// Seed manifest line: {"id","image","code_path","question","answer",
// "reasoning"?, "qa_type"}. Relative paths resolve against `manifest_dir`.
SeedSample seed_from_manifest_json(const nlohmann::json& j,
                                   const std::filesystem::path& manifest_dir);

std::vector<SeedSample> load_manifest(const std::filesystem::path& manifest);

std::vector<CounterfactualPair> load_pairs(const std::filesystem::path& file);
void write_pairs(const std::filesystem::path& file,
                 const std::vector<CounterfactualPair>& pairs);

}  // namespace chartcf
