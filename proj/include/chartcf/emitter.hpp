// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chartcf/dataset.hpp"

namespace chartcf {

// Answer preferred given the original image over the counterfactual answer.
struct TextPrefRecord {
  std::string pair_id;
  std::filesystem::path image;
  std::string question;
  std::string chosen;
  std::string rejected;
};

// Original image preferred over the counterfactual image for the same answer.
struct ImagePrefRecord {
  std::string pair_id;
  std::filesystem::path chosen_image;
  std::filesystem::path rejected_image;
  std::string question;
  std::string response;
};

enum class EmitMode { kText, kImage, kBoth };

EmitMode parse_emit_mode(const std::string& text);

struct EmittedRecords {
  std::vector<TextPrefRecord> text;
  std::vector<ImagePrefRecord> image;
};

// Descriptive answers pass through unchanged; reasoning answers become
// "Reasoning Process: <process>\nAnswer: <answer>". Throws
// kFormattingError for a reasoning answer without its process.
std::string format_response(QuestionType type, const std::string& answer,
                            const std::optional<std::string>& reasoning);

// One record per pair and enabled mode, anchored on the original sample.
// With symmetric, each pair also yields the mirrored record that prefers
// the counterfactual side (pair id suffixed ":mirror").
EmittedRecords build_records(const std::vector<CounterfactualPair>& pairs, EmitMode mode,
                             bool symmetric);

nlohmann::json to_json(const TextPrefRecord& record);
nlohmann::json to_json(const ImagePrefRecord& record);
TextPrefRecord text_record_from_json(const nlohmann::json& j);
ImagePrefRecord image_record_from_json(const nlohmann::json& j);

struct EmitFiles {
  std::filesystem::path text;   // text_dpo.jsonl
  std::filesystem::path image;  // image_dpo.jsonl
};

EmitFiles write_records(const EmittedRecords& records, const std::filesystem::path& out_dir,
                        EmitMode mode);

}  // namespace chartcf
