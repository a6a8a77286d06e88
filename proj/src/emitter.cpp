// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "chartcf/emitter.hpp"

#include "chartcf/encoding.hpp"
#include "chartcf/error.hpp"
#include "chartcf/jsonl.hpp"

namespace chartcf {

namespace fs = std::filesystem;
using nlohmann::json;

EmitMode parse_emit_mode(const std::string& text) {
  if (text == "text") return EmitMode::kText;
  if (text == "image") return EmitMode::kImage;
  if (text == "both") return EmitMode::kBoth;
  throw Error(ErrorCode::kInvalidArgument, "unknown emit mode '" + text + "'");
}

std::string format_response(QuestionType type, const std::string& answer,
                            const std::optional<std::string>& reasoning) {
  if (type == QuestionType::kDescriptive) return answer;
  if (!reasoning || reasoning->empty()) {
    throw Error(ErrorCode::kFormattingError, "reasoning answer without a reasoning process");
  }
  return "Reasoning Process: " + *reasoning + "\nAnswer: " + answer;
}

namespace {

std::string_view trimmed(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r\n") - first + 1);
}

}  // namespace

EmittedRecords build_records(const std::vector<CounterfactualPair>& pairs, EmitMode mode,
                             bool symmetric) {
  EmittedRecords out;
  const bool text = mode != EmitMode::kImage;
  const bool image = mode != EmitMode::kText;
  for (const auto& p : pairs) {
    for (const auto& path : {p.seed.image, p.counterfactual.image}) {
      if (!fs::is_regular_file(path)) {
        throw Error(ErrorCode::kMissingImage, p.id() + ": " + path.string());
      }
    }
    std::string original;
    std::string counterfactual;
    try {
      original = format_response(p.seed.question_type, p.seed.answer, p.seed.reasoning);
      counterfactual = format_response(p.seed.question_type, p.counterfactual.answer,
                                       p.counterfactual.reasoning);
    } catch (const Error& e) {
      throw Error(ErrorCode::kFormattingError, p.id() + ": " + e.what());
    }
    if (trimmed(original) == trimmed(counterfactual)) {
      throw Error(ErrorCode::kFormattingError, p.id() + ": chosen equals rejected");
    }
    if (image) {
      if (fs::equivalent(p.seed.image, p.counterfactual.image) ||
          pixel_digest(p.seed.image) == pixel_digest(p.counterfactual.image)) {
        throw Error(ErrorCode::kFormattingError, p.id() + ": images are identical");
      }
    }
    const fs::path original_image = fs::absolute(p.seed.image);
    const fs::path counterfactual_image = fs::absolute(p.counterfactual.image);
    if (text) {
      out.text.push_back({p.id(), original_image, p.seed.question, original, counterfactual});
      if (symmetric) {
        out.text.push_back({p.id() + ":mirror", counterfactual_image, p.seed.question,
                            counterfactual, original});
      }
    }
    if (image) {
      out.image.push_back(
          {p.id(), original_image, counterfactual_image, p.seed.question, original});
      if (symmetric) {
        out.image.push_back({p.id() + ":mirror", counterfactual_image, original_image,
                             p.seed.question, counterfactual});
      }
    }
  }
  return out;
}

json to_json(const TextPrefRecord& r) {
  return json{{"pair_id", r.pair_id},
              {"image", r.image.string()},
              {"question", r.question},
              {"chosen", r.chosen},
              {"rejected", r.rejected}};
}

json to_json(const ImagePrefRecord& r) {
  return json{{"pair_id", r.pair_id},
              {"chosen_image", r.chosen_image.string()},
              {"rejected_image", r.rejected_image.string()},
              {"question", r.question},
              {"response", r.response}};
}

TextPrefRecord text_record_from_json(const json& j) {
  return {j.at("pair_id").get<std::string>(), j.at("image").get<std::string>(),
          j.at("question").get<std::string>(), j.at("chosen").get<std::string>(),
          j.at("rejected").get<std::string>()};
}

ImagePrefRecord image_record_from_json(const json& j) {
  return {j.at("pair_id").get<std::string>(), j.at("chosen_image").get<std::string>(),
          j.at("rejected_image").get<std::string>(), j.at("question").get<std::string>(),
          j.at("response").get<std::string>()};
}

EmitFiles write_records(const EmittedRecords& records, const fs::path& out_dir,
                        EmitMode mode) {
  EmitFiles files;
  if (mode != EmitMode::kImage) {
    files.text = out_dir / "text_dpo.jsonl";
    std::vector<json> rows;
    for (const auto& r : records.text) rows.push_back(to_json(r));
    write_jsonl_atomic(files.text, rows);
  }
  if (mode != EmitMode::kText) {
    files.image = out_dir / "image_dpo.jsonl";
    std::vector<json> rows;
    for (const auto& r : records.image) rows.push_back(to_json(r));
    write_jsonl_atomic(files.image, rows);
  }
  return files;
}

}  // namespace chartcf
