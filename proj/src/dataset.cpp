// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "chartcf/dataset.hpp"

#include <set>

#include "chartcf/error.hpp"
#include "chartcf/jsonl.hpp"

namespace chartcf {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(QuestionType type) {
  return type == QuestionType::kReasoning ? "reasoning" : "descriptive";
}

QuestionType parse_question_type(const std::string& text) {
  if (text == "descriptive") return QuestionType::kDescriptive;
  if (text == "reasoning") return QuestionType::kReasoning;
  throw Error(ErrorCode::kInvalidArgument, "unknown qa_type '" + text + "'");
}

bool SimilarityScore::has_all_subscores() const {
  return chart_types && layout && text_content && data && style;
}

std::string to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::kSucceeded: return "succeeded";
    case Outcome::kInfeasible: return "infeasible";
    case Outcome::kParseFailed: return "parse_failed";
    case Outcome::kRenderFailed: return "render_failed";
    case Outcome::kValidatorFailed: return "validator_failed";
    case Outcome::kApiFailed: return "api_failed";
  }
  return "unknown";
}

Outcome parse_outcome(const std::string& text) {
  for (Outcome o : {Outcome::kSucceeded, Outcome::kInfeasible,
                    Outcome::kParseFailed, Outcome::kRenderFailed,
                    Outcome::kValidatorFailed, Outcome::kApiFailed}) {
    if (to_string(o) == text) return o;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown outcome '" + text + "'");
}

void PipelineReport::record(Outcome outcome, int attempts) {
  ++seeds;
  switch (outcome) {
    case Outcome::kSucceeded: ++succeeded; break;
    case Outcome::kInfeasible: ++infeasible; break;
    case Outcome::kParseFailed: ++parse_failed_final; break;
    case Outcome::kRenderFailed: ++render_failed_final; break;
    case Outcome::kValidatorFailed: ++validator_failed_final; break;
    case Outcome::kApiFailed: ++api_failed_final; break;
  }
  ++retry_histogram[attempts];
}

long long PipelineReport::category_sum() const {
  return infeasible + parse_failed_final + render_failed_final +
         validator_failed_final + api_failed_final + succeeded;
}

namespace {

json optional_int(const std::optional<int>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<int> read_optional_int(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<int>();
}

std::optional<std::string> read_optional_string(const json& j,
                                                const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

std::string encode_path(const fs::path& p, const fs::path& base) {
  if (!base.empty() && p.is_absolute()) {
    fs::path rel = p.lexically_normal().lexically_relative(base.lexically_normal());
    if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  }
  return p.generic_string();
}

fs::path decode_path(const std::string& text, const fs::path& base) {
  fs::path p(text);
  if (p.is_relative() && !base.empty()) return (base / p).lexically_normal();
  return p;
}

}  // namespace

json to_json(const SimilarityScore& s) {
  return json{{"chart_types", optional_int(s.chart_types)},
              {"layout", optional_int(s.layout)},
              {"text_content", optional_int(s.text_content)},
              {"data", optional_int(s.data)},
              {"style", optional_int(s.style)},
              {"total", s.total},
              {"judge_model", s.judge_model},
              {"raw", s.raw}};
}

SimilarityScore similarity_from_json(const json& j) {
  SimilarityScore s;
  s.chart_types = read_optional_int(j, "chart_types");
  s.layout = read_optional_int(j, "layout");
  s.text_content = read_optional_int(j, "text_content");
  s.data = read_optional_int(j, "data");
  s.style = read_optional_int(j, "style");
  s.total = j.at("total").get<int>();
  s.judge_model = j.value("judge_model", "");
  s.raw = j.value("raw", "");
  return s;
}

json to_json(const PipelineReport& r) {
  json histogram = json::object();
  for (const auto& [attempt, count] : r.retry_histogram) {
    histogram[std::to_string(attempt)] = count;
  }
  return json{{"seeds", r.seeds},
              {"infeasible", r.infeasible},
              {"parse_failed_final", r.parse_failed_final},
              {"render_failed_final", r.render_failed_final},
              {"validator_failed_final", r.validator_failed_final},
              {"api_failed_final", r.api_failed_final},
              {"succeeded", r.succeeded},
              {"retry_histogram", histogram}};
}

PipelineReport report_from_json(const json& j) {
  PipelineReport r;
  r.seeds = j.at("seeds").get<long long>();
  r.infeasible = j.at("infeasible").get<long long>();
  r.parse_failed_final = j.at("parse_failed_final").get<long long>();
  r.render_failed_final = j.at("render_failed_final").get<long long>();
  r.validator_failed_final = j.at("validator_failed_final").get<long long>();
  r.api_failed_final = j.value("api_failed_final", 0LL);
  r.succeeded = j.at("succeeded").get<long long>();
  for (const auto& [key, value] : j.at("retry_histogram").items()) {
    r.retry_histogram[std::stoi(key)] = value.get<long long>();
  }
  return r;
}

json to_json(const FailureRecord& f) {
  return json{{"id", f.id},
              {"outcome", to_string(f.outcome)},
              {"stage", f.stage},
              {"reason", f.reason},
              {"attempts", f.attempts}};
}

FailureRecord failure_from_json(const json& j) {
  FailureRecord f;
  f.id = j.at("id").get<std::string>();
  f.outcome = parse_outcome(j.at("outcome").get<std::string>());
  f.stage = j.value("stage", "");
  f.reason = j.value("reason", "");
  f.attempts = j.value("attempts", 1);
  return f;
}

json to_json(const CounterfactualPair& p, const fs::path& base) {
  json original{{"image", encode_path(p.seed.image, base)},
                {"code", p.seed.code},
                {"answer", p.seed.answer}};
  if (p.seed.reasoning) original["reasoning"] = *p.seed.reasoning;
  json counterfactual{{"image", encode_path(p.counterfactual.image, base)},
                      {"code", p.counterfactual.code},
                      {"answer", p.counterfactual.answer}};
  if (p.counterfactual.reasoning) {
    counterfactual["reasoning"] = *p.counterfactual.reasoning;
  }
  const Provenance& pv = p.provenance;
  return json{
      {"id", p.seed.id},
      {"qa_type", to_string(p.seed.question_type)},
      {"question", p.seed.question},
      {"original", original},
      {"counterfactual", counterfactual},
      {"attempts", p.attempts},
      {"provenance",
       {{"modifier_model", pv.modifier_model},
        {"started_at", pv.started_at},
        {"finished_at", pv.finished_at},
        {"raw_sha256", pv.raw_sha256},
        {"sampling", pv.sampling},
        {"prompt_tokens", pv.prompt_tokens},
        {"completion_tokens", pv.completion_tokens}}},
      {"similarity", p.similarity ? to_json(*p.similarity) : json(nullptr)}};
}

CounterfactualPair pair_from_json(const json& j, const fs::path& base) {
  CounterfactualPair p;
  p.seed.id = j.at("id").get<std::string>();
  p.seed.question_type = parse_question_type(j.at("qa_type").get<std::string>());
  p.seed.question = j.at("question").get<std::string>();
  const json& o = j.at("original");
  p.seed.image = decode_path(o.at("image").get<std::string>(), base);
  p.seed.code = o.at("code").get<std::string>();
  p.seed.answer = o.at("answer").get<std::string>();
  p.seed.reasoning = read_optional_string(o, "reasoning");
  const json& c = j.at("counterfactual");
  p.counterfactual.image = decode_path(c.at("image").get<std::string>(), base);
  p.counterfactual.code = c.at("code").get<std::string>();
  p.counterfactual.answer = c.at("answer").get<std::string>();
  p.counterfactual.reasoning = read_optional_string(c, "reasoning");
  p.attempts = j.value("attempts", 1);
  if (j.contains("provenance")) {
    const json& pv = j.at("provenance");
    p.provenance.modifier_model = pv.value("modifier_model", "");
    p.provenance.started_at = pv.value("started_at", "");
    p.provenance.finished_at = pv.value("finished_at", "");
    p.provenance.raw_sha256 = pv.value("raw_sha256", "");
    p.provenance.sampling = pv.value("sampling", "provider-default");
    p.provenance.prompt_tokens = pv.value("prompt_tokens", 0LL);
    p.provenance.completion_tokens = pv.value("completion_tokens", 0LL);
  }
  if (j.contains("similarity") && !j.at("similarity").is_null()) {
    p.similarity = similarity_from_json(j.at("similarity"));
  }
  return p;
}

SeedSample seed_from_manifest_json(const json& j, const fs::path& manifest_dir) {
  SeedSample s;
  try {
    s.id = j.at("id").get<std::string>();
    s.image = decode_path(j.at("image").get<std::string>(), manifest_dir);
    fs::path code_path =
        decode_path(j.at("code_path").get<std::string>(), manifest_dir);
    s.question = j.at("question").get<std::string>();
    s.answer = j.at("answer").get<std::string>();
    s.reasoning = read_optional_string(j, "reasoning");
    s.question_type = parse_question_type(j.at("qa_type").get<std::string>());
    if (s.id.empty()) throw Error(ErrorCode::kManifestError, "empty id");
    if (!fs::is_regular_file(s.image)) {
      throw Error(ErrorCode::kManifestError,
                  "image not found: " + s.image.string());
    }
    if (!fs::is_regular_file(code_path)) {
      throw Error(ErrorCode::kManifestError,
                  "code not found: " + code_path.string());
    }
    s.code = read_text_file(code_path);
    if (s.question_type == QuestionType::kReasoning &&
        (!s.reasoning || s.reasoning->empty())) {
      throw Error(ErrorCode::kManifestError,
                  "reasoning question without reasoning text");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kManifestError, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kManifestError) throw;
    throw Error(ErrorCode::kManifestError, e.what());
  }
  return s;
}

std::vector<SeedSample> load_manifest(const fs::path& manifest) {
  if (!fs::is_regular_file(manifest)) {
    throw Error(ErrorCode::kManifestError,
                "manifest not found: " + manifest.string());
  }
  const fs::path dir = fs::absolute(manifest).parent_path();
  std::vector<SeedSample> seeds;
  std::set<std::string> ids;
  std::size_t row = 0;
  for (const json& j : read_jsonl(manifest)) {
    ++row;
    try {
      seeds.push_back(seed_from_manifest_json(j, dir));
    } catch (const Error& e) {
      throw Error(ErrorCode::kManifestError,
                  "row " + std::to_string(row) + ": " + e.what());
    }
    if (!ids.insert(seeds.back().id).second) {
      throw Error(ErrorCode::kManifestError,
                  "duplicate id " + seeds.back().id);
    }
  }
  return seeds;
}

std::vector<CounterfactualPair> load_pairs(const fs::path& file) {
  const fs::path base = fs::absolute(file).parent_path();
  std::vector<CounterfactualPair> pairs;
  for (const json& j : read_jsonl(file)) {
    try {
      pairs.push_back(pair_from_json(j, base));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kManifestError,
                  file.string() + ": bad pair record: " + e.what());
    }
  }
  return pairs;
}

void write_pairs(const fs::path& file,
                 const std::vector<CounterfactualPair>& pairs) {
  const fs::path base = fs::absolute(file).parent_path();
  std::vector<json> rows;
  rows.reserve(pairs.size());
  for (const auto& p : pairs) rows.push_back(to_json(p, base));
  write_jsonl_atomic(file, rows);
}

}  // namespace chartcf
