// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "chartcf/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <ctime>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "chartcf/encoding.hpp"
#include "chartcf/error.hpp"
#include "chartcf/jsonl.hpp"
#include "chartcf/modifier_response.hpp"
#include "chartcf/validator.hpp"

namespace chartcf {

namespace fs = std::filesystem;
using nlohmann::json;

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

RunFiles::RunFiles(const fs::path& out_dir)
    : pairs(out_dir / "pairs.jsonl"),
      done(out_dir / "pairs.done.jsonl"),
      failures(out_dir / "failures.jsonl"),
      report(out_dir / "report.json"),
      images(out_dir / "images") {}

namespace {

std::string trimmed(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

struct AttemptFailure {
  Outcome outcome;
  std::string stage;
  std::string reason;
};

std::string join_violations(const ValidationVerdict& verdict) {
  std::string out;
  for (auto v : verdict.violations) {
    if (!out.empty()) out += ",";
    out += to_string(v);
  }
  return out;
}

SampleResult run_one(const ChatClient& modifier, RenderSandbox& sandbox,
                     const PipelineOptions& options, const SeedSample& seed) {
  const auto now = options.clock ? options.clock : utc_timestamp;
  SampleResult result;
  auto fail = [&](const AttemptFailure& f, int attempts) {
    result.outcome = f.outcome;
    result.attempts = attempts;
    result.failure = FailureRecord{seed.id, f.outcome, f.stage, f.reason, attempts};
    return result;
  };

  const PromptTemplate tmpl =
      options.template_override.value_or(default_template_for(seed.question_type));
  std::string prompt;
  try {
    prompt = render_prompt(tmpl, seed);
  } catch (const Error& e) {
    return fail({Outcome::kValidatorFailed, "prompt", e.what()}, 1);
  }
  const std::string image_bytes = read_text_file(seed.image);
  const auto original_paths = extract_save_paths(seed.code);
  const std::string expected_suffix =
      original_paths.empty() ? std::string() : *original_paths.begin();
  std::optional<std::string> seed_digest;

  AttemptFailure last{Outcome::kValidatorFailed, "none", "no attempts made"};
  const int max_attempts = std::max(1, options.max_attempts);
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    const std::string started = now();
    ChatReply reply;
    try {
      reply = call_modifier(modifier, prompt, image_bytes, "modifier/" + seed.id);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kAuthError) throw;
      if (e.code() == ErrorCode::kInvalidImage) {
        return fail({Outcome::kValidatorFailed, "seed_image", e.what()}, attempt);
      }
      last = {Outcome::kApiFailed, "modifier_call", e.what()};
      continue;
    }

    ModifierResponse response;
    try {
      response = parse_modifier_response(reply.text, seed.question_type);
    } catch (const Error& e) {
      last = {Outcome::kValidatorFailed, "modifier_response", e.what()};
      continue;
    }
    if (response.feasibility == Feasibility::kNo) {
      return fail({Outcome::kInfeasible, "feasibility", trimmed(response.rationale)},
                  attempt);
    }
    const std::string& code = *response.modified_code;

    const ValidationVerdict verdict = validate(seed.code, code);
    if (!verdict.ok()) {
      last = {Outcome::kValidatorFailed, "validate", join_violations(verdict)};
      continue;
    }
    if (trimmed(*response.new_answer) == trimmed(seed.answer)) {
      last = {Outcome::kValidatorFailed, "answer", "new answer equals the original"};
      continue;
    }

    try {
      const RenderResult parsed = sandbox.parse_only(code);
      if (parsed.status != RenderStatus::kOk) {
        last = {Outcome::kParseFailed, "parse_only",
                to_string(parsed.status) + ": " + parsed.stderr_excerpt};
        continue;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kWorkerDead && e.code() != ErrorCode::kProtocolError) throw;
      last = {Outcome::kParseFailed, "parse_only", e.what()};
      continue;
    }

    RenderResult rendered;
    try {
      rendered = sandbox.render(code, expected_suffix);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kWorkerDead && e.code() != ErrorCode::kProtocolError &&
          e.code() != ErrorCode::kPathMismatch) {
        throw;
      }
      last = {Outcome::kRenderFailed, "render", e.what()};
      continue;
    }
    if (rendered.status != RenderStatus::kOk) {
      last = {Outcome::kRenderFailed, "render",
              to_string(rendered.status) + ": " + rendered.stderr_excerpt};
      continue;
    }

    if (!seed_digest) seed_digest = pixel_digest(seed.image);
    if (pixel_digest(*rendered.image_path) == *seed_digest) {
      RenderSandbox::discard(rendered);
      last = {Outcome::kValidatorFailed, "pixels", "rendered image is pixel-identical"};
      continue;
    }

    fs::path destination = *rendered.image_path;
    if (!options.image_dir.empty()) {
      fs::create_directories(options.image_dir);
      destination = fs::absolute(options.image_dir / (seed.id + ".png"));
      fs::copy_file(*rendered.image_path, destination,
                    fs::copy_options::overwrite_existing);
      RenderSandbox::discard(rendered);
    }

    CounterfactualPair pair;
    pair.seed = seed;
    pair.counterfactual.image = destination;
    pair.counterfactual.code = code;
    pair.counterfactual.answer = trimmed(*response.new_answer);
    if (response.new_reasoning) pair.counterfactual.reasoning = trimmed(*response.new_reasoning);
    pair.attempts = attempt;
    pair.provenance.modifier_model = modifier.config().model_id;
    pair.provenance.started_at = started;
    pair.provenance.finished_at = now();
    pair.provenance.raw_sha256 = sha256_hex(reply.text);
    pair.provenance.prompt_tokens = reply.prompt_tokens;
    pair.provenance.completion_tokens = reply.completion_tokens;

    result.outcome = Outcome::kSucceeded;
    result.attempts = attempt;
    result.pair = std::move(pair);
    return result;
  }
  return fail(last, max_attempts);
}

struct DoneEntry {
  Outcome outcome;
  int attempts;
};

json done_json(const std::string& id, Outcome outcome, int attempts) {
  return json{{"id", id}, {"outcome", to_string(outcome)}, {"attempts", attempts}};
}

}  // namespace

SynthesisPipeline::SynthesisPipeline(const ChatClient& modifier, RenderSandbox& sandbox,
                                     PipelineOptions options)
    : modifier_(modifier), sandbox_(sandbox), options_(std::move(options)) {}

SampleResult SynthesisPipeline::run_sample(const SeedSample& seed) const {
  return run_one(modifier_, sandbox_, options_, seed);
}

CorpusResult SynthesisPipeline::run_corpus(const fs::path& manifest, const fs::path& out_dir,
                                           const CorpusOptions& corpus) {
  const std::vector<SeedSample> seeds = load_manifest(manifest);
  const RunFiles files(out_dir);
  fs::create_directories(out_dir);

  std::map<std::string, DoneEntry> done;
  if (corpus.resume && fs::exists(files.done)) {
    for (const json& j : read_jsonl(files.done)) {
      done[j.at("id").get<std::string>()] =
          DoneEntry{parse_outcome(j.at("outcome").get<std::string>()),
                    j.at("attempts").get<int>()};
    }
  } else if (!corpus.resume) {
    for (const auto& f : {files.pairs, files.done, files.failures, files.report}) {
      fs::remove(f);
    }
    fs::remove_all(files.images);
  }

  std::vector<const SeedSample*> pending;
  for (const auto& seed : seeds) {
    if (!done.contains(seed.id)) pending.push_back(&seed);
  }
  spdlog::info("synthesis: {} seeds, {} already done, {} pending", seeds.size(),
               done.size(), pending.size());

  PipelineOptions run_options = options_;
  run_options.image_dir = files.images;

  std::mutex done_mutex;
  {
    JsonlAppender pair_sink(files.pairs);
    JsonlAppender failure_sink(files.failures);
    JsonlAppender done_sink(files.done);
    const fs::path pair_base = fs::absolute(files.pairs).parent_path();

    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr fatal;
    std::mutex fatal_mutex;

    auto worker = [&] {
      for (;;) {
        if (abort.load() || (corpus.cancel && corpus.cancel->load())) return;
        const std::size_t index = next.fetch_add(1);
        if (index >= pending.size()) return;
        const SeedSample& seed = *pending[index];
        try {
          SampleResult r = run_one(modifier_, sandbox_, run_options, seed);
          if (r.pair) pair_sink.append(to_json(*r.pair, pair_base));
          if (r.failure) {
            spdlog::debug("seed {} failed at {}: {}", seed.id, r.failure->stage,
                          r.failure->reason);
            failure_sink.append(to_json(*r.failure));
          }
          done_sink.append(done_json(seed.id, r.outcome, r.attempts));
          std::lock_guard lock(done_mutex);
          done[seed.id] = DoneEntry{r.outcome, r.attempts};
        } catch (...) {
          std::lock_guard lock(fatal_mutex);
          if (!fatal) fatal = std::current_exception();
          abort.store(true);
          return;
        }
      }
    };

    const int threads = std::max(1, corpus.concurrency);
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    if (fatal) {
      spdlog::error("synthesis aborted; partial results are checkpointed in {}",
                    out_dir.string());
      std::rethrow_exception(fatal);
    }
  }

  // Canonical rewrite: keep the last record per finished id, sorted by id.
  CorpusResult result;
  std::set<std::string> manifest_ids;
  for (const auto& seed : seeds) manifest_ids.insert(seed.id);

  std::map<std::string, CounterfactualPair> pairs;
  if (fs::exists(files.pairs)) {
    for (auto& p : load_pairs(files.pairs)) {
      auto it = done.find(p.id());
      if (it != done.end() && it->second.outcome == Outcome::kSucceeded) {
        pairs[p.id()] = std::move(p);
      }
    }
  }
  std::map<std::string, FailureRecord> failures;
  if (fs::exists(files.failures)) {
    for (const json& j : read_jsonl(files.failures)) {
      FailureRecord f = failure_from_json(j);
      auto it = done.find(f.id);
      if (it != done.end() && it->second.outcome != Outcome::kSucceeded) {
        failures[f.id] = std::move(f);
      }
    }
  }

  std::vector<json> done_rows;
  for (const auto& [id, entry] : done) {
    if (!manifest_ids.contains(id)) continue;
    result.report.record(entry.outcome, entry.attempts);
    done_rows.push_back(done_json(id, entry.outcome, entry.attempts));
  }
  for (auto& [id, p] : pairs) result.pairs.push_back(std::move(p));
  for (auto& [id, f] : failures) result.failures.push_back(std::move(f));

  write_pairs(files.pairs, result.pairs);
  std::vector<json> failure_rows;
  for (const auto& f : result.failures) failure_rows.push_back(to_json(f));
  write_jsonl_atomic(files.failures, failure_rows);
  write_jsonl_atomic(files.done, done_rows);
  write_text_atomic(files.report, to_json(result.report).dump(2) + "\n");

  result.complete = result.report.seeds == static_cast<long long>(seeds.size());
  spdlog::info("synthesis: {} succeeded of {} processed", result.report.succeeded,
               result.report.seeds);
  return result;
}

}  // namespace chartcf
