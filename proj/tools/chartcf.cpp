// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0
//
// chartcf: synthesize -> score -> select -> emit -> loss-check, plus report.
// Exit status: 0 success, 1 data error, 2 usage error.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <set>

#include "chartcf/chat_client.hpp"
#include "chartcf/config.hpp"
#include "chartcf/dataset.hpp"
#include "chartcf/dpo.hpp"
#include "chartcf/emitter.hpp"
#include "chartcf/error.hpp"
#include "chartcf/jsonl.hpp"
#include "chartcf/pipeline.hpp"
#include "chartcf/similarity.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

std::atomic<bool> g_cancel{false};

extern "C" void on_sigint(int) { g_cancel.store(true); }

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr const char* kFixedTimestamp = "1970-01-01T00:00:00Z";

fs::path self_directory() {
  std::error_code ec;
  const fs::path exe = fs::read_symlink("/proc/self/exe", ec);
  return ec ? fs::current_path() : exe.parent_path();
}

struct CommonFlags {
  std::string config_file;
  bool dry_run = false;
  std::string transport = "http";
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool network) {
  cmd->add_option("--config", flags.config_file, "key = value run configuration file")
      ->check(CLI::ExistingFile);
  cmd->add_flag("--dry-run", flags.dry_run,
                "Validate inputs and configuration without network calls or writes");
  if (network) {
    cmd->add_option("--transport", flags.transport,
                    "'http' or 'mock:DIR' to replay canned API transcripts")
        ->capture_default_str();
  }
}

chartcf::RunConfig base_config(const CommonFlags& flags) {
  if (flags.config_file.empty()) return chartcf::RunConfig{};
  try {
    return chartcf::load_config(flags.config_file);
  } catch (const chartcf::Error& e) {
    throw UsageError(e.what());
  }
}

bool is_mock(const CommonFlags& flags) { return flags.transport.starts_with("mock:"); }

// Builds the transport before any request is made; http needs a key.
std::shared_ptr<chartcf::Transport> make_transport(const CommonFlags& flags,
                                                   const chartcf::ApiConfig& api) {
  if (is_mock(flags)) {
    const fs::path dir = flags.transport.substr(5);
    if (!fs::is_directory(dir)) throw UsageError("mock transcript directory not found: " + dir.string());
    return std::make_shared<chartcf::MockTransport>(dir);
  }
  if (flags.transport != "http") throw UsageError("--transport must be 'http' or 'mock:DIR'");
  const std::string key = chartcf::api_key_from_environment(api);
  if (key.empty()) {
    throw UsageError("environment variable " + api.api_key_env +
                     " is not set; export it or use --transport mock:DIR");
  }
  return std::make_shared<chartcf::HttpTransport>(api.base_url, key, api.timeout);
}

void validate_config(const chartcf::RunConfig& config) {
  try {
    config.validate();
  } catch (const chartcf::Error& e) {
    throw UsageError(e.what());
  }
}

// --- synthesize ---------------------------------------------------------

struct SynthesizeArgs {
  CommonFlags common;
  std::string manifest;
  std::string out;
  int concurrency = 0;
  bool resume = false;
  std::string worker;
  std::size_t workers = 0;
  std::string modifier_model;
  std::string distractor_template;
  double render_timeout = 0.0;
};

int run_synthesize(const SynthesizeArgs& args) {
  chartcf::RunConfig config = base_config(args.common);
  if (!args.manifest.empty()) config.manifest = args.manifest;
  if (!args.out.empty()) config.out_dir = args.out;
  if (args.concurrency > 0) config.concurrency = args.concurrency;
  if (args.resume) config.resume = true;
  if (args.workers > 0) config.workers = args.workers;
  if (!args.modifier_model.empty()) config.modifier.model_id = args.modifier_model;
  if (!args.distractor_template.empty()) config.distractor_template = args.distractor_template;
  if (args.render_timeout > 0) config.render_timeout_s = args.render_timeout;
  if (args.worker == "fixture") {
    config.worker_command = {(self_directory() / "chartcf-fixture-worker").string()};
  } else if (!args.worker.empty()) {
    config.worker_command = chartcf::split_command(args.worker);
  }
  config.modifier = chartcf::resolve_from_environment(config.modifier);
  if (is_mock(args.common)) config.modifier.backoff_initial = std::chrono::milliseconds(1);
  validate_config(config);
  if (config.manifest.empty()) throw UsageError("--manifest is required");
  if (config.out_dir.empty()) throw UsageError("--out is required");

  std::optional<chartcf::PromptTemplate> distractor;
  if (config.distractor_template) {
    if (!fs::is_regular_file(*config.distractor_template)) {
      throw UsageError("distractor template not found: " + config.distractor_template->string());
    }
    distractor = chartcf::PromptTemplate{chartcf::TemplateKind::kDistractor,
                                         chartcf::read_text_file(*config.distractor_template)};
  }
  auto transport = make_transport(args.common, config.modifier);
  const auto seeds = chartcf::load_manifest(config.manifest);

  if (args.common.dry_run) {
    std::cout << "dry run: " << seeds.size() << " seeds from " << config.manifest.string()
              << ", modifier " << config.modifier.model_id << " via "
              << (is_mock(args.common) ? args.common.transport : config.modifier.base_url)
              << ", concurrency " << config.concurrency << ", output "
              << config.out_dir.string() << "\n";
    return 0;
  }

  auto limiter = std::make_shared<chartcf::RateLimiter>(config.modifier.requests_per_minute);
  chartcf::ChatClient client(config.modifier, transport, limiter);

  chartcf::SandboxOptions sandbox_options;
  sandbox_options.worker_command = config.worker_command;
  sandbox_options.pool_size = config.workers;
  sandbox_options.render_timeout = std::chrono::duration<double>(config.render_timeout_s);
  sandbox_options.parse_timeout = std::chrono::duration<double>(config.parse_timeout_s);
  sandbox_options.scratch_root = fs::absolute(config.out_dir) / ".scratch";
  chartcf::RenderSandbox sandbox(sandbox_options);

  chartcf::PipelineOptions options;
  options.template_override = distractor;
  if (is_mock(args.common)) options.clock = [] { return std::string(kFixedTimestamp); };
  chartcf::SynthesisPipeline pipeline(client, sandbox, options);

  std::signal(SIGINT, on_sigint);
  chartcf::CorpusOptions corpus;
  corpus.concurrency = config.concurrency;
  corpus.resume = config.resume;
  corpus.cancel = &g_cancel;
  const auto result = pipeline.run_corpus(config.manifest, config.out_dir, corpus);
  std::error_code ec;
  fs::remove_all(sandbox_options.scratch_root, ec);
  std::cout << to_json(result.report).dump(2) << "\n";
  if (!result.complete) {
    std::cerr << "interrupted; rerun with --resume to continue\n";
    return kExitData;
  }
  return 0;
}

// --- score --------------------------------------------------------------

struct ScoreArgs {
  CommonFlags common;
  std::string pairs;
  std::string judge_model;
  std::string out;
  int concurrency = 0;
};

int run_score(const ScoreArgs& args) {
  chartcf::RunConfig config = base_config(args.common);
  if (!args.judge_model.empty()) config.judge.model_id = args.judge_model;
  if (args.concurrency > 0) config.concurrency = args.concurrency;
  config.judge = chartcf::resolve_from_environment(config.judge);
  if (is_mock(args.common)) config.judge.backoff_initial = std::chrono::milliseconds(1);
  validate_config(config);
  const fs::path out = args.out.empty() ? fs::path(args.pairs).parent_path() / "scored.jsonl"
                                        : fs::path(args.out);
  auto transport = make_transport(args.common, config.judge);
  auto pairs = chartcf::load_pairs(args.pairs);
  if (args.common.dry_run) {
    std::cout << "dry run: " << pairs.size() << " pairs would be scored by "
              << config.judge.model_id << " into " << out.string() << "\n";
    return 0;
  }
  auto limiter = std::make_shared<chartcf::RateLimiter>(config.judge.requests_per_minute);
  chartcf::ChatClient judge(config.judge, transport, limiter);
  const auto summary = chartcf::score_pairs(pairs, judge, config.concurrency);
  chartcf::write_pairs(out, pairs);
  std::cout << json{{"scored", summary.scored}, {"unscored", summary.unscored},
                    {"output", out.string()}}
                   .dump()
            << "\n";
  return 0;
}

// --- select -------------------------------------------------------------

struct SelectArgs {
  CommonFlags common;
  std::string input;
  std::string strategy;
  double rho = 0.0;
  std::optional<std::uint64_t> seed;
  std::string half;
  std::string out;
  bool ids_only = false;
};

std::optional<int> entry_total(const json& row) {
  if (row.contains("similarity")) {
    const json& s = row.at("similarity");
    if (s.is_null()) return std::nullopt;
    return s.at("total").get<int>();
  }
  if (row.contains("total") && !row.at("total").is_null()) return row.at("total").get<int>();
  return std::nullopt;
}

std::string entry_id(const json& row) {
  if (row.contains("id")) return row.at("id").get<std::string>();
  return row.at("pair_id").get<std::string>();
}

int run_select(const SelectArgs& args) {
  if (!args.half.empty() && (!args.strategy.empty() || args.rho != 0.0)) {
    throw UsageError("--half replaces --strategy and --rho; pass one or the other");
  }
  chartcf::RunConfig config = base_config(args.common);
  if (!args.strategy.empty()) {
    try {
      config.selection.strategy = chartcf::parse_selection_strategy(args.strategy);
    } catch (const chartcf::Error& e) {
      throw UsageError(e.what());
    }
  }
  if (args.rho != 0.0) config.selection.rho = args.rho;
  if (args.seed) config.selection.rng_seed = *args.seed;
  validate_config(config);
  if (!args.half.empty() && args.half != "low" && args.half != "high") {
    throw UsageError("--half must be 'low' or 'high'");
  }

  std::vector<json> rows = chartcf::read_jsonl(args.input);
  std::map<std::string, json> by_id;
  std::vector<chartcf::ScoredEntry> entries;
  std::size_t unscored = 0;
  for (auto& row : rows) {
    const std::optional<int> total = entry_total(row);
    if (!total) {
      ++unscored;
      continue;
    }
    std::string id = entry_id(row);
    entries.push_back({id, *total});
    if (!by_id.emplace(id, std::move(row)).second) {
      throw chartcf::Error(chartcf::ErrorCode::kManifestError, "duplicate id " + id);
    }
  }
  if (unscored > 0) spdlog::warn("{} unscored entries excluded", unscored);

  std::vector<std::string> ids;
  if (!args.half.empty()) {
    auto [low, high] = chartcf::partition_halves(entries);
    ids = args.half == "low" ? low : high;
  } else {
    ids = chartcf::select_ids(entries, config.selection);
  }
  if (args.common.dry_run) {
    std::cout << "dry run: " << ids.size() << " of " << entries.size() << " would be selected\n";
    return 0;
  }
  std::vector<json> selected;
  for (const auto& id : ids) selected.push_back(by_id.at(id));
  if (!args.out.empty()) chartcf::write_jsonl_atomic(args.out, selected);
  if (args.ids_only || args.out.empty()) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      std::cout << (args.ids_only ? ids[i] : selected[i].dump()) << "\n";
    }
  }
  spdlog::info("selected {} of {} scored entries", ids.size(), entries.size());
  return 0;
}

// --- emit ---------------------------------------------------------------

struct EmitArgs {
  CommonFlags common;
  std::string pairs;
  std::string mode;
  std::optional<bool> symmetric;
  std::string out;
};

int run_emit(const EmitArgs& args) {
  chartcf::RunConfig config = base_config(args.common);
  if (!args.mode.empty()) {
    try {
      config.emit.mode = chartcf::parse_emit_mode(args.mode);
    } catch (const chartcf::Error& e) {
      throw UsageError(e.what());
    }
  }
  if (args.symmetric) config.emit.symmetric = *args.symmetric;
  const auto pairs = chartcf::load_pairs(args.pairs);
  const auto records = chartcf::build_records(pairs, config.emit.mode, config.emit.symmetric);
  if (args.common.dry_run) {
    std::cout << "dry run: " << records.text.size() << " text and " << records.image.size()
              << " image records\n";
    return 0;
  }
  const auto files = chartcf::write_records(records, args.out, config.emit.mode);
  std::cout << json{{"text_records", records.text.size()},
                    {"image_records", records.image.size()},
                    {"text_file", files.text.string()},
                    {"image_file", files.image.string()}}
                   .dump()
            << "\n";
  return 0;
}

// --- loss-check ---------------------------------------------------------

struct LossCheckArgs {
  CommonFlags common;
  std::string input;
  std::string output;
  double h = 1e-5;
  double tolerance = 1e-6;
  double beta = chartcf::dpo::kDefaultBeta;
};

int run_loss_check(const LossCheckArgs& args) {
  if (!(args.h > 0.0) || !(args.tolerance > 0.0) || !(args.beta > 0.0)) {
    throw UsageError("--h, --tolerance and --beta must be positive");
  }
  const auto rows = chartcf::read_jsonl(args.input);
  std::vector<json> out;
  std::size_t failures = 0;
  std::size_t line = 0;
  for (const json& row : rows) {
    ++line;
    chartcf::dpo::LossInput in;
    try {
      in.lp_policy_chosen = row.at("lp_policy_chosen").get<double>();
      in.lp_ref_chosen = row.at("lp_ref_chosen").get<double>();
      in.lp_policy_rejected = row.at("lp_policy_rejected").get<double>();
      in.lp_ref_rejected = row.at("lp_ref_rejected").get<double>();
      in.beta = row.value("beta", args.beta);
    } catch (const json::exception& e) {
      throw chartcf::Error(chartcf::ErrorCode::kManifestError,
                           "row " + std::to_string(line) + ": " + e.what());
    }
    const auto loss = chartcf::dpo::dpo_loss(in);
    const double fd = chartcf::dpo::finite_diff_check(in, args.h);
    bool ok = fd < args.tolerance;
    json result{{"loss", loss.loss},
                {"margin", loss.margin},
                {"gradient", loss.gradient},
                {"fd_error", fd}};
    if (row.contains("expected_loss")) {
      const double expected = row.at("expected_loss").get<double>();
      const double err = std::abs(loss.loss - expected) / std::max(1.0, std::abs(expected));
      result["expected_error"] = err;
      ok = ok && err < args.tolerance;
    }
    result["ok"] = ok;
    if (!ok) ++failures;
    out.push_back(std::move(result));
  }
  if (!args.common.dry_run) {
    if (args.output.empty()) {
      for (const auto& r : out) std::cout << r.dump() << "\n";
    } else {
      chartcf::write_jsonl_atomic(args.output, out);
    }
  }
  std::cerr << "loss-check: " << rows.size() - failures << "/" << rows.size()
            << " vectors within tolerance\n";
  return failures == 0 ? 0 : kExitData;
}

// --- report -------------------------------------------------------------

int run_report(const std::string& file) {
  const auto report = chartcf::report_from_json(json::parse(chartcf::read_text_file(file)));
  auto row = [](const char* label, long long value) {
    std::printf("  %-24s %10lld\n", label, value);
  };
  std::printf("Pipeline report (%s)\n", file.c_str());
  row("seeds", report.seeds);
  row("succeeded", report.succeeded);
  row("infeasible", report.infeasible);
  row("parse_failed_final", report.parse_failed_final);
  row("render_failed_final", report.render_failed_final);
  row("validator_failed_final", report.validator_failed_final);
  row("api_failed_final", report.api_failed_final);
  std::printf("Attempts per seed\n");
  for (const auto& [attempt, count] : report.retry_histogram) {
    std::printf("  %-24d %10lld\n", attempt, count);
  }
  std::printf("Accounting closed: %s\n", report.closed() ? "yes" : "NO");
  return report.closed() ? 0 : kExitData;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("chartcf"));
  spdlog::set_level(spdlog::level::warn);

  CLI::App app{"Counterfactual chart preference data pipeline"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

  SynthesizeArgs synth;
  auto* synth_cmd = app.add_subcommand("synthesize", "Generate counterfactual pairs from seeds");
  add_common(synth_cmd, synth.common, true);
  synth_cmd->add_option("--manifest", synth.manifest, "Seed manifest JSONL");
  synth_cmd->add_option("--out", synth.out, "Run output directory");
  synth_cmd->add_option("--concurrency", synth.concurrency, "Samples processed in parallel")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_flag("--resume", synth.resume, "Skip seeds already in the done sidecar");
  synth_cmd->add_option("--worker", synth.worker,
                        "Render worker command line, or 'fixture' for the offline stand-in");
  synth_cmd->add_option("--workers", synth.workers, "Render worker processes")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--modifier-model", synth.modifier_model, "Code modifier model id");
  synth_cmd->add_option("--distractor-template", synth.distractor_template,
                        "Prompt template file used for every seed");
  synth_cmd->add_option("--render-timeout", synth.render_timeout, "Seconds per render")
      ->check(CLI::PositiveNumber);

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Judge visual similarity of each pair");
  add_common(score_cmd, score.common, true);
  score_cmd->add_option("--pairs", score.pairs, "Pair JSONL")->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--judge-model", score.judge_model, "Judge model id");
  score_cmd->add_option("--out", score.out, "Scored pair JSONL (default: scored.jsonl)");
  score_cmd->add_option("--concurrency", score.concurrency, "Pairs scored in parallel")
      ->check(CLI::PositiveNumber);

  SelectArgs select;
  auto* select_cmd = app.add_subcommand("select", "Retain a share of scored pairs");
  add_common(select_cmd, select.common, false);
  select_cmd->add_option("--scored,--pairs", select.input, "Scored pair JSONL or {id,total} index")
      ->required()
      ->check(CLI::ExistingFile);
  select_cmd->add_option("--strategy", select.strategy, "keep_low | random | keep_high");
  select_cmd->add_option("--rho", select.rho, "Retention percentage in (0, 100]");
  select_cmd->add_option("--seed", select.seed, "RNG seed for the random strategy");
  select_cmd->add_option("--half", select.half, "low | high: median split instead of rho");
  select_cmd->add_option("--out", select.out, "Write selected rows here");
  select_cmd->add_flag("--ids-only", select.ids_only, "Print selected ids, one per line");

  EmitArgs emit;
  auto* emit_cmd = app.add_subcommand("emit", "Write Text-DPO and Image-DPO records");
  add_common(emit_cmd, emit.common, false);
  emit_cmd->add_option("--pairs", emit.pairs, "Pair JSONL")->required()->check(CLI::ExistingFile);
  emit_cmd->add_option("--mode", emit.mode, "text | image | both");
  emit_cmd->add_option("--symmetric", emit.symmetric, "Also emit mirrored records (true|false)");
  emit_cmd->add_option("--out", emit.out, "Output directory")->required();

  LossCheckArgs loss;
  auto* loss_cmd = app.add_subcommand("loss-check", "Evaluate losses and verify gradients");
  loss_cmd->set_help_flag("--help", "Print this help message and exit");
  add_common(loss_cmd, loss.common, false);
  loss_cmd->add_option("--input", loss.input, "LossInput JSONL")->required()->check(CLI::ExistingFile);
  loss_cmd->add_option("--output", loss.output, "Result JSONL (default: stdout)");
  loss_cmd->add_option("--h", loss.h, "Finite-difference step")->capture_default_str();
  loss_cmd->add_option("--tolerance", loss.tolerance, "Maximum relative error")->capture_default_str();
  loss_cmd->add_option("--beta", loss.beta, "Beta for rows that omit it")->capture_default_str();

  std::string report_file;
  auto* report_cmd = app.add_subcommand("report", "Pretty-print a pipeline report");
  report_cmd->add_option("--report", report_file, "report.json")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  if (verbose) spdlog::set_level(spdlog::level::info);

  try {
    if (*synth_cmd) return run_synthesize(synth);
    if (*score_cmd) return run_score(score);
    if (*select_cmd) return run_select(select);
    if (*emit_cmd) return run_emit(emit);
    if (*loss_cmd) return run_loss_check(loss);
    if (*report_cmd) return run_report(report_file);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const chartcf::Error& e) {
    if (e.code() == chartcf::ErrorCode::kConfigError) {
      std::cerr << "usage error: " << e.what() << "\n";
      return kExitUsage;
    }
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
