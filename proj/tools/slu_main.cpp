// Batch CLI over the slu pipeline library: each subcommand maps onto one
// pipeline stage and persists its artifact for audit and replay.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "slu/pipeline.hpp"

namespace {

// Raw flag values for one subcommand; only flags the user actually passed
// override the config file.
struct Flags {
  std::string config;
  std::string task;
  int n = 0;
  std::string output_mode;
  std::vector<std::string> ablations;
  std::string backend;
  int budget = 0;
  std::string manifest;
  std::string nbest;
  std::string prompts;
  std::string responses;
  std::string fixture;
  bool strict = false;
  std::string out;
  std::uint64_t seed = 0;
  int max_inflight = 0;
  int size = 0;
  std::string channel_config;
  std::vector<int> ladder;
  std::string host;
  int port = 0;
  std::string path;
  std::string model;
  std::string auth_header;
};

void add_common_flags(CLI::App *cmd, Flags &flags) {
  cmd->add_option("--config", flags.config,
                  "Run config JSON file; explicit flags override its values");
  cmd->add_option("--task", flags.task, "Task: DDSD or KS");
  cmd->add_option("--output-mode", flags.output_mode,
                  "Output mode: binary_target, scale_0_100 or keyword");
  cmd->add_option("--seed", flags.seed, "Random seed for synthetic corpora");
}

void add_backend_flags(CLI::App *cmd, Flags &flags) {
  cmd->add_option("--backend", flags.backend, "Backend: http, fixture or oracle");
  cmd->add_option("--fixture", flags.fixture, "Fixture JSONL for the fixture backend");
  cmd->add_flag("--strict", flags.strict,
                "Fixture backend verifies stored prompt digests");
  cmd->add_option("--max-inflight", flags.max_inflight,
                  "Bound on concurrent HTTP requests");
  cmd->add_option("--host", flags.host, "HTTP backend host");
  cmd->add_option("--port", flags.port, "HTTP backend port");
  cmd->add_option("--path", flags.path, "HTTP backend endpoint path");
  cmd->add_option("--model", flags.model, "Model name sent to the HTTP backend");
  cmd->add_option("--auth-header", flags.auth_header,
                  "Auth header name (value comes from $SLU_AUTH_TOKEN)");
}

// Start from the config file (if given) and overlay every flag the user
// passed on the command line.
slu::RunConfig merge_config(const CLI::App *cmd, const Flags &flags) {
  slu::RunConfig cfg;
  if (!flags.config.empty()) cfg = slu::load_run_config(flags.config);
  auto passed = [cmd](const std::string &name) {
    // Not every subcommand registers every flag; absent options never override.
    const CLI::Option *opt = cmd->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  if (passed("--task")) cfg.task = slu::task_from_string(flags.task);
  if (passed("--n")) cfg.n = flags.n;
  if (passed("--output-mode")) {
    cfg.output_mode = slu::output_mode_from_string(flags.output_mode);
  }
  if (passed("--ablate")) {
    cfg.ablations.clear();
    for (const auto &name : flags.ablations) {
      cfg.ablations.insert(slu::ablation_from_string(name));
    }
  }
  if (passed("--backend")) cfg.backend = slu::backend_kind_from_string(flags.backend);
  if (passed("--budget")) cfg.budget_tokens = flags.budget;
  if (passed("--manifest")) cfg.manifest_path = flags.manifest;
  if (passed("--nbest")) cfg.nbest_path = flags.nbest;
  if (passed("--fixture")) cfg.fixture_path = flags.fixture;
  if (passed("--strict")) cfg.fixture_strict = flags.strict;
  if (passed("--seed")) cfg.seed = flags.seed;
  if (passed("--max-inflight")) cfg.max_inflight = flags.max_inflight;
  if (passed("--size")) cfg.size = flags.size;
  if (passed("--channel-config")) cfg.channel_config_path = flags.channel_config;
  if (passed("--ladder")) cfg.ladder = flags.ladder;
  if (passed("--host")) cfg.http.host = flags.host;
  if (passed("--port")) cfg.http.port = flags.port;
  if (passed("--path")) cfg.http.path = flags.path;
  if (passed("--model")) cfg.http.model = flags.model;
  if (passed("--auth-header")) cfg.http.auth_header = flags.auth_header;
  return cfg;
}

int report_stage(const std::string &stage, const slu::StageResult &result,
                 const std::string &out) {
  std::cout << stage << ": " << result.total << " utterances, "
            << result.failures << " failures -> " << out << "\n";
  return result.exit_code();
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"ASR n-best + LLM spoken-intent pipeline"};
  app.require_subcommand(1);

  Flags flags;

  auto *nbest = app.add_subcommand("nbest", "Extract n-best lists from lattices");
  add_common_flags(nbest, flags);
  nbest->add_option("--manifest", flags.manifest, "Corpus manifest JSONL");
  nbest->add_option("--n", flags.n, "N-best width");
  nbest->add_option("--out", flags.out, "Output n-best JSONL")->required();

  auto *prompt = app.add_subcommand("prompt", "Render prompts from n-best lists");
  add_common_flags(prompt, flags);
  prompt->add_option("--nbest", flags.nbest, "Input n-best JSONL");
  prompt->add_option("--n", flags.n, "N-best width (selects the prompt wording)");
  prompt->add_option("--ablate", flags.ablations,
                     "Ablations: no-tp, gib-tp or no-hc (repeatable)");
  prompt->add_option("--budget", flags.budget, "Token budget for rendered prompts");
  prompt->add_option("--out", flags.out, "Output prompt JSONL")->required();

  auto *infer = app.add_subcommand("infer", "Obtain completions for prompts");
  add_common_flags(infer, flags);
  add_backend_flags(infer, flags);
  infer->add_option("--prompts", flags.prompts, "Input prompt JSONL")->required();
  infer->add_option("--nbest", flags.nbest,
                    "N-best artifact the oracle backend answers from");
  infer->add_option("--out", flags.out, "Output responses JSONL")->required();

  auto *score = app.add_subcommand("score", "Parse responses and compute metrics");
  add_common_flags(score, flags);
  score->add_option("--responses", flags.responses, "Input responses JSONL")
      ->required();
  score->add_option("--manifest", flags.manifest, "Manifest with gold labels");
  score->add_option("--out", flags.out, "Output directory")->required();

  auto *roc = app.add_subcommand("roc", "Emit the ROC curve CSV (scale mode)");
  add_common_flags(roc, flags);
  roc->add_option("--responses", flags.responses, "Input responses JSONL")
      ->required();
  roc->add_option("--manifest", flags.manifest, "Manifest with gold labels");
  roc->add_option("--out", flags.out, "Output CSV path")->required();

  auto *synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  add_common_flags(synth, flags);
  synth->add_option("--channel-config", flags.channel_config,
                    "Channel config JSON (defaults to the built-in for --task)");
  synth->add_option("--size", flags.size, "Number of utterances");
  synth->add_option("--out", flags.out, "Output directory")->required();

  auto *e2e = app.add_subcommand("e2e", "Synthesize and sweep n-best widths");
  add_common_flags(e2e, flags);
  add_backend_flags(e2e, flags);
  e2e->add_option("--channel-config", flags.channel_config,
                  "Channel config JSON (defaults to the built-in for --task)");
  e2e->add_option("--size", flags.size, "Number of utterances");
  e2e->add_option("--ladder", flags.ladder, "N-best widths to sweep (repeatable)");
  e2e->add_option("--budget", flags.budget, "Token budget for rendered prompts");
  e2e->add_option("--out", flags.out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (nbest->parsed()) {
      const slu::RunConfig cfg = merge_config(nbest, flags);
      if (cfg.manifest_path.empty()) throw slu::PipelineError("--manifest is required");
      return report_stage("nbest", slu::cmd_nbest(cfg.manifest_path, cfg.n, flags.out),
                          flags.out);
    }
    if (prompt->parsed()) {
      const slu::RunConfig cfg = merge_config(prompt, flags);
      if (cfg.nbest_path.empty()) throw slu::PipelineError("--nbest is required");
      return report_stage("prompt", slu::cmd_prompt(cfg.nbest_path, cfg, flags.out),
                          flags.out);
    }
    if (infer->parsed()) {
      const slu::RunConfig cfg = merge_config(infer, flags);
      return report_stage("infer", slu::cmd_infer(flags.prompts, cfg, flags.out),
                          flags.out);
    }
    if (score->parsed()) {
      const slu::RunConfig cfg = merge_config(score, flags);
      return report_stage("score", slu::cmd_score(flags.responses, cfg, flags.out),
                          flags.out);
    }
    if (roc->parsed()) {
      slu::RunConfig cfg = merge_config(roc, flags);
      if (roc->count("--output-mode") == 0 && cfg.task == slu::Task::kDdsd) {
        cfg.output_mode = slu::OutputMode::kScale0To100;
      }
      return report_stage("roc", slu::cmd_roc(flags.responses, cfg, flags.out),
                          flags.out);
    }
    if (synth->parsed()) {
      const slu::RunConfig cfg = merge_config(synth, flags);
      return report_stage("synth", slu::cmd_synth(cfg, flags.out), flags.out);
    }
    if (e2e->parsed()) {
      const slu::RunConfig cfg = merge_config(e2e, flags);
      const slu::E2eSummary summary = slu::cmd_e2e(cfg, flags.out);
      std::cout << "e2e: " << summary.rows.size() << " ladder rows, "
                << summary.failures << " failures -> " << flags.out
                << "/summary.json\n";
      std::cout << "verdict: " << summary.verdict.better << " ("
                << summary.verdict.metric << " " << summary.verdict.n1_value
                << " at n=" << summary.rows.front().n << " vs "
                << summary.verdict.nmax_value << " at n="
                << summary.rows.back().n << ")\n";
      return summary.exit_code();
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
