#ifndef SLU_PIPELINE_HPP
#define SLU_PIPELINE_HPP

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "slu/backend.hpp"
#include "slu/metrics.hpp"
#include "slu/prompting.hpp"
#include "slu/synthdata.hpp"
#include "slu/types.hpp"

namespace slu {

class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Settings for one batch run; a structured config file with CLI overrides
/// maps onto this. Fields irrelevant to a given stage are ignored by it.
struct RunConfig {
  Task task = Task::kDdsd;
  int n = 8;
  OutputMode output_mode = OutputMode::kBinaryTarget;
  std::set<Ablation> ablations;

  BackendKind backend = BackendKind::kOracle;
  HttpBackendConfig http;
  std::string fixture_path;
  bool fixture_strict = false;

  int budget_tokens = 2048;
  int max_inflight = 8;

  std::string manifest_path;
  std::string nbest_path;  // oracle backends answer from this artifact

  std::uint64_t seed = 42;
  int size = 200;                   // synth/e2e corpus size
  std::string channel_config_path;  // empty = built-in config for the task
  std::vector<int> ladder = {1, 2, 4, 8, 16};

  /// 1-best runs use the 1-best prompt wording and a bare transcript.
  InputMode input_mode() const {
    return n > 1 ? InputMode::kNBest : InputMode::kOneBest;
  }
  /// Costs appear in the utterance block only for n-best prompts without
  /// the no-hypothesis-cost ablation.
  bool include_costs() const {
    return n > 1 && ablations.count(Ablation::kNoHypothesisCost) == 0;
  }
};

RunConfig run_config_from_json(const std::string &text);
RunConfig load_run_config(const std::string &path);

struct ManifestEntry {
  std::string utterance_id;
  std::string gold;
  std::string reference;
  std::string lattice_path;  // resolved relative to the manifest directory
};

std::vector<ManifestEntry> load_manifest(const std::string &path);

/// Per-stage outcome: failed utterances become error records in the output
/// (line counts are preserved), and the exit code distinguishes clean runs
/// (0) from partial failures (2). Fatal problems throw instead (CLI exit 1).
struct StageResult {
  int total = 0;
  int failures = 0;
  int exit_code() const { return failures == 0 ? 0 : 2; }
};

/// lattices -> n-best JSONL ({"utterance_id", "hypotheses": [{words, cost}]}).
StageResult cmd_nbest(const std::string &manifest_path, int n,
                      const std::string &out_path);

/// n-best JSONL -> prompt JSONL ({"utterance_id", "rendered", "ablations"}).
StageResult cmd_prompt(const std::string &nbest_path, const RunConfig &config,
                       const std::string &out_path);

/// prompt JSONL -> responses JSONL
/// ({"utterance_id", "raw_text", "backend", "prompt_digest"}).
StageResult cmd_infer(const std::string &prompts_path, const RunConfig &config,
                      const std::string &out_path);

/// responses JSONL -> predictions.jsonl + report.json (+ roc.csv in scale
/// mode) under out_dir. Golds come from config.manifest_path.
StageResult cmd_score(const std::string &responses_path, const RunConfig &config,
                      const std::string &out_dir);

/// responses JSONL -> ROC CSV only (scale mode).
StageResult cmd_roc(const std::string &responses_path, const RunConfig &config,
                    const std::string &out_path);

/// Generate a synthetic corpus: out_dir/channel_config.json,
/// out_dir/lattices/*.json, out_dir/manifest.jsonl.
StageResult cmd_synth(const RunConfig &config, const std::string &out_dir);

struct E2eRow {
  int n = 0;
  EvalReport report;
};

struct E2eVerdict {
  std::string metric;  // total_accuracy | eer | balanced_accuracy
  double n1_value = 0.0;
  double nmax_value = 0.0;
  std::string better;  // n_best | one_best | tie
};

struct E2eSummary {
  std::vector<E2eRow> rows;
  E2eVerdict verdict;
  int failures = 0;
  int exit_code() const { return failures == 0 ? 0 : 2; }
};

/// Full sweep: synthesize once, then run nbest/prompt/infer/score for every
/// ladder width over the same lattices; writes out_dir/summary.json.
/// Requires an offline backend (oracle or fixture).
E2eSummary cmd_e2e(const RunConfig &config, const std::string &out_dir);

std::string summary_to_json(const E2eSummary &summary, const RunConfig &config);

}  // namespace slu

#endif  // SLU_PIPELINE_HPP
