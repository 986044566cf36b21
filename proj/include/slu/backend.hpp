#ifndef SLU_BACKEND_HPP
#define SLU_BACKEND_HPP

#include <chrono>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "slu/lattice.hpp"
#include "slu/types.hpp"

namespace slu {

class BackendError : public std::runtime_error {
 public:
  explicit BackendError(const std::string &message, int attempts = 0)
      : std::runtime_error(message), attempts_(attempts) {}
  /// Number of transport attempts made before giving up (0 when not a
  /// transport failure).
  int attempts() const { return attempts_; }

 private:
  int attempts_ = 0;
};

enum class BackendKind { kHttp, kFixture, kOracle };

std::string to_string(BackendKind kind);
BackendKind backend_kind_from_string(const std::string &name);

struct CompletionRequest {
  std::string utterance_id;
  std::string prompt;
  int max_new_tokens = 16;
  double temperature = 0.0;  // the pipeline contract: greedy decoding
};

struct CompletionResponse {
  std::string utterance_id;
  std::string raw_text;  // verbatim, untrimmed; may be empty
  BackendKind backend = BackendKind::kFixture;
  std::chrono::milliseconds latency{0};  // in-memory diagnostic; not persisted
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual CompletionResponse complete(const CompletionRequest &request) = 0;
  virtual BackendKind kind() const = 0;
};

/// FNV-1a 64-bit digest as 16 lowercase hex characters; used to tie fixture
/// entries to the exact prompt bytes they answered.
std::string fnv1a64_hex(const std::string &data);

/// Replay store keyed by utterance_id. Accepts JSONL lines with at least
/// {"utterance_id", "raw_text"}; an optional "prompt_digest" field is
/// checked in strict mode. Unknown fields are ignored, so a persisted
/// responses file can be replayed directly.
class FixtureBackend : public Backend {
 public:
  FixtureBackend() = default;
  static FixtureBackend from_file(const std::string &path, bool strict = false);
  static FixtureBackend from_jsonl(const std::string &jsonl, bool strict = false);

  void add(const std::string &utterance_id, const std::string &raw_text,
           const std::string &prompt_digest = "");
  void set_strict(bool strict) { strict_ = strict; }
  std::size_t size() const { return entries_.size(); }

  CompletionResponse complete(const CompletionRequest &request) override;
  BackendKind kind() const override { return BackendKind::kFixture; }

 private:
  struct Entry {
    std::string raw_text;
    std::string prompt_digest;  // empty = not recorded
  };
  std::map<std::string, Entry> entries_;
  bool strict_ = false;
};

struct HttpBackendConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string path = "/v1/completions";
  std::string model = "slu-default";
  std::string auth_header = "Authorization";
  std::string auth_token;  // overridden by $SLU_AUTH_TOKEN when set
  int max_inflight = 8;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{250};
  std::chrono::milliseconds connect_timeout{5000};
  std::chrono::milliseconds read_timeout{30000};
};

/// Environment variable holding the HTTP auth secret.
extern const char *const kAuthTokenEnvVar;

/// Minimal completion-over-HTTP client. POSTs
/// {"model", "prompt", "temperature", "max_tokens"} and expects {"text"}.
/// Retries transport failures only (connection-level errors), with
/// exponential backoff; well-formed replies are never retried. Thread-safe;
/// bounds concurrent in-flight requests.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  ~HttpBackend() override;

  CompletionResponse complete(const CompletionRequest &request) override;
  BackendKind kind() const override { return BackendKind::kHttp; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct OracleConfig {
  Task task = Task::kKs;
  std::vector<std::string> keyword_set;  // defaults to the command keywords
  std::vector<std::string> directed_cue_patterns;  // defaults below
  OutputMode output_mode = OutputMode::kKeyword;
  double keyword_mass_threshold = 0.3;
  double directed_mass_threshold = 0.5;

  OracleConfig();
};

/// Cue phrases whose presence marks a hypothesis as device-directed for the
/// cost-posterior oracle.
const std::vector<std::string> &default_directed_cues();

/// Softmax over negated costs, numerically stabilized: the lowest-cost
/// hypothesis gets the largest probability. Sums to 1 within 1e-12.
std::vector<double> oracle_posterior(const NBestList &nbest);

/// Deterministic stand-in for an LLM: aggregates hypothesis posteriors into
/// the task decision. KS: per-keyword mass with an acceptance threshold,
/// ties broken by keyword-list order. DDSD: posterior mass of cue-matching
/// hypotheses, thresholded (binary) or rounded to 0-100 (scale).
std::string oracle_decide(const NBestList &nbest, const OracleConfig &config);

/// Oracle backend answering from pre-extracted n-best lists keyed by
/// utterance_id (the prompt text itself is not consulted).
class OracleBackend : public Backend {
 public:
  OracleBackend(std::map<std::string, NBestList> nbests, OracleConfig config);

  CompletionResponse complete(const CompletionRequest &request) override;
  BackendKind kind() const override { return BackendKind::kOracle; }

 private:
  std::map<std::string, NBestList> nbests_;
  OracleConfig config_;
};

}  // namespace slu

#endif  // SLU_BACKEND_HPP
