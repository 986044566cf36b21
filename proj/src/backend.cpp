#include "slu/backend.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <semaphore>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "slu/parsing.hpp"

namespace slu {

const char *const kAuthTokenEnvVar = "SLU_AUTH_TOKEN";

std::string to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::kHttp:
      return "http";
    case BackendKind::kFixture:
      return "fixture";
    case BackendKind::kOracle:
      return "oracle";
  }
  return "unknown";
}

BackendKind backend_kind_from_string(const std::string &name) {
  if (name == "http") return BackendKind::kHttp;
  if (name == "fixture") return BackendKind::kFixture;
  if (name == "oracle") return BackendKind::kOracle;
  throw BackendError("unknown backend kind: '" + name + "'");
}

std::string fnv1a64_hex(const std::string &data) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  static const char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[hash & 0xf];
    hash >>= 4;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fixture backend

FixtureBackend FixtureBackend::from_file(const std::string &path, bool strict) {
  std::ifstream in(path);
  if (!in) throw BackendError("cannot open fixture file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_jsonl(buffer.str(), strict);
}

FixtureBackend FixtureBackend::from_jsonl(const std::string &jsonl, bool strict) {
  FixtureBackend backend;
  backend.strict_ = strict;
  std::istringstream in(jsonl);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception &e) {
      throw BackendError("fixture line " + std::to_string(line_no) +
                         " is not valid JSON: " + e.what());
    }
    if (!doc.contains("utterance_id") || !doc["utterance_id"].is_string() ||
        !doc.contains("raw_text") || !doc["raw_text"].is_string()) {
      throw BackendError("fixture line " + std::to_string(line_no) +
                         " must contain string fields utterance_id and raw_text");
    }
    std::string digest;
    if (doc.contains("prompt_digest") && doc["prompt_digest"].is_string()) {
      digest = doc["prompt_digest"].get<std::string>();
    }
    backend.add(doc["utterance_id"].get<std::string>(),
                doc["raw_text"].get<std::string>(), digest);
  }
  return backend;
}

void FixtureBackend::add(const std::string &utterance_id,
                         const std::string &raw_text,
                         const std::string &prompt_digest) {
  const auto [it, inserted] =
      entries_.emplace(utterance_id, Entry{raw_text, prompt_digest});
  if (!inserted) {
    throw BackendError("duplicate fixture entry for utterance '" + utterance_id +
                       "'");
  }
}

CompletionResponse FixtureBackend::complete(const CompletionRequest &request) {
  const auto it = entries_.find(request.utterance_id);
  if (it == entries_.end()) {
    throw BackendError("fixture miss: no entry for utterance '" +
                       request.utterance_id + "'");
  }
  if (strict_ && !it->second.prompt_digest.empty()) {
    const std::string actual = fnv1a64_hex(request.prompt);
    if (actual != it->second.prompt_digest) {
      throw BackendError("fixture prompt digest mismatch for utterance '" +
                         request.utterance_id + "': stored " +
                         it->second.prompt_digest + ", prompt hashes to " + actual);
    }
  }
  CompletionResponse response;
  response.utterance_id = request.utterance_id;
  response.raw_text = it->second.raw_text;
  response.backend = BackendKind::kFixture;
  return response;
}

// ---------------------------------------------------------------------------
// HTTP backend

struct HttpBackend::Impl {
  HttpBackendConfig config;
  std::counting_semaphore<> slots;

  explicit Impl(HttpBackendConfig c)
      : config(std::move(c)), slots(config.max_inflight) {}
};

HttpBackend::HttpBackend(HttpBackendConfig config) {
  if (config.max_inflight < 1) {
    throw BackendError("http backend: max_inflight must be >= 1");
  }
  if (config.max_attempts < 1) {
    throw BackendError("http backend: max_attempts must be >= 1");
  }
  if (const char *env = std::getenv(kAuthTokenEnvVar)) {
    config.auth_token = env;
  }
  impl_ = std::make_unique<Impl>(std::move(config));
}

HttpBackend::~HttpBackend() = default;

CompletionResponse HttpBackend::complete(const CompletionRequest &request) {
  const auto &config = impl_->config;
  impl_->slots.acquire();
  struct SlotRelease {
    std::counting_semaphore<> &slots;
    ~SlotRelease() { slots.release(); }
  } release{impl_->slots};

  nlohmann::ordered_json body_doc;
  body_doc["model"] = config.model;
  body_doc["prompt"] = request.prompt;
  body_doc["temperature"] = request.temperature;
  body_doc["max_tokens"] = request.max_new_tokens;
  const std::string body = body_doc.dump();

  httplib::Headers headers;
  if (!config.auth_token.empty()) {
    headers.emplace(config.auth_header, config.auth_token);
  }

  const auto start = std::chrono::steady_clock::now();
  auto backoff = config.initial_backoff;
  for (int attempt = 1; attempt <= config.max_attempts; ++attempt) {
    httplib::Client client(config.host, config.port);
    client.set_connection_timeout(config.connect_timeout);
    client.set_read_timeout(config.read_timeout);
    auto res = client.Post(config.path, headers, body, "application/json");
    if (!res) {
      // Transport-level failure: the only retryable condition.
      if (attempt == config.max_attempts) {
        throw BackendError("transport failure for utterance '" +
                               request.utterance_id + "' after " +
                               std::to_string(attempt) + " attempts: " +
                               httplib::to_string(res.error()),
                           attempt);
      }
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
      continue;
    }
    if (res->status != 200) {
      throw BackendError("service replied with status " +
                         std::to_string(res->status) + " for utterance '" +
                         request.utterance_id + "'");
    }
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception &e) {
      throw BackendError("malformed service reply for utterance '" +
                         request.utterance_id + "': " + e.what());
    }
    if (!reply.contains("text") || !reply["text"].is_string()) {
      throw BackendError("service reply missing string field 'text' for utterance '" +
                         request.utterance_id + "'");
    }
    CompletionResponse response;
    response.utterance_id = request.utterance_id;
    response.raw_text = reply["text"].get<std::string>();
    response.backend = BackendKind::kHttp;
    response.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);
    return response;
  }
  throw BackendError("http backend: unreachable retry state");
}

// ---------------------------------------------------------------------------
// Oracle backend

const std::vector<std::string> &default_directed_cues() {
  static const std::vector<std::string> cues = {
      "play",      "set a timer", "what's", "turn on",    "turn off",
      "call",      "remind me",   "search", "volume",     "how far",
  };
  return cues;
}

OracleConfig::OracleConfig()
    : keyword_set(kCommandKeywords.begin(), kCommandKeywords.end()),
      directed_cue_patterns(default_directed_cues()) {}

std::vector<double> oracle_posterior(const NBestList &nbest) {
  if (nbest.hypotheses.empty()) {
    throw BackendError("oracle_posterior: empty n-best list");
  }
  double min_cost = std::numeric_limits<double>::infinity();
  for (const auto &hyp : nbest.hypotheses) {
    if (!std::isfinite(hyp.cost)) {
      throw BackendError("oracle_posterior: non-finite hypothesis cost");
    }
    min_cost = std::min(min_cost, hyp.cost);
  }
  std::vector<double> probs;
  probs.reserve(nbest.hypotheses.size());
  double z = 0.0;
  for (const auto &hyp : nbest.hypotheses) {
    const double e = std::exp(min_cost - hyp.cost);
    probs.push_back(e);
    z += e;
  }
  for (double &p : probs) p /= z;
  return probs;
}

namespace {

std::vector<std::string> split_words(const std::string &text) {
  std::vector<std::string> words;
  std::istringstream in(text);
  std::string word;
  while (in >> word) words.push_back(word);
  return words;
}

bool contains_phrase(const std::vector<std::string> &words,
                     const std::vector<std::string> &phrase) {
  if (phrase.empty() || phrase.size() > words.size()) return false;
  for (std::size_t i = 0; i + phrase.size() <= words.size(); ++i) {
    if (std::equal(phrase.begin(), phrase.end(), words.begin() + i)) return true;
  }
  return false;
}

bool matches_any_cue(const std::vector<std::string> &words,
                     const std::vector<std::string> &patterns) {
  for (const auto &pattern : patterns) {
    if (contains_phrase(words, split_words(pattern))) return true;
  }
  return false;
}

}  // namespace

std::string oracle_decide(const NBestList &nbest, const OracleConfig &config) {
  const std::vector<double> posterior = oracle_posterior(nbest);

  if (config.task == Task::kKs) {
    std::string best = kOovLabel;
    double best_mass = 0.0;
    for (const auto &keyword : config.keyword_set) {
      double mass = 0.0;
      for (std::size_t i = 0; i < nbest.hypotheses.size(); ++i) {
        const auto &words = nbest.hypotheses[i].words;
        if (words.size() == 1 && words.front() == keyword) mass += posterior[i];
      }
      // Strict > keeps the earliest keyword in list order on ties.
      if (mass > best_mass) {
        best_mass = mass;
        best = keyword;
      }
    }
    if (best_mass >= config.keyword_mass_threshold) return best;
    return kOovLabel;
  }

  double directed = 0.0;
  for (std::size_t i = 0; i < nbest.hypotheses.size(); ++i) {
    if (matches_any_cue(nbest.hypotheses[i].words, config.directed_cue_patterns)) {
      directed += posterior[i];
    }
  }
  directed = std::clamp(directed, 0.0, 1.0);
  if (config.output_mode == OutputMode::kScale0To100) {
    return std::to_string(probability_to_scale_label(directed));
  }
  return directed >= config.directed_mass_threshold ? "1" : "0";
}

OracleBackend::OracleBackend(std::map<std::string, NBestList> nbests,
                             OracleConfig config)
    : nbests_(std::move(nbests)), config_(std::move(config)) {}

CompletionResponse OracleBackend::complete(const CompletionRequest &request) {
  const auto it = nbests_.find(request.utterance_id);
  if (it == nbests_.end()) {
    throw BackendError("oracle backend: no n-best list for utterance '" +
                       request.utterance_id + "'");
  }
  CompletionResponse response;
  response.utterance_id = request.utterance_id;
  response.raw_text = oracle_decide(it->second, config_);
  response.backend = BackendKind::kOracle;
  return response;
}

}  // namespace slu
