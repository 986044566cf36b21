#include "slu/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "slu/lattice.hpp"
#include "slu/parsing.hpp"

namespace fs = std::filesystem;

namespace slu {

namespace {

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PipelineError("cannot open file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::ofstream open_output(const std::string &path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PipelineError("cannot open output file: " + path);
  return out;
}

void write_file(const std::string &path, const std::string &content) {
  auto out = open_output(path);
  out << content;
  if (!out) throw PipelineError("write failed: " + path);
}

std::vector<std::string> read_jsonl(const std::string &path) {
  std::vector<std::string> lines;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

nlohmann::ordered_json error_record(const std::string &utterance_id,
                                    const std::string &message) {
  nlohmann::ordered_json doc;
  doc["utterance_id"] = utterance_id;
  doc["error"] = message;
  return doc;
}

std::string join_words(const std::vector<std::string> &words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

// A parsed JSONL record from any stage: either a payload or an error carried
// forward from an earlier stage (or produced by parsing the line itself).
struct NBestRecord {
  bool ok = false;
  std::string utterance_id;
  NBestList nbest;
  std::string error;
};

NBestRecord parse_nbest_record(const std::string &line) {
  NBestRecord rec;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
    rec.utterance_id = doc.at("utterance_id").get<std::string>();
    if (doc.contains("error")) {
      rec.error = doc["error"].get<std::string>();
      return rec;
    }
    rec.nbest.utterance_id = rec.utterance_id;
    for (const auto &hyp : doc.at("hypotheses")) {
      Hypothesis h;
      for (const auto &word : hyp.at("words")) {
        h.words.push_back(word.get<std::string>());
      }
      h.cost = hyp.at("cost").get<double>();
      rec.nbest.hypotheses.push_back(std::move(h));
    }
    rec.nbest.n_requested = static_cast<int>(rec.nbest.hypotheses.size());
    rec.ok = true;
  } catch (const nlohmann::json::exception &e) {
    rec.ok = false;
    rec.error = std::string("malformed n-best line: ") + e.what();
  }
  return rec;
}

struct PromptRecord {
  bool ok = false;
  std::string utterance_id;
  std::string rendered;
  std::string error;
};

PromptRecord parse_prompt_record(const std::string &line) {
  PromptRecord rec;
  try {
    auto doc = nlohmann::json::parse(line);
    rec.utterance_id = doc.at("utterance_id").get<std::string>();
    if (doc.contains("error")) {
      rec.error = doc["error"].get<std::string>();
      return rec;
    }
    rec.rendered = doc.at("rendered").get<std::string>();
    rec.ok = true;
  } catch (const nlohmann::json::exception &e) {
    rec.ok = false;
    rec.error = std::string("malformed prompt line: ") + e.what();
  }
  return rec;
}

struct ResponseRecord {
  bool ok = false;
  std::string utterance_id;
  std::string raw_text;
  std::string error;
};

ResponseRecord parse_response_record(const std::string &line) {
  ResponseRecord rec;
  try {
    auto doc = nlohmann::json::parse(line);
    rec.utterance_id = doc.at("utterance_id").get<std::string>();
    if (doc.contains("error")) {
      rec.error = doc["error"].get<std::string>();
      return rec;
    }
    rec.raw_text = doc.at("raw_text").get<std::string>();
    rec.ok = true;
  } catch (const nlohmann::json::exception &e) {
    rec.ok = false;
    rec.error = std::string("malformed response line: ") + e.what();
  }
  return rec;
}

ChannelConfig resolve_channel_config(const RunConfig &config) {
  ChannelConfig channel;
  if (config.channel_config_path.empty()) {
    channel = config.task == Task::kKs ? builtin_ks_config() : builtin_ddsd_config();
  } else {
    channel = load_channel_config(config.channel_config_path);
  }
  channel.seed = config.seed;
  return channel;
}

std::map<std::string, std::string> gold_map(const std::vector<ManifestEntry> &entries) {
  std::map<std::string, std::string> golds;
  for (const auto &entry : entries) golds[entry.utterance_id] = entry.gold;
  return golds;
}

std::unique_ptr<Backend> make_backend(const RunConfig &config) {
  switch (config.backend) {
    case BackendKind::kHttp: {
      HttpBackendConfig http = config.http;
      http.max_inflight = config.max_inflight;
      return std::make_unique<HttpBackend>(std::move(http));
    }
    case BackendKind::kFixture: {
      if (config.fixture_path.empty()) {
        throw PipelineError("fixture backend requires a fixture file path");
      }
      return std::make_unique<FixtureBackend>(
          FixtureBackend::from_file(config.fixture_path, config.fixture_strict));
    }
    case BackendKind::kOracle: {
      if (config.nbest_path.empty()) {
        throw PipelineError("oracle backend requires the n-best artifact path");
      }
      std::map<std::string, NBestList> nbests;
      for (const auto &line : read_jsonl(config.nbest_path)) {
        NBestRecord rec = parse_nbest_record(line);
        if (rec.ok) nbests.emplace(rec.utterance_id, std::move(rec.nbest));
      }
      OracleConfig oracle;
      oracle.task = config.task;
      oracle.output_mode = config.task == Task::kKs ? OutputMode::kKeyword
                                                    : config.output_mode;
      return std::make_unique<OracleBackend>(std::move(nbests), std::move(oracle));
    }
  }
  throw PipelineError("unknown backend selection");
}

OutputMode effective_output_mode(const RunConfig &config) {
  return config.task == Task::kKs ? OutputMode::kKeyword : config.output_mode;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config file

RunConfig run_config_from_json(const std::string &text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw PipelineError(std::string("run config is not valid JSON: ") + e.what());
  }
  static const std::set<std::string> known = {
      "task",    "n",           "output_mode",  "ablations", "backend",
      "http",    "fixture",     "budget_tokens", "max_inflight", "manifest",
      "nbest",   "seed",        "size",          "channel_config", "ladder"};
  for (const auto &[key, value] : doc.items()) {
    (void)value;
    if (!known.count(key)) {
      throw PipelineError("unknown run config key: '" + key + "'");
    }
  }

  RunConfig cfg;
  try {
    if (doc.contains("task")) cfg.task = task_from_string(doc["task"].get<std::string>());
    if (doc.contains("n")) cfg.n = doc["n"].get<int>();
    if (doc.contains("output_mode")) {
      cfg.output_mode = output_mode_from_string(doc["output_mode"].get<std::string>());
    }
    if (doc.contains("ablations")) {
      for (const auto &name : doc["ablations"]) {
        cfg.ablations.insert(ablation_from_string(name.get<std::string>()));
      }
    }
    if (doc.contains("backend")) {
      cfg.backend = backend_kind_from_string(doc["backend"].get<std::string>());
    }
    if (doc.contains("http")) {
      const auto &http = doc["http"];
      cfg.http.host = http.value("host", cfg.http.host);
      cfg.http.port = http.value("port", cfg.http.port);
      cfg.http.path = http.value("path", cfg.http.path);
      cfg.http.model = http.value("model", cfg.http.model);
      cfg.http.auth_header = http.value("auth_header", cfg.http.auth_header);
      // The auth token itself is env-only ($SLU_AUTH_TOKEN): secrets do not
      // belong in config files.
    }
    if (doc.contains("fixture")) {
      const auto &fixture = doc["fixture"];
      cfg.fixture_path = fixture.value("path", cfg.fixture_path);
      cfg.fixture_strict = fixture.value("strict", cfg.fixture_strict);
    }
    if (doc.contains("budget_tokens")) cfg.budget_tokens = doc["budget_tokens"].get<int>();
    if (doc.contains("max_inflight")) cfg.max_inflight = doc["max_inflight"].get<int>();
    if (doc.contains("manifest")) cfg.manifest_path = doc["manifest"].get<std::string>();
    if (doc.contains("nbest")) cfg.nbest_path = doc["nbest"].get<std::string>();
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("size")) cfg.size = doc["size"].get<int>();
    if (doc.contains("channel_config")) {
      cfg.channel_config_path = doc["channel_config"].get<std::string>();
    }
    if (doc.contains("ladder")) {
      cfg.ladder.clear();
      for (const auto &n : doc["ladder"]) cfg.ladder.push_back(n.get<int>());
    }
  } catch (const nlohmann::json::exception &e) {
    throw PipelineError(std::string("run config has an invalid shape: ") + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::string &path) {
  return run_config_from_json(read_file(path));
}

// ---------------------------------------------------------------------------
// Manifest

std::vector<ManifestEntry> load_manifest(const std::string &path) {
  const fs::path dir = fs::path(path).parent_path();
  std::vector<ManifestEntry> entries;
  std::set<std::string> seen;
  int line_no = 0;
  for (const auto &line : read_jsonl(path)) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
      ManifestEntry entry;
      entry.utterance_id = doc.at("utterance_id").get<std::string>();
      entry.gold = doc.value("gold", std::string());
      entry.reference = doc.value("reference", std::string());
      const std::string lattice = doc.value("lattice_path", std::string());
      if (!lattice.empty()) {
        entry.lattice_path = (dir / fs::path(lattice)).generic_string();
      }
      if (!seen.insert(entry.utterance_id).second) {
        throw PipelineError("manifest " + path + " has duplicate utterance_id '" +
                            entry.utterance_id + "'");
      }
      entries.push_back(std::move(entry));
    } catch (const nlohmann::json::exception &e) {
      throw PipelineError("manifest " + path + " line " + std::to_string(line_no) +
                          " is malformed: " + e.what());
    }
  }
  return entries;
}

// ---------------------------------------------------------------------------
// Stages

StageResult cmd_nbest(const std::string &manifest_path, int n,
                      const std::string &out_path) {
  if (n < 1) throw PipelineError("cmd_nbest: n must be >= 1");
  const auto entries = load_manifest(manifest_path);
  auto out = open_output(out_path);
  StageResult result;
  for (const auto &entry : entries) {
    ++result.total;
    nlohmann::ordered_json line;
    try {
      if (entry.lattice_path.empty()) {
        throw PipelineError("manifest entry has no lattice_path");
      }
      const Lattice lattice = load_lattice(read_file(entry.lattice_path));
      if (lattice.utterance_id != entry.utterance_id) {
        throw PipelineError("lattice utterance_id '" + lattice.utterance_id +
                            "' does not match manifest id '" +
                            entry.utterance_id + "'");
      }
      const NBestList nbest = extract_nbest(lattice, n);
      line["utterance_id"] = entry.utterance_id;
      auto hyps = nlohmann::ordered_json::array();
      for (const auto &hyp : nbest.hypotheses) {
        nlohmann::ordered_json h;
        h["words"] = hyp.words;
        h["cost"] = hyp.cost;
        hyps.push_back(std::move(h));
      }
      line["hypotheses"] = std::move(hyps);
    } catch (const std::exception &e) {
      line = error_record(entry.utterance_id, e.what());
      ++result.failures;
    }
    out << line.dump() << '\n';
  }
  return result;
}

StageResult cmd_prompt(const std::string &nbest_path, const RunConfig &config,
                       const std::string &out_path) {
  std::optional<TaskPrompt> task_prompt;
  if (config.ablations.count(Ablation::kNoTaskPrompt) == 0) {
    task_prompt = lookup_task_prompt(config.task, config.input_mode(),
                                     effective_output_mode(config));
  }
  auto ablation_names = nlohmann::ordered_json::array();
  for (Ablation ablation : config.ablations) {
    ablation_names.push_back(to_string(ablation));
  }

  auto out = open_output(out_path);
  StageResult result;
  for (const auto &raw_line : read_jsonl(nbest_path)) {
    ++result.total;
    const NBestRecord rec = parse_nbest_record(raw_line);
    nlohmann::ordered_json line;
    if (!rec.ok) {
      line = error_record(rec.utterance_id, rec.error);
      ++result.failures;
    } else {
      try {
        const UtterancePrompt up =
            serialize_utterance(rec.nbest, config.include_costs());
        PromptBundle bundle = render(task_prompt, up, config.ablations);
        bundle = enforce_budget(std::move(bundle), rec.nbest, config.budget_tokens);
        line["utterance_id"] = rec.utterance_id;
        line["rendered"] = bundle.rendered;
        line["ablations"] = ablation_names;
      } catch (const std::exception &e) {
        line = error_record(rec.utterance_id, e.what());
        ++result.failures;
      }
    }
    out << line.dump() << '\n';
  }
  return result;
}

StageResult cmd_infer(const std::string &prompts_path, const RunConfig &config,
                      const std::string &out_path) {
  std::vector<PromptRecord> prompts;
  for (const auto &line : read_jsonl(prompts_path)) {
    prompts.push_back(parse_prompt_record(line));
  }
  const auto backend = make_backend(config);

  std::vector<nlohmann::ordered_json> results(prompts.size());
  auto process = [&](std::size_t i) {
    const PromptRecord &rec = prompts[i];
    if (!rec.ok) {
      results[i] = error_record(rec.utterance_id, rec.error);
      return;
    }
    try {
      CompletionRequest request;
      request.utterance_id = rec.utterance_id;
      request.prompt = rec.rendered;
      const CompletionResponse response = backend->complete(request);
      nlohmann::ordered_json line;
      line["utterance_id"] = rec.utterance_id;
      line["raw_text"] = response.raw_text;
      line["backend"] = to_string(response.backend);
      line["prompt_digest"] = fnv1a64_hex(rec.rendered);
      results[i] = std::move(line);
    } catch (const std::exception &e) {
      results[i] = error_record(rec.utterance_id, e.what());
    }
  };

  // Only the remote backend benefits from concurrency; offline backends stay
  // sequential. Either way the output order is the input order.
  const int workers =
      config.backend == BackendKind::kHttp
          ? std::max(1, std::min<int>(config.max_inflight,
                                      static_cast<int>(prompts.size())))
          : 1;
  if (workers <= 1) {
    for (std::size_t i = 0; i < prompts.size(); ++i) process(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < prompts.size();
             i = next.fetch_add(1)) {
          process(i);
        }
      });
    }
    for (auto &t : pool) t.join();
  }

  auto out = open_output(out_path);
  StageResult result;
  for (const auto &line : results) {
    ++result.total;
    if (line.contains("error")) ++result.failures;
    out << line.dump() << '\n';
  }
  return result;
}

namespace {

// Shared parse-and-collect step behind cmd_score / cmd_roc.
struct ScoreCore {
  std::vector<nlohmann::ordered_json> prediction_lines;
  std::vector<ScoredExample> scored;        // binary / scale modes
  std::vector<ParsedPrediction> keyword_preds;  // keyword mode
  int total = 0;
  int failures = 0;
  int parsed = 0;
  int descriptive = 0;
};

ScoreCore build_score_core(const std::string &responses_path,
                           const RunConfig &config,
                           const std::map<std::string, std::string> &golds) {
  const OutputMode mode = effective_output_mode(config);
  ScoreCore core;
  for (const auto &raw_line : read_jsonl(responses_path)) {
    ++core.total;
    const ResponseRecord rec = parse_response_record(raw_line);
    if (!rec.ok) {
      core.prediction_lines.push_back(error_record(rec.utterance_id, rec.error));
      ++core.failures;
      continue;
    }
    const auto gold_it = golds.find(rec.utterance_id);
    if (gold_it == golds.end() || gold_it->second.empty()) {
      core.prediction_lines.push_back(
          error_record(rec.utterance_id, "no gold label in manifest"));
      ++core.failures;
      continue;
    }
    const std::string &gold = gold_it->second;

    if (mode == OutputMode::kKeyword) {
      const bool gold_known = gold == kOovLabel || is_command_keyword(gold);
      if (!gold_known) {
        core.prediction_lines.push_back(error_record(
            rec.utterance_id, "gold label '" + gold + "' outside the keyword set"));
        ++core.failures;
        continue;
      }
      ParsedPrediction pred = parse_keyword(rec.raw_text);
      pred.utterance_id = rec.utterance_id;
      nlohmann::ordered_json line;
      line["utterance_id"] = rec.utterance_id;
      line["kind"] = to_string(OutputMode::kKeyword);
      line["keyword"] = pred.keyword;
      line["was_descriptive"] = pred.was_descriptive;
      line["raw_text"] = pred.raw_text;
      core.prediction_lines.push_back(std::move(line));
      core.descriptive += pred.was_descriptive ? 1 : 0;
      ++core.parsed;
      core.keyword_preds.push_back(std::move(pred));
      continue;
    }

    if (gold != "0" && gold != "1") {
      core.prediction_lines.push_back(error_record(
          rec.utterance_id, "gold label '" + gold + "' is not binary"));
      ++core.failures;
      continue;
    }
    const int gold_label = gold == "1" ? 1 : 0;
    if (mode == OutputMode::kBinaryTarget) {
      ParsedPrediction pred = parse_binary(rec.raw_text);
      pred.utterance_id = rec.utterance_id;
      nlohmann::ordered_json line;
      line["utterance_id"] = rec.utterance_id;
      line["kind"] = to_string(OutputMode::kBinaryTarget);
      line["binary_label"] = pred.binary_label;
      line["was_descriptive"] = pred.was_descriptive;
      line["raw_text"] = pred.raw_text;
      core.prediction_lines.push_back(std::move(line));
      core.descriptive += pred.was_descriptive ? 1 : 0;
      ++core.parsed;
      core.scored.push_back(
          {rec.utterance_id, static_cast<double>(pred.binary_label), gold_label});
    } else {
      ParsedPrediction pred = parse_scale(rec.raw_text);
      pred.utterance_id = rec.utterance_id;
      nlohmann::ordered_json line;
      line["utterance_id"] = rec.utterance_id;
      line["kind"] = to_string(OutputMode::kScale0To100);
      line["score"] = pred.score;
      line["was_descriptive"] = pred.was_descriptive;
      line["raw_text"] = pred.raw_text;
      core.prediction_lines.push_back(std::move(line));
      core.descriptive += pred.was_descriptive ? 1 : 0;
      ++core.parsed;
      core.scored.push_back({rec.utterance_id, pred.score, gold_label});
    }
  }
  return core;
}

EvalReport report_from_core(const ScoreCore &core, const RunConfig &config,
                            const std::map<std::string, std::string> &golds,
                            RocCurve *curve_out) {
  const OutputMode mode = effective_output_mode(config);
  EvalReport report;
  if (core.parsed > 0) {
    report.descriptive_fraction =
        static_cast<double>(core.descriptive) / core.parsed;
  }
  try {
    if (mode == OutputMode::kKeyword) {
      const KeywordReport kr = keyword_report(core.keyword_preds, golds);
      report.per_keyword = kr.per_keyword;
      report.total_accuracy = kr.total_accuracy;
    } else if (mode == OutputMode::kBinaryTarget) {
      const auto [tpr, fpr] = binary_rates(core.scored);
      report.tpr = tpr;
      report.fpr = fpr;
    } else {
      const RocCurve curve = roc_curve(core.scored);
      report.eer = eer(curve);
      report.fpr_at_tpr95 = fpr_at_tpr(curve, 0.95);
      report.auc = auc(curve);
      if (curve_out != nullptr) *curve_out = curve;
    }
  } catch (const MetricsError &e) {
    throw PipelineError(std::string("cannot compute the evaluation report: ") +
                        e.what());
  }
  return report;
}

StageResult score_with_report(const std::string &responses_path,
                              const RunConfig &config, const std::string &out_dir,
                              EvalReport *report_out) {
  if (config.manifest_path.empty()) {
    throw PipelineError("scoring requires the manifest path (gold labels)");
  }
  const auto golds = gold_map(load_manifest(config.manifest_path));
  const ScoreCore core = build_score_core(responses_path, config, golds);

  fs::create_directories(out_dir);
  {
    auto out = open_output((fs::path(out_dir) / "predictions.jsonl").generic_string());
    for (const auto &line : core.prediction_lines) out << line.dump() << '\n';
  }

  RocCurve curve;
  const EvalReport report = report_from_core(core, config, golds, &curve);
  write_file((fs::path(out_dir) / "report.json").generic_string(),
             report_to_json(report));
  if (effective_output_mode(config) == OutputMode::kScale0To100) {
    write_file((fs::path(out_dir) / "roc.csv").generic_string(), roc_to_csv(curve));
  }
  if (report_out != nullptr) *report_out = report;

  StageResult result;
  result.total = core.total;
  result.failures = core.failures;
  return result;
}

}  // namespace

StageResult cmd_score(const std::string &responses_path, const RunConfig &config,
                      const std::string &out_dir) {
  return score_with_report(responses_path, config, out_dir, nullptr);
}

StageResult cmd_roc(const std::string &responses_path, const RunConfig &config,
                    const std::string &out_path) {
  if (effective_output_mode(config) != OutputMode::kScale0To100) {
    throw PipelineError("ROC emission requires the 0-100 scale output mode");
  }
  if (config.manifest_path.empty()) {
    throw PipelineError("ROC emission requires the manifest path (gold labels)");
  }
  const auto golds = gold_map(load_manifest(config.manifest_path));
  const ScoreCore core = build_score_core(responses_path, config, golds);
  RocCurve curve;
  try {
    curve = roc_curve(core.scored);
  } catch (const MetricsError &e) {
    throw PipelineError(std::string("cannot compute the ROC curve: ") + e.what());
  }
  write_file(out_path, roc_to_csv(curve));
  StageResult result;
  result.total = core.total;
  result.failures = core.failures;
  return result;
}

StageResult cmd_synth(const RunConfig &config, const std::string &out_dir) {
  const ChannelConfig channel = resolve_channel_config(config);
  const auto corpus = generate_corpus(channel, config.size);

  const fs::path root(out_dir);
  fs::create_directories(root / "lattices");
  write_file((root / "channel_config.json").generic_string(),
             channel_config_to_json(channel));

  auto manifest = open_output((root / "manifest.jsonl").generic_string());
  for (const auto &utt : corpus) {
    const std::string rel = "lattices/" + utt.utterance_id + ".json";
    write_file((root / rel).generic_string(),
               serialize_lattice(utt.lattice) + "\n");
    nlohmann::ordered_json line;
    line["utterance_id"] = utt.utterance_id;
    line["gold"] = utt.gold_label;
    line["reference"] = join_words(utt.reference_words);
    line["lattice_path"] = rel;
    manifest << line.dump() << '\n';
  }

  StageResult result;
  result.total = static_cast<int>(corpus.size());
  return result;
}

// ---------------------------------------------------------------------------
// End-to-end sweep

E2eSummary cmd_e2e(const RunConfig &config, const std::string &out_dir) {
  if (config.backend == BackendKind::kHttp) {
    throw PipelineError("the e2e sweep requires an offline backend (oracle or fixture)");
  }
  if (config.ladder.empty()) {
    throw PipelineError("the e2e ladder must contain at least one n value");
  }
  std::vector<int> ladder = config.ladder;
  std::sort(ladder.begin(), ladder.end());
  ladder.erase(std::unique(ladder.begin(), ladder.end()), ladder.end());
  if (ladder.front() < 1) throw PipelineError("ladder n values must be >= 1");

  RunConfig base = config;
  base.task = resolve_channel_config(config).task;

  cmd_synth(base, out_dir);
  const fs::path root(out_dir);
  const std::string manifest = (root / "manifest.jsonl").generic_string();

  E2eSummary summary;
  for (int n : ladder) {
    const fs::path sub = root / ("n" + std::to_string(n));
    RunConfig stage = base;
    stage.n = n;
    stage.manifest_path = manifest;
    stage.nbest_path = (sub / "nbest.jsonl").generic_string();

    const StageResult nbest_res =
        cmd_nbest(manifest, n, stage.nbest_path);
    const StageResult prompt_res = cmd_prompt(
        stage.nbest_path, stage, (sub / "prompts.jsonl").generic_string());
    const StageResult infer_res = cmd_infer(
        (sub / "prompts.jsonl").generic_string(), stage,
        (sub / "responses.jsonl").generic_string());
    E2eRow row;
    row.n = n;
    const StageResult score_res =
        score_with_report((sub / "responses.jsonl").generic_string(), stage,
                          sub.generic_string(), &row.report);
    summary.failures += nbest_res.failures + prompt_res.failures +
                        infer_res.failures + score_res.failures;
    summary.rows.push_back(std::move(row));
  }

  const E2eRow &first = summary.rows.front();
  const E2eRow &last = summary.rows.back();
  E2eVerdict verdict;
  bool higher_is_better = true;
  switch (effective_output_mode(base)) {
    case OutputMode::kKeyword:
      verdict.metric = "total_accuracy";
      verdict.n1_value = first.report.total_accuracy.value_or(0.0);
      verdict.nmax_value = last.report.total_accuracy.value_or(0.0);
      break;
    case OutputMode::kScale0To100:
      verdict.metric = "eer";
      verdict.n1_value = first.report.eer.value_or(1.0);
      verdict.nmax_value = last.report.eer.value_or(1.0);
      higher_is_better = false;
      break;
    case OutputMode::kBinaryTarget:
      verdict.metric = "balanced_accuracy";
      verdict.n1_value = (first.report.tpr.value_or(0.0) +
                          (1.0 - first.report.fpr.value_or(1.0))) /
                         2.0;
      verdict.nmax_value = (last.report.tpr.value_or(0.0) +
                            (1.0 - last.report.fpr.value_or(1.0))) /
                           2.0;
      break;
  }
  if (verdict.nmax_value == verdict.n1_value) {
    verdict.better = "tie";
  } else if ((verdict.nmax_value > verdict.n1_value) == higher_is_better) {
    verdict.better = "n_best";
  } else {
    verdict.better = "one_best";
  }
  summary.verdict = verdict;

  RunConfig summary_cfg = base;
  summary_cfg.ladder = ladder;
  write_file((root / "summary.json").generic_string(),
             summary_to_json(summary, summary_cfg));
  return summary;
}

std::string summary_to_json(const E2eSummary &summary, const RunConfig &config) {
  nlohmann::ordered_json doc;
  doc["task"] = to_string(config.task);
  doc["output_mode"] = to_string(effective_output_mode(config));
  doc["size"] = config.size;
  doc["seed"] = config.seed;
  doc["ladder"] = config.ladder;
  auto rows = nlohmann::ordered_json::array();
  for (const auto &row : summary.rows) {
    nlohmann::ordered_json entry;
    entry["n"] = row.n;
    entry["report"] = nlohmann::ordered_json::parse(report_to_json(row.report));
    rows.push_back(std::move(entry));
  }
  doc["rows"] = std::move(rows);
  nlohmann::ordered_json verdict;
  verdict["metric"] = summary.verdict.metric;
  verdict["n1_value"] = summary.verdict.n1_value;
  verdict["nmax_value"] = summary.verdict.nmax_value;
  verdict["better"] = summary.verdict.better;
  doc["verdict"] = std::move(verdict);
  doc["failures"] = summary.failures;
  return doc.dump(2) + "\n";
}

}  // namespace slu
