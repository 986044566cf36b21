#include "slu/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "slu/parsing.hpp"

namespace slu {

// ---------------------------------------------------------------------------
// Rng

double Rng::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

double Rng::normal(double sigma) {
  if (sigma == 0.0) return 0.0;
  if (has_spare_) {
    has_spare_ = false;
    return spare_ * sigma;
  }
  constexpr double kPi = 3.14159265358979323846;
  const double u1 = 1.0 - uniform01();  // (0, 1]: keeps log finite
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * kPi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta) * sigma;
}

std::size_t Rng::weighted_index(const std::vector<double> &weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw SynthError("weighted_index: weights sum to zero");
  double u = uniform01() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0.0) return i;
  }
  return weights.size() - 1;
}

// ---------------------------------------------------------------------------
// Config

namespace {

// Share of the blended slot mass kept by the reference word when the channel
// emits something else; the rest goes to the observed word.
constexpr double kTruthShareLo = 0.25;
constexpr double kTruthShareHi = 0.40;
// Arbitrary split of -log p between acoustic and language model cost.
constexpr double kAmShare = 0.7;

const std::vector<std::string> &insertion_fillers() {
  static const std::vector<std::string> fillers = {"uh", "um"};
  return fillers;
}

std::vector<std::string> split_words(const std::string &text) {
  std::vector<std::string> words;
  std::istringstream in(text);
  std::string word;
  while (in >> word) words.push_back(word);
  return words;
}

double row_mass(const ConfusionRow &row) {
  double sum = 0.0;
  for (const auto &[word, p] : row) {
    (void)word;
    sum += p;
  }
  return sum;
}

}  // namespace

void ChannelConfig::validate() const {
  if (vocabulary.empty()) {
    throw SynthError("degenerate channel config: empty vocabulary");
  }
  std::set<std::string> vocab;
  for (const auto &word : vocabulary) {
    if (word.empty()) throw SynthError("channel config: empty vocabulary word");
    if (!vocab.insert(word).second) {
      throw SynthError("channel config: duplicate vocabulary word '" + word + "'");
    }
  }
  if (!(deletion_prob >= 0.0 && deletion_prob < 1.0)) {
    throw SynthError("channel config: deletion_prob must be in [0, 1)");
  }
  if (!(insertion_prob >= 0.0 && insertion_prob < 1.0)) {
    throw SynthError("channel config: insertion_prob must be in [0, 1)");
  }
  if (!(cost_noise_sigma >= 0.0) || !std::isfinite(cost_noise_sigma)) {
    throw SynthError("channel config: cost_noise_sigma must be finite and >= 0");
  }
  if (n_paths < 1) throw SynthError("channel config: n_paths must be >= 1");
  for (const auto &[word, row] : confusion) {
    if (!vocab.count(word)) {
      throw SynthError("channel config: confusion row for '" + word +
                       "' which is not in the vocabulary");
    }
    double sum = 0.0;
    for (const auto &[alt, p] : row) {
      if (!vocab.count(alt)) {
        throw SynthError("channel config: confusion alternative '" + alt +
                         "' (for '" + word + "') is not in the vocabulary");
      }
      if (alt == word) {
        throw SynthError("channel config: confusion row for '" + word +
                         "' lists the word itself");
      }
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw SynthError("channel config: negative or non-finite confusion probability");
      }
      sum += p;
    }
    // Keep a strictly positive self-probability so the reference word always
    // survives as a lattice arc.
    if (sum > 1.0 - 1e-6) {
      throw SynthError("channel config: confusion row for '" + word +
                       "' leaves no self-probability");
    }
  }
}

ChannelConfig channel_config_from_json(const std::string &text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw SynthError(std::string("channel config is not valid JSON: ") + e.what());
  }
  ChannelConfig cfg;
  try {
    cfg.seed = doc.at("seed").get<std::uint64_t>();
    cfg.task = task_from_string(doc.at("task").get<std::string>());
    for (const auto &word : doc.at("vocabulary")) {
      cfg.vocabulary.push_back(word.get<std::string>());
    }
    if (doc.contains("confusion")) {
      for (const auto &[word, row] : doc.at("confusion").items()) {
        ConfusionRow parsed;
        for (const auto &entry : row) {
          parsed.emplace_back(entry.at(0).get<std::string>(),
                              entry.at(1).get<double>());
        }
        cfg.confusion.emplace(word, std::move(parsed));
      }
    }
    cfg.deletion_prob = doc.value("deletion_prob", 0.0);
    cfg.insertion_prob = doc.value("insertion_prob", 0.0);
    cfg.cost_noise_sigma = doc.value("cost_noise_sigma", 0.0);
    cfg.n_paths = doc.value("n_paths", 16);
  } catch (const nlohmann::json::exception &e) {
    throw SynthError(std::string("channel config has an invalid shape: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ChannelConfig load_channel_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw SynthError("cannot open channel config: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return channel_config_from_json(buffer.str());
}

std::string channel_config_to_json(const ChannelConfig &config) {
  nlohmann::ordered_json doc;
  doc["seed"] = config.seed;
  doc["task"] = to_string(config.task);
  doc["vocabulary"] = config.vocabulary;
  nlohmann::ordered_json confusion = nlohmann::ordered_json::object();
  for (const auto &[word, row] : config.confusion) {
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    for (const auto &[alt, p] : row) {
      entries.push_back(nlohmann::ordered_json::array({alt, p}));
    }
    confusion[word] = std::move(entries);
  }
  doc["confusion"] = std::move(confusion);
  doc["deletion_prob"] = config.deletion_prob;
  doc["insertion_prob"] = config.insertion_prob;
  doc["cost_noise_sigma"] = config.cost_noise_sigma;
  doc["n_paths"] = config.n_paths;
  return doc.dump(2) + "\n";
}

ChannelConfig scale_confusion(const ChannelConfig &config, double factor) {
  if (!(factor >= 0.0) || !std::isfinite(factor)) {
    throw SynthError("scale_confusion: factor must be finite and >= 0");
  }
  ChannelConfig scaled = config;
  for (auto &[word, row] : scaled.confusion) {
    (void)word;
    for (auto &[alt, p] : row) {
      (void)alt;
      p *= factor;
    }
  }
  scaled.validate();
  return scaled;
}

// ---------------------------------------------------------------------------
// Generation

namespace {

struct SlotArc {
  std::string word;  // empty = epsilon
  double prob = 0.0;
};

double self_probability(const ChannelConfig &cfg, const std::string &word) {
  const auto it = cfg.confusion.find(word);
  if (it == cfg.confusion.end()) return 1.0;
  return 1.0 - row_mass(it->second);
}

void sort_slot(std::vector<SlotArc> &slot) {
  std::sort(slot.begin(), slot.end(), [](const SlotArc &a, const SlotArc &b) {
    if (a.prob != b.prob) return a.prob > b.prob;
    return a.word < b.word;
  });
}

// Emission distribution for one reference word: the channel samples what the
// recognizer "heard", and a substitution blends the truth/observed masses so
// the truth stays in the lattice with a posterior share in
// [kTruthShareLo, kTruthShareHi].
std::vector<SlotArc> make_slot(const ChannelConfig &cfg, const std::string &ref,
                               Rng &rng) {
  const ConfusionRow *row = nullptr;
  const auto it = cfg.confusion.find(ref);
  if (it != cfg.confusion.end()) row = &it->second;
  const double self = self_probability(cfg, ref);

  std::vector<SlotArc> slot;
  if (cfg.deletion_prob > 0.0 && rng.uniform01() < cfg.deletion_prob) {
    const double w = rng.uniform(kTruthShareLo, kTruthShareHi);
    slot.push_back({"", (1.0 - w) * self});
    slot.push_back({ref, w * self});
    if (row != nullptr) {
      for (const auto &[alt, p] : *row) {
        if (p > 0.0) slot.push_back({alt, p});
      }
    }
    sort_slot(slot);
    return slot;
  }

  std::string observed = ref;
  double observed_p = 0.0;
  if (row != nullptr) {
    double u = rng.uniform01();
    for (const auto &[alt, p] : *row) {
      if (u < p) {
        observed = alt;
        observed_p = p;
        break;
      }
      u -= p;
    }
  }

  if (observed == ref) {
    slot.push_back({ref, self});
    if (row != nullptr) {
      for (const auto &[alt, p] : *row) {
        if (p > 0.0) slot.push_back({alt, p});
      }
    }
  } else {
    const double m = self + observed_p;
    const double w = rng.uniform(kTruthShareLo, kTruthShareHi);
    slot.push_back({observed, (1.0 - w) * m});
    slot.push_back({ref, w * m});
    for (const auto &[alt, p] : *row) {
      if (alt != observed && p > 0.0) slot.push_back({alt, p});
    }
  }
  sort_slot(slot);
  return slot;
}

std::vector<SlotArc> make_insertion_slot(Rng &rng) {
  const auto &fillers = insertion_fillers();
  const std::string &filler =
      fillers[rng.uniform01() < 0.5 ? 0 : 1];
  const double eps_share = rng.uniform(kTruthShareLo, kTruthShareHi);
  std::vector<SlotArc> slot = {{filler, 1.0 - eps_share}, {"", eps_share}};
  sort_slot(slot);
  return slot;
}

std::string make_utterance_id(Task task, int index) {
  std::ostringstream os;
  os << (task == Task::kKs ? "ks-" : "ddsd-") << std::setw(6)
     << std::setfill('0') << index;
  return os.str();
}

struct Reference {
  std::string gold;
  std::vector<std::string> words;
};

}  // namespace

const std::vector<std::string> &ddsd_directed_templates() {
  static const std::vector<std::string> templates = {
      "play some jazz music",
      "set a timer for ten minutes",
      "what's the weather today",
      "turn on the lights",
      "turn off the alarm",
      "call my mother now",
      "remind me to stretch",
      "search for pasta recipes",
      "volume up please",
      "how far is the airport",
  };
  return templates;
}

const std::vector<std::string> &ddsd_human_templates() {
  static const std::vector<std::string> templates = {
      "i saw her yesterday",
      "that movie was great",
      "he never calls back",
      "we should leave soon",
      "the food tastes amazing",
      "she bought a new car",
      "they arrived late again",
      "my back hurts today",
      "it rained all morning",
      "this coffee is cold",
  };
  return templates;
}

std::vector<SyntheticUtterance> generate_corpus(const ChannelConfig &config,
                                                int size) {
  config.validate();
  if (size < 0) throw SynthError("generate_corpus: negative corpus size");

  const std::set<std::string> vocab(config.vocabulary.begin(),
                                    config.vocabulary.end());
  if (config.task == Task::kDdsd) {
    for (const auto &bank : {ddsd_directed_templates(), ddsd_human_templates()}) {
      for (const auto &tmpl : bank) {
        for (const auto &word : split_words(tmpl)) {
          if (!vocab.count(word)) {
            throw SynthError("channel config vocabulary is missing template word '" +
                             word + "'");
          }
        }
      }
    }
  }
  if (config.insertion_prob > 0.0) {
    for (const auto &filler : insertion_fillers()) {
      if (!vocab.count(filler)) {
        throw SynthError("channel config vocabulary is missing insertion filler '" +
                         filler + "'");
      }
    }
  }

  Rng rng(config.seed);
  std::vector<double> ks_weights;
  if (config.task == Task::kKs) {
    ks_weights.reserve(config.vocabulary.size());
    for (const auto &word : config.vocabulary) {
      ks_weights.push_back(is_command_keyword(word) ? 8.0 : 1.0);
    }
  }

  std::vector<SyntheticUtterance> corpus;
  corpus.reserve(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) {
    Reference ref;
    if (config.task == Task::kKs) {
      const auto &word = config.vocabulary[rng.weighted_index(ks_weights)];
      ref.gold = is_command_keyword(word) ? word : kOovLabel;
      ref.words = {word};
    } else {
      const bool directed = (i % 2) == 0;
      const auto &bank =
          directed ? ddsd_directed_templates() : ddsd_human_templates();
      auto pick = static_cast<std::size_t>(rng.uniform01() *
                                           static_cast<double>(bank.size()));
      pick = std::min(pick, bank.size() - 1);
      ref.gold = directed ? "1" : "0";
      ref.words = split_words(bank[pick]);
    }

    std::vector<std::vector<SlotArc>> slots;
    for (const auto &word : ref.words) {
      slots.push_back(make_slot(config, word, rng));
      if (config.insertion_prob > 0.0 &&
          rng.uniform01() < config.insertion_prob) {
        slots.push_back(make_insertion_slot(rng));
      }
    }

    Lattice lattice;
    lattice.utterance_id = make_utterance_id(config.task, i);
    lattice.start = 0;
    lattice.finals = {static_cast<int>(slots.size())};
    for (std::size_t j = 0; j < slots.size(); ++j) {
      for (const auto &arc : slots[j]) {
        const double total =
            -std::log(arc.prob) + rng.normal(config.cost_noise_sigma);
        lattice.arcs.push_back({static_cast<int>(j), static_cast<int>(j) + 1,
                                arc.word, kAmShare * total,
                                (1.0 - kAmShare) * total});
      }
    }
    lattice.validate();

    SyntheticUtterance utt;
    utt.utterance_id = lattice.utterance_id;
    utt.gold_label = ref.gold;
    utt.reference_words = ref.words;
    utt.nbest = extract_nbest(lattice, config.n_paths);
    utt.lattice = std::move(lattice);
    corpus.push_back(std::move(utt));
  }
  return corpus;
}

double wer(const std::vector<std::string> &hypothesis,
           const std::vector<std::string> &reference) {
  if (reference.empty()) throw SynthError("wer: empty reference");
  const std::size_t h = hypothesis.size();
  const std::size_t r = reference.size();
  std::vector<std::vector<int>> dp(h + 1, std::vector<int>(r + 1, 0));
  for (std::size_t i = 0; i <= h; ++i) dp[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= r; ++j) dp[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= h; ++i) {
    for (std::size_t j = 1; j <= r; ++j) {
      const int sub = dp[i - 1][j - 1] + (hypothesis[i - 1] == reference[j - 1] ? 0 : 1);
      dp[i][j] = std::min({sub, dp[i - 1][j] + 1, dp[i][j - 1] + 1});
    }
  }
  return static_cast<double>(dp[h][r]) / static_cast<double>(r);
}

// ---------------------------------------------------------------------------
// Shipped configs

ChannelConfig builtin_ks_config() {
  ChannelConfig cfg;
  cfg.seed = 42;
  cfg.task = Task::kKs;
  cfg.deletion_prob = 0.0;
  cfg.insertion_prob = 0.0;
  cfg.cost_noise_sigma = 0.15;
  cfg.n_paths = 16;

  // Phonetically plausible confusions for the command keywords; every row
  // carries 0.30 total substitution mass.
  cfg.confusion["yes"] = {{"yeah", 0.14}, {"guess", 0.10}, {"chess", 0.06}};
  cfg.confusion["no"] = {{"know", 0.16}, {"now", 0.09}, {"go", 0.05}};
  cfg.confusion["up"] = {{"cup", 0.15}, {"app", 0.10}, {"oh", 0.05}};
  cfg.confusion["down"] = {{"dawn", 0.16}, {"town", 0.09}, {"gown", 0.05}};
  cfg.confusion["left"] = {{"lift", 0.16}, {"theft", 0.08}, {"laughed", 0.06}};
  cfg.confusion["right"] = {{"write", 0.14}, {"light", 0.10}, {"ride", 0.06}};
  cfg.confusion["on"] = {{"in", 0.14}, {"an", 0.09}, {"own", 0.07}};
  cfg.confusion["off"] = {{"of", 0.16}, {"cough", 0.09}, {"up", 0.05}};
  cfg.confusion["stop"] = {{"shop", 0.15}, {"top", 0.10}, {"stuck", 0.05}};
  cfg.confusion["go"] = {{"goes", 0.14}, {"gold", 0.10}, {"no", 0.06}};

  // Out-of-vocabulary pool: confusion alternatives above plus a handful of
  // auxiliary words; each gets a generic 0.30-mass row over its neighbors so
  // corpus WER tracks the substitution mass regardless of the drawn word.
  const std::vector<std::string> fillers = {
      "know",  "now",    "yeah",   "guess", "chess",  "cup",   "app",
      "oh",    "dawn",   "town",   "gown",  "lift",   "theft", "laughed",
      "write", "light",  "ride",   "in",    "an",     "own",   "of",
      "cough", "shop",   "top",    "stuck", "goes",   "gold",  "five",
      "hive",  "dive",   "marvin", "martin", "sheila", "shell", "bed",
      "bad",   "wow",    "vow",    "tree",  "three",  "bird",  "bard",
      "house", "mouse",  "happy",  "happen"};
  const std::size_t n = fillers.size();
  for (std::size_t i = 0; i < n; ++i) {
    cfg.confusion[fillers[i]] = {{fillers[(i + 1) % n], 0.14},
                                 {fillers[(i + 2) % n], 0.10},
                                 {fillers[(i + 3) % n], 0.06}};
  }

  cfg.vocabulary.assign(kCommandKeywords.begin(), kCommandKeywords.end());
  cfg.vocabulary.insert(cfg.vocabulary.end(), fillers.begin(), fillers.end());
  cfg.validate();
  return cfg;
}

ChannelConfig builtin_ddsd_config() {
  ChannelConfig cfg;
  cfg.seed = 42;
  cfg.task = Task::kDdsd;
  cfg.deletion_prob = 0.03;
  cfg.insertion_prob = 0.02;
  cfg.cost_noise_sigma = 0.15;
  cfg.n_paths = 16;

  // Cue-destroying confusions (device-directed side) ...
  cfg.confusion["play"] = {{"pay", 0.14}, {"clay", 0.08}};
  cfg.confusion["timer"] = {{"time", 0.14}, {"tiger", 0.06}};
  cfg.confusion["what's"] = {{"watts", 0.13}, {"once", 0.07}};
  cfg.confusion["turn"] = {{"torn", 0.13}, {"tan", 0.07}};
  cfg.confusion["call"] = {{"fall", 0.12}, {"wall", 0.08}};
  cfg.confusion["remind"] = {{"rewind", 0.13}, {"remand", 0.07}};
  cfg.confusion["search"] = {{"birch", 0.12}, {"church", 0.08}};
  cfg.confusion["volume"] = {{"column", 0.12}, {"volumes", 0.08}};
  cfg.confusion["far"] = {{"fur", 0.12}, {"car", 0.08}};
  // ... cue-creating confusions (human side) ...
  cfg.confusion["calls"] = {{"call", 0.12}, {"walls", 0.06}};
  cfg.confusion["was"] = {{"what's", 0.10}, {"wars", 0.06}};
  // ... and neutral noise on other content words.
  cfg.confusion["weather"] = {{"whether", 0.15}};
  cfg.confusion["lights"] = {{"likes", 0.12}};
  cfg.confusion["alarm"] = {{"alarms", 0.12}};
  cfg.confusion["music"] = {{"muse", 0.10}};
  cfg.confusion["jazz"] = {{"jars", 0.10}};
  cfg.confusion["mother"] = {{"other", 0.12}};
  cfg.confusion["airport"] = {{"airports", 0.10}};
  cfg.confusion["minutes"] = {{"minute", 0.12}};
  cfg.confusion["coffee"] = {{"copy", 0.12}};
  cfg.confusion["morning"] = {{"mourning", 0.12}};
  cfg.confusion["yesterday"] = {{"tuesday", 0.10}};
  cfg.confusion["amazing"] = {{"amusing", 0.12}};
  cfg.confusion["great"] = {{"grate", 0.12}};
  cfg.confusion["late"] = {{"light", 0.10}};
  cfg.confusion["car"] = {{"card", 0.10}};
  cfg.confusion["soon"] = {{"noon", 0.12}};
  cfg.confusion["bought"] = {{"brought", 0.10}};
  cfg.confusion["tastes"] = {{"taste", 0.10}};
  cfg.confusion["rained"] = {{"reigned", 0.12}};
  cfg.confusion["hurts"] = {{"hurt", 0.10}};
  cfg.confusion["arrived"] = {{"arrive", 0.10}};
  cfg.confusion["leave"] = {{"leaf", 0.08}};

  std::set<std::string> vocab;
  for (const auto &bank : {ddsd_directed_templates(), ddsd_human_templates()}) {
    for (const auto &tmpl : bank) {
      for (const auto &word : split_words(tmpl)) vocab.insert(word);
    }
  }
  for (const auto &[word, row] : cfg.confusion) {
    vocab.insert(word);
    for (const auto &[alt, p] : row) {
      (void)p;
      vocab.insert(alt);
    }
  }
  for (const auto &filler : insertion_fillers()) vocab.insert(filler);
  cfg.vocabulary.assign(vocab.begin(), vocab.end());
  cfg.validate();
  return cfg;
}

}  // namespace slu
