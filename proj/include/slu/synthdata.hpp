#ifndef SLU_SYNTHDATA_HPP
#define SLU_SYNTHDATA_HPP

#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "slu/lattice.hpp"
#include "slu/types.hpp"

namespace slu {

class SynthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Deterministic random stream: mt19937_64 plus hand-rolled transforms, so
/// the same seed yields the same corpus on every platform (the std::*
/// distributions are not portable across standard libraries).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01();
  double uniform(double lo, double hi);
  /// Gaussian via Box-Muller (mean 0).
  double normal(double sigma);
  /// Index weighted by `weights` (need not be normalized).
  std::size_t weighted_index(const std::vector<double> &weights);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// One alternative a word may be misrecognized as, with its probability.
using ConfusionRow = std::vector<std::pair<std::string, double>>;

/// Noisy-channel description: per-word confusion rows (self-probability is
/// the remainder to 1), word deletion/insertion rates, Gaussian cost noise
/// and the n-best width to extract.
struct ChannelConfig {
  std::uint64_t seed = 0;
  Task task = Task::kKs;
  std::vector<std::string> vocabulary;
  std::map<std::string, ConfusionRow> confusion;
  double deletion_prob = 0.0;
  double insertion_prob = 0.0;
  double cost_noise_sigma = 0.0;
  int n_paths = 16;

  /// Throws SynthError on a degenerate or inconsistent config.
  void validate() const;
};

ChannelConfig channel_config_from_json(const std::string &text);
ChannelConfig load_channel_config(const std::string &path);
std::string channel_config_to_json(const ChannelConfig &config);

/// Multiply every confusion probability by `factor` (for degradation
/// ladders); the result is validated.
ChannelConfig scale_confusion(const ChannelConfig &config, double factor);

struct SyntheticUtterance {
  std::string utterance_id;
  std::string gold_label;  // "1"/"0" for DDSD, keyword or "OOV" for KS
  std::vector<std::string> reference_words;
  Lattice lattice;
  NBestList nbest;
};

/// Deterministic given config.seed. Reference utterances are drawn from the
/// vocabulary (KS: single words, command keywords oversampled) or from the
/// built-in sentence templates (DDSD: device-directed and human-directed
/// alternate strictly). Every reference sequence survives as a lattice path.
std::vector<SyntheticUtterance> generate_corpus(const ChannelConfig &config,
                                                int size);

/// Word error rate: minimum edit distance over reference length. Throws
/// SynthError on an empty reference.
double wer(const std::vector<std::string> &hypothesis,
           const std::vector<std::string> &reference);

/// Shipped defaults: seed 42, ~30% per-word substitution mass (KS) and the
/// cue-bearing sentence channel (DDSD).
ChannelConfig builtin_ks_config();
ChannelConfig builtin_ddsd_config();

const std::vector<std::string> &ddsd_directed_templates();
const std::vector<std::string> &ddsd_human_templates();

}  // namespace slu

#endif  // SLU_SYNTHDATA_HPP
