#ifndef SLU_LATTICE_HPP
#define SLU_LATTICE_HPP

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace slu {

/// Error raised for malformed or structurally invalid lattices. The message
/// names the offending node or arc where one exists.
class LatticeError : public std::runtime_error {
 public:
  explicit LatticeError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Directed arc between two lattice nodes. An empty word is an epsilon arc:
/// it contributes cost but no token to the hypothesis.
struct Arc {
  int from = 0;
  int to = 0;
  std::string word;     // empty = epsilon
  double am_cost = 0.0; // acoustic-model cost, log domain
  double lm_cost = 0.0; // language-model cost, log domain

  double total_cost() const { return am_cost + lm_cost; }
};

/// Word lattice produced by a beam-search ASR decoder. Nodes are implied by
/// arc endpoints plus `start` and `finals`. Valid lattices are acyclic with
/// every node on some start-to-final path; `validate()` enforces this.
struct Lattice {
  std::string utterance_id;
  int start = 0;
  std::vector<int> finals;
  std::vector<Arc> arcs;

  bool is_final(int node) const;
  /// All node ids (arc endpoints plus start and finals), sorted, deduplicated.
  std::vector<int> node_ids() const;
  /// Throws LatticeError on cycles, unreachable nodes or empty finals.
  void validate() const;
};

/// One transcription hypothesis: the word sequence of a start-to-final path
/// (epsilon arcs elided) and the total arc cost along it. Lower cost means
/// the ASR is more confident.
struct Hypothesis {
  std::vector<std::string> words;
  double cost = 0.0;

  std::string text() const;  // words joined by single spaces
};

/// The n least-cost paths of a lattice, ascending by cost. May hold fewer
/// than `n_requested` hypotheses if the lattice has fewer paths, and may
/// hold duplicate word sequences at different costs.
struct NBestList {
  std::string utterance_id;
  std::vector<Hypothesis> hypotheses;
  int n_requested = 1;
};

/// Parses the JSON lattice document and validates the result.
/// Schema: {"utterance_id": str, "start": int, "finals": [int],
///          "arcs": [{"from": int, "to": int, "word": str,
///                    "am_cost": num, "lm_cost": num}]}
Lattice load_lattice(const std::string &bytes);

/// Serializes back to the interchange schema. load_lattice(serialize_lattice(L))
/// reproduces L arc-for-arc.
std::string serialize_lattice(const Lattice &lattice);

/// Minimum-cost start-to-final path. Equals extract_nbest(lattice, 1) front.
Hypothesis one_best(const Lattice &lattice);

/// The n globally least-cost paths, ascending by cost. Equal-cost paths are
/// ordered lexicographically by word sequence, then by arc-index sequence.
/// With dedupe set, repeated word sequences keep only their cheapest path.
NBestList extract_nbest(const Lattice &lattice, int n, bool dedupe = false);

/// Sum of am+lm costs over a connected start-to-final arc-index path.
/// An empty path is valid (cost 0) only when start is itself final.
double hypothesis_cost(const Lattice &lattice, std::span<const int> arc_indices);

}  // namespace slu

#endif  // SLU_LATTICE_HPP
