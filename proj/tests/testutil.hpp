// Shared test helpers: independent brute-force oracles for n-best extraction
// and ROC metrics, a seeded random-lattice generator, and small file/fixture
// utilities. The oracles here are intentionally naive re-derivations of the
// contracts, kept separate from the library implementations they check.

#ifndef SLU_TESTS_TESTUTIL_HPP
#define SLU_TESTS_TESTUTIL_HPP

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "slu/lattice.hpp"
#include "slu/metrics.hpp"
#include "slu/synthdata.hpp"

namespace testutil {

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("testutil: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_file(const std::string &path, const std::string &content) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("testutil: cannot write " + path);
  out << content;
}

/// Self-deleting scratch directory under the system temp root.
class TempDir {
 public:
  explicit TempDir(const std::string &tag = "slu-test") {
    const auto base = std::filesystem::temp_directory_path();
    for (int i = 0; i < 100000; ++i) {
      auto candidate = base / (tag + "-" + std::to_string(::getpid()) + "-" +
                               std::to_string(counter_++));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("TempDir: cannot create a unique directory");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  const std::filesystem::path &path() const { return path_; }
  std::string str(const std::string &rel = "") const {
    return rel.empty() ? path_.generic_string() : (path_ / rel).generic_string();
  }

 private:
  inline static int counter_ = 0;
  std::filesystem::path path_;
};

// ---------------------------------------------------------------------------
// N-best oracle: exhaustive enumerate-sort-truncate

struct BrutePath {
  double cost = 0.0;
  std::vector<std::string> words;
  std::vector<int> arc_seq;

  bool operator<(const BrutePath &o) const {
    if (cost != o.cost) return cost < o.cost;
    if (words != o.words) return words < o.words;
    return arc_seq < o.arc_seq;
  }
};

/// Every start-to-final path, sorted by (cost, words, arc-index sequence).
/// Costs accumulate left to right along the path, one arc at a time.
inline std::vector<BrutePath> enumerate_paths(const slu::Lattice &lat) {
  std::map<int, std::vector<int>> out;
  for (std::size_t i = 0; i < lat.arcs.size(); ++i) {
    out[lat.arcs[i].from].push_back(static_cast<int>(i));
  }
  std::vector<BrutePath> found;
  std::vector<int> arcs;
  std::function<void(int, double)> walk = [&](int node, double cost) {
    if (lat.is_final(node)) {
      BrutePath p;
      p.cost = cost;
      p.arc_seq = arcs;
      for (int ai : arcs) {
        if (!lat.arcs[ai].word.empty()) p.words.push_back(lat.arcs[ai].word);
      }
      found.push_back(std::move(p));
    }
    const auto it = out.find(node);
    if (it == out.end()) return;
    for (int ai : it->second) {
      arcs.push_back(ai);
      walk(lat.arcs[ai].to, cost + lat.arcs[ai].total_cost());
      arcs.pop_back();
    }
  };
  walk(lat.start, 0.0);
  std::sort(found.begin(), found.end());
  return found;
}

inline slu::NBestList brute_force_nbest(const slu::Lattice &lat, int n,
                                        bool dedupe = false) {
  slu::NBestList out;
  out.utterance_id = lat.utterance_id;
  out.n_requested = n;
  std::set<std::vector<std::string>> seen;
  for (auto &p : enumerate_paths(lat)) {
    if (static_cast<int>(out.hypotheses.size()) >= n) break;
    if (dedupe && !seen.insert(p.words).second) continue;
    out.hypotheses.push_back({std::move(p.words), p.cost});
  }
  return out;
}

inline bool same_nbest(const slu::NBestList &a, const slu::NBestList &b) {
  if (a.hypotheses.size() != b.hypotheses.size()) return false;
  for (std::size_t i = 0; i < a.hypotheses.size(); ++i) {
    if (a.hypotheses[i].cost != b.hypotheses[i].cost) return false;
    if (a.hypotheses[i].words != b.hypotheses[i].words) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Random DAG generator (always yields a valid lattice, <= 8 nodes, <= 20 arcs)

inline slu::Lattice random_dag(slu::Rng &rng, int index) {
  static const std::vector<std::string> vocab = {"a", "b", "c", "d", "e"};
  const int m = 2 + static_cast<int>(rng.uniform01() * 7.0);  // 2..8 nodes

  slu::Lattice lat;
  lat.utterance_id = "rand-" + std::to_string(index);
  lat.start = 0;
  lat.finals = {m - 1};

  auto rand_int = [&rng](int lo, int hi) {  // inclusive bounds
    const int v = lo + static_cast<int>(rng.uniform01() * (hi - lo + 1));
    return std::min(v, hi);
  };
  // Coarse cost grid so equal-cost paths (tie-break coverage) are common.
  auto add_arc = [&](int from, int to) {
    slu::Arc a;
    a.from = from;
    a.to = to;
    if (rng.uniform01() >= 0.15) a.word = vocab[rand_int(0, 4)];
    a.am_cost = 0.5 * rand_int(-4, 4);
    a.lm_cost = 0.5 * rand_int(-2, 2);
    lat.arcs.push_back(std::move(a));
  };

  // Skeleton: every node gets an in-arc from a lower node and an out-arc to a
  // higher one, so the forward-only DAG is fully on start-to-final paths.
  for (int v = 1; v < m; ++v) add_arc(rand_int(0, v - 1), v);
  std::vector<char> has_out(m, 0);
  for (const auto &a : lat.arcs) has_out[a.from] = 1;
  for (int v = 0; v + 1 < m; ++v) {
    if (!has_out[v]) add_arc(v, rand_int(v + 1, m - 1));
  }

  const int room = 20 - static_cast<int>(lat.arcs.size());
  const int extra = room > 0 ? rand_int(0, room) : 0;
  for (int i = 0; i < extra; ++i) {
    const int from = rand_int(0, m - 2);
    add_arc(from, rand_int(from + 1, m - 1));
  }

  if (m >= 3 && rng.uniform01() < 0.25) lat.finals.push_back(rand_int(1, m - 2));
  if (rng.uniform01() < 0.10) lat.finals.push_back(0);  // empty path exists

  lat.validate();
  return lat;
}

// ---------------------------------------------------------------------------
// ROC oracle: per-threshold recount over the raw examples

inline slu::RocCurve brute_roc(const std::vector<slu::ScoredExample> &examples) {
  int pos = 0;
  int neg = 0;
  for (const auto &e : examples) (e.gold == 1 ? pos : neg)++;
  if (pos == 0 || neg == 0) {
    throw std::runtime_error("brute_roc: need both gold classes");
  }
  std::vector<double> thresholds;
  thresholds.reserve(examples.size());
  for (const auto &e : examples) thresholds.push_back(e.score);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<double>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  slu::RocCurve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  for (double t : thresholds) {
    int tp = 0;
    int fp = 0;
    for (const auto &e : examples) {
      if (e.score >= t) (e.gold == 1 ? tp : fp)++;
    }
    curve.points.push_back({t, static_cast<double>(fp) / neg,
                            static_cast<double>(tp) / pos});
  }
  return curve;
}

/// Where fpr + tpr - 1 crosses zero along the polyline (the equal-error point).
inline double brute_eer(const slu::RocCurve &curve) {
  for (const auto &p : curve.points) {
    if (p.fpr + p.tpr - 1.0 == 0.0) return p.fpr;
  }
  for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
    const double g0 = curve.points[i].fpr + curve.points[i].tpr - 1.0;
    const double g1 = curve.points[i + 1].fpr + curve.points[i + 1].tpr - 1.0;
    if (g0 < 0.0 && g1 > 0.0) {
      const double t = -g0 / (g1 - g0);
      return curve.points[i].fpr +
             t * (curve.points[i + 1].fpr - curve.points[i].fpr);
    }
  }
  throw std::runtime_error("brute_eer: no crossing found");
}

inline double brute_auc(const slu::RocCurve &curve) {
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
    const auto &a = curve.points[i];
    const auto &b = curve.points[i + 1];
    area += 0.5 * (b.fpr - a.fpr) * (a.tpr + b.tpr);
  }
  return area;
}

/// fpr at the first polyline parameter where tpr reaches the target.
inline double brute_fpr_at_tpr(const slu::RocCurve &curve, double target) {
  if (!curve.points.empty() && curve.points.front().tpr >= target) {
    return curve.points.front().fpr;
  }
  for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
    const auto &a = curve.points[i];
    const auto &b = curve.points[i + 1];
    if (b.tpr < target) continue;
    if (b.tpr == target) return b.fpr;
    const double lam = (target - a.tpr) / (b.tpr - a.tpr);
    return a.fpr + lam * (b.fpr - a.fpr);
  }
  throw std::runtime_error("brute_fpr_at_tpr: target unreachable");
}

/// Random score set mixing a coarse grid (frequent ties) with continuous
/// draws; both gold classes always present.
inline std::vector<slu::ScoredExample> random_examples(slu::Rng &rng, int size) {
  if (size < 2) throw std::runtime_error("random_examples: size must be >= 2");
  std::vector<slu::ScoredExample> examples;
  examples.reserve(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) {
    double score;
    if (rng.uniform01() < 0.5) {
      score = 0.05 * std::min(20, static_cast<int>(rng.uniform01() * 21.0));
    } else {
      score = rng.uniform01();
    }
    const int gold = rng.uniform01() < 0.5 ? 1 : 0;
    examples.push_back({"ex-" + std::to_string(i), score, gold});
  }
  examples[0].gold = 1;
  examples[1].gold = 0;
  return examples;
}

// ---------------------------------------------------------------------------
// Misc fixtures

/// Hypotheses from "space separated words" + cost pairs.
inline slu::NBestList make_nbest(
    const std::string &id,
    const std::vector<std::pair<std::string, double>> &hyps) {
  slu::NBestList nbest;
  nbest.utterance_id = id;
  for (const auto &[text, cost] : hyps) {
    slu::Hypothesis h;
    std::istringstream in(text);
    std::string word;
    while (in >> word) h.words.push_back(word);
    h.cost = cost;
    nbest.hypotheses.push_back(std::move(h));
  }
  nbest.n_requested = static_cast<int>(nbest.hypotheses.size());
  return nbest;
}

}  // namespace testutil

#endif  // SLU_TESTS_TESTUTIL_HPP
