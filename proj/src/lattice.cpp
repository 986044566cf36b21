#include "slu/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

namespace slu {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense node indexing over the implied node set.
struct NodeIndex {
  std::vector<int> ids;  // sorted, unique

  explicit NodeIndex(const Lattice &lat) {
    ids.push_back(lat.start);
    for (int f : lat.finals) ids.push_back(f);
    for (const Arc &a : lat.arcs) {
      ids.push_back(a.from);
      ids.push_back(a.to);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  }

  int of(int node_id) const {
    auto it = std::lower_bound(ids.begin(), ids.end(), node_id);
    return static_cast<int>(it - ids.begin());
  }
  size_t size() const { return ids.size(); }
};

std::vector<std::vector<int>> out_arcs(const Lattice &lat, const NodeIndex &idx) {
  std::vector<std::vector<int>> out(idx.size());
  for (size_t i = 0; i < lat.arcs.size(); ++i)
    out[idx.of(lat.arcs[i].from)].push_back(static_cast<int>(i));
  return out;
}

std::string arc_str(const Arc &a, size_t index) {
  std::ostringstream os;
  os << "arc #" << index << " (" << a.from << " -> " << a.to << ", \""
     << a.word << "\")";
  return os.str();
}

// DFS cycle check; reports the arc that closes the first cycle found.
void check_acyclic(const Lattice &lat, const NodeIndex &idx,
                   const std::vector<std::vector<int>> &out) {
  enum Color { kWhite, kGray, kBlack };
  std::vector<Color> color(idx.size(), kWhite);
  struct Frame {
    int node;
    size_t next;
  };
  for (size_t root = 0; root < idx.size(); ++root) {
    if (color[root] != kWhite) continue;
    std::vector<Frame> stack{{static_cast<int>(root), 0}};
    color[root] = kGray;
    while (!stack.empty()) {
      Frame &fr = stack.back();
      if (fr.next < out[fr.node].size()) {
        int ai = out[fr.node][fr.next++];
        int to = idx.of(lat.arcs[ai].to);
        if (color[to] == kGray)
          throw LatticeError("cycle detected at " + arc_str(lat.arcs[ai], ai));
        if (color[to] == kWhite) {
          color[to] = kGray;
          stack.push_back({to, 0});
        }
      } else {
        color[fr.node] = kBlack;
        stack.pop_back();
      }
    }
  }
}

std::vector<char> reachable_from_start(const Lattice &lat, const NodeIndex &idx,
                                       const std::vector<std::vector<int>> &out) {
  std::vector<char> seen(idx.size(), 0);
  std::vector<int> work{idx.of(lat.start)};
  seen[work[0]] = 1;
  while (!work.empty()) {
    int v = work.back();
    work.pop_back();
    for (int ai : out[v]) {
      int to = idx.of(lat.arcs[ai].to);
      if (!seen[to]) {
        seen[to] = 1;
        work.push_back(to);
      }
    }
  }
  return seen;
}

std::vector<char> coreaches_final(const Lattice &lat, const NodeIndex &idx) {
  std::vector<std::vector<int>> in(idx.size());
  for (size_t i = 0; i < lat.arcs.size(); ++i)
    in[idx.of(lat.arcs[i].to)].push_back(idx.of(lat.arcs[i].from));
  std::vector<char> seen(idx.size(), 0);
  std::vector<int> work;
  for (int f : lat.finals) {
    int v = idx.of(f);
    if (!seen[v]) {
      seen[v] = 1;
      work.push_back(v);
    }
  }
  while (!work.empty()) {
    int v = work.back();
    work.pop_back();
    for (int u : in[v])
      if (!seen[u]) {
        seen[u] = 1;
        work.push_back(u);
      }
  }
  return seen;
}

// Exact least completion cost from each node to any final, by DP over a
// reverse topological order. Assumes the lattice already validated acyclic.
std::vector<double> completion_costs(const Lattice &lat, const NodeIndex &idx,
                                     const std::vector<std::vector<int>> &out) {
  // Kahn order.
  std::vector<int> indeg(idx.size(), 0);
  for (const Arc &a : lat.arcs) indeg[idx.of(a.to)]++;
  std::vector<int> order;
  order.reserve(idx.size());
  for (size_t v = 0; v < idx.size(); ++v)
    if (indeg[v] == 0) order.push_back(static_cast<int>(v));
  for (size_t i = 0; i < order.size(); ++i)
    for (int ai : out[order[i]]) {
      int to = idx.of(lat.arcs[ai].to);
      if (--indeg[to] == 0) order.push_back(to);
    }

  std::vector<double> h(idx.size(), kInf);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    int v = *it;
    double best = lat.is_final(idx.ids[v]) ? 0.0 : kInf;
    for (int ai : out[v])
      best = std::min(best, lat.arcs[ai].total_cost() +
                                h[idx.of(lat.arcs[ai].to)]);
    h[v] = best;
  }
  return h;
}

struct SearchEntry {
  double g;    // path cost so far (exact total for completed entries)
  int node;    // dense node index, or -1 for a completed path
  int parent;  // index into the entry arena, -1 for the root
  int arc;     // arc taken to reach this entry, -1 for root/completion
};

struct QueueItem {
  double f;
  int entry;
  // Deterministic pop order: lower f first, then earlier entry.
  bool operator>(const QueueItem &o) const {
    if (f != o.f) return f > o.f;
    return entry > o.entry;
  }
};

struct FoundPath {
  double cost;
  std::vector<std::string> words;
  std::vector<int> arc_seq;

  // The documented n-best ordering: cost, then word sequence, then the
  // arc-index sequence.
  bool operator<(const FoundPath &o) const {
    if (cost != o.cost) return cost < o.cost;
    if (words != o.words) return words < o.words;
    return arc_seq < o.arc_seq;
  }
};

}  // namespace

bool Lattice::is_final(int node) const {
  return std::find(finals.begin(), finals.end(), node) != finals.end();
}

std::vector<int> Lattice::node_ids() const {
  return NodeIndex(*this).ids;
}

void Lattice::validate() const {
  if (finals.empty())
    throw LatticeError("empty finals in lattice \"" + utterance_id + "\"");
  for (size_t i = 0; i < arcs.size(); ++i)
    if (!std::isfinite(arcs[i].am_cost) || !std::isfinite(arcs[i].lm_cost))
      throw LatticeError("non-finite cost on " + arc_str(arcs[i], i));
  if (arcs.empty() && !is_final(start))
    throw LatticeError("lattice \"" + utterance_id +
                       "\" has no arcs and start is not final");

  NodeIndex idx(*this);
  auto out = out_arcs(*this, idx);
  check_acyclic(*this, idx, out);
  auto fwd = reachable_from_start(*this, idx, out);
  auto bwd = coreaches_final(*this, idx);
  for (size_t v = 0; v < idx.size(); ++v) {
    if (!fwd[v])
      throw LatticeError("node " + std::to_string(idx.ids[v]) +
                         " not reachable from start");
    if (!bwd[v])
      throw LatticeError("node " + std::to_string(idx.ids[v]) +
                         " reaches no final node");
  }
}

std::string Hypothesis::text() const {
  std::string s;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i) s += ' ';
    s += words[i];
  }
  return s;
}

Lattice load_lattice(const std::string &bytes) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::exception &e) {
    throw LatticeError(std::string("lattice parse error: ") + e.what());
  }
  Lattice lat;
  try {
    lat.utterance_id = doc.value("utterance_id", "");
    lat.start = doc.at("start").get<int>();
    lat.finals = doc.at("finals").get<std::vector<int>>();
    for (const auto &ja : doc.at("arcs")) {
      Arc a;
      a.from = ja.at("from").get<int>();
      a.to = ja.at("to").get<int>();
      a.word = ja.value("word", "");
      a.am_cost = ja.at("am_cost").get<double>();
      a.lm_cost = ja.at("lm_cost").get<double>();
      lat.arcs.push_back(std::move(a));
    }
  } catch (const nlohmann::json::exception &e) {
    throw LatticeError(std::string("lattice schema error: ") + e.what());
  }
  lat.validate();
  return lat;
}

std::string serialize_lattice(const Lattice &lattice) {
  nlohmann::ordered_json doc;
  doc["utterance_id"] = lattice.utterance_id;
  doc["start"] = lattice.start;
  doc["finals"] = lattice.finals;
  auto arr = nlohmann::ordered_json::array();
  for (const Arc &a : lattice.arcs) {
    nlohmann::ordered_json ja;
    ja["from"] = a.from;
    ja["to"] = a.to;
    ja["word"] = a.word;
    ja["am_cost"] = a.am_cost;
    ja["lm_cost"] = a.lm_cost;
    arr.push_back(std::move(ja));
  }
  doc["arcs"] = std::move(arr);
  return doc.dump();
}

NBestList extract_nbest(const Lattice &lattice, int n, bool dedupe) {
  if (n < 1) throw std::invalid_argument("extract_nbest: n must be >= 1");
  lattice.validate();

  NodeIndex idx(lattice);
  auto out = out_arcs(lattice, idx);
  auto h = completion_costs(lattice, idx, out);

  std::vector<SearchEntry> arena;
  std::priority_queue<QueueItem, std::vector<QueueItem>, std::greater<>> queue;
  auto push = [&](double f, SearchEntry e) {
    arena.push_back(e);
    queue.push({f, static_cast<int>(arena.size()) - 1});
  };

  int start = idx.of(lattice.start);
  push(h[start], {0.0, start, -1, -1});

  NBestList result;
  result.utterance_id = lattice.utterance_id;
  result.n_requested = n;
  std::set<std::vector<std::string>> seen;

  std::vector<FoundPath> plateau;
  double plateau_cost = 0.0;

  auto reconstruct = [&](int completion_entry) {
    FoundPath p;
    p.cost = arena[completion_entry].g;
    for (int e = arena[completion_entry].parent; e != -1; e = arena[e].parent)
      if (arena[e].arc >= 0) p.arc_seq.push_back(arena[e].arc);
    std::reverse(p.arc_seq.begin(), p.arc_seq.end());
    for (int ai : p.arc_seq)
      if (!lattice.arcs[ai].word.empty()) p.words.push_back(lattice.arcs[ai].word);
    return p;
  };

  // Equal-cost completions popped between plateau boundaries are sorted by
  // the documented tie-break before being committed, so the emitted stream is
  // exactly the enumerate-sort-truncate order.
  auto flush_plateau = [&]() {
    std::sort(plateau.begin(), plateau.end());
    for (FoundPath &p : plateau) {
      if (static_cast<int>(result.hypotheses.size()) >= n) break;
      if (dedupe) {
        if (!seen.insert(p.words).second) continue;
      }
      result.hypotheses.push_back({std::move(p.words), p.cost});
    }
    plateau.clear();
  };

  while (!queue.empty()) {
    if (!plateau.empty() && queue.top().f > plateau_cost) {
      flush_plateau();
      if (static_cast<int>(result.hypotheses.size()) >= n) return result;
    }
    QueueItem item = queue.top();
    queue.pop();
    SearchEntry entry = arena[item.entry];
    if (entry.node < 0) {
      if (plateau.empty()) plateau_cost = entry.g;
      plateau.push_back(reconstruct(item.entry));
      continue;
    }
    if (lattice.is_final(idx.ids[entry.node]))
      push(entry.g, {entry.g, -1, item.entry, -1});
    for (int ai : out[entry.node]) {
      const Arc &a = lattice.arcs[ai];
      double g = entry.g + a.total_cost();
      int to = idx.of(a.to);
      push(g + h[to], {g, to, item.entry, ai});
    }
  }
  flush_plateau();
  if (static_cast<int>(result.hypotheses.size()) > n)
    result.hypotheses.resize(n);
  return result;
}

Hypothesis one_best(const Lattice &lattice) {
  return extract_nbest(lattice, 1).hypotheses.front();
}

double hypothesis_cost(const Lattice &lattice, std::span<const int> arc_indices) {
  if (arc_indices.empty()) {
    if (!lattice.is_final(lattice.start))
      throw LatticeError("empty path but start node is not final");
    return 0.0;
  }
  double sum = 0.0;
  int at = lattice.start;
  for (int ai : arc_indices) {
    if (ai < 0 || static_cast<size_t>(ai) >= lattice.arcs.size())
      throw LatticeError("arc index " + std::to_string(ai) +
                         " outside the lattice");
    const Arc &a = lattice.arcs[ai];
    if (a.from != at)
      throw LatticeError("disconnected path at " + arc_str(a, ai) +
                         ": expected source node " + std::to_string(at));
    sum += a.total_cost();
    at = a.to;
  }
  if (!lattice.is_final(at))
    throw LatticeError("path ends at non-final node " + std::to_string(at));
  return sum;
}

}  // namespace slu
