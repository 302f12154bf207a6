#pragma once

#include <algorithm>
#include <bit>
#include <optional>
#include <string>
#include <vector>

#include "gsyn/common.hpp"

namespace gsyn {

enum class TimingClass { Synchronous, PartiallySynchronous, Asynchronous };

inline const char* timing_class_name(TimingClass c) {
  switch (c) {
    case TimingClass::Synchronous: return "sync";
    case TimingClass::PartiallySynchronous: return "psync";
    case TimingClass::Asynchronous: return "async";
  }
  return "?";
}

inline std::optional<TimingClass> parse_timing_class(const std::string& s) {
  if (s == "sync") return TimingClass::Synchronous;
  if (s == "psync") return TimingClass::PartiallySynchronous;
  if (s == "async") return TimingClass::Asynchronous;
  return std::nullopt;
}

// Undirected graph with one timing class per edge. Nodes are 0..n-1.
class TimedGraph {
 public:
  explicit TimedGraph(int n) : n_(n), cls_(static_cast<size_t>(n) * n) {
    if (n < 1 || n > 30) throw std::invalid_argument("TimedGraph: node count out of range");
  }

  int node_count() const { return n_; }

  void add_edge(int u, int v, TimingClass c) {
    check_node(u);
    check_node(v);
    if (u == v) throw std::invalid_argument("TimedGraph: self edge");
    if (cls_[idx(u, v)]) throw std::invalid_argument("TimedGraph: duplicate edge");
    cls_[idx(u, v)] = c;
    cls_[idx(v, u)] = c;
  }

  std::optional<TimingClass> edge(int u, int v) const {
    check_node(u);
    check_node(v);
    if (u == v) return std::nullopt;
    return cls_[idx(u, v)];
  }

  bool complete() const {
    for (int u = 0; u < n_; ++u)
      for (int v = u + 1; v < n_; ++v)
        if (!cls_[idx(u, v)]) return false;
    return true;
  }

  // Edge usable for a synchronous path (diamond=false) or a partially
  // synchronous path (diamond=true; psync paths may contain sync edges).
  bool path_edge(int u, int v, bool diamond) const {
    auto c = edge(u, v);
    if (!c) return false;
    if (*c == TimingClass::Synchronous) return true;
    return diamond && *c == TimingClass::PartiallySynchronous;
  }

  void check_node(int u) const {
    if (u < 0 || u >= n_) throw std::invalid_argument("TimedGraph: invalid node id");
  }

 private:
  size_t idx(int u, int v) const { return static_cast<size_t>(u) * n_ + v; }

  int n_;
  std::vector<std::optional<TimingClass>> cls_;
};

struct FaultSet {
  std::vector<int> members;
  int bound = 0;

  void validate(int n) const {
    if (static_cast<int>(members.size()) > bound)
      throw std::invalid_argument("FaultSet: more members than the bound f");
    uint32_t seen = 0;
    for (int m : members) {
      if (m < 0 || m >= n) throw std::invalid_argument("FaultSet: invalid node id");
      if (seen & (1u << m)) throw std::invalid_argument("FaultSet: duplicate member");
      seen |= 1u << m;
    }
  }
};

using NodeMask = uint32_t;

inline NodeMask bit(int u) { return NodeMask{1} << u; }

inline NodeMask mask_of(const std::vector<int>& nodes) {
  NodeMask m = 0;
  for (int u : nodes) m |= bit(u);
  return m;
}

inline std::vector<int> mask_to_vec(NodeMask m) {
  std::vector<int> out;
  for (int u = 0; m >> u; ++u)
    if (m & bit(u)) out.push_back(u);
  return out;
}

inline std::string render_node_set(NodeMask m) {
  std::string s = "{";
  bool first = true;
  for (int u : mask_to_vec(m)) {
    if (!first) s += ",";
    s += std::to_string(u);
    first = false;
  }
  return s + "}";
}

// Nodes reachable from src along sync (or diamond = sync+psync) paths whose
// intermediate nodes all lie outside `faulty`. Endpoints are exempt, so the
// result may contain faulty nodes and always contains src.
inline NodeMask reachable_mask(const TimedGraph& g, NodeMask faulty, int src, bool diamond) {
  int n = g.node_count();
  NodeMask visited = bit(src);
  std::vector<int> frontier{src};
  while (!frontier.empty()) {
    std::vector<int> next;
    for (int u : frontier) {
      if (u != src && (faulty & bit(u))) continue;  // faulty nodes do not relay
      for (int v = 0; v < n; ++v) {
        if ((visited & bit(v)) || !g.path_edge(u, v, diamond)) continue;
        visited |= bit(v);
        next.push_back(v);
      }
    }
    frontier = std::move(next);
  }
  return visited;
}

// Enumerates subsets of {0..n-1} with size <= max_size in lexicographic
// order of their sorted element sequences ({} first, then {0}, {0,1}, ...).
// fn returns true to stop; the function returns whether it was stopped.
template <typename Fn>
inline bool for_each_subset_lex(int n, int max_size, Fn&& fn) {
  std::vector<int> cur;
  auto rec = [&](auto&& self, int start) -> bool {
    if (fn(cur, mask_of(cur))) return true;
    if (static_cast<int>(cur.size()) == max_size) return false;
    for (int e = start; e < n; ++e) {
      cur.push_back(e);
      if (self(self, e + 1)) return true;
      cur.pop_back();
    }
    return false;
  };
  return rec(rec, 0);
}

// Size-k subsets of the nodes in `allowed`, in lexicographic order.
template <typename Fn>
inline bool for_each_subset_of_size([[maybe_unused]] int n, int k, NodeMask allowed, Fn&& fn) {
  std::vector<int> pool = mask_to_vec(allowed);
  if (k > static_cast<int>(pool.size())) return false;
  std::vector<int> cur;
  auto rec = [&](auto&& self, size_t start) -> bool {
    if (static_cast<int>(cur.size()) == k) return fn(cur, mask_of(cur));
    for (size_t i = start; i < pool.size(); ++i) {
      if (pool.size() - i < static_cast<size_t>(k) - cur.size()) break;
      cur.push_back(pool[i]);
      if (self(self, i + 1)) return true;
      cur.pop_back();
    }
    return false;
  };
  return rec(rec, 0);
}

inline std::vector<int> sync_reachable(const TimedGraph& g, const FaultSet& faulty, int a) {
  g.check_node(a);
  faulty.validate(g.node_count());
  return mask_to_vec(reachable_mask(g, mask_of(faulty.members), a, /*diamond=*/false));
}

// Union of sync_reachable over the set A. A -> B holds iff B is a subset of
// the result.
inline std::vector<int> set_reaches(const TimedGraph& g, const FaultSet& faulty,
                                    const std::vector<int>& a_set) {
  if (a_set.empty()) throw std::invalid_argument("set_reaches: empty source set");
  faulty.validate(g.node_count());
  NodeMask f = mask_of(faulty.members);
  NodeMask out = 0;
  for (int a : a_set) {
    g.check_node(a);
    out |= reachable_mask(g, f, a, false);
  }
  return mask_to_vec(out);
}

struct DiameterResult {
  int length = 0;
  bool fallback = false;  // no pair of distinct nodes is connected; n-1 used
};

inline int trivial_diameter_bound(int n) { return n - 1; }

namespace detail {

inline std::vector<int> bfs_dist(const TimedGraph& g, NodeMask faulty, int src, bool diamond) {
  int n = g.node_count();
  std::vector<int> dist(n, -1);
  dist[src] = 0;
  std::vector<int> frontier{src};
  int depth = 0;
  while (!frontier.empty()) {
    ++depth;
    std::vector<int> next;
    for (int u : frontier) {
      if (u != src && (faulty & bit(u))) continue;
      for (int v = 0; v < n; ++v) {
        if (dist[v] >= 0 || !g.path_edge(u, v, diamond)) continue;
        dist[v] = depth;
        next.push_back(v);
      }
    }
    frontier = std::move(next);
  }
  return dist;
}

inline DiameterResult diameter(const TimedGraph& g, int f, bool correct_pairs_only,
                               bool diamond) {
  int n = g.node_count();
  if (f > n) throw std::invalid_argument("diameter: f > n");
  int best = -1;
  for_each_subset_lex(n, f, [&](const std::vector<int>&, NodeMask fm) {
    for (int a = 0; a < n; ++a) {
      if (correct_pairs_only && (fm & bit(a))) continue;
      auto dist = bfs_dist(g, fm, a, diamond);
      for (int b = 0; b < n; ++b) {
        if (b == a || dist[b] < 0) continue;
        if (correct_pairs_only && (fm & bit(b))) continue;
        best = std::max(best, dist[b]);
      }
    }
    return false;
  });
  if (best < 0) return {trivial_diameter_bound(n), true};
  return {best, false};
}

// Connected components of (V - F, diamond edges), as masks.
inline std::vector<NodeMask> diamond_components(const TimedGraph& g, NodeMask faulty) {
  int n = g.node_count();
  std::vector<NodeMask> comps;
  NodeMask seen = 0;
  for (int s = 0; s < n; ++s) {
    if ((faulty & bit(s)) || (seen & bit(s))) continue;
    NodeMask comp = bit(s);
    std::vector<int> frontier{s};
    while (!frontier.empty()) {
      std::vector<int> next;
      for (int u : frontier)
        for (int v = 0; v < n; ++v) {
          if ((faulty & bit(v)) || (comp & bit(v)) || !g.path_edge(u, v, true)) continue;
          comp |= bit(v);
          next.push_back(v);
        }
      frontier = std::move(next);
    }
    seen |= comp;
    comps.push_back(comp);
  }
  return comps;
}

}  // namespace detail

inline DiameterResult sync_diameter(const TimedGraph& g, int f, bool correct_pairs_only) {
  return detail::diameter(g, f, correct_pairs_only, false);
}

inline DiameterResult psync_diameter(const TimedGraph& g, int f, bool correct_pairs_only) {
  return detail::diameter(g, f, correct_pairs_only, true);
}

struct ConditionVerdict {
  bool holds = true;
  std::string which;                           // failed sub-condition, empty when holds
  std::vector<int> witness_faults;             // violating F
  std::optional<std::vector<int>> witness_set; // violating A, for quorum conditions

  std::string describe() const {
    if (holds) return "holds";
    std::string s = "fails [" + which + "] F=" + render_node_set(mask_of(witness_faults));
    if (witness_set) s += " A=" + render_node_set(mask_of(*witness_set));
    return s;
  }
};

// CFT solvability in granular partial synchrony: every quorum of n-f nodes
// must collectively reach at least f+1 nodes, regardless of which up to f
// nodes are faulty. The witness is the lexicographically smallest violating
// (F, A); checking |A| = n-f exactly suffices since larger A reach supersets.
inline ConditionVerdict check_cft_gps(const TimedGraph& g, int f) {
  int n = g.node_count();
  if (f < 0 || f >= n) throw std::invalid_argument("check_cft_gps: need 0 <= f < n");
  ConditionVerdict verdict;
  NodeMask all = bit(n) - 1;
  for_each_subset_lex(n, f, [&](const std::vector<int>& fv, NodeMask fm) {
    // reach of each node under this fault set, reused across all A
    std::vector<NodeMask> reach(n);
    for (int u = 0; u < n; ++u) reach[u] = reachable_mask(g, fm, u, false);
    return for_each_subset_of_size(n, n - f, all, [&](const std::vector<int>& av, NodeMask) {
      NodeMask r = 0;
      for (int a : av) r |= reach[a];
      if (std::popcount(r) >= f + 1) return false;
      verdict.holds = false;
      verdict.which = "quorum-reach";
      verdict.witness_faults = fv;
      verdict.witness_set = av;
      return true;
    });
  });
  return verdict;
}

// BFT solvability in granular partial synchrony: any n-2f correct nodes must
// collectively reach at least f+1 correct nodes. Requires n >= 2f+1.
inline ConditionVerdict check_bft_gps(const TimedGraph& g, int f) {
  int n = g.node_count();
  if (f < 0 || n < 2 * f + 1) throw std::invalid_argument("check_bft_gps: need n >= 2f+1");
  ConditionVerdict verdict;
  for_each_subset_lex(n, f, [&](const std::vector<int>& fv, NodeMask fm) {
    NodeMask correct = 0;
    for (int u = 0; u < n; ++u)
      if (!(fm & bit(u))) correct |= bit(u);
    std::vector<NodeMask> reach(n);
    for (int u = 0; u < n; ++u)
      if (correct & bit(u)) reach[u] = reachable_mask(g, fm, u, false);
    return for_each_subset_of_size(n, n - 2 * f, correct, [&](const std::vector<int>& av, NodeMask) {
      NodeMask r = 0;
      for (int a : av) r |= reach[a];
      if (std::popcount(r & correct) >= f + 1) return false;
      verdict.holds = false;
      verdict.which = "quorum-reach";
      verdict.witness_faults = fv;
      verdict.witness_set = av;
      return true;
    });
  });
  return verdict;
}

// Condition (ii) for CFT in granular asynchrony: for every F with |F| <= f,
// fewer than n-f nodes lie outside the largest connected component of
// (V-F, diamond edges).
inline ConditionVerdict check_cft_gas_component(const TimedGraph& g, int f) {
  int n = g.node_count();
  if (f < 0 || f >= n) throw std::invalid_argument("check_cft_gas_component: need 0 <= f < n");
  ConditionVerdict verdict;
  for_each_subset_lex(n, f, [&](const std::vector<int>& fv, NodeMask fm) {
    auto comps = detail::diamond_components(g, fm);
    int largest = 0;
    for (NodeMask c : comps) largest = std::max(largest, std::popcount(c));
    int outside = n - static_cast<int>(fv.size()) - largest;
    if (outside < n - f) return false;
    verdict.holds = false;
    verdict.which = "component";
    verdict.witness_faults = fv;
    return true;
  });
  return verdict;
}

inline ConditionVerdict check_cft_gas(const TimedGraph& g, int f) {
  ConditionVerdict gps = check_cft_gps(g, f);
  if (!gps.holds) return gps;
  return check_cft_gas_component(g, f);
}

// Condition (ii) for BFT in granular asynchrony: for every fault set, some
// node of G' = (V-F, diamond edges) has diamond paths inside G' to at least
// f other nodes of G'. Sizes below f are checked too; they are implied by
// the |F| = f case but cost little here.
inline ConditionVerdict check_bft_gas_connectivity(const TimedGraph& g, int f) {
  int n = g.node_count();
  if (f < 0 || n < 2 * f + 1)
    throw std::invalid_argument("check_bft_gas_connectivity: need n >= 2f+1");
  ConditionVerdict verdict;
  for_each_subset_lex(n, f, [&](const std::vector<int>& fv, NodeMask fm) {
    auto comps = detail::diamond_components(g, fm);
    int largest = 0;
    for (NodeMask c : comps) largest = std::max(largest, std::popcount(c));
    if (largest >= f + 1) return false;
    verdict.holds = false;
    verdict.which = "connectivity";
    verdict.witness_faults = fv;
    return true;
  });
  return verdict;
}

inline ConditionVerdict check_bft_gas(const TimedGraph& g, int f) {
  ConditionVerdict gps = check_bft_gps(g, f);
  if (!gps.holds) return gps;
  return check_bft_gas_connectivity(g, f);
}

// True iff some correct node has diamond paths, over correct intermediates,
// to at least f other correct nodes.
inline bool check_diamond_f_source(const TimedGraph& g, int f, const FaultSet& faulty) {
  int n = g.node_count();
  faulty.validate(n);
  if (static_cast<int>(faulty.members.size()) > f)
    throw std::invalid_argument("check_diamond_f_source: |faulty| > f");
  NodeMask fm = mask_of(faulty.members);
  for (int c = 0; c < n; ++c) {
    if (fm & bit(c)) continue;
    NodeMask reach = reachable_mask(g, fm, c, true) & ~fm & ~bit(c);
    if (std::popcount(reach) >= f) return true;
  }
  return false;
}

}  // namespace gsyn
