#pragma once

// Brute-force reference enumerators for the graph-condition checkers. These
// deliberately avoid the library's reachability code: reachability is a
// fixed-point relaxation over the edge list, and the quantifiers follow the
// condition statements directly (|A| >= n-f instead of the exact-size
// shortcut). Only usable at desk scale.

#include <bit>
#include <vector>

#include "gsyn/graph.hpp"

namespace oracle {

using gsyn::NodeMask;
using gsyn::TimedGraph;
using gsyn::TimingClass;

inline bool usable(const TimedGraph& g, int u, int v, bool diamond) {
  auto c = g.edge(u, v);
  if (!c) return false;
  if (*c == TimingClass::Synchronous) return true;
  return diamond && *c == TimingClass::PartiallySynchronous;
}

// Fixed-point closure: grow the reached set by one edge at a time, relaying
// only through non-faulty nodes (the source is exempt).
inline NodeMask reach_fixpoint(const TimedGraph& g, NodeMask faulty, int src, bool diamond) {
  int n = g.node_count();
  NodeMask r = gsyn::bit(src);
  bool grew = true;
  while (grew) {
    grew = false;
    for (int u = 0; u < n; ++u) {
      if (!(r & gsyn::bit(u))) continue;
      if (u != src && (faulty & gsyn::bit(u))) continue;
      for (int v = 0; v < n; ++v) {
        if ((r & gsyn::bit(v)) || !usable(g, u, v, diamond)) continue;
        r |= gsyn::bit(v);
        grew = true;
      }
    }
  }
  return r;
}

inline std::vector<NodeMask> all_subsets_up_to(int n, int k) {
  std::vector<NodeMask> out;
  for (NodeMask m = 0; m < (NodeMask{1} << n); ++m)
    if (std::popcount(m) <= k) out.push_back(m);
  return out;
}

inline bool cft_gps_holds(const TimedGraph& g, int f) {
  int n = g.node_count();
  for (NodeMask fm : all_subsets_up_to(n, f)) {
    for (NodeMask a = 0; a < (NodeMask{1} << n); ++a) {
      if (std::popcount(a) < n - f) continue;
      NodeMask r = 0;
      for (int u = 0; u < n; ++u)
        if (a & gsyn::bit(u)) r |= reach_fixpoint(g, fm, u, false);
      if (std::popcount(r) < f + 1) return false;
    }
  }
  return true;
}

inline bool bft_gps_holds(const TimedGraph& g, int f) {
  int n = g.node_count();
  for (NodeMask fm : all_subsets_up_to(n, f)) {
    NodeMask correct = (NodeMask{1} << n) - 1;
    correct &= ~fm;
    for (NodeMask a = 0; a < (NodeMask{1} << n); ++a) {
      if ((a & ~correct) || std::popcount(a) < n - 2 * f || a == 0) continue;
      NodeMask r = 0;
      for (int u = 0; u < n; ++u)
        if (a & gsyn::bit(u)) r |= reach_fixpoint(g, fm, u, false);
      if (std::popcount(r & correct) < f + 1) return false;
    }
  }
  return true;
}

// Component sizes of (V-F, diamond edges) via repeated closure.
inline int largest_diamond_component(const TimedGraph& g, NodeMask fm) {
  int n = g.node_count();
  int best = 0;
  for (int s = 0; s < n; ++s) {
    if (fm & gsyn::bit(s)) continue;
    NodeMask comp = gsyn::bit(s);
    bool grew = true;
    while (grew) {
      grew = false;
      for (int u = 0; u < n; ++u) {
        if (!(comp & gsyn::bit(u))) continue;
        for (int v = 0; v < n; ++v) {
          if ((fm & gsyn::bit(v)) || (comp & gsyn::bit(v)) || !usable(g, u, v, true)) continue;
          comp |= gsyn::bit(v);
          grew = true;
        }
      }
    }
    best = std::max(best, std::popcount(comp));
  }
  return best;
}

inline bool cft_gas_component_holds(const TimedGraph& g, int f) {
  int n = g.node_count();
  for (NodeMask fm : all_subsets_up_to(n, f)) {
    int outside = n - std::popcount(fm) - largest_diamond_component(g, fm);
    if (outside >= n - f) return false;
  }
  return true;
}

// The Byzantine asynchrony connectivity condition, quantified over |F| = f.
// Existence of a node with diamond paths to >= f others inside G' is
// checked per node, not via component sizes.
inline bool bft_gas_connectivity_holds(const TimedGraph& g, int f) {
  int n = g.node_count();
  for (NodeMask fm = 0; fm < (NodeMask{1} << n); ++fm) {
    if (std::popcount(fm) != f) continue;
    bool found = false;
    for (int c = 0; c < n && !found; ++c) {
      if (fm & gsyn::bit(c)) continue;
      NodeMask r = reach_fixpoint(g, fm, c, true) & ~fm & ~gsyn::bit(c);
      if (std::popcount(r) >= f) found = true;
    }
    if (!found) return false;
  }
  return true;
}

inline bool diamond_f_source_exists(const TimedGraph& g, int f, NodeMask fm) {
  int n = g.node_count();
  if (f == 0) return true;
  for (int c = 0; c < n; ++c) {
    if (fm & gsyn::bit(c)) continue;
    NodeMask r = reach_fixpoint(g, fm, c, true) & ~fm & ~gsyn::bit(c);
    if (std::popcount(r) >= f) return true;
  }
  return false;
}

// Seeded random graph with classes drawn from the given pool.
inline TimedGraph random_graph(int n, gsyn::Rng& rng, bool allow_async) {
  TimedGraph g(n);
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) {
      int lim = allow_async ? 3 : 2;
      switch (rng.range(0, lim - 1)) {
        case 0: g.add_edge(u, v, TimingClass::Synchronous); break;
        case 1: g.add_edge(u, v, TimingClass::PartiallySynchronous); break;
        default: g.add_edge(u, v, TimingClass::Asynchronous); break;
      }
    }
  return g;
}

}  // namespace oracle
