#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "gsyn/common.hpp"

namespace gsyn {

// ---------------------------------------------------------------------------
// CFT messages (crash faults; locks are plain (view, value) pairs)
// ---------------------------------------------------------------------------

struct CftLock {
  int view = 0;
  std::string value;

  // locks are ranked by view, ties broken by the fixed value order
  friend bool operator<(const CftLock& a, const CftLock& b) {
    if (a.view != b.view) return a.view < b.view;
    return a.value < b.value;
  }
  friend bool operator==(const CftLock& a, const CftLock& b) {
    return a.view == b.view && a.value == b.value;
  }
};

struct SignedCStatus {
  int origin = -1;
  int view = 0;
  CftLock lock;
};

struct CStatus { int view; CftLock lock; };
struct CPropose { int view; std::string value; };
struct CVote { int view; std::string value; };
struct CCommit { std::string value; };
struct CNewView { int view; };
struct CLocked { CftLock lock; };
struct CViewChange { int view; };
struct CStatusSet { int view; std::vector<SignedCStatus> statuses; };

// ---------------------------------------------------------------------------
// BFT messages (Byzantine faults; locks are vote certificates)
// ---------------------------------------------------------------------------

// view >= 1: `origins` are the n-f distinct Vote-1 signers for (view, value).
// view == 0: `origins` are f+1 distinct Input signers for value (pre-phase).
struct BftLock {
  int view = 0;
  std::string value;
  std::vector<int> origins;

  friend bool operator==(const BftLock& a, const BftLock& b) {
    return a.view == b.view && a.value == b.value && a.origins == b.origins;
  }
};

// rank: bottom < view-0 input locks < vote locks; ties by the value order
inline bool lock_below(const std::optional<BftLock>& a, const std::optional<BftLock>& b) {
  if (!b) return false;
  if (!a) return true;
  if (a->view != b->view) return a->view < b->view;
  return a->value < b->value;
}

struct SignedBStatus {
  int origin = -1;
  int view = 0;
  std::optional<BftLock> lock;
};

struct SignedInput {
  int origin = -1;
  std::string value;
};

struct BStatus { int view; std::optional<BftLock> lock; };
struct BPropose { int view; std::string value; std::vector<SignedBStatus> justification; };
struct BVote1 { int view; std::string value; };
struct BVote2 { int view; std::string value; };
struct BftVoteCert { int view; std::string value; std::vector<int> origins; };
struct BCommit { BftVoteCert cert; };
struct BViewChange { int view; };
struct BLocked { std::optional<BftLock> lock; };
struct BStatusSet { int view; std::vector<SignedBStatus> statuses; };
struct BInput { std::string value; };
struct BForwardInputs { std::vector<SignedInput> inputs; };

using Message = std::variant<CStatus, CPropose, CVote, CCommit, CNewView, CLocked,
                             CViewChange, CStatusSet, BStatus, BPropose, BVote1, BVote2,
                             BCommit, BViewChange, BLocked, BStatusSet, BInput,
                             BForwardInputs>;

// ---------------------------------------------------------------------------
// Canonical single-line rendering. Used for traces, echo/tally dedup keys and
// the simulator's signature registry, so it must be total and deterministic.
// ---------------------------------------------------------------------------

inline std::string render(const CftLock& l) {
  return "(" + std::to_string(l.view) + "," + l.value + ")";
}

inline std::string render_origins(const std::vector<int>& origins) {
  std::string by;
  for (size_t i = 0; i < origins.size(); ++i) {
    if (i) by += ",";
    by += std::to_string(origins[i]);
  }
  return "[" + by + "]";
}

inline std::string render(const std::optional<BftLock>& l) {
  if (!l) return "bot";
  std::string head = l->view == 0 ? std::string("inputs(v=0,val=")
                                  : "cert(v=" + std::to_string(l->view) + ",val=";
  return head + l->value + ",by=" + render_origins(l->origins) + ")";
}

inline std::string render(const Message& m);

namespace detail_msg {

struct Renderer {
  std::string operator()(const CStatus& m) const {
    return "Status(v=" + std::to_string(m.view) + ",lock=" + render(m.lock) + ")";
  }
  std::string operator()(const CPropose& m) const {
    return "Propose(v=" + std::to_string(m.view) + ",val=" + m.value + ")";
  }
  std::string operator()(const CVote& m) const {
    return "Vote(v=" + std::to_string(m.view) + ",val=" + m.value + ")";
  }
  std::string operator()(const CCommit& m) const { return "Commit(val=" + m.value + ")"; }
  std::string operator()(const CNewView& m) const {
    return "NewView(v=" + std::to_string(m.view) + ")";
  }
  std::string operator()(const CLocked& m) const { return "Locked(" + render(m.lock) + ")"; }
  std::string operator()(const CViewChange& m) const {
    return "ViewChange(v=" + std::to_string(m.view) + ")";
  }
  std::string operator()(const CStatusSet& m) const {
    std::string s = "StatusSet(v=" + std::to_string(m.view) + ",[";
    for (size_t i = 0; i < m.statuses.size(); ++i) {
      if (i) s += ";";
      s += std::to_string(m.statuses[i].origin) + ":" + render(m.statuses[i].lock);
    }
    return s + "])";
  }
  std::string operator()(const BStatus& m) const {
    return "Status(v=" + std::to_string(m.view) + ",lock=" + render(m.lock) + ")";
  }
  std::string operator()(const BPropose& m) const {
    std::string s = "Propose(v=" + std::to_string(m.view) + ",val=" + m.value + ",S=[";
    for (size_t i = 0; i < m.justification.size(); ++i) {
      if (i) s += ";";
      s += std::to_string(m.justification[i].origin) + ":" + render(m.justification[i].lock);
    }
    return s + "])";
  }
  std::string operator()(const BVote1& m) const {
    return "Vote-1(v=" + std::to_string(m.view) + ",val=" + m.value + ")";
  }
  std::string operator()(const BVote2& m) const {
    return "Vote-2(v=" + std::to_string(m.view) + ",val=" + m.value + ")";
  }
  std::string operator()(const BCommit& m) const {
    return "Commit(cert(v=" + std::to_string(m.cert.view) + ",val=" + m.cert.value +
           ",by=" + render_origins(m.cert.origins) + "))";
  }
  std::string operator()(const BViewChange& m) const {
    return "ViewChange(v=" + std::to_string(m.view) + ")";
  }
  std::string operator()(const BLocked& m) const { return "Locked(" + render(m.lock) + ")"; }
  std::string operator()(const BStatusSet& m) const {
    std::string s = "StatusSet(v=" + std::to_string(m.view) + ",[";
    for (size_t i = 0; i < m.statuses.size(); ++i) {
      if (i) s += ";";
      s += std::to_string(m.statuses[i].origin) + ":" + render(m.statuses[i].lock);
    }
    return s + "])";
  }
  std::string operator()(const BInput& m) const { return "Input(val=" + m.value + ")"; }
  std::string operator()(const BForwardInputs& m) const {
    std::string s = "ForwardInputs([";
    for (size_t i = 0; i < m.inputs.size(); ++i) {
      if (i) s += ";";
      s += std::to_string(m.inputs[i].origin) + ":" + m.inputs[i].value;
    }
    return s + "])";
  }
};

}  // namespace detail_msg

inline std::string render(const Message& m) {
  return std::visit(detail_msg::Renderer{}, m);
}

inline std::string signed_key(int origin, const std::string& rendered) {
  return std::to_string(origin) + "|" + rendered;
}

// Signed items embedded in a message, as (origin, rendered message) pairs.
// The simulator checks these against its signature registry at send time.
inline std::vector<std::pair<int, std::string>> embedded_signables(const Message& m) {
  std::vector<std::pair<int, std::string>> out;
  auto add_bft_lock = [&](const std::optional<BftLock>& l) {
    if (!l) return;
    for (int o : l->origins) {
      if (l->view == 0)
        out.emplace_back(o, render(Message{BInput{l->value}}));
      else
        out.emplace_back(o, render(Message{BVote1{l->view, l->value}}));
    }
  };
  if (auto* ss = std::get_if<CStatusSet>(&m)) {
    for (const auto& s : ss->statuses)
      out.emplace_back(s.origin, render(Message{CStatus{s.view, s.lock}}));
  } else if (auto* bp = std::get_if<BPropose>(&m)) {
    for (const auto& s : bp->justification) {
      out.emplace_back(s.origin, render(Message{BStatus{s.view, s.lock}}));
      add_bft_lock(s.lock);
    }
  } else if (auto* bs = std::get_if<BStatusSet>(&m)) {
    for (const auto& s : bs->statuses) {
      out.emplace_back(s.origin, render(Message{BStatus{s.view, s.lock}}));
      add_bft_lock(s.lock);
    }
  } else if (auto* bc = std::get_if<BCommit>(&m)) {
    for (int o : bc->cert.origins)
      out.emplace_back(o, render(Message{BVote2{bc->cert.view, bc->cert.value}}));
  } else if (auto* bl = std::get_if<BLocked>(&m)) {
    add_bft_lock(bl->lock);
  } else if (auto* st = std::get_if<BStatus>(&m)) {
    add_bft_lock(st->lock);
  } else if (auto* fi = std::get_if<BForwardInputs>(&m)) {
    for (const auto& in : fi->inputs)
      out.emplace_back(in.origin, render(Message{BInput{in.value}}));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Structural validation (signature authenticity is the simulator's job)
// ---------------------------------------------------------------------------

inline bool distinct_valid_origins(const std::vector<int>& origins, int n) {
  std::set<int> seen;
  for (int o : origins) {
    if (o < 0 || o >= n || !seen.insert(o).second) return false;
  }
  return true;
}

inline bool wellformed_bft_lock(const std::optional<BftLock>& l, int n, int f) {
  if (!l) return true;
  if (l->view < 0) return false;
  size_t need = l->view == 0 ? static_cast<size_t>(f + 1) : static_cast<size_t>(n - f);
  return l->origins.size() == need && distinct_valid_origins(l->origins, n);
}

inline bool wellformed_vote_cert(const BftVoteCert& c, int n, int f) {
  return c.view >= 1 && c.origins.size() == static_cast<size_t>(n - f) &&
         distinct_valid_origins(c.origins, n);
}

}  // namespace gsyn
