#pragma once

// Crash-fault-tolerant single-shot consensus state machines, one for
// granular partial synchrony and one for granular asynchrony. Both are pure
// transition functions driven by the simulator; every state change flows
// through on_event.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gsyn/messages.hpp"
#include "gsyn/protocol.hpp"
#include "gsyn/simnet.hpp"

namespace gsyn {

class CftCoreNode : public IProtocol {
 public:
  explicit CftCoreNode(ProtoParams params)
      : p_(std::move(params)), lock_{0, p_.input} {}

  std::vector<Action> on_event(const NodeEvent& ev) final {
    std::vector<Action> out;
    if (decided_) return out;  // a decided node has terminated
    switch (ev.kind) {
      case NodeEvent::Kind::Init:
        enter_view(1, out);
        break;
      case NodeEvent::Kind::Deliver:
        on_deliver(*ev.env, out);
        break;
      case NodeEvent::Kind::TimerFire:
        on_timer(ev.timer_id, out);
        break;
    }
    return out;
  }

 protected:
  // Points where Algorithm 1 and Algorithm 2 differ.
  virtual void begin_view(std::vector<Action>& out) = 0;
  virtual void pre_vote(std::vector<Action>& out) = 0;  // extra steps on a proposal
  virtual void on_protocol_timer(const std::string& id, std::vector<Action>& out) = 0;
  virtual void on_view_change_msg(int view, int origin, std::vector<Action>& out) = 0;

  void enter_view(int v, std::vector<Action>& out) {
    v_ = v;
    out.push_back(NoteAction{"enter_view v=" + std::to_string(v)});
    prune_below(v);
    begin_view(out);
    // catch up on anything buffered for this view
    if (leader_of(v_, p_.n) == p_.self) maybe_propose(out);
    maybe_status_echo(out);
    process_buffered_proposal(out);
    check_votes(out);
  }

  void on_deliver(const Envelope& env, std::vector<Action>& out) {
    if (const auto* m = std::get_if<CStatus>(&env.payload)) {
      if (m->view < 1 || m->view < v_) return;
      add_status(m->view, env.origin, m->lock);
      if (m->view == v_) {
        if (leader_of(v_, p_.n) == p_.self) maybe_propose(out);
        maybe_status_echo(out);
      }
    } else if (const auto* m = std::get_if<CStatusSet>(&env.payload)) {
      if (m->view < 1 || m->view < v_) return;
      for (const auto& s : m->statuses) {
        if (s.view != m->view || s.origin < 0 || s.origin >= p_.n) return;  // malformed
      }
      for (const auto& s : m->statuses) add_status(s.view, s.origin, s.lock);
      if (m->view == v_) {
        if (leader_of(v_, p_.n) == p_.self) maybe_propose(out);
        maybe_status_echo(out);
      }
    } else if (const auto* m = std::get_if<CPropose>(&env.payload)) {
      if (m->view < 1 || env.origin != leader_of(m->view, p_.n)) return;
      if (m->view < v_) return;
      if (!proposal_.count(m->view)) proposal_[m->view] = m->value;
      if (m->view == v_) process_buffered_proposal(out);
    } else if (const auto* m = std::get_if<CVote>(&env.payload)) {
      if (m->view < 1 || m->view < v_) return;
      if (!vote_seen_[m->view].insert(env.origin).second) return;
      votes_[{m->view, m->value}].insert(env.origin);
      if (m->view == v_) check_votes(out);
    } else if (const auto* m = std::get_if<CCommit>(&env.payload)) {
      commit(m->value, out);
    } else if (const auto* m = std::get_if<CNewView>(&env.payload)) {
      if (m->view <= v_ || !newview_seen_.insert(m->view).second) return;
      out.push_back(SendAction{kBroadcast, env.origin, env.payload});  // echo
      out.push_back(SendAction{kBroadcast, p_.self, Message{CLocked{lock_}}});
      stop_upto_ = std::max(stop_upto_, m->view - 1);
      out.push_back(TimerSetAction{view_tag("enter", m->view),
                                   2 * static_cast<Time>(p_.d) * p_.delta});
    } else if (const auto* m = std::get_if<CLocked>(&env.payload)) {
      if (lock_ < m->lock) {
        lock_ = m->lock;
        out.push_back(NoteAction{"lock view=" + std::to_string(lock_.view) +
                                 " val=" + lock_.value});
      }
      std::string key = signed_key(env.origin, render(env.payload));
      if (locked_echoed_.insert(key).second)
        out.push_back(SendAction{kBroadcast, env.origin, env.payload});
    } else if (const auto* m = std::get_if<CViewChange>(&env.payload)) {
      if (m->view < 1) return;
      on_view_change_msg(m->view, env.origin, out);
    }
    // messages of the other protocol family are ignored
  }

  void on_timer(const std::string& id, std::vector<Action>& out) {
    auto colon = id.find(':');
    int view = colon == std::string::npos ? -1 : std::stoi(id.substr(colon + 1));
    if (id.rfind("enter:", 0) == 0) {
      if (view > v_) enter_view(view, out);
      return;
    }
    on_protocol_timer(id, out);
    (void)view;
  }

  void add_status(int view, int origin, const CftLock& lock) {
    if (origin < 0 || origin >= p_.n) return;
    if (!status_seen_[view].insert(origin).second) return;
    status_[view].push_back(SignedCStatus{origin, view, lock});
  }

  // Leader step: propose the value of the highest lock among the first n-f
  // statuses of the current view. At most one proposal per view.
  void maybe_propose(std::vector<Action>& out) {
    auto it = status_.find(v_);
    if (it == status_.end() || static_cast<int>(it->second.size()) < p_.n - p_.f) return;
    if (!proposed_.insert(v_).second) return;
    CftLock best = it->second.front().lock;
    for (int i = 1; i < p_.n - p_.f; ++i)
      if (best < it->second[i].lock) best = it->second[i].lock;
    out.push_back(SendAction{kBroadcast, p_.self, Message{CPropose{v_, best.value}}});
  }

  void process_buffered_proposal(std::vector<Action>& out) {
    auto it = proposal_.find(v_);
    if (it == proposal_.end()) return;
    have_proposal_.insert(v_);
    if (v_ <= stop_upto_) return;  // quit this view already; do not vote
    if (!voted_.insert(v_).second) return;
    if (CftLock cand{v_, it->second}; lock_ < cand) {
      lock_ = cand;
      out.push_back(NoteAction{"lock view=" + std::to_string(v_) + " val=" + it->second});
    }
    pre_vote(out);
    out.push_back(SendAction{kBroadcast, p_.self, Message{CVote{v_, it->second}}});
  }

  void check_votes(std::vector<Action>& out) {
    for (auto& [key, origins] : votes_) {
      if (key.first != v_) continue;
      if (static_cast<int>(origins.size()) >= p_.n - p_.f) {
        commit(key.second, out);
        return;
      }
    }
  }

  void commit(const std::string& value, std::vector<Action>& out) {
    if (decided_) return;
    decided_ = true;
    out.push_back(SendAction{kBroadcast, p_.self, Message{CCommit{value}}});
    out.push_back(DecideAction{value});
  }

  void prune_below(int v) {
    auto prune = [v](auto& m) {
      for (auto it = m.begin(); it != m.end();) {
        bool old = [&] {
          if constexpr (requires { it->first.first; })
            return it->first.first < v;
          else
            return it->first < v;
        }();
        it = old ? m.erase(it) : ++it;
      }
    };
    prune(status_);
    prune(status_seen_);
    prune(votes_);
    prune(vote_seen_);
    prune(proposal_);
  }

  virtual void maybe_status_echo(std::vector<Action>&) {}

  ProtoParams p_;
  int v_ = 0;
  CftLock lock_;
  bool decided_ = false;
  int stop_upto_ = 0;  // no Propose accepted and no Vote sent in views <= this

  std::map<int, std::vector<SignedCStatus>> status_;
  std::map<int, std::set<int>> status_seen_;
  std::map<std::pair<int, std::string>, std::set<int>> votes_;
  std::map<int, std::set<int>> vote_seen_;
  std::map<int, std::string> proposal_;
  std::set<int> have_proposal_;
  std::set<int> proposed_;
  std::set<int> voted_;
  std::set<int> newview_seen_;
  std::set<std::string> locked_echoed_;
};

// Algorithm for granular partial synchrony: status goes to the leader only
// and a 4-delta view timer drives the view change.
class CftGpsNode : public CftCoreNode {
 public:
  using CftCoreNode::CftCoreNode;

 protected:
  void begin_view(std::vector<Action>& out) override {
    out.push_back(TimerSetAction{view_tag("view", v_), 4 * p_.delta});
    out.push_back(SendAction{leader_of(v_, p_.n), p_.self, Message{CStatus{v_, lock_}}});
  }

  void pre_vote(std::vector<Action>&) override {}

  void on_protocol_timer(const std::string& id, std::vector<Action>& out) override {
    if (id == view_tag("view", v_))
      out.push_back(SendAction{kBroadcast, p_.self, Message{CNewView{v_ + 1}}});
  }

  void on_view_change_msg(int, int, std::vector<Action>&) override {}
};

// Algorithm for granular asynchrony: status is broadcast and echoed, a
// 3*d'*delta proposal timer replaces the view timer, and a view change
// needs n-f ViewChange messages.
class CftGasNode : public CftCoreNode {
 public:
  using CftCoreNode::CftCoreNode;

 protected:
  void begin_view(std::vector<Action>& out) override {
    out.push_back(SendAction{kBroadcast, p_.self, Message{CStatus{v_, lock_}}});
  }

  void maybe_status_echo(std::vector<Action>& out) override {
    if (leader_of(v_, p_.n) == p_.self) return;
    auto it = status_.find(v_);
    if (it == status_.end() || static_cast<int>(it->second.size()) < p_.n - p_.f) return;
    if (!statusset_sent_.insert(v_).second) return;
    std::vector<SignedCStatus> first(it->second.begin(), it->second.begin() + (p_.n - p_.f));
    out.push_back(SendAction{kBroadcast, p_.self, Message{CStatusSet{v_, std::move(first)}}});
    out.push_back(TimerSetAction{view_tag("proposal", v_),
                                 3 * static_cast<Time>(p_.dprime) * p_.delta});
  }

  void pre_vote(std::vector<Action>& out) override {
    // forward the leader's proposal before voting
    out.push_back(SendAction{kBroadcast, leader_of(v_, p_.n),
                             Message{CPropose{v_, proposal_[v_]}}});
  }

  void on_protocol_timer(const std::string& id, std::vector<Action>& out) override {
    if (id == view_tag("proposal", v_) && !have_proposal_.count(v_))
      out.push_back(SendAction{kBroadcast, p_.self, Message{CViewChange{v_}}});
  }

  void on_view_change_msg(int view, int origin, std::vector<Action>& out) override {
    if (view < v_) return;
    vc_[view].insert(origin);
    if (static_cast<int>(vc_[view].size()) >= p_.n - p_.f && newview_sent_.insert(view).second)
      out.push_back(SendAction{kBroadcast, p_.self, Message{CNewView{view + 1}}});
  }

 private:
  std::set<int> statusset_sent_;
  std::map<int, std::set<int>> vc_;
  std::set<int> newview_sent_;
};

}  // namespace gsyn
