#pragma once

// Byzantine-fault-tolerant single-shot consensus state machine covering the
// granular-partial-synchrony and granular-asynchrony variants, plus the
// optional view-0 input-exchange pre-phase that upgrades external validity
// to unanimity validity.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gsyn/messages.hpp"
#include "gsyn/protocol.hpp"
#include "gsyn/simnet.hpp"

namespace gsyn {

enum class BftMode { Gps, Gas };

class BftNode : public IProtocol {
 public:
  BftNode(ProtoParams params, BftMode mode) : p_(std::move(params)), mode_(mode) {}

  std::vector<Action> on_event(const NodeEvent& ev) final {
    std::vector<Action> out;
    if (decided_) return out;
    switch (ev.kind) {
      case NodeEvent::Kind::Init:
        if (p_.prephase) {
          out.push_back(SendAction{kBroadcast, p_.self, Message{BInput{p_.input}}});
          out.push_back(TimerSetAction{"input", 2 * static_cast<Time>(p_.d) * p_.delta});
          prephase_active_ = true;
        } else {
          enter_view(1, out);
        }
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

 private:
  bool value_ok(const std::string& v) const {
    if (p_.valid_values.empty()) return true;
    for (const auto& x : p_.valid_values)
      if (x == v) return true;
    return false;
  }

  int quorum() const { return p_.n - p_.f; }
  int vc_threshold() const { return mode_ == BftMode::Gps ? p_.f + 1 : quorum(); }

  void enter_view(int v, std::vector<Action>& out) {
    v_ = v;
    out.push_back(NoteAction{"enter_view v=" + std::to_string(v)});
    prune_below(v);
    if (mode_ == BftMode::Gps) {
      out.push_back(TimerSetAction{view_tag("view", v),
                                   (5 + static_cast<Time>(p_.d)) * p_.delta});
      out.push_back(SendAction{leader_of(v, p_.n), p_.self, Message{BStatus{v, lock_}}});
    } else {
      out.push_back(SendAction{kBroadcast, p_.self, Message{BStatus{v, lock_}}});
    }
    // catch up on buffered traffic for this view
    maybe_propose(out);
    maybe_statusset_echo(out);
    if (auto it = proposals_.find(v_); it != proposals_.end()) {
      if (!it->second.empty()) accept_first_proposal(out);
      if (it->second.size() >= 2) act_on_equivocation(out);
    }
    check_vote1(out);
    check_vote2(out);
  }

  void on_deliver(const Envelope& env, std::vector<Action>& out) {
    if (const auto* m = std::get_if<BInput>(&env.payload)) {
      on_input(env.origin, m->value, env, out);
    } else if (const auto* m = std::get_if<BForwardInputs>(&env.payload)) {
      on_forward_inputs(env.origin, *m, out);
    } else if (const auto* m = std::get_if<BStatus>(&env.payload)) {
      if (m->view < 1 || m->view < v_) return;
      if (!wellformed_bft_lock(m->lock, p_.n, p_.f)) return;
      add_status(m->view, env.origin, m->lock);
      if (m->view == v_) {
        maybe_propose(out);
        maybe_statusset_echo(out);
      }
    } else if (const auto* m = std::get_if<BStatusSet>(&env.payload)) {
      if (mode_ != BftMode::Gas || m->view < 1 || m->view < v_) return;
      for (const auto& s : m->statuses)
        if (s.view != m->view || s.origin < 0 || s.origin >= p_.n ||
            !wellformed_bft_lock(s.lock, p_.n, p_.f))
          return;
      for (const auto& s : m->statuses) add_status(s.view, s.origin, s.lock);
      if (m->view == v_) {
        maybe_propose(out);
        maybe_statusset_echo(out);
      }
    } else if (const auto* m = std::get_if<BPropose>(&env.payload)) {
      on_propose(env, *m, out);
    } else if (const auto* m = std::get_if<BVote1>(&env.payload)) {
      if (m->view < 1 || m->view < v_) return;
      if (!vote1_seen_[m->view].insert(env.origin).second) return;
      vote1_[{m->view, m->value}].insert(env.origin);
      if (m->view == v_) check_vote1(out);
    } else if (const auto* m = std::get_if<BVote2>(&env.payload)) {
      if (m->view < 1 || m->view < v_) return;
      if (!vote2_seen_[m->view].insert(env.origin).second) return;
      vote2_[{m->view, m->value}].insert(env.origin);
      if (m->view == v_) check_vote2(out);
    } else if (const auto* m = std::get_if<BCommit>(&env.payload)) {
      if (!wellformed_vote_cert(m->cert, p_.n, p_.f)) return;
      commit(m->cert, out);
    } else if (const auto* m = std::get_if<BViewChange>(&env.payload)) {
      if (m->view < 1 || m->view < v_) return;
      if (vc_seen_[m->view].insert(env.origin).second)
        vc_envs_[m->view].emplace_back(env.origin, env.payload);
      if (static_cast<int>(vc_seen_[m->view].size()) >= vc_threshold() &&
          !vc_processed_.count(m->view))
        process_view_change(m->view, out);
    } else if (const auto* m = std::get_if<BLocked>(&env.payload)) {
      if (!wellformed_bft_lock(m->lock, p_.n, p_.f)) return;
      if (lock_below(lock_, m->lock)) adopt_lock(*m->lock, out);
      std::string key = signed_key(env.origin, render(env.payload));
      if (locked_echoed_.insert(key).second)
        out.push_back(SendAction{kBroadcast, env.origin, env.payload});
    }
  }

  void on_timer(const std::string& id, std::vector<Action>& out) {
    if (id == "input") {
      if (!prephase_active_ || prephase_done_) return;
      std::vector<SignedInput> inputs;
      for (const auto& [o, v] : input_by_origin_) inputs.push_back({o, v});
      out.push_back(SendAction{kBroadcast, p_.self, Message{BForwardInputs{std::move(inputs)}}});
      return;
    }
    auto colon = id.find(':');
    if (colon == std::string::npos) return;
    int view = std::stoi(id.substr(colon + 1));
    if (id.rfind("enter:", 0) == 0) {
      if (view > v_) enter_view(view, out);
    } else if (id.rfind("view:", 0) == 0) {
      if (view == v_)
        out.push_back(SendAction{kBroadcast, p_.self, Message{BViewChange{v_}}});
    } else if (id.rfind("proposal:", 0) == 0) {
      if (view == v_ && proposals_[v_].empty())
        out.push_back(SendAction{kBroadcast, p_.self, Message{BViewChange{v_}}});
    } else if (id.rfind("vote:", 0) == 0) {
      if (view != v_ || equivocated_.count(view) || view <= stop_votes_upto_) return;
      auto it = vote_pending_.find(view);
      if (it == vote_pending_.end() || !sent_vote1_.insert(view).second) return;
      out.push_back(SendAction{kBroadcast, p_.self, Message{BVote1{view, it->second}}});
    }
  }

  // ---- pre-phase ----------------------------------------------------------

  void on_input(int origin, const std::string& value, const Envelope& env,
                std::vector<Action>& out) {
    if (!prephase_active_ || prephase_done_) return;
    input_by_origin_.try_emplace(origin, value);  // one input counted per origin
    std::string key = signed_key(env.origin, render(env.payload));
    if (input_echoed_.insert(key).second)
      out.push_back(SendAction{kBroadcast, env.origin, env.payload});
  }

  void on_forward_inputs(int origin, const BForwardInputs& m, std::vector<Action>& out) {
    if (!prephase_active_ || prephase_done_) return;
    for (const auto& in : m.inputs)
      if (in.origin < 0 || in.origin >= p_.n) return;
    if (!fi_origins_.insert(origin).second) return;
    for (const auto& in : m.inputs) fi_support_[in.value].insert(in.origin);
    if (static_cast<int>(fi_origins_.size()) < quorum()) return;
    prephase_done_ = true;
    // prefer the node's own input when it qualifies; otherwise the highest
    // qualifying value by the fixed value order
    std::optional<std::string> winner;
    auto qualifies = [&](const std::string& v) {
      auto it = fi_support_.find(v);
      return it != fi_support_.end() && static_cast<int>(it->second.size()) >= p_.f + 1;
    };
    if (qualifies(p_.input)) {
      winner = p_.input;
    } else {
      for (const auto& [v, support] : fi_support_)
        if (static_cast<int>(support.size()) >= p_.f + 1) winner = v;  // map order: last is max
    }
    if (winner) {
      std::vector<int> origins(fi_support_[*winner].begin(), fi_support_[*winner].end());
      origins.resize(p_.f + 1);
      BftLock cand{0, *winner, std::move(origins)};
      // a lock from a later view may already have arrived; never rank down
      if (lock_below(lock_, cand)) adopt_lock(cand, out);
    }
    enter_view(1, out);
  }

  // ---- view core ----------------------------------------------------------

  void add_status(int view, int origin, const std::optional<BftLock>& lock) {
    if (origin < 0 || origin >= p_.n) return;
    if (!status_seen_[view].insert(origin).second) return;
    status_[view].push_back(SignedBStatus{origin, view, lock});
  }

  void maybe_propose(std::vector<Action>& out) {
    if (leader_of(v_, p_.n) != p_.self) return;
    auto it = status_.find(v_);
    if (it == status_.end() || static_cast<int>(it->second.size()) < quorum()) return;
    if (!proposed_.insert(v_).second) return;
    std::vector<SignedBStatus> s(it->second.begin(), it->second.begin() + quorum());
    std::optional<BftLock> best;
    for (const auto& st : s)
      if (lock_below(best, st.lock)) best = st.lock;
    std::string val = best ? best->value : p_.input;
    out.push_back(SendAction{kBroadcast, p_.self, Message{BPropose{v_, val, std::move(s)}}});
  }

  void maybe_statusset_echo(std::vector<Action>& out) {
    if (mode_ != BftMode::Gas || leader_of(v_, p_.n) == p_.self) return;
    auto it = status_.find(v_);
    if (it == status_.end() || static_cast<int>(it->second.size()) < quorum()) return;
    if (!statusset_sent_.insert(v_).second) return;
    std::vector<SignedBStatus> first(it->second.begin(), it->second.begin() + quorum());
    out.push_back(SendAction{kBroadcast, p_.self, Message{BStatusSet{v_, std::move(first)}}});
    out.push_back(TimerSetAction{view_tag("proposal", v_),
                                 3 * static_cast<Time>(p_.dprime) * p_.delta});
  }

  bool justified(const BPropose& m) const {
    if (static_cast<int>(m.justification.size()) != quorum()) return false;
    std::set<int> seen;
    std::optional<BftLock> best;
    for (const auto& s : m.justification) {
      if (s.view != m.view || s.origin < 0 || s.origin >= p_.n) return false;
      if (!seen.insert(s.origin).second) return false;
      if (!wellformed_bft_lock(s.lock, p_.n, p_.f)) return false;
      if (lock_below(best, s.lock)) best = s.lock;
    }
    if (!value_ok(m.value)) return false;
    return !best || best->value == m.value;
  }

  void on_propose(const Envelope& env, const BPropose& m, std::vector<Action>& out) {
    if (m.view < 1 || env.origin != leader_of(m.view, p_.n)) return;
    if (!justified(m)) return;  // malformed or unjustified proposals carry no weight
    if (m.view < v_) {
      out.push_back(NoteAction{"stale_propose v=" + std::to_string(m.view)});
      return;
    }
    auto& seen = proposals_[m.view];
    bool known = false;
    for (const auto& [val, _] : seen) known = known || val == m.value;
    if (!known) seen.emplace_back(m.value, env.payload);
    if (m.view == v_) {
      if (!known && seen.size() == 1) accept_first_proposal(out);
      if (seen.size() >= 2) act_on_equivocation(out);
    }
  }

  void accept_first_proposal(std::vector<Action>& out) {
    if (!vote_pending_.try_emplace(v_, proposals_[v_].front().first).second) return;
    // forward the proposal, then let the vote timer watch for equivocation
    out.push_back(
        SendAction{kBroadcast, leader_of(v_, p_.n), proposals_[v_].front().second});
    out.push_back(TimerSetAction{view_tag("vote", v_), static_cast<Time>(p_.d) * p_.delta});
    vote_timer_live_.insert(v_);
  }

  void act_on_equivocation(std::vector<Action>& out) {
    equivocated_.insert(v_);
    if (!equiv_actioned_.insert(v_).second) return;
    out.push_back(NoteAction{"equivocation v=" + std::to_string(v_)});
    for (size_t i = 0; i < proposals_[v_].size() && i < 2; ++i)
      out.push_back(SendAction{kBroadcast, leader_of(v_, p_.n), proposals_[v_][i].second});
    out.push_back(SendAction{kBroadcast, p_.self, Message{BViewChange{v_}}});
    if (vote_timer_live_.erase(v_))
      out.push_back(TimerCancelAction{view_tag("vote", v_)});
  }

  void check_vote1(std::vector<Action>& out) {
    for (auto& [key, origins] : vote1_) {
      if (key.first != v_ || static_cast<int>(origins.size()) < quorum()) continue;
      std::vector<int> by(origins.begin(), origins.end());
      by.resize(quorum());
      BftLock cert{v_, key.second, std::move(by)};
      if (lock_below(lock_, cert)) adopt_lock(cert, out);
      if (v_ > stop_votes_upto_ && sent_vote2_.insert(v_).second)
        out.push_back(SendAction{kBroadcast, p_.self, Message{BVote2{v_, key.second}}});
      return;
    }
  }

  void check_vote2(std::vector<Action>& out) {
    for (auto& [key, origins] : vote2_) {
      if (key.first != v_ || static_cast<int>(origins.size()) < quorum()) continue;
      std::vector<int> by(origins.begin(), origins.end());
      by.resize(quorum());
      commit(BftVoteCert{v_, key.second, std::move(by)}, out);
      return;
    }
  }

  void process_view_change(int view, std::vector<Action>& out) {
    vc_processed_.insert(view);
    stop_votes_upto_ = std::max(stop_votes_upto_, view);
    int th = vc_threshold();
    auto& envs = vc_envs_[view];
    for (int i = 0; i < th && i < static_cast<int>(envs.size()); ++i)
      out.push_back(SendAction{kBroadcast, envs[i].first, envs[i].second});
    out.push_back(SendAction{kBroadcast, p_.self, Message{BLocked{lock_}}});
    if (vote_timer_live_.erase(v_))
      out.push_back(TimerCancelAction{view_tag("vote", v_)});
    out.push_back(TimerSetAction{view_tag("enter", view + 1),
                                 2 * static_cast<Time>(p_.d) * p_.delta});
  }

  void adopt_lock(BftLock l, std::vector<Action>& out) {
    lock_ = std::move(l);
    out.push_back(NoteAction{"lock view=" + std::to_string(lock_->view) +
                             " val=" + lock_->value});
  }

  void commit(const BftVoteCert& cert, std::vector<Action>& out) {
    if (decided_) return;
    decided_ = true;
    out.push_back(SendAction{kBroadcast, p_.self, Message{BCommit{cert}}});
    out.push_back(DecideAction{cert.value});
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
    prune(vote1_);
    prune(vote2_);
    prune(vote1_seen_);
    prune(vote2_seen_);
    prune(vc_seen_);
    prune(vc_envs_);
    prune(proposals_);
  }

  ProtoParams p_;
  BftMode mode_;
  int v_ = 0;
  std::optional<BftLock> lock_;
  bool decided_ = false;
  int stop_votes_upto_ = 0;

  bool prephase_active_ = false;
  bool prephase_done_ = false;
  std::map<int, std::string> input_by_origin_;
  std::set<std::string> input_echoed_;
  std::set<int> fi_origins_;
  std::map<std::string, std::set<int>> fi_support_;

  std::map<int, std::vector<SignedBStatus>> status_;
  std::map<int, std::set<int>> status_seen_;
  std::set<int> proposed_;
  std::set<int> statusset_sent_;
  std::map<int, std::vector<std::pair<std::string, Message>>> proposals_;
  std::map<int, std::string> vote_pending_;
  std::set<int> vote_timer_live_;
  std::set<int> equivocated_;
  std::set<int> equiv_actioned_;
  std::set<int> sent_vote1_, sent_vote2_;
  std::map<int, std::set<int>> vote1_seen_, vote2_seen_;
  std::map<std::pair<int, std::string>, std::set<int>> vote1_, vote2_;
  std::map<int, std::set<int>> vc_seen_;
  std::map<int, std::vector<std::pair<int, Message>>> vc_envs_;
  std::set<int> vc_processed_;
  std::set<std::string> locked_echoed_;
};

}  // namespace gsyn
