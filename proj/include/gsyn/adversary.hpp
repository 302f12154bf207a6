#pragma once

// Fault and scheduling strategies: the Byzantine behavior library, the
// class-constrained delay scripts, and the seeded fuzz-case generator.
// Behaviors may only sign with their own id or re-send envelopes they have
// received; the simulator enforces this at envelope creation.

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gsyn/bft.hpp"
#include "gsyn/cft.hpp"
#include "gsyn/graph.hpp"
#include "gsyn/messages.hpp"
#include "gsyn/protocol.hpp"
#include "gsyn/simnet.hpp"

namespace gsyn {

// ---------------------------------------------------------------------------
// Adversary script
// ---------------------------------------------------------------------------

struct CrashCmd {
  int node = -1;
  Time t = 0;
};

struct CorruptCmd {
  int node = -1;
  Time t = 0;
  std::string behavior;
  std::map<std::string, std::string> params;
};

struct DelayOverride {
  int origin = -1, sender = -1, recipient = -1;
  uint64_t seq = 0;
  Time delay = 1;  // duration added to the send time
};

// Holds every message between side_a and side_c until `release`. An empty
// side_c means the complement of side_a; nodes in neither side (a Byzantine
// bridge) are unconstrained.
struct SplitRule {
  std::vector<int> side_a;
  std::vector<int> side_c;
  Time release = 0;

  bool cross(int u, int v, int n) const {
    NodeMask a = mask_of(side_a);
    NodeMask c = side_c.empty() ? ((bit(n) - 1) & ~a) : mask_of(side_c);
    return ((a & bit(u)) && (c & bit(v))) || ((c & bit(u)) && (a & bit(v)));
  }
};

struct AdversaryScript {
  std::vector<CrashCmd> crashes;
  std::vector<CorruptCmd> corruptions;
  std::string delay_policy = "honest";  // honest | adversarial-max | scripted
  Time delay_cap = 0;                   // honest/uniform draw cap; 0 = 4*delta
  Time async_release = 0;               // adversarial-max; 0 = horizon - 1
  std::optional<SplitRule> split;
  bool random_uniform = false;
  std::vector<DelayOverride> overrides;
};

inline const std::vector<std::string>& behavior_names() {
  static const std::vector<std::string> names{"silent", "equivocating-leader",
                                              "stale-lock-proposer", "random-valid",
                                              "dual-personality"};
  return names;
}

inline void validate_script(const AdversaryScript& s, const TimedGraph& g, int f,
                            const SimParams& params, bool cft) {
  std::set<int> faulty;
  for (const auto& c : s.crashes) {
    g.check_node(c.node);
    if (c.t < 0) throw ScenarioError("crash time must be >= 0");
    if (!faulty.insert(c.node).second) throw ScenarioError("node crashed twice");
  }
  for (const auto& c : s.corruptions) {
    if (cft) throw ScenarioError("the crash-fault adversary cannot corrupt nodes");
    g.check_node(c.node);
    if (c.t < 0) throw ScenarioError("corruption time must be >= 0");
    if (!faulty.insert(c.node).second) throw ScenarioError("node corrupted twice");
    bool known = false;
    for (const auto& n : behavior_names()) known = known || n == c.behavior;
    if (!known) throw ScenarioError("unknown behavior '" + c.behavior + "'");
  }
  if (static_cast<int>(faulty.size()) > f)
    throw ScenarioError("script exceeds the fault bound f");
  if (s.delay_policy != "honest" && s.delay_policy != "adversarial-max" &&
      s.delay_policy != "scripted")
    throw ScenarioError("unknown delay policy '" + s.delay_policy + "'");
  for (const auto& o : s.overrides) {
    g.check_node(o.sender);
    g.check_node(o.recipient);
    if (o.delay < 1) throw ScenarioError("delay override must be >= 1 tick");
    auto cls = g.edge(o.sender, o.recipient);
    if (!cls) throw ScenarioError("delay override on a missing link");
    if (*cls == TimingClass::Synchronous && o.delay > params.delta)
      throw ScenarioError("delay override breaks the synchronous contract");
  }
  if (s.split) {
    for (int u = 0; u < g.node_count(); ++u)
      for (int v = u + 1; v < g.node_count(); ++v) {
        if (!s.split->cross(u, v, g.node_count())) continue;
        auto cls = g.edge(u, v);
        if (!cls) continue;
        if (*cls == TimingClass::Synchronous)
          throw ScenarioError("split script rejected: synchronous cross link " +
                              std::to_string(u) + "-" + std::to_string(v));
        if (*cls == TimingClass::PartiallySynchronous &&
            (s.split->release < params.gst ||
             s.split->release > params.gst + params.delta))
          throw ScenarioError("split release time violates the psync contract");
      }
    if (s.split->release < 1) throw ScenarioError("split release time must be >= 1");
  }
}

// Scripted delays: explicit per-message overrides, an optional partition
// hold, and optionally seeded uniform draws within the contract; anything
// not covered falls back to honest delays.
class ScriptedDelays : public IDelayPolicy {
 public:
  ScriptedDelays(const AdversaryScript& s, Time honest_cap)
      : split_(s.split), random_uniform_(s.random_uniform), honest_(honest_cap),
        cap_(honest_cap) {
    for (const auto& o : s.overrides)
      overrides_[{o.origin, o.sender, o.recipient, o.seq}] = o.delay;
  }

  Time delivery_time(const DelayRequest& req, Rng& rng) override {
    const Envelope& e = req.env;
    auto it = overrides_.find({e.origin, e.sender, e.recipient, e.link_seq});
    if (it != overrides_.end()) return e.send_time + it->second;
    if (split_ && split_->cross(e.sender, e.recipient, req.params.n))
      return std::max(e.send_time + 1, split_->release);
    if (random_uniform_) {
      Time lo = e.send_time + 1;
      Time hi;
      switch (req.cls) {
        case TimingClass::Synchronous: hi = e.send_time + req.params.delta; break;
        case TimingClass::PartiallySynchronous:
          hi = std::max(e.send_time, req.params.gst) + req.params.delta;
          break;
        case TimingClass::Asynchronous: hi = e.send_time + cap_; break;
      }
      return rng.range(lo, std::max(lo, hi));
    }
    return honest_.delivery_time(req, rng);
  }

 private:
  std::map<std::tuple<int, int, int, uint64_t>, Time> overrides_;
  std::optional<SplitRule> split_;
  bool random_uniform_;
  HonestDelays honest_;
  Time cap_;
};

inline std::unique_ptr<IDelayPolicy> make_delay_policy(const AdversaryScript& s,
                                                       const SimParams& params) {
  Time cap = s.delay_cap > 0 ? s.delay_cap : 4 * params.delta;
  if (s.delay_policy == "honest") return std::make_unique<HonestDelays>(cap);
  if (s.delay_policy == "adversarial-max") {
    Time release = s.async_release > 0 ? s.async_release : params.horizon - 1;
    return std::make_unique<AdversarialMaxDelays>(release);
  }
  return std::make_unique<ScriptedDelays>(s, cap);
}

// ---------------------------------------------------------------------------
// Byzantine behaviors
// ---------------------------------------------------------------------------

class SilentBehavior : public IProtocol {
 public:
  std::vector<Action> on_event(const NodeEvent&) override { return {}; }
};

// Gathers n-f statuses for one view, then sends two differently-valued
// proposals over the same justification: val_a to side_a, val_b to the rest.
class EquivocatingLeader : public IProtocol {
 public:
  EquivocatingLeader(ProtoParams p, int view, std::string val_a, std::string val_b,
                     std::vector<int> side_a, const std::vector<Envelope>& history)
      : p_(std::move(p)), view_(view), val_a_(std::move(val_a)), val_b_(std::move(val_b)),
        side_a_(side_a.begin(), side_a.end()) {
    for (const auto& e : history) absorb(e);
  }

  std::vector<Action> on_event(const NodeEvent& ev) override {
    std::vector<Action> out;
    if (ev.kind == NodeEvent::Kind::Deliver) absorb(*ev.env);
    if (!sent_ && static_cast<int>(statuses_.size()) >= p_.n - p_.f) {
      sent_ = true;
      std::vector<SignedBStatus> s(statuses_.begin(), statuses_.begin() + (p_.n - p_.f));
      for (int r = 0; r < p_.n; ++r) {
        if (r == p_.self) continue;
        const std::string& val = side_a_.count(r) ? val_a_ : val_b_;
        out.push_back(SendAction{r, p_.self, Message{BPropose{view_, val, s}}});
      }
    }
    return out;
  }

 private:
  void absorb(const Envelope& e) {
    const auto* st = std::get_if<BStatus>(&e.payload);
    if (!st || st->view != view_ || !seen_.insert(e.origin).second) return;
    statuses_.push_back(SignedBStatus{e.origin, st->view, st->lock});
  }

  ProtoParams p_;
  int view_;
  std::string val_a_, val_b_;
  std::set<int> side_a_;
  std::set<int> seen_;
  std::vector<SignedBStatus> statuses_;
  bool sent_ = false;
};

// Proposes a value that ignores the locks it gathered. The justification is
// deliberately broken (wrong value or truncated set), so honest validators
// must drop the proposal.
class StaleLockProposer : public IProtocol {
 public:
  StaleLockProposer(ProtoParams p, int view, const std::vector<Envelope>& history)
      : p_(std::move(p)), view_(view) {
    for (const auto& e : history) absorb(e);
  }

  std::vector<Action> on_event(const NodeEvent& ev) override {
    std::vector<Action> out;
    if (ev.kind == NodeEvent::Kind::Deliver) absorb(*ev.env);
    if (sent_ || static_cast<int>(statuses_.size()) < p_.n - p_.f) return out;
    sent_ = true;
    std::vector<SignedBStatus> s(statuses_.begin(), statuses_.begin() + (p_.n - p_.f));
    std::optional<BftLock> best;
    for (const auto& st : s)
      if (lock_below(best, st.lock)) best = st.lock;
    if (best) {
      std::string val = best->value == p_.input ? p_.input + "#stale" : p_.input;
      out.push_back(SendAction{kBroadcast, p_.self, Message{BPropose{view_, val, s}}});
    } else {
      s.pop_back();  // undersized justification
      out.push_back(SendAction{kBroadcast, p_.self, Message{BPropose{view_, p_.input, s}}});
    }
    return out;
  }

 private:
  void absorb(const Envelope& e) {
    const auto* st = std::get_if<BStatus>(&e.payload);
    if (!st || st->view != view_ || !seen_.insert(e.origin).second) return;
    statuses_.push_back(SignedBStatus{e.origin, st->view, st->lock});
  }

  ProtoParams p_;
  int view_;
  std::set<int> seen_;
  std::vector<SignedBStatus> statuses_;
  bool sent_ = false;
};

// Emits protocol-shaped chatter signed with its own id: statuses, votes,
// view changes and inputs over small views and the declared value pool.
class RandomValid : public IProtocol {
 public:
  RandomValid(ProtoParams p, uint64_t seed) : p_(std::move(p)), rng_(seed) {}

  std::vector<Action> on_event(const NodeEvent&) override {
    std::vector<Action> out;
    if (!rng_.chance(1, 2)) return out;
    int burst = static_cast<int>(rng_.range(1, 2));
    for (int i = 0; i < burst; ++i) {
      int v = static_cast<int>(rng_.range(1, 4));
      std::string val = pick_value();
      switch (rng_.range(0, 4)) {
        case 0: out.push_back(SendAction{kBroadcast, p_.self, Message{BStatus{v, std::nullopt}}}); break;
        case 1: out.push_back(SendAction{kBroadcast, p_.self, Message{BVote1{v, val}}}); break;
        case 2: out.push_back(SendAction{kBroadcast, p_.self, Message{BVote2{v, val}}}); break;
        case 3: out.push_back(SendAction{kBroadcast, p_.self, Message{BViewChange{v}}}); break;
        default: out.push_back(SendAction{kBroadcast, p_.self, Message{BInput{val}}}); break;
      }
    }
    return out;
  }

 private:
  std::string pick_value() {
    if (p_.valid_values.empty()) return p_.input;
    return p_.valid_values[rng_.range(0, static_cast<int64_t>(p_.valid_values.size()) - 1)];
  }

  ProtoParams p_;
  Rng rng_;
};

// Runs two honest machines with different inputs, each talking only to its
// own partition. Realizes the two-world executions behind the necessity
// proofs for condition-violating graphs.
class DualPersonality : public IProtocol {
 public:
  DualPersonality(const ProtoParams& p, BftMode mode, std::vector<int> side_a,
                  const std::string& val_a, const std::string& val_b)
      : self_(p.self) {
    ProtoParams pa = p;
    pa.input = val_a;
    ProtoParams pc = p;
    pc.input = val_b;
    a_ = std::make_unique<BftNode>(pa, mode);
    c_ = std::make_unique<BftNode>(pc, mode);
    for (int u : side_a) side_a_.insert(u);
    for (int u = 0; u < p.n; ++u) all_.push_back(u);
  }

  std::vector<Action> on_event(const NodeEvent& ev) override {
    std::vector<Action> out;
    switch (ev.kind) {
      case NodeEvent::Kind::Init:
        route(0, a_->on_event(ev), out);
        route(1, c_->on_event(ev), out);
        break;
      case NodeEvent::Kind::Deliver: {
        int which;
        if (ev.env->sender == self_) {
          if (self_route_.empty()) return out;  // stray; nothing expected
          which = self_route_.front();
          self_route_.pop_front();
        } else {
          which = side_a_.count(ev.env->sender) ? 0 : 1;
        }
        route(which, (which == 0 ? a_ : c_)->on_event(ev), out);
        break;
      }
      case NodeEvent::Kind::TimerFire: {
        NodeEvent inner = ev;
        int which = ev.timer_id.rfind("A|", 0) == 0 ? 0 : 1;
        inner.timer_id = ev.timer_id.substr(2);
        route(which, (which == 0 ? a_ : c_)->on_event(inner), out);
        break;
      }
    }
    return out;
  }

 private:
  void route(int which, std::vector<Action> actions, std::vector<Action>& out) {
    const char* prefix = which == 0 ? "A|" : "C|";
    for (auto& a : actions) {
      if (auto* s = std::get_if<SendAction>(&a)) {
        std::vector<NodeId> targets;
        if (s->to == kBroadcast) {
          for (NodeId r : side_a_set(which)) targets.push_back(r);
          targets.push_back(self_);
        } else if (s->to == self_ || in_side(which, s->to)) {
          targets.push_back(s->to);
        }
        for (NodeId r : targets) {
          if (r == self_) self_route_.push_back(which);
          out.push_back(SendAction{r, s->origin, s->payload});
        }
      } else if (auto* t = std::get_if<TimerSetAction>(&a)) {
        out.push_back(TimerSetAction{prefix + t->id, t->duration});
      } else if (auto* c = std::get_if<TimerCancelAction>(&a)) {
        out.push_back(TimerCancelAction{prefix + c->id});
      } else if (auto* d = std::get_if<DecideAction>(&a)) {
        out.push_back(*d);  // the engine records corrupted decides as notes
      } else if (auto* n = std::get_if<NoteAction>(&a)) {
        out.push_back(NoteAction{prefix + n->text});
      }
    }
  }

  bool in_side(int which, NodeId u) const {
    return which == 0 ? side_a_.count(u) > 0 : (u != self_ && !side_a_.count(u));
  }

  std::vector<NodeId> side_a_set(int which) const {
    std::vector<NodeId> out;
    for (NodeId u : all_) {
      if (u == self_) continue;
      if (in_side(which, u)) out.push_back(u);
    }
    return out;
  }

  NodeId self_;
  std::unique_ptr<BftNode> a_, c_;
  std::set<int> side_a_;
  std::vector<NodeId> all_;
  std::deque<int> self_route_;
};

// ---------------------------------------------------------------------------
// Fuzz-case generation (protocol-level; the scenario layer adds the file
// representation)
// ---------------------------------------------------------------------------

struct FuzzBounds {
  int min_n = 3;
  int max_n = 6;
  int max_f = 3;
  Time delta = 10;
  Time horizon = 4000;
};

struct FuzzCase {
  int n = 0;
  int f = 0;
  bool prephase = false;
  Time delta = 10;
  Time gst = 0;
  Time horizon = 0;
  std::vector<std::tuple<int, int, TimingClass>> edges;
  std::vector<std::string> inputs;
  AdversaryScript script;
  uint64_t seed = 0;
};

inline FuzzCase make_fuzz_case(const std::string& family, uint64_t seed, uint64_t index,
                               const FuzzBounds& bounds) {
  bool cft = family.rfind("cft", 0) == 0;
  bool gas = family.size() >= 3 && family.substr(family.size() - 3) == "gas";
  Rng rng(mix_seed(seed, index));

  FuzzCase fc;
  fc.seed = mix_seed(seed, index ^ 0xf00d);
  fc.delta = bounds.delta;
  fc.horizon = bounds.horizon;

  for (int attempt = 0;; ++attempt) {
    fc.n = static_cast<int>(rng.range(bounds.min_n, bounds.max_n));
    int fmax = cft ? fc.n - 1 : (fc.n - 1) / 2;
    fmax = std::min(fmax, bounds.max_f);
    if (fmax < 1) continue;
    fc.f = static_cast<int>(rng.range(1, fmax));

    TimedGraph g(fc.n);
    fc.edges.clear();
    for (int u = 0; u < fc.n; ++u)
      for (int v = u + 1; v < fc.n; ++v) {
        TimingClass c;
        if (attempt >= 40) {
          c = TimingClass::Synchronous;  // complete sync always satisfies the conditions
        } else if (!gas) {
          c = rng.chance(1, 2) ? TimingClass::Synchronous : TimingClass::PartiallySynchronous;
        } else {
          int64_t r = rng.range(0, 9);
          c = r < 4   ? TimingClass::Synchronous
              : r < 7 ? TimingClass::PartiallySynchronous
                      : TimingClass::Asynchronous;
        }
        g.add_edge(u, v, c);
        fc.edges.emplace_back(u, v, c);
      }

    bool ok;
    if (cft)
      ok = gas ? check_cft_gas(g, fc.f).holds : check_cft_gps(g, fc.f).holds;
    else
      ok = gas ? check_bft_gas(g, fc.f).holds : check_bft_gps(g, fc.f).holds;
    if (ok) break;
  }

  fc.gst = rng.chance(1, 4) ? fc.horizon * 2 : rng.range(0, fc.horizon / 2);
  if (!cft) fc.prephase = rng.chance(1, 3);

  const char* pool[] = {"a", "b"};
  for (int u = 0; u < fc.n; ++u) fc.inputs.push_back(pool[rng.range(0, 1)]);

  AdversaryScript& s = fc.script;
  int faults = static_cast<int>(rng.range(0, fc.f));
  std::set<int> used;
  for (int i = 0; i < faults; ++i) {
    int node = static_cast<int>(rng.range(0, fc.n - 1));
    if (!used.insert(node).second) continue;
    Time t = rng.range(0, fc.horizon / 4);
    if (cft) {
      s.crashes.push_back({node, t});
    } else {
      CorruptCmd c{node, t, "", {}};
      switch (rng.range(0, 3)) {
        case 0: c.behavior = "silent"; break;
        case 1: c.behavior = "random-valid"; break;
        case 2: {
          c.behavior = "equivocating-leader";
          c.params["view"] = std::to_string(rng.range(1, 3));
          c.params["val_a"] = pool[rng.range(0, 1)];
          c.params["val_b"] = pool[rng.range(0, 1)];
          std::string side;
          for (int u = 0; u < fc.n; ++u)
            if (u != node && rng.chance(1, 2)) side += (side.empty() ? "" : ",") + std::to_string(u);
          c.params["side_a"] = side;
          break;
        }
        default:
          c.behavior = "stale-lock-proposer";
          c.params["view"] = std::to_string(rng.range(1, 3));
          break;
      }
      s.corruptions.push_back(std::move(c));
    }
  }

  switch (rng.range(0, 2)) {
    case 0:
      s.delay_policy = "honest";
      s.delay_cap = rng.range(1, 6 * fc.delta);
      break;
    case 1:
      s.delay_policy = "adversarial-max";
      s.async_release = rng.range(fc.delta, fc.horizon + fc.horizon / 4);
      break;
    default:
      s.delay_policy = "scripted";
      s.random_uniform = true;
      s.delay_cap = rng.range(1, 6 * fc.delta);
      break;
  }
  return fc;
}

}  // namespace gsyn
