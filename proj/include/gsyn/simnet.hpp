#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "gsyn/common.hpp"
#include "gsyn/graph.hpp"
#include "gsyn/messages.hpp"

namespace gsyn {

// ---------------------------------------------------------------------------
// Trace
// ---------------------------------------------------------------------------

enum class RecordKind { Send, Deliver, TimerSet, TimerFire, StateNote, Decide };

inline const char* record_kind_name(RecordKind k) {
  switch (k) {
    case RecordKind::Send: return "send";
    case RecordKind::Deliver: return "deliver";
    case RecordKind::TimerSet: return "timer_set";
    case RecordKind::TimerFire: return "timer_fire";
    case RecordKind::StateNote: return "state_note";
    case RecordKind::Decide: return "decide";
  }
  return "?";
}

struct TraceRecord {
  Time time = 0;
  int node = -1;  // -1 for engine records
  RecordKind kind = RecordKind::StateNote;
  std::string detail;
};

struct Trace {
  std::vector<TraceRecord> records;

  std::string serialize() const {
    std::string out;
    for (const auto& r : records) {
      out += std::to_string(r.time);
      out += '\t';
      out += std::to_string(r.node);
      out += '\t';
      out += record_kind_name(r.kind);
      out += '\t';
      out += r.detail;
      out += '\n';
    }
    return out;
  }

  uint64_t hash() const { return fnv1a64(serialize()); }
};

// ---------------------------------------------------------------------------
// Envelopes and protocol interface
// ---------------------------------------------------------------------------

struct Envelope {
  NodeId origin = -1;   // cryptographic signer; never altered by echo
  NodeId sender = -1;   // transmitting hop
  NodeId recipient = -1;
  Message payload;
  Time send_time = 0;
  uint64_t link_seq = 0;  // per (sender, recipient) FIFO position
};

constexpr NodeId kBroadcast = -1;

struct SendAction {
  NodeId to = kBroadcast;
  NodeId origin = -1;  // equals the acting node except when echoing
  Message payload;
};
struct TimerSetAction { std::string id; Time duration = 0; };
struct TimerCancelAction { std::string id; };
struct DecideAction { std::string value; };
struct NoteAction { std::string text; };

using Action = std::variant<SendAction, TimerSetAction, TimerCancelAction, DecideAction,
                            NoteAction>;

struct NodeEvent {
  enum class Kind { Init, Deliver, TimerFire };
  Kind kind = Kind::Init;
  Time now = 0;
  const Envelope* env = nullptr;  // Deliver only
  std::string timer_id;           // TimerFire only
};

class IProtocol {
 public:
  virtual ~IProtocol() = default;
  virtual std::vector<Action> on_event(const NodeEvent& ev) = 0;
};

struct BehaviorInit {
  NodeId node = -1;
  Time now = 0;
  uint64_t seed = 0;
  std::vector<Envelope> history;  // everything delivered to the node so far
};

using BehaviorFactory = std::function<std::unique_ptr<IProtocol>(const BehaviorInit&)>;

// ---------------------------------------------------------------------------
// Delay policies
// ---------------------------------------------------------------------------

struct SimParams {
  int n = 0;
  Time delta = 1;
  Time gst = 0;
  Time horizon = 1000;
  uint64_t seed = 0;
  Time eps = 1;  // self-delivery delay
};

struct DelayRequest {
  const Envelope& env;
  TimingClass cls;
  const SimParams& params;
};

// Policies pick a delivery time within the link's contract; the simulator
// validates the choice and applies the FIFO clamp.
class IDelayPolicy {
 public:
  virtual ~IDelayPolicy() = default;
  virtual Time delivery_time(const DelayRequest& req, Rng& rng) = 0;
};

// Sync and post-GST psync messages take exactly delta; pre-GST psync and
// async messages take a seeded draw of at most `cap`.
class HonestDelays : public IDelayPolicy {
 public:
  explicit HonestDelays(Time cap) : cap_(cap) {}

  Time delivery_time(const DelayRequest& req, Rng& rng) override {
    Time s = req.env.send_time;
    switch (req.cls) {
      case TimingClass::Synchronous:
        return s + req.params.delta;
      case TimingClass::PartiallySynchronous: {
        if (s >= req.params.gst) return s + req.params.delta;
        Time t = s + rng.range(1, cap_);
        return std::min(t, req.params.gst + req.params.delta);
      }
      case TimingClass::Asynchronous:
        return s + rng.range(1, cap_);
    }
    return s + 1;
  }

 private:
  Time cap_;
};

// Every delay stretched to its contract maximum; async messages held until
// a fixed release time.
class AdversarialMaxDelays : public IDelayPolicy {
 public:
  explicit AdversarialMaxDelays(Time async_release) : release_(async_release) {}

  Time delivery_time(const DelayRequest& req, Rng&) override {
    Time s = req.env.send_time;
    switch (req.cls) {
      case TimingClass::Synchronous:
        return s + req.params.delta;
      case TimingClass::PartiallySynchronous:
        return std::max(s, req.params.gst) + req.params.delta;
      case TimingClass::Asynchronous:
        return std::max(s + 1, release_);
    }
    return s + 1;
  }

 private:
  Time release_;
};

// ---------------------------------------------------------------------------
// Simulator
// ---------------------------------------------------------------------------

class Simulator {
 public:
  Simulator(TimedGraph graph, SimParams params, std::unique_ptr<IDelayPolicy> policy)
      : graph_(std::move(graph)),
        params_(params),
        policy_(std::move(policy)),
        delay_rng_(mix_seed(params.seed, 0xd31a)),
        nodes_(static_cast<size_t>(params.n)) {
    if (graph_.node_count() != params_.n)
      throw ScenarioError("simulator: graph size does not match n");
  }

  void set_machine(NodeId u, std::unique_ptr<IProtocol> m) {
    nodes_.at(u).machine = std::move(m);
  }

  void set_node_skew(NodeId u, int num, int den) {
    if (num < den || den < 1) throw ScenarioError("skew must be >= 1");
    nodes_.at(u).skew_num = num;
    nodes_.at(u).skew_den = den;
  }

  void schedule_crash(NodeId u, Time t) {
    if (u < 0 || u >= params_.n) throw ScenarioError("crash: invalid node");
    enqueue(QEvent{t, kCrash, u, next_seq()});
    scripted_faulty_.insert(u);
  }

  void schedule_corrupt(NodeId u, Time t, std::string name, BehaviorFactory f) {
    if (u < 0 || u >= params_.n) throw ScenarioError("corrupt: invalid node");
    QEvent ev{t, kCorrupt, u, next_seq()};
    ev.behavior_name = std::move(name);
    ev.factory = std::move(f);
    enqueue(std::move(ev));
    scripted_faulty_.insert(u);
  }

  Trace run() {
    for (NodeId u = 0; u < params_.n; ++u) enqueue(QEvent{0, kInit, u, next_seq()});
    int needed = 0;
    for (NodeId u = 0; u < params_.n; ++u)
      if (!scripted_faulty_.count(u)) ++needed;

    Time now = 0;
    std::string reason = "quiescent";
    while (!queue_.empty()) {
      QEvent ev = pop();
      if (ev.time > params_.horizon) {
        queue_.push(ev);  // still pending, count it below
        now = params_.horizon;
        reason = "horizon";
        break;
      }
      now = ev.time;
      dispatch(ev);
      if (needed > 0 && decided_needed_ == needed) {
        reason = "all_decided";
        break;
      }
    }
    note_engine(now, "run_end reason=" + reason +
                         " pending_live=" + std::to_string(pending_live()));
    return std::move(trace_);
  }

 private:
  static constexpr int kCrash = 0;
  static constexpr int kCorrupt = 1;
  static constexpr int kInit = 2;
  static constexpr int kDeliver = 3;
  static constexpr int kTimerFire = 4;

  struct QEvent {
    QEvent() = default;
    QEvent(Time t, int r, int nd, uint64_t s) : time(t), rank(r), node(nd), seq(s) {}
    Time time = 0;
    int rank = 0;
    int node = 0;
    uint64_t seq = 0;
    std::optional<Envelope> env;
    std::string timer_id;
    uint64_t timer_epoch = 0;
    std::string behavior_name;
    BehaviorFactory factory;
  };

  struct QCmp {
    bool operator()(const QEvent& a, const QEvent& b) const {
      return std::tie(a.time, a.rank, a.node, a.seq) > std::tie(b.time, b.rank, b.node, b.seq);
    }
  };

  struct TimerState {
    Time fire = 0;
    uint64_t epoch = 0;
  };

  struct NodeState {
    std::unique_ptr<IProtocol> machine;
    bool crashed = false;
    bool corrupted = false;
    bool initialized = false;
    bool decided = false;
    int skew_num = 1;
    int skew_den = 1;
    std::vector<Envelope> history;
    std::set<std::string> known;  // signed items created by or delivered to the node
  };

  uint64_t next_seq() { return ++event_seq_; }

  void enqueue(QEvent ev) { queue_.push(std::move(ev)); }

  QEvent pop() {
    QEvent ev = queue_.top();
    queue_.pop();
    return ev;
  }

  void record(Time t, int node, RecordKind k, std::string detail) {
    trace_.records.push_back({t, node, k, std::move(detail)});
  }

  void note_engine(Time t, std::string text) {
    record(t, -1, RecordKind::StateNote, std::move(text));
  }

  void dispatch(const QEvent& ev) {
    NodeState& ns = nodes_[ev.node];
    switch (ev.rank) {
      case kCrash:
        if (!ns.crashed) {
          ns.crashed = true;
          record(ev.time, ev.node, RecordKind::StateNote, "crash");
        }
        return;
      case kCorrupt: {
        if (ns.crashed || ns.corrupted) return;
        ns.corrupted = true;
        record(ev.time, ev.node, RecordKind::StateNote, "corrupt name=" + ev.behavior_name);
        BehaviorInit init{ev.node, ev.time, mix_seed(params_.seed, 0xb00 + ev.node),
                          ns.history};
        ns.machine = ev.factory(init);
        ns.initialized = true;
        run_machine(ev.node, NodeEvent{NodeEvent::Kind::Init, ev.time, nullptr, ""});
        return;
      }
      case kInit:
        if (ns.crashed || ns.initialized) return;
        ns.initialized = true;
        run_machine(ev.node, NodeEvent{NodeEvent::Kind::Init, ev.time, nullptr, ""});
        return;
      case kDeliver: {
        if (ns.crashed) return;  // crash stops observation, not in-flight messages
        const Envelope& env = *ev.env;
        record(ev.time, ev.node, RecordKind::Deliver,
               "origin=" + std::to_string(env.origin) + " from=" + std::to_string(env.sender) +
                   " seq=" + std::to_string(env.link_seq) + " msg=" + render(env.payload));
        ns.known.insert(signed_key(env.origin, render(env.payload)));
        ns.history.push_back(env);
        run_machine(ev.node, NodeEvent{NodeEvent::Kind::Deliver, ev.time, &env, ""});
        return;
      }
      case kTimerFire: {
        if (ns.crashed) return;
        auto it = timers_.find({ev.node, ev.timer_id});
        if (it == timers_.end() || it->second.epoch != ev.timer_epoch) return;  // cancelled
        timers_.erase(it);
        record(ev.time, ev.node, RecordKind::TimerFire, "id=" + ev.timer_id);
        run_machine(ev.node, NodeEvent{NodeEvent::Kind::TimerFire, ev.time, nullptr, ev.timer_id});
        return;
      }
    }
  }

  void run_machine(NodeId u, const NodeEvent& ev) {
    NodeState& ns = nodes_[u];
    if (!ns.machine) return;
    auto actions = ns.machine->on_event(ev);
    for (const auto& a : actions) apply_action(u, ev.now, a);
  }

  void apply_action(NodeId u, Time now, const Action& a) {
    NodeState& ns = nodes_[u];
    if (const auto* s = std::get_if<SendAction>(&a)) {
      if (s->to == kBroadcast) {
        for (NodeId r = 0; r < params_.n; ++r) schedule_send(u, s->origin, r, s->payload, now);
      } else {
        schedule_send(u, s->origin, s->to, s->payload, now);
      }
    } else if (const auto* t = std::get_if<TimerSetAction>(&a)) {
      set_timer(u, now, t->id, t->duration);
    } else if (const auto* c = std::get_if<TimerCancelAction>(&a)) {
      auto it = timers_.find({u, c->id});
      if (it != timers_.end()) timers_.erase(it);
    } else if (const auto* d = std::get_if<DecideAction>(&a)) {
      if (ns.corrupted) {
        record(now, u, RecordKind::StateNote, "byz_decide value=" + d->value);
      } else if (!ns.decided) {
        ns.decided = true;
        record(now, u, RecordKind::Decide, "value=" + d->value);
        if (!scripted_faulty_.count(u)) ++decided_needed_;
      }
    } else if (const auto* nt = std::get_if<NoteAction>(&a)) {
      record(now, u, RecordKind::StateNote, (ns.corrupted ? "byz " : "") + nt->text);
    }
  }

  void set_timer(NodeId u, Time now, const std::string& id, Time duration) {
    if (duration < 0) throw ScenarioError("negative timer duration");
    if (timers_.count({u, id}))
      throw ScenarioError("duplicate live timer id '" + id + "' on node " + std::to_string(u));
    NodeState& ns = nodes_[u];
    Time skewed = (duration * ns.skew_num + ns.skew_den - 1) / ns.skew_den;
    Time fire = now + skewed;
    uint64_t epoch = ++timer_epoch_;
    timers_[{u, id}] = {fire, epoch};
    record(now, u, RecordKind::TimerSet,
           "id=" + id + " dur=" + std::to_string(duration) + " fire=" + std::to_string(fire));
    QEvent ev{fire, kTimerFire, u, next_seq()};
    ev.timer_id = id;
    ev.timer_epoch = epoch;
    enqueue(std::move(ev));
  }

  void schedule_send(NodeId sender, NodeId origin, NodeId recipient, const Message& payload,
                     Time now) {
    NodeState& ns = nodes_[sender];
    std::string rendered = render(payload);
    if (origin != sender && !ns.known.count(signed_key(origin, rendered)))
      throw ScenarioError("node " + std::to_string(sender) +
                          " attempted to forge an envelope from " + std::to_string(origin) +
                          ": " + rendered);
    for (const auto& [o, r] : embedded_signables(payload)) {
      if (o == sender) continue;
      if (!registry_.count(signed_key(o, r)))
        throw ScenarioError("node " + std::to_string(sender) +
                            " embedded an unsigned item from " + std::to_string(o) + ": " + r);
    }
    std::optional<TimingClass> cls;
    if (sender != recipient) {
      cls = graph_.edge(sender, recipient);
      if (!cls)
        throw ScenarioError("no link between " + std::to_string(sender) + " and " +
                            std::to_string(recipient));
    }

    registry_.insert(signed_key(origin, rendered));
    ns.known.insert(signed_key(origin, rendered));

    uint64_t seq = ++link_seq_[{sender, recipient}];
    Envelope env{origin, sender, recipient, payload, now, seq};

    Time lo = now + 1;
    std::optional<Time> hi;
    Time cand;
    if (sender == recipient) {
      cand = now + params_.eps;
    } else {
      switch (*cls) {
        case TimingClass::Synchronous:
          hi = now + params_.delta;
          break;
        case TimingClass::PartiallySynchronous:
          hi = std::max(now, params_.gst) + params_.delta;
          break;
        case TimingClass::Asynchronous:
          break;
      }
      cand = policy_->delivery_time(DelayRequest{env, *cls, params_}, delay_rng_);
    }
    if (cand < lo || (hi && cand > *hi))
      throw ScenarioError("delay policy broke the contract for envelope " + describe(env) +
                          ": chose " + std::to_string(cand));

    // FIFO: later sends on a directed link never deliver before earlier ones.
    // When the contract maximum leaves no room for a strict bump, delivery
    // saturates at the previous time and the event order preserves FIFO.
    Time& last = last_delivery_[{sender, recipient}];
    Time t = std::max(cand, last + 1);
    if (hi && t > *hi) t = std::max(*hi, last);
    if (t < last)
      throw ScenarioError("FIFO clamp impossible within contract for " + describe(env));
    last = t;

    record(now, sender, RecordKind::Send,
           "origin=" + std::to_string(origin) + " to=" + std::to_string(recipient) +
               " seq=" + std::to_string(seq) + " msg=" + rendered);
    QEvent ev{t, kDeliver, recipient, next_seq()};
    ev.env = std::move(env);
    enqueue(std::move(ev));
  }

  static std::string describe(const Envelope& e) {
    return "(origin=" + std::to_string(e.origin) + " sender=" + std::to_string(e.sender) +
           " recipient=" + std::to_string(e.recipient) + " seq=" + std::to_string(e.link_seq) +
           " msg=" + render(e.payload) + ")";
  }

  int pending_live() {
    int count = 0;
    while (!queue_.empty()) {
      QEvent ev = pop();
      if (ev.rank == kDeliver && !nodes_[ev.node].crashed) ++count;
      if (ev.rank == kTimerFire && !nodes_[ev.node].crashed) {
        auto it = timers_.find({ev.node, ev.timer_id});
        if (it != timers_.end() && it->second.epoch == ev.timer_epoch) ++count;
      }
    }
    return count;
  }

  TimedGraph graph_;
  SimParams params_;
  std::unique_ptr<IDelayPolicy> policy_;
  Rng delay_rng_;
  std::vector<NodeState> nodes_;
  std::priority_queue<QEvent, std::vector<QEvent>, QCmp> queue_;
  std::map<std::pair<NodeId, NodeId>, uint64_t> link_seq_;
  std::map<std::pair<NodeId, NodeId>, Time> last_delivery_;
  std::map<std::pair<NodeId, std::string>, TimerState> timers_;
  std::set<std::string> registry_;  // all genuinely signed items
  std::set<NodeId> scripted_faulty_;
  Trace trace_;
  uint64_t event_seq_ = 0;
  uint64_t timer_epoch_ = 0;
  int decided_needed_ = 0;
};

}  // namespace gsyn
