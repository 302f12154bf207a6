#pragma once

// Post-hoc trace analysis: agreement, validity, termination, lock
// monotonicity, FIFO/exactly-once/delay-contract compliance and the Vote-1
// uniqueness check. Everything is recomputed from the serialized record
// stream, independent of the engine's internal state.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gsyn/graph.hpp"
#include "gsyn/simnet.hpp"

namespace gsyn {

enum class Outcome { Pass, Fail, Undetermined };

inline const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Pass: return "pass";
    case Outcome::Fail: return "fail";
    case Outcome::Undetermined: return "undetermined-within-horizon";
  }
  return "?";
}

struct Verdict {
  std::string property;
  Outcome outcome = Outcome::Pass;
  std::string evidence;

  std::string render() const {
    return property + "\t" + outcome_name(outcome) + "\t" + evidence;
  }
};

enum class AgreementMode { Uniform, CorrectOnly };
enum class ValidityMode { Unanimity, External };

namespace trace_view {

inline std::optional<std::string> field(const std::string& detail, const std::string& key) {
  std::string pat = key + "=";
  size_t at = detail.rfind(" " + pat);
  if (at != std::string::npos) {
    at += 1;
  } else if (detail.rfind(pat, 0) == 0) {
    at = 0;
  } else {
    return std::nullopt;
  }
  size_t start = at + pat.size();
  size_t end = key == "msg" ? std::string::npos : detail.find(' ', start);
  return detail.substr(start, end == std::string::npos ? end : end - start);
}

struct DecideRec {
  Time time;
  int node;
  std::string value;
};

inline std::vector<DecideRec> decides(const Trace& t) {
  std::vector<DecideRec> out;
  for (const auto& r : t.records)
    if (r.kind == RecordKind::Decide)
      out.push_back({r.time, r.node, field(r.detail, "value").value_or("")});
  return out;
}

inline std::set<int> crashed(const Trace& t) {
  std::set<int> out;
  for (const auto& r : t.records)
    if (r.kind == RecordKind::StateNote && r.detail == "crash") out.insert(r.node);
  return out;
}

inline std::set<int> corrupted(const Trace& t) {
  std::set<int> out;
  for (const auto& r : t.records)
    if (r.kind == RecordKind::StateNote && r.detail.rfind("corrupt name=", 0) == 0)
      out.insert(r.node);
  return out;
}

struct RunEnd {
  std::string reason = "unknown";
  int pending_live = 0;
};

inline RunEnd run_end(const Trace& t) {
  RunEnd out;
  for (auto it = t.records.rbegin(); it != t.records.rend(); ++it) {
    if (it->kind != RecordKind::StateNote || it->detail.rfind("run_end ", 0) != 0) continue;
    if (auto r = field(it->detail, "reason")) out.reason = *r;
    if (auto p = field(it->detail, "pending_live")) out.pending_live = std::stoi(*p);
    break;
  }
  return out;
}

}  // namespace trace_view

// Uniform mode compares every decide record, including nodes that later
// crash; correct-only mode is for the Byzantine setting and skips nodes
// that are ever crashed or corrupted.
inline Verdict check_agreement(const Trace& t, AgreementMode mode) {
  auto skip = trace_view::corrupted(t);
  if (mode == AgreementMode::CorrectOnly)
    for (int u : trace_view::crashed(t)) skip.insert(u);
  std::optional<trace_view::DecideRec> first;
  for (const auto& d : trace_view::decides(t)) {
    if (skip.count(d.node)) continue;
    if (!first) {
      first = d;
    } else if (first->value != d.value) {
      return {"agreement", Outcome::Fail,
              "node " + std::to_string(first->node) + " decided " + first->value + " @" +
                  std::to_string(first->time) + " vs node " + std::to_string(d.node) +
                  " decided " + d.value + " @" + std::to_string(d.time)};
    }
  }
  return {"agreement", Outcome::Pass, ""};
}

// Unanimity: when all (never-corrupted) nodes share one input, every decide
// must carry it. External: every decided value must be some node's input.
inline Verdict check_validity(const Trace& t, const std::vector<std::string>& inputs,
                              ValidityMode mode) {
  auto corrupted = trace_view::corrupted(t);
  const char* prop = mode == ValidityMode::Unanimity ? "validity-unanimity" : "validity-external";
  if (mode == ValidityMode::Unanimity) {
    std::optional<std::string> common;
    for (int u = 0; u < static_cast<int>(inputs.size()); ++u) {
      if (corrupted.count(u)) continue;
      if (common && *common != inputs[u]) return {prop, Outcome::Pass, "inputs differ"};
      common = inputs[u];
    }
    if (!common) return {prop, Outcome::Pass, ""};
    for (const auto& d : trace_view::decides(t)) {
      if (corrupted.count(d.node)) continue;
      if (d.value != *common)
        return {prop, Outcome::Fail,
                "unanimous input " + *common + " but node " + std::to_string(d.node) +
                    " decided " + d.value};
    }
    return {prop, Outcome::Pass, ""};
  }
  for (const auto& d : trace_view::decides(t)) {
    if (corrupted.count(d.node)) continue;
    bool known = false;
    for (const auto& in : inputs) known = known || in == d.value;
    if (!known)
      return {prop, Outcome::Fail,
              "node " + std::to_string(d.node) + " decided " + d.value +
                  " which is no node's input"};
  }
  return {prop, Outcome::Pass, ""};
}

inline Verdict check_termination(const Trace& t, int n, std::optional<Time> deadline) {
  auto crashed = trace_view::crashed(t);
  auto corrupted = trace_view::corrupted(t);
  std::map<int, Time> decided;
  for (const auto& d : trace_view::decides(t)) decided.emplace(d.node, d.time);

  std::vector<int> missing;
  Time latest = 0;
  for (int u = 0; u < n; ++u) {
    if (crashed.count(u) || corrupted.count(u)) continue;
    auto it = decided.find(u);
    if (it == decided.end())
      missing.push_back(u);
    else
      latest = std::max(latest, it->second);
  }
  if (missing.empty()) {
    if (deadline && latest > *deadline)
      return {"termination", Outcome::Fail,
              "latest decide @" + std::to_string(latest) + " after deadline " +
                  std::to_string(*deadline)};
    return {"termination", Outcome::Pass, "latest decide @" + std::to_string(latest)};
  }
  auto end = trace_view::run_end(t);
  if (end.reason == "horizon" && end.pending_live > 0)
    return {"termination", Outcome::Undetermined,
            "horizon hit with " + std::to_string(end.pending_live) + " live events pending"};
  std::string ev = "undecided correct nodes:";
  for (int u : missing) ev += " " + std::to_string(u);
  return {"termination", Outcome::Fail, ev};
}

// Re-checks every delivery against its link's delay contract, FIFO order and
// exactly-once delivery, plus send/deliver matching.
inline Verdict check_contract_compliance(const Trace& t, const TimedGraph& g, Time delta,
                                         Time gst) {
  struct SendInfo {
    Time time;
    std::string msg;
  };
  std::map<std::tuple<int, int, uint64_t>, SendInfo> sends;
  std::set<std::tuple<int, int, uint64_t>> delivered;
  std::map<std::pair<int, int>, uint64_t> last_seq;

  Time prev = 0;
  for (const auto& r : t.records) {
    if (r.time < prev)
      return {"contract-compliance", Outcome::Fail,
              "record times decrease @" + std::to_string(r.time)};
    prev = r.time;
    if (r.kind == RecordKind::Send) {
      int to = std::stoi(*trace_view::field(r.detail, "to"));
      uint64_t seq = std::stoull(*trace_view::field(r.detail, "seq"));
      sends[{r.node, to, seq}] = {r.time, *trace_view::field(r.detail, "msg")};
    } else if (r.kind == RecordKind::Deliver) {
      int from = std::stoi(*trace_view::field(r.detail, "from"));
      uint64_t seq = std::stoull(*trace_view::field(r.detail, "seq"));
      auto key = std::make_tuple(from, r.node, seq);
      auto it = sends.find(key);
      if (it == sends.end())
        return {"contract-compliance", Outcome::Fail,
                "deliver without matching send @" + std::to_string(r.time)};
      if (!delivered.insert(key).second)
        return {"contract-compliance", Outcome::Fail,
                "envelope delivered twice: " + it->second.msg};
      uint64_t& last = last_seq[{from, r.node}];
      if (seq <= last)
        return {"contract-compliance", Outcome::Fail,
                "FIFO violation on link " + std::to_string(from) + "->" +
                    std::to_string(r.node)};
      last = seq;
      Time dt = r.time - it->second.time;
      if (dt < 1)
        return {"contract-compliance", Outcome::Fail, "non-positive delay: " + it->second.msg};
      if (from != r.node) {
        auto cls = g.edge(from, r.node);
        if (!cls)
          return {"contract-compliance", Outcome::Fail, "delivery on a missing link"};
        if (*cls == TimingClass::Synchronous && dt > delta)
          return {"contract-compliance", Outcome::Fail,
                  "sync bound exceeded: " + it->second.msg + " dt=" + std::to_string(dt)};
        if (*cls == TimingClass::PartiallySynchronous &&
            r.time > std::max(it->second.time, gst) + delta)
          return {"contract-compliance", Outcome::Fail,
                  "psync bound exceeded: " + it->second.msg};
      }
    }
  }
  return {"contract-compliance", Outcome::Pass, ""};
}

inline Verdict check_lock_monotonicity(const Trace& t) {
  std::map<int, int> last_view;
  for (const auto& r : t.records) {
    if (r.kind != RecordKind::StateNote || r.detail.rfind("lock view=", 0) != 0) continue;
    int view = std::stoi(*trace_view::field(r.detail, "view"));
    auto [it, fresh] = last_view.emplace(r.node, view);
    if (!fresh && view < it->second)
      return {"lock-monotonicity", Outcome::Fail,
              "node " + std::to_string(r.node) + " lock view " + std::to_string(it->second) +
                  " -> " + std::to_string(view)};
    it->second = view;
  }
  return {"lock-monotonicity", Outcome::Pass, ""};
}

// No view may contain n-f distinct-origin Vote-1 messages for two values.
inline Verdict check_vote1_uniqueness(const Trace& t, int n, int f) {
  std::map<std::pair<int, std::string>, std::set<int>> tally;
  for (const auto& r : t.records) {
    if (r.kind != RecordKind::Send) continue;
    auto msg = trace_view::field(r.detail, "msg");
    if (!msg || msg->rfind("Vote-1(v=", 0) != 0) continue;
    size_t vstart = 9;
    size_t comma = msg->find(',', vstart);
    int view = std::stoi(msg->substr(vstart, comma - vstart));
    size_t valstart = msg->find("val=", comma) + 4;
    std::string val = msg->substr(valstart, msg->size() - valstart - 1);
    int origin = std::stoi(*trace_view::field(r.detail, "origin"));
    tally[{view, val}].insert(origin);
  }
  std::map<int, int> certs_per_view;
  for (const auto& [key, origins] : tally) {
    if (static_cast<int>(origins.size()) < n - f) continue;
    if (++certs_per_view[key.first] > 1)
      return {"vote1-uniqueness", Outcome::Fail,
              "two Vote-1 certificates in view " + std::to_string(key.first)};
  }
  return {"vote1-uniqueness", Outcome::Pass, ""};
}

}  // namespace gsyn
