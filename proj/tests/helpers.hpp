#pragma once

#include <string>
#include <vector>

#include "gsyn/runner.hpp"

namespace testutil {

inline gsyn::TimedGraph complete_graph(int n, gsyn::TimingClass c) {
  gsyn::TimedGraph g(n);
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) g.add_edge(u, v, c);
  return g;
}

// A protocol stub that fires scripted actions at fixed times.
struct ScriptNode : gsyn::IProtocol {
  struct Step {
    gsyn::Time at;
    std::vector<gsyn::Action> actions;
  };
  std::vector<Step> steps;

  explicit ScriptNode(std::vector<Step> s) : steps(std::move(s)) {}

  std::vector<gsyn::Action> on_event(const gsyn::NodeEvent& ev) override {
    std::vector<gsyn::Action> out;
    if (ev.kind == gsyn::NodeEvent::Kind::Init) {
      for (size_t i = 0; i < steps.size(); ++i)
        out.push_back(gsyn::TimerSetAction{"s:" + std::to_string(i), steps[i].at});
    } else if (ev.kind == gsyn::NodeEvent::Kind::TimerFire &&
               ev.timer_id.rfind("s:", 0) == 0) {
      for (const auto& a : steps[std::stoul(ev.timer_id.substr(2))].actions) out.push_back(a);
    }
    return out;
  }
};

struct NoopNode : gsyn::IProtocol {
  std::vector<gsyn::Action> on_event(const gsyn::NodeEvent&) override { return {}; }
};

inline std::vector<gsyn::TraceRecord> records_of(const gsyn::Trace& t, gsyn::RecordKind k) {
  std::vector<gsyn::TraceRecord> out;
  for (const auto& r : t.records)
    if (r.kind == k) out.push_back(r);
  return out;
}

inline int count_notes(const gsyn::Trace& t, const std::string& prefix) {
  int n = 0;
  for (const auto& r : t.records)
    if (r.kind == gsyn::RecordKind::StateNote && r.detail.rfind(prefix, 0) == 0) ++n;
  return n;
}

inline std::vector<gsyn::trace_view::DecideRec> decides(const gsyn::Trace& t) {
  return gsyn::trace_view::decides(t);
}

}  // namespace testutil
