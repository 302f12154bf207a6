#pragma once

// Wires scenarios to the engine: builds machines and behaviors, resolves
// diameters, runs the simulation, computes verdicts, and hosts the named
// scenario library plus the batch commands used by the CLI.

#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gsyn/adversary.hpp"
#include "gsyn/bft.hpp"
#include "gsyn/cft.hpp"
#include "gsyn/scenario.hpp"
#include "gsyn/verifier.hpp"

namespace gsyn {

struct RunResult {
  ScenarioFile scenario;
  Trace trace;
  std::map<std::string, Verdict> verdicts;
  ResolvedDiameters diam;
};

namespace runner_detail {

inline std::vector<int> parse_node_list(const std::string& s) {
  std::vector<int> out;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',') {
      if (!cur.empty()) out.push_back(std::stoi(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

inline std::string param_or(const std::map<std::string, std::string>& m, const std::string& k,
                            const std::string& def) {
  auto it = m.find(k);
  return it == m.end() ? def : it->second;
}

inline BehaviorFactory make_behavior_factory(const ScenarioFile& s, const CorruptCmd& cmd,
                                             ProtoParams proto) {
  BftMode mode = protocol_is_gas(s.protocol) ? BftMode::Gas : BftMode::Gps;
  std::string def_a = s.inputs.at(0);
  std::string def_b = def_a;
  for (const auto& v : s.inputs)
    if (v != def_a) def_b = v;

  if (cmd.behavior == "silent")
    return [](const BehaviorInit&) { return std::make_unique<SilentBehavior>(); };

  if (cmd.behavior == "equivocating-leader") {
    int view = std::stoi(param_or(cmd.params, "view", "1"));
    std::string va = param_or(cmd.params, "val_a", def_a);
    std::string vb = param_or(cmd.params, "val_b", def_b);
    auto side = parse_node_list(param_or(cmd.params, "side_a", ""));
    return [proto, view, va, vb, side](const BehaviorInit& init) {
      return std::make_unique<EquivocatingLeader>(proto, view, va, vb, side, init.history);
    };
  }
  if (cmd.behavior == "stale-lock-proposer") {
    int view = std::stoi(param_or(cmd.params, "view", "1"));
    return [proto, view](const BehaviorInit& init) {
      return std::make_unique<StaleLockProposer>(proto, view, init.history);
    };
  }
  if (cmd.behavior == "random-valid") {
    return [proto](const BehaviorInit& init) {
      return std::make_unique<RandomValid>(proto, init.seed);
    };
  }
  if (cmd.behavior == "dual-personality") {
    std::string va = param_or(cmd.params, "val_a", def_a);
    std::string vb = param_or(cmd.params, "val_b", def_b);
    auto side = parse_node_list(param_or(cmd.params, "side_a", ""));
    return [proto, mode, side, va, vb](const BehaviorInit&) {
      return std::make_unique<DualPersonality>(proto, mode, side, va, vb);
    };
  }
  throw ScenarioError("unknown behavior '" + cmd.behavior + "'");
}

}  // namespace runner_detail

inline RunResult run_scenario(ScenarioFile s, std::optional<Time> horizon_override = {},
                              std::optional<uint64_t> seed_override = {}) {
  if (horizon_override) s.horizon = *horizon_override;
  if (seed_override) s.seed = *seed_override;
  validate_scenario(s);

  TimedGraph g = scenario_graph(s);
  SimParams params{s.n, s.delta, s.gst, s.horizon, s.seed, 1};
  ResolvedDiameters diam = resolve_diameters(s);

  Simulator sim(g, params, make_delay_policy(s.adversary, params));

  if (s.sigma_num > s.sigma_den) {
    Rng skew_rng(mix_seed(s.seed, 0x5c3));
    for (int u = 0; u < s.n; ++u)
      sim.set_node_skew(u, static_cast<int>(skew_rng.range(s.sigma_den, s.sigma_num)),
                        s.sigma_den);
  }

  std::vector<std::string> value_pool;
  if (protocol_is_bft(s.protocol)) {
    std::set<std::string> uniq(s.inputs.begin(), s.inputs.end());
    value_pool.assign(uniq.begin(), uniq.end());
  }

  auto proto_for = [&](int u) {
    ProtoParams p;
    p.n = s.n;
    p.f = s.f;
    p.delta = s.delta;
    p.d = diam.d;
    p.dprime = diam.dprime;
    p.self = u;
    p.input = s.inputs[u];
    p.valid_values = value_pool;
    p.prephase = s.unanimity_prephase;
    return p;
  };

  for (int u = 0; u < s.n; ++u) {
    ProtoParams p = proto_for(u);
    if (s.protocol == "cft-gps")
      sim.set_machine(u, std::make_unique<CftGpsNode>(p));
    else if (s.protocol == "cft-gas")
      sim.set_machine(u, std::make_unique<CftGasNode>(p));
    else
      sim.set_machine(u, std::make_unique<BftNode>(
                             p, protocol_is_gas(s.protocol) ? BftMode::Gas : BftMode::Gps));
  }
  for (const auto& c : s.adversary.crashes) sim.schedule_crash(c.node, c.t);
  for (const auto& c : s.adversary.corruptions)
    sim.schedule_corrupt(c.node, c.t, c.behavior,
                         runner_detail::make_behavior_factory(s, c, proto_for(c.node)));

  RunResult out;
  out.scenario = s;
  out.diam = diam;
  out.trace = sim.run();

  AgreementMode amode =
      protocol_is_bft(s.protocol) ? AgreementMode::CorrectOnly : AgreementMode::Uniform;
  out.verdicts["agreement"] = check_agreement(out.trace, amode);
  // Plain BFT promises external validity only; unanimity validity applies to
  // the crash protocols and to BFT with the input-exchange pre-phase.
  bool unanimity = !protocol_is_bft(s.protocol) || s.unanimity_prephase;
  Verdict vx = check_validity(out.trace, s.inputs, ValidityMode::External);
  Verdict validity{"validity", Outcome::Pass, ""};
  if (vx.outcome == Outcome::Fail) validity = {"validity", Outcome::Fail, vx.evidence};
  if (unanimity) {
    Verdict vu = check_validity(out.trace, s.inputs, ValidityMode::Unanimity);
    if (vu.outcome == Outcome::Fail) validity = {"validity", Outcome::Fail, vu.evidence};
  }
  out.verdicts["validity"] = validity;
  out.verdicts["termination"] = check_termination(out.trace, s.n, std::nullopt);
  out.verdicts["contract-compliance"] =
      check_contract_compliance(out.trace, g, s.delta, s.gst);
  out.verdicts["lock-monotonicity"] = check_lock_monotonicity(out.trace);
  return out;
}

// Exit contract: all expectations met (or, with no expectation block, every
// verdict passes).
inline bool expectations_met(const RunResult& r) {
  if (r.scenario.expected.empty()) {
    for (const auto& [k, v] : r.verdicts)
      if (v.outcome != Outcome::Pass) return false;
    return true;
  }
  for (const auto& [k, want] : r.scenario.expected) {
    auto it = r.verdicts.find(k);
    if (it == r.verdicts.end() || it->second.outcome != want) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Named scenario library
// ---------------------------------------------------------------------------

struct NamedScenario {
  std::string name;
  ScenarioFile scenario;
};

namespace library_detail {

inline void complete_edges(ScenarioFile& s, TimingClass cls) {
  for (int u = 0; u < s.n; ++u)
    for (int v = u + 1; v < s.n; ++v) s.edges.emplace_back(u, v, cls);
}

inline void add_missing_edges(ScenarioFile& s, TimingClass cls) {
  std::set<std::pair<int, int>> have;
  for (const auto& [u, v, c] : s.edges) have.insert({std::min(u, v), std::max(u, v)});
  for (int u = 0; u < s.n; ++u)
    for (int v = u + 1; v < s.n; ++v)
      if (!have.count({u, v})) s.edges.emplace_back(u, v, cls);
}

// Synchronous path 0-1-2-3; every other link asynchronous.
inline void sync_path_edges(ScenarioFile& s) {
  s.edges.emplace_back(0, 1, TimingClass::Synchronous);
  s.edges.emplace_back(1, 2, TimingClass::Synchronous);
  s.edges.emplace_back(2, 3, TimingClass::Synchronous);
  add_missing_edges(s, TimingClass::Asynchronous);
}

}  // namespace library_detail

inline std::vector<NamedScenario> scenario_library() {
  using library_detail::add_missing_edges;
  using library_detail::complete_edges;
  std::vector<NamedScenario> lib;

  {
    ScenarioFile s;
    s.protocol = "cft-gps";
    s.n = 4;
    s.f = 2;
    s.delta = 10;
    s.horizon = 1000;
    s.seed = 11;
    s.inputs = {"a", "a", "b", "b"};
    complete_edges(s, TimingClass::Synchronous);
    s.expected = {{"agreement", Outcome::Pass},
                  {"validity", Outcome::Pass},
                  {"termination", Outcome::Pass}};
    lib.push_back({"cft-gps-happy", s});
  }
  {
    ScenarioFile s;
    s.protocol = "cft-gps";
    s.n = 4;
    s.f = 2;
    s.delta = 10;
    s.horizon = 2000;
    s.seed = 12;
    s.inputs = {"a", "b", "b", "a"};
    complete_edges(s, TimingClass::Synchronous);
    s.adversary.crashes.push_back({1, 5});  // the view-1 leader dies pre-proposal
    s.expected = {{"agreement", Outcome::Pass},
                  {"validity", Outcome::Pass},
                  {"termination", Outcome::Pass}};
    lib.push_back({"cft-gps-crash-leader", s});
  }
  {
    // Both halves of an all-psync graph decide independently while the
    // adversary holds every cross message until after the horizon.
    ScenarioFile s;
    s.protocol = "cft-gps";
    s.n = 4;
    s.f = 2;
    s.delta = 10;
    s.gst = 100000;
    s.horizon = 1000;
    s.seed = 13;
    s.d_mode.kind = DiameterMode::Fallback;
    s.dprime_mode.kind = DiameterMode::Fallback;
    s.inputs = {"x", "x", "y", "y"};
    complete_edges(s, TimingClass::PartiallySynchronous);
    s.adversary.delay_policy = "scripted";
    s.adversary.delay_cap = 10;  // pre-GST draws within delta: one view suffices per side
    s.adversary.split = SplitRule{{0, 1}, {}, 100000};
    s.expected = {{"agreement", Outcome::Fail},
                  {"validity", Outcome::Pass},
                  {"termination", Outcome::Pass}};
    lib.push_back({"cft-gps-split-brain", s});
  }
  {
    ScenarioFile s;
    s.protocol = "cft-gas";
    s.n = 4;
    s.f = 2;
    s.delta = 10;
    s.horizon = 3000;
    s.seed = 14;
    s.inputs = {"a", "a", "b", "b"};
    library_detail::sync_path_edges(s);
    s.adversary.crashes.push_back({1, 0});
    s.expected = {{"agreement", Outcome::Pass},
                  {"validity", Outcome::Pass},
                  {"termination", Outcome::Pass}};
    lib.push_back({"cft-gas-fig4-liveness", s});
  }
  {
    // The view-1 leader sits in the largest diamond component; the one node
    // behind asynchronous links cannot trigger a view change alone.
    ScenarioFile s;
    s.protocol = "cft-gas";
    s.n = 5;
    s.f = 2;
    s.delta = 10;
    s.horizon = 6000;
    s.seed = 15;
    s.inputs = {"a", "b", "a", "b", "a"};
    s.edges.emplace_back(0, 1, TimingClass::Synchronous);
    s.edges.emplace_back(1, 2, TimingClass::Synchronous);
    s.edges.emplace_back(2, 3, TimingClass::Synchronous);
    add_missing_edges(s, TimingClass::Asynchronous);
    s.adversary.delay_policy = "adversarial-max";
    s.adversary.async_release = 2000;
    s.expected = {{"agreement", Outcome::Pass},
                  {"validity", Outcome::Pass},
                  {"termination", Outcome::Pass}};
    lib.push_back({"cft-gas-async-edges", s});
  }
  {
    ScenarioFile s;
    s.protocol = "bft-gps";
    s.n = 4;
    s.f = 1;
    s.delta = 10;
    s.horizon = 1000;
    s.seed = 16;
    s.inputs = {"a", "b", "b", "a"};
    complete_edges(s, TimingClass::Synchronous);
    s.expected = {{"agreement", Outcome::Pass},
                  {"validity", Outcome::Pass},
                  {"termination", Outcome::Pass}};
    lib.push_back({"bft-gps-happy", s});
  }
  {
    ScenarioFile s;
    s.protocol = "bft-gps";
    s.n = 4;
    s.f = 1;
    s.delta = 10;
    s.horizon = 2000;
    s.seed = 17;
    s.inputs = {"a", "a", "b", "b"};
    complete_edges(s, TimingClass::Synchronous);
    CorruptCmd c{1, 0, "equivocating-leader", {}};
    c.params["view"] = "1";
    c.params["val_a"] = "a";
    c.params["val_b"] = "b";
    c.params["side_a"] = "0,2";
    s.adversary.corruptions.push_back(c);
    s.expected = {{"agreement", Outcome::Pass},
                  {"validity", Outcome::Pass},
                  {"termination", Outcome::Pass}};
    lib.push_back({"bft-gps-equivocation", s});
  }
  {
    // Condition-violating graph; the Byzantine node plays an honest node
    // with input x towards node 0 and one with input y towards node 2.
    ScenarioFile s;
    s.protocol = "bft-gps";
    s.n = 3;
    s.f = 1;
    s.delta = 10;
    s.gst = 200000;
    s.horizon = 2000;
    s.seed = 18;
    s.inputs = {"x", "x", "y"};
    complete_edges(s, TimingClass::PartiallySynchronous);
    CorruptCmd c{1, 0, "dual-personality", {}};
    c.params["side_a"] = "0";
    c.params["val_a"] = "x";
    c.params["val_b"] = "y";
    s.adversary.corruptions.push_back(c);
    s.adversary.delay_policy = "scripted";
    s.adversary.delay_cap = 10;
    s.adversary.split = SplitRule{{0}, {2}, 200000};
    s.expected = {{"agreement", Outcome::Fail},
                  {"validity", Outcome::Pass},
                  {"termination", Outcome::Pass}};
    lib.push_back({"bft-gps-split-brain", s});
  }
  {
    // Diamond triangle 0-1-2 plus an async-only node; the silent Byzantine
    // node cannot assemble the n-f view-change quorum.
    ScenarioFile s;
    s.protocol = "bft-gas";
    s.n = 4;
    s.f = 1;
    s.delta = 10;
    s.horizon = 3000;
    s.seed = 19;
    s.inputs = {"a", "b", "a", "b"};
    s.edges.emplace_back(0, 1, TimingClass::Synchronous);
    s.edges.emplace_back(1, 2, TimingClass::Synchronous);
    s.edges.emplace_back(0, 2, TimingClass::PartiallySynchronous);
    add_missing_edges(s, TimingClass::Asynchronous);
    s.adversary.corruptions.push_back({3, 0, "silent", {}});
    s.expected = {{"agreement", Outcome::Pass},
                  {"validity", Outcome::Pass},
                  {"termination", Outcome::Pass}};
    lib.push_back({"bft-gas-no-false-blame", s});
  }
  {
    ScenarioFile s;
    s.protocol = "bft-gps";
    s.unanimity_prephase = true;
    s.n = 4;
    s.f = 1;
    s.delta = 10;
    s.horizon = 3000;
    s.seed = 20;
    s.inputs = {"x", "y", "x", "x"};  // correct nodes unanimous on x
    complete_edges(s, TimingClass::Synchronous);
    CorruptCmd c{1, 0, "equivocating-leader", {}};
    c.params["view"] = "1";
    c.params["val_a"] = "x";
    c.params["val_b"] = "y";
    c.params["side_a"] = "0,2";
    s.adversary.corruptions.push_back(c);
    s.expected = {{"agreement", Outcome::Pass},
                  {"validity", Outcome::Pass},
                  {"termination", Outcome::Pass}};
    lib.push_back({"bft-unanimity", s});
  }
  return lib;
}

inline std::optional<ScenarioFile> library_scenario(const std::string& name) {
  for (auto& ns : scenario_library())
    if (ns.name == name) return ns.scenario;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Fuzzing
// ---------------------------------------------------------------------------

inline ScenarioFile fuzz_case_to_scenario(const std::string& family, const FuzzCase& fc) {
  ScenarioFile s;
  s.protocol = family;
  s.unanimity_prephase = fc.prephase;
  s.n = fc.n;
  s.f = fc.f;
  s.delta = fc.delta;
  s.gst = fc.gst;
  s.horizon = fc.horizon;
  s.seed = fc.seed;
  s.edges = fc.edges;
  s.inputs = fc.inputs;
  s.adversary = fc.script;
  return s;
}

inline ScenarioFile make_fuzz_scenario(const std::string& family, uint64_t seed, uint64_t index,
                                       const FuzzBounds& bounds = {}) {
  return fuzz_case_to_scenario(family, make_fuzz_case(family, seed, index, bounds));
}

struct FuzzViolation {
  uint64_t index = 0;
  std::string property;
  std::string evidence;
};

struct FuzzReport {
  std::string family;
  uint64_t seed = 0;
  uint64_t count = 0;
  std::vector<FuzzViolation> violations;
};

inline FuzzReport run_fuzz(const std::string& family, uint64_t count, uint64_t seed,
                           const FuzzBounds& bounds = {}) {
  FuzzReport report{family, seed, count, {}};
  for (uint64_t i = 0; i < count; ++i) {
    ScenarioFile s = make_fuzz_scenario(family, seed, i, bounds);
    RunResult r = run_scenario(s);
    for (const char* prop : {"agreement", "validity", "contract-compliance",
                             "lock-monotonicity"}) {
      const Verdict& v = r.verdicts.at(prop);
      if (v.outcome == Outcome::Fail) report.violations.push_back({i, prop, v.evidence});
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// CLI commands
// ---------------------------------------------------------------------------

inline std::string hash_hex(uint64_t h) {
  std::ostringstream o;
  o << std::hex << std::setw(16) << std::setfill('0') << h;
  return o.str();
}

inline ScenarioFile load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

inline int cmd_check_graph(const std::string& path, std::ostream& out) {
  ScenarioFile s;
  try {
    s = load_scenario_file(path);
    validate_scenario(s);
  } catch (const ScenarioError& e) {
    out << "error: " << e.what() << "\n";
    return 2;
  }
  TimedGraph g = scenario_graph(s);
  ResolvedDiameters diam = resolve_diameters(s);
  out << "d computed=" << diam.d_computed.length
      << (diam.d_computed.fallback ? " (fallback)" : "") << " effective=" << diam.d << "\n";
  out << "dprime computed=" << diam.dprime_computed.length
      << (diam.dprime_computed.fallback ? " (fallback)" : "") << " effective=" << diam.dprime
      << "\n";
  if (!protocol_is_bft(s.protocol)) {
    out << "cft-gps condition: " << check_cft_gps(g, s.f).describe() << "\n";
    if (protocol_is_gas(s.protocol)) {
      out << "cft-gas condition (ii): " << check_cft_gas_component(g, s.f).describe() << "\n";
      std::set<int> scripted;
      for (const auto& c : s.adversary.crashes) scripted.insert(c.node);
      FaultSet fs{{scripted.begin(), scripted.end()}, s.f};
      if (static_cast<int>(scripted.size()) <= s.f)
        out << "diamond-f-source scripted-F=" << render_node_set(mask_of(fs.members)) << ": "
            << (check_diamond_f_source(g, s.f, fs) ? "present" : "absent") << "\n";
      std::optional<std::vector<int>> missing;
      for_each_subset_lex(s.n, s.f, [&](const std::vector<int>& fv, NodeMask fm) {
        FaultSet cand{fv, s.f};
        if (!check_diamond_f_source(g, s.f, cand)) {
          missing = fv;
          return true;
        }
        (void)fm;
        return false;
      });
      if (missing)
        out << "diamond-f-source worst-case: absent for F="
            << render_node_set(mask_of(*missing)) << "\n";
      else
        out << "diamond-f-source worst-case: present for every |F|<=f\n";
    }
  } else {
    out << "bft-gps condition: " << check_bft_gps(g, s.f).describe() << "\n";
    if (protocol_is_gas(s.protocol))
      out << "bft-gas condition (ii): " << check_bft_gas_connectivity(g, s.f).describe()
          << "\n";
  }
  return 0;
}

inline int cmd_run(const std::string& path, const std::string& trace_out,
                   std::optional<uint64_t> seed_override, std::optional<Time> horizon_override,
                   std::ostream& out) {
  RunResult r;
  try {
    r = run_scenario(load_scenario_file(path), horizon_override, seed_override);
  } catch (const ScenarioError& e) {
    out << "error: " << e.what() << "\n";
    return 2;
  }
  if (!trace_out.empty()) {
    std::ofstream tf(trace_out, std::ios::binary);
    if (!tf) {
      out << "error: cannot write trace to '" << trace_out << "'\n";
      return 2;
    }
    tf << r.trace.serialize();
  }
  for (const char* k : {"agreement", "validity", "termination", "contract-compliance",
                        "lock-monotonicity"})
    out << r.verdicts.at(k).render() << "\n";
  out << "trace_hash=" << hash_hex(r.trace.hash()) << "\n";
  return expectations_met(r) ? 0 : 1;
}

inline int cmd_fuzz(const std::string& family, uint64_t count, uint64_t seed,
                    std::ostream& out) {
  FuzzReport rep;
  try {
    rep = run_fuzz(family, count, seed);
  } catch (const ScenarioError& e) {
    out << "error: " << e.what() << "\n";
    return 2;
  }
  out << "fuzz family=" << rep.family << " count=" << rep.count << " seed=" << rep.seed
      << " violations=" << rep.violations.size() << "\n";
  for (const auto& v : rep.violations)
    out << "violation seed=" << rep.seed << " index=" << v.index << " property=" << v.property
        << " evidence=" << v.evidence << "\n";
  return rep.violations.empty() ? 0 : 1;
}

inline int cmd_library(const std::string& name, std::ostream& out) {
  if (name.empty()) {
    for (const auto& ns : scenario_library()) {
      out << ns.name << "\t" << ns.scenario.protocol << "\tn=" << ns.scenario.n
          << " f=" << ns.scenario.f << "\texpected:";
      for (const auto& [k, v] : ns.scenario.expected) out << " " << k << "=" << outcome_name(v);
      out << "\n";
    }
    return 0;
  }
  auto s = library_scenario(name);
  if (!s) {
    out << "error: no scenario named '" << name << "'\n";
    return 2;
  }
  out << serialize_scenario(*s);
  return 0;
}

inline int cmd_replay(const std::string& family, uint64_t seed, uint64_t index,
                      const std::string& trace_out, std::ostream& out) {
  RunResult r;
  try {
    r = run_scenario(make_fuzz_scenario(family, seed, index));
  } catch (const ScenarioError& e) {
    out << "error: " << e.what() << "\n";
    return 2;
  }
  if (!trace_out.empty()) {
    std::ofstream tf(trace_out, std::ios::binary);
    tf << r.trace.serialize();
  }
  out << "replay family=" << family << " seed=" << seed << " index=" << index
      << " trace_hash=" << hash_hex(r.trace.hash()) << "\n";
  bool bad = false;
  for (const char* k : {"agreement", "validity"}) {
    out << r.verdicts.at(k).render() << "\n";
    bad = bad || r.verdicts.at(k).outcome == Outcome::Fail;
  }
  return bad ? 1 : 0;
}

}  // namespace gsyn
