#pragma once

// The flat, line-oriented scenario file format: key/value lines plus three
// sections (edges, adversary, expected) terminated by `end`. `#` starts a
// comment. Keys are exactly the scenario field names. This is the only file
// format of the artifact; graphs have no separate representation.

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "gsyn/adversary.hpp"
#include "gsyn/graph.hpp"
#include "gsyn/verifier.hpp"

namespace gsyn {

struct DiameterMode {
  enum Kind { Computed, Fallback, Explicit } kind = Computed;
  int value = 0;  // Explicit only

  std::string render() const {
    switch (kind) {
      case Computed: return "computed";
      case Fallback: return "fallback";
      case Explicit: return "explicit " + std::to_string(value);
    }
    return "computed";
  }
};

struct ScenarioFile {
  std::string protocol;  // cft-gps | cft-gas | bft-gps | bft-gas
  bool unanimity_prephase = false;
  int n = 0;
  int f = 0;
  Time delta = 10;
  Time gst = 0;
  Time horizon = 1000;
  int sigma_num = 1;
  int sigma_den = 1;
  DiameterMode d_mode, dprime_mode;
  std::vector<std::tuple<int, int, TimingClass>> edges;
  std::vector<std::string> inputs;
  AdversaryScript adversary;
  uint64_t seed = 0;
  std::map<std::string, Outcome> expected;
};

inline bool protocol_is_bft(const std::string& p) { return p.rfind("bft", 0) == 0; }
inline bool protocol_is_gas(const std::string& p) {
  return p.size() > 3 && p.substr(p.size() - 3) == "gas";
}

inline bool valid_value_token(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
              c == '_' || c == '-' || c == '.' || c == '#';
    if (!ok) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline std::string serialize_scenario(const ScenarioFile& s) {
  std::ostringstream o;
  o << "protocol " << s.protocol << "\n";
  o << "n " << s.n << "\n";
  o << "f " << s.f << "\n";
  o << "delta " << s.delta << "\n";
  o << "gst " << s.gst << "\n";
  o << "horizon " << s.horizon << "\n";
  o << "sigma " << s.sigma_num;
  if (s.sigma_den != 1) o << "/" << s.sigma_den;
  o << "\n";
  o << "seed " << s.seed << "\n";
  o << "d_mode " << s.d_mode.render() << "\n";
  o << "dprime_mode " << s.dprime_mode.render() << "\n";
  if (protocol_is_bft(s.protocol))
    o << "unanimity_prephase " << (s.unanimity_prephase ? "true" : "false") << "\n";
  o << "inputs";
  for (const auto& v : s.inputs) o << " " << v;
  o << "\n";
  o << "edges\n";
  for (const auto& [u, v, c] : s.edges)
    o << u << " " << v << " " << timing_class_name(c) << "\n";
  o << "end\n";
  o << "adversary\n";
  for (const auto& c : s.adversary.crashes) o << "crash " << c.node << " " << c.t << "\n";
  for (const auto& c : s.adversary.corruptions) {
    o << "corrupt " << c.node << " " << c.t << " " << c.behavior;
    for (const auto& [k, v] : c.params) o << " " << k << "=" << v;
    o << "\n";
  }
  o << "delay_policy " << s.adversary.delay_policy << "\n";
  if (s.adversary.delay_cap > 0) o << "delay_cap " << s.adversary.delay_cap << "\n";
  if (s.adversary.async_release > 0) o << "async_release " << s.adversary.async_release << "\n";
  if (s.adversary.random_uniform) o << "random_uniform true\n";
  if (s.adversary.split) {
    o << "split";
    for (int u : s.adversary.split->side_a) o << " " << u;
    o << " |";
    for (int u : s.adversary.split->side_c) o << " " << u;
    o << " release " << s.adversary.split->release << "\n";
  }
  for (const auto& ov : s.adversary.overrides)
    o << "override " << ov.origin << " " << ov.sender << " " << ov.recipient << " " << ov.seq
      << " " << ov.delay << "\n";
  o << "end\n";
  if (!s.expected.empty()) {
    o << "expected\n";
    for (const auto& [k, v] : s.expected) o << k << " " << outcome_name(v) << "\n";
    o << "end\n";
  }
  return o.str();
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace scenario_detail {

inline std::vector<std::string> tokens(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

inline ScenarioError parse_error(int lineno, const std::string& what) {
  return ScenarioError("scenario line " + std::to_string(lineno) + ": " + what);
}

inline int64_t parse_int(const std::string& s, int lineno) {
  try {
    size_t used = 0;
    int64_t v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw parse_error(lineno, "expected an integer, got '" + s + "'");
  }
}

inline uint64_t parse_uint(const std::string& s, int lineno) {
  try {
    size_t used = 0;
    uint64_t v = std::stoull(s, &used);
    if (used != s.size() || s.front() == '-') throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw parse_error(lineno, "expected an unsigned integer, got '" + s + "'");
  }
}

inline std::optional<Outcome> parse_outcome(const std::string& s) {
  if (s == "pass") return Outcome::Pass;
  if (s == "fail") return Outcome::Fail;
  if (s == "undetermined" || s == "undetermined-within-horizon") return Outcome::Undetermined;
  return std::nullopt;
}

}  // namespace scenario_detail

inline ScenarioFile parse_scenario(const std::string& text) {
  using namespace scenario_detail;
  ScenarioFile s;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  enum class Section { Top, Edges, Adversary, Expected } section = Section::Top;

  while (std::getline(in, raw)) {
    ++lineno;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    auto tok = tokens(raw);
    if (tok.empty()) continue;

    if (section == Section::Edges) {
      if (tok[0] == "end") {
        section = Section::Top;
        continue;
      }
      if (tok.size() != 3) throw parse_error(lineno, "edge lines are 'u v class'");
      auto cls = parse_timing_class(tok[2]);
      if (!cls) throw parse_error(lineno, "unknown timing class '" + tok[2] + "'");
      s.edges.emplace_back(static_cast<int>(parse_int(tok[0], lineno)),
                           static_cast<int>(parse_int(tok[1], lineno)), *cls);
      continue;
    }
    if (section == Section::Expected) {
      if (tok[0] == "end") {
        section = Section::Top;
        continue;
      }
      if (tok.size() != 2) throw parse_error(lineno, "expected lines are 'property outcome'");
      auto o = parse_outcome(tok[1]);
      if (!o) throw parse_error(lineno, "unknown outcome '" + tok[1] + "'");
      s.expected[tok[0]] = *o;
      continue;
    }
    if (section == Section::Adversary) {
      const std::string& k = tok[0];
      if (k == "end") {
        section = Section::Top;
      } else if (k == "crash") {
        if (tok.size() != 3) throw parse_error(lineno, "crash lines are 'crash node time'");
        s.adversary.crashes.push_back({static_cast<int>(parse_int(tok[1], lineno)),
                               parse_int(tok[2], lineno)});
      } else if (k == "corrupt") {
        if (tok.size() < 4)
          throw parse_error(lineno, "corrupt lines are 'corrupt node time behavior [k=v...]'");
        CorruptCmd c{static_cast<int>(parse_int(tok[1], lineno)), parse_int(tok[2], lineno),
                     tok[3], {}};
        for (size_t i = 4; i < tok.size(); ++i) {
          auto eq = tok[i].find('=');
          if (eq == std::string::npos)
            throw parse_error(lineno, "behavior parameters are key=value");
          c.params[tok[i].substr(0, eq)] = tok[i].substr(eq + 1);
        }
        s.adversary.corruptions.push_back(std::move(c));
      } else if (k == "delay_policy") {
        if (tok.size() != 2) throw parse_error(lineno, "delay_policy takes one name");
        s.adversary.delay_policy = tok[1];
      } else if (k == "delay_cap") {
        s.adversary.delay_cap = parse_int(tok.at(1), lineno);
      } else if (k == "async_release") {
        s.adversary.async_release = parse_int(tok.at(1), lineno);
      } else if (k == "random_uniform") {
        s.adversary.random_uniform = tok.at(1) == "true";
      } else if (k == "split") {
        SplitRule rule;
        size_t i = 1;
        for (; i < tok.size() && tok[i] != "|"; ++i)
          rule.side_a.push_back(static_cast<int>(parse_int(tok[i], lineno)));
        if (i >= tok.size()) throw parse_error(lineno, "split lines are 'split a... | c... release t'");
        for (++i; i < tok.size() && tok[i] != "release"; ++i)
          rule.side_c.push_back(static_cast<int>(parse_int(tok[i], lineno)));
        if (i + 1 >= tok.size() || tok[i] != "release")
          throw parse_error(lineno, "split lines are 'split a... | c... release t'");
        rule.release = parse_int(tok[i + 1], lineno);
        s.adversary.split = std::move(rule);
      } else if (k == "override") {
        if (tok.size() != 6)
          throw parse_error(lineno, "override lines are 'override origin sender recipient seq delay'");
        s.adversary.overrides.push_back({static_cast<int>(parse_int(tok[1], lineno)),
                                 static_cast<int>(parse_int(tok[2], lineno)),
                                 static_cast<int>(parse_int(tok[3], lineno)),
                                 static_cast<uint64_t>(parse_int(tok[4], lineno)),
                                 parse_int(tok[5], lineno)});
      } else {
        throw parse_error(lineno, "unknown adversary directive '" + k + "'");
      }
      continue;
    }

    const std::string& key = tok[0];
    if (key == "edges") {
      section = Section::Edges;
    } else if (key == "adversary") {
      section = Section::Adversary;
    } else if (key == "expected") {
      section = Section::Expected;
    } else if (key == "protocol") {
      s.protocol = tok.at(1);
    } else if (key == "n") {
      s.n = static_cast<int>(parse_int(tok.at(1), lineno));
    } else if (key == "f") {
      s.f = static_cast<int>(parse_int(tok.at(1), lineno));
    } else if (key == "delta") {
      s.delta = parse_int(tok.at(1), lineno);
    } else if (key == "gst") {
      s.gst = parse_int(tok.at(1), lineno);
    } else if (key == "horizon") {
      s.horizon = parse_int(tok.at(1), lineno);
    } else if (key == "seed") {
      s.seed = parse_uint(tok.at(1), lineno);
    } else if (key == "sigma") {
      auto slash = tok.at(1).find('/');
      if (slash == std::string::npos) {
        s.sigma_num = static_cast<int>(parse_int(tok[1], lineno));
        s.sigma_den = 1;
      } else {
        s.sigma_num = static_cast<int>(parse_int(tok[1].substr(0, slash), lineno));
        s.sigma_den = static_cast<int>(parse_int(tok[1].substr(slash + 1), lineno));
      }
    } else if (key == "d_mode" || key == "dprime_mode") {
      DiameterMode m;
      if (tok.at(1) == "computed") {
        m.kind = DiameterMode::Computed;
      } else if (tok[1] == "fallback") {
        m.kind = DiameterMode::Fallback;
      } else if (tok[1] == "explicit") {
        m.kind = DiameterMode::Explicit;
        m.value = static_cast<int>(parse_int(tok.at(2), lineno));
      } else {
        throw parse_error(lineno, "d modes are computed|fallback|explicit <k>");
      }
      (key == "d_mode" ? s.d_mode : s.dprime_mode) = m;
    } else if (key == "unanimity_prephase") {
      s.unanimity_prephase = tok.at(1) == "true";
    } else if (key == "inputs") {
      s.inputs.assign(tok.begin() + 1, tok.end());
    } else {
      throw parse_error(lineno, "unknown key '" + key + "'");
    }
  }
  if (section != Section::Top) throw ScenarioError("scenario: unterminated section");
  return s;
}

// ---------------------------------------------------------------------------
// Validation and derived values
// ---------------------------------------------------------------------------

inline TimedGraph scenario_graph(const ScenarioFile& s) {
  TimedGraph g(s.n);
  for (const auto& [u, v, c] : s.edges) g.add_edge(u, v, c);
  return g;
}

inline void validate_scenario(const ScenarioFile& s) {
  if (s.protocol != "cft-gps" && s.protocol != "cft-gas" && s.protocol != "bft-gps" &&
      s.protocol != "bft-gas")
    throw ScenarioError("unknown protocol '" + s.protocol + "'");
  if (s.n < 1) throw ScenarioError("n must be >= 1");
  if (s.f < 0 || s.f >= s.n) throw ScenarioError("need 0 <= f < n");
  if (protocol_is_bft(s.protocol) && s.n < 2 * s.f + 1)
    throw ScenarioError("bft protocols need n >= 2f+1");
  if (s.delta < 1) throw ScenarioError("delta must be >= 1");
  if (s.horizon < 1) throw ScenarioError("horizon must be >= 1");
  if (s.gst < 0) throw ScenarioError("gst must be >= 0");
  if (s.sigma_den < 1 || s.sigma_num < s.sigma_den)
    throw ScenarioError("sigma must be a rational >= 1");
  if (static_cast<int>(s.inputs.size()) != s.n)
    throw ScenarioError("need exactly one input per node");
  for (const auto& v : s.inputs)
    if (!valid_value_token(v)) throw ScenarioError("bad input value '" + v + "'");
  if (s.unanimity_prephase && !protocol_is_bft(s.protocol))
    throw ScenarioError("unanimity_prephase applies to bft protocols only");

  TimedGraph g = scenario_graph(s);  // throws on duplicate/self edges
  if (!g.complete())
    throw ScenarioError("edge list must cover every unordered pair exactly once");
  if (!protocol_is_gas(s.protocol)) {
    for (const auto& [u, v, c] : s.edges)
      if (c == TimingClass::Asynchronous)
        throw ScenarioError("granular partial synchrony admits no asynchronous links");
  }
  SimParams params{s.n, s.delta, s.gst, s.horizon, s.seed, 1};
  validate_script(s.adversary, g, s.f, params, !protocol_is_bft(s.protocol));
  if (s.expected.size()) {
    for (const auto& [k, v] : s.expected) {
      (void)v;
      if (k != "agreement" && k != "validity" && k != "termination")
        throw ScenarioError("unknown expected property '" + k + "'");
    }
  }
}

struct ResolvedDiameters {
  int d = 1;
  int dprime = 1;
  DiameterResult d_computed, dprime_computed;
};

inline ResolvedDiameters resolve_diameters(const ScenarioFile& s) {
  TimedGraph g = scenario_graph(s);
  bool correct_pairs = protocol_is_bft(s.protocol);
  ResolvedDiameters out;
  out.d_computed = sync_diameter(g, s.f, correct_pairs);
  out.dprime_computed = psync_diameter(g, s.f, correct_pairs);
  auto pick = [&](const DiameterMode& m, const DiameterResult& computed) {
    switch (m.kind) {
      case DiameterMode::Computed: return computed.length;
      case DiameterMode::Fallback: return trivial_diameter_bound(s.n);
      case DiameterMode::Explicit: return m.value;
    }
    return computed.length;
  };
  out.d = pick(s.d_mode, out.d_computed);
  out.dprime = pick(s.dprime_mode, out.dprime_computed);
  return out;
}

}  // namespace gsyn
