#include "gsyn/cft.hpp"

#include <doctest.h>

#include "gsyn/runner.hpp"
#include "helpers.hpp"

using namespace gsyn;

namespace {

ProtoParams cft_params(int self, int n = 4, int f = 2) {
  ProtoParams p;
  p.n = n;
  p.f = f;
  p.delta = 10;
  p.d = 1;
  p.dprime = 1;
  p.self = self;
  p.input = "x";
  return p;
}

NodeEvent deliver_ev(const Envelope& env, Time now) {
  return NodeEvent{NodeEvent::Kind::Deliver, now, &env, ""};
}

Envelope env_from(int origin, Message m, Time t = 1) {
  return Envelope{origin, origin, -1, std::move(m), t, 1};
}

template <typename T>
std::vector<T> sends_of(const std::vector<Action>& actions) {
  std::vector<T> out;
  for (const auto& a : actions)
    if (const auto* s = std::get_if<SendAction>(&a))
      if (const auto* m = std::get_if<T>(&s->payload)) out.push_back(*m);
  return out;
}

}  // namespace

TEST_CASE("leader proposes at exactly n-f statuses, once") {
  CftGpsNode node(cft_params(1));
  node.on_event(NodeEvent{NodeEvent::Kind::Init, 0, nullptr, ""});

  auto e0 = env_from(0, Message{CStatus{1, CftLock{0, "x"}}});
  auto a0 = node.on_event(deliver_ev(e0, 5));
  CHECK(sends_of<CPropose>(a0).empty());

  auto e2 = env_from(2, Message{CStatus{1, CftLock{0, "x"}}});
  auto a1 = node.on_event(deliver_ev(e2, 6));
  auto props = sends_of<CPropose>(a1);
  REQUIRE(props.size() == 1);
  CHECK(props[0].view == 1);
  CHECK(props[0].value == "x");

  auto e3 = env_from(3, Message{CStatus{1, CftLock{0, "z"}}});
  CHECK(sends_of<CPropose>(node.on_event(deliver_ev(e3, 7))).empty());
}

TEST_CASE("leader picks the value of the highest lock among the first n-f") {
  CftGpsNode node(cft_params(1));
  node.on_event(NodeEvent{NodeEvent::Kind::Init, 0, nullptr, ""});
  auto e0 = env_from(0, Message{CStatus{1, CftLock{0, "a"}}});
  node.on_event(deliver_ev(e0, 5));
  auto e2 = env_from(2, Message{CStatus{1, CftLock{3, "b"}}});
  auto acts = node.on_event(deliver_ev(e2, 6));
  auto props = sends_of<CPropose>(acts);
  REQUIRE(props.size() == 1);
  CHECK(props[0].value == "b");
}

TEST_CASE("a proposal for the current view locks and votes") {
  CftGpsNode node(cft_params(0));
  node.on_event(NodeEvent{NodeEvent::Kind::Init, 0, nullptr, ""});
  auto prop = env_from(1, Message{CPropose{1, "y"}});
  auto acts = node.on_event(deliver_ev(prop, 12));
  auto votes = sends_of<CVote>(acts);
  REQUIRE(votes.size() == 1);
  CHECK(votes[0].view == 1);
  CHECK(votes[0].value == "y");
}

TEST_CASE("stale or non-leader proposals produce no action") {
  CftGpsNode node(cft_params(0));
  node.on_event(NodeEvent{NodeEvent::Kind::Init, 0, nullptr, ""});
  auto stale = env_from(0, Message{CPropose{0, "y"}});
  CHECK(node.on_event(deliver_ev(stale, 12)).empty());
  auto wrong_leader = env_from(2, Message{CPropose{1, "y"}});  // L_1 is node 1
  CHECK(node.on_event(deliver_ev(wrong_leader, 13)).empty());
  auto negative = env_from(1, Message{CPropose{-3, "y"}});
  CHECK(node.on_event(deliver_ev(negative, 14)).empty());
}

TEST_CASE("n-f votes or a single commit decide the value") {
  CftGpsNode node(cft_params(0));
  node.on_event(NodeEvent{NodeEvent::Kind::Init, 0, nullptr, ""});
  auto v1 = env_from(1, Message{CVote{1, "y"}});
  CHECK(node.on_event(deliver_ev(v1, 20)).empty());
  auto v2 = env_from(2, Message{CVote{1, "y"}});
  auto acts = node.on_event(deliver_ev(v2, 21));
  REQUIRE(sends_of<CCommit>(acts).size() == 1);
  bool decided = false;
  for (const auto& a : acts)
    if (const auto* d = std::get_if<DecideAction>(&a)) {
      decided = true;
      CHECK(d->value == "y");
    }
  CHECK(decided);
  // terminated: no further actions on any event
  auto late = env_from(3, Message{CVote{1, "y"}});
  CHECK(node.on_event(deliver_ev(late, 22)).empty());
}

TEST_CASE("duplicate votes from one origin count once") {
  CftGpsNode node(cft_params(0));
  node.on_event(NodeEvent{NodeEvent::Kind::Init, 0, nullptr, ""});
  auto v1 = env_from(1, Message{CVote{1, "y"}});
  node.on_event(deliver_ev(v1, 20));
  auto dup = env_from(1, Message{CVote{1, "y"}});
  CHECK(node.on_event(deliver_ev(dup, 21)).empty());
}

TEST_CASE("view timer triggers NewView and the 2d-delta wait precedes entry") {
  CftGpsNode node(cft_params(0));
  node.on_event(NodeEvent{NodeEvent::Kind::Init, 0, nullptr, ""});
  auto acts = node.on_event(NodeEvent{NodeEvent::Kind::TimerFire, 40, nullptr, "view:1"});
  auto nv = sends_of<CNewView>(acts);
  REQUIRE(nv.size() == 1);
  CHECK(nv[0].view == 2);

  // the NewView comes back (echoed): lock broadcast + wait timer
  auto nve = env_from(0, Message{CNewView{2}});
  auto acts2 = node.on_event(deliver_ev(nve, 41));
  CHECK(sends_of<CLocked>(acts2).size() == 1);
  bool wait_set = false;
  for (const auto& a : acts2)
    if (const auto* t = std::get_if<TimerSetAction>(&a)) {
      CHECK(t->id == "enter:2");
      CHECK(t->duration == 2 * 1 * 10);
      wait_set = true;
    }
  CHECK(wait_set);

  // proposals for the abandoned view are no longer accepted
  auto prop = env_from(1, Message{CPropose{1, "y"}});
  CHECK(node.on_event(deliver_ev(prop, 45)).empty());

  // entering the new view restarts the status exchange
  auto acts3 = node.on_event(NodeEvent{NodeEvent::Kind::TimerFire, 61, nullptr, "enter:2"});
  auto status = sends_of<CStatus>(acts3);
  REQUIRE(status.size() == 1);
  CHECK(status[0].view == 2);
}

TEST_CASE("granular asynchrony: non-leaders echo the status set and arm the timer") {
  ProtoParams p = cft_params(0);
  p.dprime = 3;
  CftGasNode node(p);
  node.on_event(NodeEvent{NodeEvent::Kind::Init, 0, nullptr, ""});
  auto e2 = env_from(2, Message{CStatus{1, CftLock{0, "b"}}});
  node.on_event(deliver_ev(e2, 5));
  auto e3 = env_from(3, Message{CStatus{1, CftLock{0, "c"}}});
  auto acts = node.on_event(deliver_ev(e3, 6));
  auto sets = sends_of<CStatusSet>(acts);
  REQUIRE(sets.size() == 1);
  CHECK(sets[0].view == 1);
  CHECK(sets[0].statuses.size() == 2);
  bool timer_set = false;
  for (const auto& a : acts)
    if (const auto* t = std::get_if<TimerSetAction>(&a)) {
      CHECK(t->id == "proposal:1");
      CHECK(t->duration == 3 * 3 * 10);
      timer_set = true;
    }
  CHECK(timer_set);
}

TEST_CASE("granular asynchrony: embedded statuses count toward the leader quorum") {
  CftGasNode node(cft_params(1));  // node 1 leads view 1
  node.on_event(NodeEvent{NodeEvent::Kind::Init, 0, nullptr, ""});
  CStatusSet set{1, {SignedCStatus{0, 1, CftLock{0, "a"}}, SignedCStatus{3, 1, CftLock{0, "c"}}}};
  auto e = env_from(2, Message{set});
  auto acts = node.on_event(deliver_ev(e, 9));
  auto props = sends_of<CPropose>(acts);
  REQUIRE(props.size() == 1);
  CHECK(props[0].value == "c");
}

TEST_CASE("granular asynchrony: proposal echo and timer guard") {
  CftGasNode node(cft_params(0));
  node.on_event(NodeEvent{NodeEvent::Kind::Init, 0, nullptr, ""});
  auto prop = env_from(1, Message{CPropose{1, "y"}});
  auto acts = node.on_event(deliver_ev(prop, 12));
  // forwards the proposal before voting
  REQUIRE(sends_of<CPropose>(acts).size() == 1);
  REQUIRE(sends_of<CVote>(acts).size() == 1);
  // a later proposal timer fire is silent: the leader did propose
  auto acts2 = node.on_event(NodeEvent{NodeEvent::Kind::TimerFire, 90, nullptr, "proposal:1"});
  CHECK(sends_of<CViewChange>(acts2).empty());
}

TEST_CASE("granular asynchrony: n-f view changes trigger NewView once") {
  CftGasNode node(cft_params(0));
  node.on_event(NodeEvent{NodeEvent::Kind::Init, 0, nullptr, ""});
  auto vc1 = env_from(2, Message{CViewChange{1}});
  CHECK(sends_of<CNewView>(node.on_event(deliver_ev(vc1, 50))).empty());
  auto vc2 = env_from(3, Message{CViewChange{1}});
  auto acts = node.on_event(deliver_ev(vc2, 51));
  auto nv = sends_of<CNewView>(acts);
  REQUIRE(nv.size() == 1);
  CHECK(nv[0].view == 2);
  auto vc3 = env_from(0, Message{CViewChange{1}});
  CHECK(sends_of<CNewView>(node.on_event(deliver_ev(vc3, 52))).empty());
}

TEST_CASE("end to end: happy path decides one value within 4 delta") {
  auto s = *library_scenario("cft-gps-happy");
  auto r = run_scenario(s);
  auto ds = testutil::decides(r.trace);
  REQUIRE(ds.size() == 4);
  for (const auto& d : ds) {
    CHECK(d.time <= 4 * 10);
    CHECK(d.value == ds[0].value);
  }
}

TEST_CASE("end to end: sync-path graph with a crashed node stays live") {
  auto s = *library_scenario("cft-gas-fig4-liveness");
  auto r = run_scenario(s);
  CHECK(r.verdicts.at("agreement").outcome == Outcome::Pass);
  CHECK(r.verdicts.at("termination").outcome == Outcome::Pass);
  CHECK(testutil::decides(r.trace).size() == 3);  // node 1 crashed at t=0
}

TEST_CASE("trace properties over fuzzed crash-fault runs") {
  for (const char* fam : {"cft-gps", "cft-gas"}) {
    for (uint64_t i = 0; i < 40; ++i) {
      auto s = make_fuzz_scenario(fam, 1234, i);
      auto r = run_scenario(s);
      CHECK(r.verdicts.at("agreement").outcome == Outcome::Pass);
      CHECK(r.verdicts.at("validity").outcome == Outcome::Pass);
      CHECK(r.verdicts.at("lock-monotonicity").outcome == Outcome::Pass);
      CHECK(r.verdicts.at("contract-compliance").outcome == Outcome::Pass);

      // an honest leader proposes a single value per view (echoes repeat it)
      std::map<std::pair<int, int>, std::set<std::string>> proposals;
      std::set<int> done;
      for (const auto& rec : r.trace.records) {
        if (rec.kind == RecordKind::Decide) done.insert(rec.node);
        if (rec.kind != RecordKind::Send) continue;
        // quiescence: a decided node emits nothing after its decide record
        CHECK_FALSE(done.count(rec.node));
        auto msg = *trace_view::field(rec.detail, "msg");
        if (msg.rfind("Propose(v=", 0) == 0) {
          int origin = std::stoi(*trace_view::field(rec.detail, "origin"));
          int view = std::stoi(msg.substr(10, msg.find(',') - 10));
          size_t vs = msg.find("val=") + 4;
          proposals[{origin, view}].insert(msg.substr(vs, msg.size() - vs - 1));
        }
      }
      for (const auto& [key, vals] : proposals) CHECK(vals.size() == 1);
    }
  }
}
