#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "calmstore/polog.hpp"
#include "helpers.hpp"

using namespace calmstore;
using calmstore::testing::canonical_args;
using calmstore::testing::random_polog;

namespace {

PoLog chain(std::size_t n, std::uint32_t origin = 0) {
  PoLog log;
  for (std::size_t i = 1; i <= n; ++i) {
    OpId id{origin, i};
    log = log.record("gset_add", canonical_args(id), log.causal_frontier(), id);
  }
  return log;
}

bool respects_edges(const PoLog& log, const std::vector<OpId>& order) {
  std::map<OpId, std::size_t> pos;
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
  return std::all_of(log.edges().begin(), log.edges().end(),
                     [&](const PoLog::Edge& e) {
                       return pos.at(e.first) < pos.at(e.second);
                     });
}

}  // namespace

TEST_CASE("record links from the frontier and grows the log") {
  PoLog log = chain(3);
  REQUIRE(log.size() == 3);
  REQUIRE(log.causal_frontier() == std::set<OpId>{{0, 3}});
  REQUIRE(log.edges().count({{0, 1}, {0, 2}}) == 1);
  REQUIRE(log.edges().count({{0, 2}, {0, 3}}) == 1);

  // concurrent branches widen the frontier
  PoLog forked = log.record("gset_add", canonical_args({1, 1}), {}, {1, 1});
  std::set<OpId> want{{0, 3}, {1, 1}};
  REQUIRE(forked.causal_frontier() == want);
}

TEST_CASE("record rejects duplicates and unknown predecessors") {
  PoLog log = chain(2);
  CHECK_THROWS_AS(log.record("gset_add", {}, {}, {0, 1}), DuplicateIdError);
  CHECK_THROWS_AS(log.record("gset_add", {}, {{9, 9}}, {0, 3}),
                  UnknownPredecessorError);
}

TEST_CASE("merge is associative, commutative, idempotent with empty identity") {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 1000; ++i) {
    PoLog a = random_polog(rng);
    PoLog b = random_polog(rng);
    PoLog c = random_polog(rng);
    REQUIRE(merge(merge(a, b), c) == merge(a, merge(b, c)));
    REQUIRE(merge(a, b) == merge(b, a));
    REQUIRE(merge(a, a) == a);
    REQUIRE(merge(a, PoLog{}) == a);
  }
}

TEST_CASE("topo_order respects edges with deterministic tie-break") {
  std::mt19937_64 rng(29);
  for (int i = 0; i < 300; ++i) {
    PoLog log = random_polog(rng, 6);
    std::vector<OpId> order = log.topo_order();
    REQUIRE(order.size() == log.size());
    REQUIRE(respects_edges(log, order));
    REQUIRE(order == log.topo_order());  // pure function of content
  }
}

TEST_CASE("merging independently grown logs can surface a cycle") {
  // Two replicas that each claim the other's op came first produce a cyclic
  // happens-before relation; topo_order must refuse to linearize it.
  PoLog a;
  a = a.record("gset_add", canonical_args({0, 1}), {}, {0, 1});
  a = a.record("gset_add", canonical_args({1, 1}), {{0, 1}}, {1, 1});
  PoLog b;
  b = b.record("gset_add", canonical_args({1, 1}), {}, {1, 1});
  b = b.record("gset_add", canonical_args({0, 1}), {{1, 1}}, {0, 1});
  PoLog bad = merge(a, b);
  CHECK_THROWS_AS(bad.topo_order(), CycleError);
}

TEST_CASE("replay folds deltas and matches every topological order") {
  std::mt19937_64 rng(31);
  Interpreter interp = standard_interpreter(LatticeType::GSet);
  for (int i = 0; i < 100; ++i) {
    PoLog log = random_polog(rng, 5);
    Value expected = replay(log, interp);

    // exhaustive: every permutation that respects the edges folds equally
    std::vector<OpId> ids;
    for (const auto& [id, node] : log.nodes()) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    do {
      if (!respects_edges(log, ids)) continue;
      Value state = bottom(LatticeType::GSet);
      for (OpId id : ids) {
        const auto& node = log.nodes().at(id);
        state = merge(state, interp.delta(node.op, node.args, state));
      }
      REQUIRE(state == expected);
    } while (std::next_permutation(ids.begin(), ids.end()));
  }
}

TEST_CASE("replay handles state-dependent counter ops deterministically") {
  Interpreter interp = standard_interpreter(LatticeType::GCounter);
  PoLog log;
  log = log.record("counter_inc", {{"replica", 0}, {"n", 2}}, {}, {0, 1});
  log = log.record("counter_inc", {{"replica", 0}, {"n", 3}},
                   log.causal_frontier(), {0, 2});
  log = log.record("counter_inc", {{"replica", 1}, {"n", 5}}, {}, {1, 1});
  Value v = replay(log, interp);
  REQUIRE(v.counter_total() == 10);
  REQUIRE(replay(log, interp) == v);
}

TEST_CASE("causal buffer releases gapped records in cascades") {
  PoLog origin = chain(4);
  std::vector<LogRecord> records;
  for (const auto& [id, node] : origin.nodes()) {
    std::set<OpId> preds;
    for (const auto& e : origin.edges()) {
      if (e.second == id) preds.insert(e.first);
    }
    records.push_back({id, node.op, node.args, preds});
  }

  SUBCASE("every arrival permutation converges to the origin log") {
    std::vector<std::size_t> order{0, 1, 2, 3};
    do {
      CausalBuffer buf;
      PoLog log;
      for (std::size_t idx : order) log = buf.deliver(log, records[idx]);
      REQUIRE(log == origin);
      REQUIRE(buf.pending() == 0);
    } while (std::next_permutation(order.begin(), order.end()));
  }

  SUBCASE("out-of-order delivery parks records until their preds arrive") {
    CausalBuffer buf;
    PoLog log;
    log = buf.deliver(log, records[3]);
    REQUIRE(log.size() == 0);
    REQUIRE(buf.pending() == 1);
    log = buf.deliver(log, records[0]);
    REQUIRE(log.size() == 1);
    log = buf.deliver(log, records[1]);
    log = buf.deliver(log, records[2]);  // releases the parked record too
    REQUIRE(log == origin);
    REQUIRE(buf.pending() == 0);
  }

  SUBCASE("duplicates are dropped") {
    CausalBuffer buf;
    PoLog log;
    for (const LogRecord& rec : records) log = buf.deliver(log, rec);
    for (const LogRecord& rec : records) log = buf.deliver(log, rec);
    REQUIRE(log == origin);
  }
}
