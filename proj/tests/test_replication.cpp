#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "calmstore/coordination.hpp"
#include "calmstore/replication.hpp"
#include "helpers.hpp"

using namespace calmstore;
using calmstore::testing::random_vv;

namespace {

const std::map<std::string, LatticeType> kSchema{
    {"items", LatticeType::GSet},
    {"hits", LatticeType::GCounter},
};

json gset_op(const std::string& elem) { return json{{"elem", elem}}; }

}  // namespace

TEST_CASE("version vectors form a lattice under pointwise max") {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 1000; ++i) {
    VersionVector a = random_vv(rng);
    VersionVector b = random_vv(rng);
    VersionVector c = random_vv(rng);
    REQUIRE(merge(merge(a, b), c) == merge(a, merge(b, c)));
    REQUIRE(merge(a, b) == merge(b, a));
    REQUIRE(merge(a, a) == a);
    REQUIRE(merge(a, VersionVector{}) == a);
    REQUIRE(merge(a, b).dominates(a));
    // dominates is the order induced by merge
    REQUIRE(b.dominates(a) == (merge(a, b) == b));
  }
}

TEST_CASE("version vector covers and serialization") {
  VersionVector vv;
  vv.advance(0, 3);
  vv.advance(2, 1);
  REQUIRE(vv.covers({0, 3}));
  REQUIRE_FALSE(vv.covers({0, 4}));
  REQUIRE_FALSE(vv.covers({1, 1}));
  REQUIRE(VersionVector::from_json(vv.to_json()) == vv);
  vv.advance(0, 2);  // advance never regresses
  REQUIRE(vv.get(0) == 3);
}

TEST_CASE("local ops advance the vv and feed the delta buffer") {
  Replica r(1, kSchema);
  OpRecord a = r.apply_local_op("items", "gset_add", gset_op("x"));
  OpRecord b = r.apply_local_op("items", "gset_add", gset_op("y"));
  REQUIRE(a.id == OpId{1, 1});
  REQUIRE(b.id == OpId{1, 2});
  REQUIRE(r.vv().get(1) == 2);
  REQUIRE(r.delta_buffer().size() == 2);
  REQUIRE(r.key_state("items") == Value::gset({"x", "y"}));
  // workload metric piggybacks on the same lattice machinery
  REQUIRE(r.stats().as_map().at(ops_stat_key("items")).counter_total() == 2);

  CHECK_THROWS_AS(r.apply_local_op("items", "counter_inc",
                                   {{"replica", 1}}),
                  TypeMismatchError);
  CHECK_THROWS_AS(r.apply_local_op("ghost", "gset_add", gset_op("x")),
                  LatticeError);
}

TEST_CASE("op records serialize round-trip") {
  Replica r(0, kSchema);
  OpRecord rec = r.apply_local_op("hits", "counter_inc",
                                  {{"replica", 0}, {"n", 4}});
  OpRecord back = OpRecord::from_json(rec.to_json(LatticeType::GCounter),
                                      LatticeType::GCounter);
  REQUIRE(back.id == rec.id);
  REQUIRE(back.key == rec.key);
  REQUIRE(back.op == rec.op);
  REQUIRE(back.delta == rec.delta);
}

TEST_CASE("full gossip merges whole stores") {
  Replica a(0, kSchema), b(1, kSchema);
  a.apply_local_op("items", "gset_add", gset_op("x"));
  b.apply_local_op("items", "gset_add", gset_op("y"));
  b.apply_local_op("hits", "counter_inc", {{"replica", 1}, {"n", 2}});

  a.receive_gossip(b.full_gossip_payload());
  REQUIRE(a.key_state("items") == Value::gset({"x", "y"}));
  REQUIRE(a.key_state("hits").counter_total() == 2);
  REQUIRE(a.vv().covers({1, 2}));
  b.receive_gossip(a.full_gossip_payload());
  REQUIRE(b.store() == a.store());
  REQUIRE(b.vv() == a.vv());
}

TEST_CASE("delta gossip applies per-origin FIFO with gap buffering") {
  Replica a(0, kSchema), b(1, kSchema);
  std::vector<OpRecord> recs;
  for (int i = 0; i < 3; ++i) {
    recs.push_back(
        a.apply_local_op("items", "gset_add", gset_op("e" + std::to_string(i))));
  }
  auto payload_with = [&](std::initializer_list<int> idxs) {
    json records = json::array();
    for (int i : idxs) records.push_back(recs[i].to_json(LatticeType::GSet));
    return json{{"from", 0}, {"mode", "delta"}, {"vv", a.vv().to_json()},
                {"records", records}};
  };

  b.receive_gossip(payload_with({2}));  // gap: seq 3 before 1-2
  REQUIRE(b.vv().get(0) == 0);
  REQUIRE(b.key_state("items") == Value::gset({}));
  b.receive_gossip(payload_with({1}));  // still gapped
  REQUIRE(b.vv().get(0) == 0);
  b.receive_gossip(payload_with({0}));  // releases the whole backlog
  REQUIRE(b.vv().get(0) == 3);
  REQUIRE(b.key_state("items") == Value::gset({"e0", "e1", "e2"}));

  // duplicates and replays are no-ops
  b.receive_gossip(payload_with({0, 1, 2}));
  REQUIRE(b.vv().get(0) == 3);
  REQUIRE(b.delta_buffer().size() == 3);  // relayed copies, one per op
}

TEST_CASE("delta payloads carry exactly the unacknowledged suffix") {
  Replica a(0, kSchema), b(1, kSchema);
  for (int i = 0; i < 4; ++i) {
    a.apply_local_op("items", "gset_add", gset_op("e" + std::to_string(i)));
  }
  // before hearing from b, everything is unacknowledged
  REQUIRE(a.delta_gossip_payload_for(1).at("records").size() == 4);

  b.receive_gossip(a.delta_gossip_payload_for(1));
  a.receive_gossip(b.delta_gossip_payload_for(0));  // piggybacked ack
  REQUIRE(a.delta_gossip_payload_for(1).at("records").empty());

  VersionVector partial;
  partial.advance(0, 2);
  REQUIRE(a.delta_gossip_payload(partial).at("records").size() == 2);
}

TEST_CASE("pruning drops only records every peer acknowledged") {
  Replica a(0, kSchema), b(1, kSchema), c(2, kSchema);
  for (int i = 0; i < 3; ++i) {
    a.apply_local_op("items", "gset_add", gset_op("e" + std::to_string(i)));
  }
  b.receive_gossip(a.delta_gossip_payload_for(1));
  a.receive_gossip(b.delta_gossip_payload_for(0));

  // c has acked nothing, so nothing may go
  a.prune_delta_buffer(3);
  REQUIRE(a.delta_buffer().size() == 3);

  c.receive_gossip(a.delta_gossip_payload_for(2));
  a.receive_gossip(c.delta_gossip_payload_for(0));
  a.prune_delta_buffer(3);
  REQUIRE(a.delta_buffer().empty());

  // pruning is invisible to final state
  REQUIRE(b.store() == a.store());
  REQUIRE(c.store() == a.store());
}

TEST_CASE("malformed payloads are rejected") {
  Replica r(0, kSchema);
  CHECK_THROWS_AS(r.receive_gossip(json::array()), MalformedPayloadError);
  CHECK_THROWS_AS(r.receive_gossip(json{{"mode", "delta"}}),
                  MalformedPayloadError);
  CHECK_THROWS_AS(
      r.receive_gossip(json{{"from", 1},
                            {"mode", "carrier-pigeon"},
                            {"vv", json::object()}}),
      MalformedPayloadError);
}

TEST_CASE("full and delta replication reach the same fixpoint") {
  std::mt19937_64 rng(53);
  for (int round = 0; round < 50; ++round) {
    std::vector<Replica> full, delta;
    for (std::uint32_t r = 0; r < 3; ++r) {
      full.emplace_back(r, kSchema);
      delta.emplace_back(r, kSchema);
    }
    // same random op sequence applied to both fleets
    for (int i = 0; i < 20; ++i) {
      std::uint32_t who = static_cast<std::uint32_t>(rng() % 3);
      if (rng() % 2) {
        json args = gset_op("e" + std::to_string(rng() % 10));
        full[who].apply_local_op("items", "gset_add", args);
        delta[who].apply_local_op("items", "gset_add", args);
      } else {
        json args{{"replica", who}, {"n", 1 + rng() % 3}};
        full[who].apply_local_op("hits", "counter_inc", args);
        delta[who].apply_local_op("hits", "counter_inc", args);
      }
    }
    for (int sweep = 0; sweep < 2; ++sweep) {
      for (std::uint32_t from = 0; from < 3; ++from) {
        for (std::uint32_t to = 0; to < 3; ++to) {
          if (from == to) continue;
          full[to].receive_gossip(full[from].full_gossip_payload());
          delta[to].receive_gossip(delta[from].delta_gossip_payload_for(to));
        }
      }
    }
    for (std::uint32_t r = 0; r < 3; ++r) {
      REQUIRE(full[r].store() == full[0].store());
      REQUIRE(delta[r].store() == full[0].store());
      REQUIRE(delta[r].vv() == full[r].vv());
    }
  }
}

TEST_CASE("op-based mirror tracks causal history") {
  Replica a(0, kSchema, /*track_polog=*/true);
  Replica b(1, kSchema, /*track_polog=*/true);
  a.apply_local_op("items", "gset_add", gset_op("x"));
  a.apply_local_op("items", "gset_add", gset_op("y"));
  b.receive_gossip(a.delta_gossip_payload_for(1));
  REQUIRE(b.polog().size() == 2);
  b.apply_local_op("items", "gset_add", gset_op("z"));
  // the new op's predecessors are the merged frontier
  REQUIRE(b.polog().causal_frontier() == std::set<OpId>{{1, 1}});
  a.receive_gossip(b.delta_gossip_payload_for(0));
  REQUIRE(a.polog() == b.polog());
  Value replayed = replay(a.polog(), standard_interpreter(LatticeType::GSet));
  REQUIRE(replayed == a.key_state("items"));
}
