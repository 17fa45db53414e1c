// End-to-end acceptance checks. Each criterion prints one pass/fail line;
// the process exits nonzero if any criterion fails or overruns its budget.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>
#include <vector>

#include "calmstore/checker.hpp"
#include "calmstore/dsl.hpp"
#include "calmstore/metrics.hpp"
#include "calmstore/simnet.hpp"
#include "helpers.hpp"

using namespace calmstore;
using calmstore::testing::canonical_args;
using calmstore::testing::random_polog;
using calmstore::testing::random_vv;

namespace {

int g_failures = 0;

void criterion(int n, const char* what, double budget_s,
               const std::function<void(std::ostringstream&)>& body) {
  std::ostringstream why;
  auto start = std::chrono::steady_clock::now();
  bool ok = true;
  try {
    body(why);
    ok = why.str().empty();
  } catch (const std::exception& e) {
    ok = false;
    why << "exception: " << e.what();
  }
  double secs = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  if (secs > budget_s) {
    ok = false;
    why << (why.str().empty() ? "" : "; ") << "overran " << budget_s
        << "s budget";
  }
  std::printf("%s criterion %d: %s (%.1fs)%s%s\n", ok ? "PASS" : "FAIL", n,
              what, secs, ok ? "" : " -- ", ok ? "" : why.str().c_str());
  if (!ok) ++g_failures;
}

std::string scn(const char* name) {
  return std::string(SCENARIO_DIR) + "/" + name;
}

const char* kScenarios[] = {"potato_ferrari.scn", "threshold.scn",
                            "rate_limiter.scn", "bulk.scn", "adaptive.scn"};

// ---------------------------------------------------------------- c1

template <typename T, typename Gen>
bool aci_suite(Gen gen, const T& bot, std::ostringstream& why,
               const char* label) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    T a = gen(rng), b = gen(rng), c = gen(rng);
    if (!(merge(merge(a, b), c) == merge(a, merge(b, c))) ||
        !(merge(a, b) == merge(b, a)) || !(merge(a, a) == a) ||
        !(merge(a, bot) == a)) {
      why << label << " law violated at case " << i;
      return false;
    }
  }
  return true;
}

void c1(std::ostringstream& why) {
  const LatticeType types[] = {
      LatticeType::GSet,      LatticeType::TwoPSet, LatticeType::GCounter,
      LatticeType::PNCounter, LatticeType::MaxNat,  LatticeType::Bool,
      LatticeType::Map};
  for (LatticeType t : types) {
    auto gen = [t](std::mt19937_64& rng) { return random_value(t, rng); };
    if (!aci_suite<Value>(gen, bottom(t), why, type_name(t))) return;
  }
  auto log_gen = [](std::mt19937_64& rng) { return random_polog(rng); };
  if (!aci_suite<PoLog>(log_gen, PoLog{}, why, "oplog")) return;
  auto vv_gen = [](std::mt19937_64& rng) { return random_vv(rng); };
  aci_suite<VersionVector>(vv_gen, VersionVector{}, why, "version-vector");
}

// ---------------------------------------------------------------- c2

Scenario faulty_mixed_workload() {
  json wl = json::array();
  std::mt19937_64 rng(77);
  for (int i = 0; i < 50; ++i) {
    std::uint32_t who = static_cast<std::uint32_t>(rng() % 3);
    json ev{{"time", 1 + i}, {"kind", "op"}, {"replica", who}};
    switch (rng() % 4) {
      case 0:
        ev["key"] = "s";
        ev["op"] = "gset_add";
        ev["args"] = {{"elem", "e" + std::to_string(rng() % 12)}};
        break;
      case 1:
        ev["key"] = "cart";
        ev["op"] = (rng() % 2) ? "twopset_add" : "twopset_remove";
        ev["args"] = {{"elem", "c" + std::to_string(rng() % 8)}};
        break;
      case 2:
        ev["key"] = "hits";
        ev["op"] = "counter_inc";
        ev["args"] = {{"replica", who}, {"n", 1 + rng() % 3}};
        break;
      default:
        ev["key"] = "pn";
        ev["op"] = (rng() % 2) ? "pn_inc" : "pn_dec";
        ev["args"] = {{"replica", who}, {"n", 1 + rng() % 3}};
        break;
    }
    wl.push_back(std::move(ev));
  }
  json j{{"config",
          {{"n_replicas", 3}, {"latency_min", 1}, {"latency_max", 5},
           {"p_drop", 0.3}, {"p_dup", 0.5}, {"gossip_interval", 3}}},
         {"keys",
          json::array({{{"name", "s"}, {"type", "gset"}},
                       {{"name", "cart"}, {"type", "twopset"}},
                       {{"name", "hits"}, {"type", "gcounter"}},
                       {{"name", "pn"}, {"type", "pncounter"}}})},
         {"workload", wl}};
  return Scenario::from_json(j);
}

void c2(std::ostringstream& why) {
  Scenario base = faulty_mixed_workload();
  for (GossipMode mode : {GossipMode::Full, GossipMode::Delta}) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Scenario s = base;
      s.config.gossip_mode = mode;
      s.config.seed = seed;
      Trace t = run_scenario(s);
      std::vector<std::string> stores;
      for (const json& rec : t.records()) {
        if (rec.at("rec") == "final_state") {
          stores.push_back(rec.at("store").dump());
        }
      }
      if (stores.size() != 3 ||
          stores[1] != stores[0] || stores[2] != stores[0]) {
        why << "divergent final states, mode="
            << (mode == GossipMode::Full ? "full" : "delta")
            << " seed=" << seed;
        return;
      }
    }
  }
}

// ---------------------------------------------------------------- c3

void c3(std::ostringstream& why) {
  for (const char* name : kScenarios) {
    Scenario base = Scenario::load(scn(name).c_str());
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      Scenario s = base;
      s.config.seed = seed;
      ParsedTrace parsed = ParsedTrace::parse(run_scenario(s));
      auto violations = check_monotone_definitive(parsed);
      if (!violations.empty()) {
        why << name << " seed " << seed << ": " << violations.size()
            << " monotone violations";
        return;
      }
    }
  }
  // exhaustive small-world confirmation for the two threshold queries
  std::vector<std::pair<std::string, json>> gset_ops, twop_ops;
  for (int i = 0; i < 6; ++i) {
    gset_ops.push_back(
        {"gset_add",
         {{"elem", json{{"amount", 150 + i}, {"id", i}, {"type", "GIFTCARD"}}}}});
    twop_ops.push_back({i % 2 ? "twopset_add" : "twopset_remove",
                        {{"elem", "r" + std::to_string(i)}}});
  }
  if (!enumerate_delivery_orders(gset_ops, *find_query("suspicious_activity"))
           .monotone_definitive_ok) {
    why << "suspicious_activity lost a definitive answer";
    return;
  }
  if (!enumerate_delivery_orders(twop_ops, *find_query("rate_limiter"))
           .monotone_definitive_ok) {
    why << "rate_limiter lost a definitive answer";
    return;
  }
  // and one where readiness actually triggers mid-sequence
  EnumerationReport live = enumerate_delivery_orders(
      std::vector<std::pair<std::string, json>>(
          4, {"gset_add", {{"elem", "x"}}}),
      *find_query("cardinality_gt(0)"));
  if (!live.monotone_definitive_ok) {
    why << "cardinality threshold regressed after turning ready";
  }
}

// ---------------------------------------------------------------- c4

int sweep_anomalies(const Scenario& base, const char* write,
                    const char* read) {
  int total = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Overrides o;
    o.seed = seed;
    o.write = write;
    o.read = read;
    json verdict = check_trace(run_scenario(apply_overrides(base, o)));
    total += verdict.at("anomalies").get<int>();
  }
  return total;
}

void c4(std::ostringstream& why) {
  Scenario base = Scenario::load(scn("potato_ferrari.scn").c_str());
  int unsafe = sweep_anomalies(base, "write_one", "read_one");
  if (unsafe < 1) {
    why << "write_one+read_one produced no anomaly over 20 seeds";
    return;
  }
  const std::pair<const char*, const char*> safe_pairs[] = {
      {"write_one", "read_all"},
      {"write_quorum:2", "read_quorum:2"},
      {"write_all", "read_one"},
  };
  for (auto [w, r] : safe_pairs) {
    int n = sweep_anomalies(base, w, r);
    if (n != 0) {
      why << w << "+" << r << " produced " << n << " anomalies";
      return;
    }
  }
  std::vector<std::pair<std::string, json>> ops{
      {"twopset_add", {{"elem", "potato"}}},
      {"twopset_remove", {{"elem", "potato"}}},
      {"twopset_add", {{"elem", "ferrari"}}},
  };
  if (!enumerate_delivery_orders(ops, *find_query("contents"))
           .regression_found) {
    why << "no regression interleaving found for contents";
  }
}

// ---------------------------------------------------------------- c5

void c5(std::ostringstream& why) {
  struct Case {
    const char* text;
    bool monotone;
  };
  const Case corpus[] = {
      {"COUNT(FILTER(txns, type == \"GIFTCARD\" AND amount > 100)) > 50",
       true},
      {"PLUS(COUNT(cart.adds), COUNT(cart.removes)) > 100", true},
      {"EXCEPT(cart.adds, cart.removes)", false},
      {"cart.adds", true},
      {"txns", true},
      {"UNION(a, b)", true},
      {"INTERSECT(a, b)", true},
      {"UNION(a, INTERSECT(b, c))", true},
      {"COUNT(txns) > 0", true},
      {"COUNT(txns) >= 10", true},
      {"COUNT(txns) < 2", false},
      {"COUNT(txns) <= 1", false},
      {"COUNT(txns) == 0", false},
      {"FILTER(txns, amount >= 5)", true},
      {"FILTER(txns, type == \"FOOD\")", true},
      {"PROJECT(txns, type)", true},
      {"PROJECT(FILTER(txns, amount > 100), type, amount)", true},
      {"COUNT(UNION(cart.adds, cart.removes)) > 3", true},
      {"COUNT(EXCEPT(cart.adds, cart.removes)) > 1", false},
      {"EXCEPT(a, EXCEPT(b, c))", false},
      {"UNION(a, EXCEPT(b, c))", false},
      {"PLUS(COUNT(a), PLUS(COUNT(b), COUNT(c))) >= 1", true},
      {"COUNT(INTERSECT(a, b)) > 2", true},
      {"COUNT(PROJECT(txns, amount)) == 0", false},
  };
  const std::map<std::string, LatticeType> schema{
      {"txns", LatticeType::GSet},  {"cart", LatticeType::TwoPSet},
      {"a", LatticeType::GSet},     {"b", LatticeType::GSet},
      {"c", LatticeType::GSet},
  };
  for (const Case& c : corpus) {
    dsl::AstPtr ast = dsl::parse(c.text);
    dsl::MonotonicityClass cls = dsl::classify(*ast);
    if (cls.monotone != c.monotone) {
      why << "misclassified: " << c.text;
      return;
    }
    auto cex =
        dsl::find_counterexample(*ast, schema, 1, c.monotone ? 500 : 4000);
    if (c.monotone && cex) {
      why << "sampled order check failed for monotone query: " << c.text;
      return;
    }
    if (!c.monotone) {
      if (!cex) {
        why << "no counterexample for non-monotone query: " << c.text;
        return;
      }
      if (!leq(cex->lo, cex->hi)) {
        why << "counterexample pair not ordered for: " << c.text;
        return;
      }
    }
  }
}

// ---------------------------------------------------------------- c6

std::vector<std::string> final_stores(const Trace& t) {
  std::vector<std::string> out;
  for (const json& rec : t.records()) {
    if (rec.at("rec") == "final_state") out.push_back(rec.at("store").dump());
  }
  return out;
}

void c6(std::ostringstream& why) {
  Scenario base = Scenario::load(scn("bulk.scn").c_str());
  auto run_mode = [&](GossipMode mode, bool prune) {
    Scenario s = base;
    s.config.gossip_mode = mode;
    s.config.prune = prune;
    return run_scenario(s);
  };
  Trace delta = run_mode(GossipMode::Delta, true);
  Trace full = run_mode(GossipMode::Full, true);
  std::uint64_t delta_bytes =
      metrics_report(delta).at("total_gossip_bytes").get<std::uint64_t>();
  std::uint64_t full_bytes =
      metrics_report(full).at("total_gossip_bytes").get<std::uint64_t>();
  if (delta_bytes >= full_bytes) {
    why << "delta bytes " << delta_bytes << " not below full bytes "
        << full_bytes;
    return;
  }
  if (final_stores(delta) != final_stores(full)) {
    why << "final states differ between gossip modes";
    return;
  }
  if (final_stores(delta) != final_stores(run_mode(GossipMode::Delta, false))) {
    why << "pruning changed the final state";
  }
}

// ---------------------------------------------------------------- c7

void c7(std::ostringstream& why) {
  for (const char* name : kScenarios) {
    Scenario s = Scenario::load(scn(name).c_str());
    if (run_scenario(s).to_jsonl() != run_scenario(s).to_jsonl()) {
      why << name << ": same seed, different traces";
      return;
    }
  }
}

// ---------------------------------------------------------------- c8

void c8(std::ostringstream& why) {
  std::mt19937_64 rng(3);
  Interpreter interp = standard_interpreter(LatticeType::GSet);
  for (int round = 0; round < 50; ++round) {
    PoLog log = random_polog(rng, 6);
    Value expected = replay(log, interp);

    std::vector<OpId> ids;
    for (const auto& [id, node] : log.nodes()) ids.push_back(id);
    std::sort(ids.begin(), ids.end());

    std::map<OpId, std::set<OpId>> preds;
    for (const auto& e : log.edges()) preds[e.second].insert(e.first);

    std::vector<OpId> order = ids;
    do {
      std::map<OpId, std::size_t> pos;
      for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
      bool topological = std::all_of(
          log.edges().begin(), log.edges().end(), [&](const PoLog::Edge& e) {
            return pos.at(e.first) < pos.at(e.second);
          });
      if (topological) {
        Value folded = bottom(LatticeType::GSet);
        for (OpId id : order) {
          const auto& node = log.nodes().at(id);
          folded = merge(folded, interp.delta(node.op, node.args, folded));
        }
        if (!(folded == expected)) {
          why << "round " << round << ": merge-fold diverged from replay";
          return;
        }
      }
      // every arrival permutation must rebuild the identical log
      CausalBuffer buf;
      PoLog rebuilt;
      for (OpId id : order) {
        const auto& node = log.nodes().at(id);
        rebuilt = buf.deliver(rebuilt, {id, node.op, node.args, preds[id]});
      }
      if (!(rebuilt == log) || buf.pending() != 0) {
        why << "round " << round << ": causal delivery diverged";
        return;
      }
    } while (std::next_permutation(order.begin(), order.end()));
  }
}

}  // namespace

int main() {
  criterion(1, "merge laws hold for every lattice (1000 cases each)", 10, c1);
  criterion(2, "replicas converge under drops, dups and jitter (100 seeds)",
            60, c2);
  criterion(3, "definitive answers never retract (200 seeds + enumeration)",
            120, c3);
  criterion(4, "non-overlapping strategies leak anomalies; overlapping never",
            30, c4);
  criterion(5, "syntactic classification matches sampled semantics", 60, c5);
  criterion(6, "delta gossip moves fewer bytes to the same state", 60, c6);
  criterion(7, "runs are reproducible byte-for-byte", 60, c7);
  criterion(8, "log replay equals merge-fold under every delivery order", 60,
            c8);
  return g_failures == 0 ? 0 : 1;
}
