#include "calmstore/scenario.hpp"

#include <fstream>

#include "calmstore/query.hpp"

namespace calmstore {

json SimConfig::to_json() const {
  json j{{"seed", seed},
         {"n_replicas", n_replicas},
         {"latency_min", latency_min},
         {"latency_max", latency_max},
         {"p_drop", p_drop},
         {"p_dup", p_dup},
         {"gossip_interval", gossip_interval},
         {"gossip_mode", gossip_mode == GossipMode::Full ? "full" : "delta"},
         {"max_ticks", max_ticks},
         {"prune", prune},
         {"theta", theta},
         {"coord_timeout", coord_timeout}};
  if (staleness_horizon) j["staleness_horizon"] = *staleness_horizon;
  return j;
}

SimConfig SimConfig::from_json(const json& j) {
  SimConfig c;
  auto get = [&](const char* name, auto& field) {
    if (j.contains(name)) field = j.at(name).get<std::decay_t<decltype(field)>>();
  };
  get("seed", c.seed);
  get("n_replicas", c.n_replicas);
  get("latency_min", c.latency_min);
  get("latency_max", c.latency_max);
  get("p_drop", c.p_drop);
  get("p_dup", c.p_dup);
  get("gossip_interval", c.gossip_interval);
  get("max_ticks", c.max_ticks);
  get("prune", c.prune);
  get("theta", c.theta);
  get("coord_timeout", c.coord_timeout);
  if (j.contains("gossip_mode")) {
    std::string mode = j.at("gossip_mode").get<std::string>();
    if (mode == "full") {
      c.gossip_mode = GossipMode::Full;
    } else if (mode == "delta") {
      c.gossip_mode = GossipMode::Delta;
    } else {
      throw ScenarioError("config.gossip_mode must be full or delta");
    }
  }
  if (j.contains("staleness_horizon") && !j.at("staleness_horizon").is_null()) {
    c.staleness_horizon = j.at("staleness_horizon").get<std::uint64_t>();
  }
  if (c.n_replicas < 1) throw ScenarioError("config.n_replicas must be >= 1");
  if (c.latency_min > c.latency_max) {
    throw ScenarioError("config.latency_min exceeds latency_max");
  }
  if (c.p_drop < 0 || c.p_drop > 1 || c.p_dup < 0 || c.p_dup > 1) {
    throw ScenarioError("config probabilities must lie in [0,1]");
  }
  if (c.gossip_interval == 0) {
    throw ScenarioError("config.gossip_interval must be positive");
  }
  return c;
}

Scenario Scenario::from_json(const json& j) {
  Scenario s;
  if (j.contains("config")) s.config = SimConfig::from_json(j.at("config"));
  for (const auto& key : j.at("keys")) {
    s.keys.emplace(key.at("name").get<std::string>(),
                   type_from_name(key.at("type").get<std::string>()));
  }
  if (j.contains("policies")) {
    const json& p = j.at("policies");
    if (p.contains("write")) s.default_write = p.at("write").get<std::string>();
    if (p.contains("read")) s.default_read = p.at("read").get<std::string>();
  }
  for (const auto& ev : j.at("workload")) {
    WorkloadEvent e;
    e.time = ev.at("time").get<std::uint64_t>();
    std::string kind = ev.at("kind").get<std::string>();
    e.replica = ev.at("replica").get<std::uint32_t>();
    if (kind == "op") {
      e.kind = WorkloadEvent::Kind::Op;
      e.key = ev.at("key").get<std::string>();
      e.op = ev.at("op").get<std::string>();
      e.args = ev.contains("args") ? ev.at("args") : json::object();
    } else if (kind == "query") {
      e.kind = WorkloadEvent::Kind::Query;
      e.key = ev.at("key").get<std::string>();
      e.query = ev.at("query").get<std::string>();
      e.mode = ev.at("mode").get<std::string>();
    } else {
      throw ScenarioError("workload event kind must be op or query");
    }
    if (ev.contains("read")) e.read = ev.at("read").get<std::string>();
    if (ev.contains("write")) e.write = ev.at("write").get<std::string>();
    s.workload.push_back(std::move(e));
  }
  s.validate();
  return s;
}

Scenario Scenario::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ScenarioError("scenario parse error in " + path + ": " + e.what());
  }
  return from_json(j);
}

namespace {

void check_write_name(const std::string& name) {
  if (name == "adaptive") return;
  try {
    parse_write_strategy(name);
  } catch (const LatticeError& e) {
    throw ScenarioError(e.what());
  }
}

void check_read_name(const std::string& name) {
  if (name == "adaptive") return;
  try {
    parse_read_strategy(name);
  } catch (const LatticeError& e) {
    throw ScenarioError(e.what());
  }
}

}  // namespace

void Scenario::validate() const {
  check_write_name(default_write);
  check_read_name(default_read);
  for (std::size_t i = 0; i < workload.size(); ++i) {
    const WorkloadEvent& e = workload[i];
    const std::string at = "workload[" + std::to_string(i) + "]";
    if (e.replica >= config.n_replicas) {
      throw ScenarioError(at + ": unknown replica " +
                          std::to_string(e.replica));
    }
    if (e.time > config.max_ticks) {
      throw ScenarioError(at + ": event time exceeds max_ticks");
    }
    auto key = keys.find(e.key);
    if (key == keys.end()) {
      throw ScenarioError(at + ": undeclared key " + e.key);
    }
    if (e.kind == WorkloadEvent::Kind::Op) {
      if (op_target_type(e.op) != key->second) {
        throw ScenarioError(at + ": op " + e.op + " does not apply to " +
                            type_name(key->second) + " key " + e.key);
      }
      if (e.write) check_write_name(*e.write);
    } else {
      auto q = find_query(e.query);
      if (!q) throw ScenarioError(at + ": unknown query " + e.query);
      if (q->source != key->second) {
        throw ScenarioError(at + ": query " + e.query + " expects a " +
                            std::string(type_name(q->source)) + " key");
      }
      if (e.mode != "local_threshold" && e.mode != "lower_bound" &&
          e.mode != "coordinated") {
        throw ScenarioError(at + ": unknown query mode " + e.mode);
      }
      if (e.mode == "local_threshold" && !q->monotone) {
        throw ScenarioError(at + ": " + e.query +
                            " is not a monotone threshold query");
      }
      if (e.read) check_read_name(*e.read);
    }
  }
}

Scenario apply_overrides(Scenario s, const Overrides& o) {
  if (o.seed) s.config.seed = *o.seed;
  if (o.gossip_mode) s.config.gossip_mode = *o.gossip_mode;
  if (o.prune) s.config.prune = *o.prune;
  if (o.write) {
    s.default_write = *o.write;
    for (auto& e : s.workload) e.write.reset();
  }
  if (o.read) {
    s.default_read = *o.read;
    for (auto& e : s.workload) e.read.reset();
  }
  s.validate();
  return s;
}

}  // namespace calmstore
