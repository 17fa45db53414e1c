#ifndef CALMSTORE_SCENARIO_HPP_
#define CALMSTORE_SCENARIO_HPP_

#include <optional>
#include <string>
#include <vector>

#include "calmstore/coordination.hpp"
#include "calmstore/lattice.hpp"
#include "calmstore/replication.hpp"

namespace calmstore {

struct SimConfig {
  std::uint64_t seed = 0;
  std::uint32_t n_replicas = 3;
  std::uint64_t latency_min = 1;
  std::uint64_t latency_max = 3;
  double p_drop = 0.0;
  double p_dup = 0.0;
  std::uint64_t gossip_interval = 10;
  GossipMode gossip_mode = GossipMode::Delta;
  std::uint64_t max_ticks = 100000;
  bool prune = true;
  double theta = 0.5;
  std::uint64_t coord_timeout = 50;
  // Staleness horizon for the anomaly checker; unset means any
  // causally-consistent past explains a stale read.
  std::optional<std::uint64_t> staleness_horizon;

  json to_json() const;
  static SimConfig from_json(const json& j);
};

struct WorkloadEvent {
  enum class Kind { Op, Query };
  std::uint64_t time = 0;
  Kind kind = Kind::Op;
  std::uint32_t replica = 0;
  std::string key;
  // ops
  std::string op;
  json args;
  // queries
  std::string query;
  std::string mode;  // local_threshold | lower_bound | coordinated
  // per-event strategy overrides
  std::optional<std::string> read;
  std::optional<std::string> write;
};

class ScenarioError : public LatticeError {
 public:
  using LatticeError::LatticeError;
};

struct Scenario {
  SimConfig config;
  std::map<std::string, LatticeType> keys;
  std::string default_write = "write_one";
  std::string default_read = "read_all";
  std::vector<WorkloadEvent> workload;

  static Scenario from_json(const json& j);
  static Scenario load(const std::string& path);

  // Rejects unknown replicas/keys/queries/ops before tick 0.
  void validate() const;
};

// Command-line overrides applied on top of a scenario file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<GossipMode> gossip_mode;
  std::optional<std::string> read;
  std::optional<std::string> write;
  std::optional<bool> prune;
};

Scenario apply_overrides(Scenario s, const Overrides& o);

}  // namespace calmstore

#endif  // CALMSTORE_SCENARIO_HPP_
