#ifndef CALMSTORE_COORDINATION_HPP_
#define CALMSTORE_COORDINATION_HPP_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "calmstore/lattice.hpp"

namespace calmstore {

// Read/write spectrum: write-one/read-all ... write-all/read-one, with
// quorums in between. A pair is safe when the quorums overlap.

struct WriteStrategy {
  enum class Kind { One, Quorum, All };
  Kind kind = Kind::One;
  std::uint32_t k = 1;  // Quorum only

  static WriteStrategy one() { return {Kind::One, 1}; }
  static WriteStrategy quorum(std::uint32_t k) { return {Kind::Quorum, k}; }
  static WriteStrategy all() { return {Kind::All, 0}; }

  friend bool operator==(const WriteStrategy&, const WriteStrategy&) = default;
};

struct ReadStrategy {
  enum class Kind { One, Quorum, All };
  Kind kind = Kind::All;
  std::uint32_t k = 1;

  static ReadStrategy one() { return {Kind::One, 1}; }
  static ReadStrategy quorum(std::uint32_t k) { return {Kind::Quorum, k}; }
  static ReadStrategy all() { return {Kind::All, 0}; }

  friend bool operator==(const ReadStrategy&, const ReadStrategy&) = default;
};

// Scenario-file spelling: write_one, write_quorum:k, write_all, read_one,
// read_quorum:k, read_all.
WriteStrategy parse_write_strategy(std::string_view name);
ReadStrategy parse_read_strategy(std::string_view name);
std::string strategy_name(WriteStrategy ws);
std::string strategy_name(ReadStrategy rs);

std::uint32_t write_size(WriteStrategy ws, std::uint32_t n_replicas);
std::uint32_t read_size(ReadStrategy rs, std::uint32_t n_replicas);

// true iff writeSize + readSize > n.
bool overlap_safe(WriteStrategy ws, ReadStrategy rs, std::uint32_t n_replicas);

class UnavailableError : public LatticeError {
 public:
  using LatticeError::LatticeError;
};

// The replica set a coordination round contacts: the initiating replica
// first, then the remaining ids in order, up to `size`.
std::vector<std::uint32_t> contact_set(std::uint32_t self, std::uint32_t size,
                                       std::uint32_t n_replicas);

// Snapshot form of a coordinated read: merges the contacted replicas' key
// states and evaluates the query on the join. The simulator realizes the
// same semantics via request/response messages.
json coordinated_read(const std::string& key,
                      const std::function<json(const Value&)>& query,
                      ReadStrategy rs, std::span<const Value> stores,
                      std::uint32_t self);

// Monotone workload metrics: both counters are GCounters keyed under
// "ops:<key>" and "nmreads:<key>" in a Map lattice, merged via gossip like
// any other CRDT state.
std::string ops_stat_key(const std::string& key);
std::string nmreads_stat_key(const std::string& key);

// Shifts into synchronize-on-update when the observed ratio of non-monotone
// reads to ops exceeds theta. The returned pair always overlaps.
std::pair<WriteStrategy, ReadStrategy> adaptive_strategy(
    const Value& stats, const std::string& key, std::uint32_t n_replicas,
    double theta);

}  // namespace calmstore

#endif  // CALMSTORE_COORDINATION_HPP_
