#ifndef CALMSTORE_REPLICATION_HPP_
#define CALMSTORE_REPLICATION_HPP_

#include <map>
#include <set>
#include <string>
#include <vector>

#include "calmstore/lattice.hpp"
#include "calmstore/polog.hpp"

namespace calmstore {

using ReplicaId = std::uint32_t;

// Pointwise-max lattice over per-origin contiguous sequence numbers.
struct VersionVector {
  std::map<ReplicaId, std::uint64_t> seqs;

  std::uint64_t get(ReplicaId r) const {
    auto it = seqs.find(r);
    return it == seqs.end() ? 0 : it->second;
  }
  void advance(ReplicaId r, std::uint64_t seq) {
    auto [it, inserted] = seqs.emplace(r, seq);
    if (!inserted && seq > it->second) it->second = seq;
  }
  bool covers(const OpId& id) const { return get(id.origin) >= id.seq; }
  bool dominates(const VersionVector& other) const;

  friend VersionVector merge(const VersionVector& a, const VersionVector& b);
  friend bool operator==(const VersionVector&, const VersionVector&) = default;

  json to_json() const;
  static VersionVector from_json(const json& j);
};

struct OpRecord {
  OpId id;
  std::string key;
  std::string op;
  json args;
  Value delta;
  std::set<OpId> preds;  // op-based mirror; empty in plain state mode

  json to_json(LatticeType delta_type) const;
  static OpRecord from_json(const json& j, LatticeType delta_type);
};

class MalformedPayloadError : public LatticeError {
 public:
  using LatticeError::LatticeError;
};

enum class GossipMode { Full, Delta };

// Per-node store state machine. Confined to one execution context; all
// cross-replica interaction goes through payload values.
class Replica {
 public:
  Replica() = default;
  Replica(ReplicaId id, std::map<std::string, LatticeType> schema,
          bool track_polog = false);

  ReplicaId id() const { return id_; }
  const Value& store() const { return store_; }
  const VersionVector& vv() const { return vv_; }
  const std::vector<OpRecord>& delta_buffer() const { return delta_buffer_; }
  const PoLog& polog() const { return polog_; }
  const Value& stats() const { return stats_; }
  const std::map<ReplicaId, VersionVector>& peer_acks() const {
    return peer_acks_;
  }
  LatticeType key_type(const std::string& key) const;
  const Value& key_state(const std::string& key) const;

  // Applies an op as a lattice delta: next per-origin seq, keywise merge,
  // record appended to the delta buffer.
  OpRecord apply_local_op(const std::string& key, const std::string& op,
                          const json& args);

  void bump_stat(const std::string& stat_key);

  // Snapshot of the full store plus vv.
  json full_gossip_payload() const;
  // Exactly the buffered records the peer has not yet acknowledged.
  json delta_gossip_payload(const VersionVector& peer_vv) const;
  json delta_gossip_payload_for(ReplicaId peer) const;

  // Keywise merge (full) or per-origin FIFO record application (delta).
  // Duplicates and reordering are harmless; gaps are buffered.
  void receive_gossip(const json& payload);

  // Drops records every peer has acknowledged.
  void prune_delta_buffer(const std::vector<VersionVector>& peer_ack_vvs);
  // Uses piggybacked acks; peers never heard from count as acking nothing.
  void prune_delta_buffer(std::uint32_t n_replicas);

 private:
  void apply_record(OpRecord rec);
  void drain_fifo();

  ReplicaId id_ = 0;
  std::map<std::string, LatticeType> schema_;
  Value store_;  // Map lattice over declared keys
  VersionVector vv_;
  std::vector<OpRecord> delta_buffer_;
  std::map<ReplicaId, std::map<std::uint64_t, OpRecord>> fifo_pending_;
  std::map<ReplicaId, VersionVector> peer_acks_;
  Value stats_;  // Map of GCounters, gossiped alongside the store
  bool track_polog_ = false;
  PoLog polog_;
};

}  // namespace calmstore

#endif  // CALMSTORE_REPLICATION_HPP_
