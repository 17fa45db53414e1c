#include "calmstore/replication.hpp"

#include <algorithm>

#include "calmstore/coordination.hpp"

namespace calmstore {

bool VersionVector::dominates(const VersionVector& other) const {
  return std::all_of(other.seqs.begin(), other.seqs.end(),
                     [&](const auto& kv) { return get(kv.first) >= kv.second; });
}

VersionVector merge(const VersionVector& a, const VersionVector& b) {
  VersionVector out = a;
  for (const auto& [rep, seq] : b.seqs) out.advance(rep, seq);
  return out;
}

json VersionVector::to_json() const {
  json obj = json::object();
  for (const auto& [rep, seq] : seqs) obj[std::to_string(rep)] = seq;
  return obj;
}

VersionVector VersionVector::from_json(const json& j) {
  VersionVector out;
  for (const auto& [key, val] : j.items()) {
    out.seqs[static_cast<ReplicaId>(std::stoul(key))] =
        val.get<std::uint64_t>();
  }
  return out;
}

json OpRecord::to_json(LatticeType delta_type) const {
  json preds_json = json::array();
  for (const OpId& p : preds) preds_json.push_back({p.origin, p.seq});
  return json{{"origin", id.origin}, {"seq", id.seq},
              {"key", key},          {"op", op},
              {"args", args},        {"delta", delta.to_json()},
              {"type", type_name(delta_type)}, {"preds", preds_json}};
}

OpRecord OpRecord::from_json(const json& j, LatticeType delta_type) {
  OpRecord rec;
  rec.id = {j.at("origin").get<ReplicaId>(), j.at("seq").get<std::uint64_t>()};
  rec.key = j.at("key").get<std::string>();
  rec.op = j.at("op").get<std::string>();
  rec.args = j.at("args");
  rec.delta = Value::from_json(delta_type, j.at("delta"));
  for (const auto& p : j.at("preds")) {
    rec.preds.insert(OpId{p.at(0).get<ReplicaId>(),
                          p.at(1).get<std::uint64_t>()});
  }
  return rec;
}

Replica::Replica(ReplicaId id, std::map<std::string, LatticeType> schema,
                 bool track_polog)
    : id_(id), schema_(std::move(schema)), track_polog_(track_polog) {
  Value::Entries entries;
  for (const auto& [key, type] : schema_) entries.emplace(key, bottom(type));
  store_ = Value::map(std::move(entries));
  stats_ = Value::map({});
}

LatticeType Replica::key_type(const std::string& key) const {
  auto it = schema_.find(key);
  if (it == schema_.end()) throw LatticeError("unknown key: " + key);
  return it->second;
}

const Value& Replica::key_state(const std::string& key) const {
  const auto& entries = store_.as_map();
  auto it = entries.find(key);
  if (it == entries.end()) throw LatticeError("unknown key: " + key);
  return it->second;
}

OpRecord Replica::apply_local_op(const std::string& key, const std::string& op,
                                 const json& args) {
  LatticeType type = key_type(key);
  if (op_target_type(op) != type) {
    throw TypeMismatchError("op " + op + " does not apply to " +
                            type_name(type) + " key " + key);
  }
  OpRecord rec;
  rec.id = {id_, vv_.get(id_) + 1};
  rec.key = key;
  rec.op = op;
  rec.args = args;
  rec.delta = op_delta(op, args, &key_state(key));
  if (track_polog_) {
    rec.preds = polog_.causal_frontier();
    polog_ = polog_.record(op, args, rec.preds, rec.id);
  }
  store_ = merge(store_, Value::map({{key, rec.delta}}));
  vv_.advance(id_, rec.id.seq);
  delta_buffer_.push_back(rec);
  bump_stat(ops_stat_key(key));
  return rec;
}

void Replica::bump_stat(const std::string& stat_key) {
  std::uint64_t next = 1;
  const auto& entries = stats_.as_map();
  if (auto it = entries.find(stat_key); it != entries.end()) {
    const auto& counts = it->second.as_counts();
    if (auto c = counts.find(id_); c != counts.end()) next = c->second + 1;
  }
  stats_ = merge(stats_, Value::map({{stat_key,
                                      Value::gcounter({{id_, next}})}}));
}

json Replica::full_gossip_payload() const {
  return json{{"from", id_},
              {"mode", "full"},
              {"vv", vv_.to_json()},
              {"store", store_.to_json()},
              {"stats", stats_.to_json()}};
}

json Replica::delta_gossip_payload(const VersionVector& peer_vv) const {
  json records = json::array();
  for (const OpRecord& rec : delta_buffer_) {
    if (rec.id.seq > peer_vv.get(rec.id.origin)) {
      records.push_back(rec.to_json(key_type(rec.key)));
    }
  }
  return json{{"from", id_},
              {"mode", "delta"},
              {"vv", vv_.to_json()},
              {"records", records},
              {"stats", stats_.to_json()}};
}

json Replica::delta_gossip_payload_for(ReplicaId peer) const {
  auto it = peer_acks_.find(peer);
  return delta_gossip_payload(it == peer_acks_.end() ? VersionVector{}
                                                     : it->second);
}

void Replica::apply_record(OpRecord rec) {
  store_ = merge(store_, Value::map({{rec.key, rec.delta}}));
  vv_.advance(rec.id.origin, rec.id.seq);
  if (track_polog_) {
    // Cross-replica records go through causal-delivery buffering.
    CausalBuffer scratch;
    polog_ = scratch.deliver(polog_, LogRecord{rec.id, rec.op, rec.args,
                                               rec.preds});
  }
  delta_buffer_.push_back(std::move(rec));
}

void Replica::drain_fifo() {
  bool progressed = true;
  while (progressed) {
    progressed = false;
    for (auto& [origin, pending] : fifo_pending_) {
      auto it = pending.begin();
      while (it != pending.end() && it->first <= vv_.get(origin) + 1) {
        if (it->first == vv_.get(origin) + 1) {
          apply_record(std::move(it->second));
          progressed = true;
        }
        it = pending.erase(it);
      }
    }
  }
}

void Replica::receive_gossip(const json& payload) {
  if (!payload.is_object() || !payload.contains("mode") ||
      !payload.contains("vv") || !payload.contains("from")) {
    throw MalformedPayloadError("gossip payload missing required fields");
  }
  ReplicaId from = payload.at("from").get<ReplicaId>();
  VersionVector sender_vv = VersionVector::from_json(payload.at("vv"));
  if (payload.contains("stats")) {
    stats_ = merge(stats_,
                   Value::from_json(LatticeType::Map, payload.at("stats")));
  }
  const std::string mode = payload.at("mode").get<std::string>();
  if (mode == "full") {
    Value incoming = Value::from_json(LatticeType::Map, payload.at("store"));
    store_ = merge(store_, incoming);
    vv_ = merge(vv_, sender_vv);
  } else if (mode == "delta") {
    for (const auto& rec_json : payload.at("records")) {
      OpRecord rec = OpRecord::from_json(
          rec_json, key_type(rec_json.at("key").get<std::string>()));
      if (vv_.covers(rec.id)) continue;  // duplicate
      if (rec.id.seq == vv_.get(rec.id.origin) + 1) {
        apply_record(std::move(rec));
        drain_fifo();
      } else {
        fifo_pending_[rec.id.origin].emplace(rec.id.seq, std::move(rec));
      }
    }
  } else {
    throw MalformedPayloadError("unknown gossip mode: " + mode);
  }
  if (from != id_) {
    auto [it, inserted] = peer_acks_.emplace(from, sender_vv);
    if (!inserted) it->second = merge(it->second, sender_vv);
  }
}

void Replica::prune_delta_buffer(
    const std::vector<VersionVector>& peer_ack_vvs) {
  std::erase_if(delta_buffer_, [&](const OpRecord& rec) {
    return std::all_of(peer_ack_vvs.begin(), peer_ack_vvs.end(),
                       [&](const VersionVector& ack) {
                         return ack.covers(rec.id);
                       });
  });
}

void Replica::prune_delta_buffer(std::uint32_t n_replicas) {
  std::vector<VersionVector> acks;
  for (ReplicaId peer = 0; peer < n_replicas; ++peer) {
    if (peer == id_) continue;
    auto it = peer_acks_.find(peer);
    acks.push_back(it == peer_acks_.end() ? VersionVector{} : it->second);
  }
  if (acks.empty()) return;
  prune_delta_buffer(acks);
}

}  // namespace calmstore
