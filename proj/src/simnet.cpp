#include "calmstore/simnet.hpp"

#include <optional>
#include <queue>
#include <random>

#include "calmstore/query.hpp"

namespace calmstore {

namespace {

struct Event {
  std::uint64_t time = 0;
  std::uint64_t seq = 0;  // insertion order; total tie-break
  enum class Kind { Workload, GossipTick, Deliver, Timeout } kind;
  std::size_t workload_idx = 0;  // Workload
  std::uint32_t replica = 0;     // GossipTick
  std::uint32_t to = 0;          // Deliver
  json payload;                  // Deliver
  std::uint64_t round = 0;       // Timeout
};

struct EventAfter {
  bool operator()(const Event& a, const Event& b) const {
    return std::tie(a.time, a.seq) > std::tie(b.time, b.seq);
  }
};

struct ReadRound {
  std::uint64_t qid = 0;
  std::uint32_t replica = 0;
  std::string query;
  std::string key;
  std::string mode;
  std::string read_name;
  std::uint32_t needed = 0;  // responses still outstanding
  Value acc;
  bool done = false;
};

struct WriteRound {
  std::uint32_t origin = 0;
  OpId op_id;
  std::uint32_t needed = 0;  // acks still outstanding
  bool done = false;
};

class Simulator {
 public:
  explicit Simulator(const Scenario& scenario)
      : sc_(scenario), cfg_(scenario.config), rng_(cfg_.seed) {
    for (std::uint32_t r = 0; r < cfg_.n_replicas; ++r) {
      replicas_.emplace_back(r, sc_.keys);
    }
  }

  Trace run() {
    json keys = json::object();
    for (const auto& [name, type] : sc_.keys) keys[name] = type_name(type);
    trace_.append(json{{"rec", "header"},
                       {"config", cfg_.to_json()},
                       {"keys", keys},
                       {"write", sc_.default_write},
                       {"read", sc_.default_read}});
    schedule_workload();
    schedule_gossip_ticks();
    while (!queue_.empty()) {
      Event ev = queue_.top();
      queue_.pop();
      now_ = ev.time;
      if (now_ > cfg_.max_ticks) {
        throw SimError("tick budget exhausted before quiescence");
      }
      dispatch(ev);
    }
    quiesce_and_flush();
    return std::move(trace_);
  }

 private:
  void push(Event ev) {
    ev.seq = next_seq_++;
    queue_.push(std::move(ev));
  }

  void schedule_workload() {
    std::uint64_t last = 0;
    for (std::size_t i = 0; i < sc_.workload.size(); ++i) {
      Event ev;
      ev.time = sc_.workload[i].time;
      ev.kind = Event::Kind::Workload;
      ev.workload_idx = i;
      push(std::move(ev));
      last = std::max(last, sc_.workload[i].time);
    }
    workload_end_ = last + cfg_.coord_timeout + 2 * cfg_.gossip_interval;
  }

  void schedule_gossip_ticks() {
    if (cfg_.n_replicas < 2) return;
    for (std::uint64_t t = cfg_.gossip_interval; t <= workload_end_;
         t += cfg_.gossip_interval) {
      for (std::uint32_t r = 0; r < cfg_.n_replicas; ++r) {
        Event ev;
        ev.time = t;
        ev.kind = Event::Kind::GossipTick;
        ev.replica = r;
        push(std::move(ev));
      }
    }
  }

  void dispatch(const Event& ev) {
    switch (ev.kind) {
      case Event::Kind::Workload: {
        const WorkloadEvent& we = sc_.workload[ev.workload_idx];
        if (we.kind == WorkloadEvent::Kind::Op) {
          inject_op(we);
        } else {
          inject_query(we);
        }
        break;
      }
      case Event::Kind::GossipTick:
        gossip_tick(ev.replica);
        break;
      case Event::Kind::Deliver:
        deliver(ev.to, ev.payload);
        break;
      case Event::Kind::Timeout:
        fire_timeout(ev.round);
        break;
    }
  }

  // ------------------------------------------------------------ messaging

  double chance() { return std::uniform_real_distribution<double>(0, 1)(rng_); }

  std::uint64_t latency() {
    std::uint64_t span = cfg_.latency_max - cfg_.latency_min;
    return cfg_.latency_min + (span == 0 ? 0 : rng_() % (span + 1));
  }

  std::uint32_t random_peer(std::uint32_t self) {
    std::uint32_t r =
        static_cast<std::uint32_t>(rng_() % (cfg_.n_replicas - 1));
    return r >= self ? r + 1 : r;
  }

  void send(std::uint32_t from, std::uint32_t to, json payload) {
    const std::string kind = payload.at("kind").get<std::string>();
    std::size_t bytes = payload.dump().size();
    trace_.append(json{{"rec", "msg_sent"},
                       {"t", now_},
                       {"from", from},
                       {"to", to},
                       {"kind", kind},
                       {"bytes", bytes}});
    if (chance() < cfg_.p_drop) {
      trace_.append(json{{"rec", "msg_dropped"},
                         {"t", now_},
                         {"from", from},
                         {"to", to},
                         {"kind", kind},
                         {"bytes", bytes}});
      return;
    }
    schedule_delivery(to, payload, now_ + latency());
    if (chance() < cfg_.p_dup) {
      schedule_delivery(to, std::move(payload), now_ + latency());
    }
  }

  void schedule_delivery(std::uint32_t to, json payload, std::uint64_t at) {
    Event ev;
    ev.time = at;
    ev.kind = Event::Kind::Deliver;
    ev.to = to;
    ev.payload = std::move(payload);
    push(std::move(ev));
  }

  // Applies a gossip-shaped payload and emits op_applied for every op the
  // receiver's version vector newly covers.
  void absorb(std::uint32_t to, const json& gossip) {
    VersionVector before = replicas_[to].vv();
    replicas_[to].receive_gossip(gossip);
    const VersionVector& after = replicas_[to].vv();
    for (const auto& [origin, seq] : after.seqs) {
      for (std::uint64_t s = before.get(origin) + 1; s <= seq; ++s) {
        trace_.append(json{{"rec", "op_applied"},
                           {"t", now_},
                           {"replica", to},
                           {"origin", origin},
                           {"seq", s}});
      }
    }
    if (cfg_.prune && cfg_.gossip_mode == GossipMode::Delta) {
      replicas_[to].prune_delta_buffer(cfg_.n_replicas);
    }
  }

  void deliver(std::uint32_t to, const json& payload) {
    const std::string kind = payload.at("kind").get<std::string>();
    trace_.append(json{{"rec", "msg_delivered"},
                       {"t", now_},
                       {"to", to},
                       {"kind", kind}});
    if (kind == "gossip") {
      absorb(to, payload.at("body"));
    } else if (kind == "sync_push") {
      absorb(to, payload.at("body"));
      json ack{{"kind", "write_ack"},
               {"round", payload.at("round")},
               {"from", to}};
      send(to, payload.at("body").at("from").get<std::uint32_t>(),
           std::move(ack));
    } else if (kind == "write_ack") {
      on_write_ack(payload.at("round").get<std::uint64_t>());
    } else if (kind == "read_req") {
      const std::string key = payload.at("key").get<std::string>();
      json resp{{"kind", "read_resp"},
                {"round", payload.at("round")},
                {"from", to},
                {"state", replicas_[to].key_state(key).to_json()}};
      send(to, payload.at("from").get<std::uint32_t>(), std::move(resp));
    } else if (kind == "read_resp") {
      on_read_resp(payload);
    } else {
      throw SimError("unknown message kind: " + kind);
    }
  }

  // ------------------------------------------------------------- gossip

  void gossip_tick(std::uint32_t replica) {
    std::uint32_t peer = random_peer(replica);
    json body = cfg_.gossip_mode == GossipMode::Full
                    ? replicas_[replica].full_gossip_payload()
                    : replicas_[replica].delta_gossip_payload_for(peer);
    send(replica, peer, json{{"kind", "gossip"}, {"body", std::move(body)}});
  }

  // ------------------------------------------------------------ writes

  std::pair<WriteStrategy, ReadStrategy> adaptive_pair(std::uint32_t replica,
                                                       const std::string& key) {
    return adaptive_strategy(replicas_[replica].stats(), key, cfg_.n_replicas,
                             cfg_.theta);
  }

  WriteStrategy resolve_write(const WorkloadEvent& we) {
    const std::string name = we.write.value_or(sc_.default_write);
    if (name == "adaptive") return adaptive_pair(we.replica, we.key).first;
    return parse_write_strategy(name);
  }

  ReadStrategy resolve_read(const WorkloadEvent& we) {
    const std::string name = we.read.value_or(sc_.default_read);
    if (name == "adaptive") return adaptive_pair(we.replica, we.key).second;
    return parse_read_strategy(name);
  }

  void inject_op(const WorkloadEvent& we) {
    WriteStrategy ws = resolve_write(we);
    Replica& rep = replicas_[we.replica];
    OpRecord rec = rep.apply_local_op(we.key, we.op, we.args);
    trace_.append(json{{"rec", "op_injected"},
                       {"t", now_},
                       {"replica", we.replica},
                       {"origin", rec.id.origin},
                       {"seq", rec.id.seq},
                       {"key", we.key},
                       {"op", we.op},
                       {"args", we.args},
                       {"delta", rec.delta.to_json()},
                       {"type", type_name(rep.key_type(we.key))},
                       {"vv", rep.vv().to_json()},
                       {"write", strategy_name(ws)}});
    std::uint32_t size = write_size(ws, cfg_.n_replicas);
    if (size <= 1) return;
    std::uint64_t round = next_round_++;
    write_rounds_[round] = WriteRound{we.replica, rec.id, size - 1, false};
    for (std::uint32_t peer : contact_set(we.replica, size, cfg_.n_replicas)) {
      if (peer == we.replica) continue;
      // The push carries the origin's whole unacknowledged suffix so the
      // peer never stalls on a per-origin gap.
      json body = rep.delta_gossip_payload_for(peer);
      send(we.replica, peer,
           json{{"kind", "sync_push"}, {"round", round},
                {"body", std::move(body)}});
    }
    schedule_timeout(round);
  }

  void on_write_ack(std::uint64_t round) {
    auto it = write_rounds_.find(round);
    if (it == write_rounds_.end() || it->second.done) return;
    WriteRound& wr = it->second;
    if (--wr.needed == 0) {
      wr.done = true;
      trace_.append(json{{"rec", "write_acked"},
                         {"t", now_},
                         {"origin", wr.op_id.origin},
                         {"seq", wr.op_id.seq}});
    }
  }

  // ------------------------------------------------------------- queries

  void answer(std::uint64_t qid, const ReadRound& rr, const std::string& outcome,
              const json& value, bool stale_tolerant) {
    bool monotone = find_query(rr.query)->monotone;
    json rec{{"rec", "query_answered"},
             {"t", now_},
             {"qid", qid},
             {"replica", rr.replica},
             {"query", rr.query},
             {"key", rr.key},
             {"mode", rr.mode},
             {"read", rr.read_name},
             {"monotone", monotone},
             {"outcome", outcome},
             {"stale_tolerant", stale_tolerant}};
    if (outcome == "value") rec["value"] = value;
    trace_.append(std::move(rec));
  }

  void inject_query(const WorkloadEvent& we) {
    BuiltinQuery q = *find_query(we.query);
    std::uint64_t qid = next_qid_++;
    ReadRound rr;
    rr.qid = qid;
    rr.replica = we.replica;
    rr.query = we.query;
    rr.key = we.key;
    rr.mode = we.mode;

    Replica& rep = replicas_[we.replica];
    if (we.mode == "local_threshold") {
      rr.read_name = "local";
      issue(qid, rr);
      QueryOutcome out = q.eval_threshold(rep.key_state(we.key));
      answer(qid, rr, out.is_ready() ? "ready" : "unknown", {}, false);
      return;
    }
    if (we.mode == "lower_bound") {
      rr.read_name = "local";
      if (!q.monotone) rep.bump_stat(nmreads_stat_key(we.key));
      issue(qid, rr);
      answer(qid, rr, "value", q.eval(rep.key_state(we.key)), true);
      return;
    }
    // coordinated
    ReadStrategy rs = resolve_read(we);
    rr.read_name = strategy_name(rs);
    if (!q.monotone) rep.bump_stat(nmreads_stat_key(we.key));
    issue(qid, rr);
    std::uint32_t size = read_size(rs, cfg_.n_replicas);
    if (size <= 1) {
      answer(qid, rr, "value", q.eval(rep.key_state(we.key)), false);
      return;
    }
    std::uint64_t round = next_round_++;
    rr.needed = size - 1;
    rr.acc = rep.key_state(we.key);
    for (std::uint32_t peer : contact_set(we.replica, size, cfg_.n_replicas)) {
      if (peer == we.replica) continue;
      send(we.replica, peer,
           json{{"kind", "read_req"}, {"round", round}, {"key", we.key},
                {"from", we.replica}});
    }
    read_rounds_[round] = std::move(rr);
    schedule_timeout(round);
  }

  void issue(std::uint64_t qid, const ReadRound& rr) {
    trace_.append(json{{"rec", "query_issued"},
                       {"t", now_},
                       {"qid", qid},
                       {"replica", rr.replica},
                       {"query", rr.query},
                       {"key", rr.key},
                       {"mode", rr.mode},
                       {"read", rr.read_name}});
  }

  void on_read_resp(const json& payload) {
    auto it = read_rounds_.find(payload.at("round").get<std::uint64_t>());
    if (it == read_rounds_.end() || it->second.done) return;
    ReadRound& rr = it->second;
    LatticeType type = replicas_[rr.replica].key_type(rr.key);
    rr.acc = merge(rr.acc, Value::from_json(type, payload.at("state")));
    if (--rr.needed > 0) return;
    rr.done = true;
    BuiltinQuery q = *find_query(rr.query);
    if (q.monotone) {
      answer(rr.qid, rr,
             q.eval_threshold(rr.acc).is_ready() ? "ready" : "unknown", {},
             false);
    } else {
      answer(rr.qid, rr, "value", q.eval(rr.acc), false);
    }
  }

  void schedule_timeout(std::uint64_t round) {
    Event ev;
    ev.time = now_ + cfg_.coord_timeout;
    ev.kind = Event::Kind::Timeout;
    ev.round = round;
    push(std::move(ev));
  }

  void fire_timeout(std::uint64_t round) {
    if (auto it = read_rounds_.find(round);
        it != read_rounds_.end() && !it->second.done) {
      it->second.done = true;
      answer(it->second.qid, it->second, "unavailable", {}, false);
      return;
    }
    if (auto it = write_rounds_.find(round);
        it != write_rounds_.end() && !it->second.done) {
      it->second.done = true;
      trace_.append(json{{"rec", "write_unavailable"},
                         {"t", now_},
                         {"origin", it->second.op_id.origin},
                         {"seq", it->second.op_id.seq}});
    }
  }

  // ---------------------------------------------------------- quiescence

  bool converged() const {
    for (std::uint32_t r = 1; r < cfg_.n_replicas; ++r) {
      if (!(replicas_[r].store() == replicas_[0].store()) ||
          !(replicas_[r].vv() == replicas_[0].vv())) {
        return false;
      }
    }
    return true;
  }

  // Fault-free anti-entropy rounds until every replica is identical.
  void quiesce_and_flush() {
    std::uint64_t rounds = 0;
    while (!converged()) {
      ++now_;
      if (now_ > cfg_.max_ticks || rounds > cfg_.n_replicas + 4) {
        throw SimError("quiesce_and_flush failed to converge");
      }
      for (std::uint32_t from = 0; from < cfg_.n_replicas; ++from) {
        for (std::uint32_t to = 0; to < cfg_.n_replicas; ++to) {
          if (to == from) continue;
          json body = cfg_.gossip_mode == GossipMode::Full
                          ? replicas_[from].full_gossip_payload()
                          : replicas_[from].delta_gossip_payload_for(to);
          std::size_t bytes = body.dump().size();
          trace_.append(json{{"rec", "msg_sent"},
                             {"t", now_},
                             {"from", from},
                             {"to", to},
                             {"kind", "flush"},
                             {"bytes", bytes}});
          trace_.append(json{{"rec", "msg_delivered"},
                             {"t", now_},
                             {"to", to},
                             {"kind", "flush"}});
          absorb(to, body);
        }
      }
      ++rounds;
    }
    ++now_;
    for (std::uint32_t r = 0; r < cfg_.n_replicas; ++r) {
      trace_.append(json{{"rec", "final_state"},
                         {"t", now_},
                         {"replica", r},
                         {"vv", replicas_[r].vv().to_json()},
                         {"store", replicas_[r].store().to_json()}});
    }
  }

  const Scenario& sc_;
  const SimConfig& cfg_;
  std::mt19937_64 rng_;
  std::vector<Replica> replicas_;
  Trace trace_;
  std::priority_queue<Event, std::vector<Event>, EventAfter> queue_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t next_round_ = 0;
  std::uint64_t next_qid_ = 0;
  std::uint64_t now_ = 0;
  std::uint64_t workload_end_ = 0;
  std::map<std::uint64_t, ReadRound> read_rounds_;
  std::map<std::uint64_t, WriteRound> write_rounds_;
};

}  // namespace

Trace run_scenario(const Scenario& scenario) {
  scenario.validate();
  return Simulator(scenario).run();
}

}  // namespace calmstore
