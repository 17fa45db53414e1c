#include "calmstore/checker.hpp"

#include <algorithm>
#include <functional>

namespace calmstore {

ParsedTrace ParsedTrace::parse(const Trace& trace) {
  ParsedTrace out;
  for (std::size_t i = 0; i < trace.records().size(); ++i) {
    const json& rec = trace.records()[i];
    const std::string kind = rec.at("rec").get<std::string>();
    if (kind == "header") {
      out.n_replicas = rec.at("config").at("n_replicas").get<std::uint32_t>();
      if (rec.at("config").contains("staleness_horizon")) {
        out.staleness_horizon =
            rec.at("config").at("staleness_horizon").get<std::uint64_t>();
      }
      for (const auto& [name, type] : rec.at("keys").items()) {
        out.keys.emplace(name, type_from_name(type.get<std::string>()));
      }
    } else if (kind == "op_injected") {
      InjectedOp op;
      op.time = rec.at("t").get<std::uint64_t>();
      op.record_index = i;
      op.id = {rec.at("origin").get<std::uint32_t>(),
               rec.at("seq").get<std::uint64_t>()};
      op.key = rec.at("key").get<std::string>();
      op.delta = Value::from_json(
          type_from_name(rec.at("type").get<std::string>()), rec.at("delta"));
      op.vv = VersionVector::from_json(rec.at("vv"));
      out.ops.push_back(std::move(op));
    } else if (kind == "query_answered") {
      AnsweredQuery q;
      q.time = rec.at("t").get<std::uint64_t>();
      q.record_index = i;
      q.qid = rec.at("qid").get<std::uint64_t>();
      q.replica = rec.at("replica").get<std::uint32_t>();
      q.query = rec.at("query").get<std::string>();
      q.key = rec.at("key").get<std::string>();
      q.mode = rec.at("mode").get<std::string>();
      q.read = rec.at("read").get<std::string>();
      q.monotone = rec.at("monotone").get<bool>();
      q.outcome = rec.at("outcome").get<std::string>();
      if (rec.contains("value")) q.value = rec.at("value");
      out.answers.push_back(std::move(q));
    } else if (kind == "final_state") {
      out.final_states.emplace(
          rec.at("replica").get<std::uint32_t>(),
          Value::from_json(LatticeType::Map, rec.at("store")));
    }
  }
  return out;
}

namespace {

Value fold_ops(const ParsedTrace& trace,
               const std::function<bool(const InjectedOp&)>& include) {
  Value::Entries entries;
  for (const auto& [name, type] : trace.keys) {
    entries.emplace(name, bottom(type));
  }
  Value store = Value::map(std::move(entries));
  for (const InjectedOp& op : trace.ops) {
    if (include(op)) store = merge(store, Value::map({{op.key, op.delta}}));
  }
  return store;
}

}  // namespace

ConvergenceVerdict check_convergence(const ParsedTrace& trace) {
  if (!trace.quiesced()) {
    throw UnquiescedTraceError("trace has no complete final-state section");
  }
  Value expected = fold_ops(trace, [](const InjectedOp&) { return true; });
  for (const auto& [replica, state] : trace.final_states) {
    if (!(state == expected)) {
      return {false,
              json{{"replica", replica},
                   {"expected", expected.to_json()},
                   {"actual", state.to_json()}}};
    }
  }
  return {true, json()};
}

std::vector<json> check_monotone_definitive(const ParsedTrace& trace) {
  if (!trace.quiesced()) {
    throw UnquiescedTraceError("trace has no complete final-state section");
  }
  const Value& final_store = trace.final_states.begin()->second;
  std::vector<json> violations;
  for (const AnsweredQuery& q : trace.answers) {
    if (!q.monotone || q.outcome != "ready") continue;
    BuiltinQuery builtin = *find_query(q.query);
    const Value& state = final_store.as_map().at(q.key);
    if (!builtin.eval(state).get<bool>()) {
      violations.push_back(json{{"qid", q.qid},
                                {"query", q.query},
                                {"replica", q.replica},
                                {"t", q.time}});
    }
  }
  return violations;
}

namespace {

// All causally closed per-origin prefix combinations.
class CutEnumerator {
 public:
  explicit CutEnumerator(const ParsedTrace& trace) {
    for (const InjectedOp& op : trace.ops) {
      per_origin_[op.id.origin].push_back(&op);
    }
    for (auto& [origin, ops] : per_origin_) {
      std::sort(ops.begin(), ops.end(),
                [](const InjectedOp* a, const InjectedOp* b) {
                  return a->id.seq < b->id.seq;
                });
      origins_.push_back(origin);
    }
  }

  // Calls fn with the per-origin prefix lengths of every admissible cut.
  // min_prefix holds lower bounds (session + horizon constraints).
  void for_each_cut(
      const std::map<std::uint32_t, std::size_t>& min_prefix,
      const std::function<void(const std::map<std::uint32_t, std::size_t>&)>&
          fn) const {
    std::map<std::uint32_t, std::size_t> prefix;
    recurse(0, min_prefix, prefix, fn);
  }

  const std::map<std::uint32_t, std::vector<const InjectedOp*>>& per_origin()
      const {
    return per_origin_;
  }

 private:
  bool causally_closed(
      const std::map<std::uint32_t, std::size_t>& prefix) const {
    for (const auto& [origin, ops] : per_origin_) {
      std::size_t len = prefix.at(origin);
      for (std::size_t i = 0; i < len; ++i) {
        for (const auto& [other, seq] : ops[i]->vv.seqs) {
          auto it = prefix.find(other);
          std::size_t have = it == prefix.end() ? 0 : it->second;
          if (have < seq) return false;
        }
      }
    }
    return true;
  }

  void recurse(
      std::size_t idx, const std::map<std::uint32_t, std::size_t>& min_prefix,
      std::map<std::uint32_t, std::size_t>& prefix,
      const std::function<void(const std::map<std::uint32_t, std::size_t>&)>&
          fn) const {
    if (idx == origins_.size()) {
      if (causally_closed(prefix)) fn(prefix);
      return;
    }
    std::uint32_t origin = origins_[idx];
    auto lo_it = min_prefix.find(origin);
    std::size_t lo = lo_it == min_prefix.end() ? 0 : lo_it->second;
    std::size_t hi = per_origin_.at(origin).size();
    for (std::size_t len = lo; len <= hi; ++len) {
      prefix[origin] = len;
      recurse(idx + 1, min_prefix, prefix, fn);
    }
    prefix.erase(origin);
  }

  std::map<std::uint32_t, std::vector<const InjectedOp*>> per_origin_;
  std::vector<std::uint32_t> origins_;
};

}  // namespace

int count_nonmonotone_anomalies(const ParsedTrace& trace, int op_bound) {
  std::vector<const AnsweredQuery*> eligible;
  for (const AnsweredQuery& q : trace.answers) {
    bool single_replica_read =
        q.read == "read_one" || (q.mode == "lower_bound" && !q.monotone);
    if (!q.monotone && q.outcome == "value" && single_replica_read) {
      eligible.push_back(&q);
    }
  }
  if (eligible.empty()) return 0;
  if (trace.ops.size() > static_cast<std::size_t>(op_bound)) {
    throw BoundExceededError(
        "anomaly analysis bounded to " + std::to_string(op_bound) +
        " ops; shrink the scenario");
  }
  CutEnumerator cuts(trace);
  int anomalies = 0;
  for (const AnsweredQuery* qp : eligible) {
    const AnsweredQuery& q = *qp;

    // (a) session prefix at the querying replica, (b) staleness horizon.
    std::map<std::uint32_t, std::size_t> min_prefix;
    for (const auto& [origin, ops] : cuts.per_origin()) {
      std::size_t lo = 0;
      for (std::size_t i = 0; i < ops.size(); ++i) {
        bool session = origin == q.replica && ops[i]->record_index < q.record_index;
        bool aged = trace.staleness_horizon &&
                    ops[i]->time + *trace.staleness_horizon < q.time;
        if (session || aged) lo = i + 1;
      }
      min_prefix[origin] = lo;
    }

    BuiltinQuery builtin = *find_query(q.query);
    LatticeType type = trace.keys.at(q.key);
    bool explained = false;
    cuts.for_each_cut(min_prefix, [&](const auto& prefix) {
      if (explained) return;
      Value state = bottom(type);
      for (const auto& [origin, ops] : cuts.per_origin()) {
        for (std::size_t i = 0; i < prefix.at(origin); ++i) {
          if (ops[i]->key == q.key) state = merge(state, ops[i]->delta);
        }
      }
      if (builtin.eval(state) == q.value) explained = true;
    });
    if (!explained) ++anomalies;
  }
  return anomalies;
}

json check_trace(const Trace& trace) {
  ParsedTrace parsed = ParsedTrace::parse(trace);
  ConvergenceVerdict convergence = check_convergence(parsed);
  std::vector<json> violations = check_monotone_definitive(parsed);
  int anomalies = count_nonmonotone_anomalies(parsed);
  json details = json::array();
  if (!convergence.pass) {
    details.push_back(json{{"kind", "divergence"}, {"info", convergence.diff}});
  }
  for (const json& v : violations) {
    details.push_back(json{{"kind", "monotone_violation"}, {"info", v}});
  }
  return json{{"convergence", convergence.pass},
              {"monotone_violations", violations.size()},
              {"anomalies", anomalies},
              {"details", details}};
}

namespace {

bool result_regressed(const json& earlier, const json& later) {
  if (earlier.is_boolean()) return earlier.get<bool>() && !later.get<bool>();
  if (earlier.is_number_integer()) {
    return earlier.get<std::int64_t>() > later.get<std::int64_t>();
  }
  std::set<std::string> after;
  for (const auto& e : later) after.insert(e.get<std::string>());
  for (const auto& e : earlier) {
    if (!after.count(e.get<std::string>())) return true;
  }
  return false;
}

}  // namespace

EnumerationReport enumerate_delivery_orders(
    const std::vector<std::pair<std::string, json>>& ops,
    const BuiltinQuery& query, std::size_t bound) {
  if (ops.size() > bound) {
    throw BoundExceededError("delivery-order enumeration bounded to " +
                             std::to_string(bound) + " ops");
  }
  std::vector<std::size_t> order(ops.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  EnumerationReport report;
  do {
    ++report.interleavings;
    Value state = bottom(query.source);
    std::vector<json> values;
    bool was_ready = false;
    for (std::size_t idx : order) {
      state = merge(state, op_delta(ops[idx].first, ops[idx].second, &state));
      values.push_back(query.eval(state));
    }
    if (query.monotone) {
      for (const json& v : values) {
        if (v.get<bool>()) was_ready = true;
      }
      // Definitive-true: a Ready anywhere must hold on the full join.
      if (was_ready && !values.back().get<bool>()) {
        report.monotone_definitive_ok = false;
      }
    } else {
      for (std::size_t i = 0; !report.regression_found && i < values.size();
           ++i) {
        for (std::size_t j = i + 1; j < values.size(); ++j) {
          if (result_regressed(values[i], values[j])) {
            report.regression_found = true;
            report.regression_example =
                json{{"earlier", values[i]}, {"later", values[j]}};
            break;
          }
        }
      }
    }
  } while (std::next_permutation(order.begin(), order.end()));
  return report;
}

}  // namespace calmstore
