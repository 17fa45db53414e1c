#include "calmstore/polog.hpp"

#include <algorithm>

namespace calmstore {

PoLog PoLog::record(std::string op, json args, const std::set<OpId>& frontier,
                    OpId new_id) const {
  if (contains(new_id)) {
    throw DuplicateIdError("op id already recorded: origin " +
                           std::to_string(new_id.origin) + " seq " +
                           std::to_string(new_id.seq));
  }
  for (const OpId& pred : frontier) {
    if (!contains(pred)) {
      throw UnknownPredecessorError("frontier references unknown op: origin " +
                                    std::to_string(pred.origin) + " seq " +
                                    std::to_string(pred.seq));
    }
  }
  PoLog out = *this;
  out.nodes_.emplace(new_id, Node{std::move(op), std::move(args)});
  for (const OpId& pred : frontier) out.edges_.emplace(pred, new_id);
  return out;
}

std::set<OpId> PoLog::causal_frontier() const {
  std::set<OpId> out;
  for (const auto& [id, node] : nodes_) out.insert(id);
  for (const auto& [from, to] : edges_) out.erase(from);
  return out;
}

PoLog merge(const PoLog& a, const PoLog& b) {
  PoLog out = a;
  for (const auto& [id, node] : b.nodes_) out.nodes_.emplace(id, node);
  out.edges_.insert(b.edges_.begin(), b.edges_.end());
  return out;
}

std::vector<OpId> PoLog::topo_order() const {
  std::map<OpId, std::size_t> indegree;
  for (const auto& [id, node] : nodes_) indegree[id] = 0;
  for (const auto& [from, to] : edges_) {
    if (auto it = indegree.find(to); it != indegree.end()) ++it->second;
  }
  std::set<OpId> ready;
  for (const auto& [id, deg] : indegree) {
    if (deg == 0) ready.insert(id);
  }
  std::vector<OpId> order;
  order.reserve(nodes_.size());
  while (!ready.empty()) {
    OpId next = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(next);
    for (const auto& [from, to] : edges_) {
      if (from != next) continue;
      auto it = indegree.find(to);
      if (it != indegree.end() && --it->second == 0) ready.insert(to);
    }
  }
  if (order.size() != nodes_.size()) {
    throw CycleError("cycle detected in op log");
  }
  return order;
}

json PoLog::to_json() const {
  json nodes = json::array();
  for (const auto& [id, node] : nodes_) {
    nodes.push_back(json{{"origin", id.origin},
                         {"seq", id.seq},
                         {"op", node.op},
                         {"args", node.args}});
  }
  json edges = json::array();
  for (const auto& [from, to] : edges_) {
    edges.push_back(json{{"from", {from.origin, from.seq}},
                         {"to", {to.origin, to.seq}}});
  }
  return json{{"edges", edges}, {"nodes", nodes}};
}

Interpreter standard_interpreter(LatticeType target) {
  return Interpreter{
      target,
      [](const std::string& op, const json& args, const Value& state) {
        return op_delta(op, args, &state);
      }};
}

Value replay(const PoLog& log, const Interpreter& interp) {
  Value state = bottom(interp.target);
  for (const OpId& id : log.topo_order()) {
    const PoLog::Node& node = log.nodes().at(id);
    state = merge(state, interp.delta(node.op, node.args, state));
  }
  return state;
}

PoLog CausalBuffer::deliver(const PoLog& log, LogRecord rec) {
  PoLog out = log;
  pending_.push_back(std::move(rec));
  bool progressed = true;
  while (progressed) {
    progressed = false;
    for (auto it = pending_.begin(); it != pending_.end();) {
      if (out.contains(it->id)) {
        it = pending_.erase(it);  // duplicate
        progressed = true;
        continue;
      }
      bool deliverable = std::all_of(
          it->preds.begin(), it->preds.end(),
          [&](const OpId& pred) { return out.contains(pred); });
      if (deliverable) {
        out = out.record(it->op, it->args, it->preds, it->id);
        it = pending_.erase(it);
        progressed = true;
      } else {
        ++it;
      }
    }
  }
  return out;
}

}  // namespace calmstore
