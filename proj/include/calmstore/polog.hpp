#ifndef CALMSTORE_POLOG_HPP_
#define CALMSTORE_POLOG_HPP_

#include <compare>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "calmstore/lattice.hpp"

namespace calmstore {

struct OpId {
  std::uint32_t origin = 0;
  std::uint64_t seq = 0;  // contiguous per origin, starting at 1

  friend auto operator<=>(const OpId&, const OpId&) = default;
};

class DuplicateIdError : public LatticeError {
 public:
  using LatticeError::LatticeError;
};

class UnknownPredecessorError : public LatticeError {
 public:
  using LatticeError::LatticeError;
};

class CycleError : public LatticeError {
 public:
  using LatticeError::LatticeError;
};

// A log record as gossiped between replicas in op-based mode.
struct LogRecord {
  OpId id;
  std::string op;
  json args;
  std::set<OpId> preds;

  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

// Grow-only DAG of operation records under happens-before. Both components
// merge by set union, so the log is itself a CvRDT.
class PoLog {
 public:
  struct Node {
    std::string op;
    json args;
    friend bool operator==(const Node&, const Node&) = default;
  };
  using Edge = std::pair<OpId, OpId>;  // predecessor -> successor

  const std::map<OpId, Node>& nodes() const { return nodes_; }
  const std::set<Edge>& edges() const { return edges_; }

  bool contains(OpId id) const { return nodes_.count(id) != 0; }
  std::size_t size() const { return nodes_.size(); }

  // Appends a node with one edge from each frontier element.
  PoLog record(std::string op, json args, const std::set<OpId>& frontier,
               OpId new_id) const;

  // Nodes with no outgoing edge.
  std::set<OpId> causal_frontier() const;

  friend PoLog merge(const PoLog& a, const PoLog& b);
  friend bool operator==(const PoLog&, const PoLog&) = default;

  // Topological order, ties broken by OpId, so replay is a pure function of
  // log content.
  std::vector<OpId> topo_order() const;

  json to_json() const;

 private:
  std::map<OpId, Node> nodes_;
  std::set<Edge> edges_;
};

// Maps op records onto deltas of a target lattice type. The current folded
// state is passed so counter ops can compute exact deltas.
struct Interpreter {
  LatticeType target;
  std::function<Value(const std::string& op, const json& args,
                      const Value& state)>
      delta;
};

Interpreter standard_interpreter(LatticeType target);

Value replay(const PoLog& log, const Interpreter& interp);

// Buffers records whose predecessors have not yet been seen; a delivery may
// cascade releases.
class CausalBuffer {
 public:
  // Returns the log after delivering `rec` plus whatever the buffer can now
  // release. Duplicates are dropped.
  PoLog deliver(const PoLog& log, LogRecord rec);

  std::size_t pending() const { return pending_.size(); }

 private:
  std::vector<LogRecord> pending_;
};

}  // namespace calmstore

#endif  // CALMSTORE_POLOG_HPP_
