#ifndef CALMSTORE_CHECKER_HPP_
#define CALMSTORE_CHECKER_HPP_

#include <optional>
#include <vector>

#include "calmstore/query.hpp"
#include "calmstore/replication.hpp"
#include "calmstore/trace.hpp"

namespace calmstore {

class UnquiescedTraceError : public LatticeError {
 public:
  using LatticeError::LatticeError;
};

class BoundExceededError : public LatticeError {
 public:
  using LatticeError::LatticeError;
};

struct InjectedOp {
  std::uint64_t time = 0;
  std::size_t record_index = 0;  // position in the trace; session order
  OpId id;
  std::string key;
  Value delta;
  VersionVector vv;  // injecting replica's knowledge, op included
};

struct AnsweredQuery {
  std::uint64_t time = 0;
  std::size_t record_index = 0;
  std::uint64_t qid = 0;
  std::uint32_t replica = 0;
  std::string query;
  std::string key;
  std::string mode;
  std::string read;
  bool monotone = false;
  std::string outcome;  // ready | unknown | value | unavailable
  json value;
};

struct ParsedTrace {
  std::map<std::string, LatticeType> keys;
  std::uint32_t n_replicas = 0;
  std::optional<std::uint64_t> staleness_horizon;
  std::vector<InjectedOp> ops;
  std::vector<AnsweredQuery> answers;
  std::map<std::uint32_t, Value> final_states;

  static ParsedTrace parse(const Trace& trace);
  bool quiesced() const { return final_states.size() == n_replicas; }
};

struct ConvergenceVerdict {
  bool pass = false;
  json diff;  // failure details
};

// Final states must be identical and equal to the merge-fold of every
// injected delta.
ConvergenceVerdict check_convergence(const ParsedTrace& trace);

// Every Ready(true) of a monotone threshold query must hold on the final
// global join.
std::vector<json> check_monotone_definitive(const ParsedTrace& trace);

// A single-replica non-monotone answer is an anomaly iff no consistent cut
// that (a) contains the querying replica's session prefix, (b) contains
// every op injected before t - horizon, and (c) is causally closed,
// reproduces its value.
int count_nonmonotone_anomalies(const ParsedTrace& trace, int op_bound = 12);

// Overall verdict consumed by `check`: {convergence, monotone_violations,
// anomalies, details[]}.
json check_trace(const Trace& trace);

// Brute-force oracle over all delivery interleavings of a concurrent op
// set against one key.
struct EnumerationReport {
  std::uint64_t interleavings = 0;
  // monotone queries: no interleaving lets a Ready(true) fail on the join
  bool monotone_definitive_ok = true;
  // non-monotone queries: some interleaving shows a regression over time
  bool regression_found = false;
  json regression_example;
};

EnumerationReport enumerate_delivery_orders(
    const std::vector<std::pair<std::string, json>>& ops,
    const BuiltinQuery& query, std::size_t bound = 6);

}  // namespace calmstore

#endif  // CALMSTORE_CHECKER_HPP_
