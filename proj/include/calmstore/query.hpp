#ifndef CALMSTORE_QUERY_HPP_
#define CALMSTORE_QUERY_HPP_

#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "calmstore/lattice.hpp"

namespace calmstore {

// A (claimed) monotone function between lattices: i <= j in the source
// order must imply apply(i) <= apply(j) in the target order. The claim is
// trusted-but-verified via check_monotone_sampled.
struct MonotoneFn {
  std::string name;
  LatticeType source;
  LatticeType target;
  std::function<Value(const Value&)> apply;
};

MonotoneFn compose(const MonotoneFn& f, const MonotoneFn& g);

MonotoneFn identity_fn(LatticeType type);
MonotoneFn cardinality_fn();                       // GSet -> MaxNat
MonotoneFn greater_than_fn(std::uint64_t k);       // MaxNat -> Bool

// A monotone boolean query: once true at some state it stays true on every
// larger state, so a local true is definitive.
struct ThresholdQuery {
  MonotoneFn fn;  // target must be Bool
};

struct QueryOutcome {
  enum class Kind { Ready, Unknown };
  Kind kind = Kind::Unknown;

  static QueryOutcome ready() { return {Kind::Ready}; }
  static QueryOutcome unknown() { return {Kind::Unknown}; }
  bool is_ready() const { return kind == Kind::Ready; }

  friend bool operator==(const QueryOutcome&, const QueryOutcome&) = default;
};

// Ready iff fn(state) is true; Unknown otherwise. Never a definitive false.
QueryOutcome eval_local(const ThresholdQuery& q, const Value& state);

// Merges all states, then evaluates f on the join. Used by coordination for
// non-monotone queries.
Value eval_on_join(const std::function<Value(const Value&)>& f,
                   std::span<const Value> states);

struct MonotonicityReport {
  struct Violation {
    Value lo;
    Value hi;
  };
  int pairs_checked = 0;
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

// Samples ordered pairs (i, merge(i, delta)) and checks f(i) <= f(j).
MonotonicityReport check_monotone_sampled(const MonotoneFn& f, int n_pairs,
                                          std::uint64_t seed);

// Random value/delta generators used by property tests and the sampled
// monotonicity checker.
Value random_value(LatticeType type, std::mt19937_64& rng);
Value random_delta(LatticeType type, std::mt19937_64& rng);

// Built-in query registry, referenced by name from scenario files.
struct BuiltinQuery {
  std::string name;
  LatticeType source;
  bool monotone = false;  // monotone queries here are threshold queries
  // For threshold queries returns a bool; otherwise the observed value
  // (sets as sorted arrays, counters as integers).
  std::function<json(const Value&)> eval;

  QueryOutcome eval_threshold(const Value& state) const;
};

// Known names: suspicious_activity, rate_limiter, contents, counter_value,
// cardinality_gt(k). Returns nullopt for unknown names.
std::optional<BuiltinQuery> find_query(std::string_view name);

}  // namespace calmstore

#endif  // CALMSTORE_QUERY_HPP_
