#ifndef CALMSTORE_DSL_HPP_
#define CALMSTORE_DSL_HPP_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "calmstore/coordination.hpp"
#include "calmstore/lattice.hpp"

namespace calmstore::dsl {

class ParseError : public LatticeError {
 public:
  ParseError(const std::string& msg, int line, int col)
      : LatticeError(msg + " at " + std::to_string(line) + ":" +
                     std::to_string(col)),
        line(line),
        col(col) {}
  int line;
  int col;
};

class DslTypeError : public LatticeError {
 public:
  using LatticeError::LatticeError;
};

enum class CmpOp { Gt, Ge, Lt, Le, Eq };
const char* cmp_name(CmpOp op);

struct Predicate {
  struct Clause {
    std::string field;
    CmpOp op;
    json literal;  // string or number
    friend bool operator==(const Clause&, const Clause&) = default;
  };
  std::vector<Clause> clauses;  // implicit AND
  friend bool operator==(const Predicate&, const Predicate&) = default;
};

enum class AstKind {
  Source,     // key reference, optionally projected .adds / .removes
  Filter,     // per-tuple predicate
  Project,    // field projection on record tuples
  Union,
  Intersect,
  Except,
  Count,
  Plus,       // sum of counts
  Compare,    // count vs integer literal
};

struct AstNode {
  AstKind kind;
  std::string source;         // Source: key name
  std::string projection;     // Source: "", "adds" or "removes"
  Predicate pred;             // Filter
  std::vector<std::string> fields;  // Project
  CmpOp cmp = CmpOp::Gt;      // Compare
  std::int64_t literal = 0;   // Compare
  std::vector<std::unique_ptr<AstNode>> children;

  friend bool operator==(const AstNode& a, const AstNode& b);
};

using AstPtr = std::unique_ptr<AstNode>;

enum class ExprType { SetT, CountT, BoolT };

AstPtr parse(const std::string& text);
std::string print(const AstNode& ast);

// Well-typedness: set operators over set children, Compare over counts.
ExprType type_check(const AstNode& ast);

struct MonotonicityClass {
  bool monotone = true;
  std::string witness_path;  // shallowest non-monotone node, e.g. "root.0"

  friend bool operator==(const MonotonicityClass&,
                         const MonotonicityClass&) = default;
};

// Node table: Source/Filter/Project/Union/Intersect/Count/Plus monotone;
// Compare monotone only for > and >=; Except non-monotone. Any non-monotone
// node makes the whole query non-monotone.
MonotonicityClass classify(const AstNode& ast);

enum class PlanMode { LocalThreshold, LocalLowerBound, Coordinated };
const char* plan_mode_name(PlanMode mode);

struct QueryPlan {
  const AstNode* ast;
  MonotonicityClass cls;
  PlanMode mode;
};

// stale_tolerant lets monotone set/count-valued queries run as tagged local
// lower-bound reads; the default routes them through coordination.
QueryPlan plan(const AstNode& ast, const MonotonicityClass& cls,
               bool stale_tolerant = false);

struct ExecResult {
  enum class Kind { Ready, Unknown, Observed, Unavailable };
  Kind kind = Kind::Unknown;
  json value;                 // Observed reads only
  bool stale_tolerant = false;
};

class UnboundSourceError : public LatticeError {
 public:
  using LatticeError::LatticeError;
};

// Evaluates the AST against one Map-typed store snapshot.
json eval_ast(const AstNode& ast, const Value& store);

// Executes per the plan against the replicas' store snapshots.
// LocalThreshold and LocalLowerBound read only stores[replica]; Coordinated
// merges a read set chosen by `rs` before evaluating.
ExecResult execute(const QueryPlan& plan, std::span<const Value> stores,
                   std::uint32_t replica, ReadStrategy rs);

struct Counterexample {
  Value lo;   // Map store
  Value hi;   // lo merged with a delta
  json lo_result;
  json hi_result;
};

// Directed search over small states for a pair i <= j whose results
// regress; expected to succeed for every NonMonotone verdict.
std::optional<Counterexample> find_counterexample(
    const AstNode& ast, const std::map<std::string, LatticeType>& key_types,
    std::uint64_t seed = 0, int attempts = 4000);

}  // namespace calmstore::dsl

#endif  // CALMSTORE_DSL_HPP_
