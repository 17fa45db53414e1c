#ifndef CALMSTORE_LATTICE_HPP_
#define CALMSTORE_LATTICE_HPP_

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include "json.hpp"

namespace calmstore {

using json = nlohmann::json;

enum class LatticeType { GSet, TwoPSet, GCounter, PNCounter, MaxNat, Bool, Map };

const char* type_name(LatticeType t);
LatticeType type_from_name(std::string_view name);

class LatticeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TypeMismatchError : public LatticeError {
 public:
  using LatticeError::LatticeError;
};

class UnknownTypeError : public LatticeError {
 public:
  using LatticeError::LatticeError;
};

class UnknownOpError : public LatticeError {
 public:
  using LatticeError::LatticeError;
};

// An immutable join-semi-lattice value. Merge never mutates; all state
// evolution is rebinding to a merge result.
class Value {
 public:
  using Set = std::set<std::string>;
  using Counts = std::map<std::uint32_t, std::uint64_t>;  // replica -> count
  using Entries = std::map<std::string, Value>;

  struct TwoP {
    Set adds;
    Set removes;
    friend bool operator==(const TwoP&, const TwoP&) = default;
  };
  struct PN {
    Counts incs;
    Counts decs;
    friend bool operator==(const PN&, const PN&) = default;
  };

  Value() : type_(LatticeType::GSet), data_(Set{}) {}

  static Value gset(Set elements);
  static Value twopset(Set adds, Set removes);
  static Value gcounter(Counts counts);
  static Value pncounter(Counts incs, Counts decs);
  static Value max_nat(std::uint64_t v);
  static Value boolean(bool v);
  static Value map(Entries entries);

  LatticeType type() const { return type_; }

  const Set& as_set() const;
  const TwoP& as_twopset() const;
  const Counts& as_counts() const;
  const PN& as_pn() const;
  std::uint64_t as_nat() const;
  bool as_bool() const;
  const Entries& as_map() const;

  // GCounter total; monotone under merge.
  std::uint64_t counter_total() const;
  // PNCounter incs - decs; deliberately not monotone.
  std::int64_t pn_value() const;

  // Canonical form: sets as sorted arrays, maps/counters as key-sorted
  // objects. Equal values serialize byte-identically.
  json to_json() const;
  std::string canonical() const { return to_json().dump(); }
  static Value from_json(LatticeType type, const json& j);

  friend bool operator==(const Value&, const Value&) = default;

 private:
  LatticeType type_;
  std::variant<Set, TwoP, Counts, PN, std::uint64_t, bool, Entries> data_;
};

// Least upper bound. Throws TypeMismatchError unless a and b share a type.
Value merge(const Value& a, const Value& b);

// Partial order: a <= b iff merge(a, b) == b.
bool leq(const Value& a, const Value& b);

Value bottom(LatticeType type);

// Canonical byte-string form of a set element; objects serialize with
// sorted keys so equality is unambiguous.
std::string canonical_element(const json& elem);

// Smallest delta whose merge into `current` applies the named operation.
// Counter increments need the current state: per-replica entries merge by
// max, so the delta carries the post-increment total.
//
// Ops: gset_add{elem}, twopset_add{elem}, twopset_remove{elem},
// counter_inc{replica,n}, pn_inc{replica,n}, pn_dec{replica,n},
// map_put{key,type,value}.
Value op_delta(std::string_view op, const json& args,
               const Value* current = nullptr);

LatticeType op_target_type(std::string_view op);

}  // namespace calmstore

#endif  // CALMSTORE_LATTICE_HPP_
