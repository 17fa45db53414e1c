#include "calmstore/lattice.hpp"

#include <algorithm>

namespace calmstore {

const char* type_name(LatticeType t) {
  switch (t) {
    case LatticeType::GSet: return "gset";
    case LatticeType::TwoPSet: return "twopset";
    case LatticeType::GCounter: return "gcounter";
    case LatticeType::PNCounter: return "pncounter";
    case LatticeType::MaxNat: return "maxnat";
    case LatticeType::Bool: return "bool";
    case LatticeType::Map: return "map";
  }
  throw UnknownTypeError("unhandled lattice type");
}

LatticeType type_from_name(std::string_view name) {
  if (name == "gset") return LatticeType::GSet;
  if (name == "twopset") return LatticeType::TwoPSet;
  if (name == "gcounter") return LatticeType::GCounter;
  if (name == "pncounter") return LatticeType::PNCounter;
  if (name == "maxnat") return LatticeType::MaxNat;
  if (name == "bool") return LatticeType::Bool;
  if (name == "map") return LatticeType::Map;
  throw UnknownTypeError("unknown lattice type: " + std::string(name));
}

Value Value::gset(Set elements) {
  Value v;
  v.type_ = LatticeType::GSet;
  v.data_ = std::move(elements);
  return v;
}

Value Value::twopset(Set adds, Set removes) {
  Value v;
  v.type_ = LatticeType::TwoPSet;
  v.data_ = TwoP{std::move(adds), std::move(removes)};
  return v;
}

Value Value::gcounter(Counts counts) {
  Value v;
  v.type_ = LatticeType::GCounter;
  v.data_ = std::move(counts);
  return v;
}

Value Value::pncounter(Counts incs, Counts decs) {
  Value v;
  v.type_ = LatticeType::PNCounter;
  v.data_ = PN{std::move(incs), std::move(decs)};
  return v;
}

Value Value::max_nat(std::uint64_t n) {
  Value v;
  v.type_ = LatticeType::MaxNat;
  v.data_ = n;
  return v;
}

Value Value::boolean(bool b) {
  Value v;
  v.type_ = LatticeType::Bool;
  v.data_ = b;
  return v;
}

Value Value::map(Entries entries) {
  Value v;
  v.type_ = LatticeType::Map;
  v.data_ = std::move(entries);
  return v;
}

namespace {

[[noreturn]] void bad_access(LatticeType have, const char* want) {
  throw TypeMismatchError(std::string("lattice value is ") + type_name(have) +
                          ", not " + want);
}

}  // namespace

const Value::Set& Value::as_set() const {
  if (type_ != LatticeType::GSet) bad_access(type_, "gset");
  return std::get<Set>(data_);
}

const Value::TwoP& Value::as_twopset() const {
  if (type_ != LatticeType::TwoPSet) bad_access(type_, "twopset");
  return std::get<TwoP>(data_);
}

const Value::Counts& Value::as_counts() const {
  if (type_ != LatticeType::GCounter) bad_access(type_, "gcounter");
  return std::get<Counts>(data_);
}

const Value::PN& Value::as_pn() const {
  if (type_ != LatticeType::PNCounter) bad_access(type_, "pncounter");
  return std::get<PN>(data_);
}

std::uint64_t Value::as_nat() const {
  if (type_ != LatticeType::MaxNat) bad_access(type_, "maxnat");
  return std::get<std::uint64_t>(data_);
}

bool Value::as_bool() const {
  if (type_ != LatticeType::Bool) bad_access(type_, "bool");
  return std::get<bool>(data_);
}

const Value::Entries& Value::as_map() const {
  if (type_ != LatticeType::Map) bad_access(type_, "map");
  return std::get<Entries>(data_);
}

namespace {

std::uint64_t total(const Value::Counts& c) {
  std::uint64_t sum = 0;
  for (const auto& [rep, n] : c) sum += n;
  return sum;
}

Value::Set set_union(const Value::Set& a, const Value::Set& b) {
  Value::Set out = a;
  out.insert(b.begin(), b.end());
  return out;
}

Value::Counts counts_max(const Value::Counts& a, const Value::Counts& b) {
  Value::Counts out = a;
  for (const auto& [rep, n] : b) {
    auto [it, inserted] = out.emplace(rep, n);
    if (!inserted) it->second = std::max(it->second, n);
  }
  return out;
}

}  // namespace

std::uint64_t Value::counter_total() const { return total(as_counts()); }

std::int64_t Value::pn_value() const {
  const PN& pn = as_pn();
  return static_cast<std::int64_t>(total(pn.incs)) -
         static_cast<std::int64_t>(total(pn.decs));
}

Value merge(const Value& a, const Value& b) {
  if (a.type() != b.type()) {
    throw TypeMismatchError(std::string("cannot merge ") + type_name(a.type()) +
                            " with " + type_name(b.type()));
  }
  switch (a.type()) {
    case LatticeType::GSet:
      return Value::gset(set_union(a.as_set(), b.as_set()));
    case LatticeType::TwoPSet: {
      const auto& x = a.as_twopset();
      const auto& y = b.as_twopset();
      return Value::twopset(set_union(x.adds, y.adds),
                            set_union(x.removes, y.removes));
    }
    case LatticeType::GCounter:
      return Value::gcounter(counts_max(a.as_counts(), b.as_counts()));
    case LatticeType::PNCounter: {
      const auto& x = a.as_pn();
      const auto& y = b.as_pn();
      return Value::pncounter(counts_max(x.incs, y.incs),
                              counts_max(x.decs, y.decs));
    }
    case LatticeType::MaxNat:
      return Value::max_nat(std::max(a.as_nat(), b.as_nat()));
    case LatticeType::Bool:
      return Value::boolean(a.as_bool() || b.as_bool());
    case LatticeType::Map: {
      Value::Entries out = a.as_map();
      for (const auto& [key, val] : b.as_map()) {
        auto it = out.find(key);
        if (it == out.end()) {
          out.emplace(key, val);
        } else {
          it->second = merge(it->second, val);
        }
      }
      return Value::map(std::move(out));
    }
  }
  throw UnknownTypeError("unhandled lattice type in merge");
}

bool leq(const Value& a, const Value& b) { return merge(a, b) == b; }

Value bottom(LatticeType type) {
  switch (type) {
    case LatticeType::GSet: return Value::gset({});
    case LatticeType::TwoPSet: return Value::twopset({}, {});
    case LatticeType::GCounter: return Value::gcounter({});
    case LatticeType::PNCounter: return Value::pncounter({}, {});
    case LatticeType::MaxNat: return Value::max_nat(0);
    case LatticeType::Bool: return Value::boolean(false);
    case LatticeType::Map: return Value::map({});
  }
  throw UnknownTypeError("unhandled lattice type in bottom");
}

json Value::to_json() const {
  switch (type_) {
    case LatticeType::GSet: {
      json arr = json::array();
      for (const auto& e : as_set()) arr.push_back(e);
      return arr;
    }
    case LatticeType::TwoPSet: {
      const TwoP& t = as_twopset();
      json adds = json::array();
      for (const auto& e : t.adds) adds.push_back(e);
      json removes = json::array();
      for (const auto& e : t.removes) removes.push_back(e);
      return json{{"adds", adds}, {"removes", removes}};
    }
    case LatticeType::GCounter: {
      json obj = json::object();
      for (const auto& [rep, n] : as_counts()) obj[std::to_string(rep)] = n;
      return obj;
    }
    case LatticeType::PNCounter: {
      const PN& pn = as_pn();
      json incs = json::object();
      for (const auto& [rep, n] : pn.incs) incs[std::to_string(rep)] = n;
      json decs = json::object();
      for (const auto& [rep, n] : pn.decs) decs[std::to_string(rep)] = n;
      return json{{"dec", decs}, {"inc", incs}};
    }
    case LatticeType::MaxNat: return json(as_nat());
    case LatticeType::Bool: return json(as_bool());
    case LatticeType::Map: {
      json obj = json::object();
      for (const auto& [key, val] : as_map()) {
        obj[key] = json{{"type", type_name(val.type())},
                        {"value", val.to_json()}};
      }
      return obj;
    }
  }
  throw UnknownTypeError("unhandled lattice type in to_json");
}

namespace {

Value::Set set_from_json(const json& j) {
  Value::Set out;
  for (const auto& e : j) out.insert(e.get<std::string>());
  return out;
}

Value::Counts counts_from_json(const json& j) {
  Value::Counts out;
  for (const auto& [key, val] : j.items()) {
    out[static_cast<std::uint32_t>(std::stoul(key))] =
        val.get<std::uint64_t>();
  }
  return out;
}

}  // namespace

Value Value::from_json(LatticeType type, const json& j) {
  switch (type) {
    case LatticeType::GSet: return gset(set_from_json(j));
    case LatticeType::TwoPSet:
      return twopset(set_from_json(j.at("adds")),
                     set_from_json(j.at("removes")));
    case LatticeType::GCounter: return gcounter(counts_from_json(j));
    case LatticeType::PNCounter:
      return pncounter(counts_from_json(j.at("inc")),
                       counts_from_json(j.at("dec")));
    case LatticeType::MaxNat: return max_nat(j.get<std::uint64_t>());
    case LatticeType::Bool: return boolean(j.get<bool>());
    case LatticeType::Map: {
      Entries out;
      for (const auto& [key, entry] : j.items()) {
        out.emplace(key,
                    from_json(type_from_name(entry.at("type").get<std::string>()),
                              entry.at("value")));
      }
      return map(std::move(out));
    }
  }
  throw UnknownTypeError("unhandled lattice type in from_json");
}

std::string canonical_element(const json& elem) {
  if (elem.is_string()) return elem.get<std::string>();
  return elem.dump();
}

LatticeType op_target_type(std::string_view op) {
  if (op == "gset_add") return LatticeType::GSet;
  if (op == "twopset_add" || op == "twopset_remove") return LatticeType::TwoPSet;
  if (op == "counter_inc") return LatticeType::GCounter;
  if (op == "pn_inc" || op == "pn_dec") return LatticeType::PNCounter;
  if (op == "map_put") return LatticeType::Map;
  throw UnknownOpError("unknown op: " + std::string(op));
}

namespace {

std::uint64_t increment_arg(const json& args) {
  std::int64_t n = args.contains("n") ? args.at("n").get<std::int64_t>() : 1;
  if (n < 0) throw LatticeError("negative increment");
  return static_cast<std::uint64_t>(n);
}

std::uint32_t replica_arg(const json& args) {
  return args.at("replica").get<std::uint32_t>();
}

}  // namespace

Value op_delta(std::string_view op, const json& args, const Value* current) {
  if (op == "gset_add") {
    return Value::gset({canonical_element(args.at("elem"))});
  }
  if (op == "twopset_add") {
    return Value::twopset({canonical_element(args.at("elem"))}, {});
  }
  if (op == "twopset_remove") {
    return Value::twopset({}, {canonical_element(args.at("elem"))});
  }
  if (op == "counter_inc") {
    std::uint32_t rep = replica_arg(args);
    std::uint64_t base = 0;
    if (current != nullptr) {
      const auto& counts = current->as_counts();
      if (auto it = counts.find(rep); it != counts.end()) base = it->second;
    }
    return Value::gcounter({{rep, base + increment_arg(args)}});
  }
  if (op == "pn_inc" || op == "pn_dec") {
    std::uint32_t rep = replica_arg(args);
    bool inc = (op == "pn_inc");
    std::uint64_t base = 0;
    if (current != nullptr) {
      const auto& counts =
          inc ? current->as_pn().incs : current->as_pn().decs;
      if (auto it = counts.find(rep); it != counts.end()) base = it->second;
    }
    Value::Counts entry{{rep, base + increment_arg(args)}};
    return inc ? Value::pncounter(std::move(entry), {})
               : Value::pncounter({}, std::move(entry));
  }
  if (op == "map_put") {
    LatticeType inner = type_from_name(args.at("type").get<std::string>());
    return Value::map({{args.at("key").get<std::string>(),
                        Value::from_json(inner, args.at("value"))}});
  }
  throw UnknownOpError("unknown op: " + std::string(op));
}

}  // namespace calmstore
