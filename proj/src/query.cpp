#include "calmstore/query.hpp"

#include <charconv>

namespace calmstore {

MonotoneFn compose(const MonotoneFn& f, const MonotoneFn& g) {
  if (f.target != g.source) {
    throw TypeMismatchError("compose: " + f.name + " targets " +
                            type_name(f.target) + " but " + g.name +
                            " expects " + type_name(g.source));
  }
  return MonotoneFn{g.name + "." + f.name, f.source, g.target,
                    [ff = f.apply, gg = g.apply](const Value& v) {
                      return gg(ff(v));
                    }};
}

MonotoneFn identity_fn(LatticeType type) {
  return MonotoneFn{"identity", type, type,
                    [](const Value& v) { return v; }};
}

MonotoneFn cardinality_fn() {
  return MonotoneFn{"cardinality", LatticeType::GSet, LatticeType::MaxNat,
                    [](const Value& v) {
                      return Value::max_nat(v.as_set().size());
                    }};
}

MonotoneFn greater_than_fn(std::uint64_t k) {
  return MonotoneFn{"gt_" + std::to_string(k), LatticeType::MaxNat,
                    LatticeType::Bool,
                    [k](const Value& v) {
                      return Value::boolean(v.as_nat() > k);
                    }};
}

QueryOutcome eval_local(const ThresholdQuery& q, const Value& state) {
  if (state.type() != q.fn.source) {
    throw TypeMismatchError(std::string("query ") + q.fn.name + " expects " +
                            type_name(q.fn.source) + ", got " +
                            type_name(state.type()));
  }
  return q.fn.apply(state).as_bool() ? QueryOutcome::ready()
                                     : QueryOutcome::unknown();
}

Value eval_on_join(const std::function<Value(const Value&)>& f,
                   std::span<const Value> states) {
  if (states.empty()) throw LatticeError("eval_on_join: empty state list");
  Value joined = states[0];
  for (std::size_t i = 1; i < states.size(); ++i) {
    joined = merge(joined, states[i]);
  }
  return f(joined);
}

namespace {

const char* kElementPool[] = {"apple", "banana", "cherry", "date",
                              "fig",   "grape",  "kiwi",   "lemon"};

std::string random_element(std::mt19937_64& rng) {
  return kElementPool[rng() % std::size(kElementPool)];
}

Value::Set random_set(std::mt19937_64& rng) {
  Value::Set out;
  std::size_t n = rng() % 5;
  for (std::size_t i = 0; i < n; ++i) out.insert(random_element(rng));
  return out;
}

Value::Counts random_counts(std::mt19937_64& rng) {
  Value::Counts out;
  std::size_t n = rng() % 4;
  for (std::size_t i = 0; i < n; ++i) {
    out[static_cast<std::uint32_t>(rng() % 4)] = rng() % 10;
  }
  return out;
}

}  // namespace

Value random_value(LatticeType type, std::mt19937_64& rng) {
  switch (type) {
    case LatticeType::GSet: return Value::gset(random_set(rng));
    case LatticeType::TwoPSet:
      return Value::twopset(random_set(rng), random_set(rng));
    case LatticeType::GCounter: return Value::gcounter(random_counts(rng));
    case LatticeType::PNCounter:
      return Value::pncounter(random_counts(rng), random_counts(rng));
    case LatticeType::MaxNat: return Value::max_nat(rng() % 20);
    case LatticeType::Bool: return Value::boolean(rng() % 2 == 0);
    case LatticeType::Map: {
      Value::Entries entries;
      if (rng() % 2) entries.emplace("k0", Value::gset(random_set(rng)));
      if (rng() % 2) entries.emplace("k1", Value::gcounter(random_counts(rng)));
      if (rng() % 2) entries.emplace("k2", Value::max_nat(rng() % 20));
      return Value::map(std::move(entries));
    }
  }
  throw UnknownTypeError("unhandled lattice type in random_value");
}

Value random_delta(LatticeType type, std::mt19937_64& rng) {
  // Deltas are just values; merge makes any value an inflation.
  return random_value(type, rng);
}

MonotonicityReport check_monotone_sampled(const MonotoneFn& f, int n_pairs,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MonotonicityReport report;
  for (int i = 0; i < n_pairs; ++i) {
    Value lo = random_value(f.source, rng);
    Value hi = merge(lo, random_delta(f.source, rng));
    ++report.pairs_checked;
    if (!leq(f.apply(lo), f.apply(hi))) {
      report.violations.push_back({std::move(lo), std::move(hi)});
    }
  }
  return report;
}

QueryOutcome BuiltinQuery::eval_threshold(const Value& state) const {
  return eval(state).get<bool>() ? QueryOutcome::ready()
                                 : QueryOutcome::unknown();
}

namespace {

bool qualifying_txn(const std::string& elem) {
  json txn = json::parse(elem, nullptr, false);
  if (!txn.is_object()) return false;
  auto type = txn.find("type");
  auto amount = txn.find("amount");
  return type != txn.end() && *type == "GIFTCARD" && amount != txn.end() &&
         amount->is_number() && amount->get<double>() > 100;
}

json set_to_array(const Value::Set& s) {
  json arr = json::array();
  for (const auto& e : s) arr.push_back(e);
  return arr;
}

std::optional<std::uint64_t> parse_cardinality_gt(std::string_view name) {
  constexpr std::string_view prefix = "cardinality_gt(";
  if (!name.starts_with(prefix) || !name.ends_with(")")) return std::nullopt;
  std::string_view digits =
      name.substr(prefix.size(), name.size() - prefix.size() - 1);
  std::uint64_t k = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) {
    return std::nullopt;
  }
  return k;
}

}  // namespace

std::optional<BuiltinQuery> find_query(std::string_view name) {
  if (name == "suspicious_activity") {
    return BuiltinQuery{
        "suspicious_activity", LatticeType::GSet, true,
        [](const Value& state) {
          std::size_t n = 0;
          for (const auto& elem : state.as_set()) {
            if (qualifying_txn(elem)) ++n;
          }
          return json(n > 50);
        }};
  }
  if (name == "rate_limiter") {
    return BuiltinQuery{
        "rate_limiter", LatticeType::TwoPSet, true,
        [](const Value& state) {
          const auto& t = state.as_twopset();
          return json(t.adds.size() + t.removes.size() > 100);
        }};
  }
  if (name == "contents") {
    return BuiltinQuery{
        "contents", LatticeType::TwoPSet, false,
        [](const Value& state) {
          const auto& t = state.as_twopset();
          Value::Set diff;
          for (const auto& e : t.adds) {
            if (t.removes.count(e) == 0) diff.insert(e);
          }
          return set_to_array(diff);
        }};
  }
  if (name == "counter_value") {
    return BuiltinQuery{
        "counter_value", LatticeType::PNCounter, false,
        [](const Value& state) { return json(state.pn_value()); }};
  }
  if (auto k = parse_cardinality_gt(name)) {
    return BuiltinQuery{
        std::string(name), LatticeType::GSet, true,
        [k = *k](const Value& state) {
          return json(state.as_set().size() > k);
        }};
  }
  return std::nullopt;
}

}  // namespace calmstore
