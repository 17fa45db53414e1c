#include "calmstore/coordination.hpp"

#include <charconv>

namespace calmstore {

namespace {

std::uint32_t parse_quorum_k(std::string_view rest, std::string_view what) {
  std::uint32_t k = 0;
  auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), k);
  if (ec != std::errc{} || ptr != rest.data() + rest.size() || k == 0) {
    throw LatticeError("bad quorum size in " + std::string(what));
  }
  return k;
}

}  // namespace

WriteStrategy parse_write_strategy(std::string_view name) {
  if (name == "write_one") return WriteStrategy::one();
  if (name == "write_all") return WriteStrategy::all();
  constexpr std::string_view prefix = "write_quorum:";
  if (name.starts_with(prefix)) {
    return WriteStrategy::quorum(parse_quorum_k(name.substr(prefix.size()), name));
  }
  throw LatticeError("unknown write strategy: " + std::string(name));
}

ReadStrategy parse_read_strategy(std::string_view name) {
  if (name == "read_one") return ReadStrategy::one();
  if (name == "read_all") return ReadStrategy::all();
  constexpr std::string_view prefix = "read_quorum:";
  if (name.starts_with(prefix)) {
    return ReadStrategy::quorum(parse_quorum_k(name.substr(prefix.size()), name));
  }
  throw LatticeError("unknown read strategy: " + std::string(name));
}

std::string strategy_name(WriteStrategy ws) {
  switch (ws.kind) {
    case WriteStrategy::Kind::One: return "write_one";
    case WriteStrategy::Kind::Quorum:
      return "write_quorum:" + std::to_string(ws.k);
    case WriteStrategy::Kind::All: return "write_all";
  }
  return "write_one";
}

std::string strategy_name(ReadStrategy rs) {
  switch (rs.kind) {
    case ReadStrategy::Kind::One: return "read_one";
    case ReadStrategy::Kind::Quorum:
      return "read_quorum:" + std::to_string(rs.k);
    case ReadStrategy::Kind::All: return "read_all";
  }
  return "read_all";
}

std::uint32_t write_size(WriteStrategy ws, std::uint32_t n) {
  switch (ws.kind) {
    case WriteStrategy::Kind::One: return 1;
    case WriteStrategy::Kind::Quorum: return std::min(ws.k, n);
    case WriteStrategy::Kind::All: return n;
  }
  return 1;
}

std::uint32_t read_size(ReadStrategy rs, std::uint32_t n) {
  switch (rs.kind) {
    case ReadStrategy::Kind::One: return 1;
    case ReadStrategy::Kind::Quorum: return std::min(rs.k, n);
    case ReadStrategy::Kind::All: return n;
  }
  return n;
}

bool overlap_safe(WriteStrategy ws, ReadStrategy rs, std::uint32_t n) {
  return write_size(ws, n) + read_size(rs, n) > n;
}

std::vector<std::uint32_t> contact_set(std::uint32_t self, std::uint32_t size,
                                       std::uint32_t n_replicas) {
  std::vector<std::uint32_t> out;
  out.push_back(self);
  for (std::uint32_t r = 0; r < n_replicas && out.size() < size; ++r) {
    if (r != self) out.push_back(r);
  }
  return out;
}

json coordinated_read(const std::string& key,
                      const std::function<json(const Value&)>& query,
                      ReadStrategy rs, std::span<const Value> stores,
                      std::uint32_t self) {
  std::uint32_t n = static_cast<std::uint32_t>(stores.size());
  std::uint32_t needed = read_size(rs, n);
  if (needed > n) {
    throw UnavailableError("read strategy needs " + std::to_string(needed) +
                           " replicas, have " + std::to_string(n));
  }
  Value joined = bottom(LatticeType::Map);
  for (std::uint32_t r : contact_set(self, needed, n)) {
    joined = merge(joined, stores[r]);
  }
  const auto& entries = joined.as_map();
  auto it = entries.find(key);
  if (it == entries.end()) {
    throw LatticeError("coordinated_read: key not present: " + key);
  }
  return query(it->second);
}

std::string ops_stat_key(const std::string& key) { return "ops:" + key; }

std::string nmreads_stat_key(const std::string& key) {
  return "nmreads:" + key;
}

namespace {

std::uint64_t stat_total(const Value& stats, const std::string& stat_key) {
  const auto& entries = stats.as_map();
  auto it = entries.find(stat_key);
  return it == entries.end() ? 0 : it->second.counter_total();
}

}  // namespace

std::pair<WriteStrategy, ReadStrategy> adaptive_strategy(
    const Value& stats, const std::string& key, std::uint32_t n_replicas,
    double theta) {
  std::uint64_t ops = stat_total(stats, ops_stat_key(key));
  std::uint64_t nmreads = stat_total(stats, nmreads_stat_key(key));
  bool synchronize_on_update;
  if (ops == 0) {
    synchronize_on_update = nmreads > 0;
  } else {
    synchronize_on_update =
        static_cast<double>(nmreads) / static_cast<double>(ops) > theta;
  }
  auto pair = synchronize_on_update
                  ? std::pair{WriteStrategy::all(), ReadStrategy::one()}
                  : std::pair{WriteStrategy::one(), ReadStrategy::all()};
  // Invariant: the returned pair always overlaps.
  if (!overlap_safe(pair.first, pair.second, n_replicas)) {
    throw LatticeError("adaptive strategy produced a non-overlapping pair");
  }
  return pair;
}

}  // namespace calmstore
