#ifndef TESTS_HELPERS_HPP_
#define TESTS_HELPERS_HPP_

#include <random>
#include <vector>

#include "calmstore/polog.hpp"
#include "calmstore/query.hpp"
#include "calmstore/replication.hpp"

namespace calmstore::testing {

// Node content is a pure function of the OpId, so logs generated
// independently still agree wherever their ids overlap and set-union merge
// stays well defined.
inline json canonical_args(OpId id) {
  return json{{"elem", "e" + std::to_string(id.origin) + "-" +
                           std::to_string(id.seq)}};
}

inline PoLog random_polog(std::mt19937_64& rng, std::size_t max_ops = 5) {
  PoLog log;
  std::vector<OpId> ids;
  std::map<std::uint32_t, std::uint64_t> next_seq;
  std::size_t n = rng() % (max_ops + 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t origin = static_cast<std::uint32_t>(rng() % 3);
    OpId id{origin, ++next_seq[origin]};
    std::set<OpId> preds;
    for (OpId prev : ids) {
      if (rng() % 2) preds.insert(prev);
    }
    log = log.record("gset_add", canonical_args(id), preds, id);
    ids.push_back(id);
  }
  return log;
}

inline VersionVector random_vv(std::mt19937_64& rng) {
  VersionVector vv;
  std::size_t n = rng() % 4;
  for (std::size_t i = 0; i < n; ++i) {
    vv.advance(static_cast<std::uint32_t>(rng() % 4), 1 + rng() % 6);
  }
  return vv;
}

}  // namespace calmstore::testing

#endif  // TESTS_HELPERS_HPP_
