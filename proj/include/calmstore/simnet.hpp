#ifndef CALMSTORE_SIMNET_HPP_
#define CALMSTORE_SIMNET_HPP_

#include "calmstore/scenario.hpp"
#include "calmstore/trace.hpp"

namespace calmstore {

class SimError : public LatticeError {
 public:
  using LatticeError::LatticeError;
};

// Deterministic discrete-event run: one seeded random stream consumed in
// event order, logical ticks, fault injection on every message send.
// Identical (scenario, seed) pairs yield byte-identical traces.
Trace run_scenario(const Scenario& scenario);

}  // namespace calmstore

#endif  // CALMSTORE_SIMNET_HPP_
