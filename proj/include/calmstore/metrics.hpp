#ifndef CALMSTORE_METRICS_HPP_
#define CALMSTORE_METRICS_HPP_

#include "calmstore/trace.hpp"

namespace calmstore {

// Derived purely from the trace: gossip byte totals and series, staleness
// histogram (ticks from injection to availability per remote replica),
// query outcome counts, and the checker verdict.
json metrics_report(const Trace& trace);

}  // namespace calmstore

#endif  // CALMSTORE_METRICS_HPP_
