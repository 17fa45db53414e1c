#ifndef CALMSTORE_TRACE_HPP_
#define CALMSTORE_TRACE_HPP_

#include <string>
#include <vector>

#include "calmstore/lattice.hpp"

namespace calmstore {

// Line-oriented record of everything a run did: injected ops, messages,
// query responses, final states. The checker and metrics reports are pure
// functions of a trace.
class Trace {
 public:
  void append(json record) { records_.push_back(std::move(record)); }
  const std::vector<json>& records() const { return records_; }
  bool empty() const { return records_.empty(); }

  std::string to_jsonl() const;
  static Trace from_jsonl(const std::string& text);

 private:
  std::vector<json> records_;
};

}  // namespace calmstore

#endif  // CALMSTORE_TRACE_HPP_
