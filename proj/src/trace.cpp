#include "calmstore/trace.hpp"

#include <sstream>

namespace calmstore {

std::string Trace::to_jsonl() const {
  std::string out;
  for (const json& rec : records_) {
    out += rec.dump();
    out += '\n';
  }
  return out;
}

Trace Trace::from_jsonl(const std::string& text) {
  Trace trace;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    trace.append(json::parse(line));
  }
  return trace;
}

}  // namespace calmstore
