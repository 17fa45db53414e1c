#include "calmstore/metrics.hpp"

#include <map>
#include <set>
#include <tuple>

#include "calmstore/checker.hpp"

namespace calmstore {

json metrics_report(const Trace& trace) {
  std::uint64_t gossip_bytes = 0;
  std::map<std::uint64_t, std::uint64_t> byte_series;
  std::map<std::string, std::uint64_t> query_counts{{"ready", 0},
                                                    {"unknown", 0},
                                                    {"value", 0},
                                                    {"unavailable", 0},
                                                    {"coordinated", 0}};
  // op (origin, seq) -> injection time; first availability per replica
  std::map<std::pair<std::uint32_t, std::uint64_t>, std::uint64_t> injected_at;
  std::map<std::uint64_t, std::uint64_t> staleness_histogram;
  std::set<std::tuple<std::uint32_t, std::uint64_t, std::uint32_t>> seen;

  for (const json& rec : trace.records()) {
    const std::string kind = rec.at("rec").get<std::string>();
    if (kind == "msg_sent") {
      const std::string msg_kind = rec.at("kind").get<std::string>();
      if (msg_kind == "gossip" || msg_kind == "flush") {
        std::uint64_t bytes = rec.at("bytes").get<std::uint64_t>();
        gossip_bytes += bytes;
        byte_series[rec.at("t").get<std::uint64_t>()] += bytes;
      }
    } else if (kind == "op_injected") {
      injected_at[{rec.at("origin").get<std::uint32_t>(),
                   rec.at("seq").get<std::uint64_t>()}] =
          rec.at("t").get<std::uint64_t>();
    } else if (kind == "op_applied") {
      std::uint32_t origin = rec.at("origin").get<std::uint32_t>();
      std::uint64_t seq = rec.at("seq").get<std::uint64_t>();
      std::uint32_t replica = rec.at("replica").get<std::uint32_t>();
      if (!seen.emplace(origin, seq, replica).second) continue;
      auto it = injected_at.find({origin, seq});
      if (it == injected_at.end()) continue;
      ++staleness_histogram[rec.at("t").get<std::uint64_t>() - it->second];
    } else if (kind == "query_answered") {
      ++query_counts[rec.at("outcome").get<std::string>()];
      if (rec.at("mode").get<std::string>() == "coordinated") {
        ++query_counts["coordinated"];
      }
    }
  }

  json series = json::array();
  for (const auto& [t, bytes] : byte_series) {
    series.push_back(json{{"t", t}, {"bytes", bytes}});
  }
  json histogram = json::object();
  for (const auto& [lag, count] : staleness_histogram) {
    histogram[std::to_string(lag)] = count;
  }

  json verdict = check_trace(trace);
  return json{{"total_gossip_bytes", gossip_bytes},
              {"byte_series", series},
              {"staleness_histogram", histogram},
              {"query_counts", query_counts},
              {"convergence", verdict.at("convergence")},
              {"monotone_violations", verdict.at("monotone_violations")},
              {"anomalies", verdict.at("anomalies")}};
}

}  // namespace calmstore
