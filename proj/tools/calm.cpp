// Command-line front end: run scenarios, sweep seeds, check traces, and
// classify queries. Exit codes: 0 ok, 1 usage/parse error, 2 non-monotone
// classification (classify only), 3 checker violation.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "calmstore/checker.hpp"
#include "calmstore/dsl.hpp"
#include "calmstore/metrics.hpp"
#include "calmstore/simnet.hpp"

namespace {

using namespace calmstore;

std::filesystem::path output_dir() {
  if (const char* dir = std::getenv("CALM_OUT_DIR")) return dir;
  return ".";
}

struct CommonOpts {
  std::optional<std::uint64_t> seed;
  std::string gossip;
  std::string read;
  std::string write;
  std::string prune;
};

Overrides to_overrides(const CommonOpts& o) {
  Overrides out;
  out.seed = o.seed;
  if (o.gossip == "full") out.gossip_mode = GossipMode::Full;
  if (o.gossip == "delta") out.gossip_mode = GossipMode::Delta;
  if (!o.read.empty()) out.read = o.read;
  if (!o.write.empty()) out.write = o.write;
  if (o.prune == "on") out.prune = true;
  if (o.prune == "off") out.prune = false;
  return out;
}

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--seed", o.seed, "Override the scenario seed");
  cmd->add_option("--gossip", o.gossip, "Gossip mode")
      ->check(CLI::IsMember({"full", "delta"}));
  cmd->add_option("--read", o.read, "Override the default read strategy");
  cmd->add_option("--write", o.write, "Override the default write strategy");
  cmd->add_option("--prune", o.prune, "Delta-buffer pruning")
      ->check(CLI::IsMember({"on", "off"}));
}

int cmd_run(const std::string& path, const CommonOpts& opts,
            std::string trace_out) {
  Scenario sc = apply_overrides(Scenario::load(path), to_overrides(opts));
  Trace trace = run_scenario(sc);
  if (trace_out.empty()) {
    trace_out = (output_dir() /
                 (std::filesystem::path(path).stem().string() + ".trace.jsonl"))
                    .string();
  }
  std::ofstream out(trace_out);
  if (!out) {
    std::cerr << "cannot write trace file: " << trace_out << "\n";
    return 1;
  }
  out << trace.to_jsonl();
  json report = metrics_report(trace);
  report["trace_file"] = trace_out;
  std::cout << report.dump(2) << "\n";
  return report.at("monotone_violations").get<std::uint64_t>() > 0 ? 3 : 0;
}

int cmd_sweep(const std::string& path, std::uint64_t n_seeds,
              const CommonOpts& opts) {
  Scenario base = apply_overrides(Scenario::load(path), to_overrides(opts));
  std::vector<std::uint64_t> bytes;
  std::vector<std::uint64_t> anomalies;
  std::uint64_t converged = 0;
  for (std::uint64_t seed = 0; seed < n_seeds; ++seed) {
    Scenario sc = base;
    sc.config.seed = seed;
    json report;
    try {
      report = metrics_report(run_scenario(sc));
    } catch (const LatticeError& e) {
      std::cerr << "seed " << seed << ": " << e.what() << "\n";
      return 1;
    }
    if (report.at("monotone_violations").get<std::uint64_t>() > 0) {
      std::cerr << "monotone violation at seed " << seed << "\n"
                << report.dump(2) << "\n";
      return 3;
    }
    bytes.push_back(report.at("total_gossip_bytes").get<std::uint64_t>());
    anomalies.push_back(report.at("anomalies").get<std::uint64_t>());
    if (report.at("convergence").get<bool>()) ++converged;
  }
  auto aggregate = [](const std::vector<std::uint64_t>& v) {
    std::uint64_t lo = v[0], hi = v[0], sum = 0;
    for (std::uint64_t x : v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
      sum += x;
    }
    return json{{"min", lo},
                {"mean", static_cast<double>(sum) / v.size()},
                {"max", hi},
                {"total", sum}};
  };
  json report{{"seeds", n_seeds},
              {"converged_runs", converged},
              {"monotone_violations", 0},
              {"gossip_bytes", aggregate(bytes)},
              {"anomalies", aggregate(anomalies)}};
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_check(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot open trace file: " << path << "\n";
    return 1;
  }
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  json verdict = check_trace(Trace::from_jsonl(text));
  std::cout << verdict.dump(2) << "\n";
  return verdict.at("monotone_violations").get<std::uint64_t>() > 0 ? 3 : 0;
}

int cmd_classify(const std::string& text) {
  dsl::AstPtr ast;
  try {
    ast = dsl::parse(text);
  } catch (const LatticeError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  dsl::MonotonicityClass cls = dsl::classify(*ast);
  // Report the most-local mode the query admits; execution defaults to the
  // safe coordinated path unless the caller opts into stale reads.
  dsl::QueryPlan p = dsl::plan(*ast, cls, /*stale_tolerant=*/true);
  json out{{"class", cls.monotone ? "Monotone" : "NonMonotone"},
           {"plan", dsl::plan_mode_name(p.mode)}};
  if (!cls.monotone) out["witness"] = cls.witness_path;
  std::cout << out.dump(2) << "\n";
  return cls.monotone ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coordination-aware CRDT store and replication simulator"};
  app.require_subcommand(1);

  std::string scenario_path, trace_path, trace_out, query_text;
  std::uint64_t n_seeds = 1;
  CommonOpts run_opts, sweep_opts;

  CLI::App* run = app.add_subcommand("run", "Run a scenario and check it");
  run->add_option("scenario", scenario_path, "Scenario file")->required();
  run->add_option("--trace", trace_out, "Trace output path");
  add_common(run, run_opts);

  CLI::App* sweep = app.add_subcommand("sweep", "Run a scenario over seeds 0..N-1");
  sweep->add_option("scenario", scenario_path, "Scenario file")->required();
  sweep->add_option("--seeds", n_seeds, "Number of seeds")
      ->required()
      ->check(CLI::PositiveNumber);
  add_common(sweep, sweep_opts);

  CLI::App* check = app.add_subcommand("check", "Check a recorded trace");
  check->add_option("trace", trace_path, "Trace file (JSONL)")->required();

  CLI::App* classify = app.add_subcommand("classify", "Classify a query");
  classify->add_option("query", query_text, "Query text")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) return cmd_run(scenario_path, run_opts, trace_out);
    if (sweep->parsed()) return cmd_sweep(scenario_path, n_seeds, sweep_opts);
    if (check->parsed()) return cmd_check(trace_path);
    return cmd_classify(query_text);
  } catch (const calmstore::LatticeError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
}
