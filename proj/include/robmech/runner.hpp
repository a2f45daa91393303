#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "robmech/experiments.hpp"
#include "robmech/scenario.hpp"

namespace robmech {

struct RunOptions {
  std::optional<std::uint64_t> seed;  ///< overrides the scenario seed
  std::optional<std::size_t> trials;  ///< overrides the scenario trial count
  std::size_t workers = 1;
};

/// Outcome of one seeded trial. A trial that throws is recorded with the
/// message; precondition errors count as vacuous, anything else as a failure.
struct TrialOutcome {
  std::uint64_t seed = 0;
  Reports reports;
  std::vector<Artifact> artifacts;
  std::string error;
};

struct RunCounts {
  std::size_t pass = 0;
  std::size_t fail = 0;
  std::size_t vacuous = 0;
  std::size_t flag = 0;
  std::size_t errors = 0;
};

struct RunResult {
  std::string experiment;
  std::string source;
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  std::vector<TrialOutcome> outcomes;  ///< ascending seed

  RunCounts counts() const;
  /// 0 when no check failed and no trial raised an error.
  int exit_status() const;
};

/// Validates the scenario, loads its files and runs trials with seeds
/// seed, seed + 1, ..., spread over `workers` threads.
RunResult run_scenario(const Scenario& sc, const RunOptions& opts = {});

/// One line per report: tag seed delta alpha lhs rhs slack status.
std::string format_text(const RunResult& r);
/// JSON aggregate with per-tag summaries and every report.
std::string format_machine(const RunResult& r);

/// Writes report.txt, report.json and trial artifacts into `dir`.
void write_outputs(const RunResult& r, const std::string& dir);

}  // namespace robmech
