#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "robmech/joint_dist.hpp"
#include "robmech/mechanism.hpp"
#include "robmech/mrf.hpp"
#include "robmech/robustness.hpp"
#include "robmech/scenario.hpp"

namespace robmech {

/// Inputs shared by every trial of a run: the scenario and the files it
/// references, loaded once.
struct ExperimentContext {
  const Scenario* scenario = nullptr;
  std::optional<JointDist> prior;
  std::optional<JointDist> perturbed;
  std::optional<Valuations> valuations;
  std::optional<Mechanism> mechanism;
  std::optional<PairwiseMRF> mrf;
};

/// Extra output of a trial written next to the report (e.g. a synthesized
/// mechanism).
struct Artifact {
  std::string name;
  std::string content;
};

struct TrialResult {
  Reports reports;
  std::vector<Artifact> artifacts;
};

struct Experiment {
  std::string name;
  std::string doc;
  std::vector<std::string> params;  ///< accepted [params] keys
  std::vector<std::string> files;   ///< accepted [files] keys
  std::function<TrialResult(const ExperimentContext&, std::uint64_t seed)> trial;
};

/// All registered experiments, sorted by name.
const std::vector<Experiment>& experiments();
/// nullptr when no experiment has that name.
const Experiment* find_experiment(std::string_view name);

/// Loads the files a scenario references. Throws Error naming the path
/// when a file is missing or malformed.
ExperimentContext load_context(const Scenario& sc);

}  // namespace robmech
