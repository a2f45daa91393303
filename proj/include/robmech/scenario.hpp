#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace robmech {

// Scenario files are INI-style text:
//
//   # comment
//   [experiment]
//   kind = dsic_robustness
//   seed = 7
//   trials = 200
//
//   [params]
//   alpha = 0.9
//   q_grid = 0.1 0.25 0.5 0.9
//
//   [files]
//   prior = prior.dist          # relative to the scenario file
//
// Numbers are parsed as decimals with full double precision.

/// A parameter value together with the line it came from.
struct ScenarioValue {
  std::string text;
  std::size_t line = 0;
};

struct Scenario {
  std::string source;  ///< path of the scenario file, empty when parsed from a string
  std::string kind;
  std::uint64_t seed = 1;
  std::size_t trials = 1;
  std::map<std::string, ScenarioValue> params;
  std::map<std::string, ScenarioValue> files;  ///< paths already resolved against the scenario directory

  bool has(const std::string& key) const { return params.count(key) != 0; }
  /// Numeric parameter, `fallback` when absent. Throws ParseError on a
  /// malformed number.
  double number(const std::string& key, double fallback) const;
  /// Whitespace-separated list of numbers, `fallback` when absent.
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  std::optional<std::string> file(const std::string& key) const;
};

/// Parses scenario text; relative file paths are resolved against `base_dir`.
Scenario parse_scenario(std::string_view text, const std::string& base_dir = ".");

/// Reads and parses a scenario file.
Scenario load_scenario(const std::string& path);

/// Every violated invariant, one message each. Empty when the scenario is
/// runnable: known experiment kind, known parameters inside their ranges
/// and referenced files that exist.
std::vector<std::string> validate(const Scenario& sc);

/// Throws ValidationError listing the diagnostics when there are any.
void require_valid(const Scenario& sc);

}  // namespace robmech
