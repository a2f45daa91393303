// Command-line front end: run, validate and list scenario experiments.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "robmech/errors.hpp"
#include "robmech/experiments.hpp"
#include "robmech/runner.hpp"
#include "robmech/scenario.hpp"

namespace {

int run(const std::string& file, const robmech::RunOptions& opts, const std::string& out_dir,
        const std::string& format) {
  const robmech::Scenario sc = robmech::load_scenario(file);
  const robmech::RunResult result = robmech::run_scenario(sc, opts);
  const std::string body = format == "machine" ? robmech::format_machine(result) : robmech::format_text(result);
  if (out_dir.empty()) {
    std::cout << body;
  } else {
    robmech::write_outputs(result, out_dir);
    const robmech::RunCounts c = result.counts();
    std::cout << result.experiment << ": " << c.pass << " pass, " << c.fail << " fail, " << c.vacuous
              << " vacuous, " << c.flag << " flag, " << c.errors << " errors -> " << out_dir << '\n';
  }
  return result.exit_status();
}

int validate(const std::string& file) {
  const robmech::Scenario sc = robmech::load_scenario(file);
  const auto diags = robmech::validate(sc);
  for (const auto& d : diags) std::cerr << file << ": " << d << '\n';
  if (diags.empty()) std::cout << file << ": ok (" << sc.kind << ")\n";
  return diags.empty() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust mechanism design experiments on finite type spaces"};
  app.require_subcommand(1);

  std::string file;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::size_t workers = 1;
  std::string out_dir;
  std::string format = "text";

  CLI::App* run_cmd = app.add_subcommand("run", "Run the experiment described by a scenario file");
  run_cmd->add_option("file", file, "Scenario file")->required();
  run_cmd->add_option("--seed", seed, "Base seed (overrides the scenario)");
  run_cmd->add_option("--trials", trials, "Number of trials (overrides the scenario)");
  run_cmd->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  run_cmd->add_option("--out", out_dir, "Directory for report.txt, report.json and artifacts");
  run_cmd->add_option("--format", format, "Output format on stdout")->check(CLI::IsMember({"text", "machine"}));

  CLI::App* validate_cmd = app.add_subcommand("validate", "Check a scenario without running it");
  validate_cmd->add_option("file", file, "Scenario file")->required();

  CLI::App* list_cmd = app.add_subcommand("list", "List the available experiments");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      robmech::RunOptions opts;
      opts.seed = seed;
      opts.trials = trials;
      opts.workers = workers;
      return run(file, opts, out_dir, format);
    }
    if (*validate_cmd) return validate(file);
    if (*list_cmd) {
      for (const auto& e : robmech::experiments()) std::cout << e.name << "  " << e.doc << '\n';
      return 0;
    }
  } catch (const robmech::ParseError& e) {
    std::cerr << file << ": " << e.what() << '\n';
    return 2;
  } catch (const robmech::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
