#include "robmech/runner.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "robmech/errors.hpp"
#include "robmech/serialize.hpp"

namespace robmech {

namespace {

using nlohmann::json;

TrialOutcome run_trial(const Experiment& ex, const ExperimentContext& ctx, std::uint64_t seed) {
  TrialOutcome out;
  out.seed = seed;
  try {
    TrialResult r = ex.trial(ctx, seed);
    out.reports = std::move(r.reports);
    out.artifacts = std::move(r.artifacts);
  } catch (const PreconditionError& e) {
    out.reports.push_back(vacuous(ex.name, e.what()));
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  for (auto& rep : out.reports) rep.seed = seed;
  return out;
}

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

RunCounts RunResult::counts() const {
  RunCounts c;
  for (const auto& o : outcomes) {
    if (!o.error.empty()) ++c.errors;
    for (const auto& r : o.reports) {
      switch (r.status) {
        case CheckStatus::pass: ++c.pass; break;
        case CheckStatus::fail: ++c.fail; break;
        case CheckStatus::vacuous: ++c.vacuous; break;
        case CheckStatus::flag: ++c.flag; break;
      }
    }
  }
  return c;
}

int RunResult::exit_status() const {
  const RunCounts c = counts();
  return c.fail == 0 && c.errors == 0 ? 0 : 1;
}

RunResult run_scenario(const Scenario& sc, const RunOptions& opts) {
  require_valid(sc);
  const Experiment& ex = *find_experiment(sc.kind);
  const ExperimentContext ctx = load_context(sc);

  RunResult result;
  result.experiment = sc.kind;
  result.source = sc.source;
  result.seed = opts.seed.value_or(sc.seed);
  result.trials = opts.trials.value_or(sc.trials);
  result.outcomes.resize(result.trials);

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < result.trials; k = next++) {
      result.outcomes[k] = run_trial(ex, ctx, result.seed + k);
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(opts.workers, result.trials));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return result;
}

std::string format_text(const RunResult& r) {
  std::ostringstream os;
  os << "# experiment " << r.experiment << " seed " << r.seed << " trials " << r.trials << '\n';
  os << "# tag seed delta alpha lhs rhs slack status\n";
  for (const auto& o : r.outcomes) {
    for (const auto& rep : o.reports) {
      os << rep.tag << ' ' << rep.seed << ' ' << format_number(rep.delta) << ' ' << format_number(rep.alpha) << ' '
         << format_number(rep.lhs) << ' ' << format_number(rep.rhs) << ' ' << format_number(rep.slack) << ' '
         << to_string(rep.status) << '\n';
    }
    if (!o.error.empty()) os << "# error seed " << o.seed << ": " << o.error << '\n';
  }
  return os.str();
}

std::string format_machine(const RunResult& r) {
  const RunCounts c = r.counts();
  json doc;
  doc["experiment"] = r.experiment;
  doc["scenario"] = r.source;
  doc["seed"] = r.seed;
  doc["trials"] = r.trials;
  doc["counts"] = {{"pass", c.pass}, {"fail", c.fail}, {"vacuous", c.vacuous}, {"flag", c.flag}, {"errors", c.errors}};
  doc["exit_status"] = r.exit_status();

  struct TagSummary {
    std::size_t count = 0;
    std::map<std::string, std::size_t> status;
    double min_slack = INFINITY;
  };
  std::map<std::string, TagSummary> tags;
  json reports = json::array();
  json errors = json::array();
  for (const auto& o : r.outcomes) {
    if (!o.error.empty()) errors.push_back({{"seed", o.seed}, {"message", o.error}});
    for (const auto& rep : o.reports) {
      TagSummary& t = tags[rep.tag];
      ++t.count;
      ++t.status[to_string(rep.status)];
      if (rep.status != CheckStatus::vacuous) t.min_slack = std::min(t.min_slack, rep.slack);
      json j{{"tag", rep.tag},         {"seed", rep.seed},   {"sense", to_string(rep.sense)},
             {"lhs", number(rep.lhs)}, {"rhs", number(rep.rhs)}, {"slack", number(rep.slack)},
             {"tolerance", rep.tolerance}, {"status", to_string(rep.status)}, {"delta", number(rep.delta)},
             {"q", number(rep.q)},     {"alpha", number(rep.alpha)}, {"V", number(rep.V)},
             {"H", number(rep.H)},     {"n", rep.n}};
      if (!rep.note.empty()) j["note"] = rep.note;
      reports.push_back(std::move(j));
    }
  }
  json summary = json::object();
  for (const auto& [tag, t] : tags) {
    summary[tag] = {{"count", t.count}, {"status", t.status}, {"min_slack", number(t.min_slack)}};
  }
  doc["tags"] = std::move(summary);
  doc["errors"] = std::move(errors);
  doc["reports"] = std::move(reports);
  return doc.dump(2) + "\n";
}

void write_outputs(const RunResult& r, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& content) {
    const fs::path p = fs::path(dir) / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write '" + p.string() + "'");
    out << content;
  };
  put("report.txt", format_text(r));
  put("report.json", format_machine(r));
  for (const auto& o : r.outcomes) {
    for (const auto& a : o.artifacts) put(a.name, a.content);
  }
}

}  // namespace robmech
