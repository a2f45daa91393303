// Runs the bundled scenarios and prints one pass/fail line per acceptance
// criterion. Exit status is nonzero when any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "robmech/errors.hpp"
#include "robmech/runner.hpp"
#include "robmech/scenario.hpp"

using namespace robmech;

namespace {

struct Suite {
  std::string file;
  RunResult result;
  double seconds = 0;
};

Suite run_suite(const std::string& file, std::size_t workers) {
  const Scenario sc = load_scenario((std::filesystem::path(ROBMECH_SCENARIO_DIR) / file).string());
  RunOptions opts;
  opts.workers = workers;
  const auto start = std::chrono::steady_clock::now();
  Suite s{file, run_scenario(sc, opts), 0.0};
  s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return s;
}

template <class F>
void for_reports(const Suite& s, F&& f) {
  for (const auto& o : s.result.outcomes) {
    for (const auto& r : o.reports) f(r);
  }
}

// Collects the reasons a criterion fails; empty means pass.
class Verdict {
 public:
  void require(bool ok, const std::string& why) {
    if (!ok) problems_.push_back(why);
  }

  // Every trial ran, nothing failed, nothing was vacuous, nothing threw.
  void clean(const Suite& s, std::size_t trials) {
    const RunCounts c = s.result.counts();
    require(s.result.trials == trials && s.result.outcomes.size() == trials,
            s.file + ": expected " + std::to_string(trials) + " trials");
    require(s.result.exit_status() == 0, s.file + ": exit status " + std::to_string(s.result.exit_status()));
    require(c.fail == 0, s.file + ": " + std::to_string(c.fail) + " failed checks");
    require(c.vacuous == 0, s.file + ": " + std::to_string(c.vacuous) + " vacuous checks");
    require(c.errors == 0, s.file + ": " + std::to_string(c.errors) + " trial errors");
    require(c.pass > 0, s.file + ": no checks ran");
  }

  void min_slack(const Suite& s, const std::string& tag, double floor) {
    double lo = std::numeric_limits<double>::infinity();
    std::size_t seen = 0;
    for_reports(s, [&](const RobustnessReport& r) {
      if (r.tag != tag) return;
      lo = std::min(lo, r.slack);
      ++seen;
    });
    require(seen > 0, s.file + ": no '" + tag + "' reports");
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s: min slack of %s is %.3g < %.3g", s.file.c_str(), tag.c_str(), lo, floor);
    require(lo >= floor, buf);
  }

  void within(const Suite& s, double seconds) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s: took %.1f s (limit %.0f s)", s.file.c_str(), s.seconds, seconds);
    require(s.seconds <= seconds, buf);
  }

  bool passed() const { return problems_.empty(); }
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

// Scenario files used by the criteria, run once each with several workers;
// criterion 11 re-runs them.
const std::vector<std::string> kSuites{
    "tv_coherence.scn",        "lipschitz.scn",           "pointmass_tightness.scn",
    "two_bidder_tightness.scn", "dsic_robustness.scn",     "conditional_tv.scn",
    "bic_robustness.scn",      "dsic_extend.scn",         "bic_extend.scn",
    "epsq_reduction.scn",      "moving_mass.scn",         "marginal_robustness.scn",
    "prophet.scn",             "prophet_product.scn",     "simple_vs_optimal.scn",
    "mrfgap_k01.scn",          "mrfgap_k025.scn",         "mrf_kl.scn",
    "mrf_ratio.scn",
};

constexpr std::size_t kWorkers = 3;

std::map<std::string, Suite> g_runs;

const Suite& suite(const std::string& file) {
  auto it = g_runs.find(file);
  if (it == g_runs.end()) it = g_runs.emplace(file, run_suite(file, kWorkers)).first;
  return it->second;
}

Verdict crit_tv_coherence() {
  Verdict v;
  const Suite& s = suite("tv_coherence.scn");
  v.clean(s, 1000);
  for (const char* tag : {"tv_distance", "tv_coupling", "tv_witness", "tv_coupling_witness", "tv_coupling_marginals",
                          "tv_event_sup"}) {
    v.min_slack(s, tag, -1e-10);
  }
  v.within(s, 10);
  return v;
}

Verdict crit_lipschitz() {
  Verdict v;
  const Suite& s = suite("lipschitz.scn");
  v.clean(s, 1000);
  v.min_slack(s, "lipschitz", -1e-9);
  v.min_slack(s, "lipschitz_rev", -1e-9);
  v.min_slack(s, "lipschitz_equality", -1e-9);
  v.within(s, 10);
  return v;
}

Verdict crit_tightness() {
  Verdict v;
  const Suite& point = suite("pointmass_tightness.scn");
  v.clean(point, 1);
  std::map<double, double> under_p;
  std::map<double, double> under_q;
  for_reports(point, [&](const RobustnessReport& r) {
    if (r.tag == "pointmass_rev_p") under_p[r.delta] = r.lhs;
    if (r.tag == "pointmass_rev_q") under_q[r.delta] = r.lhs;
  });
  const double v0 = 1.0;
  for (double delta : {0.05, 0.1, 0.3}) {
    v.require(under_p.count(delta) && std::abs(under_p[delta] - v0) <= 1e-12,
              "posted price revenue under P is not V0 at delta " + std::to_string(delta));
    v.require(under_q.count(delta) && std::abs(under_q[delta] - (1 - delta) * v0) <= 1e-12,
              "posted price revenue under Q is not (1 - delta) V0 at delta " + std::to_string(delta));
  }

  const Suite& two = suite("two_bidder_tightness.scn");
  v.clean(two, 1);
  std::map<double, double> design;
  std::map<double, double> shifted;
  for_reports(two, [&](const RobustnessReport& r) {
    if (r.tag == "two_bidder_eps_design") design[r.delta] = r.lhs;
    if (r.tag == "two_bidder_eps_shifted") shifted[r.delta] = r.lhs;
  });
  for (double eps : {0.05, 0.1}) {
    v.require(design.count(eps) && std::abs(design[eps]) <= 1e-12,
              "eps* under the uniform prior is not 0 (eps " + std::to_string(eps) + ")");
    v.require(shifted.count(eps) && std::abs(shifted[eps] - eps) <= 1e-12,
              "eps* under the shifted prior is not eps (eps " + std::to_string(eps) + ")");
  }
  return v;
}

Verdict crit_dsic_robustness() {
  Verdict v;
  const Suite& s = suite("dsic_robustness.scn");
  v.clean(s, 200);
  v.min_slack(s, "dsic_robust", -1e-6);
  v.within(s, 300);
  return v;
}

Verdict crit_conditional_tv() {
  Verdict v;
  const Suite& s = suite("conditional_tv.scn");
  v.clean(s, 200);
  // One report per agent and q level; the levels are 0.1, 0.2, ..., 0.9.
  std::set<double> levels;
  for_reports(s, [&](const RobustnessReport& r) { levels.insert(r.rhs); });
  v.require(levels.size() == 9 && *levels.begin() == 0.1 && *levels.rbegin() == 0.9,
            "expected the q grid 0.1, ..., 0.9, got " + std::to_string(levels.size()) + " levels");
  v.min_slack(s, "conditional_tv", 0.0);
  return v;
}

Verdict crit_bic_robustness() {
  Verdict v;
  const Suite& s = suite("bic_robustness.scn");
  v.clean(s, 200);
  v.min_slack(s, "bic_epsq", -1e-6);
  v.min_slack(s, "bic_objective", -1e-9);
  return v;
}

Verdict crit_transforms() {
  Verdict v;
  const Suite& dsic = suite("dsic_extend.scn");
  v.clean(dsic, 100);
  for (const char* tag : {"dsic_extend_ic", "dsic_extend_ir", "dsic_extend_inside"}) v.min_slack(dsic, tag, -1e-9);
  const Suite& bic = suite("bic_extend.scn");
  v.clean(bic, 100);
  for (const char* tag : {"bic_extend_rev_design", "bic_extend_regret_design", "bic_extend_ir"}) {
    v.min_slack(bic, tag, -1e-6);
  }
  const Suite& epsq = suite("epsq_reduction.scn");
  v.clean(epsq, 100);
  v.min_slack(epsq, "epsq_revenue", -1e-6);
  return v;
}

Verdict crit_marginals() {
  Verdict v;
  const Suite& moving = suite("moving_mass.scn");
  v.clean(moving, 200);
  v.min_slack(moving, "moving_mass_marginals", -1e-12);
  v.min_slack(moving, "moving_mass_tv", -1e-12);
  const Suite& maxmin = suite("marginal_robustness.scn");
  v.clean(maxmin, 100);
  v.min_slack(maxmin, "marginal_robust", -1e-6);
  v.require(moving.seconds + maxmin.seconds <= 600, "marginal suites exceed 10 minutes");
  return v;
}

Verdict crit_prophet() {
  Verdict v;
  const Suite& s = suite("prophet.scn");
  v.clean(s, 200);
  v.min_slack(s, "prophet_gap", -1e-9);
  const Suite& p = suite("prophet_product.scn");
  v.clean(p, 200);
  v.min_slack(p, "prophet_product", -1e-9);
  return v;
}

Verdict crit_correlated() {
  Verdict v;
  const Suite& svo = suite("simple_vs_optimal.scn");
  v.clean(svo, 100);
  v.min_slack(svo, "simple_vs_optimal", -1e-6);

  const std::vector<std::tuple<std::string, double, double>> gap{
      {"mrfgap_k01.scn", 0.018, 0.5756}, {"mrfgap_k025.scn", 0.09375, 0.3466}};
  for (const auto& [file, tv, delta] : gap) {
    const Suite& s = suite(file);
    v.clean(s, 1);
    bool tv_ok = false;
    bool delta_ok = false;
    for_reports(s, [&](const RobustnessReport& r) {
      if (r.tag == "mrfgap_tv") tv_ok = std::abs(r.lhs - tv) <= 1e-12;
      if (r.tag == "mrfgap_delta") delta_ok = std::abs(r.rhs - delta) <= 5e-5;
    });
    v.require(tv_ok, file + ": TV to the product is not " + std::to_string(tv));
    v.require(delta_ok, file + ": Delta bound is not " + std::to_string(delta));
    v.min_slack(s, "mrfgap_sandwich_lower", 0.0);
    v.min_slack(s, "mrfgap_sandwich_upper", 0.0);
  }

  const Suite& kl = suite("mrf_kl.scn");
  v.clean(kl, 100);
  v.min_slack(kl, "mrf_tv", -1e-9);
  v.min_slack(kl, "mrf_kl", -1e-9);
  const Suite& ratio = suite("mrf_ratio.scn");
  v.clean(ratio, 100);
  v.min_slack(ratio, "mrf_ratio_lower", -1e-9);
  v.min_slack(ratio, "mrf_ratio_upper", -1e-9);
  return v;
}

Verdict crit_determinism() {
  Verdict v;
  for (const auto& file : kSuites) {
    const Suite one = run_suite(file, 1);
    const Suite& many = suite(file);
    v.require(format_text(one.result) == format_text(many.result), file + ": text reports differ across workers");
    v.require(format_machine(one.result) == format_machine(many.result),
              file + ": machine reports differ across workers");
  }
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"TV coherence: half-L1, coupling, witness and event supremum agree", crit_tv_coherence},
      {"objective Lipschitz bound and its tight witness", crit_lipschitz},
      {"posted-price and two-bidder tightness examples", crit_tightness},
      {"DSIC robustness on LP-certified instances", crit_dsic_robustness},
      {"conditional TV exceedance at most q", crit_conditional_tv},
      {"BIC robustness on same-support priors", crit_bic_robustness},
      {"DSIC extension, BIC extension and (eps, q) reduction", crit_transforms},
      {"moving mass and max-min robustness under shifted marginals", crit_marginals},
      {"posted-price welfare under nearby and product priors", crit_prophet},
      {"simple vs optimal, correlated two-item numbers and MRF bounds", crit_correlated},
      {"byte-identical reports across worker counts", crit_determinism},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    std::printf("criterion %2zu %s  %s\n", k + 1, v.passed() ? "PASS" : "FAIL", criteria[k].first.c_str());
    for (const auto& p : v.problems()) std::printf("             %s\n", p.c_str());
    std::fflush(stdout);
    failed += v.passed() ? 0 : 1;
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
