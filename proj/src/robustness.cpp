#include "robmech/robustness.hpp"

#include <algorithm>
#include <cmath>

#include "robmech/errors.hpp"
#include "robmech/lp.hpp"

namespace robmech {

namespace {

Eigen::Index ix(std::size_t k) { return static_cast<Eigen::Index>(k); }

void stamp(Reports& rs, double delta, double q, double alpha, double V, double H, std::size_t n) {
  for (auto& r : rs) {
    r.delta = delta;
    if (r.q == 0) r.q = q;
    r.alpha = alpha;
    r.V = V;
    r.H = H;
    r.n = n;
  }
}

double max_marginal_tv(const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>& b) {
  if (a.size() != b.size()) throw DimensionError("marginal lists differ in length");
  double eps = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size()) throw DimensionError("marginal " + std::to_string(i) + " differs in length");
    eps = std::max(eps, total_variation(a[i], b[i]));
  }
  return eps;
}

// Empty when M is DSIC and ex-post IR, otherwise the reason it is not.
std::string dsic_ir_problem(const Mechanism& m, const Valuations& v) {
  const double regret = dsic_regret(m, v);
  if (regret > kIcTol) return "mechanism is not DSIC (regret " + std::to_string(regret) + ")";
  if (!expost_ir_check(m, v).holds()) return "mechanism is not ex-post IR";
  return {};
}

std::string bic_ir_problem(const Mechanism& m, const Valuations& v, const JointDist& d) {
  const double eps = bic_report(m, v, d).eps_star;
  if (eps > kIcTol) return "mechanism is not BIC under the design prior (eps* " + std::to_string(eps) + ")";
  if (!expost_ir_check(m, v).holds()) return "mechanism is not ex-post IR";
  return {};
}

}  // namespace

std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::vacuous: return "vacuous";
    case CheckStatus::flag: return "flag";
  }
  return "unknown";
}

std::string to_string(Sense s) {
  switch (s) {
    case Sense::ge: return "ge";
    case Sense::le: return "le";
    case Sense::eq: return "eq";
  }
  return "unknown";
}

RobustnessReport inequality(std::string tag, double lhs, Sense sense, double rhs, double tolerance) {
  RobustnessReport r;
  r.tag = std::move(tag);
  r.lhs = lhs;
  r.rhs = rhs;
  r.sense = sense;
  r.tolerance = tolerance;
  switch (sense) {
    case Sense::ge: r.slack = lhs - rhs; break;
    case Sense::le: r.slack = rhs - lhs; break;
    case Sense::eq: r.slack = -std::abs(lhs - rhs); break;
  }
  if (r.slack == 0.0) r.slack = 0.0;  // no negative zero in reports
  r.status = r.slack >= -tolerance ? CheckStatus::pass : CheckStatus::fail;
  return r;
}

RobustnessReport vacuous(std::string tag, std::string reason) {
  RobustnessReport r;
  r.tag = std::move(tag);
  r.status = CheckStatus::vacuous;
  r.note = std::move(reason);
  return r;
}

Reports check_lipschitz(const Mechanism& m, const Valuations& v, const JointDist& p, const JointDist& q,
                        const Objective& o) {
  const double delta = tv_distance(p, q);
  const double ep = objective_eval(m, v, p, o);
  const double eq = objective_eval(m, v, q, o);
  const double bound = o.range() * delta;
  Reports rs{inequality("lipschitz", ep - eq, Sense::le, bound, kExactTol),
             inequality("lipschitz_rev", eq - ep, Sense::le, bound, kExactTol)};
  stamp(rs, delta, 0, 0, o.range(), v.bound(), v.space().agents());
  return rs;
}

Reports check_dsic_robustness(const JointDist& d, const JointDist& dhat, const Valuations& v, const Objective& o,
                              const Mechanism& m_alpha, double alpha, const OptHints& hints) {
  if (!(alpha >= 0.0) || alpha > 1.0) throw ValidationError("alpha must lie in [0, 1]");
  const double delta = tv_distance(d, dhat);
  const double V = o.range();
  Reports rs;
  std::string problem = dsic_ir_problem(m_alpha, v);
  double value_d = 0.0;
  double opt_d = hints.opt_d;
  if (problem.empty()) {
    if (std::isnan(opt_d)) opt_d = optimal_mechanism(d, v, IcKind::dsic, o).value;
    value_d = objective_eval(m_alpha, v, d, o);
    if (value_d < alpha * opt_d - kLpTol) problem = "mechanism is not alpha-approximate under the design prior";
  }
  if (!problem.empty()) {
    rs.push_back(vacuous("dsic_robust", problem));
  } else {
    const double opt_hat =
        std::isnan(hints.opt_dhat) ? optimal_mechanism(dhat, v, IcKind::dsic, o).value : hints.opt_dhat;
    const double lhs = objective_eval(m_alpha, v, dhat, o);
    rs.push_back(inequality("dsic_robust", lhs, Sense::ge, alpha * opt_hat - (1.0 + alpha) * V * delta, kLpTol));
  }
  stamp(rs, delta, 0, alpha, V, v.bound(), v.space().agents());
  return rs;
}

Reports check_bic_robustness(const JointDist& d, const JointDist& dhat, const Valuations& v, const Objective& o,
                             const Mechanism& m, const std::vector<double>& q_grid) {
  require_same_space(d.space(), dhat.space(), "check_bic_robustness");
  if (d.support() != dhat.support()) {
    throw PreconditionError("BIC robustness needs the two priors to have the same support");
  }
  const double delta = tv_distance(d, dhat);
  const double H = v.bound();
  Reports rs;
  const std::string problem = bic_ir_problem(m, v, d);
  if (!problem.empty()) {
    rs.push_back(vacuous("bic_epsq", problem));
  } else {
    const ICReport ic = bic_report(m, v, dhat);
    for (double q : q_grid) {
      if (!(q > 0.0) || q > 1.0) throw ValidationError("q must lie in (0, 1]");
      RobustnessReport r = inequality("bic_epsq", ic.eps_at(q), Sense::le, 8.0 * H * delta / q, kLpTol);
      r.q = q;
      rs.push_back(r);
    }
    rs.push_back(inequality("bic_objective", objective_eval(m, v, dhat, o), Sense::ge,
                            objective_eval(m, v, d, o) - o.range() * delta, kExactTol));
  }
  stamp(rs, delta, 0, 1.0, o.range(), H, v.space().agents());
  return rs;
}

Reports check_near_product_revenue(const JointDist& d, const JointDist& dp, const Valuations& v,
                                const Mechanism& m_alpha, double alpha, const std::vector<double>& q_grid) {
  require_same_space(d.space(), dp.space(), "check_near_product_revenue");
  if (!is_product(dp)) throw PreconditionError("reference prior is not a product distribution");
  if (!(alpha >= 0.0) || alpha > 1.0) throw ValidationError("alpha must lie in [0, 1]");
  const std::size_t n = v.space().agents();
  const double H = v.bound();
  const Objective rev = Objective::revenue(n, H);
  const double V = rev.range();
  const double delta = tv_distance(d, dp);
  Reports rs;

  std::string problem = bic_ir_problem(m_alpha, v, dp);
  if (problem.empty()) {
    const double opt_p = optimal_mechanism(dp, v, IcKind::bic, rev).value;
    if (objective_eval(m_alpha, v, dp, rev) < alpha * opt_p - kLpTol) {
      problem = "mechanism is not alpha-approximate under the product prior";
    }
  }
  if (!problem.empty()) {
    rs.push_back(vacuous("near_product", problem));
    stamp(rs, delta, 0, alpha, V, H, n);
    return rs;
  }

  if (d.support() == dp.support()) {
    const ICReport ic = bic_report(m_alpha, v, d);
    for (double q : q_grid) {
      RobustnessReport r = inequality("near_product_bic", ic.eps_at(q), Sense::le, 8.0 * H * delta / q, kLpTol);
      r.q = q;
      rs.push_back(r);
    }
  } else {
    rs.push_back(vacuous("near_product_bic", "priors have different supports"));
  }

  const double opt_d = optimal_mechanism(d, v, IcKind::bic, rev).value;
  const double lhs = objective_eval(m_alpha, v, d, rev);
  const double loss = (1.0 + alpha) * V * std::sqrt(static_cast<double>(n) * std::sqrt(delta));
  const double q_star = n > 0 ? std::sqrt(delta / static_cast<double>(n)) : 0.0;
  RobustnessReport c10 = inequality("near_product_rev_c10", lhs, Sense::ge, alpha * opt_d - 10.0 * loss, kLpTol);
  RobustnessReport c1 = inequality("near_product_rev_c1", lhs, Sense::ge, alpha * opt_d - loss, kLpTol);
  if (c1.status == CheckStatus::fail) c1.status = CheckStatus::flag;
  c10.q = c1.q = q_star;
  rs.push_back(c10);
  rs.push_back(c1);
  stamp(rs, delta, 0, alpha, V, H, n);
  return rs;
}

InnerMin inner_min_distribution(const Mechanism& m, const Valuations& v, const Objective& o,
                                const std::vector<Eigen::VectorXd>& marginals) {
  const TypeSpace& s = m.space();
  if (marginals.size() != s.agents()) throw DimensionError("one marginal per agent required");
  std::size_t rows = 0;
  for (std::size_t i = 0; i < s.agents(); ++i) {
    const auto& mi = marginals[i];
    if (static_cast<std::size_t>(mi.size()) != s.types(i)) throw DimensionError("marginal has the wrong length");
    if (!mi.allFinite() || mi.minCoeff() < 0.0 || std::abs(mi.sum() - 1.0) > kMassTol) {
      throw ValidationError("marginal " + std::to_string(i) + " is not a probability vector");
    }
    rows += s.types(i);
  }
  LinearProgram lp;
  lp.maximize = false;
  lp.objective = objective_values(m, v, o);
  lp.A_eq = Eigen::MatrixXd::Zero(ix(rows), ix(s.profiles()));
  lp.b_eq.resize(ix(rows));
  std::size_t r = 0;
  for (std::size_t i = 0; i < s.agents(); ++i) {
    for (std::size_t t = 0; t < s.types(i); ++t, ++r) {
      for (std::size_t o2 = 0; o2 < s.others(i); ++o2) lp.A_eq(ix(r), ix(s.compose(i, t, o2))) = 1.0;
      lp.b_eq(ix(r)) = marginals[i](ix(t));
    }
  }
  const LpSolution sol = solve_lp(lp);
  if (!sol.optimal()) throw LpError("transportation LP ended with status " + to_string(sol.status));
  JointDist worst = JointDist::from_weights(s, sol.x.cwiseMax(0.0));
  return InnerMin{worst, sol.value};
}

SynthesizedMechanism maxmin_mechanism(const std::vector<Eigen::VectorXd>& marginals, const Valuations& v,
                                      const Objective& o) {
  const TypeSpace& s = v.space();
  if (marginals.size() != s.agents()) throw DimensionError("one marginal per agent required");
  std::vector<std::size_t> offset(s.agents());
  std::size_t extra = 0;
  for (std::size_t i = 0; i < s.agents(); ++i) {
    if (static_cast<std::size_t>(marginals[i].size()) != s.types(i)) throw DimensionError("marginal has the wrong length");
    offset[i] = extra;
    extra += s.types(i);
  }
  MechanismLayout L;
  LinearProgram lp = mechanism_constraints(v, IcKind::dsic, nullptr, extra, &L);
  for (std::size_t i = 0; i < s.agents(); ++i) {
    for (std::size_t t = 0; t < s.types(i); ++t) lp.objective(L.extra_column(offset[i] + t)) = marginals[i](ix(t));
  }
  // Dual of the inner minimization: sum_i y_{i, t_i} <= O(t, M(t)) for every t.
  const Eigen::Index old_rows = lp.A_le.rows();
  lp.A_le.conservativeResize(old_rows + ix(s.profiles()), Eigen::NoChange);
  lp.b_le.conservativeResize(old_rows + ix(s.profiles()));
  lp.A_le.bottomRows(ix(s.profiles())).setZero();
  for (std::size_t t = 0; t < s.profiles(); ++t) {
    const Eigen::Index r = old_rows + ix(t);
    for (std::size_t i = 0; i < s.agents(); ++i) lp.A_le(r, L.extra_column(offset[i] + s.type_of(t, i))) = 1.0;
    const ObjectiveRow row = objective_row(o, v, t);
    for (std::size_t a = 0; a < L.allocations; ++a) lp.A_le(r, L.x(t, a)) -= row.allocation(ix(a));
    for (std::size_t i = 0; i < L.agents; ++i) lp.A_le(r, L.p(t, i)) -= row.payment(ix(i));
    lp.b_le(r) = 0.0;
  }
  LpSolution sol = solve_lp(lp);
  if (!sol.optimal()) throw LpError("max-min LP ended with status " + to_string(sol.status));
  SynthesizedMechanism out;
  out.mechanism = mechanism_from_solution(v, L, sol.x);
  out.value = sol.value;
  out.certificate = std::move(sol);
  out.call = "maxmin_mechanism(" + o.name() + ")";
  return out;
}

Reports check_marginal_robustness(const std::vector<Eigen::VectorXd>& marginals,
                                  const std::vector<Eigen::VectorXd>& shifted, const Valuations& v,
                                  const Objective& o, const Mechanism& m_alpha, double alpha) {
  if (!(alpha >= 0.0) || alpha > 1.0) throw ValidationError("alpha must lie in [0, 1]");
  const std::size_t n = v.space().agents();
  const double eps = max_marginal_tv(marginals, shifted);
  const double V = o.range();
  Reports rs;
  std::string problem = dsic_ir_problem(m_alpha, v);
  double base = 0.0;
  if (problem.empty()) {
    base = inner_min_distribution(m_alpha, v, o, marginals).value;
    if (base < alpha * maxmin_mechanism(marginals, v, o).value - kLpTol) {
      problem = "mechanism is not alpha-approximate in the worst case over the design marginals";
    }
  }
  if (!problem.empty()) {
    rs.push_back(vacuous("marginal_robust", problem));
  } else {
    const double lhs = inner_min_distribution(m_alpha, v, o, shifted).value;
    const double loss = static_cast<double>(n) * eps * V;
    const double opt_shift = maxmin_mechanism(shifted, v, o).value;
    rs.push_back(inequality("marginal_robust", lhs, Sense::ge, alpha * opt_shift - (1.0 + alpha) * loss, kLpTol));
    rs.push_back(inequality("marginal_transport", lhs, Sense::ge, base - loss, kLpTol));
  }
  stamp(rs, eps, 0, alpha, V, v.bound(), n);
  return rs;
}

Reports check_prophet_robustness(const SingleItemMarket& market, const Mechanism& m, const JointDist& d,
                                 const JointDist& dhat) {
  const Valuations v = market.valuations();
  const std::size_t n = v.space().agents();
  const double delta = tv_distance(d, dhat);
  const double H = v.bound();
  Reports rs;
  const std::string problem = dsic_ir_problem(m, v);
  if (!problem.empty()) {
    rs.push_back(vacuous("prophet_gap", problem));
  } else {
    // Single-item welfare lies in [0, H].
    const Objective w = Objective::welfare(n, H);
    const double a = objective_eval(m, v, d, w);
    const double b = objective_eval(m, v, dhat, w);
    rs.push_back(inequality("prophet_gap", a, Sense::ge, b - H * delta, kExactTol));
    rs.push_back(inequality("prophet_gap_rev", b, Sense::ge, a - H * delta, kExactTol));
  }
  stamp(rs, delta, 0, 0, H, H, n);
  return rs;
}

Reports check_prophet_product(const SingleItemMarket& market, const Mechanism& m,
                              const std::vector<Eigen::VectorXd>& marginals,
                              const std::vector<Eigen::VectorXd>& shifted) {
  const TypeSpace s = market.space();
  const JointDist d = JointDist::product(s, marginals);
  const JointDist dhat = JointDist::product(s, shifted);
  const double eps = max_marginal_tv(marginals, shifted);
  const double n = static_cast<double>(s.agents());
  Reports rs = check_prophet_robustness(market, m, d, dhat);
  const double H = market.valuations().bound();
  rs.push_back(inequality("prophet_product_tv", tv_distance(d, dhat), Sense::le, n * eps, kExactTol));
  if (rs.front().status != CheckStatus::vacuous) {
    const Objective w = Objective::welfare(s.agents(), H);
    const Valuations v = market.valuations();
    const double gap = std::abs(objective_eval(m, v, d, w) - objective_eval(m, v, dhat, w));
    rs.push_back(inequality("prophet_product", gap, Sense::le, H * n * eps, kExactTol));
  }
  for (std::size_t k = rs.size() - 2; k < rs.size(); ++k) {
    rs[k].delta = eps;
    rs[k].V = H;
    rs[k].H = H;
    rs[k].n = s.agents();
  }
  return rs;
}

Reports check_simple_vs_optimal(const AdditiveInstance& inst) {
  const double delta = tv_distance(inst.dist, product_of_marginals(inst.dist));
  const AdditiveProblem prob = additive_problem(inst);
  const double H = prob.valuations.bound();
  const double rev = optimal_additive(inst).value;
  const double simple = std::max(srev(inst).revenue, brev(inst).revenue);
  Reports rs{inequality("simple_vs_optimal", simple, Sense::ge, rev / 6.0 - 7.0 * H * delta / 6.0, kLpTol)};
  stamp(rs, delta, 0, 1.0 / 6.0, 2.0 * H, H, inst.items());
  return rs;
}

GapSummary gap_certificate(const AdditiveInstance& inst) {
  GapSummary g;
  const AdditiveProblem prob = additive_problem(inst);
  const double H = prob.valuations.bound();
  const double m = static_cast<double>(inst.items());
  g.rev = optimal_additive(inst).value;
  g.srev = srev(inst).revenue;
  g.brev = brev(inst).revenue;
  g.V = 2.0 * H;
  g.proxy_distance = tv_distance(inst.dist, product_of_marginals(inst.dist));
  g.product_factor = g.proxy_distance / (m + 1.0);
  g.bundle_gap = g.rev >= 2.0 * m * g.brev && g.rev > 0.0;
  g.separate_gap = g.rev >= 2.0 * (1.0 + std::log2(m)) * g.srev && g.rev > 0.0;
  const double implied = g.rev / (4.0 * g.V);
  auto add = [&](const char* tag, bool triggered) {
    if (!triggered) {
      g.reports.push_back(vacuous(tag, "no large revenue gap"));
    } else {
      // The proxy upper-bounds the distance to the nearest product prior,
      // so it must clear the implied lower bound too.
      g.reports.push_back(inequality(tag, g.proxy_distance, Sense::ge, implied, kLpTol));
    }
  };
  add("gap_bundle", g.bundle_gap);
  add("gap_separate", g.separate_gap);
  stamp(g.reports, g.proxy_distance, 0, 0, g.V, H, inst.items());
  return g;
}

}  // namespace robmech
