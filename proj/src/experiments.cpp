#include "robmech/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "robmech/errors.hpp"
#include "robmech/generate.hpp"
#include "robmech/serialize.hpp"
#include "robmech/synth.hpp"
#include "robmech/transforms.hpp"

namespace robmech {

namespace {

using gen::Rng;

Eigen::Index ix(std::size_t k) { return static_cast<Eigen::Index>(k); }

std::size_t count(const Scenario& sc, const std::string& key, std::size_t fallback) {
  return static_cast<std::size_t>(sc.number(key, static_cast<double>(fallback)));
}

void stamp_delta(Reports& rs, double delta) {
  for (auto& r : rs) r.delta = delta;
}

void append(Reports& to, Reports from) {
  for (auto& r : from) to.push_back(std::move(r));
}

Objective pick_objective(const Scenario& sc, Rng& rng, std::size_t agents, double bound) {
  std::string kind = sc.text("objective", "mixed");
  if (kind == "mixed") kind = std::bernoulli_distribution(0.5)(rng) ? "revenue" : "welfare";
  return kind == "revenue" ? Objective::revenue(agents, bound) : Objective::welfare(agents, bound);
}

// Draw alpha (unless fixed) and a mixing weight lambda >= alpha, so that
// lambda M + (1 - lambda) null is alpha-approximate whenever M is optimal.
std::pair<double, double> alpha_and_mix(const Scenario& sc, Rng& rng) {
  const double alpha = sc.has("alpha") ? sc.number("alpha", 1.0) : gen::uniform(rng, 0.5, 1.0);
  return {alpha, alpha + (1.0 - alpha) * gen::uniform(rng, 0.0, 1.0)};
}

Valuations random_valuations(const Scenario& sc, Rng& rng, const TypeSpace& s) {
  const std::size_t allocs = gen::uniform_index(rng, 2, count(sc, "allocations", 3));
  return gen::valuations(rng, s, allocs, sc.number("bound", 1.0));
}

// Space whose participating profiles number at least two, so that
// same-support perturbations exist.
TypeSpace support_space(const Scenario& sc, Rng& rng) {
  for (;;) {
    TypeSpace s = gen::space(rng, gen::uniform_index(rng, 1, count(sc, "agents", 2)), count(sc, "types", 3));
    std::size_t inside = 1;
    for (std::size_t i = 0; i < s.agents(); ++i) inside *= s.types(i) - 1;
    if (inside >= 2) return s;
  }
}

double max_abs_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

// ---------------------------------------------------------------------------

TrialResult tv_coherence(const ExperimentContext& ctx, std::uint64_t seed) {
  const Scenario& sc = *ctx.scenario;
  Rng rng(seed);
  const std::size_t limit = count(sc, "points", 64);
  TypeSpace s;
  do {
    s = gen::space(rng, gen::uniform_index(rng, 1, 3), 4);
  } while (s.profiles() > limit);

  auto draw = [&] {
    Eigen::VectorXd w = gen::simplex(rng, s.profiles());
    std::bernoulli_distribution drop(0.3);
    for (Eigen::Index k = 0; k < w.size(); ++k) {
      if (drop(rng)) w(k) = 0.0;
    }
    if (w.sum() == 0.0) w(0) = 1.0;
    return JointDist::from_weights(s, w);
  };
  const JointDist p = draw();
  const JointDist q = draw();

  const double half_l1 = 0.5 * (p.mass() - q.mass()).lpNorm<1>();
  const Coupling c = optimal_coupling(p, q);
  const DualWitness f = dual_witness(p, q);
  Reports rs{inequality("tv_distance", tv_distance(p, q), Sense::eq, half_l1, kCrossTol),
             inequality("tv_coupling", c.disagreement(), Sense::eq, half_l1, kCrossTol),
             inequality("tv_witness", f.gap(p, q), Sense::eq, half_l1, kCrossTol),
             inequality("tv_coupling_witness", c.disagreement(), Sense::eq, f.gap(p, q), kCrossTol)};
  const double marg_err = std::max(max_abs_diff(c.first_marginal(), p.mass()), max_abs_diff(c.second_marginal(), q.mass()));
  rs.push_back(inequality("tv_coupling_marginals", marg_err, Sense::eq, 0.0, kMassTol));

  if (s.profiles() <= 10) {
    double sup = 0.0;
    const std::size_t k = s.profiles();
    for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
      double gap = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        if (mask >> j & 1U) gap += p[j] - q[j];
      }
      sup = std::max(sup, gap);
    }
    rs.push_back(inequality("tv_event_sup", sup, Sense::eq, half_l1, kCrossTol));
  }
  stamp_delta(rs, half_l1);
  return {rs, {}};
}

TrialResult lipschitz(const ExperimentContext& ctx, std::uint64_t seed) {
  const Scenario& sc = *ctx.scenario;
  Rng rng(seed);
  if (ctx.prior && ctx.perturbed && ctx.valuations && ctx.mechanism) {
    const Objective o = pick_objective(sc, rng, ctx.valuations->space().agents(), ctx.valuations->bound());
    return {check_lipschitz(*ctx.mechanism, *ctx.valuations, *ctx.prior, *ctx.perturbed, o), {}};
  }
  const TypeSpace s = gen::space(rng, gen::uniform_index(rng, 1, count(sc, "agents", 2)), count(sc, "types", 3));
  const Valuations v = random_valuations(sc, rng, s);
  const Mechanism m = gen::ir_mechanism(rng, v);
  const JointDist p = gen::any_dist(rng, s);
  const JointDist q = gen::any_dist(rng, s);
  const Objective o = pick_objective(sc, rng, s.agents(), v.bound());
  Reports rs = check_lipschitz(m, v, p, q, o);

  // Objective equal to V times the dual witness: the bound is attained.
  const double V = o.range();
  const DualWitness f = dual_witness(p, q);
  Eigen::MatrixXd table(ix(s.profiles()), ix(v.allocations()));
  table.colwise() = V * f.value;
  const Objective witness = Objective::custom(table, 0.0, -V / 2.0, V / 2.0);
  const double gap = objective_eval(m, v, p, witness) - objective_eval(m, v, q, witness);
  RobustnessReport eq = inequality("lipschitz_equality", gap, Sense::eq, V * tv_distance(p, q), kExactTol);
  eq.delta = tv_distance(p, q);
  eq.V = V;
  eq.H = v.bound();
  eq.n = s.agents();
  rs.push_back(eq);
  return {rs, {}};
}

TrialResult pointmass(const ExperimentContext& ctx, std::uint64_t) {
  const Scenario& sc = *ctx.scenario;
  const double value = sc.number("value", 1.0);
  const std::vector<double> deltas =
      sc.numbers("delta_grid", sc.has("delta") ? std::vector<double>{sc.number("delta", 0.1)}
                                               : std::vector<double>{0.05, 0.1, 0.3});
  const SingleItemMarket market{{{value}}};
  const Valuations v = market.valuations();
  const TypeSpace s = market.space();
  const JointDist p = JointDist::point_mass(s, 1);
  const Mechanism m = posted_prices(market, {value}, {0});
  const Objective rev = Objective::revenue(1, v.bound());
  Reports rs;
  for (double delta : deltas) {
    const JointDist q = shift_mass(p, 1, 0, delta);
    Reports block{inequality("pointmass_rev_p", objective_eval(m, v, p, rev), Sense::eq, value, 1e-12),
                  inequality("pointmass_rev_q", objective_eval(m, v, q, rev), Sense::eq, (1.0 - delta) * value, 1e-12)};
    stamp_delta(block, delta);
    append(block, check_lipschitz(m, v, p, q, rev));
    append(block, check_dsic_robustness(p, q, v, rev, m, 1.0));
    append(rs, std::move(block));
  }
  return {rs, {}};
}

// Two identical bidders with values {1, 2}; bidder 0 wins on a bid of
// 2 (paying 1.5) or when both bid 1 (paying 1), otherwise bidder 1 wins at 2.
Mechanism two_bidder_mechanism(const SingleItemMarket& market) {
  const TypeSpace s = market.space();
  Eigen::MatrixXd lottery = Eigen::MatrixXd::Zero(ix(s.profiles()), 3);
  Eigen::MatrixXd pay = Eigen::MatrixXd::Zero(ix(s.profiles()), 2);
  for (std::size_t t = 0; t < s.profiles(); ++t) {
    const std::size_t a = s.type_of(t, 0);
    const std::size_t b = s.type_of(t, 1);
    if (a == 2) {
      lottery(ix(t), 1) = 1.0;
      pay(ix(t), 0) = 1.5;
    } else if (a == 1 && b != 2) {
      lottery(ix(t), 1) = 1.0;
      pay(ix(t), 0) = 1.0;
    } else if (b != 0) {
      lottery(ix(t), 2) = 1.0;
      pay(ix(t), 1) = market.value(1, b);
    } else {
      lottery(ix(t), 0) = 1.0;
    }
  }
  return Mechanism(s, 0, 2.0, std::move(lottery), std::move(pay));
}

TrialResult two_bidder(const ExperimentContext& ctx, std::uint64_t) {
  const Scenario& sc = *ctx.scenario;
  const std::vector<double> grid =
      sc.numbers("eps_grid", sc.has("eps") ? std::vector<double>{sc.number("eps", 0.1)}
                                           : std::vector<double>{0.05, 0.1});
  const SingleItemMarket market{{{1.0, 2.0}, {1.0, 2.0}}};
  const Valuations v = market.valuations();
  const TypeSpace s = market.space();
  const Mechanism m = two_bidder_mechanism(market);
  const Objective rev = Objective::revenue(2, v.bound());
  Eigen::Vector3d even(0.0, 0.5, 0.5);
  const JointDist d = JointDist::product(s, {even, even});
  Reports rs;
  for (double e : grid) {
    if (!(e >= 0.0) || e > 0.5) throw ValidationError("eps must lie in [0, 1/2] for the two-bidder prior");
    const JointDist dhat = JointDist::product(s, {even, Eigen::Vector3d(0.0, 0.5 + e, 0.5 - e)});
    const ICReport shifted = bic_report(m, v, dhat);
    Reports block{inequality("two_bidder_eps_design", bic_report(m, v, d).eps_star, Sense::eq, 0.0, 1e-12),
                  inequality("two_bidder_eps_shifted", shifted.eps_star, Sense::eq, e, 1e-12),
                  inequality("two_bidder_tv", tv_distance(d, dhat), Sense::eq, e, 1e-12)};
    // With q = 0 the reduction keeps every type and must return M itself.
    const EpsqReduction red = reduce_epsq_bic(m, v, dhat, shifted.eps_star, 0.0);
    const double diff = std::max((red.extension.mechanism.lottery() - m.lottery()).cwiseAbs().maxCoeff(),
                                 (red.extension.mechanism.payments() - m.payments()).cwiseAbs().maxCoeff());
    block.push_back(inequality("two_bidder_reduction_identity", diff, Sense::eq, 0.0, 0.0));
    stamp_delta(block, e);
    append(block, check_bic_robustness(d, dhat, v, rev, m));
    append(rs, std::move(block));
  }
  return {rs, {}};
}

TrialResult dsic_robustness(const ExperimentContext& ctx, std::uint64_t seed) {
  const Scenario& sc = *ctx.scenario;
  Rng rng(seed);
  if (ctx.prior && ctx.perturbed && ctx.valuations) {
    const Valuations& v = *ctx.valuations;
    const Objective o = pick_objective(sc, rng, v.space().agents(), v.bound());
    const double alpha = sc.number("alpha", 1.0);
    OptHints hints;
    Mechanism m;
    if (ctx.mechanism) {
      m = *ctx.mechanism;
    } else {
      const SynthesizedMechanism opt = optimal_mechanism(*ctx.prior, v, IcKind::dsic, o);
      hints.opt_d = opt.value;
      m = mix_with_null(opt.mechanism, alpha);
    }
    return {check_dsic_robustness(*ctx.prior, *ctx.perturbed, v, o, m, alpha, hints), {}};
  }
  const TypeSpace s = gen::space(rng, gen::uniform_index(rng, 1, count(sc, "agents", 3)), count(sc, "types", 4));
  const Valuations v = random_valuations(sc, rng, s);
  const JointDist d = std::bernoulli_distribution(0.5)(rng) ? gen::participating_dist(rng, s) : gen::any_dist(rng, s);
  const double delta = gen::uniform(rng, 0.0, sc.number("delta", 0.3));
  const JointDist dhat = perturb_within_tv(d, delta, PerturbMode::free, rng());
  const Objective o = pick_objective(sc, rng, s.agents(), v.bound());
  const auto [alpha, lambda] = alpha_and_mix(sc, rng);
  const SynthesizedMechanism opt = optimal_mechanism(d, v, IcKind::dsic, o);
  OptHints hints;
  hints.opt_d = opt.value;
  return {check_dsic_robustness(d, dhat, v, o, mix_with_null(opt.mechanism, lambda), alpha, hints), {}};
}

TrialResult conditional_tv(const ExperimentContext& ctx, std::uint64_t seed) {
  const Scenario& sc = *ctx.scenario;
  Rng rng(seed);
  const std::vector<double> grid = sc.numbers("q_grid", {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9});
  const TypeSpace s = gen::space(rng, gen::uniform_index(rng, 2, count(sc, "agents", 3)), count(sc, "types", 3));
  const JointDist p = gen::any_dist(rng, s);
  const JointDist q = perturb_within_tv(p, gen::uniform(rng, 0.0, sc.number("delta", 0.5)), PerturbMode::free, rng());
  Reports rs;
  for (std::size_t i = 0; i < s.agents(); ++i) {
    for (double level : grid) {
      const ConditionalTvReport c = verify_conditional_tv(p, q, i, level);
      RobustnessReport r = inequality("conditional_tv", c.exceedance, Sense::le, level, kMassTol);
      r.q = level;
      r.delta = c.joint_tv;
      r.n = s.agents();
      rs.push_back(r);
    }
  }
  return {rs, {}};
}

TrialResult bic_robustness(const ExperimentContext& ctx, std::uint64_t seed) {
  const Scenario& sc = *ctx.scenario;
  Rng rng(seed);
  const std::vector<double> grid = sc.numbers("q_grid", kDefaultQGrid);
  if (ctx.prior && ctx.perturbed && ctx.valuations) {
    const Valuations& v = *ctx.valuations;
    const Objective o = pick_objective(sc, rng, v.space().agents(), v.bound());
    const Mechanism m =
        ctx.mechanism ? *ctx.mechanism : optimal_mechanism(*ctx.prior, v, IcKind::bic, o).mechanism;
    return {check_bic_robustness(*ctx.prior, *ctx.perturbed, v, o, m, grid), {}};
  }
  const TypeSpace s = support_space(sc, rng);
  const Valuations v = random_valuations(sc, rng, s);
  const JointDist d = gen::participating_dist(rng, s);
  const double delta = gen::uniform(rng, 0.0, sc.number("delta", 0.2));
  const JointDist dhat = perturb_within_tv(d, delta, PerturbMode::same_support, rng());
  const Objective o = pick_objective(sc, rng, s.agents(), v.bound());
  const Mechanism m = optimal_mechanism(d, v, IcKind::bic, o).mechanism;
  return {check_bic_robustness(d, dhat, v, o, m, grid), {}};
}

TrialResult weak_dependence(const ExperimentContext& ctx, std::uint64_t seed) {
  const Scenario& sc = *ctx.scenario;
  Rng rng(seed);
  const TypeSpace s = gen::space(rng, gen::uniform_index(rng, 2, count(sc, "agents", 3)), count(sc, "types", 3));
  std::vector<Eigen::VectorXd> marg;
  for (std::size_t i = 0; i < s.agents(); ++i) marg.push_back(gen::simplex(rng, s.types(i)));
  const JointDist dp = JointDist::product(s, marg);
  const JointDist dhat = perturb_within_tv(dp, gen::uniform(rng, 0.0, sc.number("delta", 0.3)), PerturbMode::free, rng());
  const WeakDependenceReport w = verify_weak_dependence(dhat, dp);
  RobustnessReport r = inequality("weak_dependence", w.lhs, Sense::le, w.rhs, kCrossTol);
  r.delta = w.epsilon;
  r.n = s.agents();
  return {{r}, {}};
}

TrialResult near_product_revenue(const ExperimentContext& ctx, std::uint64_t seed) {
  const Scenario& sc = *ctx.scenario;
  Rng rng(seed);
  const TypeSpace s = support_space(sc, rng);
  const Valuations v = random_valuations(sc, rng, s);
  const JointDist dp = JointDist::product(s, gen::participating_marginals(rng, s));
  const double delta = gen::uniform(rng, 0.0, sc.number("delta", 0.05));
  const JointDist d = perturb_within_tv(dp, delta, PerturbMode::same_support, rng());
  const auto [alpha, lambda] = alpha_and_mix(sc, rng);
  const Objective rev = Objective::revenue(s.agents(), v.bound());
  const Mechanism m = mix_with_null(optimal_mechanism(dp, v, IcKind::bic, rev).mechanism, lambda);
  return {check_near_product_revenue(d, dp, v, m, alpha, sc.numbers("q_grid", kDefaultQGrid)), {}};
}

TrialResult dsic_extend_trial(const ExperimentContext& ctx, std::uint64_t seed) {
  const Scenario& sc = *ctx.scenario;
  Rng rng(seed);
  const TypeSpace s = gen::space(rng, gen::uniform_index(rng, 2, count(sc, "agents", 3)), count(sc, "types", 4));
  const Valuations v = gen::owned_valuations(rng, s, sc.number("bound", 1.0));
  const TypeRestriction r = gen::restriction(rng, s, sc.number("keep", 0.6));
  const Valuations vr = restrict_valuations(v, r);
  const Objective o = pick_objective(sc, rng, s.agents(), v.bound());
  const Mechanism plus =
      mix_with_null(optimal_mechanism(gen::any_dist(rng, r.restricted()), vr, IcKind::dsic, o).mechanism,
                    gen::uniform(rng, 0.5, 1.0));
  const Mechanism ext = dsic_extend(plus, r, v);

  const IrReport ir = expost_ir_check(ext, v);
  double agree = 0.0;
  double outside = 0.0;
  for (std::size_t t = 0; t < s.profiles(); ++t) {
    std::size_t out_count = 0;
    for (std::size_t i = 0; i < s.agents(); ++i) out_count += r.contains(i, s.type_of(t, i)) ? 0 : 1;
    if (out_count == 0) {
      const std::size_t tr = r.lower_profile(t);
      agree = std::max({agree, (ext.lottery().row(ix(t)) - plus.lottery().row(ix(tr))).cwiseAbs().maxCoeff(),
                        (ext.payments().row(ix(t)) - plus.payments().row(ix(tr))).cwiseAbs().maxCoeff()});
    } else if (out_count >= 2) {
      outside = std::max({outside, 1.0 - ext.probability(t, v.null_allocation()),
                          ext.payments().row(ix(t)).cwiseAbs().maxCoeff()});
    }
  }
  Reports rs{inequality("dsic_extend_ic", dsic_regret(ext, v), Sense::le, 0.0, kIcTol),
             inequality("dsic_extend_ir", ir.min_utility, Sense::ge, 0.0, kIcTol),
             inequality("dsic_extend_bottom_payment", ir.max_bottom_payment, Sense::le, 0.0, kIcTol),
             inequality("dsic_extend_inside", agree, Sense::eq, 0.0, 0.0),
             inequality("dsic_extend_outside", outside, Sense::eq, 0.0, 0.0)};
  for (auto& x : rs) {
    x.H = v.bound();
    x.n = s.agents();
  }
  return {rs, {}};
}

// Product prior whose T^- types share a small total mass per agent.
std::vector<Eigen::VectorXd> restricted_heavy_marginals(Rng& rng, const TypeRestriction& r, double max_beta) {
  const TypeSpace& s = r.space();
  std::vector<Eigen::VectorXd> out;
  for (std::size_t i = 0; i < s.agents(); ++i) {
    const std::size_t k = s.types(i);
    std::vector<std::size_t> plus;
    std::vector<std::size_t> minus;
    for (std::size_t t = 0; t < k; ++t) {
      if (t == s.bottom(i)) continue;
      (r.contains(i, t) ? plus : minus).push_back(t);
    }
    Eigen::VectorXd m = Eigen::VectorXd::Zero(ix(k));
    const double b = minus.empty() ? 0.0 : (plus.empty() ? 1.0 : gen::uniform(rng, 0.0, max_beta));
    if (!plus.empty()) {
      const Eigen::VectorXd w = gen::simplex(rng, plus.size());
      for (std::size_t j = 0; j < plus.size(); ++j) m(ix(plus[j])) = (1.0 - b) * w(ix(j));
    }
    if (!minus.empty()) {
      const Eigen::VectorXd w = gen::simplex(rng, minus.size());
      for (std::size_t j = 0; j < minus.size(); ++j) m(ix(minus[j])) = b * w(ix(j));
    }
    out.push_back(m / m.sum());
  }
  return out;
}

TrialResult bic_extend_trial(const ExperimentContext& ctx, std::uint64_t seed) {
  const Scenario& sc = *ctx.scenario;
  Rng rng(seed);
  const TypeSpace s = gen::space(rng, gen::uniform_index(rng, 1, count(sc, "agents", 2)), count(sc, "types", 4));
  const Valuations v = random_valuations(sc, rng, s);
  const TypeRestriction r = gen::restriction(rng, s, sc.number("keep", 0.7));
  const std::vector<Eigen::VectorXd> marg = restricted_heavy_marginals(rng, r, 0.1);
  const JointDist d = JointDist::product(s, marg);
  const std::vector<Eigen::VectorXd> shifted = gen::shift_marginals(rng, marg, gen::uniform(rng, 0.0, sc.number("eps", 0.05)));
  const JointDist dhat = JointDist::product(s, shifted);
  const Objective rev = Objective::revenue(s.agents(), v.bound());
  const Mechanism m = optimal_mechanism(d, v, IcKind::bic, rev).mechanism;
  const BicExtension ext = bic_extend(m, r, v, d);

  const std::size_t n = s.agents();
  const double H = v.bound();
  const double V = rev.range();
  const double rev_before = objective_eval(m, v, d, rev);
  Reports rs;
  rs.push_back(inequality("bic_extend_ir", expost_ir_check(ext.mechanism, v).min_utility, Sense::ge, 0.0, kIcTol));
  // Evaluated under the design prior (delta = 0) and under the shifted one.
  for (const JointDist* eval : {&d, &dhat}) {
    const double delta = tv_distance(d, *eval);
    const double beta = r.beta(*eval);
    const std::string suffix = eval == &d ? "_design" : "_shifted";
    RobustnessReport reg = inequality("bic_extend_regret" + suffix, bic_report(ext.mechanism, v, *eval).eps_star,
                                      Sense::le, bic_extension_regret_bound(delta, beta, n, H, ext.input_epsilon),
                                      kIcTol);
    RobustnessReport rv = inequality("bic_extend_rev" + suffix, objective_eval(ext.mechanism, v, *eval, rev),
                                     Sense::ge, rev_before - V * (beta * static_cast<double>(n) + delta), kIcTol);
    for (RobustnessReport* x : {&reg, &rv}) {
      x->delta = delta;
      x->q = beta;
      x->V = V;
      x->H = H;
      x->n = n;
      rs.push_back(*x);
    }
  }
  if (ext.zero_denominators + ext.clamped_payments > 0) {
    rs.back().note = std::to_string(ext.zero_denominators) + " zero denominators, " +
                     std::to_string(ext.clamped_payments) + " clamped payments";
  }
  return {rs, {}};
}

TrialResult epsq_reduction(const ExperimentContext& ctx, std::uint64_t seed) {
  const Scenario& sc = *ctx.scenario;
  Rng rng(seed);
  const TypeSpace s = gen::space(rng, gen::uniform_index(rng, 1, count(sc, "agents", 2)), count(sc, "types", 4));
  const Valuations v = random_valuations(sc, rng, s);
  const std::vector<Eigen::VectorXd> marg = gen::participating_marginals(rng, s);
  const Objective rev = Objective::revenue(s.agents(), v.bound());
  Mechanism m;
  std::vector<Eigen::VectorXd> eval_marg = marg;
  if (std::bernoulli_distribution(0.5)(rng)) {
    // An exactly BIC mechanism evaluated under slightly different marginals.
    m = optimal_mechanism(JointDist::product(s, marg), v, IcKind::bic, rev).mechanism;
    eval_marg = gen::shift_marginals(rng, marg, gen::uniform(rng, 0.0, sc.number("eps", 0.1)));
  } else {
    m = gen::ir_mechanism(rng, v);
  }
  const JointDist d = JointDist::product(s, eval_marg);
  const std::vector<double> grid = sc.numbers("q_grid", {0.05, 0.1, 0.25, 0.5});
  const double q = grid[gen::uniform_index(rng, 0, grid.size() - 1)];
  const double eps = bic_report(m, v, d).eps_at(q);
  const EpsqReduction red = reduce_epsq_bic(m, v, d, eps, q);
  const double beta = red.extension.beta;
  Reports rs{inequality("epsq_beta", beta, Sense::le, q, kMassTol),
             inequality("epsq_regret", red.measured_epsilon, Sense::le, red.chain_bound, kIcTol),
             inequality("epsq_revenue", red.revenue_after, Sense::ge, red.revenue_bound, kIcTol),
             inequality("epsq_ir", expost_ir_check(red.extension.mechanism, v).min_utility, Sense::ge, 0.0, kIcTol)};
  for (auto& x : rs) {
    x.q = q;
    x.V = rev.range();
    x.H = v.bound();
    x.n = s.agents();
  }
  return {rs, {}};
}

TrialResult moving_mass_trial(const ExperimentContext& ctx, std::uint64_t seed) {
  const Scenario& sc = *ctx.scenario;
  Rng rng(seed);
  const TypeSpace s = gen::space(rng, gen::uniform_index(rng, 1, count(sc, "agents", 3)), count(sc, "types", 4));
  const JointDist d = gen::any_dist(rng, s);
  const std::vector<Eigen::VectorXd> targets =
      gen::shift_marginals(rng, marginals(d), gen::uniform(rng, 0.0, sc.number("eps", 0.05)));
  const JointDist out = moving_mass(d, targets);
  double err = 0.0;
  double eps = 0.0;
  const std::vector<Eigen::VectorXd> before = marginals(d);
  for (std::size_t i = 0; i < s.agents(); ++i) {
    err = std::max(err, max_abs_diff(marginal(out, i), targets[i]));
    eps = std::max(eps, total_variation(before[i], targets[i]));
  }
  const double n = static_cast<double>(s.agents());
  Reports rs{inequality("moving_mass_marginals", err, Sense::eq, 0.0, kMassTol),
             inequality("moving_mass_tv", tv_distance(d, out), Sense::le, n * eps, kMassTol)};
  for (auto& x : rs) {
    x.delta = eps;
    x.n = s.agents();
  }
  return {rs, {}};
}

TrialResult marginal_robustness(const ExperimentContext& ctx, std::uint64_t seed) {
  const Scenario& sc = *ctx.scenario;
  Rng rng(seed);
  const TypeSpace s = gen::space(rng, count(sc, "agents", 2), count(sc, "types", 4));
  const Valuations v = random_valuations(sc, rng, s);
  const std::vector<Eigen::VectorXd> marg = gen::participating_marginals(rng, s);
  const std::vector<Eigen::VectorXd> shifted =
      gen::shift_marginals(rng, marg, gen::uniform(rng, 0.0, sc.number("eps", 0.05)));
  const Objective o = pick_objective(sc, rng, s.agents(), v.bound());
  const auto [alpha, lambda] = alpha_and_mix(sc, rng);
  const Mechanism m = mix_with_null(maxmin_mechanism(marg, v, o).mechanism, lambda);
  return {check_marginal_robustness(marg, shifted, v, o, m, alpha), {}};
}

SingleItemMarket random_market(const Scenario& sc, Rng& rng) {
  return gen::market(rng, gen::uniform_index(rng, 2, count(sc, "agents", 3)),
                     gen::uniform_index(rng, 1, count(sc, "values", 3)), sc.number("bound", 1.0));
}

Mechanism random_policy(Rng& rng, const SingleItemMarket& market, const std::vector<Eigen::VectorXd>& marg) {
  if (std::bernoulli_distribution(0.5)(rng)) return threshold_policy(market, prophet_threshold(market, marg));
  std::vector<double> prices;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < market.values.size(); ++i) {
    prices.push_back(gen::uniform(rng, 0.0, market.values[i].back()));
    order.push_back(i);
  }
  std::shuffle(order.begin(), order.end(), rng);
  return posted_prices(market, prices, order);
}

TrialResult prophet(const ExperimentContext& ctx, std::uint64_t seed) {
  const Scenario& sc = *ctx.scenario;
  Rng rng(seed);
  const SingleItemMarket market = random_market(sc, rng);
  const JointDist d = gen::participating_dist(rng, market.space());
  const JointDist dhat = perturb_within_tv(d, gen::uniform(rng, 0.0, sc.number("delta", 0.3)), PerturbMode::free, rng());
  const Mechanism m = random_policy(rng, market, marginals(d));
  return {check_prophet_robustness(market, m, d, dhat), {}};
}

TrialResult prophet_product(const ExperimentContext& ctx, std::uint64_t seed) {
  const Scenario& sc = *ctx.scenario;
  Rng rng(seed);
  const SingleItemMarket market = random_market(sc, rng);
  const std::vector<Eigen::VectorXd> marg = gen::participating_marginals(rng, market.space());
  const std::vector<Eigen::VectorXd> shifted =
      gen::shift_marginals(rng, marg, gen::uniform(rng, 0.0, sc.number("eps", 0.1)));
  const Mechanism m = random_policy(rng, market, marg);
  return {check_prophet_product(market, m, marg, shifted), {}};
}

AdditiveInstance additive_for(const Scenario& sc, Rng& rng) {
  if (sc.text("instance", "random") == "mrfgap") {
    const MrfGap g = mrfgap_instance(sc.number("k", 0.1));
    const double k = g.k;
    Eigen::Vector4d mass(1.0 - 2.0 * k + k * k * k, k - k * k * k, k - k * k * k, k * k * k);
    return additive_instance({{1.0, 2.0}, {1.0, 2.0}}, mass);
  }
  return gen::near_product_additive(rng, count(sc, "items", 2), count(sc, "values", 4),
                                    gen::uniform(rng, 0.0, sc.number("delta", 0.1)));
}

TrialResult simple_vs_optimal(const ExperimentContext& ctx, std::uint64_t seed) {
  Rng rng(seed);
  return {check_simple_vs_optimal(additive_for(*ctx.scenario, rng)), {}};
}

TrialResult gap_certificate_trial(const ExperimentContext& ctx, std::uint64_t seed) {
  Rng rng(seed);
  const GapSummary g = gap_certificate(additive_for(*ctx.scenario, rng));
  Reports rs = g.reports;
  std::ostringstream note;
  note << "rev " << format_number(g.rev) << " srev " << format_number(g.srev) << " brev " << format_number(g.brev)
       << " proxy " << format_number(g.proxy_distance) << " product-factor " << format_number(g.product_factor);
  for (auto& r : rs) {
    if (r.note.empty()) r.note = note.str();
  }
  return {rs, {}};
}

TrialResult mrfgap(const ExperimentContext& ctx, std::uint64_t seed) {
  const Scenario& sc = *ctx.scenario;
  const std::vector<double> ks =
      sc.numbers("k_grid", sc.has("k") ? std::vector<double>{sc.number("k", 0.1)} : std::vector<double>{0.1, 0.25});
  Reports rs;
  for (double k : ks) {
    const MrfGap g = mrfgap_instance(k);
    Eigen::MatrixXd joint(2, 2);
    joint << g.dist[g.dist.space().encode(std::vector<std::size_t>{1, 1})],
        g.dist[g.dist.space().encode(std::vector<std::size_t>{1, 2})],
        g.dist[g.dist.space().encode(std::vector<std::size_t>{2, 1})],
        g.dist[g.dist.space().encode(std::vector<std::size_t>{2, 2})];
    const RatioBoundReport sandwich = check_ratio_bound(two_node_realization(joint), seed);
    const Eigen::VectorXd m0 = marginal(g.dist, 0);
    Reports block{inequality("mrfgap_tv", g.tv, Sense::eq, g.tv_expected, 1e-12),
                  inequality("mrfgap_tv_bound", g.tv, Sense::le, g.tv_bound, 1e-12),
                  inequality("mrfgap_marginal_b", m0(2), Sense::eq, k, 1e-12),
                  inequality("mrfgap_bb_ratio", g.bb_ratio, Sense::eq, k, 1e-12),
                  inequality("mrfgap_delta", g.realized_delta, Sense::ge, g.delta_lower, 1e-12),
                  inequality("mrfgap_sandwich_lower", sandwich.min_ratio, Sense::ge, sandwich.lower, 1e-9 * sandwich.lower),
                  inequality("mrfgap_sandwich_upper", sandwich.max_ratio, Sense::le, sandwich.upper, 1e-9 * sandwich.upper)};
    for (auto& r : block) {
      r.delta = g.tv;
      r.q = k;
      r.n = 2;
    }
    append(rs, std::move(block));
  }
  return {rs, {}};
}

PairwiseMRF mrf_for(const ExperimentContext& ctx, Rng& rng) {
  if (ctx.mrf) return *ctx.mrf;
  const Scenario& sc = *ctx.scenario;
  return gen::mrf(rng, count(sc, "nodes", 4), count(sc, "alphabet", 4), sc.number("scale", 0.5));
}

TrialResult mrf_ratio(const ExperimentContext& ctx, std::uint64_t seed) {
  Rng rng(seed);
  const PairwiseMRF mrf = mrf_for(ctx, rng);
  const RatioBoundReport rb = check_ratio_bound(mrf, rng(), count(*ctx.scenario, "pairs", 1000));
  Reports rs{inequality("mrf_ratio_lower", rb.min_ratio, Sense::ge, rb.lower, 1e-9 * rb.lower),
             inequality("mrf_ratio_upper", rb.max_ratio, Sense::le, rb.upper, 1e-9 * rb.upper)};
  for (auto& r : rs) {
    r.n = mrf.nodes();
    r.note = std::to_string(rb.tested) + " events tested, " + std::to_string(rb.skipped) + " skipped";
  }
  return {rs, {}};
}

TrialResult mrf_kl(const ExperimentContext& ctx, std::uint64_t seed) {
  Rng rng(seed);
  const PairwiseMRF mrf = mrf_for(ctx, rng);
  const KlTvReport kl = check_kl_tv_bound(mrf);
  Reports rs{inequality("mrf_tv", kl.tv, Sense::le, kl.tv_bound, kExactTol),
             inequality("mrf_kl", std::min(kl.kl_forward, kl.kl_backward), Sense::le, kl.kl_bound, kExactTol)};
  for (auto& r : rs) {
    r.delta = kl.tv;
    r.n = mrf.nodes();
  }
  rs.back().note = "kl forward " + format_number(kl.kl_forward) + " backward " + format_number(kl.kl_backward);
  return {rs, {}};
}

TrialResult synthesis(const ExperimentContext& ctx, std::uint64_t seed) {
  const Scenario& sc = *ctx.scenario;
  Rng rng(seed);
  const IcKind ic = sc.text("ic", "dsic") == "bic" ? IcKind::bic : IcKind::dsic;
  std::optional<JointDist> d = ctx.prior;
  std::optional<Valuations> v = ctx.valuations;
  if (!d || !v) {
    const TypeSpace s = gen::space(rng, gen::uniform_index(rng, 1, count(sc, "agents", 2)), count(sc, "types", 3));
    v = random_valuations(sc, rng, s);
    d = gen::participating_dist(rng, s);
  }
  const Objective o = pick_objective(sc, rng, v->space().agents(), v->bound());
  const SynthesizedMechanism opt = optimal_mechanism(*d, *v, ic, o);
  const double incentive = ic == IcKind::dsic ? dsic_regret(opt.mechanism, *v) : bic_report(opt.mechanism, *v, *d).eps_star;
  Reports rs{inequality(ic == IcKind::dsic ? "synthesis_dsic" : "synthesis_bic", incentive, Sense::le, 0.0, kIcTol),
             inequality("synthesis_ir", expost_ir_check(opt.mechanism, *v).min_utility, Sense::ge, 0.0, kIcTol),
             inequality("synthesis_value", objective_eval(opt.mechanism, *v, *d, o), Sense::eq, opt.value, kLpTol)};
  for (auto& r : rs) {
    r.V = o.range();
    r.H = v->bound();
    r.n = v->space().agents();
  }
  std::ostringstream text;
  write_mechanism(text, opt.mechanism, provenance_comment(opt.call, *d));
  return {rs, {{"mechanism_" + std::to_string(seed) + ".txt", text.str()}}};
}

std::vector<Experiment> build_registry() {
  const std::vector<std::string> sizes{"agents", "types", "allocations", "bound", "objective"};
  auto with = [](std::vector<std::string> a, std::initializer_list<std::string> b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  const std::vector<std::string> model_files{"prior", "perturbed", "valuations", "mechanism"};
  std::vector<Experiment> r{
      {"tv_coherence", "half-L1, optimal coupling, dual witness and event supremum agree on random pairs",
       {"points"}, {}, tv_coherence},
      {"lipschitz", "objective gap between two priors is at most V times their TV distance, tight for the witness",
       sizes, model_files, lipschitz},
      {"pointmass", "posted price at V0: revenue V0 on the point mass and (1 - delta) V0 after moving delta mass",
       {"value", "delta", "delta_grid"}, {}, pointmass},
      {"two_bidder", "two-bidder BIC mechanism becomes exactly eps-BIC when one marginal moves by eps",
       {"eps", "eps_grid"}, {}, two_bidder},
      {"dsic_robustness", "alpha-approximate DSIC mechanism keeps alpha OPT - (1 + alpha) V delta on a nearby prior",
       with(sizes, {"delta", "alpha"}), {"prior", "perturbed", "valuations", "mechanism"}, dsic_robustness},
      {"conditional_tv", "Q-mass of types whose conditional TV exceeds 2 TV / q is at most q",
       {"agents", "types", "delta", "q_grid"}, {}, conditional_tv},
      {"bic_robustness", "BIC mechanism is (8 H delta / q, q)-BIC and loses at most V delta on a same-support prior",
       with(sizes, {"delta", "q_grid"}), {"prior", "perturbed", "valuations", "mechanism"}, bic_robustness},
      {"weak_dependence", "TV to the product of own marginals is at most (n + 1) times TV to any product",
       {"agents", "types", "delta"}, {}, weak_dependence},
      {"near_product_revenue", "mechanism designed for a product prior, evaluated on a nearby correlated prior",
       with(sizes, {"delta", "alpha", "q_grid"}), {}, near_product_revenue},
      {"dsic_extend", "extension of a DSIC mechanism from a type subset is DSIC and ex-post IR everywhere",
       with(sizes, {"keep"}), {}, dsic_extend_trial},
      {"bic_extend", "BIC extension keeps ex-post IR, the regret chain and the revenue bound",
       with(sizes, {"keep", "eps"}), {}, bic_extend_trial},
      {"epsq_reduction", "(eps, q)-BIC to approximately BIC with revenue loss at most n q V",
       with(sizes, {"eps", "q_grid"}), {}, epsq_reduction},
      {"moving_mass", "transport onto shifted marginals: exact marginals and TV at most n eps",
       {"agents", "types", "eps"}, {}, moving_mass_trial},
      {"marginal_robustness", "max-min mechanism keeps alpha maxmin - (1 + alpha) n eps V on shifted marginals",
       with(sizes, {"eps", "alpha"}), {}, marginal_robustness},
      {"prophet", "posted-price welfare moves by at most H delta between two priors",
       {"agents", "values", "bound", "delta"}, {}, prophet},
      {"prophet_product", "posted-price welfare moves by at most H n eps when each marginal moves by eps",
       {"agents", "values", "bound", "eps"}, {}, prophet_product},
      {"simple_vs_optimal", "max(SRev, BRev) >= Rev / 6 - 7 H delta / 6 for one additive buyer",
       {"items", "values", "delta", "instance", "k"}, {}, simple_vs_optimal},
      {"gap_certificate", "a large simple-vs-optimal revenue gap certifies distance from product priors",
       {"items", "values", "delta", "instance", "k"}, {}, gap_certificate_trial},
      {"mrfgap", "two-item correlated prior: TV to product 2(k^2 - k^3), Delta at least log(1/k) / 4",
       {"k", "k_grid"}, {}, mrfgap},
      {"mrf_ratio", "joint-over-product event ratios of an MRF lie in [exp(-4 Delta), exp(4 Delta)]",
       {"nodes", "alphabet", "scale", "pairs"}, {"mrf"}, mrf_ratio},
      {"mrf_kl", "TV and KL from an MRF to its edge-free version are bounded through m Delta",
       {"nodes", "alphabet", "scale"}, {"mrf"}, mrf_kl},
      {"synthesis", "optimal DSIC or BIC mechanism by linear programming, re-verified",
       with(sizes, {"ic"}), {"prior", "valuations"}, synthesis},
  };
  std::sort(r.begin(), r.end(), [](const Experiment& a, const Experiment& b) { return a.name < b.name; });
  return r;
}

template <class T, class F>
std::optional<T> load_file(const Scenario& sc, const std::string& key, F read) {
  const auto path = sc.file(key);
  if (!path) return std::nullopt;
  try {
    std::istringstream in(slurp(*path));
    return read(in);
  } catch (const Error& e) {
    throw Error("cannot load " + key + " file '" + *path + "': " + e.what());
  }
}

}  // namespace

const std::vector<Experiment>& experiments() {
  static const std::vector<Experiment> registry = build_registry();
  return registry;
}

const Experiment* find_experiment(std::string_view name) {
  for (const auto& e : experiments()) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

ExperimentContext load_context(const Scenario& sc) {
  ExperimentContext ctx;
  ctx.scenario = &sc;
  ctx.prior = load_file<JointDist>(sc, "prior", [](std::istream& in) { return read_dist(in); });
  ctx.perturbed = load_file<JointDist>(sc, "perturbed", [](std::istream& in) { return read_dist(in); });
  ctx.valuations = load_file<Valuations>(sc, "valuations", [](std::istream& in) { return read_valuations(in); });
  ctx.mechanism = load_file<Mechanism>(sc, "mechanism", [](std::istream& in) { return read_mechanism(in); });
  ctx.mrf = load_file<PairwiseMRF>(sc, "mrf", [](std::istream& in) { return read_mrf(in); });
  return ctx;
}

}  // namespace robmech
