#include <doctest.h>

#include "oracles.hpp"
#include "robmech/errors.hpp"
#include "robmech/generate.hpp"
#include "robmech/transforms.hpp"

using namespace robmech;

TEST_SUITE("transforms") {
  TEST_CASE("restriction index maps") {
    const TypeSpace s = TypeSpace::with_sizes({4, 3});
    const TypeRestriction r(s, {{0, 3, 1}, {0, 2}});
    CHECK(r.members(0) == std::vector<std::size_t>{0, 1, 3});
    CHECK(r.restricted().profiles() == 6);
    for (std::size_t k = 0; k < r.restricted().profiles(); ++k) CHECK(r.lower_profile(r.lift_profile(k)) == k);
    CHECK(r.lower(0, 3) == 2);
    CHECK_FALSE(r.contains(1, 1));
    CHECK(TypeRestriction::full(s).is_full());
    CHECK_THROWS(TypeRestriction(s, {{1, 2}, {0}}));  // non-participation must stay
  }

  TEST_CASE("dsic_extend") {
    gen::Rng rng(41);
    SUBCASE("full restriction returns the input") {
      const TypeSpace s = TypeSpace::with_sizes({3, 3});
      const Valuations v = gen::owned_valuations(rng, s, 1.0);
      const Mechanism m =
          optimal_mechanism(gen::any_dist(rng, s), v, IcKind::dsic, Objective::revenue(2, 1.0)).mechanism;
      CHECK(dsic_extend(m, TypeRestriction::full(s), v) == m);
    }
    SUBCASE("random restrictions: full deviation enumeration") {
      int outsiders_seen = 0;
      for (int trial = 0; trial < 100; ++trial) {
        const TypeSpace s = gen::space(rng, gen::uniform_index(rng, 2, 3), 4);
        const Valuations v = gen::owned_valuations(rng, s, 1.0);
        const TypeRestriction r = gen::restriction(rng, s, 0.6);
        const Valuations vr = restrict_valuations(v, r);
        const Objective o = trial % 2 ? Objective::revenue(s.agents(), 1.0) : Objective::welfare(s.agents(), 1.0);
        const Mechanism plus = optimal_mechanism(gen::any_dist(rng, r.restricted()), vr, IcKind::dsic, o).mechanism;
        const Mechanism ext = dsic_extend(plus, r, v);
        CHECK(oracle::dsic_regret(ext, v) <= 1e-9);
        CHECK(oracle::min_truthful_utility(ext, v) >= -1e-9);
        for (std::size_t t = 0; t < s.profiles(); ++t) {
          std::size_t out = 0;
          for (std::size_t i = 0; i < s.agents(); ++i) out += r.contains(i, s.type_of(t, i)) ? 0 : 1;
          if (out >= 2) {
            ++outsiders_seen;
            CHECK(ext.probability(t, v.null_allocation()) == 1.0);
            CHECK(ext.payments().row(static_cast<Eigen::Index>(t)).cwiseAbs().maxCoeff() == 0.0);
          }
        }
      }
      CHECK(outsiders_seen > 0);
    }
    SUBCASE("non-DSIC input is rejected") {
      const SingleItemMarket market{{{1.0, 2.0}, {1.0, 2.0}}};
      const Valuations v = market.valuations();
      Eigen::MatrixXd lottery = Eigen::MatrixXd::Zero(9, 3);
      Eigen::MatrixXd pay = Eigen::MatrixXd::Zero(9, 2);
      // Agent 0 always wins and pays its bid: shading pays off.
      for (Eigen::Index t = 0; t < 9; ++t) {
        const std::size_t a = market.space().type_of(static_cast<std::size_t>(t), 0);
        lottery(t, a == 0 ? 0 : 1) = 1.0;
        pay(t, 0) = market.value(0, a);
      }
      const Mechanism bad(market.space(), 0, 2.0, lottery, pay);
      const TypeRestriction r = TypeRestriction::full(market.space());
      CHECK_THROWS_AS(dsic_extend(bad, r, v), PreconditionError);
    }
  }

  TEST_CASE("bic_extend with nothing removed returns the input") {
    gen::Rng rng(43);
    const TypeSpace s = TypeSpace::with_sizes({3, 3});
    const Valuations v = gen::valuations(rng, s, 3, 1.0);
    const JointDist d = JointDist::product(s, gen::participating_marginals(rng, s));
    const Objective rev = Objective::revenue(2, 1.0);
    const Mechanism m = optimal_mechanism(d, v, IcKind::bic, rev).mechanism;
    const BicExtension ext = bic_extend(m, TypeRestriction::full(s), v, d);
    CHECK(ext.beta <= 1e-15);
    CHECK((ext.mechanism.lottery() - m.lottery()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((ext.mechanism.payments() - m.payments()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(objective_eval(ext.mechanism, v, d, rev) == objective_eval(m, v, d, rev));
  }

  TEST_CASE("bic_extend zeroes payments of types mapped to a worthless report") {
    // One agent, types bot, lo, hi. T+ = {bot, hi}; the mechanism never
    // gives anyone anything, so lo faces zero interim value at any image.
    const SingleItemMarket market{{{0.5, 1.0}}};
    const Valuations v = market.valuations();
    Eigen::MatrixXd lottery = Eigen::MatrixXd::Zero(3, 2);
    lottery.col(0).setOnes();
    const Mechanism m(market.space(), 0, 1.0, lottery, Eigen::MatrixXd::Zero(3, 1));
    const TypeRestriction r(market.space(), {{0, 2}});
    const JointDist d(market.space(), Eigen::Vector3d(0.0, 0.05, 0.95));
    const BicExtension ext = bic_extend(m, r, v, d);
    CHECK(r.contains(0, ext.tau[0][1]));
    CHECK(ext.mechanism.payment(1, 0) == 0.0);
    CHECK(expost_ir_check(ext.mechanism, v).holds());
  }

  TEST_CASE("bic_extend bounds on restricted heavy priors") {
    gen::Rng rng(47);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const TypeSpace s = gen::space(rng, gen::uniform_index(rng, 1, 2), 4);
      const Valuations v = gen::valuations(rng, s, 3, 1.0);
      const TypeRestriction r = gen::restriction(rng, s, 0.7);
      // Mass 1 - beta_i on T+ with beta_i <= 0.1.
      std::vector<Eigen::VectorXd> marg;
      for (std::size_t i = 0; i < s.agents(); ++i) {
        Eigen::VectorXd w = gen::simplex(rng, s.types(i));
        w(static_cast<Eigen::Index>(s.bottom(i))) = 0.0;
        double plus = 0.0;
        double minus = 0.0;
        for (std::size_t t = 0; t < s.types(i); ++t) (r.contains(i, t) ? plus : minus) += w(static_cast<Eigen::Index>(t));
        if (plus == 0.0 || minus == 0.0) {
          marg.push_back(w / w.sum());
          continue;
        }
        const double beta = gen::uniform(rng, 0.0, 0.1);
        for (std::size_t t = 0; t < s.types(i); ++t) {
          w(static_cast<Eigen::Index>(t)) *= r.contains(i, t) ? (1.0 - beta) / plus : beta / minus;
        }
        marg.push_back(w);
      }
      const JointDist d = JointDist::product(s, marg);
      const Objective rev = Objective::revenue(s.agents(), 1.0);
      const Mechanism m = optimal_mechanism(d, v, IcKind::bic, rev).mechanism;
      const BicExtension ext = bic_extend(m, r, v, d);
      const double n = static_cast<double>(s.agents());
      CHECK(ext.beta == doctest::Approx(r.beta(d)));
      CHECK(oracle::min_truthful_utility(ext.mechanism, v) >= -1e-9);
      CHECK(bic_report(ext.mechanism, v, d).eps_star <=
            bic_extension_regret_bound(0.0, ext.beta, s.agents(), 1.0, ext.input_epsilon) + 1e-9);
      CHECK(oracle::expected_revenue(ext.mechanism, d) >= oracle::expected_revenue(m, d) - rev.range() * ext.beta * n - 1e-9);
      ++checked;
    }
    CHECK(checked == 100);
  }

  TEST_CASE("reduce_epsq_bic") {
    const SingleItemMarket market{{{1.0, 2.0}, {1.0, 2.0}}};
    const Valuations v = market.valuations();
    const TypeSpace s = market.space();
    gen::Rng rng(53);
    SUBCASE("q = 0 keeps every type") {
      const JointDist d = JointDist::product(s, gen::participating_marginals(rng, s));
      const Mechanism m = gen::ir_mechanism(rng, v);
      const double eps = bic_report(m, v, d).eps_star;
      const EpsqReduction red = reduce_epsq_bic(m, v, d, eps, 0.0);
      CHECK(red.restriction.is_full());
      CHECK(red.extension.mechanism == m);
      CHECK(red.revenue_after == red.revenue_before);
    }
    SUBCASE("random instances keep both bounds") {
      for (int trial = 0; trial < 100; ++trial) {
        const TypeSpace sp = gen::space(rng, gen::uniform_index(rng, 1, 2), 4);
        const Valuations vv = gen::valuations(rng, sp, 3, 1.0);
        const JointDist d = JointDist::product(sp, gen::participating_marginals(rng, sp));
        const Mechanism m = gen::ir_mechanism(rng, vv);
        const double q = gen::uniform(rng, 0.05, 0.5);
        const double eps = bic_report(m, vv, d).eps_at(q);
        const EpsqReduction red = reduce_epsq_bic(m, vv, d, eps, q);
        const double n = static_cast<double>(sp.agents());
        CHECK(red.extension.beta <= q + 1e-12);
        CHECK(red.measured_epsilon <= 4.0 * red.extension.beta * n * vv.bound() + eps + 1e-9);
        const double V = Objective::revenue(sp.agents(), vv.bound()).range();
        CHECK(red.revenue_after >= red.revenue_before - n * q * V - 1e-9);
        CHECK(oracle::min_truthful_utility(red.extension.mechanism, vv) >= -1e-9);
      }
    }
    SUBCASE("a q that the mechanism does not meet is rejected") {
      const JointDist d = JointDist::product(s, {Eigen::Vector3d(0, 0.5, 0.5), Eigen::Vector3d(0, 0.6, 0.4)});
      const Mechanism m = posted_prices(market, {2.0, 2.0}, {0, 1});
      // Agent 0 always wins and pays its bid, so the high type gains 1 by shading.
      Eigen::MatrixXd lottery = Eigen::MatrixXd::Zero(9, 3);
      Eigen::MatrixXd pay = Eigen::MatrixXd::Zero(9, 2);
      for (Eigen::Index t = 0; t < 9; ++t) {
        const std::size_t a = s.type_of(static_cast<std::size_t>(t), 0);
        lottery(t, a == 0 ? 0 : 1) = 1.0;
        pay(t, 0) = market.value(0, a);
      }
      const Mechanism shade(s, 0, 2.0, lottery, pay);
      CHECK_NOTHROW(reduce_epsq_bic(m, v, d, 0.0, 0.0));
      CHECK_THROWS_AS(reduce_epsq_bic(shade, v, d, 0.0, 0.1), PreconditionError);
    }
  }

  TEST_CASE("moving_mass") {
    gen::Rng rng(59);
    SUBCASE("own marginals leave the distribution unchanged") {
      const JointDist d = gen::any_dist(rng, TypeSpace::with_sizes({3, 2, 3}));
      CHECK(tv_distance(moving_mass(d, marginals(d)), d) < 1e-14);
    }
    SUBCASE("a single agent moves straight to the target") {
      const JointDist d = gen::any_dist(rng, TypeSpace::with_sizes({4}));
      const Eigen::VectorXd target = gen::simplex(rng, 4);
      const JointDist out = moving_mass(d, {target});
      CHECK((out.mass() - target).cwiseAbs().maxCoeff() < 1e-14);
    }
    SUBCASE("three agents shifted by 0.03 each") {
      for (int trial = 0; trial < 50; ++trial) {
        const JointDist d = gen::any_dist(rng, TypeSpace::with_sizes({3, 3, 3}));
        const std::vector<Eigen::VectorXd> targets = gen::shift_marginals(rng, marginals(d), 0.03);
        const JointDist out = moving_mass(d, targets);
        for (std::size_t i = 0; i < 3; ++i) {
          CHECK(total_variation(marginal(d, i), targets[i]) <= 0.03 + 1e-12);
          CHECK((marginal(out, i) - targets[i]).cwiseAbs().maxCoeff() < 1e-12);
        }
        CHECK(tv_distance(d, out) <= 0.09 + 1e-12);
      }
    }
  }
}
