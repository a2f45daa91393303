#include <doctest.h>

#include "oracles.hpp"
#include "robmech/errors.hpp"
#include "robmech/generate.hpp"
#include "robmech/robustness.hpp"

using namespace robmech;

namespace {

bool all_pass(const Reports& rs) {
  bool ok = !rs.empty();
  for (const auto& r : rs) ok = ok && r.status == CheckStatus::pass;
  return ok;
}

const RobustnessReport& find(const Reports& rs, const std::string& tag) {
  for (const auto& r : rs) {
    if (r.tag == tag) return r;
  }
  FAIL("missing tag " << tag);
  return rs.front();
}

}  // namespace

TEST_SUITE("robustness-lab") {
  TEST_CASE("report statuses") {
    CHECK(inequality("a", 1.0, Sense::ge, 1.0 + 1e-10, 1e-9).status == CheckStatus::pass);
    CHECK(inequality("a", 1.0, Sense::ge, 1.1, 1e-9).status == CheckStatus::fail);
    CHECK(inequality("a", 1.0, Sense::le, 1.1, 0).slack == doctest::Approx(0.1));
    const RobustnessReport eq = inequality("a", 2.0, Sense::eq, 2.5, 0.1);
    CHECK(eq.slack == doctest::Approx(-0.5));
    CHECK(eq.status == CheckStatus::fail);
    CHECK(vacuous("a", "why").status == CheckStatus::vacuous);
  }

  TEST_CASE("Lipschitz check") {
    gen::Rng rng(61);
    const TypeSpace s = TypeSpace::with_sizes({3, 3});
    const Valuations v = gen::valuations(rng, s, 3, 1.0);
    const Mechanism m = gen::ir_mechanism(rng, v);
    const JointDist p = gen::any_dist(rng, s);
    const Objective rev = Objective::revenue(2, 1.0);
    SUBCASE("identical priors") {
      const Reports rs = check_lipschitz(m, v, p, p, rev);
      CHECK(all_pass(rs));
      CHECK(find(rs, "lipschitz").lhs == 0.0);
    }
    SUBCASE("posted price on a point mass and its perturbation") {
      const SingleItemMarket market{{{1.0}}};
      const Valuations mv = market.valuations();
      const Mechanism post = posted_prices(market, {1.0}, {0});
      const JointDist point = JointDist::point_mass(market.space(), 1);
      const JointDist moved = shift_mass(point, 1, 0, 0.1);
      const Reports rs = check_lipschitz(post, mv, point, moved, Objective::revenue(1, 1.0));
      CHECK(all_pass(rs));
      const RobustnessReport& r = find(rs, "lipschitz");
      CHECK(r.lhs == doctest::Approx(0.1));
      CHECK(r.rhs >= r.lhs);
    }
    SUBCASE("random pairs") {
      for (int trial = 0; trial < 100; ++trial) {
        const JointDist q = gen::any_dist(rng, s);
        CHECK(all_pass(check_lipschitz(m, v, p, q, trial % 2 ? rev : Objective::welfare(2, 1.0))));
      }
    }
  }

  TEST_CASE("DSIC robustness") {
    SUBCASE("point mass and its perturbation with alpha = 1") {
      const SingleItemMarket market{{{1.0}}};
      const Valuations v = market.valuations();
      const Mechanism post = posted_prices(market, {1.0}, {0});
      const JointDist point = JointDist::point_mass(market.space(), 1);
      for (double delta : {0.05, 0.1, 0.3}) {
        const Reports rs =
            check_dsic_robustness(point, shift_mass(point, 1, 0, delta), v, Objective::revenue(1, 1.0), post, 1.0);
        CHECK(all_pass(rs));
        const RobustnessReport& r = find(rs, "dsic_robust");
        CHECK(r.lhs == doctest::Approx(1.0 - delta));
      }
    }
    SUBCASE("random priors with optimal and diluted mechanisms") {
      gen::Rng rng(67);
      for (int trial = 0; trial < 30; ++trial) {
        const TypeSpace s = gen::space(rng, gen::uniform_index(rng, 1, 2), 3);
        const Valuations v = gen::valuations(rng, s, 3, 1.0);
        const JointDist d = gen::any_dist(rng, s);
        const JointDist dhat = perturb_within_tv(d, gen::uniform(rng, 0.0, 0.3), PerturbMode::free, rng());
        const Objective o = Objective::revenue(s.agents(), 1.0);
        const SynthesizedMechanism opt = optimal_mechanism(d, v, IcKind::dsic, o);
        CHECK(all_pass(check_dsic_robustness(d, d, v, o, opt.mechanism, 1.0)));
        CHECK(all_pass(check_dsic_robustness(d, dhat, v, o, opt.mechanism, 1.0)));
        CHECK(all_pass(check_dsic_robustness(d, dhat, v, o, mix_with_null(opt.mechanism, 0.7), 0.7)));
      }
    }
  }

  TEST_CASE("BIC robustness") {
    const SingleItemMarket market{{{1.0, 2.0}, {1.0, 2.0}}};
    const Valuations v = market.valuations();
    const TypeSpace s = market.space();
    const Eigen::Vector3d even(0.0, 0.5, 0.5);
    const JointDist d = JointDist::product(s, {even, even});
    const Objective rev = Objective::revenue(2, 2.0);
    const Mechanism m = optimal_mechanism(d, v, IcKind::bic, rev).mechanism;
    SUBCASE("same prior") {
      const Reports rs = check_bic_robustness(d, d, v, rev, m);
      CHECK(all_pass(rs));
      for (const auto& r : rs) {
        if (r.tag == "bic_epsq") CHECK(r.lhs <= 1e-9);
      }
    }
    SUBCASE("second marginal shifted by 0.1") {
      const JointDist dhat = JointDist::product(s, {even, Eigen::Vector3d(0.0, 0.6, 0.4)});
      CHECK(all_pass(check_bic_robustness(d, dhat, v, rev, m, {0.1, 0.25, 0.5, 0.9})));
    }
    SUBCASE("different supports are rejected") {
      const JointDist other = JointDist::product(s, {even, Eigen::Vector3d(0.0, 1.0, 0.0)});
      CHECK_THROWS_AS(check_bic_robustness(d, other, v, rev, m), PreconditionError);
    }
  }

  TEST_CASE("inner minimum over couplings") {
    const SingleItemMarket market{{{1.0, 2.0}, {1.0, 2.0}}};
    const Valuations v = market.valuations();
    const TypeSpace s = market.space();
    const Objective rev = Objective::revenue(2, 2.0);
    // Second-price auction, ties to bidder 0.
    Eigen::MatrixXd lottery = Eigen::MatrixXd::Zero(9, 3);
    Eigen::MatrixXd pay = Eigen::MatrixXd::Zero(9, 2);
    for (std::size_t t = 0; t < 9; ++t) {
      const double b0 = market.value(0, s.type_of(t, 0));
      const double b1 = market.value(1, s.type_of(t, 1));
      const auto r = static_cast<Eigen::Index>(t);
      if (b0 == 0 && b1 == 0) {
        lottery(r, 0) = 1;
      } else if (b0 >= b1) {
        lottery(r, 1) = 1;
        pay(r, 0) = b1;
      } else {
        lottery(r, 2) = 1;
        pay(r, 1) = b0;
      }
    }
    const Mechanism second(s, 0, 2.0, lottery, pay);

    SUBCASE("uniform marginals: vertices of the 2 x 2 transportation polytope") {
      const Eigen::Vector3d even(0.0, 0.5, 0.5);
      // Couplings (a, 1/2 - a; 1/2 - a, a) on {1, 2}^2; revenue is linear in a.
      double best = INFINITY;
      for (double a : {0.0, 0.5}) {
        Eigen::VectorXd mass = Eigen::VectorXd::Zero(9);
        mass(s.encode(std::vector<std::size_t>{1, 1})) = a;
        mass(s.encode(std::vector<std::size_t>{1, 2})) = 0.5 - a;
        mass(s.encode(std::vector<std::size_t>{2, 1})) = 0.5 - a;
        mass(s.encode(std::vector<std::size_t>{2, 2})) = a;
        best = std::min(best, oracle::expected_revenue(second, JointDist(s, mass)));
      }
      const InnerMin im = inner_min_distribution(second, v, rev, {even, even});
      CHECK(im.value == doctest::Approx(best).epsilon(1e-9));
      CHECK((marginal(im.worst, 0) - Eigen::VectorXd(even)).cwiseAbs().maxCoeff() < 1e-9);
      // The max-min mechanism does at least as well as this fixed one.
      CHECK(maxmin_mechanism({even, even}, v, rev).value >= best - 1e-9);
    }
    SUBCASE("point-mass marginals leave a single distribution") {
      const Eigen::Vector3d hi(0.0, 0.0, 1.0);
      const Eigen::Vector3d lo(0.0, 1.0, 0.0);
      const InnerMin im = inner_min_distribution(second, v, rev, {hi, lo});
      const JointDist only = JointDist::product(s, {hi, lo});
      CHECK(im.value == doctest::Approx(objective_eval(second, v, only, rev)));
    }
  }

  TEST_CASE("marginal robustness") {
    gen::Rng rng(71);
    for (int trial = 0; trial < 10; ++trial) {
      const TypeSpace s = TypeSpace::with_sizes({3, 3});
      const Valuations v = gen::valuations(rng, s, 3, 1.0);
      const std::vector<Eigen::VectorXd> marg = gen::participating_marginals(rng, s);
      const Objective o = Objective::welfare(2, 1.0);
      const Mechanism m = maxmin_mechanism(marg, v, o).mechanism;
      CHECK(all_pass(check_marginal_robustness(marg, marg, v, o, m, 1.0)));
      CHECK(all_pass(check_marginal_robustness(marg, gen::shift_marginals(rng, marg, 0.02), v, o, m, 1.0)));
    }
  }

  TEST_CASE("prophet robustness") {
    gen::Rng rng(73);
    const SingleItemMarket market = gen::market(rng, 3, 3, 1.0);
    const JointDist d = gen::participating_dist(rng, market.space());
    const Mechanism m = threshold_policy(market, prophet_threshold(market, marginals(d)));
    const Reports same = check_prophet_robustness(market, m, d, d);
    CHECK(all_pass(same));
    CHECK(find(same, "prophet_gap").lhs == doctest::Approx(find(same, "prophet_gap").rhs));
    for (int trial = 0; trial < 50; ++trial) {
      CHECK(all_pass(check_prophet_robustness(market, m, d, perturb_within_tv(d, 0.2, PerturbMode::free, rng()))));
      const std::vector<Eigen::VectorXd> marg = gen::participating_marginals(rng, market.space());
      CHECK(all_pass(check_prophet_product(market, m, marg, gen::shift_marginals(rng, marg, 0.05))));
    }
  }

  TEST_CASE("simple versus optimal") {
    SUBCASE("point mass: every revenue notion agrees") {
      const AdditiveInstance inst = additive_instance({{1.5}, {0.5}}, Eigen::VectorXd::Ones(1));
      const double rev = optimal_additive(inst).value;
      CHECK(rev == doctest::Approx(2.0).epsilon(1e-9));
      CHECK(srev(inst).revenue == doctest::Approx(rev));
      CHECK(brev(inst).revenue == doctest::Approx(rev));
      CHECK(all_pass(check_simple_vs_optimal(inst)));
    }
    SUBCASE("correlated k = 0.1 prior with values 1 and 2") {
      const double k = 0.1;
      const Eigen::Vector4d mass(1 - 2 * k + k * k * k, k - k * k * k, k - k * k * k, k * k * k);
      const AdditiveInstance inst = additive_instance({{1.0, 2.0}, {1.0, 2.0}}, mass);
      const Reports rs = check_simple_vs_optimal(inst);
      CHECK(all_pass(rs));
      CHECK(rs.front().delta == doctest::Approx(0.018));
      const GapSummary g = gap_certificate(inst);
      CHECK(g.proxy_distance == doctest::Approx(0.018));
      CHECK(g.rev >= std::max(g.srev, g.brev) - 1e-9);
    }
    SUBCASE("random near-product instances") {
      gen::Rng rng(79);
      for (int trial = 0; trial < 30; ++trial) {
        CHECK(all_pass(check_simple_vs_optimal(gen::near_product_additive(rng, 2, 4, 0.1))));
      }
    }
  }
}
