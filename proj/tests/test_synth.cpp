#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "robmech/errors.hpp"
#include "robmech/generate.hpp"
#include "robmech/synth.hpp"

using namespace robmech;

namespace {

// Best single-agent, single-item DSIC+IR menu on a grid: allocation
// probabilities and payments (up to 4) in steps of 1/20, every combination checked.
double grid_menu_revenue(double v1, double v2, double p1_mass) {
  double best = 0.0;
  const int steps = 20;
  for (int a1 = 0; a1 <= steps; ++a1) {
    for (int a2 = 0; a2 <= steps; ++a2) {
      const double x1 = a1 / double(steps);
      const double x2 = a2 / double(steps);
      for (int b1 = 0; b1 <= 4 * steps; ++b1) {
        const double q1 = b1 / double(steps);
        if (x1 * v1 - q1 < -1e-12) break;
        for (int b2 = 0; b2 <= 4 * steps; ++b2) {
          const double q2 = b2 / double(steps);
          if (x2 * v2 - q2 < -1e-12) break;
          if (x1 * v1 - q1 < x2 * v1 - q2 - 1e-12) continue;
          if (x2 * v2 - q2 < x1 * v2 - q1 - 1e-12) continue;
          best = std::max(best, p1_mass * q1 + (1 - p1_mass) * q2);
        }
      }
    }
  }
  return best;
}

Eigen::Index ix(std::size_t k) { return static_cast<Eigen::Index>(k); }

}  // namespace

TEST_SUITE("mech-synth") {
  TEST_CASE("point mass at V0: optimal revenue V0") {
    const double v0 = 0.8;
    const SingleItemMarket market{{{v0}}};
    const Valuations v = market.valuations();
    const SynthesizedMechanism opt =
        optimal_mechanism(JointDist::point_mass(market.space(), 1), v, IcKind::dsic, Objective::revenue(1, v.bound()));
    CHECK(opt.value == doctest::Approx(v0).epsilon(1e-9));
    CHECK(opt.certificate.optimal());
  }

  TEST_CASE("single buyer, value uniform on {1, 2}: LP matches the grid of menus") {
    const SingleItemMarket market{{{1.0, 2.0}}};
    const Valuations v = market.valuations();
    const JointDist d(market.space(), Eigen::Vector3d(0.0, 0.5, 0.5));
    const SynthesizedMechanism opt = optimal_mechanism(d, v, IcKind::dsic, Objective::revenue(1, v.bound()));
    const double grid = grid_menu_revenue(1.0, 2.0, 0.5);
    CHECK(grid == doctest::Approx(1.0));
    CHECK(opt.value == doctest::Approx(grid).epsilon(1e-9));
  }

  TEST_CASE("single buyer, skewed prior: LP matches the grid of menus") {
    const SingleItemMarket market{{{1.0, 3.0}}};
    const Valuations v = market.valuations();
    for (double p1 : {0.2, 0.5, 0.7}) {
      const JointDist d(market.space(), Eigen::Vector3d(0.0, p1, 1.0 - p1));
      const SynthesizedMechanism opt = optimal_mechanism(d, v, IcKind::dsic, Objective::revenue(1, v.bound()));
      CHECK(opt.value == doctest::Approx(grid_menu_revenue(1.0, 3.0, p1)).epsilon(1e-9));
    }
  }

  TEST_CASE("two iid bidders: BIC optimum dominates the two-bidder example") {
    const SingleItemMarket market{{{1.0, 2.0}, {1.0, 2.0}}};
    const Valuations v = market.valuations();
    const TypeSpace s = market.space();
    const Eigen::Vector3d even(0.0, 0.5, 0.5);
    const JointDist d = JointDist::product(s, {even, even});
    const Objective rev = Objective::revenue(2, v.bound());
    const SynthesizedMechanism opt = optimal_mechanism(d, v, IcKind::bic, rev);
    // Example revenue: 0.5 * 1.5 + 0.25 * 1 + 0.25 * 2 = 1.5
    CHECK(opt.value >= 1.5 - 1e-9);
    CHECK(bic_report(opt.mechanism, v, d).eps_star <= 1e-9);
    CHECK(expost_ir_check(opt.mechanism, v).holds());
    const SynthesizedMechanism dsic = optimal_mechanism(d, v, IcKind::dsic, rev);
    CHECK(dsic.value <= opt.value + 1e-9);
    CHECK(dsic_regret(dsic.mechanism, v) <= 1e-9);
  }

  TEST_CASE("synthesized mechanisms re-verify on random instances") {
    gen::Rng rng(8);
    for (int trial = 0; trial < 25; ++trial) {
      const TypeSpace s = gen::space(rng, gen::uniform_index(rng, 1, 2), 3);
      const Valuations v = gen::valuations(rng, s, 3, 1.0);
      const JointDist d = gen::participating_dist(rng, s);
      const Objective o = trial % 2 ? Objective::revenue(s.agents(), 1.0) : Objective::welfare(s.agents(), 1.0);
      const SynthesizedMechanism m = optimal_mechanism(d, v, IcKind::dsic, o);
      CHECK(oracle::dsic_regret(m.mechanism, v) <= 1e-9);
      CHECK(oracle::min_truthful_utility(m.mechanism, v) >= -1e-9);
      CHECK(objective_eval(m.mechanism, v, d, o) == doctest::Approx(m.value).epsilon(1e-7));
      // The null mechanism is feasible, so the optimum is never below it.
      CHECK(m.value >= -1e-9);
    }
  }

  TEST_CASE("separate and bundle pricing") {
    SUBCASE("both items at value 1") {
      const AdditiveInstance inst = additive_instance({{1.0}, {1.0}}, Eigen::VectorXd::Ones(1));
      CHECK(srev(inst).revenue == doctest::Approx(2.0));
      CHECK(brev(inst).revenue == doctest::Approx(2.0));
      CHECK(optimal_additive(inst).value == doctest::Approx(2.0).epsilon(1e-9));
    }
    SUBCASE("one item, value uniform on {1, 2}") {
      const AdditiveInstance inst = additive_instance({{1.0, 2.0}}, Eigen::Vector2d(0.5, 0.5));
      CHECK(srev(inst).revenue == doctest::Approx(1.0));
      CHECK(brev(inst).revenue == doctest::Approx(1.0));
    }
    SUBCASE("random correlated 2-item tables against a full price sweep") {
      std::mt19937_64 rng(23);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (int trial = 0; trial < 30; ++trial) {
        std::vector<std::vector<double>> values{{0.5, 1.25, 2.0}, {0.75, 1.5}};
        Eigen::VectorXd mass(6);
        for (Eigen::Index k = 0; k < 6; ++k) mass(k) = u(rng) + 0.01;
        mass /= mass.sum();
        const AdditiveInstance inst = additive_instance(values, mass);
        double best_sep = 0.0;
        double best_bundle = 0.0;
        std::vector<double> bundle_prices;
        for (double a : values[0]) {
          for (double b : values[1]) bundle_prices.push_back(a + b);
        }
        for (double p0 : values[0]) {
          for (double p1 : values[1]) {
            double rev = 0.0;
            for (std::size_t i = 0; i < 3; ++i) {
              for (std::size_t j = 0; j < 2; ++j) {
                const double w = mass(ix(2 * i + j));
                rev += w * ((values[0][i] >= p0 ? p0 : 0.0) + (values[1][j] >= p1 ? p1 : 0.0));
              }
            }
            best_sep = std::max(best_sep, rev);
          }
        }
        for (double p : bundle_prices) {
          double rev = 0.0;
          for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 2; ++j) {
              if (values[0][i] + values[1][j] >= p) rev += mass(ix(2 * i + j)) * p;
            }
          }
          best_bundle = std::max(best_bundle, rev);
        }
        CHECK(srev(inst).revenue == doctest::Approx(best_sep).epsilon(1e-12));
        CHECK(brev(inst).revenue == doctest::Approx(best_bundle).epsilon(1e-12));
        const double rev = optimal_additive(inst).value;
        CHECK(rev >= std::max(best_sep, best_bundle) - 1e-9);
      }
    }
  }

  TEST_CASE("prophet threshold") {
    SUBCASE("single agent at c") {
      const SingleItemMarket market{{{0.6}}};
      const std::vector<Eigen::VectorXd> marg{Eigen::Vector2d(0.0, 1.0)};
      const double tau = prophet_threshold(market, marg);
      CHECK(tau == doctest::Approx(0.3));
      const Mechanism m = threshold_policy(market, tau);
      const JointDist d = JointDist::product(market.space(), marg);
      CHECK(objective_eval(m, market.valuations(), d, Objective::welfare(1, 0.6)) == doctest::Approx(0.6));
      CHECK(prophet_benchmark(market, d) == doctest::Approx(0.6));
    }
    SUBCASE("a long shot arriving before a sure thing") {
      // Agent 0: 10 with probability 0.1, otherwise absent. Agent 1: always 1.
      const SingleItemMarket market{{{10.0}, {1.0}}};
      const std::vector<Eigen::VectorXd> marg{Eigen::Vector2d(0.9, 0.1), Eigen::Vector2d(0.0, 1.0)};
      const JointDist d = JointDist::product(market.space(), marg);
      CHECK(prophet_benchmark(market, d) == doctest::Approx(1.9));
      const double tau = prophet_threshold(market, marg);
      CHECK(tau == doctest::Approx(0.95));
      const Mechanism m = threshold_policy(market, tau);
      const Valuations v = market.valuations();
      const double welfare = oracle::expected_welfare(m, v, d);
      CHECK(welfare == doctest::Approx(1.9));
      CHECK(objective_eval(m, v, d, Objective::welfare(2, v.bound())) == doctest::Approx(welfare));
    }
    SUBCASE("random independent markets keep half the prophet") {
      gen::Rng rng(31);
      for (int trial = 0; trial < 50; ++trial) {
        const SingleItemMarket market = gen::market(rng, 4, 5, 1.0);
        const std::vector<Eigen::VectorXd> marg = gen::participating_marginals(rng, market.space());
        const JointDist d = JointDist::product(market.space(), marg);
        const Mechanism m = threshold_policy(market, prophet_threshold(market, marg));
        const double welfare = oracle::expected_welfare(m, market.valuations(), d);
        CHECK(welfare >= prophet_benchmark(market, d) / 2.0 - 1e-12);
      }
    }
  }

  TEST_CASE("posted prices follow the arrival order") {
    const SingleItemMarket market{{{1.0}, {1.0}}};
    const Mechanism m = posted_prices(market, {0.5, 0.25}, {1, 0});
    const std::size_t both = market.space().encode(std::vector<std::size_t>{1, 1});
    CHECK(m.probability(both, 2) == 1.0);
    CHECK(m.payment(both, 1) == 0.25);
    CHECK(m.payment(both, 0) == 0.0);
  }
}
