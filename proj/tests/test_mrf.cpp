#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "robmech/divergence.hpp"
#include "robmech/errors.hpp"
#include "robmech/generate.hpp"
#include "robmech/mrf.hpp"

using namespace robmech;

namespace {

PairwiseMRF edgeless(std::vector<Eigen::VectorXd> node) {
  PairwiseMRF mrf;
  mrf.node = std::move(node);
  return mrf;
}

PairwiseMRF single_edge(double c) {
  PairwiseMRF mrf = edgeless({Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()});
  Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(2, 2);
  psi(1, 1) = c;
  mrf.edges.push_back({0, 1, psi});
  return mrf;
}

}  // namespace

TEST_SUITE("mrf-lab") {
  TEST_CASE("zero potentials give the uniform law on symbols") {
    const PairwiseMRF mrf = edgeless({Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(3)});
    const JointDist d = mrf_to_joint(mrf);
    const TypeSpace& s = d.space();
    for (std::size_t t = 0; t < s.profiles(); ++t) {
      const bool bottom = s.type_of(t, 0) == 0 || s.type_of(t, 1) == 0;
      CHECK(d.mass()(static_cast<Eigen::Index>(t)) == doctest::Approx(bottom ? 0.0 : 1.0 / 6.0));
    }
    CHECK(log_partition(mrf) == doctest::Approx(std::log(6.0)));
  }

  TEST_CASE("edgeless field is the product of softmaxes") {
    const Eigen::Vector2d a(0.3, -0.2);
    const Eigen::Vector3d b(1.0, 0.0, -0.5);
    const JointDist d = mrf_to_joint(edgeless({a, b}));
    const auto softmax = [](const Eigen::VectorXd& x) {
      Eigen::VectorXd e(x.size() + 1);
      e(0) = 0.0;
      e.tail(x.size()) = x.array().exp().matrix();
      return Eigen::VectorXd(e / e.sum());
    };
    const JointDist expected = JointDist::product(d.space(), {softmax(a), softmax(b)});
    CHECK((d.mass() - expected.mass()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(weighted_degree(edgeless({a, b})).delta == 0.0);
  }

  TEST_CASE("chain and random fields match brute-force enumeration") {
    gen::Rng rng(83);
    for (int trial = 0; trial < 40; ++trial) {
      const PairwiseMRF mrf = gen::mrf(rng, 4, 3, 1.0);
      const Eigen::VectorXd w = oracle::mrf_table(mrf);
      const JointDist d = mrf_to_joint(mrf);
      REQUIRE(d.mass().size() == w.size());
      CHECK((d.mass() - w / w.sum()).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(log_partition(mrf) == doctest::Approx(std::log(w.sum())).epsilon(1e-12));
      CHECK(weighted_degree(mrf).delta == doctest::Approx(oracle::mrf_delta(mrf)).epsilon(1e-12));
    }
  }

  TEST_CASE("weighted degree") {
    CHECK(weighted_degree(single_edge(0.7)).delta == doctest::Approx(0.7));
    CHECK(weighted_degree(single_edge(-1.3)).delta == doctest::Approx(1.3));
    const DeltaReport r = weighted_degree(single_edge(0.4));
    REQUIRE(r.degree.size() == 2);
    CHECK(r.degree[0] == doctest::Approx(0.4));
    CHECK(r.degree[1] == doctest::Approx(0.4));
  }

  TEST_CASE("ratio bound") {
    SUBCASE("edgeless: every ratio is 1") {
      const RatioBoundReport r = check_ratio_bound(edgeless({Eigen::Vector2d(0.1, 0.4), Eigen::Vector3d(0, 1, 2)}), 5);
      CHECK(r.holds());
      CHECK(r.min_ratio == doctest::Approx(1.0));
      CHECK(r.max_ratio == doctest::Approx(1.0));
      CHECK(r.tested > 0);
    }
    SUBCASE("random fields") {
      gen::Rng rng(89);
      for (int trial = 0; trial < 30; ++trial) {
        const RatioBoundReport r = check_ratio_bound(gen::mrf(rng, 4, 3, 0.8), rng(), 200);
        CHECK(r.holds());
        CHECK(r.min_ratio <= 1.0 + 1e-12);
        CHECK(r.max_ratio >= 1.0 - 1e-12);
      }
    }
  }

  TEST_CASE("KL and TV bounds") {
    SUBCASE("edgeless: zero distance") {
      const KlTvReport r = check_kl_tv_bound(edgeless({Eigen::Vector2d(0.1, 0.4), Eigen::Vector2d(1, 2)}));
      CHECK(r.tv == doctest::Approx(0.0));
      CHECK(r.kl_forward == doctest::Approx(0.0));
      CHECK(r.tv_holds());
      CHECK(r.kl_holds());
    }
    SUBCASE("single weak edge") {
      const KlTvReport r = check_kl_tv_bound(single_edge(0.1));
      CHECK(r.delta == doctest::Approx(0.1));
      CHECK(r.tv_bound == doctest::Approx(std::sqrt(0.05)));
      CHECK(r.kl_bound == doctest::Approx(0.1));
      CHECK(r.tv_holds());
      CHECK(r.kl_holds());
      CHECK(r.kl_forward == doctest::Approx(kl_divergence(
                                              mrf_to_joint(single_edge(0.1)).mass(),
                                              mrf_to_joint(edgeless({Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()}))
                                                  .mass())));
    }
    SUBCASE("random fields") {
      gen::Rng rng(97);
      for (int trial = 0; trial < 50; ++trial) {
        const KlTvReport r = check_kl_tv_bound(gen::mrf(rng, 4, 3, 1.0));
        CHECK(r.tv_holds());
        CHECK(r.kl_holds());
      }
    }
  }

  TEST_CASE("constant shifts of node potentials leave the law unchanged") {
    gen::Rng rng(101);
    PairwiseMRF mrf = gen::mrf(rng, 3, 3, 1.0);
    const JointDist before = mrf_to_joint(mrf);
    const double z = log_partition(mrf);
    mrf.node[0].array() += 2.5;
    CHECK((mrf_to_joint(mrf).mass() - before.mass()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(log_partition(mrf) == doctest::Approx(z + 2.5));
  }

  TEST_CASE("TV bound grows with the edge scale") {
    gen::Rng rng(103);
    const PairwiseMRF base = gen::mrf(rng, 4, 3, 1.0);
    double last = -1.0;
    for (double scale : {0.0, 0.25, 0.5, 1.0, 2.0}) {
      PairwiseMRF mrf = base;
      for (auto& e : mrf.edges) e.psi *= scale;
      const KlTvReport r = check_kl_tv_bound(mrf);
      CHECK(r.tv_bound >= last);
      CHECK(r.tv_holds());
      last = r.tv_bound;
    }
  }

  TEST_CASE("correlated two-item instance") {
    SUBCASE("k = 0.1") {
      const MrfGap g = mrfgap_instance(0.1);
      const Eigen::VectorXd& mass = g.dist.mass();
      const TypeSpace& s = g.dist.space();
      const auto at = [&](std::size_t a, std::size_t b) {
        return mass(static_cast<Eigen::Index>(s.encode(std::vector<std::size_t>{a, b})));
      };
      CHECK(at(1, 1) == doctest::Approx(0.801));
      CHECK(at(1, 2) == doctest::Approx(0.099));
      CHECK(at(2, 1) == doctest::Approx(0.099));
      CHECK(at(2, 2) == doctest::Approx(0.001));
      CHECK(g.tv == doctest::Approx(0.018).epsilon(1e-12));
      CHECK(g.tv == doctest::Approx(g.tv_expected).epsilon(1e-12));
      CHECK(g.tv <= g.tv_bound);
      CHECK(g.delta_lower == doctest::Approx(0.5756462732485115).epsilon(1e-12));
      CHECK(g.bb_ratio == doctest::Approx(0.1));
      CHECK(g.realization_meets_bound());
      const Eigen::VectorXd m0 = marginal(g.dist, 0);
      CHECK(m0(1) == doctest::Approx(0.9));
      CHECK(m0(2) == doctest::Approx(0.1));
    }
    SUBCASE("k = 0.25") {
      const MrfGap g = mrfgap_instance(0.25);
      CHECK(g.tv == doctest::Approx(0.09375).epsilon(1e-12));
      CHECK(g.delta_lower == doctest::Approx(std::log(4.0) / 4.0));
      CHECK(g.realization_meets_bound());
    }
    SUBCASE("k outside (0, 1/2)") {
      CHECK_THROWS_AS(mrfgap_instance(0.0), ValidationError);
      CHECK_THROWS_AS(mrfgap_instance(0.5), ValidationError);
      CHECK_THROWS_AS(mrfgap_instance(-0.1), ValidationError);
    }
  }

  TEST_CASE("invalid fields are rejected") {
    PairwiseMRF mrf = single_edge(1.0);
    mrf.edges[0].w = 0;
    CHECK_THROWS_AS(mrf.validate(), ValidationError);
    PairwiseMRF bad = single_edge(NAN);
    CHECK_THROWS_AS(bad.validate(), ValidationError);
  }
}
