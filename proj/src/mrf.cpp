#include "robmech/mrf.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "robmech/errors.hpp"

namespace robmech {

namespace {

Eigen::Index ix(std::size_t k) { return static_cast<Eigen::Index>(k); }

// Mixed-radix enumeration of symbol configurations, node 0 most significant.
struct Configs {
  std::vector<std::size_t> radix;
  std::vector<std::size_t> stride;
  std::size_t count = 1;

  explicit Configs(std::vector<std::size_t> r) : radix(std::move(r)), stride(radix.size()) {
    for (std::size_t v = radix.size(); v-- > 0;) {
      stride[v] = count;
      if (radix[v] != 0 && count > kMaxMrfStates / radix[v]) {
        throw ValidationError("MRF state space exceeds " + std::to_string(kMaxMrfStates) + " configurations");
      }
      count *= radix[v];
    }
    if (count > kMaxMrfStates) {
      throw ValidationError("MRF state space exceeds " + std::to_string(kMaxMrfStates) + " configurations");
    }
  }
  std::size_t digit(std::size_t c, std::size_t v) const { return (c / stride[v]) % radix[v]; }
};

Configs configs_of(const PairwiseMRF& mrf) {
  std::vector<std::size_t> r;
  for (std::size_t v = 0; v < mrf.nodes(); ++v) r.push_back(mrf.alphabet(v));
  return Configs(std::move(r));
}

Eigen::VectorXd log_weights(const PairwiseMRF& mrf, const Configs& cf) {
  Eigen::VectorXd lw(ix(cf.count));
  for (std::size_t c = 0; c < cf.count; ++c) {
    double s = 0.0;
    for (std::size_t v = 0; v < mrf.nodes(); ++v) s += mrf.node[v](ix(cf.digit(c, v)));
    for (const auto& e : mrf.edges) s += e.psi(ix(cf.digit(c, e.u)), ix(cf.digit(c, e.w)));
    lw(ix(c)) = s;
  }
  return lw;
}

// Normalized probabilities over symbol configurations.
Eigen::VectorXd table(const PairwiseMRF& mrf, const Configs& cf) {
  const Eigen::VectorXd lw = log_weights(mrf, cf);
  Eigen::VectorXd p = (lw.array() - lw.maxCoeff()).exp().matrix();
  return p / p.sum();
}

JointDist embed(const PairwiseMRF& mrf, const Configs& cf, const Eigen::VectorXd& p) {
  const TypeSpace s = mrf_space(mrf);
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(ix(s.profiles()));
  std::vector<std::size_t> types(mrf.nodes());
  for (std::size_t c = 0; c < cf.count; ++c) {
    for (std::size_t v = 0; v < mrf.nodes(); ++v) types[v] = cf.digit(c, v) + 1;
    mass(ix(s.encode(types))) = p(ix(c));
  }
  return JointDist(s, std::move(mass));
}

}  // namespace

void PairwiseMRF::validate() const {
  if (node.empty()) throw ValidationError("MRF needs at least one node");
  for (std::size_t v = 0; v < node.size(); ++v) {
    if (node[v].size() == 0) throw ValidationError("node " + std::to_string(v) + " has an empty alphabet");
    if (!node[v].allFinite()) throw ValidationError("node potentials must be finite");
  }
  for (const auto& e : edges) {
    if (e.u >= node.size() || e.w >= node.size()) throw ValidationError("edge endpoint out of range");
    if (e.u == e.w) throw ValidationError("self-loops are not pairwise edges");
    if (static_cast<std::size_t>(e.psi.rows()) != alphabet(e.u) ||
        static_cast<std::size_t>(e.psi.cols()) != alphabet(e.w)) {
      throw ValidationError("edge potential shape does not match the endpoint alphabets");
    }
    if (!e.psi.allFinite()) throw ValidationError("edge potentials must be finite");
  }
}

TypeSpace mrf_space(const PairwiseMRF& mrf) {
  std::vector<std::vector<std::string>> labels;
  for (std::size_t v = 0; v < mrf.nodes(); ++v) {
    std::vector<std::string> l{kBottomLabel};
    for (std::size_t c = 0; c < mrf.alphabet(v); ++c) l.push_back(std::to_string(c));
    labels.push_back(std::move(l));
  }
  return TypeSpace(std::move(labels));
}

JointDist mrf_to_joint(const PairwiseMRF& mrf) {
  mrf.validate();
  const Configs cf = configs_of(mrf);
  return embed(mrf, cf, table(mrf, cf));
}

double log_partition(const PairwiseMRF& mrf) {
  mrf.validate();
  const Eigen::VectorXd lw = log_weights(mrf, configs_of(mrf));
  const double top = lw.maxCoeff();
  return top + std::log((lw.array() - top).exp().sum());
}

DeltaReport weighted_degree(const PairwiseMRF& mrf) {
  mrf.validate();
  DeltaReport r;
  r.degree.assign(mrf.nodes(), 0.0);
  for (std::size_t v = 0; v < mrf.nodes(); ++v) {
    std::set<std::size_t> nbr_set;
    for (const auto& e : mrf.edges) {
      if (e.u == v) nbr_set.insert(e.w);
      if (e.w == v) nbr_set.insert(e.u);
    }
    if (nbr_set.empty()) continue;
    // Local configurations: node v first, then its neighbours.
    std::vector<std::size_t> local{v};
    local.insert(local.end(), nbr_set.begin(), nbr_set.end());
    std::vector<std::size_t> radix;
    for (std::size_t u : local) radix.push_back(mrf.alphabet(u));
    const Configs cf(radix);
    std::vector<std::size_t> pos(mrf.nodes(), 0);
    for (std::size_t k = 0; k < local.size(); ++k) pos[local[k]] = k;
    for (std::size_t c = 0; c < cf.count; ++c) {
      double s = 0.0;
      for (const auto& e : mrf.edges) {
        if (e.u != v && e.w != v) continue;
        s += e.psi(ix(cf.digit(c, pos[e.u])), ix(cf.digit(c, pos[e.w])));
      }
      r.degree[v] = std::max(r.degree[v], std::abs(s));
    }
  }
  for (double d : r.degree) r.delta = std::max(r.delta, d);
  return r;
}

RatioBoundReport check_ratio_bound(const PairwiseMRF& mrf, std::uint64_t seed, std::size_t random_pairs) {
  mrf.validate();
  const Configs cf = configs_of(mrf);
  const Eigen::VectorXd p = table(mrf, cf);
  const double delta = weighted_degree(mrf).delta;
  RatioBoundReport r;
  r.lower = std::exp(-4.0 * delta);
  r.upper = std::exp(4.0 * delta);
  r.min_ratio = std::numeric_limits<double>::infinity();
  r.max_ratio = 0.0;

  // P_v(symbol, others-config) for each node.
  std::vector<Eigen::MatrixXd> slices(mrf.nodes());
  for (std::size_t v = 0; v < mrf.nodes(); ++v) {
    const std::size_t k = mrf.alphabet(v);
    const std::size_t others = cf.count / k;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(ix(k), ix(others));
    for (std::size_t c = 0; c < cf.count; ++c) {
      const std::size_t hi = c / (cf.stride[v] * k);
      const std::size_t lo = c % cf.stride[v];
      m(ix(cf.digit(c, v)), ix(hi * cf.stride[v] + lo)) += p(ix(c));
    }
    slices[v] = std::move(m);
  }
  auto record = [&](double joint, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) {
      ++r.skipped;
      return;
    }
    const double ratio = joint / (a * b);
    ++r.tested;
    r.min_ratio = std::min(r.min_ratio, ratio);
    r.max_ratio = std::max(r.max_ratio, ratio);
  };
  for (std::size_t v = 0; v < mrf.nodes(); ++v) {
    const Eigen::MatrixXd& m = slices[v];
    const Eigen::VectorXd rows = m.rowwise().sum();
    const Eigen::VectorXd cols = m.colwise().sum().transpose();
    for (Eigen::Index a = 0; a < m.rows(); ++a) {
      for (Eigen::Index b = 0; b < m.cols(); ++b) record(m(a, b), rows(a), cols(b));
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_node(0, mrf.nodes() - 1);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t k = 0; k < random_pairs; ++k) {
    const Eigen::MatrixXd& m = slices[pick_node(rng)];
    Eigen::VectorXd e(m.rows());
    Eigen::VectorXd f(m.cols());
    do {
      for (Eigen::Index a = 0; a < e.size(); ++a) e(a) = coin(rng) ? 1.0 : 0.0;
    } while (e.sum() == 0.0);
    do {
      for (Eigen::Index b = 0; b < f.size(); ++b) f(b) = coin(rng) ? 1.0 : 0.0;
    } while (f.sum() == 0.0);
    record(e.dot(m * f), e.dot(m.rowwise().sum()), f.dot(m.colwise().sum().transpose()));
  }
  if (r.tested == 0) r.min_ratio = r.max_ratio = 1.0;
  return r;
}

KlTvReport check_kl_tv_bound(const PairwiseMRF& mrf) {
  mrf.validate();
  PairwiseMRF free = mrf;
  free.edges.clear();
  const Configs cf = configs_of(mrf);
  const Eigen::VectorXd d = table(mrf, cf);
  const Eigen::VectorXd dp = table(free, cf);
  KlTvReport r;
  r.delta = weighted_degree(mrf).delta;
  const double m = static_cast<double>(mrf.nodes());
  r.tv = total_variation(d, dp);
  r.tv_bound = std::min(std::sqrt(m * r.delta / 4.0), std::sqrt(1.0 - std::exp(-m * r.delta / 2.0)));
  r.kl_forward = kl_divergence(d, dp);
  r.kl_backward = kl_divergence(dp, d);
  r.kl_bound = m * r.delta / 2.0;
  return r;
}

MrfGap mrfgap_instance(double k) {
  if (!(k > 0.0) || !(k < 0.5)) throw ValidationError("k must lie in (0, 1/2)");
  const double k2 = k * k;
  const double k3 = k2 * k;
  Eigen::MatrixXd joint(2, 2);
  joint << 1.0 - 2.0 * k + k3, k - k3, k - k3, k3;
  TypeSpace s({{kBottomLabel, "A", "B"}, {kBottomLabel, "A", "B"}});
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(9);
  for (std::size_t a = 0; a < 2; ++a) {
    for (std::size_t b = 0; b < 2; ++b) {
      const std::size_t t[2] = {a + 1, b + 1};
      mass(ix(s.encode(t))) = joint(ix(a), ix(b));
    }
  }
  MrfGap g;
  g.dist = JointDist(s, std::move(mass));
  g.k = k;
  g.tv = tv_distance(g.dist, product_of_marginals(g.dist));
  g.tv_expected = 2.0 * (k2 - k3);
  g.tv_bound = 2.0 * k2;
  g.delta_lower = 0.25 * std::log(1.0 / k);
  const Eigen::VectorXd m0 = marginal(g.dist, 0);
  const Eigen::VectorXd m1 = marginal(g.dist, 1);
  g.bb_ratio = joint(1, 1) / (m0(2) * m1(2));
  g.realized_delta = weighted_degree(two_node_realization(joint)).delta;
  return g;
}

PairwiseMRF two_node_realization(const Eigen::MatrixXd& joint) {
  if (joint.size() == 0 || !(joint.minCoeff() > 0.0)) {
    throw ValidationError("realization needs strictly positive masses");
  }
  PairwiseMRF mrf;
  mrf.node = {Eigen::VectorXd::Zero(joint.rows()), Eigen::VectorXd::Zero(joint.cols())};
  mrf.edges.push_back({0, 1, joint.array().log().matrix()});
  return mrf;
}

}  // namespace robmech
