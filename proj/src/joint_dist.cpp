#include "robmech/joint_dist.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "robmech/errors.hpp"

namespace robmech {

JointDist::JointDist(TypeSpace space, Eigen::VectorXd mass) : space_(std::move(space)), mass_(std::move(mass)) {
  if (static_cast<std::size_t>(mass_.size()) != space_.profiles()) {
    throw DimensionError("mass vector length does not match the number of profiles");
  }
  if (!mass_.allFinite()) throw ValidationError("masses must be finite");
  if (mass_.size() > 0 && mass_.minCoeff() < 0.0) throw ValidationError("masses must be nonnegative");
  if (std::abs(mass_.sum() - 1.0) > kMassTol) throw ValidationError("masses must sum to 1");
}

JointDist JointDist::point_mass(TypeSpace space, std::size_t profile) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.profiles()));
  if (profile >= space.profiles()) throw DimensionError("profile index out of range");
  m(static_cast<Eigen::Index>(profile)) = 1.0;
  return JointDist(std::move(space), std::move(m));
}

JointDist JointDist::uniform(TypeSpace space) {
  const auto n = static_cast<Eigen::Index>(space.profiles());
  return JointDist(std::move(space), Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
}

JointDist JointDist::product(TypeSpace space, const std::vector<Eigen::VectorXd>& marginals) {
  if (marginals.size() != space.agents()) throw DimensionError("one marginal per agent required");
  for (std::size_t i = 0; i < marginals.size(); ++i) {
    if (static_cast<std::size_t>(marginals[i].size()) != space.types(i)) {
      throw DimensionError("marginal " + std::to_string(i) + " has the wrong length");
    }
  }
  Eigen::VectorXd m(static_cast<Eigen::Index>(space.profiles()));
  for (std::size_t t = 0; t < space.profiles(); ++t) {
    double w = 1.0;
    for (std::size_t i = 0; i < space.agents(); ++i) w *= marginals[i](static_cast<Eigen::Index>(space.type_of(t, i)));
    m(static_cast<Eigen::Index>(t)) = w;
  }
  return JointDist(std::move(space), std::move(m));
}

JointDist JointDist::from_weights(TypeSpace space, Eigen::VectorXd weights) {
  if (weights.size() > 0 && weights.minCoeff() < 0.0) throw ValidationError("weights must be nonnegative");
  const double total = weights.sum();
  if (!(total > 0.0) || !std::isfinite(total)) throw ValidationError("weights must have positive finite total");
  weights /= total;
  return JointDist(std::move(space), std::move(weights));
}

std::vector<std::size_t> JointDist::support() const {
  std::vector<std::size_t> out;
  for (Eigen::Index k = 0; k < mass_.size(); ++k) {
    if (mass_(k) > 0.0) out.push_back(static_cast<std::size_t>(k));
  }
  return out;
}

double tv_distance(const JointDist& p, const JointDist& q) {
  require_same_space(p.space(), q.space(), "tv_distance");
  return total_variation(p.mass(), q.mass());
}

Coupling optimal_coupling(const JointDist& p, const JointDist& q) {
  require_same_space(p.space(), q.space(), "optimal_coupling");
  return Coupling{maximal_coupling(p.mass(), q.mass())};
}

DualWitness dual_witness(const JointDist& p, const JointDist& q) {
  require_same_space(p.space(), q.space(), "dual_witness");
  return DualWitness{tv_witness(p.mass(), q.mass())};
}

Eigen::VectorXd marginal(const JointDist& d, std::size_t agent) {
  const auto& s = d.space();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.types(agent)));
  for (std::size_t t = 0; t < s.profiles(); ++t) m(static_cast<Eigen::Index>(s.type_of(t, agent))) += d[t];
  return m;
}

std::vector<Eigen::VectorXd> marginals(const JointDist& d) {
  std::vector<Eigen::VectorXd> out;
  for (std::size_t i = 0; i < d.space().agents(); ++i) out.push_back(marginal(d, i));
  return out;
}

Eigen::VectorXd conditional(const JointDist& d, std::size_t agent, std::size_t type) {
  const auto& s = d.space();
  if (type >= s.types(agent)) throw DimensionError("type index out of range");
  Eigen::VectorXd slice(static_cast<Eigen::Index>(s.others(agent)));
  for (std::size_t o = 0; o < s.others(agent); ++o) slice(static_cast<Eigen::Index>(o)) = d[s.compose(agent, type, o)];
  const double total = slice.sum();
  if (!(total > 0.0)) {
    throw ZeroMassError("cannot condition on type '" + s.label(agent, type) + "' of agent " + std::to_string(agent) +
                        ": it has zero probability");
  }
  return slice / total;
}

ConditionalTvReport verify_conditional_tv(const JointDist& p, const JointDist& q, std::size_t agent, double q_level) {
  require_same_space(p.space(), q.space(), "verify_conditional_tv");
  if (!(q_level > 0.0) || q_level > 1.0) throw ValidationError("q must lie in (0, 1]");
  ConditionalTvReport r;
  r.agent = agent;
  r.q = q_level;
  r.joint_tv = tv_distance(p, q);
  r.threshold = 2.0 * r.joint_tv / q_level;
  const Eigen::VectorXd px = marginal(p, agent);
  const Eigen::VectorXd qx = marginal(q, agent);
  for (std::size_t x = 0; x < p.space().types(agent); ++x) {
    const double wq = qx(static_cast<Eigen::Index>(x));
    if (!(wq > 0.0)) continue;
    double dist = 1.0;
    if (px(static_cast<Eigen::Index>(x)) > 0.0) {
      dist = total_variation(conditional(p, agent, x), conditional(q, agent, x));
    } else {
      ++r.undefined_conditionals;
    }
    r.expected_conditional_tv += wq * dist;
    if (dist > r.threshold) r.exceedance += wq;
  }
  return r;
}

JointDist perturb_within_tv(const JointDist& d, double delta, PerturbMode mode, std::uint64_t seed) {
  if (!(delta >= 0.0) || delta > 1.0) throw ValidationError("delta must lie in [0, 1]");
  if (delta == 0.0) return d;
  std::vector<std::size_t> support = d.support();
  if (mode == PerturbMode::same_support && support.size() < 2) {
    throw PreconditionError("same-support perturbation needs at least two support points");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(support.begin(), support.end(), rng);

  std::vector<std::size_t> donors;
  std::vector<std::size_t> receivers;
  if (mode == PerturbMode::same_support) {
    std::uniform_int_distribution<std::size_t> split(1, support.size() - 1);
    const std::size_t k = split(rng);
    donors.assign(support.begin(), support.begin() + static_cast<std::ptrdiff_t>(k));
    receivers.assign(support.begin() + static_cast<std::ptrdiff_t>(k), support.end());
  } else {
    const std::size_t all = d.size();
    const std::size_t max_donors = support.size() == all ? support.size() - 1 : support.size();
    if (max_donors == 0) return d;
    std::uniform_int_distribution<std::size_t> split(1, max_donors);
    donors.assign(support.begin(), support.begin() + static_cast<std::ptrdiff_t>(split(rng)));
    std::vector<char> is_donor(all, 0);
    for (std::size_t k : donors) is_donor[k] = 1;
    for (std::size_t k = 0; k < all; ++k) {
      if (!is_donor[k]) receivers.push_back(k);
    }
  }

  // Donors never drop to zero in same-support mode.
  const double keep = mode == PerturbMode::same_support ? 1.0 / 1024.0 : 0.0;
  Eigen::VectorXd m = d.mass();
  std::vector<double> capacity;
  for (std::size_t k : donors) capacity.push_back(m(static_cast<Eigen::Index>(k)) * (1.0 - keep));

  std::uniform_real_distribution<double> share(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick_donor(0, donors.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_receiver(0, receivers.size() - 1);
  double remaining = delta;
  auto move = [&](std::size_t j, double amount) {
    const std::size_t r = receivers[pick_receiver(rng)];
    m(static_cast<Eigen::Index>(donors[j])) -= amount;
    m(static_cast<Eigen::Index>(r)) += amount;
    capacity[j] -= amount;
    remaining -= amount;
  };
  for (std::size_t step = 0; step < 4 * donors.size() && remaining > 0.0; ++step) {
    const std::size_t j = pick_donor(rng);
    move(j, std::min(remaining, capacity[j] * share(rng)));
  }
  for (std::size_t j = 0; j < donors.size() && remaining > 0.0; ++j) {
    move(j, std::min(remaining, capacity[j]));
  }
  m = m.cwiseMax(0.0);
  return JointDist::from_weights(d.space(), std::move(m));
}

JointDist shift_mass(const JointDist& d, std::size_t from, std::size_t to, double amount) {
  if (from >= d.size() || to >= d.size()) throw DimensionError("profile index out of range");
  if (!(amount >= 0.0) || amount > d[from] + kMassTol) throw ValidationError("cannot move more mass than present");
  Eigen::VectorXd m = d.mass();
  m(static_cast<Eigen::Index>(from)) = std::max(0.0, m(static_cast<Eigen::Index>(from)) - amount);
  m(static_cast<Eigen::Index>(to)) += amount;
  return JointDist::from_weights(d.space(), std::move(m));
}

JointDist product_of_marginals(const JointDist& d) { return JointDist::product(d.space(), marginals(d)); }

bool is_product(const JointDist& d, double tol) {
  const JointDist prod = product_of_marginals(d);
  return (prod.mass() - d.mass()).cwiseAbs().maxCoeff() <= tol;
}

WeakDependenceReport verify_weak_dependence(const JointDist& dhat, const JointDist& dp) {
  require_same_space(dhat.space(), dp.space(), "verify_weak_dependence");
  if (!is_product(dp)) throw PreconditionError("reference distribution is not a product distribution");
  WeakDependenceReport r;
  r.agents = dhat.space().agents();
  r.epsilon = tv_distance(dhat, dp);
  r.lhs = tv_distance(product_of_marginals(dhat), dhat);
  r.rhs = static_cast<double>(r.agents + 1) * r.epsilon;
  return r;
}

}  // namespace robmech
