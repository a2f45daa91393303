#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "robmech/divergence.hpp"
#include "robmech/type_space.hpp"

namespace robmech {

/// Conservation tolerance for probability masses.
inline constexpr double kMassTol = 1e-12;
/// Tolerance when comparing different characterizations of one quantity.
inline constexpr double kCrossTol = 1e-10;

/// Probability mass function over the profiles of a TypeSpace.
class JointDist {
 public:
  JointDist() = default;
  /// Validates nonnegativity and normalization (within kMassTol).
  JointDist(TypeSpace space, Eigen::VectorXd mass);

  static JointDist point_mass(TypeSpace space, std::size_t profile);
  static JointDist uniform(TypeSpace space);
  /// Independent product of per-agent marginals.
  static JointDist product(TypeSpace space, const std::vector<Eigen::VectorXd>& marginals);
  /// Normalizes nonnegative weights first.
  static JointDist from_weights(TypeSpace space, Eigen::VectorXd weights);

  const TypeSpace& space() const noexcept { return space_; }
  const Eigen::VectorXd& mass() const noexcept { return mass_; }
  double operator[](std::size_t profile) const { return mass_(static_cast<Eigen::Index>(profile)); }
  std::size_t size() const noexcept { return static_cast<std::size_t>(mass_.size()); }

  /// Profiles with strictly positive mass.
  std::vector<std::size_t> support() const;

 private:
  TypeSpace space_;
  Eigen::VectorXd mass_;
};

/// Joint mass over pairs of profiles (row = first argument, column = second).
struct Coupling {
  Eigen::MatrixXd mass;

  Eigen::VectorXd first_marginal() const { return mass.rowwise().sum(); }
  Eigen::VectorXd second_marginal() const { return mass.colwise().sum().transpose(); }
  double disagreement() const { return mass.sum() - mass.trace(); }
};

/// Values in [-1/2, 1/2] per profile.
struct DualWitness {
  Eigen::VectorXd value;

  /// E_P[f] - E_Q[f].
  double gap(const JointDist& p, const JointDist& q) const { return value.dot(p.mass() - q.mass()); }
};

double tv_distance(const JointDist& p, const JointDist& q);
Coupling optimal_coupling(const JointDist& p, const JointDist& q);
DualWitness dual_witness(const JointDist& p, const JointDist& q);

/// Per-agent marginal over T_i.
Eigen::VectorXd marginal(const JointDist& d, std::size_t agent);
std::vector<Eigen::VectorXd> marginals(const JointDist& d);

/// Distribution of t_{-i} given t_i (indexed by TypeSpace::others_index).
/// Throws ZeroMassError when Pr[t_i] = 0.
Eigen::VectorXd conditional(const JointDist& d, std::size_t agent, std::size_t type);

/// Markov-type bound on conditional distances.
struct ConditionalTvReport {
  std::size_t agent = 0;
  double q = 0;
  double joint_tv = 0;
  double threshold = 0;    ///< 2 TV(P, Q) / q
  double exceedance = 0;   ///< Q_X-mass of x whose conditional TV exceeds the threshold
  double expected_conditional_tv = 0;
  std::size_t undefined_conditionals = 0;  ///< x with Q_X(x) > 0 but P_X(x) = 0 (counted at TV 1)
  bool holds() const { return exceedance <= q + kMassTol; }
};

/// X is `agent`'s type and Y the remaining profile.
ConditionalTvReport verify_conditional_tv(const JointDist& p, const JointDist& q, std::size_t agent, double q_level);

enum class PerturbMode { same_support, free };

/// Random distribution within TV distance delta of d. Mass moves from a
/// random donor set to a disjoint receiver set, so the realized distance
/// equals the moved total.
JointDist perturb_within_tv(const JointDist& d, double delta, PerturbMode mode, std::uint64_t seed);

/// Moves `amount` of mass from one profile to another.
JointDist shift_mass(const JointDist& d, std::size_t from, std::size_t to, double amount);

JointDist product_of_marginals(const JointDist& d);
bool is_product(const JointDist& d, double tol = kMassTol);

struct WeakDependenceReport {
  std::size_t agents = 0;
  double epsilon = 0;  ///< TV(D-hat, D^p)
  double lhs = 0;      ///< TV(prod of D-hat's marginals, D-hat)
  double rhs = 0;      ///< (n + 1) epsilon
  bool holds() const { return lhs <= rhs + kCrossTol; }
};

/// Throws PreconditionError when `dp` is not a product distribution.
WeakDependenceReport verify_weak_dependence(const JointDist& dhat, const JointDist& dp);

}  // namespace robmech
