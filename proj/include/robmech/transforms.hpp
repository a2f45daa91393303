#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "robmech/joint_dist.hpp"
#include "robmech/mechanism.hpp"

namespace robmech {

/// Per-agent subset T_i^+ of types that always contains the
/// non-participation type; the rest form T_i^-.
class TypeRestriction {
 public:
  TypeRestriction() = default;
  /// `members[i]` lists the type indices of T_i^+ (any order, no repeats).
  TypeRestriction(const TypeSpace& space, std::vector<std::vector<std::size_t>> members);
  static TypeRestriction full(const TypeSpace& space);

  const TypeSpace& space() const noexcept { return space_; }
  bool contains(std::size_t agent, std::size_t type) const { return inside_[agent][type]; }
  /// Sorted members of T_i^+.
  const std::vector<std::size_t>& members(std::size_t agent) const { return members_[agent]; }
  bool is_full() const;

  /// Type space made of the T^+ labels, in their original order.
  const TypeSpace& restricted() const noexcept { return restricted_; }
  /// Full-space type index of the k-th restricted type.
  std::size_t lift(std::size_t agent, std::size_t k) const { return members_[agent][k]; }
  /// Restricted index of a T_i^+ type.
  std::size_t lower(std::size_t agent, std::size_t type) const;
  /// Restricted profile of a full profile that lies inside T^+.
  std::size_t lower_profile(std::size_t profile) const;
  std::size_t lift_profile(std::size_t restricted_profile) const;

  /// beta = max_i (1 - D_i(T_i^+)).
  double beta(const JointDist& d) const;

 private:
  TypeSpace space_;
  TypeSpace restricted_;
  std::vector<std::vector<std::size_t>> members_;
  std::vector<std::vector<bool>> inside_;
};

Valuations restrict_valuations(const Valuations& v, const TypeRestriction& r);
Mechanism restrict_mechanism(const Mechanism& m, const TypeRestriction& r);

/// Extends a DSIC, ex-post IR mechanism on T^+ to the full space: a single
/// agent outside T^+ is served as her best T^+ report with everybody else
/// getting nothing; two or more outsiders get the null outcome. Throws
/// PreconditionError when M is not DSIC and IR on T^+ or when the
/// allocation set lacks the single-agent projections this needs.
Mechanism dsic_extend(const Mechanism& m_plus, const TypeRestriction& r, const Valuations& v);

struct BicExtension {
  Mechanism mechanism;
  /// tau[i][t]: the T_i^+ type that t is mapped to (identity on T_i^+).
  std::vector<std::vector<std::size_t>> tau;
  /// Payment scaling per T_i^- type (NaN for T_i^+ and for zero denominators).
  std::vector<std::vector<double>> ratio;
  std::size_t zero_denominators = 0;
  std::size_t clamped_payments = 0;
  double beta = 0;
  /// Largest interim regret of M for T^+ true types against any report.
  double input_epsilon = 0;
};

/// BIC extension of a mechanism defined on the full space whose behaviour
/// on T^- reports is to be replaced. `d` must be a product distribution.
BicExtension bic_extend(const Mechanism& m, const TypeRestriction& r, const Valuations& v, const JointDist& d);

/// 4 (3 delta / 2 + beta n) H + 4 delta H + eps
double bic_extension_regret_bound(double delta, double beta, std::size_t agents, double bound, double eps);

struct EpsqReduction {
  BicExtension extension;
  TypeRestriction restriction;
  double epsilon = 0;
  double q = 0;
  double measured_epsilon = 0;  ///< eps* of the output under d
  double chain_bound = 0;       ///< 4 beta n H + eps
  double revenue_before = 0;
  double revenue_after = 0;
  double revenue_bound = 0;     ///< Rev(M, D) - n q V
};

/// Keeps the types whose interim regret is at most eps (plus
/// non-participation) and BIC-extends from there. Throws PreconditionError
/// unless M is (eps, q)-BIC w.r.t. the product prior d.
EpsqReduction reduce_epsq_bic(const Mechanism& m, const Valuations& v, const JointDist& d, double eps, double q);

/// Transports d onto the target marginals one agent at a time; each step
/// moves exactly the marginal TV distance, keeping the other coordinates.
JointDist moving_mass(const JointDist& d, const std::vector<Eigen::VectorXd>& targets);

}  // namespace robmech
