#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "robmech/joint_dist.hpp"
#include "robmech/type_space.hpp"

namespace robmech {

/// Incentive tolerance: regrets at or below this are reported as zero.
inline constexpr double kIcTol = 1e-9;

/// v_i(t_i, a) in [0, H] for every agent, type and allocation.
class Valuations {
 public:
  Valuations() = default;
  /// `table[i]` is types(i) x |allocations|.
  Valuations(TypeSpace space, std::vector<std::string> allocations, std::size_t null_allocation, double bound,
             std::vector<Eigen::MatrixXd> table);

  const TypeSpace& space() const noexcept { return space_; }
  std::size_t allocations() const noexcept { return allocations_.size(); }
  const std::vector<std::string>& allocation_labels() const noexcept { return allocations_; }
  std::size_t null_allocation() const noexcept { return null_; }
  double bound() const noexcept { return bound_; }
  const Eigen::MatrixXd& table(std::size_t agent) const { return table_.at(agent); }
  double operator()(std::size_t agent, std::size_t type, std::size_t allocation) const {
    return table_[agent](static_cast<Eigen::Index>(type), static_cast<Eigen::Index>(allocation));
  }

  /// Allocation that gives `agent` exactly what `allocation` gives it and
  /// every other agent nothing (zero value at every type), if one exists.
  std::optional<std::size_t> solo(std::size_t agent, std::size_t allocation) const;

 private:
  TypeSpace space_;
  std::vector<std::string> allocations_;
  std::size_t null_ = 0;
  double bound_ = 0;
  std::vector<Eigen::MatrixXd> table_;
};

/// Lottery over allocations plus one deterministic payment per agent, for
/// every reported profile.
class Mechanism {
 public:
  Mechanism() = default;
  /// `lottery` is profiles x |allocations|, `payments` is profiles x n.
  Mechanism(TypeSpace space, std::size_t null_allocation, double bound, Eigen::MatrixXd lottery,
            Eigen::MatrixXd payments);

  /// Always the null allocation, never any payment.
  static Mechanism null(const Valuations& v);

  const TypeSpace& space() const noexcept { return space_; }
  std::size_t allocations() const noexcept { return static_cast<std::size_t>(lottery_.cols()); }
  std::size_t null_allocation() const noexcept { return null_; }
  double bound() const noexcept { return bound_; }
  const Eigen::MatrixXd& lottery() const noexcept { return lottery_; }
  const Eigen::MatrixXd& payments() const noexcept { return payments_; }

  double probability(std::size_t profile, std::size_t allocation) const {
    return lottery_(static_cast<Eigen::Index>(profile), static_cast<Eigen::Index>(allocation));
  }
  double payment(std::size_t profile, std::size_t agent) const {
    return payments_(static_cast<Eigen::Index>(profile), static_cast<Eigen::Index>(agent));
  }

  bool operator==(const Mechanism& other) const {
    return space_ == other.space_ && null_ == other.null_ && bound_ == other.bound_ &&
           lottery_ == other.lottery_ && payments_ == other.payments_;
  }

 private:
  TypeSpace space_;
  std::size_t null_ = 0;
  double bound_ = 0;
  Eigen::MatrixXd lottery_;
  Eigen::MatrixXd payments_;
};

void require_compatible(const Mechanism& m, const Valuations& v);

/// Quasi-linear utility of agent i with type `true_type` who reports
/// `report` while the others report the sub-profile `others`.
double utility(const Mechanism& m, const Valuations& v, std::size_t agent, std::size_t true_type, std::size_t report,
               std::size_t others);

/// Utility of agent i with type `true_type` at the reported profile.
double utility_at(const Mechanism& m, const Valuations& v, std::size_t agent, std::size_t true_type,
                  std::size_t profile);

struct IrViolation {
  std::size_t agent;
  std::size_t profile;
  double utility;
};

struct IrReport {
  double min_utility = 0;                 ///< over all truthful (agent, profile)
  double max_bottom_payment = 0;          ///< |p_i| when agent i reports non-participation
  std::vector<IrViolation> violations;    ///< truthful utility below -kIcTol
  bool holds() const { return violations.empty() && max_bottom_payment <= kIcTol; }
};

IrReport expost_ir_check(const Mechanism& m, const Valuations& v);

struct UtilityBoundsReport {
  double min_deviation_utility = 0;  ///< min of t_i(M(t'_i, t_{-i}))
  double max_deviation_utility = 0;
  double min_gain = 0;               ///< min of t_i(M(t)) - t_i(M(t'_i, t_{-i}))
  double max_gain = 0;
  double lower = 0;                  ///< -H
  double upper = 0;                  ///< 3H
  bool holds() const {
    return min_deviation_utility >= lower - kIcTol && max_deviation_utility <= upper + kIcTol;
  }
};

/// Ranges of deviation utilities for an ex-post IR mechanism.
UtilityBoundsReport utility_bounds_check(const Mechanism& m, const Valuations& v);

/// Largest ex-post gain from misreporting, max over (i, t_i, t'_i, t_{-i});
/// never negative since t'_i = t_i is included.
double dsic_regret(const Mechanism& m, const Valuations& v);

/// interim[t][r] = E[u_i(t <- report r)] under the given per-true-type
/// weights over t_{-i}. Rows for types without weights are NaN.
Eigen::MatrixXd interim_utilities(const Mechanism& m, const Valuations& v, std::size_t agent,
                                  const std::vector<std::optional<Eigen::VectorXd>>& weights);

struct InterimRegret {
  std::size_t agent;
  std::size_t true_type;
  std::size_t report;
  double regret;  ///< E[u(report)] - E[u(truth)], zeroed at or below kIcTol
};

/// Interim incentive summary of a mechanism under a prior.
struct ICReport {
  std::vector<InterimRegret> entries;
  /// worst[i][t] = max over reports of the regret, NaN for excluded types.
  std::vector<std::vector<double>> worst;
  /// Marginal mass of each type under the evaluation prior.
  std::vector<Eigen::VectorXd> type_mass;
  double eps_star = 0;

  /// Minimal q such that the mechanism is (eps, q)-BIC.
  double q_at(double eps) const;
  /// Minimal eps such that the mechanism is (eps, q)-BIC.
  double eps_at(double q) const;
  /// Breakpoints (eps, q_at(eps)) of the step function, eps ascending.
  std::vector<std::pair<double, double>> frontier() const;
};

/// Interim regrets under D conditioned on each type; zero-probability types
/// are excluded.
ICReport bic_report(const Mechanism& m, const Valuations& v, const JointDist& d);

/// Same, for an independent prior given by marginals; every type is
/// included because conditionals are the product of the other marginals.
ICReport bic_report_product(const Mechanism& m, const Valuations& v, const std::vector<Eigen::VectorXd>& marginals);

/// Designer objective O(t, M(t)) in [lower, upper].
struct Objective {
  enum class Kind { revenue, welfare, custom };

  Kind kind = Kind::revenue;
  /// Custom only: profiles x |allocations| table and a coefficient on the
  /// total payment.
  Eigen::MatrixXd table;
  double payment_weight = 0;
  double lower = 0;
  double upper = 0;

  double range() const { return upper - lower; }
  bool payment_linear() const { return true; }

  static Objective revenue(std::size_t agents, double bound);
  static Objective welfare(std::size_t agents, double bound);
  static Objective custom(Eigen::MatrixXd table, double payment_weight, double lower, double upper);
  std::string name() const;
};

/// Coefficients of O(t, .) as a linear function of (lottery row, payment row).
struct ObjectiveRow {
  Eigen::VectorXd allocation;
  Eigen::VectorXd payment;
};
ObjectiveRow objective_row(const Objective& o, const Valuations& v, std::size_t profile);

/// O(t, M(t)), validated against [lower, upper].
double objective_at(const Mechanism& m, const Valuations& v, const Objective& o, std::size_t profile);

/// Per-profile objective values of M.
Eigen::VectorXd objective_values(const Mechanism& m, const Valuations& v, const Objective& o);

/// E_{t ~ D}[O(t, M(t))].
double objective_eval(const Mechanism& m, const Valuations& v, const JointDist& d, const Objective& o);

/// lambda M + (1 - lambda) null, entrywise on lotteries and payments.
Mechanism mix_with_null(const Mechanism& m, double lambda);

}  // namespace robmech
