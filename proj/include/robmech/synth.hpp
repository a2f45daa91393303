#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "robmech/joint_dist.hpp"
#include "robmech/lp.hpp"
#include "robmech/mechanism.hpp"

namespace robmech {

enum class IcKind { dsic, bic };

/// Largest LP accepted by the synthesis routines.
inline constexpr std::size_t kMaxLpVariables = 20000;

struct SynthesizedMechanism {
  Mechanism mechanism;
  double value = 0;          ///< objective under the design prior
  LpSolution certificate;    ///< empty for closed-form constructions
  std::vector<double> prices;
  std::string call;          ///< human-readable description of how it was built
};

/// Column layout of the mechanism LP: x_a(t) then p_i(t), then `extra`
/// free columns appended by callers.
struct MechanismLayout {
  std::size_t profiles = 0;
  std::size_t allocations = 0;
  std::size_t agents = 0;
  std::size_t extra = 0;

  Eigen::Index x(std::size_t profile, std::size_t a) const {
    return static_cast<Eigen::Index>(profile * allocations + a);
  }
  Eigen::Index p(std::size_t profile, std::size_t agent) const {
    return static_cast<Eigen::Index>(profiles * allocations + profile * agents + agent);
  }
  Eigen::Index extra_column(std::size_t k) const {
    return static_cast<Eigen::Index>(profiles * (allocations + agents) + k);
  }
  Eigen::Index columns() const { return static_cast<Eigen::Index>(profiles * (allocations + agents) + extra); }
};

/// Feasible region of ex-post IR mechanisms that are DSIC, or BIC under
/// `prior`. The objective is left at zero. Extra columns are free.
LinearProgram mechanism_constraints(const Valuations& v, IcKind ic, const JointDist* prior, std::size_t extra,
                                    MechanismLayout* layout = nullptr);

/// Reads a mechanism off an LP point, snapping round-off so that the
/// result satisfies the Mechanism invariants exactly.
Mechanism mechanism_from_solution(const Valuations& v, const MechanismLayout& layout, const Eigen::VectorXd& x);

/// Maximizes E_D[O] over ex-post IR mechanisms that are DSIC (or BIC
/// w.r.t. D). Throws LpError when the solver fails.
SynthesizedMechanism optimal_mechanism(const JointDist& d, const Valuations& v, IcKind ic, const Objective& o);

// Single agent with additive values over m items.

/// Item values per coordinate. The agent's joint value vector is drawn
/// from `dist`, a distribution over the product of per-item coordinates
/// where coordinate 0 of every item is a zero-mass placeholder.
struct AdditiveInstance {
  std::vector<std::vector<double>> values;  ///< values[j][k] is the k-th value of item j (k >= 0)
  JointDist dist;

  std::size_t items() const { return values.size(); }
  /// Value of item j at a coordinate profile.
  double value(std::size_t profile, std::size_t item) const;
  double bundle_value(std::size_t profile) const;
};

/// Builds an instance from a table of masses indexed by value coordinates
/// (lexicographic, item 0 most significant, without placeholders).
AdditiveInstance additive_instance(std::vector<std::vector<double>> values, const Eigen::VectorXd& mass);

struct PriceResult {
  double revenue = 0;
  std::vector<double> prices;
};

/// Best separate per-item prices (each searched over the item's support).
PriceResult srev(const AdditiveInstance& inst);
/// Best grand-bundle price (searched over bundle values in the support).
PriceResult brev(const AdditiveInstance& inst);

/// The instance seen as a one-agent mechanism-design problem: types are
/// non-participation plus every support point, allocations are item
/// subsets (bit j = item j).
struct AdditiveProblem {
  Valuations valuations;
  JointDist prior;
  std::vector<std::size_t> support;  ///< coordinate profile of each non-bottom type
};
AdditiveProblem additive_problem(const AdditiveInstance& inst);

/// Revenue-optimal mechanism for the single additive agent.
SynthesizedMechanism optimal_additive(const AdditiveInstance& inst);
Mechanism item_pricing_mechanism(const AdditiveProblem& prob, const AdditiveInstance& inst,
                                 const std::vector<double>& prices);
Mechanism bundle_mechanism(const AdditiveProblem& prob, const AdditiveInstance& inst, double price);

// Single item, n agents with private values.

/// Agent i's types are non-participation followed by `values[i]`.
/// Allocations: 0 = nobody, 1 + i = agent i.
struct SingleItemMarket {
  std::vector<std::vector<double>> values;

  TypeSpace space() const;
  Valuations valuations() const;
  double value(std::size_t agent, std::size_t type) const { return type == 0 ? 0.0 : values[agent][type - 1]; }
};

/// Sequential posted prices: the first agent in `order` whose value is at
/// least its price takes the item and pays the price. Non-participants
/// never buy.
Mechanism posted_prices(const SingleItemMarket& market, const std::vector<double>& prices,
                        const std::vector<std::size_t>& order);

/// E[max_i t_i] under D.
double prophet_benchmark(const SingleItemMarket& market, const JointDist& d);
/// tau = E[max]/2 under the product of the given marginals.
double prophet_threshold(const SingleItemMarket& market, const std::vector<Eigen::VectorXd>& marginals);
/// Single-threshold stopping rule in index order, accepting ties.
Mechanism threshold_policy(const SingleItemMarket& market, double tau);

}  // namespace robmech
