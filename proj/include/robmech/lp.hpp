#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <string>

#include <Eigen/Dense>

namespace robmech {

inline constexpr double kLpInf = std::numeric_limits<double>::infinity();
/// Smallest tableau entry accepted as a pivot in the ratio test.
inline constexpr double kPivotTol = 1e-7;
/// Reduced costs above -kOptTol count as optimal.
inline constexpr double kOptTol = 1e-9;
/// Largest constraint violation accepted in a reported optimum.
inline constexpr double kFeasTol = 1e-7;

/// optimize c^T x  s.t.  A_le x <= b_le,  A_eq x = b_eq,  lower <= x <= upper.
/// Empty `lower` means all zeros, empty `upper` means all +inf.
struct LinearProgram {
  Eigen::VectorXd objective;
  bool maximize = true;
  Eigen::MatrixXd A_le;
  Eigen::VectorXd b_le;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::Index variables() const { return objective.size(); }
};

enum class LpStatus { optimal, infeasible, unbounded, numerical_failure, iteration_limit };

std::string to_string(LpStatus s);

struct LpSolution {
  LpStatus status = LpStatus::numerical_failure;
  double value = 0;
  Eigen::VectorXd x;
  double max_violation = 0;
  std::size_t pivots = 0;

  bool optimal() const { return status == LpStatus::optimal; }
};

struct LpOptions {
  std::size_t max_pivots = 200000;
  /// Consecutive degenerate pivots before switching to Bland's rule.
  std::size_t degenerate_switch = 50;
  /// Pivots between refactorizations of the tableau from the original rows.
  std::size_t reinvert_every = 1000;
  /// When set, the final tableau is written here in plain text.
  std::ostream* dump = nullptr;
};

/// Largest violation of any constraint or bound at x.
double max_violation(const LinearProgram& lp, const Eigen::VectorXd& x);

/// Dense two-phase primal simplex. Throws DimensionError on inconsistent
/// shapes and ValidationError on non-finite data; solver trouble is
/// reported through the status.
LpSolution solve_lp(const LinearProgram& lp, const LpOptions& options = {});

}  // namespace robmech
