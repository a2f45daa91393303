#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "robmech/joint_dist.hpp"
#include "robmech/mechanism.hpp"
#include "robmech/synth.hpp"

namespace robmech {

/// Tolerances used when deciding pass/fail of an inequality.
inline constexpr double kExactTol = 1e-9;  ///< closed-form expectations
inline constexpr double kLpTol = 1e-6;     ///< inequalities involving LP optima
inline constexpr double kDefaultTol = 1e-7;

enum class Sense { ge, le, eq };
enum class CheckStatus { pass, fail, vacuous, flag };

std::string to_string(CheckStatus s);
std::string to_string(Sense s);

/// One measured relation lhs (>= | <= | ==) rhs.
struct RobustnessReport {
  std::string tag;
  double lhs = 0;
  double rhs = 0;
  Sense sense = Sense::ge;
  double slack = 0;  ///< margin by which the inequality holds (negative when it fails)
  double tolerance = kDefaultTol;
  CheckStatus status = CheckStatus::pass;
  std::string note;

  std::uint64_t seed = 0;
  double delta = 0;
  double q = 0;
  double alpha = 0;
  double V = 0;
  double H = 0;
  std::size_t n = 0;

  bool ok() const { return status != CheckStatus::fail; }
};

/// Builds a report and decides pass/fail from the slack. For Sense::eq the
/// slack is -|lhs - rhs|.
RobustnessReport inequality(std::string tag, double lhs, Sense sense, double rhs, double tolerance);
/// Report for a check whose precondition did not hold.
RobustnessReport vacuous(std::string tag, std::string reason);

using Reports = std::vector<RobustnessReport>;

/// |E_P[O] - E_Q[O]| <= V TV(P, Q), both orientations.
Reports check_lipschitz(const Mechanism& m, const Valuations& v, const JointDist& p, const JointDist& q,
                        const Objective& o);

/// Optional precomputed optima (NaN = compute with the DSIC LP).
struct OptHints {
  double opt_d = std::numeric_limits<double>::quiet_NaN();
  double opt_dhat = std::numeric_limits<double>::quiet_NaN();
};

/// E_{D-hat}[O(M)] >= alpha OPT(D-hat) - (1 + alpha) V delta for a DSIC,
/// ex-post IR, alpha-approximate M under D.
Reports check_dsic_robustness(const JointDist& d, const JointDist& dhat, const Valuations& v, const Objective& o,
                              const Mechanism& m_alpha, double alpha, const OptHints& hints = {});

inline const std::vector<double> kDefaultQGrid{0.1, 0.25, 0.5, 0.9};

/// (8 H delta / q, q)-BIC under D-hat for each q, and the objective drop at
/// most V delta, for M BIC w.r.t. D. Throws PreconditionError when the two
/// priors have different supports.
Reports check_bic_robustness(const JointDist& d, const JointDist& dhat, const Valuations& v, const Objective& o,
                             const Mechanism& m, const std::vector<double>& q_grid = kDefaultQGrid);

/// Revenue of a mechanism designed for the product prior D^p, evaluated
/// under the nearby D, against alpha OPT(D) - C (1 + alpha) V sqrt(n sqrt(delta))
/// for C = 10 (pass/fail) and C = 1 (pass/flag).
Reports check_near_product_revenue(const JointDist& d, const JointDist& dp, const Valuations& v,
                                const Mechanism& m_alpha, double alpha, const std::vector<double>& q_grid = kDefaultQGrid);

struct InnerMin {
  JointDist worst;
  double value = 0;
};

/// min over joint distributions with the given marginals of E[O(t, M(t))].
InnerMin inner_min_distribution(const Mechanism& m, const Valuations& v, const Objective& o,
                                const std::vector<Eigen::VectorXd>& marginals);

/// DSIC, ex-post IR mechanism maximizing the worst case over all joint
/// distributions with the given marginals.
SynthesizedMechanism maxmin_mechanism(const std::vector<Eigen::VectorXd>& marginals, const Valuations& v,
                                      const Objective& o);

/// Worst-case guarantee under shifted marginals, plus the single-mechanism
/// transport inequality.
Reports check_marginal_robustness(const std::vector<Eigen::VectorXd>& marginals,
                                  const std::vector<Eigen::VectorXd>& shifted, const Valuations& v,
                                  const Objective& o, const Mechanism& m_alpha, double alpha);

/// |Val(M, D) - Val(M, D-hat)| <= H delta for a posted-price mechanism.
Reports check_prophet_robustness(const SingleItemMarket& market, const Mechanism& m, const JointDist& d,
                                 const JointDist& dhat);

/// Same with product priors whose marginals move by at most eps each:
/// the welfare gap is at most H n eps.
Reports check_prophet_product(const SingleItemMarket& market, const Mechanism& m,
                              const std::vector<Eigen::VectorXd>& marginals,
                              const std::vector<Eigen::VectorXd>& shifted);

/// max{SRev, BRev} >= Rev / 6 - 7 H delta / 6 with delta the distance to
/// the product of the marginals.
Reports check_simple_vs_optimal(const AdditiveInstance& inst);

struct GapSummary {
  double rev = 0;
  double srev = 0;
  double brev = 0;
  double V = 0;
  double proxy_distance = 0;   ///< TV to the product of marginals
  double product_factor = 0;   ///< proxy / (m + 1) lower-bounds the distance to any product
  bool bundle_gap = false;     ///< Rev / BRev >= 2m
  bool separate_gap = false;   ///< Rev / SRev >= 2 (1 + log2 m)
  Reports reports;
};

/// Evaluates the contrapositive certificate: a large simple-vs-optimal gap
/// forces distance at least Rev / (4V) from every product prior.
GapSummary gap_certificate(const AdditiveInstance& inst);

}  // namespace robmech
