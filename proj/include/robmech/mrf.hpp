#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "robmech/joint_dist.hpp"

namespace robmech {

/// Pairwise Markov random field over m nodes with finite alphabets:
/// D(c) proportional to exp(sum_v psi_v(c_v) + sum_e psi_e(c_u, c_w)).
struct PairwiseMRF {
  struct Edge {
    std::size_t u = 0;
    std::size_t w = 0;
    Eigen::MatrixXd psi;  ///< alphabet(u) x alphabet(w)
  };

  std::vector<Eigen::VectorXd> node;  ///< psi_v, one entry per symbol
  std::vector<Edge> edges;

  std::size_t nodes() const { return node.size(); }
  std::size_t alphabet(std::size_t v) const { return static_cast<std::size_t>(node[v].size()); }
  /// Throws ValidationError on bad shapes, self-loops or non-finite potentials.
  void validate() const;
};

/// Largest joint state space enumerated.
inline constexpr std::size_t kMaxMrfStates = 1000000;

/// Type space with one agent per node: the non-participation type (zero
/// mass) followed by symbols "0" .. "k-1".
TypeSpace mrf_space(const PairwiseMRF& mrf);

/// Exact joint law by enumeration. Symbol c of node v is type c + 1.
JointDist mrf_to_joint(const PairwiseMRF& mrf);
/// log Z of the unnormalized weights.
double log_partition(const PairwiseMRF& mrf);

struct DeltaReport {
  std::vector<double> degree;  ///< d_v = max over configurations of |sum of incident edge potentials|
  double delta = 0;
};
DeltaReport weighted_degree(const PairwiseMRF& mrf);

struct RatioBoundReport {
  std::size_t tested = 0;
  std::size_t skipped = 0;  ///< event pairs with a zero-probability marginal event
  double min_ratio = 1;
  double max_ratio = 1;
  double lower = 1;         ///< exp(-4 Delta)
  double upper = 1;         ///< exp(4 Delta)
  bool holds() const { return min_ratio >= lower * (1 - 1e-9) && max_ratio <= upper * (1 + 1e-9); }
};

/// Pr[t_v in E, t_-v in E'] / (Pr[t_v in E] Pr[t_-v in E']) over every
/// singleton pair and `random_pairs` random event pairs.
RatioBoundReport check_ratio_bound(const PairwiseMRF& mrf, std::uint64_t seed, std::size_t random_pairs = 1000);

struct KlTvReport {
  double tv = 0;          ///< TV(D, D^p), D^p from node potentials alone
  double tv_bound = 0;    ///< min{sqrt(m Delta / 4), sqrt(1 - exp(-m Delta / 2))}
  double kl_forward = 0;  ///< KL(D || D^p)
  double kl_backward = 0; ///< KL(D^p || D)
  double kl_bound = 0;    ///< m Delta / 2
  double delta = 0;
  bool tv_holds() const { return tv <= tv_bound + 1e-9; }
  bool kl_holds() const { return std::min(kl_forward, kl_backward) <= kl_bound + 1e-9; }
};
KlTvReport check_kl_tv_bound(const PairwiseMRF& mrf);

struct MrfGap {
  JointDist dist;             ///< two items, symbols A and B
  double k = 0;
  double tv = 0;              ///< measured TV to the product of marginals
  double tv_expected = 0;     ///< 2 (k^2 - k^3)
  double tv_bound = 0;        ///< 2 k^2
  double delta_lower = 0;     ///< log(1/k) / 4
  double bb_ratio = 0;        ///< Pr[B, B] / (Pr[B] Pr[B]) = k
  double realized_delta = 0;  ///< Delta of the realization with edge potential log D
  bool realization_meets_bound() const { return realized_delta >= delta_lower - 1e-12; }
};
/// Throws ValidationError unless 0 < k < 1/2.
MrfGap mrfgap_instance(double k);

/// Realization of a two-node joint law as an MRF: zero node potentials and
/// edge potential log D (all masses must be positive).
PairwiseMRF two_node_realization(const Eigen::MatrixXd& joint);

}  // namespace robmech
