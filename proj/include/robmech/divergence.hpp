#pragma once

// Scalar-generic kernels on probability mass vectors. These take any Eigen
// expression and are the building blocks of the distribution-level API in
// joint_dist.hpp.

#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace robmech {

/// Half the L1 distance between two mass vectors.
template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar total_variation(const Eigen::MatrixBase<DerivedP>& p,
                                          const Eigen::MatrixBase<DerivedQ>& q) {
  using Scalar = typename DerivedP::Scalar;
  return Scalar(0.5) * (p - q).cwiseAbs().sum();
}

/// Coupling of p and q minimizing Pr[X != Y]: the diagonal carries
/// min(p, q) and the residual masses are matched by their normalized outer
/// product.
template <typename DerivedP, typename DerivedQ>
Eigen::Matrix<typename DerivedP::Scalar, Eigen::Dynamic, Eigen::Dynamic> maximal_coupling(
    const Eigen::MatrixBase<DerivedP>& p, const Eigen::MatrixBase<DerivedQ>& q) {
  using Scalar = typename DerivedP::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Vec overlap = p.cwiseMin(q);
  const Vec rp = p - overlap;
  const Vec rq = q - overlap;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> gamma = overlap.asDiagonal();
  // Residuals have disjoint supports, so the outer product never touches
  // the diagonal.
  const Scalar residual = rp.sum();
  if (residual > Scalar(0)) gamma.noalias() += (rp * rq.transpose()) / residual;
  return gamma;
}

/// Test function in [-1/2, 1/2] attaining E_p[f] - E_q[f] = TV(p, q).
template <typename DerivedP, typename DerivedQ>
Eigen::Matrix<typename DerivedP::Scalar, Eigen::Dynamic, 1> tv_witness(const Eigen::MatrixBase<DerivedP>& p,
                                                                      const Eigen::MatrixBase<DerivedQ>& q) {
  using Scalar = typename DerivedP::Scalar;
  using Arr = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  return (p.array() >= q.array()).select(Arr::Constant(p.size(), Scalar(0.5)), Scalar(-0.5)).matrix();
}

/// KL(p || q) in nats with the 0 log(0/q) = 0 convention; +inf when p puts
/// mass where q does not.
template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar kl_divergence(const Eigen::MatrixBase<DerivedP>& p,
                                        const Eigen::MatrixBase<DerivedQ>& q) {
  using Scalar = typename DerivedP::Scalar;
  Scalar kl(0);
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (p(k) <= Scalar(0)) continue;
    if (q(k) <= Scalar(0)) return std::numeric_limits<Scalar>::infinity();
    kl += p(k) * std::log(p(k) / q(k));
  }
  return kl;
}

}  // namespace robmech
