#pragma once

// Independent brute-force reference computations used by the unit tests.
// They share no code with the library beyond the data types.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "robmech/joint_dist.hpp"
#include "robmech/mechanism.hpp"
#include "robmech/mrf.hpp"

namespace oracle {

using robmech::JointDist;
using robmech::Mechanism;
using robmech::TypeSpace;
using robmech::Valuations;

// max over all events E of P(E) - Q(E).
inline double event_sup(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  const auto k = static_cast<std::size_t>(p.size());
  double best = 0.0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
    double pe = 0.0;
    double qe = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if ((mask >> j) & 1U) {
        pe += p(static_cast<Eigen::Index>(j));
        qe += q(static_cast<Eigen::Index>(j));
      }
    }
    best = std::max(best, std::abs(pe - qe));
  }
  return best;
}

// Utility of agent i with true type t at the reported profile, summed by hand.
inline double utility(const Mechanism& m, const Valuations& v, std::size_t i, std::size_t t, std::size_t profile) {
  double u = 0.0;
  for (std::size_t a = 0; a < m.allocations(); ++a) u += m.probability(profile, a) * v(i, t, a);
  return u - m.payment(profile, i);
}

// Largest ex-post gain from any misreport.
inline double dsic_regret(const Mechanism& m, const Valuations& v) {
  const TypeSpace& s = v.space();
  double worst = 0.0;
  for (std::size_t t = 0; t < s.profiles(); ++t) {
    const std::vector<std::size_t> types = s.decode(t);
    for (std::size_t i = 0; i < s.agents(); ++i) {
      const double truth = utility(m, v, i, types[i], t);
      for (std::size_t r = 0; r < s.types(i); ++r) {
        std::vector<std::size_t> lie = types;
        lie[i] = r;
        worst = std::max(worst, utility(m, v, i, types[i], s.encode(lie)) - truth);
      }
    }
  }
  return worst;
}

inline double min_truthful_utility(const Mechanism& m, const Valuations& v) {
  const TypeSpace& s = v.space();
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < s.profiles(); ++t) {
    for (std::size_t i = 0; i < s.agents(); ++i) lo = std::min(lo, utility(m, v, i, s.type_of(t, i), t));
  }
  return lo;
}

// E_D[O] for revenue (sum of payments) or welfare (sum of values).
inline double expected_revenue(const Mechanism& m, const JointDist& d) {
  double total = 0.0;
  for (std::size_t t = 0; t < d.size(); ++t) total += d[t] * m.payments().row(static_cast<Eigen::Index>(t)).sum();
  return total;
}

inline double expected_welfare(const Mechanism& m, const Valuations& v, const JointDist& d) {
  const TypeSpace& s = v.space();
  double total = 0.0;
  for (std::size_t t = 0; t < d.size(); ++t) {
    for (std::size_t i = 0; i < s.agents(); ++i) {
      for (std::size_t a = 0; a < m.allocations(); ++a) total += d[t] * m.probability(t, a) * v(i, s.type_of(t, i), a);
    }
  }
  return total;
}

// max c^T x s.t. A x <= b, x >= 0, by enumerating every basic solution.
// Returns -inf when no vertex is feasible.
inline double lp_vertex_max(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const Eigen::Index n = c.size();
  const Eigen::Index m = A.rows();
  Eigen::MatrixXd G(m + n, n);
  G << A, -Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd h(m + n);
  h << b, Eigen::VectorXd::Zero(n);
  const Eigen::Index rows = m + n;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<bool> pick(static_cast<std::size_t>(rows), false);
  std::fill(pick.begin(), pick.begin() + n, true);
  do {
    Eigen::MatrixXd B(n, n);
    Eigen::VectorXd rhs(n);
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (!pick[static_cast<std::size_t>(r)]) continue;
      B.row(k) = G.row(r);
      rhs(k) = h(r);
      ++k;
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd x = lu.solve(rhs);
    if (((G * x - h).array() > 1e-9).any()) continue;
    best = std::max(best, c.dot(x));
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

// Unnormalized MRF weights by direct enumeration, in the library's profile
// order (node 0 most significant, symbol c of node v at type c + 1).
inline Eigen::VectorXd mrf_table(const robmech::PairwiseMRF& mrf) {
  const std::size_t m = mrf.nodes();
  std::vector<std::size_t> sizes;
  for (std::size_t v = 0; v < m; ++v) sizes.push_back(mrf.alphabet(v) + 1);
  std::size_t total = 1;
  for (auto s : sizes) total *= s;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(total));
  std::vector<std::size_t> digit(m, 0);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    bool bottom = false;
    for (std::size_t v = m; v-- > 0;) {
      digit[v] = rest % sizes[v];
      rest /= sizes[v];
      bottom = bottom || digit[v] == 0;
    }
    if (bottom) continue;
    double e = 0.0;
    for (std::size_t v = 0; v < m; ++v) e += mrf.node[v](static_cast<Eigen::Index>(digit[v] - 1));
    for (const auto& edge : mrf.edges) {
      e += edge.psi(static_cast<Eigen::Index>(digit[edge.u] - 1), static_cast<Eigen::Index>(digit[edge.w] - 1));
    }
    w(static_cast<Eigen::Index>(idx)) = std::exp(e);
  }
  return w;
}

// Delta by sweeping every joint configuration.
inline double mrf_delta(const robmech::PairwiseMRF& mrf) {
  const std::size_t m = mrf.nodes();
  std::size_t total = 1;
  for (std::size_t v = 0; v < m; ++v) total *= mrf.alphabet(v);
  std::vector<std::size_t> c(m, 0);
  double delta = 0.0;
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    for (std::size_t v = m; v-- > 0;) {
      c[v] = rest % mrf.alphabet(v);
      rest /= mrf.alphabet(v);
    }
    for (std::size_t v = 0; v < m; ++v) {
      double sum = 0.0;
      for (const auto& e : mrf.edges) {
        if (e.u == v || e.w == v) sum += e.psi(static_cast<Eigen::Index>(c[e.u]), static_cast<Eigen::Index>(c[e.w]));
      }
      delta = std::max(delta, std::abs(sum));
    }
  }
  return delta;
}

}  // namespace oracle
