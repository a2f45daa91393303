#include "robmech/lp.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include "robmech/errors.hpp"

namespace robmech {

std::string to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::numerical_failure: return "numerical_failure";
    case LpStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kHarrisTol = 1e-9;
// Pivots at least this large are accepted without looking further.
constexpr double kStablePivot = 1e-5;
// Entering candidates examined per iteration.
constexpr std::size_t kEnterTries = 8;

Eigen::VectorXd lower_of(const LinearProgram& lp) {
  return lp.lower.size() == 0 ? Eigen::VectorXd::Zero(lp.variables()) : lp.lower;
}

Eigen::VectorXd upper_of(const LinearProgram& lp) {
  return lp.upper.size() == 0 ? Eigen::VectorXd::Constant(lp.variables(), kLpInf) : lp.upper;
}

void validate(const LinearProgram& lp) {
  const Eigen::Index n = lp.variables();
  auto rows_ok = [n](const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
    return (a.rows() == 0 && b.size() == 0) || (a.cols() == n && a.rows() == b.size());
  };
  if (!rows_ok(lp.A_le, lp.b_le) || !rows_ok(lp.A_eq, lp.b_eq)) throw DimensionError("LP constraint shapes disagree");
  if ((lp.lower.size() != 0 && lp.lower.size() != n) || (lp.upper.size() != 0 && lp.upper.size() != n)) {
    throw DimensionError("LP bound vectors have the wrong length");
  }
  if (!lp.objective.allFinite() || !lp.A_le.allFinite() || !lp.b_le.allFinite() || !lp.A_eq.allFinite() ||
      !lp.b_eq.allFinite()) {
    throw ValidationError("LP data must be finite");
  }
  const Eigen::VectorXd lo = lower_of(lp);
  const Eigen::VectorXd hi = upper_of(lp);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::isnan(lo(j)) || std::isnan(hi(j)) || lo(j) == kLpInf || hi(j) == -kLpInf) {
      throw ValidationError("LP variable bounds must be numbers with lower < +inf and upper > -inf");
    }
  }
}

// x_j = offset + sign * y_first (+ -1 * y_second for free variables).
struct VarMap {
  double offset = 0;
  double sign = 1;
  Eigen::Index first = 0;
  Eigen::Index second = -1;
};

class Simplex {
 public:
  Simplex(const RowMatrix& original, std::vector<Eigen::Index> basis, Eigen::Index structural,
          Eigen::Index first_artificial, const LpOptions& options)
      : original_(original),
        t_(original),
        basis_(std::move(basis)),
        structural_(structural),
        first_art_(first_artificial),
        opt_(options) {
    cols_ = t_.cols() - 1;
    nz_.reserve(static_cast<std::size_t>(t_.cols()));
  }

  // Minimizes cost over the current tableau. Columns at or beyond `limit`
  // may not enter.
  LpStatus run(const Eigen::VectorXd& cost, Eigen::Index limit) {
    cost_ = cost;
    price();
    std::size_t degenerate = 0;
    std::size_t since_reinvert = 0;
    bool fresh = false;  // no pivot since the last reinversion
    for (;;) {
      if (pivots_ >= opt_.max_pivots) return LpStatus::iteration_limit;
      if (opt_.reinvert_every > 0 && ++since_reinvert > opt_.reinvert_every) {
        if (!reinvert()) return LpStatus::numerical_failure;
        since_reinvert = 0;
        fresh = true;
      }
      const bool bland = degenerate >= opt_.degenerate_switch;
      candidates_.clear();
      for (Eigen::Index j = 0; j < limit; ++j) {
        if (d_(j) < -kOptTol) candidates_.push_back(j);
      }
      if (candidates_.empty()) return LpStatus::optimal;
      const std::size_t tries = std::min(candidates_.size(), kEnterTries);
      if (!bland) {
        std::partial_sort(candidates_.begin(), candidates_.begin() + static_cast<std::ptrdiff_t>(tries),
                          candidates_.end(), [this](Eigen::Index a, Eigen::Index b) { return d_(a) < d_(b); });
      }
      // Prefer an entering column whose pivot is comfortably away from zero;
      // otherwise take the largest pivot seen among the first few candidates.
      Eigen::Index enter = -1;
      Eigen::Index leave = -1;
      double pivot_size = 0.0;
      for (std::size_t c = 0; c < tries; ++c) {
        const Eigen::Index j = candidates_[c];
        const Eigen::Index r = bland ? bland_row(j) : harris_row(j);
        if (r < 0) {
          if (enter < 0) enter = j;
          continue;
        }
        const double a = std::abs(t_(r, j));
        if (a > pivot_size) {
          enter = j;
          leave = r;
          pivot_size = a;
        }
        if (a >= kStablePivot) break;
      }
      if (leave < 0 && !fresh) {
        // Confirm against a freshly factored tableau before giving up.
        if (!reinvert()) return LpStatus::numerical_failure;
        since_reinvert = 0;
        fresh = true;
        continue;
      }
      if (leave < 0) return LpStatus::unbounded;
      const double step = std::max(0.0, t_(leave, cols_)) / t_(leave, enter);
      degenerate = step <= 1e-12 ? degenerate + 1 : 0;
      pivot(leave, enter);
      fresh = false;
    }
  }

  // Reduced costs and objective for the current basis.
  void price() {
    d_ = cost_;
    z_ = 0.0;
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      const double cb = cost_(basis_[static_cast<std::size_t>(i)]);
      if (cb == 0.0) continue;
      d_.noalias() -= cb * t_.row(i).head(cols_).transpose();
      z_ += cb * t_(i, cols_);
    }
  }

  // Rebuilds the tableau as B^-1 times the original rows, discarding the
  // round-off accumulated by elimination.
  bool reinvert() {
    const Eigen::Index m = t_.rows();
    if (m == 0) return true;
    Eigen::MatrixXd B(m, m);
    for (Eigen::Index i = 0; i < m; ++i) B.col(i) = original_.col(basis_[static_cast<std::size_t>(i)]);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    RowMatrix fresh = lu.solve(Eigen::MatrixXd(original_));
    if (!fresh.allFinite()) return false;
    fresh = (fresh.array().abs() < 1e-14).select(0.0, fresh);
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Index j = basis_[static_cast<std::size_t>(i)];
      fresh.col(j).setZero();
      fresh(i, j) = 1.0;
    }
    t_ = std::move(fresh);
    price();
    return true;
  }

  // Minimum-ratio row, ties to the smallest basic index (anti-cycling).
  Eigen::Index bland_row(Eigen::Index enter) const {
    Eigen::Index leave = -1;
    double ratio = kLpInf;
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      const double a = t_(i, enter);
      if (a <= kPivotTol) continue;
      const double r = std::max(0.0, t_(i, cols_)) / a;
      if (r < ratio - 1e-12 || (r <= ratio + 1e-12 && leave >= 0 && basis_[static_cast<std::size_t>(i)] <
                                                                        basis_[static_cast<std::size_t>(leave)])) {
        ratio = std::min(ratio, r);
        leave = i;
      }
    }
    return leave;
  }

  // Two-pass Harris test: among rows whose ratio is within a small
  // feasibility tolerance of the minimum, take the largest pivot.
  Eigen::Index harris_row(Eigen::Index enter) const {
    double theta = kLpInf;
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      const double a = t_(i, enter);
      if (a > kPivotTol) theta = std::min(theta, (std::max(0.0, t_(i, cols_)) + kHarrisTol) / a);
    }
    if (theta == kLpInf) return -1;
    Eigen::Index leave = -1;
    double best = 0.0;
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      const double a = t_(i, enter);
      if (a > kPivotTol && std::max(0.0, t_(i, cols_)) / a <= theta && a > best) {
        best = a;
        leave = i;
      }
    }
    return leave;
  }

  void pivot(Eigen::Index r, Eigen::Index e) {
    ++pivots_;
    const Eigen::Index width = t_.cols();
    double* pr = t_.row(r).data();
    const double inv = 1.0 / pr[e];
    nz_.clear();
    for (Eigen::Index j = 0; j < width; ++j) {
      if (pr[j] == 0.0) continue;
      pr[j] *= inv;
      if (std::abs(pr[j]) < 1e-14) {
        pr[j] = 0.0;
        continue;
      }
      nz_.push_back(j);
    }
    pr[e] = 1.0;
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      if (i == r) continue;
      double* pi = t_.row(i).data();
      const double f = pi[e];
      if (f == 0.0) continue;
      for (Eigen::Index j : nz_) pi[j] -= f * pr[j];
      pi[e] = 0.0;
    }
    const double fd = d_(e);
    if (fd != 0.0) {
      for (Eigen::Index j : nz_) {
        if (j < cols_) d_(j) -= fd * pr[j];
      }
      d_(e) = 0.0;
      z_ += fd * pr[cols_];
    }
    basis_[static_cast<std::size_t>(r)] = e;
  }

  // Pivots basic artificials out wherever a structural or slack column can
  // replace them.
  void expel_artificials() {
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      if (basis_[static_cast<std::size_t>(i)] < first_art_) continue;
      Eigen::Index best = -1;
      double mag = kPivotTol;
      for (Eigen::Index j = 0; j < first_art_; ++j) {
        if (std::abs(t_(i, j)) > mag) {
          mag = std::abs(t_(i, j));
          best = j;
        }
      }
      if (best >= 0) pivot(i, best);
    }
  }

  double objective() const { return z_; }
  std::size_t pivots() const { return pivots_; }

  Eigen::VectorXd structural_values() const {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(structural_);
    for (std::size_t i = 0; i < basis_.size(); ++i) {
      if (basis_[i] < structural_) y(basis_[i]) = t_(static_cast<Eigen::Index>(i), cols_);
    }
    return y.cwiseMax(0.0);
  }

  // Recomputes the basic solution from the original rows, removing the
  // round-off accumulated over many pivots.
  Eigen::VectorXd refactored_values() const {
    const RowMatrix& original = original_;
    const Eigen::Index m = original.rows();
    Eigen::MatrixXd B(m, m);
    for (Eigen::Index i = 0; i < m; ++i) B.col(i) = original.col(basis_[static_cast<std::size_t>(i)]);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    const Eigen::VectorXd xb = lu.solve(original.col(cols_));
    Eigen::VectorXd y = Eigen::VectorXd::Zero(structural_);
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Index j = basis_[static_cast<std::size_t>(i)];
      if (j < structural_) y(j) = xb(i);
    }
    return y.cwiseMax(0.0);
  }

  void dump(std::ostream& os) const {
    os << "tableau " << t_.rows() << " x " << t_.cols() << " (structural " << structural_ << ", artificial from "
       << first_art_ << ")\n";
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      os << "basis " << basis_[static_cast<std::size_t>(i)] << " |";
      for (Eigen::Index j = 0; j < t_.cols(); ++j) os << ' ' << t_(i, j);
      os << '\n';
    }
    os << "reduced |";
    for (Eigen::Index j = 0; j < d_.size(); ++j) os << ' ' << d_(j);
    os << " | " << z_ << '\n';
  }

 private:
  const RowMatrix& original_;
  RowMatrix t_;
  Eigen::VectorXd cost_;
  std::vector<Eigen::Index> basis_;
  Eigen::Index structural_;
  Eigen::Index first_art_;
  Eigen::Index cols_;
  LpOptions opt_;
  Eigen::VectorXd d_;
  double z_ = 0;
  std::size_t pivots_ = 0;
  std::vector<Eigen::Index> nz_;
  std::vector<Eigen::Index> candidates_;
};

}  // namespace

double max_violation(const LinearProgram& lp, const Eigen::VectorXd& x) {
  double v = 0.0;
  if (lp.A_le.rows() > 0) v = std::max(v, (lp.A_le * x - lp.b_le).maxCoeff());
  if (lp.A_eq.rows() > 0) v = std::max(v, (lp.A_eq * x - lp.b_eq).cwiseAbs().maxCoeff());
  if (x.size() > 0) {
    v = std::max(v, (lower_of(lp) - x).maxCoeff());
    v = std::max(v, (x - upper_of(lp)).maxCoeff());
  }
  return std::max(v, 0.0);
}

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& options) {
  validate(lp);
  const Eigen::Index n = lp.variables();
  const Eigen::VectorXd lo = lower_of(lp);
  const Eigen::VectorXd hi = upper_of(lp);

  // Map every variable onto nonnegative internal ones.
  std::vector<VarMap> map(static_cast<std::size_t>(n));
  Eigen::Index internal = 0;
  std::vector<std::pair<Eigen::Index, double>> range_rows;  // y <= width
  for (Eigen::Index j = 0; j < n; ++j) {
    VarMap& m = map[static_cast<std::size_t>(j)];
    m.first = internal++;
    if (std::isfinite(lo(j))) {
      m.offset = lo(j);
      if (std::isfinite(hi(j))) range_rows.emplace_back(m.first, hi(j) - lo(j));
    } else if (std::isfinite(hi(j))) {
      m.offset = hi(j);
      m.sign = -1.0;
    } else {
      m.second = internal++;
    }
  }

  // Substitute into the constraints: rows of (coefficients over y, rhs).
  const Eigen::Index n_le = lp.A_le.rows() + static_cast<Eigen::Index>(range_rows.size());
  const Eigen::Index n_eq = lp.A_eq.rows();
  const Eigen::Index rows = n_le + n_eq;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, internal);
  Eigen::VectorXd b(rows);
  auto substitute = [&](const Eigen::MatrixXd& src, const Eigen::VectorXd& rhs, Eigen::Index at) {
    for (Eigen::Index r = 0; r < src.rows(); ++r) {
      double shift = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double a = src(r, j);
        if (a == 0.0) continue;
        const VarMap& m = map[static_cast<std::size_t>(j)];
        shift += a * m.offset;
        A(at + r, m.first) = a * m.sign;
        if (m.second >= 0) A(at + r, m.second) = -a;
      }
      b(at + r) = rhs(r) - shift;
    }
  };
  substitute(lp.A_le, lp.b_le, 0);
  for (std::size_t k = 0; k < range_rows.size(); ++k) {
    const Eigen::Index r = lp.A_le.rows() + static_cast<Eigen::Index>(k);
    A(r, range_rows[k].first) = 1.0;
    b(r) = range_rows[k].second;
  }
  substitute(lp.A_eq, lp.b_eq, n_le);

  Eigen::VectorXd cost = Eigen::VectorXd::Zero(internal);
  for (Eigen::Index j = 0; j < n; ++j) {
    const VarMap& m = map[static_cast<std::size_t>(j)];
    const double c = lp.maximize ? -lp.objective(j) : lp.objective(j);
    cost(m.first) = c * m.sign;
    if (m.second >= 0) cost(m.second) = -c;
  }

  // Columns: internal | one slack per inequality | artificials | rhs.
  std::vector<Eigen::Index> art_rows;
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (r >= n_le || b(r) < 0.0) art_rows.push_back(r);
  }
  const Eigen::Index first_art = internal + n_le;
  const Eigen::Index cols = first_art + static_cast<Eigen::Index>(art_rows.size());
  RowMatrix tableau = RowMatrix::Zero(rows, cols + 1);
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(rows));
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double s = b(r) < 0.0 ? -1.0 : 1.0;
    tableau.row(r).head(internal) = s * A.row(r);
    if (r < n_le) tableau(r, internal + r) = s;
    tableau(r, cols) = s * b(r);
    basis[static_cast<std::size_t>(r)] = internal + r;
  }
  for (std::size_t k = 0; k < art_rows.size(); ++k) {
    const Eigen::Index col = first_art + static_cast<Eigen::Index>(k);
    tableau(art_rows[k], col) = 1.0;
    basis[static_cast<std::size_t>(art_rows[k])] = col;
  }

  const RowMatrix original = std::move(tableau);
  Simplex simplex(original, std::move(basis), internal, first_art, options);
  LpSolution sol;
  auto finish = [&](LpStatus status) {
    sol.status = status;
    sol.pivots = simplex.pivots();
    if (options.dump) simplex.dump(*options.dump);
    return sol;
  };

  if (!art_rows.empty()) {
    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(cols);
    phase1.tail(static_cast<Eigen::Index>(art_rows.size())).setOnes();
    const LpStatus st = simplex.run(phase1, cols);
    if (st == LpStatus::iteration_limit) return finish(st);
    if (st != LpStatus::optimal) return finish(LpStatus::numerical_failure);
    const double scale = 1.0 + (b.size() > 0 ? b.cwiseAbs().maxCoeff() : 0.0);
    if (simplex.objective() > kFeasTol * scale) return finish(LpStatus::infeasible);
    simplex.expel_artificials();
  }

  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(cols);
  phase2.head(internal) = cost;
  const LpStatus st = simplex.run(phase2, first_art);
  if (st != LpStatus::optimal) return finish(st);

  auto to_original = [&](const Eigen::VectorXd& y) {
    Eigen::VectorXd x(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const VarMap& m = map[static_cast<std::size_t>(j)];
      double v = m.offset + m.sign * y(m.first);
      if (m.second >= 0) v -= y(m.second);
      x(j) = v;
    }
    return x;
  };
  sol.x = to_original(simplex.structural_values());
  sol.max_violation = max_violation(lp, sol.x);
  if (sol.max_violation > 0.0) {
    const Eigen::VectorXd refined = to_original(simplex.refactored_values());
    const double v = max_violation(lp, refined);
    if (v < sol.max_violation) {
      sol.x = refined;
      sol.max_violation = v;
    }
  }
  if (!sol.x.allFinite()) return finish(LpStatus::numerical_failure);
  sol.value = lp.objective.dot(sol.x);
  return finish(sol.max_violation <= kFeasTol ? LpStatus::optimal : LpStatus::numerical_failure);
}

}  // namespace robmech
