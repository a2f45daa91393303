#include "robmech/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "robmech/errors.hpp"

namespace robmech {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::Index ix(std::size_t k) { return static_cast<Eigen::Index>(k); }

}  // namespace

Valuations::Valuations(TypeSpace space, std::vector<std::string> allocations, std::size_t null_allocation,
                       double bound, std::vector<Eigen::MatrixXd> table)
    : space_(std::move(space)),
      allocations_(std::move(allocations)),
      null_(null_allocation),
      bound_(bound),
      table_(std::move(table)) {
  if (!(bound_ > 0.0) || !std::isfinite(bound_)) throw ValidationError("valuation bound H must be positive");
  if (allocations_.empty() || null_ >= allocations_.size()) throw ValidationError("null allocation index out of range");
  if (table_.size() != space_.agents()) throw DimensionError("one valuation table per agent required");
  for (std::size_t i = 0; i < table_.size(); ++i) {
    const auto& t = table_[i];
    if (static_cast<std::size_t>(t.rows()) != space_.types(i) ||
        static_cast<std::size_t>(t.cols()) != allocations_.size()) {
      throw DimensionError("valuation table " + std::to_string(i) + " has the wrong shape");
    }
    if (!t.allFinite() || t.minCoeff() < 0.0 || t.maxCoeff() > bound_) {
      throw ValidationError("valuations of agent " + std::to_string(i) + " must lie in [0, H]");
    }
    if (t.col(ix(null_)).cwiseAbs().maxCoeff() != 0.0) {
      throw ValidationError("the null allocation must be worth 0 to agent " + std::to_string(i));
    }
    if (t.row(ix(space_.bottom(i))).cwiseAbs().maxCoeff() != 0.0) {
      throw ValidationError("the non-participation type of agent " + std::to_string(i) + " must value everything at 0");
    }
  }
}

std::optional<std::size_t> Valuations::solo(std::size_t agent, std::size_t allocation) const {
  for (std::size_t b = 0; b < allocations(); ++b) {
    if (table_[agent].col(ix(b)) != table_[agent].col(ix(allocation))) continue;
    bool others_zero = true;
    for (std::size_t j = 0; j < table_.size() && others_zero; ++j) {
      if (j != agent && table_[j].col(ix(b)).cwiseAbs().maxCoeff() != 0.0) others_zero = false;
    }
    if (others_zero) return b;
  }
  return std::nullopt;
}

Mechanism::Mechanism(TypeSpace space, std::size_t null_allocation, double bound, Eigen::MatrixXd lottery,
                     Eigen::MatrixXd payments)
    : space_(std::move(space)),
      null_(null_allocation),
      bound_(bound),
      lottery_(std::move(lottery)),
      payments_(std::move(payments)) {
  const auto profiles = space_.profiles();
  if (static_cast<std::size_t>(lottery_.rows()) != profiles || static_cast<std::size_t>(payments_.rows()) != profiles ||
      static_cast<std::size_t>(payments_.cols()) != space_.agents()) {
    throw DimensionError("mechanism tables do not match the type space");
  }
  if (lottery_.cols() == 0 || null_ >= static_cast<std::size_t>(lottery_.cols())) {
    throw ValidationError("null allocation index out of range");
  }
  if (!lottery_.allFinite() || !payments_.allFinite()) throw ValidationError("mechanism entries must be finite");
  if (lottery_.minCoeff() < 0.0) throw ValidationError("lottery probabilities must be nonnegative");
  if ((lottery_.rowwise().sum().array() - 1.0).abs().maxCoeff() > kMassTol) {
    throw ValidationError("every lottery must sum to 1");
  }
  if (payments_.cwiseAbs().maxCoeff() > bound_ + kIcTol) throw ValidationError("payments must lie in [-H, H]");
  const std::size_t bot = space_.all_bottom();
  if (std::abs(lottery_(ix(bot), ix(null_)) - 1.0) > kIcTol || payments_.row(ix(bot)).cwiseAbs().maxCoeff() > kIcTol) {
    throw ValidationError("the all-non-participation profile must get the null allocation and no payments");
  }
}

Mechanism Mechanism::null(const Valuations& v) {
  const auto profiles = ix(v.space().profiles());
  Eigen::MatrixXd lottery = Eigen::MatrixXd::Zero(profiles, ix(v.allocations()));
  lottery.col(ix(v.null_allocation())).setOnes();
  return Mechanism(v.space(), v.null_allocation(), v.bound(), std::move(lottery),
                   Eigen::MatrixXd::Zero(profiles, ix(v.space().agents())));
}

void require_compatible(const Mechanism& m, const Valuations& v) {
  require_same_space(m.space(), v.space(), "mechanism and valuations");
  if (m.allocations() != v.allocations() || m.null_allocation() != v.null_allocation()) {
    throw DimensionError("mechanism and valuations disagree on the allocation set");
  }
}

double utility_at(const Mechanism& m, const Valuations& v, std::size_t agent, std::size_t true_type,
                  std::size_t profile) {
  return m.lottery().row(ix(profile)).dot(v.table(agent).row(ix(true_type))) - m.payment(profile, agent);
}

double utility(const Mechanism& m, const Valuations& v, std::size_t agent, std::size_t true_type, std::size_t report,
               std::size_t others) {
  return utility_at(m, v, agent, true_type, m.space().compose(agent, report, others));
}

IrReport expost_ir_check(const Mechanism& m, const Valuations& v) {
  require_compatible(m, v);
  const auto& s = m.space();
  IrReport r;
  r.min_utility = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < s.profiles(); ++t) {
    for (std::size_t i = 0; i < s.agents(); ++i) {
      const std::size_t ti = s.type_of(t, i);
      const double u = utility_at(m, v, i, ti, t);
      r.min_utility = std::min(r.min_utility, u);
      if (u < -kIcTol) r.violations.push_back({i, t, u});
      if (ti == s.bottom(i)) r.max_bottom_payment = std::max(r.max_bottom_payment, std::abs(m.payment(t, i)));
    }
  }
  return r;
}

UtilityBoundsReport utility_bounds_check(const Mechanism& m, const Valuations& v) {
  require_compatible(m, v);
  const auto& s = m.space();
  UtilityBoundsReport r;
  r.lower = -v.bound();
  r.upper = 3.0 * v.bound();
  r.min_deviation_utility = r.min_gain = std::numeric_limits<double>::infinity();
  r.max_deviation_utility = r.max_gain = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.agents(); ++i) {
    for (std::size_t o = 0; o < s.others(i); ++o) {
      for (std::size_t ti = 0; ti < s.types(i); ++ti) {
        const double truthful = utility(m, v, i, ti, ti, o);
        for (std::size_t r2 = 0; r2 < s.types(i); ++r2) {
          const double dev = utility(m, v, i, ti, r2, o);
          r.min_deviation_utility = std::min(r.min_deviation_utility, dev);
          r.max_deviation_utility = std::max(r.max_deviation_utility, dev);
          r.min_gain = std::min(r.min_gain, truthful - dev);
          r.max_gain = std::max(r.max_gain, truthful - dev);
        }
      }
    }
  }
  return r;
}

double dsic_regret(const Mechanism& m, const Valuations& v) {
  require_compatible(m, v);
  const auto& s = m.space();
  double worst = 0.0;
  for (std::size_t i = 0; i < s.agents(); ++i) {
    const Eigen::MatrixXd& vi = v.table(i);
    for (std::size_t o = 0; o < s.others(i); ++o) {
      // values(t, r) = v_i(t, x(r, o)) for every true type t and report r.
      Eigen::MatrixXd alloc(ix(s.types(i)), ix(v.allocations()));
      Eigen::VectorXd pay(ix(s.types(i)));
      for (std::size_t r = 0; r < s.types(i); ++r) {
        const std::size_t prof = s.compose(i, r, o);
        alloc.row(ix(r)) = m.lottery().row(ix(prof));
        pay(ix(r)) = m.payment(prof, i);
      }
      const Eigen::MatrixXd u = (vi * alloc.transpose()).rowwise() - pay.transpose();
      for (Eigen::Index t = 0; t < u.rows(); ++t) worst = std::max(worst, u.row(t).maxCoeff() - u(t, t));
    }
  }
  return worst;
}

Eigen::MatrixXd interim_utilities(const Mechanism& m, const Valuations& v, std::size_t agent,
                                  const std::vector<std::optional<Eigen::VectorXd>>& weights) {
  require_compatible(m, v);
  const auto& s = m.space();
  const auto k = ix(s.types(agent));
  const auto others = s.others(agent);
  if (weights.size() != s.types(agent)) throw DimensionError("one weight vector per type required");
  Eigen::MatrixXd out = Eigen::MatrixXd::Constant(k, k, kNaN);
  for (Eigen::Index r = 0; r < k; ++r) {
    // Allocation and payment seen when reporting r against each sub-profile.
    Eigen::MatrixXd alloc(ix(others), ix(v.allocations()));
    Eigen::VectorXd pay(ix(others));
    for (std::size_t o = 0; o < others; ++o) {
      const std::size_t prof = s.compose(agent, static_cast<std::size_t>(r), o);
      alloc.row(ix(o)) = m.lottery().row(ix(prof));
      pay(ix(o)) = m.payment(prof, agent);
    }
    for (Eigen::Index t = 0; t < k; ++t) {
      const auto& w = weights[static_cast<std::size_t>(t)];
      if (!w) continue;
      if (static_cast<std::size_t>(w->size()) != others) throw DimensionError("weight vector has the wrong length");
      const Eigen::VectorXd mean_alloc = alloc.transpose() * *w;
      out(t, r) = mean_alloc.dot(v.table(agent).row(t)) - w->dot(pay);
    }
  }
  return out;
}

namespace {

ICReport build_report(const Mechanism& m, const Valuations& v,
                      const std::vector<std::vector<std::optional<Eigen::VectorXd>>>& weights,
                      std::vector<Eigen::VectorXd> type_mass) {
  const auto& s = m.space();
  ICReport rep;
  rep.type_mass = std::move(type_mass);
  rep.worst.resize(s.agents());
  for (std::size_t i = 0; i < s.agents(); ++i) {
    const Eigen::MatrixXd u = interim_utilities(m, v, i, weights[i]);
    rep.worst[i].assign(s.types(i), kNaN);
    for (std::size_t t = 0; t < s.types(i); ++t) {
      if (!weights[i][t]) continue;
      double worst = 0.0;
      for (std::size_t r = 0; r < s.types(i); ++r) {
        if (r == t) continue;
        double regret = u(ix(t), ix(r)) - u(ix(t), ix(t));
        if (regret <= kIcTol) regret = 0.0;
        rep.entries.push_back({i, t, r, regret});
        worst = std::max(worst, regret);
      }
      rep.worst[i][t] = worst;
      rep.eps_star = std::max(rep.eps_star, worst);
    }
  }
  return rep;
}

}  // namespace

ICReport bic_report(const Mechanism& m, const Valuations& v, const JointDist& d) {
  require_same_space(m.space(), d.space(), "bic_report");
  const auto& s = m.space();
  std::vector<std::vector<std::optional<Eigen::VectorXd>>> weights(s.agents());
  std::vector<Eigen::VectorXd> mass = marginals(d);
  for (std::size_t i = 0; i < s.agents(); ++i) {
    weights[i].resize(s.types(i));
    for (std::size_t t = 0; t < s.types(i); ++t) {
      if (mass[i](ix(t)) > 0.0) weights[i][t] = conditional(d, i, t);
    }
  }
  return build_report(m, v, weights, std::move(mass));
}

ICReport bic_report_product(const Mechanism& m, const Valuations& v, const std::vector<Eigen::VectorXd>& marginals) {
  const auto& s = m.space();
  const JointDist prior = JointDist::product(s, marginals);
  std::vector<std::vector<std::optional<Eigen::VectorXd>>> weights(s.agents());
  for (std::size_t i = 0; i < s.agents(); ++i) {
    // Any type of agent i sees the same distribution of t_{-i}.
    Eigen::VectorXd others = Eigen::VectorXd::Zero(ix(s.others(i)));
    for (std::size_t t = 0; t < s.profiles(); ++t) others(ix(s.others_index(t, i))) += prior[t];
    weights[i].assign(s.types(i), others);
  }
  return build_report(m, v, weights, marginals);
}

double ICReport::q_at(double eps) const {
  double q = 0.0;
  for (std::size_t i = 0; i < worst.size(); ++i) {
    double bad = 0.0;
    for (std::size_t t = 0; t < worst[i].size(); ++t) {
      if (!std::isnan(worst[i][t]) && worst[i][t] > eps + kIcTol) bad += type_mass[i](ix(t));
    }
    q = std::max(q, bad);
  }
  return q;
}

std::vector<std::pair<double, double>> ICReport::frontier() const {
  std::vector<double> cuts{0.0};
  for (const auto& row : worst) {
    for (double w : row) {
      if (!std::isnan(w) && w > 0.0) cuts.push_back(w);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<std::pair<double, double>> out;
  for (double c : cuts) out.emplace_back(c, q_at(c));
  return out;
}

double ICReport::eps_at(double q) const {
  for (const auto& [eps, qq] : frontier()) {
    if (qq <= q + kMassTol) return eps;
  }
  return eps_star;
}

Objective Objective::revenue(std::size_t agents, double bound) {
  Objective o;
  o.kind = Kind::revenue;
  o.lower = -static_cast<double>(agents) * bound;
  o.upper = static_cast<double>(agents) * bound;
  return o;
}

Objective Objective::welfare(std::size_t agents, double bound) {
  Objective o;
  o.kind = Kind::welfare;
  o.lower = 0.0;
  o.upper = static_cast<double>(agents) * bound;
  return o;
}

Objective Objective::custom(Eigen::MatrixXd table, double payment_weight, double lower, double upper) {
  if (!(upper >= lower)) throw ValidationError("objective bounds must satisfy lower <= upper");
  if (!table.allFinite()) throw ValidationError("objective table must be finite");
  if (payment_weight == 0.0 && table.size() > 0 && (table.minCoeff() < lower || table.maxCoeff() > upper)) {
    throw ValidationError("custom objective table leaves [lower, upper]");
  }
  Objective o;
  o.kind = Kind::custom;
  o.table = std::move(table);
  o.payment_weight = payment_weight;
  o.lower = lower;
  o.upper = upper;
  return o;
}

std::string Objective::name() const {
  switch (kind) {
    case Kind::revenue: return "revenue";
    case Kind::welfare: return "welfare";
    case Kind::custom: return "custom";
  }
  return "unknown";
}

ObjectiveRow objective_row(const Objective& o, const Valuations& v, std::size_t profile) {
  const auto& s = v.space();
  ObjectiveRow row{Eigen::VectorXd::Zero(ix(v.allocations())), Eigen::VectorXd::Zero(ix(s.agents()))};
  switch (o.kind) {
    case Objective::Kind::revenue:
      row.payment.setOnes();
      break;
    case Objective::Kind::welfare:
      for (std::size_t i = 0; i < s.agents(); ++i) row.allocation += v.table(i).row(ix(s.type_of(profile, i))).transpose();
      break;
    case Objective::Kind::custom:
      if (static_cast<std::size_t>(o.table.rows()) != s.profiles() ||
          static_cast<std::size_t>(o.table.cols()) != v.allocations()) {
        throw DimensionError("custom objective table has the wrong shape");
      }
      row.allocation = o.table.row(ix(profile)).transpose();
      row.payment.setConstant(o.payment_weight);
      break;
  }
  return row;
}

double objective_at(const Mechanism& m, const Valuations& v, const Objective& o, std::size_t profile) {
  const ObjectiveRow row = objective_row(o, v, profile);
  const double value = m.lottery().row(ix(profile)).dot(row.allocation) + m.payments().row(ix(profile)).dot(row.payment);
  if (value < o.lower - kIcTol || value > o.upper + kIcTol) {
    throw ValidationError("objective value " + std::to_string(value) + " at profile " + std::to_string(profile) +
                          " leaves [" + std::to_string(o.lower) + ", " + std::to_string(o.upper) + "]");
  }
  return value;
}

Eigen::VectorXd objective_values(const Mechanism& m, const Valuations& v, const Objective& o) {
  require_compatible(m, v);
  Eigen::VectorXd out(ix(m.space().profiles()));
  for (std::size_t t = 0; t < m.space().profiles(); ++t) out(ix(t)) = objective_at(m, v, o, t);
  return out;
}

double objective_eval(const Mechanism& m, const Valuations& v, const JointDist& d, const Objective& o) {
  require_same_space(m.space(), d.space(), "objective_eval");
  return objective_values(m, v, o).dot(d.mass());
}

Mechanism mix_with_null(const Mechanism& m, double lambda) {
  if (!(lambda >= 0.0) || lambda > 1.0) throw ValidationError("mixing weight must lie in [0, 1]");
  Eigen::MatrixXd lottery = lambda * m.lottery();
  lottery.col(ix(m.null_allocation())).array() += 1.0 - lambda;
  return Mechanism(m.space(), m.null_allocation(), m.bound(), std::move(lottery), lambda * m.payments());
}

}  // namespace robmech
