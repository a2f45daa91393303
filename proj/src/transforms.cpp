#include "robmech/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "robmech/errors.hpp"

namespace robmech {

namespace {

Eigen::Index ix(std::size_t k) { return static_cast<Eigen::Index>(k); }

// Distribution of t_{-i} under a product prior.
Eigen::VectorXd others_weights(const JointDist& d, std::size_t agent) {
  const TypeSpace& s = d.space();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(ix(s.others(agent)));
  for (std::size_t t = 0; t < s.profiles(); ++t) w(ix(s.others_index(t, agent))) += d[t];
  return w;
}

}  // namespace

TypeRestriction::TypeRestriction(const TypeSpace& space, std::vector<std::vector<std::size_t>> members)
    : space_(space), members_(std::move(members)) {
  if (members_.size() != space_.agents()) throw DimensionError("one member list per agent required");
  std::vector<std::vector<std::string>> labels;
  std::vector<std::size_t> bottoms;
  inside_.resize(space_.agents());
  for (std::size_t i = 0; i < space_.agents(); ++i) {
    auto& list = members_[i];
    std::sort(list.begin(), list.end());
    if (std::adjacent_find(list.begin(), list.end()) != list.end()) {
      throw ValidationError("restriction of agent " + std::to_string(i) + " repeats a type");
    }
    inside_[i].assign(space_.types(i), false);
    for (std::size_t t : list) {
      if (t >= space_.types(i)) throw DimensionError("restricted type index out of range");
      inside_[i][t] = true;
    }
    if (!inside_[i][space_.bottom(i)]) {
      throw ValidationError("restriction of agent " + std::to_string(i) + " must keep the non-participation type");
    }
    std::vector<std::string> l;
    for (std::size_t t : list) {
      if (t == space_.bottom(i)) bottoms.push_back(l.size());
      l.push_back(space_.label(i, t));
    }
    labels.push_back(std::move(l));
  }
  restricted_ = TypeSpace(std::move(labels), std::move(bottoms));
}

TypeRestriction TypeRestriction::full(const TypeSpace& space) {
  std::vector<std::vector<std::size_t>> members(space.agents());
  for (std::size_t i = 0; i < space.agents(); ++i) {
    for (std::size_t t = 0; t < space.types(i); ++t) members[i].push_back(t);
  }
  return TypeRestriction(space, std::move(members));
}

bool TypeRestriction::is_full() const {
  for (std::size_t i = 0; i < space_.agents(); ++i) {
    if (members_[i].size() != space_.types(i)) return false;
  }
  return true;
}

std::size_t TypeRestriction::lower(std::size_t agent, std::size_t type) const {
  const auto& list = members_[agent];
  const auto it = std::lower_bound(list.begin(), list.end(), type);
  if (it == list.end() || *it != type) throw ValidationError("type is outside the restriction");
  return static_cast<std::size_t>(it - list.begin());
}

std::size_t TypeRestriction::lower_profile(std::size_t profile) const {
  std::vector<std::size_t> t(space_.agents());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = lower(i, space_.type_of(profile, i));
  return restricted_.encode(t);
}

std::size_t TypeRestriction::lift_profile(std::size_t restricted_profile) const {
  std::vector<std::size_t> t(space_.agents());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = lift(i, restricted_.type_of(restricted_profile, i));
  return space_.encode(t);
}

double TypeRestriction::beta(const JointDist& d) const {
  require_same_space(space_, d.space(), "TypeRestriction::beta");
  double b = 0.0;
  for (std::size_t i = 0; i < space_.agents(); ++i) {
    const Eigen::VectorXd m = marginal(d, i);
    double in = 0.0;
    for (std::size_t t : members_[i]) in += m(ix(t));
    b = std::max(b, 1.0 - in);
  }
  return std::max(b, 0.0);
}

Valuations restrict_valuations(const Valuations& v, const TypeRestriction& r) {
  require_same_space(v.space(), r.space(), "restrict_valuations");
  std::vector<Eigen::MatrixXd> table;
  for (std::size_t i = 0; i < v.space().agents(); ++i) {
    const auto& members = r.members(i);
    Eigen::MatrixXd t(ix(members.size()), ix(v.allocations()));
    for (std::size_t k = 0; k < members.size(); ++k) t.row(ix(k)) = v.table(i).row(ix(members[k]));
    table.push_back(std::move(t));
  }
  return Valuations(r.restricted(), v.allocation_labels(), v.null_allocation(), v.bound(), std::move(table));
}

Mechanism restrict_mechanism(const Mechanism& m, const TypeRestriction& r) {
  require_same_space(m.space(), r.space(), "restrict_mechanism");
  const TypeSpace& rs = r.restricted();
  Eigen::MatrixXd lottery(ix(rs.profiles()), ix(m.allocations()));
  Eigen::MatrixXd pay(ix(rs.profiles()), ix(rs.agents()));
  for (std::size_t k = 0; k < rs.profiles(); ++k) {
    const std::size_t t = r.lift_profile(k);
    lottery.row(ix(k)) = m.lottery().row(ix(t));
    pay.row(ix(k)) = m.payments().row(ix(t));
  }
  return Mechanism(rs, m.null_allocation(), m.bound(), std::move(lottery), std::move(pay));
}

Mechanism dsic_extend(const Mechanism& m_plus, const TypeRestriction& r, const Valuations& v) {
  require_same_space(v.space(), r.space(), "dsic_extend");
  require_same_space(m_plus.space(), r.restricted(), "dsic_extend");
  const Valuations vr = restrict_valuations(v, r);
  if (dsic_regret(m_plus, vr) > kIcTol) throw PreconditionError("mechanism on T+ is not DSIC");
  if (!expost_ir_check(m_plus, vr).holds()) throw PreconditionError("mechanism on T+ is not ex-post IR");

  const TypeSpace& s = v.space();
  const std::size_t A = v.allocations();
  std::vector<std::vector<std::size_t>> solo(s.agents(), std::vector<std::size_t>(A));
  for (std::size_t i = 0; i < s.agents(); ++i) {
    for (std::size_t a = 0; a < A; ++a) {
      const auto b = v.solo(i, a);
      if (!b) {
        throw PreconditionError("allocation '" + v.allocation_labels()[a] +
                                "' has no counterpart serving only agent " + std::to_string(i));
      }
      solo[i][a] = *b;
    }
  }

  Eigen::MatrixXd lottery = Eigen::MatrixXd::Zero(ix(s.profiles()), ix(A));
  Eigen::MatrixXd pay = Eigen::MatrixXd::Zero(ix(s.profiles()), ix(s.agents()));
  for (std::size_t t = 0; t < s.profiles(); ++t) {
    std::size_t outside = 0;
    std::size_t who = 0;
    for (std::size_t i = 0; i < s.agents(); ++i) {
      if (!r.contains(i, s.type_of(t, i))) {
        ++outside;
        who = i;
      }
    }
    if (outside == 0) {
      const std::size_t k = r.lower_profile(t);
      lottery.row(ix(t)) = m_plus.lottery().row(ix(k));
      pay.row(ix(t)) = m_plus.payments().row(ix(k));
    } else if (outside == 1) {
      const std::size_t ti = s.type_of(t, who);
      std::size_t best_k = 0;
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t z : r.members(who)) {
        const std::size_t k = r.lower_profile(s.with_type(t, who, z));
        const double u = m_plus.lottery().row(ix(k)).dot(v.table(who).row(ix(ti))) - m_plus.payment(k, who);
        if (u > best) {
          best = u;
          best_k = k;
        }
      }
      for (std::size_t a = 0; a < A; ++a) lottery(ix(t), ix(solo[who][a])) += m_plus.probability(best_k, a);
      pay(ix(t), ix(who)) = m_plus.payment(best_k, who);
    } else {
      lottery(ix(t), ix(v.null_allocation())) = 1.0;
    }
  }
  return Mechanism(s, v.null_allocation(), v.bound(), std::move(lottery), std::move(pay));
}

BicExtension bic_extend(const Mechanism& m, const TypeRestriction& r, const Valuations& v, const JointDist& d) {
  require_compatible(m, v);
  require_same_space(m.space(), r.space(), "bic_extend");
  require_same_space(m.space(), d.space(), "bic_extend");
  if (!is_product(d)) throw PreconditionError("BIC extension needs a product prior");
  const TypeSpace& s = m.space();
  const std::size_t n = s.agents();
  const double H = v.bound();

  BicExtension out;
  out.beta = r.beta(d);
  out.tau.resize(n);
  out.ratio.resize(n);
  std::vector<Eigen::VectorXd> weights(n);
  for (std::size_t i = 0; i < n; ++i) {
    weights[i] = others_weights(d, i);
    const std::size_t k = s.types(i);
    const Eigen::VectorXd mass = marginal(d, i);
    const Eigen::MatrixXd u = interim_utilities(m, v, i, std::vector<std::optional<Eigen::VectorXd>>(k, weights[i]));
    out.tau[i].resize(k);
    out.ratio[i].assign(k, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t t = 0; t < k; ++t) {
      if (r.contains(i, t)) {
        out.tau[i][t] = t;
        if (mass(ix(t)) > 0.0) {
          const double regret = u.row(ix(t)).maxCoeff() - u(ix(t), ix(t));
          if (regret > kIcTol) out.input_epsilon = std::max(out.input_epsilon, regret);
        }
        continue;
      }
      std::size_t best = r.members(i).front();
      for (std::size_t z : r.members(i)) {
        if (u(ix(t), ix(z)) > u(ix(t), ix(best))) best = z;
      }
      out.tau[i][t] = best;
    }
  }

  auto mapped = [&](std::size_t t) {
    std::vector<std::size_t> types(n);
    for (std::size_t j = 0; j < n; ++j) types[j] = out.tau[j][s.type_of(t, j)];
    return s.encode(types);
  };

  // Interim payment and value for every T^- type at its image.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < s.types(i); ++t) {
      if (r.contains(i, t)) continue;
      double num = 0.0;
      double den = 0.0;
      for (std::size_t o = 0; o < s.others(i); ++o) {
        const double w = weights[i](ix(o));
        if (w == 0.0) continue;
        const std::size_t prof = s.compose(i, out.tau[i][t], o);
        num += w * m.payment(prof, i);
        den += w * m.lottery().row(ix(prof)).dot(v.table(i).row(ix(t)));
      }
      if (den > 0.0) {
        out.ratio[i][t] = num / den;
      } else if (num != 0.0) {
        ++out.zero_denominators;
      }
    }
  }

  Eigen::MatrixXd lottery(ix(s.profiles()), ix(m.allocations()));
  Eigen::MatrixXd pay = Eigen::MatrixXd::Zero(ix(s.profiles()), ix(n));
  for (std::size_t t = 0; t < s.profiles(); ++t) {
    const std::size_t image = mapped(t);
    lottery.row(ix(t)) = m.lottery().row(ix(image));
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t ti = s.type_of(t, i);
      double p = 0.0;
      if (r.contains(i, ti)) {
        p = m.payment(image, i);
      } else if (!std::isnan(out.ratio[i][ti])) {
        p = out.ratio[i][ti] * lottery.row(ix(t)).dot(v.table(i).row(ix(ti)));
      }
      if (std::abs(p) > H) {
        ++out.clamped_payments;
        p = std::clamp(p, -H, H);
      }
      pay(ix(t), ix(i)) = p;
    }
  }
  out.mechanism = Mechanism(s, m.null_allocation(), m.bound(), std::move(lottery), std::move(pay));
  return out;
}

double bic_extension_regret_bound(double delta, double beta, std::size_t agents, double bound, double eps) {
  return 4.0 * (1.5 * delta + beta * static_cast<double>(agents)) * bound + 4.0 * delta * bound + eps;
}

EpsqReduction reduce_epsq_bic(const Mechanism& m, const Valuations& v, const JointDist& d, double eps, double q) {
  if (!(eps >= 0.0)) throw ValidationError("eps must be nonnegative");
  if (!(q >= 0.0) || q > 1.0) throw ValidationError("q must lie in [0, 1]");
  require_same_space(m.space(), d.space(), "reduce_epsq_bic");
  if (!is_product(d)) throw PreconditionError("reduction needs a product prior");
  const ICReport ic = bic_report_product(m, v, marginals(d));
  if (ic.q_at(eps + kIcTol) > q + kMassTol) {
    throw PreconditionError("mechanism is not (" + std::to_string(eps) + ", " + std::to_string(q) + ")-BIC");
  }
  const TypeSpace& s = m.space();
  std::vector<std::vector<std::size_t>> good(s.agents());
  for (std::size_t i = 0; i < s.agents(); ++i) {
    for (std::size_t t = 0; t < s.types(i); ++t) {
      if (t == s.bottom(i) || ic.worst[i][t] <= eps + kIcTol) good[i].push_back(t);
    }
  }
  EpsqReduction out;
  out.restriction = TypeRestriction(s, std::move(good));
  out.extension = bic_extend(m, out.restriction, v, d);
  out.epsilon = eps;
  out.q = q;
  out.measured_epsilon = bic_report(out.extension.mechanism, v, d).eps_star;
  out.chain_bound = bic_extension_regret_bound(0.0, out.extension.beta, s.agents(), v.bound(), eps);
  const Objective rev = Objective::revenue(s.agents(), v.bound());
  out.revenue_before = objective_eval(m, v, d, rev);
  out.revenue_after = objective_eval(out.extension.mechanism, v, d, rev);
  out.revenue_bound = out.revenue_before - static_cast<double>(s.agents()) * q * rev.range();
  return out;
}

JointDist moving_mass(const JointDist& d, const std::vector<Eigen::VectorXd>& targets) {
  const TypeSpace& s = d.space();
  if (targets.size() != s.agents()) throw DimensionError("one target marginal per agent required");
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& tg = targets[i];
    if (static_cast<std::size_t>(tg.size()) != s.types(i)) throw DimensionError("target marginal has the wrong length");
    if (!tg.allFinite() || tg.minCoeff() < 0.0 || std::abs(tg.sum() - 1.0) > kMassTol) {
      throw ValidationError("target marginal " + std::to_string(i) + " is not a probability vector");
    }
  }
  Eigen::VectorXd mass = d.mass();
  for (std::size_t i = 0; i < s.agents(); ++i) {
    Eigen::VectorXd cur = Eigen::VectorXd::Zero(ix(s.types(i)));
    for (std::size_t t = 0; t < s.profiles(); ++t) cur(ix(s.type_of(t, i))) += mass(ix(t));
    const Eigen::VectorXd diff = cur - targets[i];
    const Eigen::VectorXd deficit = (-diff).cwiseMax(0.0);
    const double total_deficit = deficit.sum();
    if (!(total_deficit > 0.0)) continue;
    Eigen::VectorXd next = mass;
    for (std::size_t src = 0; src < s.types(i); ++src) {
      const double surplus = diff(ix(src));
      if (!(surplus > 0.0)) continue;
      const double frac = surplus / cur(ix(src));
      for (std::size_t o = 0; o < s.others(i); ++o) {
        const std::size_t from = s.compose(i, src, o);
        const double moved = mass(ix(from)) * frac;
        if (moved == 0.0) continue;
        next(ix(from)) -= moved;
        for (std::size_t dst = 0; dst < s.types(i); ++dst) {
          if (deficit(ix(dst)) > 0.0) next(ix(s.compose(i, dst, o))) += moved * deficit(ix(dst)) / total_deficit;
        }
      }
    }
    mass = next.cwiseMax(0.0);
  }
  return JointDist::from_weights(s, std::move(mass));
}

}  // namespace robmech
