#include "robmech/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "robmech/errors.hpp"

namespace robmech {

namespace {

Eigen::Index ix(std::size_t k) { return static_cast<Eigen::Index>(k); }

// Accumulates constraint rows before they are packed into dense matrices.
struct RowSink {
  Eigen::Index columns;
  std::vector<std::vector<std::pair<Eigen::Index, double>>> rows;
  std::vector<double> rhs;

  void add(std::vector<std::pair<Eigen::Index, double>> row, double b) {
    rows.push_back(std::move(row));
    rhs.push_back(b);
  }
  void pack(Eigen::MatrixXd& a, Eigen::VectorXd& b) const {
    a = Eigen::MatrixXd::Zero(ix(rows.size()), columns);
    b.resize(ix(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (const auto& [c, val] : rows[r]) a(ix(r), c) += val;
      b(ix(r)) = rhs[r];
    }
  }
};

}  // namespace

LinearProgram mechanism_constraints(const Valuations& v, IcKind ic, const JointDist* prior, std::size_t extra,
                                    MechanismLayout* layout_out) {
  const TypeSpace& s = v.space();
  MechanismLayout L{s.profiles(), v.allocations(), s.agents(), extra};
  if (static_cast<std::size_t>(L.columns()) > kMaxLpVariables) {
    throw ValidationError("mechanism LP would need " + std::to_string(L.columns()) + " variables; the limit is " +
                          std::to_string(kMaxLpVariables));
  }
  if (ic == IcKind::bic) {
    if (prior == nullptr) throw ValidationError("BIC synthesis needs a prior");
    require_same_space(s, prior->space(), "mechanism_constraints");
  }
  const std::size_t A = L.allocations;
  RowSink le{L.columns(), {}, {}};
  RowSink eq{L.columns(), {}, {}};

  for (std::size_t t = 0; t < L.profiles; ++t) {
    std::vector<std::pair<Eigen::Index, double>> row;
    for (std::size_t a = 0; a < A; ++a) row.emplace_back(L.x(t, a), 1.0);
    eq.add(std::move(row), 1.0);
    for (std::size_t i = 0; i < L.agents; ++i) {
      const std::size_t ti = s.type_of(t, i);
      if (ti == s.bottom(i)) {
        eq.add({{L.p(t, i), 1.0}}, 0.0);
        continue;
      }
      // p_i(t) - v_i(t_i, x(t)) <= 0
      std::vector<std::pair<Eigen::Index, double>> ir{{L.p(t, i), 1.0}};
      for (std::size_t a = 0; a < A; ++a) {
        if (v(i, ti, a) != 0.0) ir.emplace_back(L.x(t, a), -v(i, ti, a));
      }
      le.add(std::move(ir), 0.0);
    }
  }
  eq.add({{L.x(s.all_bottom(), v.null_allocation()), 1.0}}, 1.0);

  for (std::size_t i = 0; i < L.agents; ++i) {
    const std::size_t k = s.types(i);
    std::vector<Eigen::VectorXd> weights(k);
    std::vector<bool> active(k, true);
    if (ic == IcKind::bic) {
      const Eigen::VectorXd m = marginal(*prior, i);
      for (std::size_t t = 0; t < k; ++t) {
        active[t] = m(ix(t)) > 0.0;
        if (active[t]) weights[t] = conditional(*prior, i, t);
      }
    }
    for (std::size_t t = 0; t < k; ++t) {
      if (!active[t]) continue;
      for (std::size_t r = 0; r < k; ++r) {
        if (r == t) continue;
        // u(t <- r) - u(t <- t) <= 0, pointwise or averaged over t_{-i}.
        auto term = [&](std::vector<std::pair<Eigen::Index, double>>& row, std::size_t o, double w) {
          const std::size_t pr = s.compose(i, r, o);
          const std::size_t pt = s.compose(i, t, o);
          for (std::size_t a = 0; a < A; ++a) {
            const double val = v(i, t, a) * w;
            if (val == 0.0) continue;
            row.emplace_back(L.x(pr, a), val);
            row.emplace_back(L.x(pt, a), -val);
          }
          row.emplace_back(L.p(pr, i), -w);
          row.emplace_back(L.p(pt, i), w);
        };
        if (ic == IcKind::dsic) {
          for (std::size_t o = 0; o < s.others(i); ++o) {
            std::vector<std::pair<Eigen::Index, double>> row;
            term(row, o, 1.0);
            le.add(std::move(row), 0.0);
          }
        } else {
          std::vector<std::pair<Eigen::Index, double>> row;
          for (std::size_t o = 0; o < s.others(i); ++o) {
            const double w = weights[t](ix(o));
            if (w > 0.0) term(row, o, w);
          }
          le.add(std::move(row), 0.0);
        }
      }
    }
  }

  LinearProgram lp;
  lp.objective = Eigen::VectorXd::Zero(L.columns());
  le.pack(lp.A_le, lp.b_le);
  eq.pack(lp.A_eq, lp.b_eq);
  lp.lower = Eigen::VectorXd::Zero(L.columns());
  lp.lower.segment(L.p(0, 0), ix(L.profiles * L.agents)).setConstant(-v.bound());
  lp.lower.tail(ix(extra)).setConstant(-kLpInf);
  if (layout_out) *layout_out = L;
  return lp;
}

Mechanism mechanism_from_solution(const Valuations& v, const MechanismLayout& L, const Eigen::VectorXd& x) {
  const TypeSpace& s = v.space();
  Eigen::MatrixXd lottery(ix(L.profiles), ix(L.allocations));
  Eigen::MatrixXd pay(ix(L.profiles), ix(L.agents));
  for (std::size_t t = 0; t < L.profiles; ++t) {
    for (std::size_t a = 0; a < L.allocations; ++a) {
      const double q = x(L.x(t, a));
      lottery(ix(t), ix(a)) = q < 1e-12 ? 0.0 : q;
    }
    const double total = lottery.row(ix(t)).sum();
    if (total > 0.0) {
      lottery.row(ix(t)) /= total;
    } else {
      lottery.row(ix(t)).setZero();
      lottery(ix(t), ix(v.null_allocation())) = 1.0;
    }
    for (std::size_t i = 0; i < L.agents; ++i) {
      double p = std::clamp(x(L.p(t, i)), -v.bound(), v.bound());
      if (std::abs(p) < 1e-12 || s.type_of(t, i) == s.bottom(i)) p = 0.0;
      pay(ix(t), ix(i)) = p;
    }
  }
  const auto bot = ix(s.all_bottom());
  lottery.row(bot).setZero();
  lottery(bot, ix(v.null_allocation())) = 1.0;
  return Mechanism(s, v.null_allocation(), v.bound(), std::move(lottery), std::move(pay));
}

SynthesizedMechanism optimal_mechanism(const JointDist& d, const Valuations& v, IcKind ic, const Objective& o) {
  require_same_space(d.space(), v.space(), "optimal_mechanism");
  if (!o.payment_linear()) throw ValidationError("objective must be linear in payments");
  MechanismLayout L;
  LinearProgram lp = mechanism_constraints(v, ic, &d, 0, &L);
  for (std::size_t t = 0; t < L.profiles; ++t) {
    const double w = d[t];
    if (w == 0.0) continue;
    const ObjectiveRow row = objective_row(o, v, t);
    for (std::size_t a = 0; a < L.allocations; ++a) lp.objective(L.x(t, a)) += w * row.allocation(ix(a));
    for (std::size_t i = 0; i < L.agents; ++i) lp.objective(L.p(t, i)) += w * row.payment(ix(i));
  }
  LpSolution sol = solve_lp(lp);
  if (!sol.optimal()) throw LpError("mechanism LP ended with status " + to_string(sol.status));
  SynthesizedMechanism out;
  out.mechanism = mechanism_from_solution(v, L, sol.x);
  out.value = sol.value;
  out.certificate = std::move(sol);
  out.call = std::string("optimal_mechanism(") + (ic == IcKind::dsic ? "dsic" : "bic") + ", " + o.name() + ")";
  return out;
}

double AdditiveInstance::value(std::size_t profile, std::size_t item) const {
  const std::size_t c = dist.space().type_of(profile, item);
  return c == 0 ? 0.0 : values[item][c - 1];
}

double AdditiveInstance::bundle_value(std::size_t profile) const {
  double total = 0.0;
  for (std::size_t j = 0; j < items(); ++j) total += value(profile, j);
  return total;
}

AdditiveInstance additive_instance(std::vector<std::vector<double>> values, const Eigen::VectorXd& mass) {
  if (values.empty()) throw ValidationError("at least one item required");
  std::vector<std::size_t> inner;
  std::vector<std::size_t> padded;
  for (const auto& vals : values) {
    if (vals.empty()) throw ValidationError("every item needs at least one value");
    for (double x : vals) {
      if (!(x >= 0.0) || !std::isfinite(x)) throw ValidationError("item values must be finite and nonnegative");
    }
    inner.push_back(vals.size());
    padded.push_back(vals.size() + 1);
  }
  std::size_t count = 1;
  for (std::size_t k : inner) count *= k;
  if (static_cast<std::size_t>(mass.size()) != count) throw DimensionError("mass table has the wrong size");

  TypeSpace space = TypeSpace::with_sizes(padded);
  Eigen::VectorXd full = Eigen::VectorXd::Zero(ix(space.profiles()));
  std::vector<std::size_t> digits(inner.size());
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t rest = k;
    for (std::size_t j = inner.size(); j-- > 0;) {
      digits[j] = rest % inner[j] + 1;
      rest /= inner[j];
    }
    full(ix(space.encode(digits))) = mass(ix(k));
  }
  return AdditiveInstance{std::move(values), JointDist(std::move(space), std::move(full))};
}

PriceResult srev(const AdditiveInstance& inst) {
  PriceResult out;
  for (std::size_t j = 0; j < inst.items(); ++j) {
    const Eigen::VectorXd m = marginal(inst.dist, j);
    double best = 0.0;
    double best_price = 0.0;
    for (std::size_t c = 1; c < static_cast<std::size_t>(m.size()); ++c) {
      if (!(m(ix(c)) > 0.0)) continue;
      const double price = inst.values[j][c - 1];
      double tail = 0.0;
      for (std::size_t c2 = 1; c2 < static_cast<std::size_t>(m.size()); ++c2) {
        if (inst.values[j][c2 - 1] >= price) tail += m(ix(c2));
      }
      if (price * tail > best) {
        best = price * tail;
        best_price = price;
      }
    }
    out.revenue += best;
    out.prices.push_back(best_price);
  }
  return out;
}

PriceResult brev(const AdditiveInstance& inst) {
  const auto support = inst.dist.support();
  PriceResult out{0.0, {0.0}};
  for (std::size_t t : support) {
    const double price = inst.bundle_value(t);
    double tail = 0.0;
    for (std::size_t u : support) {
      if (inst.bundle_value(u) >= price) tail += inst.dist[u];
    }
    if (price * tail > out.revenue) {
      out.revenue = price * tail;
      out.prices[0] = price;
    }
  }
  return out;
}

AdditiveProblem additive_problem(const AdditiveInstance& inst) {
  const std::size_t m = inst.items();
  if (m > 10) throw ValidationError("too many items for subset allocations");
  AdditiveProblem prob;
  prob.support = inst.dist.support();
  std::vector<std::string> labels{kBottomLabel};
  for (std::size_t t : prob.support) {
    std::string lab;
    for (std::size_t j = 0; j < m; ++j) lab += (j ? "_" : "") + inst.dist.space().label(j, inst.dist.space().type_of(t, j));
    labels.push_back(lab);
  }
  TypeSpace space({labels});
  const std::size_t subsets = std::size_t{1} << m;
  std::vector<std::string> alloc;
  for (std::size_t s = 0; s < subsets; ++s) {
    std::string lab = "{";
    for (std::size_t j = 0; j < m; ++j) {
      if (s >> j & 1U) lab += (lab.size() > 1 ? "," : "") + std::to_string(j);
    }
    alloc.push_back(lab + "}");
  }
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(ix(labels.size()), ix(subsets));
  double bound = 0.0;
  for (std::size_t k = 0; k < prob.support.size(); ++k) {
    for (std::size_t s = 0; s < subsets; ++s) {
      double val = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        if (s >> j & 1U) val += inst.value(prob.support[k], j);
      }
      table(ix(k + 1), ix(s)) = val;
    }
    bound = std::max(bound, inst.bundle_value(prob.support[k]));
  }
  if (!(bound > 0.0)) bound = 1.0;
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(ix(labels.size()));
  for (std::size_t k = 0; k < prob.support.size(); ++k) mass(ix(k + 1)) = inst.dist[prob.support[k]];
  prob.valuations = Valuations(space, std::move(alloc), 0, bound, {table});
  prob.prior = JointDist::from_weights(space, mass);
  return prob;
}

SynthesizedMechanism optimal_additive(const AdditiveInstance& inst) {
  const AdditiveProblem prob = additive_problem(inst);
  SynthesizedMechanism out =
      optimal_mechanism(prob.prior, prob.valuations, IcKind::dsic, Objective::revenue(1, prob.valuations.bound()));
  out.call = "optimal_additive(revenue)";
  return out;
}

Mechanism item_pricing_mechanism(const AdditiveProblem& prob, const AdditiveInstance& inst,
                                 const std::vector<double>& prices) {
  if (prices.size() != inst.items()) throw DimensionError("one price per item required");
  const std::size_t types = prob.support.size() + 1;
  const std::size_t subsets = prob.valuations.allocations();
  Eigen::MatrixXd lottery = Eigen::MatrixXd::Zero(ix(types), ix(subsets));
  Eigen::MatrixXd pay = Eigen::MatrixXd::Zero(ix(types), 1);
  lottery(0, 0) = 1.0;
  for (std::size_t k = 0; k < prob.support.size(); ++k) {
    std::size_t bought = 0;
    double total = 0.0;
    for (std::size_t j = 0; j < inst.items(); ++j) {
      if (inst.value(prob.support[k], j) >= prices[j]) {
        bought |= std::size_t{1} << j;
        total += prices[j];
      }
    }
    lottery(ix(k + 1), ix(bought)) = 1.0;
    pay(ix(k + 1), 0) = total;
  }
  return Mechanism(prob.valuations.space(), 0, prob.valuations.bound(), std::move(lottery), std::move(pay));
}

Mechanism bundle_mechanism(const AdditiveProblem& prob, const AdditiveInstance& inst, double price) {
  const std::size_t types = prob.support.size() + 1;
  const std::size_t all = prob.valuations.allocations() - 1;
  Eigen::MatrixXd lottery = Eigen::MatrixXd::Zero(ix(types), ix(all + 1));
  Eigen::MatrixXd pay = Eigen::MatrixXd::Zero(ix(types), 1);
  lottery(0, 0) = 1.0;
  for (std::size_t k = 0; k < prob.support.size(); ++k) {
    const bool buy = inst.bundle_value(prob.support[k]) >= price;
    lottery(ix(k + 1), buy ? ix(all) : 0) = 1.0;
    pay(ix(k + 1), 0) = buy ? price : 0.0;
  }
  return Mechanism(prob.valuations.space(), 0, prob.valuations.bound(), std::move(lottery), std::move(pay));
}

TypeSpace SingleItemMarket::space() const {
  if (values.empty()) throw ValidationError("market needs at least one agent");
  std::vector<std::vector<std::string>> labels;
  for (const auto& vals : values) {
    std::vector<std::string> l{kBottomLabel};
    for (std::size_t k = 0; k < vals.size(); ++k) l.push_back("v" + std::to_string(k));
    labels.push_back(std::move(l));
  }
  return TypeSpace(std::move(labels));
}

Valuations SingleItemMarket::valuations() const {
  const std::size_t n = values.size();
  double bound = 0.0;
  for (const auto& vals : values) {
    for (double x : vals) {
      if (!(x >= 0.0) || !std::isfinite(x)) throw ValidationError("values must be finite and nonnegative");
      bound = std::max(bound, x);
    }
  }
  if (!(bound > 0.0)) bound = 1.0;
  std::vector<std::string> alloc{"none"};
  for (std::size_t i = 0; i < n; ++i) alloc.push_back("agent" + std::to_string(i));
  std::vector<Eigen::MatrixXd> table;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(ix(values[i].size() + 1), ix(n + 1));
    for (std::size_t k = 0; k < values[i].size(); ++k) t(ix(k + 1), ix(i + 1)) = values[i][k];
    table.push_back(std::move(t));
  }
  return Valuations(space(), std::move(alloc), 0, bound, std::move(table));
}

Mechanism posted_prices(const SingleItemMarket& market, const std::vector<double>& prices,
                        const std::vector<std::size_t>& order) {
  const std::size_t n = market.values.size();
  if (prices.size() != n || order.size() != n) throw DimensionError("one price and one arrival slot per agent");
  std::set<std::size_t> seen(order.begin(), order.end());
  if (seen.size() != n || *seen.rbegin() >= n) throw ValidationError("arrival order must be a permutation");
  const Valuations v = market.valuations();
  const TypeSpace& s = v.space();
  Eigen::MatrixXd lottery = Eigen::MatrixXd::Zero(ix(s.profiles()), ix(n + 1));
  Eigen::MatrixXd pay = Eigen::MatrixXd::Zero(ix(s.profiles()), ix(n));
  for (std::size_t t = 0; t < s.profiles(); ++t) {
    std::size_t winner = 0;
    for (std::size_t i : order) {
      const std::size_t ti = s.type_of(t, i);
      if (ti != 0 && market.value(i, ti) >= prices[i]) {
        winner = i + 1;
        pay(ix(t), ix(i)) = prices[i];
        break;
      }
    }
    lottery(ix(t), ix(winner)) = 1.0;
  }
  return Mechanism(s, 0, v.bound(), std::move(lottery), std::move(pay));
}

double prophet_benchmark(const SingleItemMarket& market, const JointDist& d) {
  const TypeSpace& s = d.space();
  require_same_space(s, market.space(), "prophet_benchmark");
  double total = 0.0;
  for (std::size_t t = 0; t < s.profiles(); ++t) {
    if (d[t] == 0.0) continue;
    double best = 0.0;
    for (std::size_t i = 0; i < s.agents(); ++i) best = std::max(best, market.value(i, s.type_of(t, i)));
    total += d[t] * best;
  }
  return total;
}

double prophet_threshold(const SingleItemMarket& market, const std::vector<Eigen::VectorXd>& marginals) {
  return prophet_benchmark(market, JointDist::product(market.space(), marginals)) / 2.0;
}

Mechanism threshold_policy(const SingleItemMarket& market, double tau) {
  std::vector<std::size_t> order(market.values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  return posted_prices(market, std::vector<double>(order.size(), tau), order);
}

}  // namespace robmech
