#include "robmech/generate.hpp"

#include <algorithm>
#include <cmath>

#include "robmech/errors.hpp"

namespace robmech::gen {

namespace {

Eigen::Index ix(std::size_t k) { return static_cast<Eigen::Index>(k); }

}  // namespace

std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

TypeSpace space(Rng& rng, std::size_t agents, std::size_t max_types) {
  std::vector<std::size_t> sizes(agents);
  for (auto& k : sizes) k = uniform_index(rng, 2, std::max<std::size_t>(2, max_types));
  return TypeSpace::with_sizes(sizes);
}

Eigen::VectorXd simplex(Rng& rng, std::size_t k) {
  std::exponential_distribution<double> e(1.0);
  Eigen::VectorXd w(ix(k));
  for (Eigen::Index j = 0; j < w.size(); ++j) w(j) = e(rng) + 1e-3;
  return w / w.sum();
}

JointDist participating_dist(Rng& rng, const TypeSpace& s) {
  std::exponential_distribution<double> e(1.0);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(ix(s.profiles()));
  for (std::size_t t = 0; t < s.profiles(); ++t) {
    bool inside = true;
    for (std::size_t i = 0; i < s.agents(); ++i) inside = inside && s.type_of(t, i) != s.bottom(i);
    if (inside) w(ix(t)) = e(rng) + 1e-3;
  }
  return JointDist::from_weights(s, std::move(w));
}

JointDist any_dist(Rng& rng, const TypeSpace& s) { return JointDist::from_weights(s, simplex(rng, s.profiles())); }

std::vector<Eigen::VectorXd> participating_marginals(Rng& rng, const TypeSpace& s) {
  std::vector<Eigen::VectorXd> out;
  for (std::size_t i = 0; i < s.agents(); ++i) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(ix(s.types(i)));
    const Eigen::VectorXd w = simplex(rng, s.types(i) - 1);
    std::size_t k = 0;
    for (std::size_t t = 0; t < s.types(i); ++t) {
      if (t != s.bottom(i)) m(ix(t)) = w(ix(k++));
    }
    out.push_back(std::move(m));
  }
  return out;
}

Valuations valuations(Rng& rng, const TypeSpace& s, std::size_t allocations, double bound) {
  std::vector<std::string> labels;
  for (std::size_t a = 0; a < allocations; ++a) labels.push_back(a == 0 ? "null" : "x" + std::to_string(a));
  std::vector<Eigen::MatrixXd> table;
  for (std::size_t i = 0; i < s.agents(); ++i) {
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(ix(s.types(i)), ix(allocations));
    for (std::size_t ty = 0; ty < s.types(i); ++ty) {
      if (ty == s.bottom(i)) continue;
      for (std::size_t a = 1; a < allocations; ++a) t(ix(ty), ix(a)) = uniform(rng, 0.0, bound);
    }
    table.push_back(std::move(t));
  }
  return Valuations(s, std::move(labels), 0, bound, std::move(table));
}

Valuations owned_valuations(Rng& rng, const TypeSpace& s, double bound) {
  const std::size_t n = s.agents();
  std::vector<std::string> labels{"null"};
  for (std::size_t i = 0; i < n; ++i) labels.push_back("to" + std::to_string(i));
  std::vector<Eigen::MatrixXd> table;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(ix(s.types(i)), ix(n + 1));
    for (std::size_t ty = 0; ty < s.types(i); ++ty) {
      if (ty != s.bottom(i)) t(ix(ty), ix(i + 1)) = uniform(rng, 0.0, bound);
    }
    table.push_back(std::move(t));
  }
  return Valuations(s, std::move(labels), 0, bound, std::move(table));
}

Mechanism ir_mechanism(Rng& rng, const Valuations& v) {
  const TypeSpace& s = v.space();
  const std::size_t A = v.allocations();
  Eigen::MatrixXd lottery(ix(s.profiles()), ix(A));
  Eigen::MatrixXd pay = Eigen::MatrixXd::Zero(ix(s.profiles()), ix(s.agents()));
  for (std::size_t t = 0; t < s.profiles(); ++t) {
    lottery.row(ix(t)) = simplex(rng, A).transpose();
    for (std::size_t i = 0; i < s.agents(); ++i) {
      const std::size_t ti = s.type_of(t, i);
      if (ti == s.bottom(i)) continue;
      const double value = lottery.row(ix(t)).dot(v.table(i).row(ix(ti)));
      pay(ix(t), ix(i)) = uniform(rng, -0.5, 1.0) * value;
    }
  }
  const auto bot = ix(s.all_bottom());
  lottery.row(bot).setZero();
  lottery(bot, ix(v.null_allocation())) = 1.0;
  return Mechanism(s, v.null_allocation(), v.bound(), std::move(lottery), std::move(pay));
}

TypeRestriction restriction(Rng& rng, const TypeSpace& s, double keep) {
  std::bernoulli_distribution coin(keep);
  std::vector<std::vector<std::size_t>> members(s.agents());
  for (std::size_t i = 0; i < s.agents(); ++i) {
    for (std::size_t t = 0; t < s.types(i); ++t) {
      if (t == s.bottom(i) || coin(rng)) members[i].push_back(t);
    }
  }
  return TypeRestriction(s, std::move(members));
}

SingleItemMarket market(Rng& rng, std::size_t agents, std::size_t values, double bound) {
  SingleItemMarket m;
  for (std::size_t i = 0; i < agents; ++i) {
    std::vector<double> vals;
    while (vals.size() < values) {
      const double x = std::round(uniform(rng, 0.0, bound) * 64.0) / 64.0;
      if (x > 0.0 && std::find(vals.begin(), vals.end(), x) == vals.end()) vals.push_back(x);
    }
    std::sort(vals.begin(), vals.end());
    m.values.push_back(std::move(vals));
  }
  return m;
}

PairwiseMRF mrf(Rng& rng, std::size_t max_nodes, std::size_t max_alphabet, double scale) {
  PairwiseMRF out;
  const std::size_t m = uniform_index(rng, 2, std::max<std::size_t>(2, max_nodes));
  for (std::size_t v = 0; v < m; ++v) {
    const std::size_t k = uniform_index(rng, 2, std::max<std::size_t>(2, max_alphabet));
    Eigen::VectorXd psi(ix(k));
    for (Eigen::Index c = 0; c < psi.size(); ++c) psi(c) = uniform(rng, -scale, scale);
    out.node.push_back(std::move(psi));
  }
  std::bernoulli_distribution coin(0.6);
  for (std::size_t u = 0; u < m; ++u) {
    for (std::size_t w = u + 1; w < m; ++w) {
      if (!coin(rng)) continue;
      Eigen::MatrixXd psi(ix(out.alphabet(u)), ix(out.alphabet(w)));
      for (Eigen::Index a = 0; a < psi.rows(); ++a) {
        for (Eigen::Index b = 0; b < psi.cols(); ++b) psi(a, b) = uniform(rng, -scale, scale);
      }
      out.edges.push_back({u, w, std::move(psi)});
    }
  }
  return out;
}

AdditiveInstance near_product_additive(Rng& rng, std::size_t items, std::size_t max_values, double delta) {
  std::vector<std::vector<double>> values;
  std::vector<Eigen::VectorXd> marg;
  std::size_t count = 1;
  for (std::size_t j = 0; j < items; ++j) {
    const std::size_t k = uniform_index(rng, 1, max_values);
    std::vector<double> vals;
    while (vals.size() < k) {
      const double x = std::round(uniform(rng, 0.0, 4.0) * 16.0) / 16.0;
      if (x > 0.0 && std::find(vals.begin(), vals.end(), x) == vals.end()) vals.push_back(x);
    }
    std::sort(vals.begin(), vals.end());
    values.push_back(std::move(vals));
    marg.push_back(simplex(rng, k));
    count *= k;
  }
  Eigen::VectorXd mass(ix(count));
  for (std::size_t c = 0; c < count; ++c) {
    std::size_t rest = c;
    double w = 1.0;
    for (std::size_t j = items; j-- > 0;) {
      const std::size_t k = static_cast<std::size_t>(marg[j].size());
      w *= marg[j](ix(rest % k));
      rest /= k;
    }
    mass(ix(c)) = w;
  }
  AdditiveInstance inst = additive_instance(values, mass / mass.sum());
  if (delta > 0.0 && inst.dist.support().size() >= 2) {
    inst.dist = perturb_within_tv(inst.dist, delta, PerturbMode::same_support, rng());
  }
  return inst;
}

std::vector<Eigen::VectorXd> shift_marginals(Rng& rng, const std::vector<Eigen::VectorXd>& marginals, double eps) {
  std::vector<Eigen::VectorXd> out;
  for (const auto& m : marginals) {
    std::vector<std::size_t> support;
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      if (m(k) > 0.0) support.push_back(static_cast<std::size_t>(k));
    }
    Eigen::VectorXd next = m;
    if (support.size() >= 2 && eps > 0.0) {
      std::shuffle(support.begin(), support.end(), rng);
      const std::size_t split = uniform_index(rng, 1, support.size() - 1);
      double capacity = 0.0;
      for (std::size_t k = 0; k < split; ++k) capacity += m(ix(support[k])) * (1.0 - 1.0 / 1024.0);
      const double moved = std::min(eps, capacity);
      const Eigen::VectorXd share = simplex(rng, support.size() - split);
      for (std::size_t k = 0; k < split; ++k) {
        next(ix(support[k])) -= moved * m(ix(support[k])) * (1.0 - 1.0 / 1024.0) / capacity;
      }
      for (std::size_t k = split; k < support.size(); ++k) next(ix(support[k])) += moved * share(ix(k - split));
      next = next.cwiseMax(0.0);
      next /= next.sum();
    }
    out.push_back(std::move(next));
  }
  return out;
}

}  // namespace robmech::gen
