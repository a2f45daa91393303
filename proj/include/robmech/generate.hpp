#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "robmech/joint_dist.hpp"
#include "robmech/mechanism.hpp"
#include "robmech/mrf.hpp"
#include "robmech/synth.hpp"
#include "robmech/transforms.hpp"

// Seeded random instances. Every generator draws only from the engine it
// is given, so a seed fixes the instance.
namespace robmech::gen {

using Rng = std::mt19937_64;

std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi);
double uniform(Rng& rng, double lo, double hi);

/// n agents with type-list sizes in [2, max_types] (non-participation included).
TypeSpace space(Rng& rng, std::size_t agents, std::size_t max_types);

/// Random weights on profiles where nobody is the non-participation type.
JointDist participating_dist(Rng& rng, const TypeSpace& s);
/// Random weights on every profile.
JointDist any_dist(Rng& rng, const TypeSpace& s);
/// Random probability vector of length k (all entries positive).
Eigen::VectorXd simplex(Rng& rng, std::size_t k);
/// Marginals with zero mass on non-participation.
std::vector<Eigen::VectorXd> participating_marginals(Rng& rng, const TypeSpace& s);

/// Allocation 0 is null; other allocations get values in [0, H] for every
/// non-bottom type of every agent.
Valuations valuations(Rng& rng, const TypeSpace& s, std::size_t allocations, double bound);
/// Allocation 0 is null and allocation 1 + i is valued only by agent i, so
/// every allocation has a single-agent counterpart.
Valuations owned_valuations(Rng& rng, const TypeSpace& s, double bound);

/// Ex-post IR mechanism with random lotteries; payments are a random
/// fraction (possibly negative) of the realized value.
Mechanism ir_mechanism(Rng& rng, const Valuations& v);

/// Random restriction keeping non-participation and each other type with
/// probability `keep`.
TypeRestriction restriction(Rng& rng, const TypeSpace& s, double keep);

/// Single-item market with distinct values in (0, H].
SingleItemMarket market(Rng& rng, std::size_t agents, std::size_t values, double bound);

/// Random pairwise MRF; potentials uniform in [-scale, scale].
PairwiseMRF mrf(Rng& rng, std::size_t max_nodes, std::size_t max_alphabet, double scale);

/// Single-agent additive instance: product of random marginals, then moved
/// within TV `delta` on the same support.
AdditiveInstance near_product_additive(Rng& rng, std::size_t items, std::size_t max_values, double delta);

/// Moves every marginal by exactly `eps` in TV (or less when impossible),
/// keeping zero-mass entries at zero.
std::vector<Eigen::VectorXd> shift_marginals(Rng& rng, const std::vector<Eigen::VectorXd>& marginals, double eps);

}  // namespace robmech::gen
