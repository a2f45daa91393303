#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "robmech/joint_dist.hpp"
#include "robmech/mechanism.hpp"
#include "robmech/mrf.hpp"
#include "robmech/transforms.hpp"

namespace robmech {

// Plain-text formats. Blank lines and anything after '#' are ignored when
// reading. Numbers are written in shortest round-trip form.
//
//   dist 3 3                      type-list sizes
//   labels 0 bot lo hi            optional, per agent
//   1 2 : 0.25                    profile : mass (missing profiles have mass 0)
//
//   mechanism 3 3                 type-list sizes
//   allocations 3 null 0 bound 2
//   1 2 : 0 1 0 ; 0.5 0           profile : lottery ; payments
//
//   valuations 3 3
//   allocations none a b null 0 bound 2
//   0 1 1 0.75                    agent type allocation value (missing = 0)
//
//   restriction 2                 number of agents
//   0 : 0 1                       agent : members of T_i^+
//
//   node 2 0 0.1                  alphabet size, then psi_v
//   edge 0 1 0 0.3 0.3 0         endpoints, then psi_e row-major

std::string format_number(double x);

/// 64-bit FNV-1a hash of the formatted masses.
std::uint64_t prior_hash(const JointDist& d);

void write_dist(std::ostream& os, const JointDist& d);
JointDist read_dist(std::istream& is);

/// `comment` lines are emitted as '#' header lines.
void write_mechanism(std::ostream& os, const Mechanism& m, const std::string& comment = {});
Mechanism read_mechanism(std::istream& is);

/// Header naming the generating call and the hash of the design prior.
std::string provenance_comment(const std::string& call, const JointDist& prior);

void write_valuations(std::ostream& os, const Valuations& v);
Valuations read_valuations(std::istream& is);

void write_restriction(std::ostream& os, const TypeRestriction& r);
TypeRestriction read_restriction(std::istream& is, const TypeSpace& space);

void write_mrf(std::ostream& os, const PairwiseMRF& mrf);
PairwiseMRF read_mrf(std::istream& is);

/// Reads a whole file, throwing Error with the path when it cannot be opened.
std::string slurp(const std::string& path);

}  // namespace robmech
