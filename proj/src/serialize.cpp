#include "robmech/serialize.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

#include "robmech/errors.hpp"

namespace robmech {

namespace {

Eigen::Index ix(std::size_t k) { return static_cast<Eigen::Index>(k); }

struct Line {
  std::size_t number;
  std::vector<std::string> tokens;
};

std::vector<Line> tokenize(std::istream& is) {
  std::vector<Line> out;
  std::string raw;
  std::size_t number = 0;
  while (std::getline(is, raw)) {
    ++number;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream ss(raw);
    Line line{number, {}};
    for (std::string tok; ss >> tok;) line.tokens.push_back(tok);
    if (!line.tokens.empty()) out.push_back(std::move(line));
  }
  return out;
}

double to_double(const std::string& tok, std::size_t line) {
  double x = 0.0;
  const char* end = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(tok.data(), end, x);
  if (ec != std::errc() || ptr != end) throw ParseError("expected a number, got '" + tok + "'", line);
  return x;
}

std::size_t to_index(const std::string& tok, std::size_t line) {
  std::size_t x = 0;
  const char* end = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(tok.data(), end, x);
  if (ec != std::errc() || ptr != end) throw ParseError("expected a nonnegative integer, got '" + tok + "'", line);
  return x;
}

void expect(const Line& l, const char* keyword) {
  if (l.tokens.front() != keyword) {
    throw ParseError(std::string("expected '") + keyword + "', got '" + l.tokens.front() + "'", l.number);
  }
}

std::vector<std::size_t> sizes_after(const Line& l, std::size_t from) {
  std::vector<std::size_t> sizes;
  for (std::size_t k = from; k < l.tokens.size(); ++k) sizes.push_back(to_index(l.tokens[k], l.number));
  if (sizes.empty()) throw ParseError("missing type-list sizes", l.number);
  for (std::size_t s : sizes) {
    if (s == 0) throw ParseError("type lists cannot be empty", l.number);
  }
  return sizes;
}

// Header sizes plus optional "labels" lines; returns the space and the
// index of the first unconsumed line.
std::pair<TypeSpace, std::size_t> read_space(const std::vector<Line>& lines, const char* keyword) {
  if (lines.empty()) throw ParseError(std::string("empty input, expected '") + keyword + "'", 0);
  expect(lines[0], keyword);
  const auto sizes = sizes_after(lines[0], 1);
  std::vector<std::vector<std::string>> labels(sizes.size());
  std::size_t k = 1;
  for (; k < lines.size() && lines[k].tokens.front() == "labels"; ++k) {
    const Line& l = lines[k];
    if (l.tokens.size() < 2) throw ParseError("labels line needs an agent index", l.number);
    const std::size_t agent = to_index(l.tokens[1], l.number);
    if (agent >= sizes.size()) throw ParseError("agent index out of range", l.number);
    labels[agent].assign(l.tokens.begin() + 2, l.tokens.end());
    if (labels[agent].size() != sizes[agent]) throw ParseError("label count does not match the header", l.number);
  }
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (labels[i].empty()) {
      labels[i].push_back(kBottomLabel);
      for (std::size_t t = 1; t < sizes[i]; ++t) labels[i].push_back(std::to_string(t));
    }
  }
  try {
    return {TypeSpace(std::move(labels)), k};
  } catch (const ValidationError& e) {
    throw ParseError(e.what(), lines[0].number);
  }
}

void write_space(std::ostream& os, const char* keyword, const TypeSpace& s) {
  os << keyword;
  for (std::size_t k : s.sizes()) os << ' ' << k;
  os << '\n';
  const TypeSpace generated = TypeSpace::with_sizes(s.sizes());
  if (generated == s) return;
  for (std::size_t i = 0; i < s.agents(); ++i) {
    os << "labels " << i;
    for (const auto& l : s.labels()[i]) os << ' ' << l;
    os << '\n';
  }
}

// Parses "t_0 ... t_{n-1} :" and returns the profile and the token index
// after the colon.
std::pair<std::size_t, std::size_t> read_profile(const Line& l, const TypeSpace& s) {
  const std::size_t n = s.agents();
  if (l.tokens.size() < n + 1 || l.tokens[n] != ":") throw ParseError("expected profile followed by ':'", l.number);
  std::vector<std::size_t> t(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = to_index(l.tokens[i], l.number);
    if (t[i] >= s.types(i)) throw ParseError("type index out of range", l.number);
  }
  return {s.encode(t), n + 1};
}

void write_profile(std::ostream& os, const TypeSpace& s, std::size_t t) {
  for (std::size_t i = 0; i < s.agents(); ++i) os << s.type_of(t, i) << ' ';
  os << ':';
}

template <typename Fn>
auto rethrow_invalid(const Line& l, Fn&& fn) {
  try {
    return fn();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(e.what(), l.number);
  }
}

}  // namespace

std::string format_number(double x) {
  if (x == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::uint64_t prior_hash(const JointDist& d) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (std::size_t k : d.space().sizes()) mix(std::to_string(k) + ",");
  for (std::size_t t = 0; t < d.size(); ++t) mix(format_number(d[t]) + ";");
  return h;
}

void write_dist(std::ostream& os, const JointDist& d) {
  write_space(os, "dist", d.space());
  for (std::size_t t = 0; t < d.size(); ++t) {
    write_profile(os, d.space(), t);
    os << ' ' << format_number(d[t]) << '\n';
  }
}

JointDist read_dist(std::istream& is) {
  const auto lines = tokenize(is);
  auto [space, k] = read_space(lines, "dist");
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(ix(space.profiles()));
  std::vector<bool> seen(space.profiles(), false);
  for (; k < lines.size(); ++k) {
    const Line& l = lines[k];
    const auto [t, at] = read_profile(l, space);
    if (l.tokens.size() != at + 1) throw ParseError("expected exactly one mass after ':'", l.number);
    if (seen[t]) throw ParseError("profile listed twice", l.number);
    seen[t] = true;
    mass(ix(t)) = to_double(l.tokens[at], l.number);
  }
  const std::size_t last = lines.empty() ? 0 : lines.back().number;
  try {
    return JointDist(space, mass);
  } catch (const ValidationError& e) {
    throw ParseError(std::string("invalid distribution: ") + e.what(), last);
  }
}

std::string provenance_comment(const std::string& call, const JointDist& prior) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(prior_hash(prior)));
  return "generated by " + call + "\nprior fnv1a " + buf;
}

void write_mechanism(std::ostream& os, const Mechanism& m, const std::string& comment) {
  std::istringstream cs(comment);
  for (std::string line; std::getline(cs, line);) os << "# " << line << '\n';
  write_space(os, "mechanism", m.space());
  os << "allocations " << m.allocations() << " null " << m.null_allocation() << " bound " << format_number(m.bound())
     << '\n';
  for (std::size_t t = 0; t < m.space().profiles(); ++t) {
    write_profile(os, m.space(), t);
    for (std::size_t a = 0; a < m.allocations(); ++a) os << ' ' << format_number(m.probability(t, a));
    os << " ;";
    for (std::size_t i = 0; i < m.space().agents(); ++i) os << ' ' << format_number(m.payment(t, i));
    os << '\n';
  }
}

Mechanism read_mechanism(std::istream& is) {
  const auto lines = tokenize(is);
  auto [space, k] = read_space(lines, "mechanism");
  if (k >= lines.size()) throw ParseError("missing 'allocations' line", lines.back().number);
  const Line& h = lines[k++];
  expect(h, "allocations");
  if (h.tokens.size() != 6 || h.tokens[2] != "null" || h.tokens[4] != "bound") {
    throw ParseError("expected 'allocations <count> null <index> bound <H>'", h.number);
  }
  const std::size_t A = to_index(h.tokens[1], h.number);
  const std::size_t null = to_index(h.tokens[3], h.number);
  const double bound = to_double(h.tokens[5], h.number);
  const std::size_t n = space.agents();
  Eigen::MatrixXd lottery = Eigen::MatrixXd::Zero(ix(space.profiles()), ix(A));
  Eigen::MatrixXd pay = Eigen::MatrixXd::Zero(ix(space.profiles()), ix(n));
  std::vector<bool> seen(space.profiles(), false);
  for (; k < lines.size(); ++k) {
    const Line& l = lines[k];
    const auto [t, at] = read_profile(l, space);
    if (l.tokens.size() != at + A + 1 + n || l.tokens[at + A] != ";") {
      throw ParseError("expected " + std::to_string(A) + " probabilities, ';' and " + std::to_string(n) + " payments",
                       l.number);
    }
    if (seen[t]) throw ParseError("profile listed twice", l.number);
    seen[t] = true;
    for (std::size_t a = 0; a < A; ++a) lottery(ix(t), ix(a)) = to_double(l.tokens[at + a], l.number);
    for (std::size_t i = 0; i < n; ++i) pay(ix(t), ix(i)) = to_double(l.tokens[at + A + 1 + i], l.number);
  }
  for (std::size_t t = 0; t < space.profiles(); ++t) {
    if (!seen[t]) throw ParseError("profile " + std::to_string(t) + " missing from mechanism", lines.back().number);
  }
  return rethrow_invalid(lines.back(), [&] { return Mechanism(space, null, bound, lottery, pay); });
}

void write_valuations(std::ostream& os, const Valuations& v) {
  write_space(os, "valuations", v.space());
  os << "allocations";
  for (const auto& l : v.allocation_labels()) os << ' ' << l;
  os << " null " << v.null_allocation() << " bound " << format_number(v.bound()) << '\n';
  for (std::size_t i = 0; i < v.space().agents(); ++i) {
    for (std::size_t t = 0; t < v.space().types(i); ++t) {
      for (std::size_t a = 0; a < v.allocations(); ++a) {
        if (v(i, t, a) != 0.0) os << i << ' ' << t << ' ' << a << ' ' << format_number(v(i, t, a)) << '\n';
      }
    }
  }
}

Valuations read_valuations(std::istream& is) {
  const auto lines = tokenize(is);
  auto [space, k] = read_space(lines, "valuations");
  if (k >= lines.size()) throw ParseError("missing 'allocations' line", lines.back().number);
  const Line& h = lines[k++];
  expect(h, "allocations");
  const std::size_t nt = h.tokens.size();
  if (nt < 6 || h.tokens[nt - 4] != "null" || h.tokens[nt - 2] != "bound") {
    throw ParseError("expected 'allocations <labels...> null <index> bound <H>'", h.number);
  }
  std::vector<std::string> labels(h.tokens.begin() + 1, h.tokens.end() - 4);
  const std::size_t null = to_index(h.tokens[nt - 3], h.number);
  const double bound = to_double(h.tokens[nt - 1], h.number);
  std::vector<Eigen::MatrixXd> table;
  for (std::size_t i = 0; i < space.agents(); ++i) {
    table.push_back(Eigen::MatrixXd::Zero(ix(space.types(i)), ix(labels.size())));
  }
  for (; k < lines.size(); ++k) {
    const Line& l = lines[k];
    if (l.tokens.size() != 4) throw ParseError("expected 'agent type allocation value'", l.number);
    const std::size_t i = to_index(l.tokens[0], l.number);
    const std::size_t t = to_index(l.tokens[1], l.number);
    const std::size_t a = to_index(l.tokens[2], l.number);
    if (i >= space.agents() || t >= space.types(i) || a >= labels.size()) {
      throw ParseError("index out of range", l.number);
    }
    table[i](ix(t), ix(a)) = to_double(l.tokens[3], l.number);
  }
  return rethrow_invalid(lines.back(), [&] { return Valuations(space, labels, null, bound, table); });
}

void write_restriction(std::ostream& os, const TypeRestriction& r) {
  os << "restriction " << r.space().agents() << '\n';
  for (std::size_t i = 0; i < r.space().agents(); ++i) {
    os << i << " :";
    for (std::size_t t : r.members(i)) os << ' ' << t;
    os << '\n';
  }
}

TypeRestriction read_restriction(std::istream& is, const TypeSpace& space) {
  const auto lines = tokenize(is);
  if (lines.empty()) throw ParseError("empty input, expected 'restriction'", 0);
  expect(lines[0], "restriction");
  if (lines[0].tokens.size() != 2 || to_index(lines[0].tokens[1], lines[0].number) != space.agents()) {
    throw ParseError("restriction agent count does not match the type space", lines[0].number);
  }
  std::vector<std::vector<std::size_t>> members(space.agents());
  std::vector<bool> seen(space.agents(), false);
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const Line& l = lines[k];
    if (l.tokens.size() < 2 || l.tokens[1] != ":") throw ParseError("expected 'agent : types...'", l.number);
    const std::size_t i = to_index(l.tokens[0], l.number);
    if (i >= space.agents() || seen[i]) throw ParseError("bad or repeated agent index", l.number);
    seen[i] = true;
    for (std::size_t j = 2; j < l.tokens.size(); ++j) members[i].push_back(to_index(l.tokens[j], l.number));
  }
  return rethrow_invalid(lines.back(), [&] { return TypeRestriction(space, members); });
}

void write_mrf(std::ostream& os, const PairwiseMRF& mrf) {
  for (std::size_t v = 0; v < mrf.nodes(); ++v) {
    os << "node " << mrf.alphabet(v);
    for (Eigen::Index c = 0; c < mrf.node[v].size(); ++c) os << ' ' << format_number(mrf.node[v](c));
    os << '\n';
  }
  for (const auto& e : mrf.edges) {
    os << "edge " << e.u << ' ' << e.w;
    for (Eigen::Index a = 0; a < e.psi.rows(); ++a) {
      for (Eigen::Index b = 0; b < e.psi.cols(); ++b) os << ' ' << format_number(e.psi(a, b));
    }
    os << '\n';
  }
}

PairwiseMRF read_mrf(std::istream& is) {
  const auto lines = tokenize(is);
  PairwiseMRF mrf;
  for (const Line& l : lines) {
    std::size_t at = 0;
    if (l.tokens[0] == "node") {
      if (l.tokens.size() < 2) throw ParseError("node line needs an alphabet size", l.number);
      const std::size_t k = to_index(l.tokens[1], l.number);
      if (k == 0) throw ParseError("alphabet must be nonempty", l.number);
      if (l.tokens.size() != k + 2) throw ParseError("expected " + std::to_string(k) + " node potentials", l.number);
      Eigen::VectorXd psi(ix(k));
      for (std::size_t c = 0; c < k; ++c) psi(ix(c)) = to_double(l.tokens[c + 2], l.number);
      mrf.node.push_back(std::move(psi));
      continue;
    }
    if (l.tokens[0] == "edge") at = 1;
    if (l.tokens.size() < at + 2) throw ParseError("edge line needs two endpoints", l.number);
    const std::size_t u = to_index(l.tokens[at], l.number);
    const std::size_t w = to_index(l.tokens[at + 1], l.number);
    if (u >= mrf.nodes() || w >= mrf.nodes()) throw ParseError("edge refers to an undeclared node", l.number);
    if (u == w) throw ParseError("self-loops are not pairwise edges", l.number);
    const std::size_t ku = mrf.alphabet(u);
    const std::size_t kw = mrf.alphabet(w);
    if (l.tokens.size() != at + 2 + ku * kw) {
      throw ParseError("expected " + std::to_string(ku * kw) + " edge potentials", l.number);
    }
    Eigen::MatrixXd psi(ix(ku), ix(kw));
    for (std::size_t a = 0; a < ku; ++a) {
      for (std::size_t b = 0; b < kw; ++b) psi(ix(a), ix(b)) = to_double(l.tokens[at + 2 + a * kw + b], l.number);
    }
    mrf.edges.push_back({u, w, std::move(psi)});
  }
  if (lines.empty()) throw ParseError("MRF has no nodes", 0);
  rethrow_invalid(lines.back(), [&] {
    mrf.validate();
    return 0;
  });
  return mrf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace robmech
