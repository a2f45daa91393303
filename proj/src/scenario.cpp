#include "robmech/scenario.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <limits>
#include <set>
#include <sstream>

#include "robmech/errors.hpp"
#include "robmech/experiments.hpp"
#include "robmech/serialize.hpp"

namespace robmech {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& tok, std::size_t line) {
  double x = 0.0;
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, x);
  if (ec != std::errc() || ptr != end || !std::isfinite(x)) {
    throw ParseError("expected a number, got '" + tok + "'", line);
  }
  return x;
}

std::uint64_t parse_unsigned(const std::string& tok, std::size_t line) {
  std::uint64_t x = 0;
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, x);
  if (ec != std::errc() || ptr != end) throw ParseError("expected a nonnegative integer, got '" + tok + "'", line);
  return x;
}

std::vector<std::string> split(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

struct Range {
  double lo;
  double hi;
  bool lo_open;
  bool hi_open;
  bool integer;
};

std::string describe(const Range& r) {
  std::ostringstream os;
  os << (r.lo_open ? "(" : "[") << r.lo << ", ";
  if (std::isinf(r.hi)) {
    os << "inf)";
  } else {
    os << r.hi << (r.hi_open ? ")" : "]");
  }
  if (r.integer) os << " (integer)";
  return os.str();
}

bool inside(const Range& r, double x) {
  if (r.lo_open ? !(x > r.lo) : !(x >= r.lo)) return false;
  if (r.hi_open ? !(x < r.hi) : !(x <= r.hi)) return false;
  return !r.integer || x == std::floor(x);
}

constexpr double kInf = std::numeric_limits<double>::infinity();

// Numeric parameters; names ending in _grid hold lists with the same range.
const std::map<std::string, Range>& numeric_ranges() {
  static const std::map<std::string, Range> table{
      {"alpha", {0, 1, false, false, false}},     {"delta", {0, 1, false, false, false}},
      {"eps", {0, 1, false, false, false}},       {"q", {0, 1, true, false, false}},
      {"k", {0, 0.5, true, true, false}},         {"value", {0, kInf, true, true, false}},
      {"keep", {0, 1, false, false, false}},      {"scale", {0, 100, false, false, false}},
      {"agents", {1, 4, false, false, true}},     {"types", {2, 6, false, false, true}},
      {"allocations", {2, 6, false, false, true}}, {"items", {1, 4, false, false, true}},
      {"values", {1, 6, false, false, true}},     {"nodes", {1, 8, false, false, true}},
      {"alphabet", {1, 6, false, false, true}},   {"points", {2, 4096, false, false, true}},
      {"pairs", {0, 1e6, false, false, true}},    {"bound", {0, kInf, true, true, false}},
  };
  return table;
}

const std::map<std::string, std::vector<std::string>>& text_choices() {
  static const std::map<std::string, std::vector<std::string>> table{
      {"objective", {"revenue", "welfare", "mixed"}},
      {"ic", {"dsic", "bic"}},
      {"instance", {"random", "mrfgap"}},
  };
  return table;
}

std::string base_name(const std::string& key) {
  const std::string suffix = "_grid";
  if (key.size() > suffix.size() && key.compare(key.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return key.substr(0, key.size() - suffix.size());
  }
  return key;
}

}  // namespace

double Scenario::number(const std::string& key, double fallback) const {
  const auto it = params.find(key);
  if (it == params.end()) return fallback;
  return parse_double(it->second.text, it->second.line);
}

std::vector<double> Scenario::numbers(const std::string& key, const std::vector<double>& fallback) const {
  const auto it = params.find(key);
  if (it == params.end()) return fallback;
  std::vector<double> out;
  for (const auto& tok : split(it->second.text)) out.push_back(parse_double(tok, it->second.line));
  if (out.empty()) throw ParseError("empty list for '" + key + "'", it->second.line);
  return out;
}

std::string Scenario::text(const std::string& key, const std::string& fallback) const {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second.text;
}

std::optional<std::string> Scenario::file(const std::string& key) const {
  const auto it = files.find(key);
  if (it == files.end()) return std::nullopt;
  return it->second.text;
}

Scenario parse_scenario(std::string_view text, const std::string& base_dir) {
  Scenario sc;
  std::string section;
  bool saw_kind = false;
  std::set<std::string> experiment_keys;
  std::size_t number = 0;
  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++number;
    const std::string line = trim(std::string_view(raw).substr(0, raw.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", number);
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section != "experiment" && section != "params" && section != "files") {
        throw ParseError("unknown section [" + section + "]", number);
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", number);
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ParseError("missing key before '='", number);
    if (value.empty()) throw ParseError("missing value for '" + key + "'", number);
    if (section.empty()) throw ParseError("'" + key + "' appears before any section", number);

    if (section == "experiment") {
      if (!experiment_keys.insert(key).second) throw ParseError("duplicate key '" + key + "'", number);
      if (key == "kind") {
        sc.kind = value;
        saw_kind = true;
      } else if (key == "seed") {
        sc.seed = parse_unsigned(value, number);
      } else if (key == "trials") {
        sc.trials = static_cast<std::size_t>(parse_unsigned(value, number));
      } else {
        throw ParseError("unknown experiment key '" + key + "'", number);
      }
    } else {
      auto& target = section == "params" ? sc.params : sc.files;
      if (target.count(key) != 0) throw ParseError("duplicate key '" + key + "'", number);
      std::string stored = value;
      if (section == "files") {
        const std::filesystem::path p(value);
        stored = (p.is_absolute() ? p : std::filesystem::path(base_dir) / p).lexically_normal().string();
      }
      target[key] = {stored, number};
    }
  }
  if (!saw_kind) throw ParseError("missing 'kind' in [experiment]", 0);
  return sc;
}

Scenario load_scenario(const std::string& path) {
  const std::string text = slurp(path);
  const auto dir = std::filesystem::path(path).parent_path();
  Scenario sc = parse_scenario(text, dir.empty() ? "." : dir.string());
  sc.source = path;
  return sc;
}

std::vector<std::string> validate(const Scenario& sc) {
  std::vector<std::string> out;
  const Experiment* ex = find_experiment(sc.kind);
  if (ex == nullptr) {
    out.push_back("unknown experiment kind '" + sc.kind + "' (see 'list')");
    return out;
  }
  auto accepted = [](const std::vector<std::string>& keys, const std::string& k) {
    for (const auto& a : keys) {
      if (a == k) return true;
    }
    return false;
  };
  for (const auto& [key, value] : sc.params) {
    const std::string where = "line " + std::to_string(value.line) + ": ";
    if (!accepted(ex->params, key)) {
      out.push_back(where + "parameter '" + key + "' is not used by experiment '" + sc.kind + "'");
      continue;
    }
    const std::string base = base_name(key);
    if (const auto r = numeric_ranges().find(base); r != numeric_ranges().end()) {
      std::vector<std::string> toks = split(value.text);
      if (base == key && toks.size() != 1) {
        out.push_back(where + "parameter '" + key + "' takes a single number");
        continue;
      }
      for (const auto& tok : toks) {
        double x = 0.0;
        const char* end = tok.data() + tok.size();
        auto [ptr, ec] = std::from_chars(tok.data(), end, x);
        if (ec != std::errc() || ptr != end) {
          out.push_back(where + "parameter '" + key + "' expects numbers, got '" + tok + "'");
        } else if (!inside(r->second, x)) {
          out.push_back(where + "parameter " + base + " = " + tok + " lies outside its range " + describe(r->second));
        }
      }
    } else if (const auto c = text_choices().find(key); c != text_choices().end()) {
      if (!accepted(c->second, value.text)) {
        std::string opts;
        for (const auto& o : c->second) opts += (opts.empty() ? "" : ", ") + o;
        out.push_back(where + "parameter '" + key + "' must be one of " + opts);
      }
    }
  }
  for (const auto& [key, value] : sc.files) {
    const std::string where = "line " + std::to_string(value.line) + ": ";
    if (!accepted(ex->files, key)) {
      out.push_back(where + "file '" + key + "' is not used by experiment '" + sc.kind + "'");
    } else if (!std::filesystem::is_regular_file(value.text)) {
      out.push_back(where + "cannot resolve " + key + " file '" + value.text + "'");
    }
  }
  return out;
}

void require_valid(const Scenario& sc) {
  const auto diags = validate(sc);
  if (diags.empty()) return;
  std::string msg = "invalid scenario";
  if (!sc.source.empty()) msg += " " + sc.source;
  for (const auto& d : diags) msg += "\n  " + d;
  throw ValidationError(msg);
}

}  // namespace robmech
