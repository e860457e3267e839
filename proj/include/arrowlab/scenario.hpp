#pragma once

// Scenario files: one `[kind]` section of `key = value` lines. Parsing fills
// defaults and validates everything a run needs before anything executes.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "arrowlab/cosmo/measure.hpp"
#include "arrowlab/cosmo/model.hpp"
#include "arrowlab/cosmo/surfaces.hpp"
#include "arrowlab/cosmo/symmetry.hpp"
#include "arrowlab/geometry/scan.hpp"
#include "arrowlab/io.hpp"
#include "arrowlab/ode/reversal.hpp"
#include "arrowlab/orientation.hpp"
#include "arrowlab/parallel.hpp"
#include "arrowlab/pendulum.hpp"
#include "arrowlab/rng.hpp"
#include "arrowlab/taub.hpp"
#include "json.hpp"

namespace arrowlab::scenario {

inline constexpr std::string_view kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kValidation = 2, kRuntime = 3, kIo = 4 };

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> errors)
      : std::runtime_error(join(errors)), errors_(std::move(errors)) {}
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  static std::string join(const std::vector<std::string>& e) {
    std::string s;
    for (const auto& m : e) s += (s.empty() ? "" : "\n") + m;
    return s;
  }
  std::vector<std::string> errors_;
};

enum class Type { Int, Real, Bool, Str, RealList };

inline std::string_view to_string(Type t) {
  switch (t) {
    case Type::Int: return "integer";
    case Type::Real: return "real";
    case Type::Bool: return "boolean";
    case Type::Str: return "string";
    case Type::RealList: return "list of reals";
  }
  return "?";
}

using Value = std::variant<long long, double, bool, std::string, std::vector<double>>;

/// Returns an error message, or nothing when the value is acceptable.
using Check = std::function<std::optional<std::string>(const Value&)>;

struct KeySpec {
  std::string name;
  Type type = Type::Real;
  std::optional<Value> fallback;  // nullopt: required
  Check check;
};

struct Scenario;

struct KindSpec {
  std::string name;
  std::vector<KeySpec> keys;
  // Cross-key checks: (key, message) pairs.
  std::function<std::vector<std::pair<std::string, std::string>>(const Scenario&)> cross;
};

struct Scenario {
  std::string kind;
  std::uint64_t seed = 1;
  std::string out = "arrowlab-out";
  std::map<std::string, Value> params;

  bool operator==(const Scenario&) const = default;

  const Value& at(const std::string& k) const {
    auto it = params.find(k);
    if (it == params.end()) throw std::out_of_range("scenario has no key '" + k + "'");
    return it->second;
  }
  double real(const std::string& k) const { return std::get<double>(at(k)); }
  long long integer(const std::string& k) const { return std::get<long long>(at(k)); }
  bool flag(const std::string& k) const { return std::get<bool>(at(k)); }
  const std::string& str(const std::string& k) const { return std::get<std::string>(at(k)); }
  const std::vector<double>& list(const std::string& k) const { return std::get<std::vector<double>>(at(k)); }
};

namespace detail {

inline Check positive() {
  return [](const Value& v) -> std::optional<std::string> {
    if (std::holds_alternative<double>(v) && !(std::get<double>(v) > 0)) return "must be positive";
    if (std::holds_alternative<long long>(v) && std::get<long long>(v) <= 0) return "must be positive";
    return std::nullopt;
  };
}

inline Check non_negative() {
  return [](const Value& v) -> std::optional<std::string> {
    if (std::holds_alternative<double>(v) && !(std::get<double>(v) >= 0)) return "must be non-negative";
    if (std::holds_alternative<long long>(v) && std::get<long long>(v) < 0) return "must be non-negative";
    return std::nullopt;
  };
}

inline Check at_least(long long n) {
  return [n](const Value& v) -> std::optional<std::string> {
    if (std::get<long long>(v) < n) return "must be at least " + std::to_string(n);
    return std::nullopt;
  };
}

inline Check one_of(std::vector<std::string> options) {
  return [options](const Value& v) -> std::optional<std::string> {
    const auto& s = std::get<std::string>(v);
    if (std::find(options.begin(), options.end(), s) != options.end()) return std::nullopt;
    std::string msg = "must be one of";
    for (const auto& o : options) msg += " " + o;
    return msg;
  };
}

inline Check all_positive() {
  return [](const Value& v) -> std::optional<std::string> {
    for (double x : std::get<std::vector<double>>(v)) {
      if (!(x > 0)) return "entries must be positive";
    }
    return std::nullopt;
  };
}

inline Check interval() {
  return [](const Value& v) -> std::optional<std::string> {
    const auto& x = std::get<std::vector<double>>(v);
    if (x.size() != 2 || !(x[0] < x[1])) return "expected lo, hi with lo < hi";
    return std::nullopt;
  };
}

inline Check tolerance() {
  return [](const Value& v) -> std::optional<std::string> {
    const double t = std::get<double>(v);
    if (!(t > 0) || t > 1e-3) return "must lie in (0, 1e-3]";
    return std::nullopt;
  };
}

inline std::vector<KeySpec> cosmo_keys() {
  return {{"m", Type::Real, 1.0, positive()},
          {"lambda", Type::Real, 0.0, {}},
          {"a_min", Type::Real, 1e-4, positive()},
          {"t_max", Type::Real, 100.0, positive()},
          {"tol", Type::Real, 1e-10, tolerance()}};
}

inline std::vector<KeySpec> concat(std::vector<KeySpec> a, const std::vector<KeySpec>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

using Cross = std::vector<std::pair<std::string, std::string>>;

inline void need_less(Cross& out, const Scenario& s, const std::string& lo, const std::string& hi) {
  if (!(s.real(lo) < s.real(hi))) out.emplace_back(hi, lo + " must be smaller than " + hi);
}

inline std::string topology_text(const std::string& v) {
  std::string t = v;
  std::replace(t.begin(), t.end(), ';', '\n');
  return t;
}

}  // namespace detail

inline const std::vector<KindSpec>& kinds() {
  using namespace detail;
  static const std::vector<KindSpec> specs = [] {
    std::vector<KindSpec> k;
    k.push_back({"pendulum-scan",
                 {{"K", Type::Real, 1.0, positive()},
                  {"n_states", Type::Int, 10000LL, positive()},
                  {"p_max", Type::Real, 3.0, positive()},
                  {"band", Type::Real, 1e-3, non_negative()},
                  {"t_max", Type::Real, 100.0, positive()},
                  {"tol", Type::Real, 1e-10, tolerance()},
                  {"threads", Type::Int, 0LL, non_negative()}},
                 {}});
    k.push_back({"cosmo-symmetry",
                 concat({{"a_dot", Type::Real, std::nullopt, {}},
                         {"phi", Type::Real, std::nullopt, {}},
                         {"phi_dot", Type::Real, std::nullopt, {}},
                         {"window", Type::Real, 5.0, non_negative()},
                         {"grid_points", Type::Int, 201LL, at_least(3)}},
                        cosmo_keys()),
                 [](const Scenario& s) {
                   Cross c;
                   cosmo::Params p;
                   p.m = s.real("m");
                   p.Lambda = s.real("lambda");
                   try {
                     cosmo::solve_constraint_for_a({s.real("a_dot"), s.real("phi"), s.real("phi_dot")}, p);
                   } catch (const std::exception& e) {
                     c.emplace_back("a_dot", e.what());
                   }
                   return c;
                 }});
    k.push_back({"cosmo-measure",
                 concat({{"n_samples", Type::Int, 10000LL, at_least(100)},
                         {"epsilons", Type::RealList, std::vector<double>{0.1, 0.03, 0.01, 3e-3, 1e-3, 3e-4, 1e-4},
                          all_positive()},
                         {"fit_eps_max", Type::Real, 3e-3, positive()},
                         {"box.a_dot", Type::RealList, std::vector<double>{-1.0, 1.0}, interval()},
                         {"box.phi", Type::RealList, std::vector<double>{-2.0, 2.0}, interval()},
                         {"box.phi_dot", Type::RealList, std::vector<double>{-2.0, 2.0}, interval()},
                         {"max_redraws", Type::Int, 1000LL, positive()},
                         {"threads", Type::Int, 0LL, non_negative()}},
                        cosmo_keys()),
                 {}});
    k.push_back({"cosmo-surfaces",
                 concat({{"seed_lo", Type::Real, 0.3, positive()},
                         {"seed_hi", Type::Real, 1.5, positive()},
                         {"n_seeds", Type::Int, 80LL, at_least(2)},
                         {"t_half", Type::Real, 1.0, positive()},
                         {"n_times", Type::Int, 81LL, at_least(2)},
                         {"neighbours", Type::Int, 20LL, at_least(4)},
                         {"ratio_max", Type::Real, 0.05, positive()},
                         {"probe_t", Type::Real, 0.9, positive()},
                         {"probe_seed_margin", Type::Real, 0.03, non_negative()}},
                        cosmo_keys()),
                 [](const Scenario& s) {
                   Cross c;
                   need_less(c, s, "seed_lo", "seed_hi");
                   if (s.real("probe_t") > s.real("t_half")) c.emplace_back("probe_t", "must not exceed t_half");
                   if (2 * s.real("probe_seed_margin") >= s.real("seed_hi") - s.real("seed_lo")) {
                     c.emplace_back("probe_seed_margin", "leaves no seeds to probe");
                   }
                   return c;
                 }});
    k.push_back({"geometry-scan",
                 {{"metric", Type::Str, std::nullopt, one_of({"minkowski", "flat-flrw", "closed-flrw", "scalar-flrw"})},
                  {"power", Type::Real, 2.0 / 3.0, positive()},
                  {"t_lo", Type::Real, 1.0, {}},
                  {"t_hi", Type::Real, 2.0, {}},
                  {"nt", Type::Int, 3LL, positive()},
                  {"x_lo", Type::Real, -0.5, {}},
                  {"x_hi", Type::Real, 0.5, {}},
                  {"nx", Type::Int, 3LL, positive()},
                  {"y_lo", Type::Real, 0.0, {}},
                  {"y_hi", Type::Real, 0.0, {}},
                  {"ny", Type::Int, 1LL, positive()},
                  {"z_lo", Type::Real, 0.0, {}},
                  {"z_hi", Type::Real, 0.0, {}},
                  {"nz", Type::Int, 1LL, positive()},
                  {"h", Type::Real, 1e-3, positive()},
                  {"h_p", Type::Real, 1e-5, positive()},
                  {"conservation_h", Type::Real, 1e-2, positive()},
                  {"lambda", Type::Real, 0.0, {}},
                  {"a_dot", Type::Real, 0.3, {}},
                  {"phi", Type::Real, 1.0, {}},
                  {"phi_dot", Type::Real, 0.5, {}},
                  {"m", Type::Real, 1.0, positive()},
                  {"threads", Type::Int, 0LL, non_negative()}},
                 [](const Scenario& s) {
                   Cross c;
                   if (s.str("metric") == "scalar-flrw") {
                     cosmo::Params p;
                     p.m = s.real("m");
                     p.Lambda = s.real("lambda");
                     try {
                       cosmo::solve_constraint_for_a({s.real("a_dot"), s.real("phi"), s.real("phi_dot")}, p);
                     } catch (const std::exception& e) {
                       c.emplace_back("a_dot", e.what());
                     }
                   }
                   for (const char* ax : {"t", "x", "y", "z"}) {
                     const std::string a(ax);
                     const std::string n = a == "t" ? "nt" : "n" + a;
                     if (s.real(a + "_lo") > s.real(a + "_hi")) c.emplace_back(a + "_hi", a + "_lo must not exceed " + a + "_hi");
                     if (s.integer(n) > 1 && s.real(a + "_lo") == s.real(a + "_hi")) {
                       c.emplace_back(n, "several points need " + a + "_lo < " + a + "_hi");
                     }
                   }
                   if ((s.str("metric") == "flat-flrw" || s.str("metric") == "closed-flrw") && !(s.real("t_lo") > 0)) {
                     c.emplace_back("t_lo", "FLRW scale factor t^power needs t > 0");
                   }
                   return c;
                 }});
    k.push_back({"orientability",
                 {{"topology", Type::Str, std::nullopt, {}},
                  {"root", Type::Int, 0LL, non_negative()},
                  {"root_sign", Type::Int, 1LL,
                   [](const Value& v) -> std::optional<std::string> {
                     const auto x = std::get<long long>(v);
                     if (x != 1 && x != -1) return "must be 1 or -1";
                     return std::nullopt;
                   }}},
                 [](const Scenario& s) {
                   Cross c;
                   try {
                     const auto cx = orientation::build_complex(topology_text(s.str("topology")));
                     if (static_cast<std::size_t>(s.integer("root")) >= cx.cells) {
                       c.emplace_back("root", "no such cell in the topology");
                     }
                   } catch (const std::exception& e) {
                     c.emplace_back("topology", std::string("descriptor ") + e.what());
                   }
                   return c;
                 }});
    k.push_back({"taub-run",
                 {{"u0", Type::Real, 0.0, {}},
                  {"p_u0", Type::Real, 0.0, {}},
                  {"branch", Type::Str, std::string("plus"), one_of({"plus", "minus"})},
                  {"q_span", Type::Real, 20.0,
                   [](const Value& v) -> std::optional<std::string> {
                     if (std::get<double>(v) == 0.0) return "must be non-zero";
                     return std::nullopt;
                   }},
                  {"tol", Type::Real, 1e-10, tolerance()},
                  {"twin", Type::Bool, true, {}}},
                 {}});
    k.push_back({"reversal-check",
                 {{"system", Type::Str, std::nullopt, one_of({"pendulum", "cosmo", "taub"})},
                  {"state", Type::RealList, std::nullopt, {}},
                  {"horizons", Type::RealList, std::vector<double>{10.0, 30.0, 50.0}, all_positive()},
                  {"tol", Type::Real, 1e-10, tolerance()},
                  {"K", Type::Real, 1.0, positive()},
                  {"m", Type::Real, 1.0, positive()},
                  {"lambda", Type::Real, 0.0, {}},
                  {"involution", Type::Str, std::string("even"), one_of({"even", "odd"})},
                  {"branch", Type::Str, std::string("plus"), one_of({"plus", "minus"})}},
                 [](const Scenario& s) {
                   Cross c;
                   const auto& sys = s.str("system");
                   const std::size_t want = sys == "cosmo" ? 3 : 2;
                   if (s.list("state").size() != want) {
                     c.emplace_back("state", sys + " state needs " + std::to_string(want) + " components");
                   } else if (sys == "cosmo") {
                     cosmo::Params p;
                     p.m = s.real("m");
                     p.Lambda = s.real("lambda");
                     const auto& x = s.list("state");
                     try {
                       cosmo::solve_constraint_for_a({x[0], x[1], x[2]}, p);
                     } catch (const std::exception& e) {
                       c.emplace_back("state", e.what());
                     }
                   }
                   return c;
                 }});
    return k;
  }();
  return specs;
}

inline const KindSpec* find_kind(std::string_view name) {
  for (const auto& k : kinds()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::optional<double> to_real(const std::string& s) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<Value> convert(const std::string& raw, Type t) {
  switch (t) {
    case Type::Int: {
      long long v = 0;
      auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
      if (ec != std::errc{} || p != raw.data() + raw.size()) return std::nullopt;
      return Value{v};
    }
    case Type::Real: {
      auto v = to_real(raw);
      if (!v) return std::nullopt;
      return Value{*v};
    }
    case Type::Bool:
      if (raw == "true" || raw == "yes" || raw == "1") return Value{true};
      if (raw == "false" || raw == "no" || raw == "0") return Value{false};
      return std::nullopt;
    case Type::Str:
      if (raw.empty()) return std::nullopt;
      return Value{raw};
    case Type::RealList: {
      std::vector<double> out;
      std::stringstream ss(raw);
      for (std::string item; std::getline(ss, item, ',');) {
        auto v = to_real(trim(item));
        if (!v) return std::nullopt;
        out.push_back(*v);
      }
      if (out.empty()) return std::nullopt;
      return Value{out};
    }
  }
  return std::nullopt;
}

inline std::string render(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, long long>) {
          return std::to_string(x);
        } else if constexpr (std::is_same_v<T, double>) {
          return io::fmt_double(x);
        } else if constexpr (std::is_same_v<T, bool>) {
          return x ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::string>) {
          return x;
        } else {
          std::string s;
          for (double d : x) s += (s.empty() ? "" : ", ") + io::fmt_double(d);
          return s;
        }
      },
      v);
}

inline nlohmann::ordered_json to_json(const Value& v) {
  return std::visit([](const auto& x) { return nlohmann::ordered_json(x); }, v);
}

}  // namespace detail

/// Parses and validates; all problems are collected and thrown together.
inline Scenario parse_scenario(std::string_view text) {
  using detail::trim;
  std::vector<std::string> errors;
  auto err = [&](std::size_t line, const std::string& msg) {
    errors.push_back("line " + std::to_string(line) + ": " + msg);
  };
  Scenario s;
  const KindSpec* spec = nullptr;
  std::size_t header_line = 0;
  std::map<std::string, std::size_t> key_line;
  bool have_seed = false, have_out = false;

  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        err(lineno, "malformed section header");
        continue;
      }
      if (header_line != 0) {
        err(lineno, "only one [section] per scenario");
        continue;
      }
      header_line = lineno;
      s.kind = trim(std::string_view(line).substr(1, line.size() - 2));
      spec = find_kind(s.kind);
      if (!spec) err(lineno, "unknown scenario kind '" + s.kind + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      err(lineno, "expected key = value");
      continue;
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (const auto hash = value.find(" #"); hash != std::string::npos) value = trim(value.substr(0, hash));
    if (header_line == 0) {
      err(lineno, "key '" + key + "' appears before the [section] header");
      continue;
    }
    if (key_line.count(key)) {
      err(lineno, "duplicate key '" + key + "' (first on line " + std::to_string(key_line[key]) + ")");
      continue;
    }
    key_line[key] = lineno;
    if (key == "seed") {
      auto v = detail::convert(value, Type::Int);
      if (!v || std::get<long long>(*v) < 0) {
        err(lineno, "seed: expected a non-negative integer, got '" + value + "'");
      } else {
        s.seed = static_cast<std::uint64_t>(std::get<long long>(*v));
        have_seed = true;
      }
      continue;
    }
    if (key == "out") {
      if (value.empty()) err(lineno, "out: expected a directory");
      s.out = value;
      have_out = true;
      continue;
    }
    if (!spec) continue;
    const auto ks = std::find_if(spec->keys.begin(), spec->keys.end(), [&](const KeySpec& k) { return k.name == key; });
    if (ks == spec->keys.end()) {
      err(lineno, "unknown key '" + key + "' for [" + spec->name + "]");
      continue;
    }
    auto v = detail::convert(value, ks->type);
    if (!v) {
      err(lineno, key + ": expected " + std::string(to_string(ks->type)) + ", got '" + value + "'");
      continue;
    }
    if (ks->check) {
      if (auto m = ks->check(*v)) {
        err(lineno, key + ": " + *m);
        continue;
      }
    }
    s.params[key] = *v;
  }
  (void)have_seed;
  (void)have_out;
  if (header_line == 0) {
    err(std::max<std::size_t>(lineno, 1), "missing [section] header naming the scenario kind");
  }
  if (spec) {
    bool complete = true;
    for (const auto& k : spec->keys) {
      if (s.params.count(k.name)) continue;
      if (key_line.count(k.name)) {
        complete = false;  // present but invalid, already reported
      } else if (k.fallback) {
        s.params[k.name] = *k.fallback;
      } else {
        err(header_line, "missing required key '" + k.name + "' for [" + spec->name + "]");
        complete = false;
      }
    }
    if (complete && errors.empty() && spec->cross) {
      for (const auto& [key, msg] : spec->cross(s)) {
        err(key_line.count(key) ? key_line[key] : header_line, key + ": " + msg);
      }
    }
  }
  if (!errors.empty()) throw ValidationError(errors);
  return s;
}

/// Canonical text with every key written out; parse_scenario(print_scenario(s)) == s.
inline std::string print_scenario(const Scenario& s) {
  const KindSpec* spec = find_kind(s.kind);
  if (!spec) throw std::invalid_argument("unknown scenario kind '" + s.kind + "'");
  std::ostringstream os;
  os << "[" << s.kind << "]\n";
  os << "seed = " << s.seed << "\n";
  os << "out = " << s.out << "\n";
  for (const auto& k : spec->keys) os << k.name << " = " << detail::render(s.at(k.name)) << "\n";
  return os.str();
}

struct RunReport {
  int exit_code = kOk;
  nlohmann::ordered_json summary;
  std::vector<std::string> files;
};

namespace detail {

using json = nlohmann::ordered_json;

inline cosmo::Params cosmo_params(const Scenario& s) {
  cosmo::Params p;
  p.m = s.real("m");
  p.Lambda = s.real("lambda");
  p.a_min = s.real("a_min");
  p.t_max = s.real("t_max");
  p.tol = s.real("tol");
  p.validate();
  return p;
}

inline json cosmo_tolerances(const cosmo::Params& p) {
  return {{"tol", p.tol}, {"step_tolerance", p.tol * p.step_tol_factor}, {"a_min", p.a_min}};
}

/// Collects output files; everything is written atomically.
class Writer {
 public:
  explicit Writer(std::filesystem::path dir) : dir_(std::move(dir)) {}
  void write(const std::string& name, std::string_view content) {
    io::write_atomic(dir_ / name, content);
    files_.push_back(name);
  }
  const std::vector<std::string>& files() const { return files_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> files_;
};

inline json run_pendulum(const Scenario& s, Writer& w) {
  const pendulum::Params p{s.real("K")};
  p.validate();
  const auto n = static_cast<std::size_t>(s.integer("n_states"));
  const double pmax = s.real("p_max"), band = s.real("band") * p.K * p.K;
  struct Row {
    pendulum::State st;
    pendulum::Class analytic, numeric;
    double drift;
    std::size_t redraws;
  };
  std::vector<Row> rows(n);
  pendulum::NumericOptions opt;
  opt.tol = s.real("tol");
  parallel_for(n, static_cast<unsigned>(s.integer("threads")), [&](std::size_t i) {
    SampleStream rng(s.seed, i);
    Row& r = rows[i];
    r.redraws = 0;
    for (;;) {
      r.st = {rng.uniform(-std::numbers::pi, std::numbers::pi), rng.uniform(-pmax, pmax)};
      if (std::abs(pendulum::energy(r.st, p) - pendulum::separatrix_energy(p)) >= band) break;
      if (++r.redraws > 1000) throw std::runtime_error("separatrix band covers the sampling window");
    }
    r.analytic = pendulum::classify_analytic(r.st, p);
    const auto num = pendulum::classify_numeric_detail(r.st, p, s.real("t_max"), opt);
    r.numeric = num.cls;
    r.drift = num.energy_drift;
  });
  io::CsvWriter csv({"theta0", "p0", "energy", "class_analytic", "class_numeric", "agree", "energy_drift"});
  std::size_t agree = 0, redraws = 0;
  double drift = 0;
  std::map<std::string, std::size_t> counts{{"reversible", 0}, {"irreversible", 0}, {"separatrix", 0}, {"undetermined", 0}};
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = rows[i];
    const bool ok = r.analytic == r.numeric;
    agree += ok ? 1 : 0;
    redraws += r.redraws;
    drift = std::max(drift, r.drift);
    ++counts[std::string(pendulum::to_string(r.numeric))];
    csv.row_begin();
    csv.field(r.st.theta).field(r.st.p_theta).field(pendulum::energy(r.st, p));
    csv.field(pendulum::to_string(r.analytic)).field(pendulum::to_string(r.numeric)).field(ok).field(r.drift);
    csv.row_end();
  }
  w.write("states.csv", csv.str());
  json c;
  for (const auto& [k, v] : counts) c[k] = v;
  return {{"tolerances", {{"tol", opt.tol}, {"return_radius", opt.delta}}},
          {"metrics",
           {{"n_states", n},
            {"band_redraws", redraws},
            {"agreement_rate", static_cast<double>(agree) / static_cast<double>(n)},
            {"disagreements", n - agree},
            {"numeric_counts", c},
            {"max_energy_drift", drift}}}};
}

inline std::string cosmo_orbit_csv(const ode::Trajectory<4>& tr, const std::vector<double>& ts) {
  io::CsvWriter csv({"t", "a", "a_dot", "phi", "phi_dot"});
  for (double t : ts) {
    const auto x = tr.at(t);
    csv.row_begin();
    csv.field(t);
    for (double c : x) csv.field(c);
    csv.row_end();
  }
  return csv.str();
}

inline json run_cosmo_symmetry(const Scenario& s, Writer& w) {
  const auto p = cosmo_params(s);
  const cosmo::ReducedPoint r{s.real("a_dot"), s.real("phi"), s.real("phi_dot")};
  const auto rep = cosmo::symmetry_defect(r, p);
  const auto orbit = cosmo::integrate_orbit(r, p);
  const auto& tr = orbit.trajectory;
  std::vector<double> ts;
  double max_residual = 0;
  for (const auto& smp : tr.samples()) {
    ts.push_back(smp.t);
    max_residual = std::max(max_residual, cosmo::constraint_residual(cosmo::State::from(smp.x, smp.t), p));
  }
  w.write("orbit.csv", cosmo_orbit_csv(tr, ts));
  json m{{"defect", rep.defect},
         {"t_S", rep.t_S ? json(*rep.t_S) : json(nullptr)},
         {"kind", cosmo::to_string(rep.kind)},
         {"turning_points", rep.turning_points},
         {"partial", rep.partial},
         {"note", rep.note},
         {"orbit_span", {tr.t_first(), tr.t_last()}},
         {"max_constraint_residual", max_residual}};
  if (rep.t_S && rep.kind != cosmo::SymmetryKind::None) {
    const auto wf = cosmo::waveform_symmetry_check(r, *rep.t_S, rep.kind, s.real("window"), p);
    m["waveform_defect"] = wf.defect;
    m["effective_window"] = wf.effective_window;
    // Uniform grid centred on t_S for mirrored plots.
    const double W = std::min({wf.effective_window, *rep.t_S - tr.t_first(), tr.t_last() - *rep.t_S});
    const auto n = static_cast<std::size_t>(s.integer("grid_points"));
    const std::size_t half = n / 2;
    std::vector<double> grid;
    for (std::size_t k = 0; k <= 2 * half; ++k) {
      const double off = half == 0 ? 0.0 : W * (static_cast<double>(k) - static_cast<double>(half)) / half;
      grid.push_back(std::clamp(*rep.t_S + off, tr.t_first(), tr.t_last()));
    }
    w.write("orbit_centered.csv", cosmo_orbit_csv(tr, grid));
  }
  return {{"tolerances", cosmo_tolerances(p)}, {"metrics", m}};
}

inline json fraction_rows(const std::vector<cosmo::FractionRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) out.push_back({{"epsilon", r.epsilon}, {"fraction", r.fraction}});
  return out;
}

inline json fit_json(const std::vector<cosmo::FractionRow>& rows) {
  try {
    const auto f = cosmo::fit_scaling_exponent(rows);
    return {{"exponent", f.exponent}, {"intercept", f.intercept}, {"r2", f.r2}, {"rows", f.rows}};
  } catch (const cosmo::InsufficientDataError& e) {
    return {{"error", e.what()}};
  }
}

inline json run_cosmo_measure(const Scenario& s, Writer& w) {
  const auto p = cosmo_params(s);
  cosmo::Box box;
  auto iv = [&](const std::string& k) { return cosmo::Interval{s.list(k)[0], s.list(k)[1]}; };
  box.a_dot = iv("box.a_dot");
  box.phi = iv("box.phi");
  box.phi_dot = iv("box.phi_dot");
  cosmo::MeasureOptions opt;
  opt.threads = static_cast<unsigned>(s.integer("threads"));
  opt.max_redraws = static_cast<std::size_t>(s.integer("max_redraws"));
  const auto n = static_cast<std::size_t>(s.integer("n_samples"));
  const auto res = cosmo::estimate_symmetric_fraction(n, box, s.list("epsilons"), s.seed, p, opt);

  io::CsvWriter csv({"index", "a_dot", "phi", "phi_dot", "defect", "kind", "t_S", "turning_points", "partial",
                     "redraws"});
  double min_defect = std::numeric_limits<double>::infinity();
  std::size_t below = 0;
  for (std::size_t i = 0; i < res.samples.size(); ++i) {
    const auto& smp = res.samples[i];
    min_defect = std::min(min_defect, smp.report.defect);
    below += smp.report.defect < 1e-9 ? 1 : 0;
    csv.row_begin();
    csv.field(i).field(smp.point.a_dot).field(smp.point.phi).field(smp.point.phi_dot).field(smp.report.defect);
    csv.field(cosmo::to_string(smp.report.kind));
    csv.field(smp.report.t_S ? *smp.report.t_S : std::numeric_limits<double>::quiet_NaN());
    csv.field(smp.report.turning_points).field(smp.report.partial);
    csv.field(smp.redraws);
    csv.row_end();
  }
  w.write("samples.csv", csv.str());
  io::CsvWriter fr({"epsilon", "fraction"});
  for (const auto& r : res.fractions) {
    fr.row_begin();
    fr.field(r.epsilon).field(r.fraction);
    fr.row_end();
  }
  w.write("fractions.csv", fr.str());

  json fit = fit_json(cosmo::rows_below(res.fractions, s.real("fit_eps_max")));
  fit["eps_max"] = s.real("fit_eps_max");
  return {{"tolerances", cosmo_tolerances(p)},
          {"metrics",
           {{"n_samples", n},
            {"fractions", fraction_rows(res.fractions)},
            {"fit", fit},
            {"full_range_fit", fit_json(res.fractions)},
            {"min_defect", min_defect},
            {"samples_below_1e-9", below},
            {"redraws", res.redraws},
            {"partial_reports", res.partial}}}};
}

inline json run_cosmo_surfaces(const Scenario& s, Writer& w) {
  const auto p = cosmo_params(s);
  cosmo::AxisGrid g;
  const auto ns = static_cast<std::size_t>(s.integer("n_seeds"));
  g.even_seeds = cosmo::AxisGrid::linspace(s.real("seed_lo"), s.real("seed_hi"), ns);
  g.odd_seeds = g.even_seeds;
  g.times = cosmo::AxisGrid::linspace(-s.real("t_half"), s.real("t_half"), static_cast<std::size_t>(s.integer("n_times")));
  const auto surf = cosmo::build_symmetric_surfaces(g, p);
  io::CsvWriter csv({"axis", "seed", "t", "a_dot", "phi", "phi_dot"});
  for (const auto* pts : {&surf.even, &surf.odd}) {
    for (const auto& q : *pts) {
      csv.row_begin();
      csv.field(cosmo::to_string(q.axis)).field(q.seed).field(q.t);
      csv.field(q.point.a_dot).field(q.point.phi).field(q.point.phi_dot);
      csv.row_end();
    }
  }
  w.write("surfaces.csv", csv.str());
  const double margin = s.real("probe_seed_margin");
  const cosmo::ProbeWindow win{s.real("probe_t"), s.real("seed_lo") + margin, s.real("seed_hi") - margin};
  const auto k = static_cast<std::size_t>(s.integer("neighbours"));
  json m;
  std::size_t probes = 0, planar = 0;
  for (const auto& [name, pts] : {std::pair{"even", &surf.even}, std::pair{"odd", &surf.odd}}) {
    const auto d = cosmo::surface_dimension_check(*pts, k, s.real("ratio_max"), win);
    probes += d.probes;
    planar += d.planar;
    m[name] = {{"points", pts->size()},
               {"probes", d.probes},
               {"planar", d.planar},
               {"planar_fraction", d.planar_fraction()},
               {"worst_ratio", d.worst_ratio}};
  }
  m["planar_fraction_min"] = std::min(m["even"]["planar_fraction"].get<double>(), m["odd"]["planar_fraction"].get<double>());
  m["skipped_seeds"] = surf.skipped_seeds;
  m["skipped_points"] = surf.skipped_points;
  return {{"tolerances", cosmo_tolerances(p)}, {"metrics", m}};
}

/// Closed FLRW chart driven by a scalar-field orbit through (a_dot, phi,
/// phi_dot) at t = 0. T is the model's perfect fluid rather than the Einstein
/// tensor of the interpolated a(t).
inline std::vector<geometry::ScanRow> scan_scalar_flrw(const Scenario& s, const geometry::GridSpec& g,
                                                       const geometry::ScanOptions& opt, std::size_t& momentum_pass) {
  cosmo::Params p;
  p.m = s.real("m");
  p.Lambda = s.real("lambda");
  const double margin = 2 * (opt.conservation_h + opt.pseudo.h);
  const double lo = std::min(0.0, g.t.lo - margin), hi = std::max(0.0, g.t.hi + margin);
  const auto orbit = cosmo::integrate_orbit(cosmo::reconstruct({s.real("a_dot"), s.real("phi"), s.real("phi_dot")}, p),
                                            p, lo, hi);
  auto tr = std::make_shared<const ode::Trajectory<4>>(orbit.trajectory);
  if (tr->t_first() > lo || tr->t_last() < hi) {
    throw std::runtime_error("scalar-field orbit reaches the singularity cutoff inside the scan window");
  }
  const auto metric = geometry::closed_flrw([tr](double t) { return tr->at(t)[0]; });
  std::vector<geometry::ScanRow> rows(g.size());
  std::vector<char> mc(rows.size(), 0);
  parallel_for(rows.size(), opt.threads, [&](std::size_t i) {
    auto& r = rows[i];
    r.x = g.point(i);
    const auto st = tr->at(r.x[0]);
    const double rho = cosmo::energy_density(st[2], st[3], p.m), pr = cosmo::pressure(st[2], st[3], p.m);
    const auto b = geometry::curvature(metric, r.x, opt.pseudo.h);
    const geometry::Mat4 T = geometry::perfect_fluid(rho, pr, geometry::Vec4(1, 0, 0, 0), b.g);
    try {
      const auto d = geometry::type_one_decomposition(T, b.g);
      r.type_one = true;
      r.s0 = d.s0;
      r.s = d.s;
      r.dec = geometry::dominant_energy_check(d);
    } catch (const geometry::DecompositionError&) {
      r.dec = {false, std::numeric_limits<double>::quiet_NaN()};
    }
    // Energy-flux row in the comoving orthonormal frame.
    const geometry::Mat4 eta = geometry::eta();
    const geometry::Vec4 row = eta * geometry::perfect_fluid(rho, pr, geometry::Vec4(1, 0, 0, 0), eta) * eta.col(0);
    const auto m = geometry::momentum_condition_check(row);
    mc[i] = m.p0_nonneg && m.causal;
    r.tau_row = geometry::pseudotensor_from_derivatives(b.g, b.dg, T, opt.pseudo.h_p).energy_row();
    r.conservation = geometry::conservation_residual(metric, r.x, opt.conservation_h, opt.pseudo);
  });
  momentum_pass = static_cast<std::size_t>(std::count(mc.begin(), mc.end(), 1));
  return rows;
}

inline json run_geometry_scan(const Scenario& s, Writer& w) {
  const auto& name = s.str("metric");
  geometry::GridSpec g;
  auto axis = [&](const std::string& a, const std::string& n) {
    return geometry::Axis1{s.real(a + "_lo"), s.real(a + "_hi"), static_cast<std::size_t>(s.integer(n))};
  };
  g.t = axis("t", "nt");
  g.x = axis("x", "nx");
  g.y = axis("y", "ny");
  g.z = axis("z", "nz");
  geometry::ScanOptions opt;
  opt.pseudo.h = s.real("h");
  opt.pseudo.h_p = s.real("h_p");
  opt.pseudo.Lambda = s.real("lambda");
  opt.conservation_h = s.real("conservation_h");
  opt.threads = static_cast<unsigned>(s.integer("threads"));
  std::vector<geometry::ScanRow> rows;
  std::optional<std::size_t> momentum_pass;
  if (name == "scalar-flrw") {
    std::size_t mp = 0;
    rows = scan_scalar_flrw(s, g, opt, mp);
    momentum_pass = mp;
  } else {
    const auto metric = name == "minkowski"   ? geometry::minkowski()
                        : name == "flat-flrw" ? geometry::flat_flrw(geometry::power_law(s.real("power")))
                                              : geometry::closed_flrw(geometry::power_law(s.real("power")));
    rows = geometry::scan_grid(metric, g, opt);
  }
  w.write("scan.csv", geometry::scan_csv(rows));
  std::size_t type_one = 0, pass = 0;
  double max_tau = 0, max_cons = 0;
  for (const auto& r : rows) {
    type_one += r.type_one ? 1 : 0;
    pass += r.dec.pass ? 1 : 0;
    max_tau = std::max(max_tau, r.tau_row.cwiseAbs().maxCoeff());
    max_cons = std::max(max_cons, r.conservation);
  }
  const double n = static_cast<double>(std::max<std::size_t>(rows.size(), 1));
  json m{{"points", rows.size()},
         {"type_one", type_one},
         {"dec_pass_rate", static_cast<double>(pass) / n},
         {"max_abs_tau_row", max_tau},
         {"max_conservation_residual", max_cons}};
  if (momentum_pass) m["momentum_condition_pass_rate"] = static_cast<double>(*momentum_pass) / n;
  return {{"tolerances", {{"h", opt.pseudo.h}, {"h_p", opt.pseudo.h_p}, {"conservation_h", opt.conservation_h},
                          {"dec_rel_tol", 1e-12}, {"decomposition_tol", geometry::DecompositionOptions{}.tol}}},
          {"metrics", m}};
}

inline json run_orientability(const Scenario& s, Writer& w) {
  const auto c = orientation::build_complex(topology_text(s.str("topology")));
  const auto a = orientation::assign_orientation(c, static_cast<std::size_t>(s.integer("root")),
                                                 static_cast<int>(s.integer("root_sign")));
  w.write("result.json", orientation::to_json(c, a).dump(2) + "\n");
  json m{{"verdict", a.consistent ? "orientable" : "non-orientable"}, {"cells", c.cells}, {"edges", c.edges.size()}};
  if (!a.consistent) {
    m["witness_cycle"] = a.witness_cycle;
    m["witness_flip_parity"] = orientation::flip_parity(c, a.witness_cycle);
  }
  return {{"tolerances", json::object()}, {"metrics", m}};
}

inline json run_taub(const Scenario& s, Writer& w) {
  const auto sheet = s.str("branch") == "plus" ? taub::Sheet::Plus : taub::Sheet::Minus;
  const double tol = s.real("tol");
  const auto tr = taub::reduced_evolution({s.real("u0"), s.real("p_u0")}, sheet, s.real("q_span"), tol);
  w.write("trajectory.csv", taub::taub_csv(tr));
  double sheet_res = 0;
  for (const auto& st : tr.states()) sheet_res = std::max(sheet_res, taub::sheet_residual(st).residual);
  json m{{"samples", tr.path.size()},
         {"max_sheet_residual", sheet_res},
         {"hamiltonian_drift", taub::hamiltonian_drift(tr)},
         {"evolution_residual", taub::evolution_residual(tr, tol)}};
  if (s.flag("twin")) {
    const auto tw = taub::twin_map(tr);
    w.write("twin.csv", taub::taub_csv(tw));
    double twin_sheet = 0;
    for (const auto& st : tw.states()) twin_sheet = std::max(twin_sheet, taub::sheet_residual(st).residual);
    const auto back = taub::twin_map(tw);
    bool exact = back.sheet == tr.sheet && back.path.size() == tr.path.size();
    for (std::size_t k = 0; exact && k < tr.path.size(); ++k) {
      exact = back.path.samples()[k].t == tr.path.samples()[k].t && back.path.samples()[k].x == tr.path.samples()[k].x;
    }
    m["twin_sheet"] = taub::to_string(tw.sheet);
    m["twin_max_sheet_residual"] = twin_sheet;
    m["twin_evolution_residual"] = taub::evolution_residual(tw, tol);
    m["twin_involution_exact"] = exact;
  }
  return {{"tolerances", {{"tol", tol}, {"residual_check_tol", tol * 1e-2}}}, {"metrics", m}};
}

inline json run_reversal(const Scenario& s, Writer& w) {
  const auto& sys = s.str("system");
  const auto& x = s.list("state");
  ode::ReversalCheckOptions opt;
  opt.tol = s.real("tol");
  io::CsvWriter csv({"T", "defect"});
  double worst = 0;
  json per = json::array();
  for (double T : s.list("horizons")) {
    double d = 0;
    if (sys == "pendulum") {
      d = ode::check_reversal_property(pendulum::Field{s.real("K")}, pendulum::reversal(),
                                       ode::StateVector<2>{0.0, {x[0], x[1]}}, T, opt);
    } else if (sys == "taub") {
      const auto sheet = s.str("branch") == "plus" ? taub::Sheet::Plus : taub::Sheet::Minus;
      d = ode::check_reversal_property(taub::ReducedField{sheet}, ode::ReversalInvolution<2>({1, -1}),
                                       ode::StateVector<2>{0.0, {x[0], x[1]}}, T, opt);
    } else {
      cosmo::Params p;
      p.m = s.real("m");
      p.Lambda = s.real("lambda");
      const auto st = cosmo::reconstruct({x[0], x[1], x[2]}, p);
      const auto R = s.str("involution") == "even" ? cosmo::reversal() : cosmo::odd_reversal();
      d = ode::check_reversal_property(cosmo::field(p), R, ode::StateVector<4>{0.0, st.vec()}, T, opt);
    }
    worst = std::max(worst, d);
    per.push_back({{"T", T}, {"defect", d}});
    csv.row_begin();
    csv.field(T).field(d);
    csv.row_end();
  }
  w.write("reversal.csv", csv.str());
  return {{"tolerances", {{"tol", opt.tol}, {"integration_tol", opt.tol * opt.safety}}},
          {"metrics", {{"max_defect", worst}, {"horizons", per}}}};
}

}  // namespace detail

/// Scenario echo without the output location, so runs into different
/// directories produce identical summaries.
inline nlohmann::ordered_json echo(const Scenario& s) {
  nlohmann::ordered_json e;
  e["kind"] = s.kind;
  e["seed"] = s.seed;
  const KindSpec* spec = find_kind(s.kind);
  if (spec) {
    for (const auto& k : spec->keys) e[k.name] = detail::to_json(s.at(k.name));
  }
  return e;
}

/// Runs a parsed scenario into out_dir. Writes the data files and then
/// summary.json; runtime failures are recorded in the summary.
inline RunReport run_scenario(const Scenario& s, const std::filesystem::path& out_dir) {
  using detail::json;
  detail::Writer w(out_dir);
  RunReport rep;
  json body;
  try {
    if (s.kind == "pendulum-scan") body = detail::run_pendulum(s, w);
    else if (s.kind == "cosmo-symmetry") body = detail::run_cosmo_symmetry(s, w);
    else if (s.kind == "cosmo-measure") body = detail::run_cosmo_measure(s, w);
    else if (s.kind == "cosmo-surfaces") body = detail::run_cosmo_surfaces(s, w);
    else if (s.kind == "geometry-scan") body = detail::run_geometry_scan(s, w);
    else if (s.kind == "orientability") body = detail::run_orientability(s, w);
    else if (s.kind == "taub-run") body = detail::run_taub(s, w);
    else if (s.kind == "reversal-check") body = detail::run_reversal(s, w);
    else throw ValidationError({"unknown scenario kind '" + s.kind + "'"});
  } catch (const io::IoError& e) {
    rep.exit_code = kIo;
    rep.summary = {{"status", "io_error"}, {"code", kIo}, {"error", e.what()}};
    return rep;
  } catch (const ValidationError& e) {
    rep.exit_code = kValidation;
    rep.summary = {{"status", "validation_error"}, {"code", kValidation}, {"error", e.what()}};
    return rep;
  } catch (const std::exception& e) {
    rep.exit_code = kRuntime;
    body = {{"status", "runtime_error"}, {"code", kRuntime}, {"error", e.what()}};
  }
  json summary;
  summary["arrowlab_version"] = kVersion;
  summary["scenario"] = echo(s);
  summary["status"] = rep.exit_code == kOk ? "ok" : "runtime_error";
  for (auto it = body.begin(); it != body.end(); ++it) {
    if (it.key() != "status") summary[it.key()] = it.value();
  }
  summary["files"] = w.files();
  try {
    io::write_atomic(out_dir / "summary.json", summary.dump(2) + "\n");
  } catch (const io::IoError& e) {
    rep.exit_code = kIo;
    summary["status"] = "io_error";
    summary["error"] = e.what();
  }
  rep.summary = summary;
  rep.files = w.files();
  rep.files.push_back("summary.json");
  return rep;
}

/// Missing or unreadable run output.
class PlotdataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw PlotdataError("column '" + name + "' missing");
    return static_cast<std::size_t>(it - header.begin());
  }
  double num(std::size_t r, const std::string& name) const {
    const auto& cell = rows[r][col(name)];
    if (cell == "nan" || cell == "-nan") return std::numeric_limits<double>::quiet_NaN();
    if (cell == "inf") return std::numeric_limits<double>::infinity();
    auto v = to_real(cell);
    if (!v) throw PlotdataError("non-numeric cell '" + cell + "' in column " + name);
    return *v;
  }
};

inline Table read_csv(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw PlotdataError("missing input " + path.string());
  std::istringstream in(io::read_file(path));
  Table t;
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> out;
    std::stringstream ss(l);
    for (std::string c; std::getline(ss, c, ',');) out.push_back(c);
    return out;
  };
  if (!std::getline(in, line)) throw PlotdataError("empty file " + path.string());
  t.header = split(line);
  while (std::getline(in, line)) {
    if (!line.empty()) t.rows.push_back(split(line));
  }
  return t;
}

}  // namespace detail

/// Derives plot-ready CSV files under <run_dir>/plot from a finished run.
/// Returns the written file names.
inline std::vector<std::string> export_plotdata(const std::filesystem::path& run_dir) {
  namespace fs = std::filesystem;
  const fs::path sp = run_dir / "summary.json";
  if (!fs::exists(sp)) throw PlotdataError("no summary.json in " + run_dir.string());
  nlohmann::json summary;
  try {
    summary = nlohmann::json::parse(io::read_file(sp));
  } catch (const nlohmann::json::exception& e) {
    throw PlotdataError(std::string("unreadable summary.json: ") + e.what());
  }
  if (summary.value("status", "") != "ok") throw PlotdataError("run did not complete successfully");
  const std::string kind = summary["scenario"]["kind"].get<std::string>();
  detail::Writer w(run_dir / "plot");

  if (kind == "cosmo-symmetry") {
    const auto orbit = detail::read_csv(run_dir / "orbit.csv");
    io::CsvWriter at({"t", "a"}), phase({"a", "a_dot"});
    for (std::size_t r = 0; r < orbit.rows.size(); ++r) {
      at.row_begin();
      at.field(orbit.num(r, "t")).field(orbit.num(r, "a"));
      at.row_end();
      phase.row_begin();
      phase.field(orbit.num(r, "a")).field(orbit.num(r, "a_dot"));
      phase.row_end();
    }
    w.write("a_of_t.csv", at.str());
    w.write("phase_portrait.csv", phase.str());
    if (fs::exists(run_dir / "orbit_centered.csv")) {
      const auto c = detail::read_csv(run_dir / "orbit_centered.csv");
      const std::size_t n = c.rows.size();
      const double t_S = c.num(n / 2, "t");
      io::CsvWriter mir({"s", "a_before", "a_after", "difference"});
      for (std::size_t k = 0; k <= n / 2; ++k) {
        const double before = c.num(n / 2 - k, "a"), after = c.num(n / 2 + k, "a");
        mir.row_begin();
        mir.field(c.num(n / 2 + k, "t") - t_S).field(before).field(after).field(after - before);
        mir.row_end();
      }
      w.write("a_mirrored.csv", mir.str());
    }
  } else if (kind == "cosmo-measure") {
    const auto fr = detail::read_csv(run_dir / "fractions.csv");
    std::vector<std::pair<double, double>> rows;
    for (std::size_t r = 0; r < fr.rows.size(); ++r) rows.emplace_back(fr.num(r, "epsilon"), fr.num(r, "fraction"));
    std::sort(rows.begin(), rows.end());
    io::CsvWriter ll({"epsilon", "fraction", "log10_epsilon", "log10_fraction"});
    for (const auto& [e, f] : rows) {
      ll.row_begin();
      ll.field(e).field(f).field(std::log10(e)).field(f > 0 ? std::log10(f) : -std::numeric_limits<double>::infinity());
      ll.row_end();
    }
    w.write("fraction_vs_epsilon.csv", ll.str());
    const auto smp = detail::read_csv(run_dir / "samples.csv");
    // Half-decade bins of log10(defect) from 1e-12 to 10; out-of-range
    // defects go to the end bins.
    constexpr int lo = -24, hi = 2;  // in units of 0.5 decades
    std::vector<std::size_t> counts(hi - lo, 0);
    for (std::size_t r = 0; r < smp.rows.size(); ++r) {
      const double d = smp.num(r, "defect");
      int b = d > 0 && std::isfinite(d) ? static_cast<int>(std::floor(2 * std::log10(d))) : (d > 0 ? hi - 1 : lo);
      b = std::clamp(b, lo, hi - 1);
      ++counts[static_cast<std::size_t>(b - lo)];
    }
    io::CsvWriter hist({"log10_defect_lo", "log10_defect_hi", "count"});
    for (int b = lo; b < hi; ++b) {
      hist.row_begin();
      hist.field(0.5 * b).field(0.5 * (b + 1)).field(counts[static_cast<std::size_t>(b - lo)]);
      hist.row_end();
    }
    w.write("defect_histogram.csv", hist.str());
  } else if (kind == "pendulum-scan") {
    const auto st = detail::read_csv(run_dir / "states.csv");
    std::map<std::string, std::size_t> counts;
    io::CsvWriter phase({"theta", "p_theta", "class"});
    const auto cc = st.col("class_numeric");
    for (std::size_t r = 0; r < st.rows.size(); ++r) {
      ++counts[st.rows[r][cc]];
      phase.row_begin();
      phase.field(st.num(r, "theta0")).field(st.num(r, "p0")).field(st.rows[r][cc]);
      phase.row_end();
    }
    io::CsvWriter cnt({"class", "count"});
    for (const auto& [k, v] : counts) {
      cnt.row_begin();
      cnt.field(k).field(v);
      cnt.row_end();
    }
    w.write("phase_portrait.csv", phase.str());
    w.write("class_counts.csv", cnt.str());
  } else if (kind == "taub-run") {
    io::CsvWriter ph({"u", "p_u", "branch"});
    for (const char* f : {"trajectory.csv", "twin.csv"}) {
      if (!fs::exists(run_dir / f)) continue;
      const auto t = detail::read_csv(run_dir / f);
      const auto bc = t.col("branch");
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        ph.row_begin();
        ph.field(t.num(r, "u")).field(t.num(r, "p_u")).field(t.rows[r][bc]);
        ph.row_end();
      }
    }
    w.write("phase_portrait.csv", ph.str());
  } else if (kind == "geometry-scan") {
    const auto t = detail::read_csv(run_dir / "scan.csv");
    io::CsvWriter fl({"t", "x", "y", "z", "tau00", "flux_norm"});
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      fl.row_begin();
      for (const char* c : {"t", "x", "y", "z", "tau00"}) fl.field(t.num(r, c));
      fl.field(std::hypot(t.num(r, "tau0x"), t.num(r, "tau0y"), t.num(r, "tau0z")));
      fl.row_end();
    }
    w.write("energy_flux.csv", fl.str());
  } else if (kind == "cosmo-surfaces") {
    const auto t = detail::read_csv(run_dir / "surfaces.csv");
    const auto ac = t.col("axis");
    io::CsvWriter even({"a_dot", "phi", "phi_dot"}), odd({"a_dot", "phi", "phi_dot"});
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      auto& dst = t.rows[r][ac] == "even" ? even : odd;
      dst.row_begin();
      dst.field(t.num(r, "a_dot")).field(t.num(r, "phi")).field(t.num(r, "phi_dot"));
      dst.row_end();
    }
    w.write("surface_even.csv", even.str());
    w.write("surface_odd.csv", odd.str());
  } else if (kind == "reversal-check") {
    const auto t = detail::read_csv(run_dir / "reversal.csv");
    io::CsvWriter d({"T", "log10_defect"});
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      d.row_begin();
      d.field(t.num(r, "T")).field(std::log10(t.num(r, "defect")));
      d.row_end();
    }
    w.write("defect_vs_horizon.csv", d.str());
  } else if (kind == "orientability") {
    const nlohmann::json res = nlohmann::json::parse(io::read_file(run_dir / "result.json"));
    io::CsvWriter c({"cell", "sign", "in_witness"});
    const std::size_t cells = res["cells"].get<std::size_t>();
    std::vector<int> in_w(cells, 0);
    if (res.contains("witness_cycle")) {
      for (const auto& v : res["witness_cycle"]) in_w[v.get<std::size_t>()] = 1;
    }
    for (std::size_t i = 0; i < cells; ++i) {
      c.row_begin();
      c.field(i).field(res.contains("signs") ? res["signs"][i].get<int>() : 0).field(in_w[i]);
      c.row_end();
    }
    w.write("cells.csv", c.str());
  } else {
    throw PlotdataError("no plot data defined for kind '" + kind + "'");
  }
  return w.files();
}

}  // namespace arrowlab::scenario
