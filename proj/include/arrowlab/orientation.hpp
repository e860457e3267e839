#pragma once

// Discrete temporal orientability.
//
// Cells carry a local choice of future lobe; an edge says whether crossing it
// preserves (flip = 0) or reverses (flip = 1) that choice. A global time
// orientation exists iff every cycle crosses an even number of flips.

#include <Eigen/Dense>
#include <algorithm>
#include <cstddef>
#include <deque>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace arrowlab::orientation {

class ParseError : public std::invalid_argument {
 public:
  ParseError(std::size_t line, const std::string& msg)
      : std::invalid_argument("line " + std::to_string(line) + ": " + msg), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Spacetimes split into disconnected pieces have no single arrow to assign.
class ConnectivityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct Edge {
  std::size_t i = 0;
  std::size_t j = 0;
  bool flip = false;
};

struct Complex {
  std::size_t cells = 0;
  std::vector<Edge> edges;

  /// Adds an undirected edge; rejects unknown cells and duplicates.
  void add_edge(std::size_t i, std::size_t j, bool flip) {
    if (i >= cells || j >= cells) throw std::out_of_range("edge references unknown cell");
    const auto key = std::minmax(i, j);
    for (const auto& e : edges) {
      if (std::minmax(e.i, e.j) == key) throw std::invalid_argument("duplicate edge");
    }
    edges.push_back({i, j, flip});
  }

  /// adjacency[v] = (neighbour, flip), neighbours ascending
  std::vector<std::vector<std::pair<std::size_t, bool>>> adjacency() const {
    std::vector<std::vector<std::pair<std::size_t, bool>>> adj(cells);
    for (const auto& e : edges) {
      adj[e.i].emplace_back(e.j, e.flip);
      if (e.j != e.i) adj[e.j].emplace_back(e.i, e.flip);
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());
    return adj;
  }
};

/// Ring of n cells, edge k joins k and (k+1) mod n; `flips` lists flipped edges.
inline Complex ring(std::size_t n, const std::set<std::size_t>& flips = {}) {
  if (n < 3) throw std::invalid_argument("ring needs at least 3 cells");
  if (!flips.empty() && *flips.rbegin() >= n) throw std::out_of_range("flip index out of range");
  Complex c;
  c.cells = n;
  for (std::size_t k = 0; k < n; ++k) c.add_edge(k, (k + 1) % n, flips.count(k) > 0);
  return c;
}

struct GridSpec {
  std::size_t nx = 2;
  std::size_t nt = 2;
  bool periodic_x = false;
  bool periodic_t = false;
  bool flip_x = false;  // wrap-around edges in x reverse the arrow
  bool flip_t = false;  // wrap-around edges in t reverse the arrow
};

/// nx * nt cells, cell (ix, it) has index it * nx + ix.
inline Complex grid(const GridSpec& s) {
  if (s.nx < 1 || s.nt < 1) throw std::invalid_argument("grid dimensions must be positive");
  if ((s.periodic_x && s.nx < 3) || (s.periodic_t && s.nt < 3)) {
    throw std::invalid_argument("periodic grid directions need at least 3 cells");
  }
  if ((s.flip_x && !s.periodic_x) || (s.flip_t && !s.periodic_t)) {
    throw std::invalid_argument("flip flags require the direction to be periodic");
  }
  Complex c;
  c.cells = s.nx * s.nt;
  auto id = [&](std::size_t ix, std::size_t it) { return it * s.nx + ix; };
  for (std::size_t it = 0; it < s.nt; ++it) {
    for (std::size_t ix = 0; ix < s.nx; ++ix) {
      if (ix + 1 < s.nx) c.add_edge(id(ix, it), id(ix + 1, it), false);
      if (it + 1 < s.nt) c.add_edge(id(ix, it), id(ix, it + 1), false);
    }
  }
  // Wrap edges glue the far boundary to the near one; with a flip the gluing
  // is orientation-reversing along the other direction as well (Mobius).
  if (s.periodic_x) {
    for (std::size_t it = 0; it < s.nt; ++it) {
      const std::size_t jt = s.flip_x ? s.nt - 1 - it : it;
      c.add_edge(id(s.nx - 1, it), id(0, jt), s.flip_x);
    }
  }
  if (s.periodic_t) {
    for (std::size_t ix = 0; ix < s.nx; ++ix) {
      const std::size_t jx = s.flip_t ? s.nx - 1 - ix : ix;
      c.add_edge(id(ix, s.nt - 1), id(jx, 0), s.flip_t);
    }
  }
  return c;
}

namespace detail {

inline std::size_t parse_index(const std::string& tok, std::size_t line) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    if (tok.empty() || tok[0] == '-') throw std::invalid_argument("negative");
    v = std::stoull(tok, &pos);
  } catch (const std::exception&) {
    throw ParseError(line, "expected a non-negative integer, got '" + tok + "'");
  }
  if (pos != tok.size()) throw ParseError(line, "expected a non-negative integer, got '" + tok + "'");
  return static_cast<std::size_t>(v);
}

inline bool parse_flag(const std::string& tok, std::string_view key, std::size_t line) {
  const std::string prefix = std::string(key) + "=";
  if (tok.rfind(prefix, 0) != 0) throw ParseError(line, "expected " + prefix + "0|1, got '" + tok + "'");
  const std::string v = tok.substr(prefix.size());
  if (v == "0") return false;
  if (v == "1") return true;
  throw ParseError(line, "expected " + prefix + "0|1, got '" + tok + "'");
}

}  // namespace detail

/// Parses the line format:
///   cell N                     declares cell N (cells must end up 0..n-1)
///   edge I J flip=0|1
///   ring N [flips=a,b,...]
///   grid NX NT [periodic_x=0|1] [periodic_t=0|1] [flip_x=0|1] [flip_t=0|1]
/// `#` starts a comment. ring and grid replace the whole description.
inline Complex build_complex(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t lineno = 0;
  std::set<std::size_t> declared;
  std::vector<std::pair<std::size_t, Edge>> edges;
  std::optional<Complex> generated;
  bool explicit_seen = false;
  while (std::getline(in, raw)) {
    ++lineno;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    std::istringstream ls(raw);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const std::string& kw = tok[0];
    if ((kw == "ring" || kw == "grid") && (generated || explicit_seen)) {
      throw ParseError(lineno, "'" + kw + "' cannot be combined with other cells, edges or generators");
    }
    if ((kw == "cell" || kw == "edge") && generated) {
      throw ParseError(lineno, "'" + kw + "' cannot follow a ring or grid generator");
    }
    if (kw == "cell") {
      if (tok.size() != 2) throw ParseError(lineno, "usage: cell N");
      const auto n = detail::parse_index(tok[1], lineno);
      if (!declared.insert(n).second) throw ParseError(lineno, "duplicate cell " + tok[1]);
      explicit_seen = true;
    } else if (kw == "edge") {
      if (tok.size() != 4) throw ParseError(lineno, "usage: edge I J flip=0|1");
      Edge e{detail::parse_index(tok[1], lineno), detail::parse_index(tok[2], lineno),
             detail::parse_flag(tok[3], "flip", lineno)};
      edges.emplace_back(lineno, e);
      explicit_seen = true;
    } else if (kw == "ring") {
      if (tok.size() < 2 || tok.size() > 3) throw ParseError(lineno, "usage: ring N [flips=a,b,...]");
      const auto n = detail::parse_index(tok[1], lineno);
      std::set<std::size_t> flips;
      if (tok.size() == 3) {
        if (tok[2].rfind("flips=", 0) != 0) throw ParseError(lineno, "expected flips=a,b,...");
        std::istringstream fs(tok[2].substr(6));
        for (std::string f; std::getline(fs, f, ',');) {
          if (f.empty()) continue;
          const auto k = detail::parse_index(f, lineno);
          if (k >= n) throw ParseError(lineno, "flip edge " + f + " outside ring of " + tok[1]);
          if (!flips.insert(k).second) throw ParseError(lineno, "duplicate flip edge " + f);
        }
      }
      try {
        generated = ring(n, flips);
      } catch (const std::exception& e) {
        throw ParseError(lineno, e.what());
      }
    } else if (kw == "grid") {
      if (tok.size() < 3) throw ParseError(lineno, "usage: grid NX NT [periodic_x=0|1] ...");
      GridSpec s;
      s.nx = detail::parse_index(tok[1], lineno);
      s.nt = detail::parse_index(tok[2], lineno);
      std::set<std::string> seen;
      for (std::size_t k = 3; k < tok.size(); ++k) {
        const std::string key = tok[k].substr(0, tok[k].find('='));
        if (!seen.insert(key).second) throw ParseError(lineno, "repeated option " + key);
        if (key == "periodic_x") s.periodic_x = detail::parse_flag(tok[k], key, lineno);
        else if (key == "periodic_t") s.periodic_t = detail::parse_flag(tok[k], key, lineno);
        else if (key == "flip_x") s.flip_x = detail::parse_flag(tok[k], key, lineno);
        else if (key == "flip_t") s.flip_t = detail::parse_flag(tok[k], key, lineno);
        else throw ParseError(lineno, "unknown grid option '" + key + "'");
      }
      try {
        generated = grid(s);
      } catch (const std::exception& e) {
        throw ParseError(lineno, e.what());
      }
    } else {
      throw ParseError(lineno, "unknown directive '" + kw + "'");
    }
  }
  if (generated) return *generated;

  Complex c;
  c.cells = declared.size();
  if (!declared.empty() && *declared.rbegin() != declared.size() - 1) {
    throw ParseError(std::max<std::size_t>(lineno, 1), "cells must be numbered 0.." + std::to_string(declared.size() - 1));
  }
  for (const auto& [ln, e] : edges) {
    if (e.i >= c.cells || e.j >= c.cells) throw ParseError(ln, "edge references an undeclared cell");
    try {
      c.add_edge(e.i, e.j, e.flip);
    } catch (const std::invalid_argument& err) {
      throw ParseError(ln, err.what());
    }
  }
  if (c.cells == 0) throw ParseError(std::max<std::size_t>(lineno, 1), "complex has no cells");
  return c;
}

/// Inverse of build_complex for explicit descriptions.
inline std::string to_text(const Complex& c) {
  std::ostringstream os;
  for (std::size_t i = 0; i < c.cells; ++i) os << "cell " << i << "\n";
  for (const auto& e : c.edges) os << "edge " << e.i << " " << e.j << " flip=" << (e.flip ? 1 : 0) << "\n";
  return os.str();
}

struct Assignment {
  std::vector<int> sign;  // +1 / -1 per cell; empty when inconsistent
  bool consistent = false;
  // Closed walk of cells w0, w1, ..., wk (w0 repeated implicitly) with an odd
  // number of flips.
  std::vector<std::size_t> witness_cycle;
};

/// Cells visited by the shortest odd-flip closed walk through some cell; the
/// start is the smallest index that lies on a shortest one, and neighbours are
/// explored in ascending order. Shortest odd closed walks are simple cycles.
inline std::vector<std::size_t> minimal_odd_cycle(const Complex& c) {
  const auto adj = c.adjacency();
  std::vector<std::size_t> best;
  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  for (std::size_t s = 0; s < c.cells; ++s) {
    // BFS on (cell, parity).
    std::vector<std::size_t> dist(2 * c.cells, none), prev(2 * c.cells, none);
    std::deque<std::size_t> q{2 * s};
    dist[2 * s] = 0;
    while (!q.empty()) {
      const std::size_t st = q.front();
      q.pop_front();
      if (st == 2 * s + 1) break;
      if (!best.empty() && dist[st] + 1 >= best.size()) continue;
      const std::size_t v = st / 2, par = st % 2;
      for (const auto& [w, f] : adj[v]) {
        const std::size_t nt = 2 * w + (par ^ (f ? 1u : 0u));
        if (dist[nt] != none) continue;
        dist[nt] = dist[st] + 1;
        prev[nt] = st;
        q.push_back(nt);
      }
    }
    const std::size_t target = 2 * s + 1;
    if (dist[target] == none) continue;
    if (!best.empty() && dist[target] >= best.size()) continue;
    std::vector<std::size_t> path;
    for (std::size_t st = target; st != 2 * s; st = prev[st]) path.push_back(st / 2);
    path.push_back(s);
    std::reverse(path.begin(), path.end());
    path.pop_back();  // drop the closing repeat of s
    best = path;
  }
  return best;
}

inline bool connected(const Complex& c) {
  if (c.cells == 0) return false;
  const auto adj = c.adjacency();
  std::vector<bool> seen(c.cells, false);
  std::deque<std::size_t> q{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!q.empty()) {
    const auto v = q.front();
    q.pop_front();
    for (const auto& [w, f] : adj[v]) {
      if (!seen[w]) {
        seen[w] = true;
        ++count;
        q.push_back(w);
      }
    }
  }
  return count == c.cells;
}

/// Breadth-first sign propagation from root.
inline Assignment assign_orientation(const Complex& c, std::size_t root, int root_sign = +1) {
  if (root >= c.cells) throw std::out_of_range("root cell does not exist");
  if (root_sign != 1 && root_sign != -1) throw std::invalid_argument("root_sign must be +1 or -1");
  if (!connected(c)) {
    throw ConnectivityError("complex is disconnected: separate pieces cannot share one time orientation");
  }
  const auto adj = c.adjacency();
  Assignment a;
  a.sign.assign(c.cells, 0);
  a.sign[root] = root_sign;
  std::deque<std::size_t> q{root};
  bool ok = true;
  while (!q.empty() && ok) {
    const auto v = q.front();
    q.pop_front();
    for (const auto& [w, f] : adj[v]) {
      const int want = f ? -a.sign[v] : a.sign[v];
      if (a.sign[w] == 0) {
        a.sign[w] = want;
        q.push_back(w);
      } else if (a.sign[w] != want) {
        ok = false;
        break;
      }
    }
  }
  if (ok) {
    a.consistent = true;
    return a;
  }
  a.sign.clear();
  a.witness_cycle = minimal_odd_cycle(c);
  return a;
}

/// Number of flipped edges along the closed walk.
inline std::size_t flip_parity(const Complex& c, const std::vector<std::size_t>& cycle) {
  std::size_t flips = 0;
  for (std::size_t k = 0; k < cycle.size(); ++k) {
    const std::size_t u = cycle[k], v = cycle[(k + 1) % cycle.size()];
    const auto key = std::minmax(u, v);
    bool found = false;
    for (const auto& e : c.edges) {
      if (std::minmax(e.i, e.j) == key) {
        flips += e.flip ? 1 : 0;
        found = true;
        break;
      }
    }
    if (!found) throw std::invalid_argument("cycle uses a missing edge");
  }
  return flips % 2;
}

enum class Lobe { Upper, Lower };

inline std::string_view to_string(Lobe l) { return l == Lobe::Upper ? "upper" : "lower"; }

/// For each cell, the lobe (by sign of the time component) that holds the
/// oriented field vector sign_i * gamma_i; that lobe is C+ and the other C-.
inline std::vector<Lobe> label_cones(const Assignment& a, const std::vector<Eigen::Vector4d>& field) {
  if (!a.consistent) throw std::logic_error("cannot label cones of an inconsistent orientation");
  if (field.size() != a.sign.size()) throw std::invalid_argument("one field vector per cell required");
  std::vector<Lobe> out;
  out.reserve(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    const double t = a.sign[i] * field[i][0];
    if (t == 0.0) throw std::invalid_argument("field vector in cell " + std::to_string(i) + " is not timelike");
    out.push_back(t > 0 ? Lobe::Upper : Lobe::Lower);
  }
  return out;
}

inline nlohmann::json to_json(const Complex& c, const Assignment& a) {
  nlohmann::json j;
  j["cells"] = c.cells;
  j["edges"] = c.edges.size();
  j["consistent"] = a.consistent;
  if (a.consistent) {
    j["signs"] = a.sign;
  } else {
    j["witness_cycle"] = a.witness_cycle;
    j["witness_length"] = a.witness_cycle.size();
  }
  return j;
}

}  // namespace arrowlab::orientation
