#pragma once

// Text form of representations and capsules used by the CLI and JSON specs.
//
//   spec  := term ('+' term)*
//   term  := [N 'x'] atom
//   atom  := trivial | regular | irrep:<label> | quotient:<subgroup>
//          | type:<m1>,<m2>,... | filter:<s>[:<atom or (spec)>] | crelu(<atom>)
//
// Subgroups use parse_subgroup syntax, e.g. quotient:C4 or quotient:{e,r^2}.

#include <cctype>
#include <string>
#include <vector>

#include "eqnn/capsule.hpp"
#include "eqnn/error.hpp"
#include "eqnn/irreps.hpp"
#include "eqnn/representation.hpp"

namespace eqnn {

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

/// Splits on `sep` outside parentheses and braces.
inline std::vector<std::string> split_top(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : s) {
    if (c == '(' || c == '{') ++depth;
    if (c == ')' || c == '}') --depth;
    if (depth < 0) throw SpecError("unbalanced brackets in '" + s + "'");
    if (c == sep && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (depth != 0) throw SpecError("unbalanced brackets in '" + s + "'");
  out.push_back(trim(cur));
  return out;
}

inline int parse_count(const std::string& s, const std::string& what) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw SpecError("expected a non-negative integer for " + what + ", got '" + s + "'");
  return std::stoi(s);
}

/// Optional "Nx" prefix.
inline std::pair<int, std::string> split_multiplicity(const std::string& term) {
  std::size_t i = 0;
  while (i < term.size() && std::isdigit(static_cast<unsigned char>(term[i]))) ++i;
  if (i > 0 && i < term.size() && term[i] == 'x') return {std::stoi(term.substr(0, i)), trim(term.substr(i + 1))};
  return {1, term};
}

}  // namespace detail

/// One capsule from its descriptor text.
inline Capsule parse_capsule(const GroupPtr& g, const std::string& text) {
  const std::string t = detail::trim(text);
  if (t == "trivial") return trivial_capsule(g);
  if (t == "regular") return regular_capsule(g);
  if (t.rfind("irrep:", 0) == 0) return irrep_capsule(irrep_table(g), t.substr(6));
  if (t.rfind("quotient:", 0) == 0) return quotient_capsule(g, parse_subgroup(*g, t.substr(9)));
  if (t.rfind("crelu(", 0) == 0 && t.back() == ')') return crelu_capsule(parse_capsule(g, t.substr(6, t.size() - 7)));
  throw SpecError("unknown capsule '" + t + "' (expected trivial, regular, irrep:<label>, quotient:<subgroup> or crelu(...))");
}

/// Fiber type from "2xregular+irrep:E".
inline FiberType parse_fiber(const GroupPtr& g, const std::string& text) {
  FiberType f;
  if (detail::trim(text).empty()) return f;
  for (const auto& term : detail::split_top(text, '+')) {
    auto [n, atom] = detail::split_multiplicity(term);
    if (n > 0) f.entries.push_back({parse_capsule(g, atom), n});
  }
  return f;
}

Representation parse_rep(const GroupPtr& g, const std::string& text);

namespace detail {
inline Representation parse_rep_atom(const GroupPtr& g, const std::string& atom) {
  if (atom.rfind("type:", 0) == 0) {
    const auto table = irrep_table(g);
    std::vector<int> m;
    for (const auto& s : split_top(atom.substr(5), ',')) m.push_back(parse_count(s, "a multiplicity"));
    if (static_cast<int>(m.size()) != table.size())
      throw SpecError("type for " + g->name() + " needs " + std::to_string(table.size()) + " multiplicities, got " +
                      std::to_string(m.size()));
    return rep_of_type(table, type_vector(table, m));
  }
  if (atom.rfind("filter:", 0) == 0) {
    const std::string rest = atom.substr(7);
    const auto colon = rest.find(':');
    const int s = parse_count(rest.substr(0, colon), "a filter size");
    Representation fiber = trivial_rep(g);
    if (colon != std::string::npos) {
      std::string inner = trim(rest.substr(colon + 1));
      if (!inner.empty() && inner.front() == '(' && inner.back() == ')') inner = inner.substr(1, inner.size() - 2);
      fiber = parse_rep(g, inner);
    }
    return filter_space_rep(g, s, fiber);
  }
  return parse_capsule(g, atom).rep;
}
}  // namespace detail

/// Representation from the grammar above; direct sums for '+' and 'Nx'.
inline Representation parse_rep(const GroupPtr& g, const std::string& text) {
  std::vector<Representation> parts;
  for (const auto& term : detail::split_top(text, '+')) {
    if (term.empty()) throw SpecError("empty term in representation '" + text + "'");
    auto [n, atom] = detail::split_multiplicity(term);
    const Representation r = detail::parse_rep_atom(g, atom);
    for (int i = 0; i < n; ++i) parts.push_back(r);
  }
  if (parts.empty()) throw SpecError("empty representation '" + text + "'");
  if (parts.size() == 1) return parts.front();
  return direct_sum(parts, text);
}

}  // namespace eqnn
