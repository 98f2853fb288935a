#pragma once

// Exact arithmetic for stabilizer groups H and semidirect products Z^n x| H.
//
// A stabilizer group is realised by its integer point maps on Z^n. Elements are
// enumerated by breadth-first closure from the generator matrices, then put in
// a canonical order (identity first) with labels derived from the matrices:
//   C4 / D4 : e, r, r^2, r^3, m, mr, mr^2, mr^3   (m^a r^b)
//   S_n     : cycle notation of sigma, where (sigma.x)_i = x_sigma(i)
// The group product is the matrix product of the point maps.

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "eqnn/error.hpp"

namespace eqnn {

using IntVec = std::vector<std::int64_t>;

namespace detail {

inline std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw OverflowError("integer overflow in translation arithmetic");
  return r;
}

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw OverflowError("integer overflow in translation arithmetic");
  return r;
}

}  // namespace detail

/// Dense square integer matrix, row-major.
struct IntMatrix {
  int n = 0;
  std::vector<std::int64_t> a;

  IntMatrix() = default;
  explicit IntMatrix(int size) : n(size), a(static_cast<std::size_t>(size) * size, 0) {}
  IntMatrix(int size, std::initializer_list<std::int64_t> rows) : n(size), a(rows) {
    if (a.size() != static_cast<std::size_t>(size) * size) throw ShapeError("IntMatrix: wrong entry count");
  }

  static IntMatrix identity(int size) {
    IntMatrix m(size);
    for (int i = 0; i < size; ++i) m(i, i) = 1;
    return m;
  }

  std::int64_t operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
  std::int64_t& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }

  IntVec apply(const IntVec& x) const {
    if (static_cast<int>(x.size()) != n) throw ContextError("IntMatrix::apply: dimension mismatch");
    IntVec y(n, 0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if ((*this)(i, j) != 0) y[i] = detail::checked_add(y[i], detail::checked_mul((*this)(i, j), x[j]));
    return y;
  }

  friend IntMatrix operator*(const IntMatrix& l, const IntMatrix& r) {
    if (l.n != r.n) throw ContextError("IntMatrix product: dimension mismatch");
    IntMatrix out(l.n);
    for (int i = 0; i < l.n; ++i)
      for (int k = 0; k < l.n; ++k) {
        const std::int64_t lik = l(i, k);
        if (lik == 0) continue;
        for (int j = 0; j < l.n; ++j)
          out(i, j) = detail::checked_add(out(i, j), detail::checked_mul(lik, r(k, j)));
      }
    return out;
  }

  friend bool operator==(const IntMatrix&, const IntMatrix&) = default;
  friend auto operator<=>(const IntMatrix&, const IntMatrix&) = default;
};

/// Action of the stabilizer on grid points: one invertible integer matrix per element.
struct GridAction {
  int n = 0;
  std::vector<IntMatrix> point_maps;

  IntVec act(int h, const IntVec& x) const { return point_maps.at(h).apply(x); }
};

class StabilizerGroup {
 public:
  /// `elements` must already be in canonical order with the identity first and
  /// closed under multiplication; tables are derived from matrix products.
  StabilizerGroup(std::string name, std::vector<IntMatrix> elements, std::vector<std::string> labels,
                  std::vector<int> generators)
      : name_(std::move(name)), labels_(std::move(labels)), generators_(std::move(generators)) {
    const int order = static_cast<int>(elements.size());
    if (order == 0) throw Error("StabilizerGroup: empty element list");
    if (static_cast<int>(labels_.size()) != order) throw Error("StabilizerGroup: label count mismatch");
    action_.n = elements.front().n;
    std::map<IntMatrix, int> lookup;
    for (int i = 0; i < order; ++i) lookup.emplace(elements[i], i);
    if (static_cast<int>(lookup.size()) != order) throw Error("StabilizerGroup: duplicate elements");
    mul_.assign(order, std::vector<int>(order, -1));
    for (int i = 0; i < order; ++i)
      for (int j = 0; j < order; ++j) {
        auto it = lookup.find(elements[i] * elements[j]);
        if (it == lookup.end()) throw Error("StabilizerGroup: element set not closed under multiplication");
        mul_[i][j] = it->second;
      }
    inv_.assign(order, -1);
    for (int i = 0; i < order; ++i)
      for (int j = 0; j < order; ++j)
        if (mul_[j][i] == 0) inv_[i] = j;
    action_.point_maps = std::move(elements);
    for (int i = 0; i < order; ++i) label_index_.emplace(labels_[i], i);
    validate();
  }

  const std::string& name() const { return name_; }
  int order() const { return static_cast<int>(mul_.size()); }
  int identity() const { return 0; }
  int mul(int a, int b) const { return mul_[a][b]; }
  int inv(int a) const { return inv_[a]; }
  const std::vector<std::vector<int>>& mul_table() const { return mul_; }
  const std::vector<int>& inv_table() const { return inv_; }
  const std::vector<int>& generators() const { return generators_; }
  const std::vector<std::string>& element_labels() const { return labels_; }
  const std::string& label(int a) const { return labels_.at(a); }
  const GridAction& action() const { return action_; }
  /// Spatial dimension n of the grid Z^n acted on.
  int dim() const { return action_.n; }

  int index_of(std::string_view label) const {
    auto it = label_index_.find(std::string(label));
    if (it == label_index_.end()) throw Error("group " + name_ + " has no element labelled '" + std::string(label) + "'");
    return it->second;
  }

  /// Latin square, identity, inverse and (for order <= 48) associativity checks.
  void validate() const {
    const int n = order();
    if (!(action_.point_maps[0] == IntMatrix::identity(action_.n)))
      throw Error("StabilizerGroup: element 0 must be the identity");
    for (int i = 0; i < n; ++i) {
      std::vector<char> row(n, 0), col(n, 0);
      for (int j = 0; j < n; ++j) {
        const int r = mul_[i][j], c = mul_[j][i];
        if (r < 0 || c < 0 || row[r] || col[c]) throw Error("StabilizerGroup: multiplication table is not a Latin square");
        row[r] = col[c] = 1;
      }
      if (inv_[i] < 0 || mul_[inv_[i]][i] != 0 || mul_[i][inv_[i]] != 0) throw Error("StabilizerGroup: missing inverse");
    }
    if (n <= 48)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          for (int c = 0; c < n; ++c)
            if (mul_[mul_[a][b]][c] != mul_[a][mul_[b][c]]) throw Error("StabilizerGroup: not associative");
  }

 private:
  std::string name_;
  std::vector<std::string> labels_;
  std::vector<int> generators_;
  std::vector<std::vector<int>> mul_;
  std::vector<int> inv_;
  GridAction action_;
  std::map<std::string, int, std::less<>> label_index_;
};

using GroupPtr = std::shared_ptr<const StabilizerGroup>;

namespace detail {

/// Breadth-first closure of the generator matrices (right multiplication).
inline std::vector<IntMatrix> close_under_products(const std::vector<IntMatrix>& gens, int n) {
  std::vector<IntMatrix> elems{IntMatrix::identity(n)};
  std::set<IntMatrix> seen{elems.front()};
  std::queue<IntMatrix> frontier;
  frontier.push(elems.front());
  while (!frontier.empty()) {
    IntMatrix cur = frontier.front();
    frontier.pop();
    for (const auto& g : gens) {
      IntMatrix next = cur * g;
      if (seen.insert(next).second) {
        elems.push_back(next);
        frontier.push(next);
      }
    }
  }
  return elems;
}

/// sigma as 0-based image list, from a point map with (Px)_i = x_sigma(i).
inline std::vector<int> perm_of(const IntMatrix& p) {
  std::vector<int> sigma(p.n, -1);
  for (int i = 0; i < p.n; ++i)
    for (int j = 0; j < p.n; ++j)
      if (p(i, j) == 1) sigma[i] = j;
  return sigma;
}

inline IntMatrix point_map_of(const std::vector<int>& sigma) {
  const int n = static_cast<int>(sigma.size());
  IntMatrix p(n);
  for (int i = 0; i < n; ++i) p(i, sigma[i]) = 1;
  return p;
}

inline std::string cycle_label(const std::vector<int>& sigma, int* moved_minus_cycles = nullptr) {
  const int n = static_cast<int>(sigma.size());
  std::vector<char> seen(n, 0);
  std::string out;
  int cycles = 0;
  for (int i = 0; i < n; ++i) {
    if (seen[i]) continue;
    ++cycles;
    std::string cyc;
    int j = i;
    int len = 0;
    while (!seen[j]) {
      seen[j] = 1;
      cyc += std::to_string(j + 1);
      j = sigma[j];
      ++len;
    }
    if (len > 1) out += "(" + cyc + ")";
  }
  if (moved_minus_cycles) *moved_minus_cycles = n - cycles;
  return out.empty() ? "e" : out;
}

inline std::string dihedral_label(int m, int r) {
  std::string s = m ? "m" : "";
  if (r == 1) s += "r";
  if (r > 1) s += "r^" + std::to_string(r);
  return s.empty() ? "e" : s;
}

inline GroupPtr build_rotation_group(bool with_mirror) {
  const IntMatrix rot(2, {0, -1, 1, 0});
  const IntMatrix mirror(2, {-1, 0, 0, 1});
  std::vector<IntMatrix> gens{rot};
  if (with_mirror) gens.push_back(mirror);
  auto elems = close_under_products(gens, 2);
  // canonical key m*4 + r from the normal form m^a r^b
  std::map<IntMatrix, int> key;
  for (int a = 0; a < (with_mirror ? 2 : 1); ++a) {
    IntMatrix m = a ? mirror : IntMatrix::identity(2);
    IntMatrix x = m;
    for (int b = 0; b < 4; ++b) {
      key.emplace(x, a * 4 + b);
      x = x * rot;
    }
  }
  std::sort(elems.begin(), elems.end(), [&](const IntMatrix& l, const IntMatrix& r) { return key.at(l) < key.at(r); });
  std::vector<std::string> labels;
  for (const auto& e : elems) labels.push_back(dihedral_label(key.at(e) / 4, key.at(e) % 4));
  std::vector<int> gen_idx;
  for (const auto& g : gens) gen_idx.push_back(static_cast<int>(std::find(elems.begin(), elems.end(), g) - elems.begin()));
  return std::make_shared<const StabilizerGroup>(with_mirror ? "D4" : "C4", std::move(elems), std::move(labels),
                                                 std::move(gen_idx));
}

inline GroupPtr build_symmetric_group(int n) {
  std::vector<IntMatrix> gens;
  if (n >= 2) {
    std::vector<int> swap(n);
    std::iota(swap.begin(), swap.end(), 0);
    std::swap(swap[0], swap[1]);
    gens.push_back(point_map_of(swap));
  }
  if (n >= 3) {
    std::vector<int> cycle(n);
    for (int i = 0; i < n; ++i) cycle[i] = (i + 1) % n;
    gens.push_back(point_map_of(cycle));
  }
  auto elems = close_under_products(gens, n);
  struct Keyed {
    int length;
    std::string label;
    IntMatrix m;
  };
  std::vector<Keyed> keyed;
  for (auto& e : elems) {
    int length = 0;
    std::string label = cycle_label(perm_of(e), &length);
    keyed.push_back({length, std::move(label), std::move(e)});
  }
  std::sort(keyed.begin(), keyed.end(),
            [](const Keyed& l, const Keyed& r) { return std::tie(l.length, l.label) < std::tie(r.length, r.label); });
  std::vector<IntMatrix> sorted;
  std::vector<std::string> labels;
  for (auto& k : keyed) {
    sorted.push_back(std::move(k.m));
    labels.push_back(std::move(k.label));
  }
  std::vector<int> gen_idx;
  for (const auto& g : gens) gen_idx.push_back(static_cast<int>(std::find(sorted.begin(), sorted.end(), g) - sorted.begin()));
  return std::make_shared<const StabilizerGroup>("S" + std::to_string(n), std::move(sorted), std::move(labels),
                                                 std::move(gen_idx));
}

}  // namespace detail

/// Builds one of the supported stabilizer groups: C4, D4, S2, S3, or S<n> / Sn(<n>) for n <= 6.
inline GroupPtr build_stabilizer(std::string_view name) {
  if (name == "C4") return detail::build_rotation_group(false);
  if (name == "D4") return detail::build_rotation_group(true);
  int n = -1;
  std::string s(name);
  if (s.size() >= 2 && s[0] == 'S' && s.find_first_not_of("0123456789", 1) == std::string::npos) {
    n = std::stoi(s.substr(1));
  } else if (s.rfind("Sn(", 0) == 0 && s.back() == ')') {
    const std::string inner = s.substr(3, s.size() - 4);
    if (!inner.empty() && inner.find_first_not_of("0123456789") == std::string::npos) n = std::stoi(inner);
  }
  if (n >= 1 && n <= 6) return detail::build_symmetric_group(n);
  throw UnsupportedGroupError("unsupported stabilizer group '" + s + "' (expected C4, D4, S2, S3 or Sn(n), n <= 6)");
}

// ---------------------------------------------------------------------------
// Semidirect product elements (t, h): x -> h x + t.

struct SemidirectElement {
  IntVec translation;
  int stab = 0;

  friend bool operator==(const SemidirectElement&, const SemidirectElement&) = default;
};

inline SemidirectElement identity_element(const StabilizerGroup& g) { return {IntVec(g.dim(), 0), 0}; }

namespace detail {
inline void check_context(const StabilizerGroup& g, const SemidirectElement& a) {
  if (static_cast<int>(a.translation.size()) != g.dim())
    throw ContextError("semidirect element has spatial dimension " + std::to_string(a.translation.size()) +
                       ", group " + g.name() + " acts on Z^" + std::to_string(g.dim()));
  if (a.stab < 0 || a.stab >= g.order()) throw ContextError("stabilizer index out of range for group " + g.name());
}
}  // namespace detail

/// (t1, h1)(t2, h2) = (t1 + h1 t2, h1 h2)
inline SemidirectElement compose(const StabilizerGroup& g, const SemidirectElement& a, const SemidirectElement& b) {
  detail::check_context(g, a);
  detail::check_context(g, b);
  IntVec t = g.action().act(a.stab, b.translation);
  for (int i = 0; i < g.dim(); ++i) t[i] = detail::checked_add(t[i], a.translation[i]);
  return {std::move(t), g.mul(a.stab, b.stab)};
}

/// (t, h)^-1 = (-(h^-1 t), h^-1)
inline SemidirectElement inverse(const StabilizerGroup& g, const SemidirectElement& a) {
  detail::check_context(g, a);
  const int hinv = g.inv(a.stab);
  IntVec t = g.action().act(hinv, a.translation);
  for (auto& v : t) v = detail::checked_mul(v, -1);
  return {std::move(t), hinv};
}

inline IntVec act_on_point(const StabilizerGroup& g, const SemidirectElement& a, const IntVec& x) {
  detail::check_context(g, a);
  if (static_cast<int>(x.size()) != g.dim()) throw ContextError("act_on_point: point dimension mismatch");
  IntVec y = g.action().act(a.stab, x);
  for (int i = 0; i < g.dim(); ++i) y[i] = detail::checked_add(y[i], a.translation[i]);
  return y;
}

/// Homogeneous (n+1)x(n+1) matrix [[R, t], [0, 1]].
inline IntMatrix to_matrix(const StabilizerGroup& g, const SemidirectElement& a) {
  detail::check_context(g, a);
  const int n = g.dim();
  IntMatrix m(n + 1);
  const IntMatrix& r = g.action().point_maps[a.stab];
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(i, j) = r(i, j);
    m(i, n) = a.translation[i];
  }
  m(n, n) = 1;
  return m;
}

inline SemidirectElement from_matrix(const StabilizerGroup& g, const IntMatrix& m) {
  const int n = g.dim();
  if (m.n != n + 1) throw ContextError("from_matrix: dimension mismatch");
  IntMatrix r(n);
  IntVec t(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) r(i, j) = m(i, j);
    t[i] = m(i, n);
  }
  for (int h = 0; h < g.order(); ++h)
    if (g.action().point_maps[h] == r) return {t, h};
  throw ContextError("from_matrix: linear part is not an element of " + g.name());
}

// ---------------------------------------------------------------------------
// Subgroups and cosets.

struct QuotientSpace {
  GroupPtr parent;
  std::vector<int> subgroup;              // sorted element indices
  std::vector<std::vector<int>> cosets;   // left cosets gK, ordered by smallest member
  std::vector<int> coset_of;              // element index -> coset index

  int size() const { return static_cast<int>(cosets.size()); }
};

inline bool is_subgroup(const StabilizerGroup& g, const std::vector<int>& k) {
  if (k.empty()) return false;
  std::vector<char> in(g.order(), 0);
  for (int a : k) {
    if (a < 0 || a >= g.order()) return false;
    in[a] = 1;
  }
  if (!in[g.identity()]) return false;
  for (int a : k) {
    if (!in[g.inv(a)]) return false;
    for (int b : k)
      if (!in[g.mul(a, b)]) return false;
  }
  return true;
}

inline QuotientSpace cosets(const GroupPtr& g, std::vector<int> k) {
  std::sort(k.begin(), k.end());
  k.erase(std::unique(k.begin(), k.end()), k.end());
  if (!is_subgroup(*g, k)) throw SubgroupError("element set is not a subgroup of " + g->name());
  QuotientSpace q{g, k, {}, std::vector<int>(g->order(), -1)};
  for (int a = 0; a < g->order(); ++a) {
    if (q.coset_of[a] >= 0) continue;
    std::vector<int> coset;
    for (int b : k) coset.push_back(g->mul(a, b));
    std::sort(coset.begin(), coset.end());
    for (int c : coset) q.coset_of[c] = q.size();
    q.cosets.push_back(std::move(coset));
  }
  return q;
}

inline bool is_normal(const StabilizerGroup& g, const std::vector<int>& k) {
  if (!is_subgroup(g, k)) return false;
  for (int a = 0; a < g.order(); ++a) {
    std::set<int> left, right;
    for (int b : k) {
      left.insert(g.mul(a, b));
      right.insert(g.mul(b, a));
    }
    if (left != right) return false;
  }
  return true;
}

/// Resolves a subgroup given by name ("e", the group's own name, "C2", "C4",
/// "A3", "S2", "M") or by element labels separated by ',' or ';'.
inline std::vector<int> parse_subgroup(const StabilizerGroup& g, std::string_view text) {
  std::string s(text);
  std::vector<int> out;
  const auto labels = [&](std::initializer_list<const char*> ls) {
    for (const char* l : ls) out.push_back(g.index_of(l));
  };
  if (s == "e" || s == "trivial" || s == "1") {
    out = {g.identity()};
  } else if (s == g.name() || s == "H") {
    out.resize(g.order());
    std::iota(out.begin(), out.end(), 0);
  } else if ((g.name() == "C4" || g.name() == "D4") && s == "C2") {
    labels({"e", "r^2"});
  } else if (g.name() == "D4" && s == "C4") {
    labels({"e", "r", "r^2", "r^3"});
  } else if (g.name() == "D4" && s == "M") {
    labels({"e", "m"});
  } else if (g.name() == "S3" && s == "A3") {
    labels({"e", "(123)", "(132)"});
  } else if (g.name() == "S3" && s == "S2") {
    labels({"e", "(12)"});
  } else {
    std::string cur;
    for (char c : s + ";") {
      if (c == ';' || c == ',') {
        if (!cur.empty()) out.push_back(g.index_of(cur));
        cur.clear();
      } else if (c != ' ' && c != '{' && c != '}') {
        cur += c;
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (!is_subgroup(g, out)) throw SubgroupError("'" + s + "' is not a subgroup of " + g.name());
  return out;
}

}  // namespace eqnn
