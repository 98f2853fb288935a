#pragma once

// Capsules (representations with a fixed basis) and fiber types (ordered
// lists of capsules with multiplicities).

#include <memory>
#include <string>
#include <vector>

#include "eqnn/error.hpp"
#include "eqnn/group.hpp"
#include "eqnn/irreps.hpp"
#include "eqnn/representation.hpp"

namespace eqnn {

enum class CapsuleKind { Trivial, Regular, Quotient, Irrep, CReLU, Custom };

inline std::string to_string(CapsuleKind k) {
  switch (k) {
    case CapsuleKind::Trivial: return "trivial";
    case CapsuleKind::Regular: return "regular";
    case CapsuleKind::Quotient: return "quotient";
    case CapsuleKind::Irrep: return "irrep";
    case CapsuleKind::CReLU: return "crelu";
    case CapsuleKind::Custom: return "custom";
  }
  return "custom";
}

struct Capsule {
  Representation rep;
  CapsuleKind kind = CapsuleKind::Custom;
  /// Stable identity used for layout comparison and caching, e.g. "regular",
  /// "quotient{e;r^2}", "irrep:E", "crelu(irrep:E)".
  std::string descriptor;
  std::vector<int> subgroup;  // quotient capsules only

  int dim() const { return rep.dim(); }
  const GroupPtr& group() const { return rep.group(); }

  friend bool operator==(const Capsule& a, const Capsule& b) {
    return a.descriptor == b.descriptor && a.rep.group()->name() == b.rep.group()->name();
  }
};

namespace detail {
inline Capsule checked_capsule(Representation rep, CapsuleKind kind, std::string descriptor, std::vector<int> sub = {}) {
  if ((kind == CapsuleKind::Regular || kind == CapsuleKind::Quotient || kind == CapsuleKind::Trivial ||
       kind == CapsuleKind::CReLU) &&
      !rep.flags().is_permutation)
    throw RepresentationError("capsule '" + descriptor + "' must be a permutation representation");
  return {std::move(rep), kind, std::move(descriptor), std::move(sub)};
}
}  // namespace detail

inline Capsule trivial_capsule(const GroupPtr& g) { return detail::checked_capsule(trivial_rep(g), CapsuleKind::Trivial, "trivial"); }

inline Capsule regular_capsule(const GroupPtr& g) {
  std::vector<int> e{g->identity()};
  return detail::checked_capsule(regular_rep(g), CapsuleKind::Regular, "regular", e);
}

inline Capsule quotient_capsule(const GroupPtr& g, const std::vector<int>& k) {
  auto q = cosets(g, k);
  if (q.size() == g->order()) return regular_capsule(g);
  if (q.size() == 1) return trivial_capsule(g);
  Representation rep = quotient_rep(q);
  std::string d = rep.label();
  return detail::checked_capsule(std::move(rep), CapsuleKind::Quotient, std::move(d), q.subgroup);
}

inline Capsule irrep_capsule(const IrrepTable& table, const std::string& label) {
  const int i = table.index_of(label);
  return detail::checked_capsule(table.irreps[i], CapsuleKind::Irrep, "irrep:" + label);
}

inline Capsule custom_capsule(Representation rep, std::string descriptor) {
  return detail::checked_capsule(std::move(rep), CapsuleKind::Custom, std::move(descriptor));
}

/// Post-activation capsule of CReLU for a monomial capsule: channel j becomes the
/// pair (2j, 2j+1) = (relu(v_j), relu(-v_j)); an entry +1 at (i, j) routes pair j
/// to pair i, an entry -1 routes it with the two members swapped.
inline Capsule crelu_capsule(const Capsule& inner) {
  if (!inner.rep.flags().is_monomial)
    throw AdmissibilityError("crelu requires a monomial capsule, '" + inner.descriptor + "' is not monomial");
  const auto& g = inner.group();
  const int d = inner.dim();
  std::vector<std::vector<int>> perms(g->order(), std::vector<int>(2 * d));
  for (int h = 0; h < g->order(); ++h) {
    const Eigen::MatrixXd m = inner.rep.matrix(h);
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < d; ++i) {
        if (std::abs(m(i, j)) < 0.5) continue;
        const bool flip = m(i, j) < 0;
        perms[h][2 * j] = 2 * i + (flip ? 1 : 0);
        perms[h][2 * j + 1] = 2 * i + (flip ? 0 : 1);
      }
  }
  std::string d_str = "crelu(" + inner.descriptor + ")";
  return detail::checked_capsule(Representation::from_permutations(g, std::move(perms), d_str), CapsuleKind::CReLU,
                                 d_str);
}

struct FiberEntry {
  Capsule capsule;
  int mult = 1;
};

struct FiberType {
  std::vector<FiberEntry> entries;

  FiberType() = default;
  FiberType(std::vector<FiberEntry> e) : entries(std::move(e)) {
    for (const auto& x : entries)
      if (x.mult <= 0) throw ShapeError("capsule multiplicity must be positive");
  }

  int channels() const {
    int k = 0;
    for (const auto& e : entries) k += e.mult * e.capsule.dim();
    return k;
  }

  int copies() const {
    int c = 0;
    for (const auto& e : entries) c += e.mult;
    return c;
  }

  bool empty() const { return entries.empty(); }

  GroupPtr group() const {
    if (entries.empty()) throw ShapeError("empty fiber type has no group");
    return entries.front().capsule.group();
  }

  /// Adjacent entries with equal capsules merged, for layout comparison.
  FiberType canonical() const {
    FiberType out;
    for (const auto& e : entries) {
      if (!out.entries.empty() && out.entries.back().capsule == e.capsule)
        out.entries.back().mult += e.mult;
      else
        out.entries.push_back(e);
    }
    return out;
  }

  bool same_layout(const FiberType& other) const {
    const FiberType a = canonical(), b = other.canonical();
    if (a.entries.size() != b.entries.size()) return false;
    for (std::size_t i = 0; i < a.entries.size(); ++i)
      if (!(a.entries[i].capsule == b.entries[i].capsule) || a.entries[i].mult != b.entries[i].mult) return false;
    return true;
  }

  bool all(bool (*pred)(const RepFlags&)) const {
    for (const auto& e : entries)
      if (!pred(e.capsule.rep.flags())) return false;
    return true;
  }

  /// Block-diagonal fiber representation, copies in declaration order.
  Representation representation() const {
    std::vector<Representation> parts;
    for (const auto& e : entries)
      for (int c = 0; c < e.mult; ++c) parts.push_back(e.capsule.rep);
    return direct_sum(parts, describe());
  }

  /// out = rho(h) in over one fiber of length channels().
  void apply(int h, const double* in, double* out) const {
    int off = 0;
    for (const auto& e : entries)
      for (int c = 0; c < e.mult; ++c) {
        e.capsule.rep.apply(h, in + off, out + off);
        off += e.capsule.dim();
      }
  }

  std::string describe() const {
    std::string s;
    for (std::size_t i = 0; i < entries.size(); ++i)
      s += (i ? "+" : "") + std::to_string(entries[i].mult) + "x" + entries[i].capsule.descriptor;
    return s;
  }
};

/// One entry per capsule copy: the capsule and its first channel.
struct CopySlot {
  const Capsule* capsule;
  int entry;
  int offset;
};

inline std::vector<CopySlot> copy_slots(const FiberType& f) {
  std::vector<CopySlot> slots;
  int off = 0;
  for (std::size_t i = 0; i < f.entries.size(); ++i)
    for (int c = 0; c < f.entries[i].mult; ++c) {
      slots.push_back({&f.entries[i].capsule, static_cast<int>(i), off});
      off += f.entries[i].capsule.dim();
    }
  return slots;
}

}  // namespace eqnn
