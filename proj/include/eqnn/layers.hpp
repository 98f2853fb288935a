#pragma once

// Admissible nonlinearities and pooling on steerable feature maps, with their
// reverse-mode gradients.

#include <cmath>
#include <string>
#include <vector>

#include "eqnn/capsule.hpp"
#include "eqnn/error.hpp"
#include "eqnn/feature_map.hpp"

namespace eqnn {

enum class NonlinKind { None, ReLU, CReLU, NormReLU };

inline std::string to_string(NonlinKind k) {
  switch (k) {
    case NonlinKind::None: return "none";
    case NonlinKind::ReLU: return "relu";
    case NonlinKind::CReLU: return "crelu";
    case NonlinKind::NormReLU: return "norm_relu";
  }
  return "none";
}

inline NonlinKind parse_nonlin(const std::string& s) {
  if (s == "none" || s.empty()) return NonlinKind::None;
  if (s == "relu") return NonlinKind::ReLU;
  if (s == "crelu") return NonlinKind::CReLU;
  if (s == "norm_relu" || s == "normrelu") return NonlinKind::NormReLU;
  throw SpecError("unknown nonlinearity '" + s + "' (expected none, relu, crelu or norm_relu)");
}

inline constexpr double kNormFloor = 1e-12;

/// Throws AdmissibilityError unless every capsule of the fiber commutes with the nonlinearity.
inline void check_admissible(const FiberType& fiber, NonlinKind kind) {
  for (const auto& e : fiber.entries) {
    const auto& fl = e.capsule.rep.flags();
    const bool ok = kind == NonlinKind::None || (kind == NonlinKind::ReLU && fl.is_permutation) ||
                    (kind == NonlinKind::CReLU && fl.is_monomial) || (kind == NonlinKind::NormReLU && fl.is_orthogonal);
    if (!ok) {
      const char* need = kind == NonlinKind::ReLU ? "permutation" : kind == NonlinKind::CReLU ? "monomial" : "orthogonal";
      throw AdmissibilityError(to_string(kind) + " is not admissible on capsule '" + e.capsule.descriptor +
                               "': it requires a " + need + " representation");
    }
  }
}

/// Fiber type after the nonlinearity (the post-activation capsules).
inline FiberType post_activation_fiber(const FiberType& fiber, NonlinKind kind) {
  check_admissible(fiber, kind);
  if (kind != NonlinKind::CReLU) return fiber;
  FiberType out;
  for (const auto& e : fiber.entries) out.entries.push_back({crelu_capsule(e.capsule), e.mult});
  return out;
}

inline FeatureMap relu(const FeatureMap& f) {
  check_admissible(f.fiber, NonlinKind::ReLU);
  FeatureMap out = f;
  for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
  return out;
}

inline FeatureMap relu_backward(const FeatureMap& in, const FeatureMap& grad_out) {
  FeatureMap g = grad_out;
  g.fiber = in.fiber;
  for (std::size_t i = 0; i < g.data.size(); ++i)
    if (!(in.data[i] > 0.0)) g.data[i] = 0.0;
  return g;
}

/// Channel c becomes (relu(v_c), relu(-v_c)) at output channels (2c, 2c+1).
inline FeatureMap crelu(const FeatureMap& f) {
  FeatureMap out = like(f, post_activation_fiber(f.fiber, NonlinKind::CReLU));
  for (int c = 0; c < f.channels(); ++c)
    for (int x = 0; x < f.cells(); ++x) {
      const double v = f.at(c, x);
      out.at(2 * c, x) = v > 0.0 ? v : 0.0;
      out.at(2 * c + 1, x) = v < 0.0 ? -v : 0.0;
    }
  return out;
}

inline FeatureMap crelu_backward(const FeatureMap& in, const FeatureMap& grad_out) {
  FeatureMap g = like(in, in.fiber);
  for (int c = 0; c < in.channels(); ++c)
    for (int x = 0; x < in.cells(); ++x) {
      const double v = in.at(c, x);
      g.at(c, x) = v > 0.0 ? grad_out.at(2 * c, x) : v < 0.0 ? -grad_out.at(2 * c + 1, x) : 0.0;
    }
  return g;
}

/// Per capsule copy: v -> max(|v| - b, 0) v / |v|, zero when |v| <= 1e-12.
inline FeatureMap norm_relu(const FeatureMap& f, const std::vector<double>& bias) {
  check_admissible(f.fiber, NonlinKind::NormReLU);
  const auto slots = copy_slots(f.fiber);
  if (bias.size() != slots.size())
    throw ShapeError("norm_relu: expected " + std::to_string(slots.size()) + " biases, got " + std::to_string(bias.size()));
  FeatureMap out = like(f, f.fiber);
  for (std::size_t s = 0; s < slots.size(); ++s) {
    const int d = slots[s].capsule->dim(), off = slots[s].offset;
    for (int x = 0; x < f.cells(); ++x) {
      double r2 = 0.0;
      for (int j = 0; j < d; ++j) r2 += f.at(off + j, x) * f.at(off + j, x);
      const double r = std::sqrt(r2);
      if (r <= kNormFloor) continue;
      const double scale = std::max(r - bias[s], 0.0) / r;
      for (int j = 0; j < d; ++j) out.at(off + j, x) = scale * f.at(off + j, x);
    }
  }
  return out;
}

struct NormReluGrads {
  FeatureMap input;
  std::vector<double> bias;
};

inline NormReluGrads norm_relu_backward(const FeatureMap& in, const std::vector<double>& bias, const FeatureMap& grad_out) {
  const auto slots = copy_slots(in.fiber);
  NormReluGrads g{like(in, in.fiber), std::vector<double>(slots.size(), 0.0)};
  for (std::size_t s = 0; s < slots.size(); ++s) {
    const int d = slots[s].capsule->dim(), off = slots[s].offset;
    for (int x = 0; x < in.cells(); ++x) {
      double r2 = 0.0, dot = 0.0;
      for (int j = 0; j < d; ++j) {
        r2 += in.at(off + j, x) * in.at(off + j, x);
        dot += in.at(off + j, x) * grad_out.at(off + j, x);
      }
      const double r = std::sqrt(r2);
      if (r <= kNormFloor || r - bias[s] <= 0.0) continue;
      // out = (1 - b/r) v
      const double a = 1.0 - bias[s] / r, c = bias[s] * dot / (r2 * r);
      for (int j = 0; j < d; ++j) g.input.at(off + j, x) = a * grad_out.at(off + j, x) + c * in.at(off + j, x);
      g.bias[s] -= dot / r;
    }
  }
  return g;
}

inline FeatureMap apply_nonlinearity(const FeatureMap& f, NonlinKind kind, const std::vector<double>& bias = {}) {
  switch (kind) {
    case NonlinKind::None: return f;
    case NonlinKind::ReLU: return relu(f);
    case NonlinKind::CReLU: return crelu(f);
    case NonlinKind::NormReLU: return norm_relu(f, bias);
  }
  return f;
}

// ---------------------------------------------------------------------------
// Pooling. Each pooled output value records the flat input index it came from,
// so the backward pass is a scatter.

struct PoolResult {
  FeatureMap map;
  std::vector<int> source;  // flat input data index per flat output data index
};

inline FeatureMap pool_backward(const FeatureMap& in, const PoolResult& pooled, const FeatureMap& grad_out) {
  FeatureMap g = like(in, in.fiber);
  for (std::size_t i = 0; i < pooled.source.size(); ++i) g.data[pooled.source[i]] += grad_out.data[i];
  return g;
}

namespace detail {
/// Output channel oc at every cell = max over input channels `group` (ties to the lowest index).
inline void max_into(const FeatureMap& f, const std::vector<int>& group, int oc, PoolResult& r) {
  const int cells = f.cells();
  for (int x = 0; x < cells; ++x) {
    int best = group.front();
    for (int c : group)
      if (f.at(c, x) > f.at(best, x)) best = c;
    r.map.at(oc, x) = f.at(best, x);
    r.source[static_cast<std::size_t>(oc) * cells + x] = best * cells + x;
  }
}
}  // namespace detail

/// Collapses each copy of the selected capsules (all when `select` is empty) to
/// one trivial channel holding the max over the copy; other capsules pass through.
inline PoolResult fiber_max_pool(const FeatureMap& f, std::vector<bool> select = {}) {
  if (select.empty()) select.assign(f.fiber.entries.size(), true);
  if (select.size() != f.fiber.entries.size()) throw ShapeError("fiber_max_pool: selection length mismatch");
  FiberType out_fiber;
  for (std::size_t i = 0; i < select.size(); ++i) {
    const auto& e = f.fiber.entries[i];
    if (select[i] && !e.capsule.rep.flags().is_permutation)
      throw AdmissibilityError("fiber max pooling requires permutation capsules, '" + e.capsule.descriptor + "' is not");
    out_fiber.entries.push_back(select[i] ? FiberEntry{trivial_capsule(e.capsule.group()), e.mult} : e);
  }
  PoolResult r{like(f, out_fiber), {}};
  r.source.assign(r.map.data.size(), -1);
  int in_off = 0, out_off = 0;
  for (std::size_t i = 0; i < select.size(); ++i) {
    const auto& e = f.fiber.entries[i];
    const int d = e.capsule.dim();
    for (int c = 0; c < e.mult; ++c) {
      if (select[i]) {
        std::vector<int> group(d);
        for (int j = 0; j < d; ++j) group[j] = in_off + j;
        detail::max_into(f, group, out_off, r);
        ++out_off;
      } else {
        for (int j = 0; j < d; ++j) detail::max_into(f, {in_off + j}, out_off + j, r);
        out_off += d;
      }
      in_off += d;
    }
  }
  return r;
}

/// Max over the channels of each coset sK of every regular capsule copy; the
/// result transforms by the quotient representation on H/K.
inline PoolResult quotient_pool(const FeatureMap& f, const std::vector<int>& k) {
  if (f.fiber.empty()) throw ShapeError("quotient_pool on an empty fiber");
  const GroupPtr g = f.fiber.group();
  const QuotientSpace q = cosets(g, k);
  for (const auto& e : f.fiber.entries)
    if (e.capsule.kind != CapsuleKind::Regular)
      throw AdmissibilityError("quotient pooling requires regular capsules, got '" + e.capsule.descriptor + "'");
  const Capsule out_cap = quotient_capsule(g, q.subgroup);
  PoolResult r{like(f, FiberType({{out_cap, f.fiber.copies()}})), {}};
  r.source.assign(r.map.data.size(), -1);
  for (int copy = 0; copy < f.fiber.copies(); ++copy)
    for (int c = 0; c < q.size(); ++c) {
      std::vector<int> group;
      for (int s : q.cosets[c]) group.push_back(copy * g->order() + s);
      detail::max_into(f, group, copy * q.size() + c, r);
    }
  return r;
}

}  // namespace eqnn
