#pragma once

// Group-convolutional path: feature maps on G = Z^n x| H with an explicit
// stabilizer axis, group convolutions, filter expansion, group and coset
// pooling, and the reshape bridge to regular-capsule steerable maps.
//
// A map f: G -> R^K is stored as f(k, s, x) for the element (x, s) = t_x s;
// G acts by [T_u f](g) = f(u^-1 g), i.e. for u = (t, h)
//   [T_u f](k, s', x) = f(k, h^-1 s', h^-1 (x - t)).

#include <Eigen/Dense>
#include <limits>
#include <random>
#include <utility>
#include <string>
#include <vector>

#include "eqnn/capsule.hpp"
#include "eqnn/error.hpp"
#include "eqnn/feature_map.hpp"
#include "eqnn/geometry.hpp"
#include "eqnn/group.hpp"
#include "eqnn/intertwine.hpp"
#include "eqnn/layers.hpp"

namespace eqnn {

struct GFeatureMap {
  GroupPtr group;
  Box window;
  Boundary boundary = Boundary::Cyclic;
  int channels = 1;
  std::vector<double> data;  // data[(k * |H| + s) * cells + x]

  GFeatureMap() = default;
  GFeatureMap(GroupPtr g, Box w, Boundary b, int k)
      : group(std::move(g)), window(w), boundary(b), channels(k),
        data(static_cast<std::size_t>(k) * group->order() * window.count(), 0.0) {}

  int stab() const { return group->order(); }
  int cells() const { return window.count(); }
  std::size_t idx(int k, int s, int x) const { return (static_cast<std::size_t>(k) * stab() + s) * cells() + x; }
  double& at(int k, int s, int x) { return data[idx(k, s, x)]; }
  double at(int k, int s, int x) const { return data[idx(k, s, x)]; }
};

/// [T_u f](k, s', x) = f(k, h^-1 s', h^-1 (x - t)).
inline GFeatureMap transform_g(const SemidirectElement& u, const GFeatureMap& f) {
  const auto& g = *f.group;
  const auto src = pullback_cells(g, u, f.window, f.boundary);
  const int hinv = g.inv(u.stab);
  GFeatureMap out(f.group, f.window, f.boundary, f.channels);
  for (int k = 0; k < f.channels; ++k)
    for (int s = 0; s < f.stab(); ++s)
      for (int x = 0; x < f.cells(); ++x)
        if (src[x] >= 0) out.at(k, s, x) = f.at(k, g.mul(hinv, s), src[x]);
  return out;
}

/// Reshape: stabilizer axis becomes the channels of K regular capsules.
inline FeatureMap to_steerable(const GFeatureMap& f) {
  FeatureMap out(f.window, f.boundary, FiberType({{regular_capsule(f.group), f.channels}}));
  out.data = f.data;
  return out;
}

inline GFeatureMap from_steerable(const FeatureMap& f) {
  if (f.fiber.empty()) throw ShapeError("from_steerable on an empty fiber");
  const GroupPtr g = f.fiber.group();
  for (const auto& e : f.fiber.entries)
    if (e.capsule.kind != CapsuleKind::Regular)
      throw ShapeError("from_steerable requires regular capsules, got '" + e.capsule.descriptor + "'");
  if (f.channels() % g->order() != 0) throw ShapeError("channel count not divisible by |H|");
  GFeatureMap out(g, f.window, f.boundary, f.channels() / g->order());
  out.data = f.data;
  return out;
}

/// Filters on Z^n (stab_in = 1) or on G (stab_in = |H|): psi(k', k, s, u) with u in the s-box.
struct GFilter {
  int out_channels = 1;
  int in_channels = 1;
  int stab_in = 1;
  Box box;
  std::vector<double> data;  // ((k' * K + k) * stab_in + s) * cells + u

  GFilter() = default;
  GFilter(int ko, int ki, int stab, Box b)
      : out_channels(ko), in_channels(ki), stab_in(stab), box(b),
        data(static_cast<std::size_t>(ko) * ki * stab * b.count(), 0.0) {}

  std::size_t idx(int ko, int ki, int s, int u) const {
    return ((static_cast<std::size_t>(ko) * in_channels + ki) * stab_in + s) * box.count() + u;
  }
  double& at(int ko, int ki, int s, int u) { return data[idx(ko, ki, s, u)]; }
  double at(int ko, int ki, int s, int u) const { return data[idx(ko, ki, s, u)]; }

  template <class Rng>
  void randomize(Rng& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> d(-scale, scale);
    for (auto& v : data) v = d(rng);
  }
};

/// Index of h^-1 u inside the filter box for every (h, u).
inline std::vector<std::vector<int>> inverse_cell_map(const StabilizerGroup& g, const Box& box) {
  std::vector<std::vector<int>> m(g.order(), std::vector<int>(box.count()));
  for (int h = 0; h < g.order(); ++h)
    for (int u = 0; u < box.count(); ++u) {
      const int c = box.index(g.action().act(g.inv(h), box.offset(u)));
      if (c < 0) throw WindowError("stabilizer moves a filter cell outside the filter window");
      m[h][u] = c;
    }
  return m;
}

/// F+[k', h, k, s, u] = F[k', k, h^-1 s, h^-1 u], reshaped to the kernel of a planar
/// convolution on to_steerable layouts (row k' |H| + h, column (k S_in + s) cells + u).
inline AssembledFilterBank expand_filter_bank(const GFilter& f, const GroupPtr& g) {
  if (f.stab_in != 1 && f.stab_in != g->order()) throw ShapeError("filter stabilizer axis does not match the group");
  const auto inv_cell = inverse_cell_map(*g, f.box);
  const int order = g->order(), cells = f.box.count();
  AssembledFilterBank bank;
  bank.size = f.box.size;
  bank.cells = cells;
  bank.in = f.stab_in == 1 ? trivial_fiber(g, f.in_channels) : FiberType({{regular_capsule(g), f.in_channels}});
  bank.out = FiberType({{regular_capsule(g), f.out_channels}});
  bank.kernel = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(f.out_channels) * order,
                                      static_cast<Eigen::Index>(f.in_channels) * f.stab_in * cells);
  bank.provenance = "expanded:" + g->name();
  for (int ko = 0; ko < f.out_channels; ++ko)
    for (int h = 0; h < order; ++h) {
      const int hinv = g->inv(h);
      for (int ki = 0; ki < f.in_channels; ++ki)
        for (int s = 0; s < f.stab_in; ++s) {
          const int sbar = f.stab_in == 1 ? 0 : g->mul(hinv, s);
          for (int u = 0; u < cells; ++u)
            bank.kernel(ko * order + h, (ki * f.stab_in + s) * cells + u) = f.at(ko, ki, sbar, inv_cell[h][u]);
        }
    }
  return bank;
}

/// [f * psi](x, h) = sum_y f(y) psi(h^-1 (y - x)): planar correlation with every
/// stabilizer-transformed copy of psi.
inline GFeatureMap gconv_first(const FeatureMap& f, const GFilter& psi, const GroupPtr& g) {
  if (psi.stab_in != 1) throw ShapeError("gconv_first takes filters on Z^n");
  if (f.channels() != psi.in_channels) throw ShapeError("gconv_first: channel mismatch");
  const auto inv_cell = inverse_cell_map(*g, psi.box);
  const Eigen::MatrixXd patches = im2col(f, psi.box);
  GFeatureMap out(g, f.window, f.boundary, psi.out_channels);
  const int cells = psi.box.count();
  for (int h = 0; h < g->order(); ++h) {
    Eigen::MatrixXd k(psi.out_channels, static_cast<Eigen::Index>(psi.in_channels) * cells);
    for (int ko = 0; ko < psi.out_channels; ++ko)
      for (int ki = 0; ki < psi.in_channels; ++ki)
        for (int u = 0; u < cells; ++u) k(ko, ki * cells + u) = psi.at(ko, ki, 0, inv_cell[h][u]);
    const Eigen::MatrixXd slice = k * patches;
    for (int ko = 0; ko < psi.out_channels; ++ko)
      for (int x = 0; x < f.cells(); ++x) out.at(ko, h, x) = slice(ko, x);
  }
  return out;
}

/// [f * psi](x, h) = sum_{s, u} f(k, s, x + u) psi(k', k, h^-1 s, h^-1 u): the group
/// sum evaluated term by term over the filter's spatial support.
inline GFeatureMap gconv_higher(const GFeatureMap& f, const GFilter& psi) {
  const auto& g = *f.group;
  if (psi.stab_in != g.order()) throw ShapeError("gconv_higher: filter stabilizer axis does not match the map");
  if (f.channels != psi.in_channels) throw ShapeError("gconv_higher: channel mismatch");
  const auto nb = neighbour_table(f.window, psi.box, f.boundary);
  const auto inv_cell = inverse_cell_map(g, psi.box);
  const int cells = f.cells(), nu = psi.box.count();
  GFeatureMap out(f.group, f.window, f.boundary, psi.out_channels);
  for (int ko = 0; ko < psi.out_channels; ++ko)
    for (int h = 0; h < g.order(); ++h) {
      const int hinv = g.inv(h);
      for (int x = 0; x < cells; ++x) {
        double acc = 0.0;
        for (int ki = 0; ki < f.channels; ++ki)
          for (int s = 0; s < g.order(); ++s) {
            const int sbar = g.mul(hinv, s);
            for (int u = 0; u < nu; ++u) {
              const int y = nb[static_cast<std::size_t>(x) * nu + u];
              if (y >= 0) acc += f.at(ki, s, y) * psi.at(ko, ki, sbar, inv_cell[h][u]);
            }
          }
        out.at(ko, h, x) = acc;
      }
    }
  return out;
}

/// Pooling neighbourhood U as (stabilizer element, offset) pairs.
struct PoolNeighbourhood {
  std::vector<SemidirectElement> elements;
};

/// Pf(g) = max over g U, i.e. Pf(k, h, x) = max_{(o, s) in U} f(k, h s, x + h o).
inline GFeatureMap group_pool(const GFeatureMap& f, const PoolNeighbourhood& u) {
  const auto& g = *f.group;
  if (u.elements.empty()) throw ShapeError("empty pooling neighbourhood");
  for (const auto& e : u.elements) {
    detail::check_context(g, e);
    if (f.boundary == Boundary::Zero)
      for (auto c : e.translation)
        if (std::abs(c) > f.window.radius()) throw WindowError("pooling neighbourhood exceeds the window");
  }
  GFeatureMap out(f.group, f.window, f.boundary, f.channels);
  for (int h = 0; h < g.order(); ++h)
    for (int x = 0; x < f.cells(); ++x) {
      const SemidirectElement base{f.window.offset(x), h};
      std::vector<std::pair<int, int>> sources;  // (stabilizer, cell)
      for (const auto& e : u.elements) {
        const SemidirectElement gu = compose(g, base, e);
        const int cell = f.boundary == Boundary::Cyclic ? f.window.wrap_index(gu.translation) : f.window.index(gu.translation);
        if (cell >= 0) sources.emplace_back(gu.stab, cell);
      }
      for (int k = 0; k < f.channels; ++k) {
        double best = -std::numeric_limits<double>::infinity();
        for (auto [s, c] : sources) best = std::max(best, f.at(k, s, c));
        out.at(k, h, x) = sources.empty() ? 0.0 : best;
      }
    }
  return out;
}

/// Max over each coset sK of the stabilizer axis; the result is a steerable map
/// with quotient capsules (trivial for K = H, regular for K = {e}).
inline FeatureMap coset_pool(const GFeatureMap& f, const std::vector<int>& k) {
  const QuotientSpace q = cosets(f.group, k);
  FeatureMap out(f.window, f.boundary, FiberType({{quotient_capsule(f.group, q.subgroup), f.channels}}));
  for (int ch = 0; ch < f.channels; ++ch)
    for (int c = 0; c < q.size(); ++c)
      for (int x = 0; x < f.cells(); ++x) {
        double best = f.at(ch, q.cosets[c].front(), x);
        for (int s : q.cosets[c]) best = std::max(best, f.at(ch, s, x));
        out.at(ch * q.size() + c, x) = best;
      }
  return out;
}

inline GFeatureMap relu(const GFeatureMap& f) {
  GFeatureMap out = f;
  for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Two-layer G-CNN and its regular-capsule steerable twin.

struct GcnnEquivalenceReport {
  double residual = 0.0;       // relative, after to_steerable
  double first_layer = 0.0;    // relative residual of the first layer alone
  int parameters_gcnn = 0;
  int parameters_steerable = 0;
};

/// Runs gconv_first -> relu -> gconv_higher on a random input and the steerable
/// network whose filter banks are the projections of the expanded G-filters
/// onto the intertwiner bases; returns max |difference| / max |output|.
inline GcnnEquivalenceReport gcnn_equivalence(const GroupPtr& g, std::uint64_t seed, int window = 7, int k0 = 1,
                                              int k1 = 2, int k2 = 2, int size = 3) {
  std::mt19937_64 rng(seed);
  const Box win(window, g->dim()), box(size, g->dim());
  FeatureMap input(win, Boundary::Cyclic, trivial_fiber(g, k0));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& v : input.data) v = u(rng);
  GFilter psi1(k1, k0, 1, box), psi2(k2, k1, g->order(), box);
  psi1.randomize(rng);
  psi2.randomize(rng);

  const GFeatureMap h1 = gconv_first(input, psi1, g);
  const GFeatureMap out_g = gconv_higher(relu(h1), psi2);

  const auto l1 = make_filter_bank_layout(size, trivial_fiber(g, k0), FiberType({{regular_capsule(g), k1}}));
  const auto l2 = make_filter_bank_layout(size, FiberType({{regular_capsule(g), k1}}), FiberType({{regular_capsule(g), k2}}));
  const auto bank1 = assemble(l1, project_kernel(l1, expand_filter_bank(psi1, g).kernel));
  const auto bank2 = assemble(l2, project_kernel(l2, expand_filter_bank(psi2, g).kernel));
  const FeatureMap s1 = convolve(input, bank1);
  const FeatureMap out_s = convolve(relu(s1), bank2);

  const auto rel = [](const std::vector<double>& a, const std::vector<double>& b) {
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      diff = std::max(diff, std::abs(a[i] - b[i]));
      scale = std::max(scale, std::abs(b[i]));
    }
    return diff / std::max(scale, 1e-30);
  };
  GcnnEquivalenceReport r;
  r.first_layer = rel(to_steerable(h1).data, s1.data);
  r.residual = rel(to_steerable(out_g).data, out_s.data);
  r.parameters_gcnn = static_cast<int>(psi1.data.size() + psi2.data.size());
  r.parameters_steerable = l1.parameter_count() + l2.parameter_count();
  return r;
}

}  // namespace eqnn
