#pragma once

// Feature maps on a finite odd window, induced-representation transforms and
// steerable convolution.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "eqnn/capsule.hpp"
#include "eqnn/error.hpp"
#include "eqnn/geometry.hpp"
#include "eqnn/group.hpp"
#include "eqnn/intertwine.hpp"

namespace eqnn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct FeatureMap {
  Box window;
  Boundary boundary = Boundary::Cyclic;
  FiberType fiber;
  std::vector<double> data;  // channel-major: data[k * cells + x]
  bool approximate = false;  // zero boundary lost support during a transform

  FeatureMap() = default;
  FeatureMap(Box w, Boundary b, FiberType f)
      : window(w), boundary(b), fiber(std::move(f)),
        data(static_cast<std::size_t>(fiber.channels()) * window.count(), 0.0) {}

  int channels() const { return fiber.channels(); }
  int cells() const { return window.count(); }
  double& at(int k, int x) { return data[static_cast<std::size_t>(k) * cells() + x]; }
  double at(int k, int x) const { return data[static_cast<std::size_t>(k) * cells() + x]; }

  Eigen::Map<RowMatrix> matrix() { return {data.data(), channels(), cells()}; }
  Eigen::Map<const RowMatrix> matrix() const { return {data.data(), channels(), cells()}; }

  /// Fiber at cell x.
  Eigen::VectorXd fiber_at(int x) const {
    Eigen::VectorXd v(channels());
    for (int k = 0; k < channels(); ++k) v(k) = at(k, x);
    return v;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data) m = std::max(m, std::abs(v));
    return m;
  }
};

/// K trivial channels.
inline FiberType trivial_fiber(const GroupPtr& g, int channels) { return FiberType({{trivial_capsule(g), channels}}); }

/// Map with the same geometry and a different fiber, zero-filled.
inline FeatureMap like(const FeatureMap& f, FiberType fiber) {
  FeatureMap out(f.window, f.boundary, std::move(fiber));
  out.approximate = f.approximate;
  return out;
}

/// Source cell of every destination cell under x -> g x; -1 where the source
/// lies outside a zero-boundary window.
inline std::vector<int> pullback_cells(const StabilizerGroup& g, const SemidirectElement& a, const Box& window,
                                       Boundary boundary) {
  if (window.dim != g.dim()) throw ContextError("window dimension does not match the group's grid");
  const SemidirectElement inv = inverse(g, a);
  std::vector<int> src(window.count());
  for (int x = 0; x < window.count(); ++x) {
    const IntVec y = act_on_point(g, inv, window.offset(x));
    src[x] = boundary == Boundary::Cyclic ? window.wrap_index(y) : window.index(y);
  }
  return src;
}

namespace detail {
/// Zero boundary: true if some nonzero fiber is pushed off the window.
inline bool loses_support(const StabilizerGroup& g, const SemidirectElement& a, const FeatureMap& f) {
  if (f.boundary == Boundary::Cyclic) return false;
  for (int y = 0; y < f.cells(); ++y) {
    if (f.window.index(act_on_point(g, a, f.window.offset(y))) >= 0) continue;
    for (int k = 0; k < f.channels(); ++k)
      if (f.at(k, y) != 0.0) return true;
  }
  return false;
}

inline FeatureMap transport(const StabilizerGroup& g, const SemidirectElement& a, const FeatureMap& f, bool with_fiber) {
  const auto src = pullback_cells(g, a, f.window, f.boundary);
  FeatureMap out = like(f, f.fiber);
  out.approximate = f.approximate || loses_support(g, a, f);
  const int k = f.channels();
  Eigen::VectorXd in(k), rotated(k);
  for (int x = 0; x < f.cells(); ++x) {
    if (src[x] < 0) continue;
    if (!with_fiber) {
      for (int c = 0; c < k; ++c) out.at(c, x) = f.at(c, src[x]);
      continue;
    }
    for (int c = 0; c < k; ++c) in(c) = f.at(c, src[x]);
    f.fiber.apply(a.stab, in.data(), rotated.data());
    for (int c = 0; c < k; ++c) out.at(c, x) = rotated(c);
  }
  return out;
}
}  // namespace detail

/// [pi_0(g) f](x) = f(g^-1 x) channel by channel. Fibers must be trivial unless
/// spatial_only is requested.
inline FeatureMap transform_input(const StabilizerGroup& g, const SemidirectElement& a, const FeatureMap& f,
                                  bool spatial_only = false) {
  if (!spatial_only)
    for (const auto& e : f.fiber.entries)
      if (e.capsule.kind != CapsuleKind::Trivial)
        throw ContextError("transform_input on a non-trivial fiber; use transform_induced or spatial_only");
  return detail::transport(g, a, f, false);
}

/// [pi(th) f](x) = rho(h) f((th)^-1 x).
inline FeatureMap transform_induced(const StabilizerGroup& g, const SemidirectElement& a, const FeatureMap& f) {
  return detail::transport(g, a, f, true);
}

/// Patch matrix: row k * s^n + u, column x holds f_k(x + u).
inline Eigen::MatrixXd im2col(const FeatureMap& f, const Box& filter) {
  const auto nb = neighbour_table(f.window, filter, f.boundary);
  const int cells = f.cells(), nu = filter.count();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(f.channels()) * nu, cells);
  for (int k = 0; k < f.channels(); ++k)
    for (int x = 0; x < cells; ++x)
      for (int u = 0; u < nu; ++u) {
        const int y = nb[static_cast<std::size_t>(x) * nu + u];
        if (y >= 0) p(k * nu + u, x) = f.at(k, y);
      }
  return p;
}

/// Adjoint of im2col: scatter-add patch gradients back onto the map.
inline void col2im_add(const Eigen::MatrixXd& dp, const Box& filter, FeatureMap& df) {
  const auto nb = neighbour_table(df.window, filter, df.boundary);
  const int cells = df.cells(), nu = filter.count();
  for (int k = 0; k < df.channels(); ++k)
    for (int x = 0; x < cells; ++x)
      for (int u = 0; u < nu; ++u) {
        const int y = nb[static_cast<std::size_t>(x) * nu + u];
        if (y >= 0) df.at(k, y) += dp(k * nu + u, x);
      }
}

namespace detail {
inline void check_conv_input(const FeatureMap& f, const AssembledFilterBank& bank) {
  if (f.channels() != bank.in.channels())
    throw ShapeError("convolution: map has " + std::to_string(f.channels()) + " channels, filter bank expects " +
                     std::to_string(bank.in.channels()));
  if (!f.fiber.same_layout(bank.in))
    throw ShapeError("convolution: fiber type " + f.fiber.describe() + " does not match bank input " + bank.in.describe());
  if (bank.size > f.window.size) throw WindowError("filter larger than the window");
}
}  // namespace detail

/// out(x)_k' = sum_{k,u} f_k(x + u) Psi_k'k(u).
inline FeatureMap convolve(const FeatureMap& f, const AssembledFilterBank& bank) {
  detail::check_conv_input(f, bank);
  const Box filter(bank.size, f.window.dim);
  FeatureMap out = like(f, bank.out);
  out.matrix() = bank.kernel * im2col(f, filter);
  return out;
}

struct ConvGrads {
  Eigen::MatrixXd kernel;  // same shape as the bank kernel
  FeatureMap input;
};

inline ConvGrads convolve_backward(const FeatureMap& f, const AssembledFilterBank& bank, const FeatureMap& grad_out) {
  detail::check_conv_input(f, bank);
  const Box filter(bank.size, f.window.dim);
  const Eigen::MatrixXd g = grad_out.matrix();
  ConvGrads grads{g * im2col(f, filter).transpose(), like(f, f.fiber)};
  col2im_add(bank.kernel.transpose() * g, filter, grads.input);
  return grads;
}

}  // namespace eqnn
