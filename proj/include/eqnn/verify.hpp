#pragma once

// Equivariance and gradient verification suites shared by the CLI and tests.

#include <Eigen/Dense>
#include <chrono>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "eqnn/feature_map.hpp"
#include "eqnn/group.hpp"
#include "eqnn/layers.hpp"
#include "eqnn/network.hpp"

namespace eqnn {

struct CheckResult {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool passed = true;
  std::string detail;
};

struct RunReport {
  std::vector<CheckResult> checks;
  std::uint64_t seed = 0;
  double seconds = 0.0;

  bool passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }

  CheckResult& add(std::string name, double residual, double tolerance, std::string detail = {}) {
    checks.push_back({std::move(name), residual, tolerance, !(residual > tolerance), std::move(detail)});
    return checks.back();
  }
};

/// ||lhs - rhs||_inf / max(||rhs||_inf, 1e-30).
inline double relative_residual(const std::vector<double>& lhs, const std::vector<double>& rhs) {
  if (lhs.size() != rhs.size()) throw ShapeError("relative_residual: size mismatch");
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    diff = std::max(diff, std::abs(lhs[i] - rhs[i]));
    scale = std::max(scale, std::abs(rhs[i]));
  }
  return diff / std::max(scale, 1e-30);
}

inline double relative_residual(const Eigen::VectorXd& lhs, const Eigen::VectorXd& rhs) {
  return relative_residual(std::vector<double>(lhs.data(), lhs.data() + lhs.size()),
                           std::vector<double>(rhs.data(), rhs.data() + rhs.size()));
}

/// Every stabilizer element combined with every translation of the window when
/// W <= 7, otherwise with `translations` pseudo-random ones (plus zero).
inline std::vector<SemidirectElement> sweep_elements(const StabilizerGroup& g, int window, std::uint64_t seed,
                                                     int translations = 16) {
  const Box box(window, g.dim());
  std::vector<IntVec> ts;
  if (window <= 7) {
    for (int i = 0; i < box.count(); ++i) ts.push_back(box.offset(i));
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> u(-box.radius(), box.radius());
    ts.push_back(IntVec(g.dim(), 0));
    for (int i = 0; i < translations; ++i) {
      IntVec t(g.dim());
      for (auto& c : t) c = u(rng);
      ts.push_back(t);
    }
  }
  std::vector<SemidirectElement> out;
  for (int h = 0; h < g.order(); ++h)
    for (const auto& t : ts) out.push_back({t, h});
  return out;
}

using LayerFn = std::function<FeatureMap(const FeatureMap&)>;

/// max over the sweep of the relative residual of L(pi(a) f) against pi'(a) L(f);
/// both sides use the induced action of the fibers the maps carry.
inline double equivariance_residual(const StabilizerGroup& g, const std::vector<SemidirectElement>& sweep,
                                    const FeatureMap& f, const LayerFn& layer) {
  const FeatureMap base = layer(f);
  double worst = 0.0;
  for (const auto& a : sweep) {
    const FeatureMap lhs = layer(transform_induced(g, a, f));
    const FeatureMap rhs = transform_induced(g, a, base);
    worst = std::max(worst, relative_residual(lhs.data, rhs.data));
  }
  return worst;
}

inline FeatureMap random_feature_map(const FiberType& fiber, const Box& window, Boundary boundary, std::mt19937_64& rng) {
  FeatureMap f(window, boundary, fiber);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& v : f.data) v = u(rng);
  return f;
}

inline constexpr double kLayerTolerance = 1e-9;
inline constexpr double kInvarianceTolerance = 1e-8;

/// Per-layer conv / nonlinearity / pooling equivariance plus score invariance of
/// the whole network. Checks always run on a cyclic window.
inline RunReport verify_network(const SteerableNetwork& net, const NetworkParams& p, std::uint64_t seed,
                                int translations = 16) {
  const auto start = std::chrono::steady_clock::now();
  const auto& spec = net.spec();
  const auto& g = *spec.group;
  const Box window(spec.input_window, g.dim());
  const auto sweep = sweep_elements(g, spec.input_window, seed, translations);
  std::mt19937_64 rng(seed);
  RunReport report;
  report.seed = seed;
  for (int l = 0; l < static_cast<int>(spec.layers.size()); ++l) {
    const auto& layer = spec.layers[l];
    const std::string prefix = "layer " + std::to_string(l) + " ";
    const auto bank = net.bank(p, l);
    const auto x = random_feature_map(layer.in, window, Boundary::Cyclic, rng);
    report.add(prefix + "conv", equivariance_residual(g, sweep, x, [&](const FeatureMap& f) { return convolve(f, bank); }),
               kLayerTolerance);
    if (layer.nonlin != NonlinKind::None) {
      const auto y = random_feature_map(layer.out, window, Boundary::Cyclic, rng);
      const auto& bias = p.layers[l].norm_bias;
      report.add(prefix + to_string(layer.nonlin),
                 equivariance_residual(g, sweep, y,
                                       [&](const FeatureMap& f) { return apply_nonlinearity(f, layer.nonlin, bias); }),
                 kLayerTolerance);
    }
    if (layer.pool.kind != PoolSpec::Kind::None) {
      const auto z = random_feature_map(post_activation_fiber(layer.out, layer.nonlin), window, Boundary::Cyclic, rng);
      const bool fiber_max = layer.pool.kind == PoolSpec::Kind::FiberMax;
      report.add(prefix + (fiber_max ? "fiber_max_pool" : "quotient_pool"),
                 equivariance_residual(g, sweep, z,
                                       [&](const FeatureMap& f) {
                                         return fiber_max ? fiber_max_pool(f).map : quotient_pool(f, layer.pool.subgroup).map;
                                       }),
                 kLayerTolerance);
    }
  }
  if (!spec.layers.empty()) {
    const auto x = random_feature_map(spec.input, window, Boundary::Cyclic, rng);
    const Eigen::VectorXd base = net.forward(p, x);
    double worst = 0.0;
    for (const auto& a : sweep) worst = std::max(worst, relative_residual(net.forward(p, transform_induced(g, a, x)), base));
    report.add("network invariance", worst, kInvarianceTolerance);
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

// ---------------------------------------------------------------------------
// Gradient check against central finite differences.

/// Softmax cross-entropy; optionally writes d loss / d scores.
inline double softmax_cross_entropy(const Eigen::VectorXd& scores, int label, Eigen::VectorXd* grad = nullptr) {
  const double m = scores.maxCoeff();
  const Eigen::VectorXd e = (scores.array() - m).exp().matrix();
  const double z = e.sum();
  if (grad) {
    *grad = e / z;
    (*grad)(label) -= 1.0;
  }
  return std::log(z) - (scores(label) - m);
}

/// Every discrete choice the forward pass made: relu/crelu signs, norm_relu
/// active copies, pooling and head argmaxes.
inline std::vector<int> activation_pattern(const SteerableNetwork& net, const NetworkParams& p, const ForwardTrace& t) {
  std::vector<int> pat;
  for (std::size_t l = 0; l < t.layers.size(); ++l) {
    const auto& lt = t.layers[l];
    switch (net.spec().layers[l].nonlin) {
      case NonlinKind::ReLU:
      case NonlinKind::CReLU:
        for (double v : lt.conv.data) pat.push_back((v > 0.0) - (v < 0.0));
        break;
      case NonlinKind::NormReLU: {
        const auto slots = copy_slots(lt.conv.fiber);
        for (std::size_t s = 0; s < slots.size(); ++s)
          for (int x = 0; x < lt.conv.cells(); ++x) {
            double r2 = 0.0;
            for (int j = 0; j < slots[s].capsule->dim(); ++j) r2 += std::pow(lt.conv.at(slots[s].offset + j, x), 2);
            pat.push_back(std::sqrt(r2) > std::max(kNormFloor, p.layers[l].norm_bias[s]));
          }
        break;
      }
      case NonlinKind::None: break;
    }
    pat.insert(pat.end(), lt.pool.source.begin(), lt.pool.source.end());
  }
  pat.insert(pat.end(), t.head_source.begin(), t.head_source.end());
  return pat;
}

struct GradientCheck {
  double max_relative_error = 0.0;
  int parameters = 0;
  int kink_crossings = 0;  // parameters whose stencil changed the activation pattern
  int worst_index = -1;
};

/// Relative error |a - n| / max(|a|, |n|, floor) per parameter of the softmax
/// cross-entropy of one sample. Parameters whose +-step stencil crosses a
/// non-differentiable point are counted and left out of the maximum.
inline GradientCheck gradient_check(const SteerableNetwork& net, const NetworkParams& p, const FeatureMap& x, int label,
                                    double step = 1e-5, double floor = 1e-6) {
  ForwardTrace trace;
  Eigen::VectorXd dscores;
  softmax_cross_entropy(net.forward(p, x, &trace), label, &dscores);
  const auto pattern = activation_pattern(net, p, trace);
  const std::vector<double> analytic = net.backward(p, trace, dscores).flatten();
  std::vector<double> theta = p.flatten();
  NetworkParams probe = p;
  GradientCheck r;
  r.parameters = static_cast<int>(theta.size());
  const auto eval = [&](std::vector<double>& th, bool& same) {
    probe.unflatten(th);
    ForwardTrace t;
    const double loss = softmax_cross_entropy(net.forward(probe, x, &t), label);
    same = same && activation_pattern(net, probe, t) == pattern;
    return loss;
  };
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double keep = theta[i];
    bool same = true;
    theta[i] = keep + step;
    const double up = eval(theta, same);
    theta[i] = keep - step;
    const double down = eval(theta, same);
    theta[i] = keep;
    if (!same) {
      ++r.kink_crossings;
      continue;
    }
    const double numeric = (up - down) / (2 * step);
    const double err = std::abs(numeric - analytic[i]) / std::max({std::abs(numeric), std::abs(analytic[i]), floor});
    if (err > r.max_relative_error) {
      r.max_relative_error = err;
      r.worst_index = static_cast<int>(i);
    }
  }
  return r;
}

}  // namespace eqnn
