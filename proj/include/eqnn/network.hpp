#pragma once

// Steerable networks: a chain of conv -> nonlinearity -> pooling layers and an
// invariant head (per-capsule invariant, spatial sum, affine map).

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "eqnn/capsule.hpp"
#include "eqnn/error.hpp"
#include "eqnn/feature_map.hpp"
#include "eqnn/intertwine.hpp"
#include "eqnn/layers.hpp"

namespace eqnn {

struct PoolSpec {
  enum class Kind { None, FiberMax, Quotient };
  Kind kind = Kind::None;
  std::vector<int> subgroup;  // quotient pooling only
  std::string subgroup_text;
};

struct LayerSpec {
  int filter_size = 3;
  FiberType in, out;
  NonlinKind nonlin = NonlinKind::None;
  PoolSpec pool;
};

/// Deliberate corruption of one assembled kernel entry, used to check that
/// verification catches broken equivariance.
struct KernelPerturbation {
  int layer = 0;
  int index = 0;
  double delta = 0.0;
};

struct NetworkSpec {
  GroupPtr group;
  int input_window = 9;
  Boundary boundary = Boundary::Cyclic;
  int classes = 2;
  FiberType input;
  std::vector<LayerSpec> layers;
  std::optional<KernelPerturbation> perturbation;
};

struct LayerParams {
  FilterBankParams bank;
  std::vector<double> norm_bias;  // one per output capsule copy (norm_relu only)
};

struct NetworkParams {
  std::vector<LayerParams> layers;
  Eigen::MatrixXd head_w;  // classes x head features
  Eigen::VectorXd head_b;

  /// Flat parameter vector: per layer Phi blocks then biases, then head weights and biases.
  std::vector<double> flatten() const {
    std::vector<double> v;
    for (const auto& l : layers) {
      for (const auto& phi : l.bank.phi) v.insert(v.end(), phi.data(), phi.data() + phi.size());
      v.insert(v.end(), l.norm_bias.begin(), l.norm_bias.end());
    }
    v.insert(v.end(), head_w.data(), head_w.data() + head_w.size());
    v.insert(v.end(), head_b.data(), head_b.data() + head_b.size());
    return v;
  }

  void unflatten(const std::vector<double>& v) {
    std::size_t i = 0;
    const auto take = [&](double* dst, Eigen::Index n) {
      if (i + static_cast<std::size_t>(n) > v.size()) throw ShapeError("parameter vector too short");
      std::copy(v.begin() + static_cast<std::ptrdiff_t>(i), v.begin() + static_cast<std::ptrdiff_t>(i + n), dst);
      i += static_cast<std::size_t>(n);
    };
    for (auto& l : layers) {
      for (auto& phi : l.bank.phi) take(phi.data(), phi.size());
      take(l.norm_bias.data(), static_cast<Eigen::Index>(l.norm_bias.size()));
    }
    take(head_w.data(), head_w.size());
    take(head_b.data(), head_b.size());
    if (i != v.size()) throw ShapeError("parameter vector too long");
  }

  std::size_t size() const { return flatten().size(); }
};

/// Activations kept by the forward pass for the backward pass.
struct LayerTrace {
  FeatureMap input;
  AssembledFilterBank bank;
  FeatureMap conv;
  FeatureMap act;
  PoolResult pool;  // pool.map is the layer output (a copy of act when not pooling)
};

struct ForwardTrace {
  std::vector<LayerTrace> layers;
  FeatureMap head_input;
  std::vector<int> head_source;    // flat index of the max per (copy, cell), permutation capsules
  Eigen::VectorXd features;
  Eigen::VectorXd scores;
};

class SteerableNetwork {
 public:
  explicit SteerableNetwork(NetworkSpec spec) : spec_(std::move(spec)) {
    if (!spec_.group) throw SpecError("network without group");
    if (spec_.classes <= 0) throw SpecError("network needs at least one class");
    Box(spec_.input_window, spec_.group->dim());
    if (spec_.input.empty()) {
      if (spec_.layers.empty()) throw SpecError("network with no layers needs an input fiber");
      spec_.input = spec_.layers.front().in;
    }
    FiberType current = spec_.input;
    for (std::size_t l = 0; l < spec_.layers.size(); ++l) {
      auto& layer = spec_.layers[l];
      const std::string where = "layer " + std::to_string(l);
      require_same_group(spec_.group, layer.in.group(), where.c_str());
      require_same_group(spec_.group, layer.out.group(), where.c_str());
      if (!current.same_layout(layer.in))
        throw SpecError(where + ": input fiber " + layer.in.describe() + " does not chain with the previous output " +
                        current.describe());
      if (layer.filter_size > spec_.input_window) throw WindowError(where + ": filter larger than the window");
      layouts_.push_back(make_filter_bank_layout(layer.filter_size, layer.in, layer.out));
      FiberType act = post_activation_fiber(layer.out, layer.nonlin);
      current = pooled_fiber(act, layer.pool, where);
    }
    head_fiber_ = current;
    for (const auto& e : head_fiber_.entries) {
      const auto& fl = e.capsule.rep.flags();
      if (!fl.is_permutation && !fl.is_orthogonal)
        throw AdmissibilityError("invariant head needs permutation or orthogonal capsules, got '" + e.capsule.descriptor + "'");
    }
    if (spec_.perturbation) {
      const auto& p = *spec_.perturbation;
      if (p.layer < 0 || p.layer >= static_cast<int>(layouts_.size())) throw SpecError("kernel perturbation: bad layer");
      const auto& lay = layouts_[p.layer];
      const int size = lay.out.channels() * lay.in.channels() * lay.cells();
      if (p.index < 0 || p.index >= size) throw SpecError("kernel perturbation: index out of range");
    }
  }

  const NetworkSpec& spec() const { return spec_; }
  const std::vector<FilterBankLayout>& layouts() const { return layouts_; }
  const FiberType& head_fiber() const { return head_fiber_; }
  int head_features() const { return head_fiber_.copies(); }

  NetworkParams init(std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    NetworkParams p;
    for (std::size_t l = 0; l < layouts_.size(); ++l) {
      LayerParams lp{init_params(layouts_[l], rng), {}};
      if (spec_.layers[l].nonlin == NonlinKind::NormReLU) lp.norm_bias.assign(spec_.layers[l].out.copies(), 0.1);
      p.layers.push_back(std::move(lp));
    }
    const double a = std::sqrt(3.0 / std::max(1, head_features()));
    std::uniform_real_distribution<double> u(-a, a);
    p.head_w.resize(spec_.classes, head_features());
    for (Eigen::Index i = 0; i < p.head_w.size(); ++i) p.head_w.data()[i] = u(rng);
    p.head_b = Eigen::VectorXd::Zero(spec_.classes);
    return p;
  }

  NetworkParams zero_like(const NetworkParams& p) const {
    NetworkParams z = p;
    for (auto& l : z.layers) {
      for (auto& phi : l.bank.phi) phi.setZero();
      std::fill(l.norm_bias.begin(), l.norm_bias.end(), 0.0);
    }
    z.head_w.setZero();
    z.head_b.setZero();
    return z;
  }

  FeatureMap make_input() const {
    return FeatureMap(Box(spec_.input_window, spec_.group->dim()), spec_.boundary, spec_.input);
  }

  AssembledFilterBank bank(const NetworkParams& p, int l) const {
    AssembledFilterBank b = assemble(layouts_[l], p.layers[l].bank);
    if (spec_.perturbation && spec_.perturbation->layer == l) b.kernel.data()[spec_.perturbation->index] += spec_.perturbation->delta;
    return b;
  }

  /// One layer: conv, nonlinearity, pooling.
  LayerTrace run_layer(const NetworkParams& p, int l, const FeatureMap& x) const {
    const auto& layer = spec_.layers[l];
    LayerTrace t{x, bank(p, l), {}, {}, {}};
    t.conv = convolve(x, t.bank);
    t.act = apply_nonlinearity(t.conv, layer.nonlin, p.layers[l].norm_bias);
    t.pool = apply_pool(t.act, layer.pool);
    return t;
  }

  Eigen::VectorXd forward(const NetworkParams& p, const FeatureMap& input, ForwardTrace* trace = nullptr) const {
    check_input(input);
    ForwardTrace local;
    ForwardTrace& t = trace ? *trace : local;
    t.layers.clear();
    FeatureMap x = input;
    for (int l = 0; l < static_cast<int>(layouts_.size()); ++l) {
      t.layers.push_back(run_layer(p, l, x));
      x = t.layers.back().pool.map;
    }
    t.head_input = x;
    t.features = head_features_of(x, &t.head_source);
    t.scores = p.head_w * t.features + p.head_b;
    return t.scores;
  }

  /// Per capsule copy: max over channels (permutation) or Euclidean norm (orthogonal), summed over cells.
  Eigen::VectorXd head_features_of(const FeatureMap& x, std::vector<int>* source = nullptr) const {
    const auto slots = copy_slots(x.fiber);
    Eigen::VectorXd feat = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(slots.size()));
    if (source) source->assign(slots.size() * x.cells(), -1);
    for (std::size_t s = 0; s < slots.size(); ++s) {
      const int d = slots[s].capsule->dim(), off = slots[s].offset;
      const bool perm = slots[s].capsule->rep.flags().is_permutation;
      for (int c = 0; c < x.cells(); ++c) {
        if (perm) {
          int best = off;
          for (int j = off; j < off + d; ++j)
            if (x.at(j, c) > x.at(best, c)) best = j;
          feat(static_cast<Eigen::Index>(s)) += x.at(best, c);
          if (source) (*source)[s * x.cells() + c] = best * x.cells() + c;
        } else {
          double r2 = 0.0;
          for (int j = off; j < off + d; ++j) r2 += x.at(j, c) * x.at(j, c);
          feat(static_cast<Eigen::Index>(s)) += std::sqrt(r2);
        }
      }
    }
    return feat;
  }

  /// Gradients of <dscores, scores> with respect to every parameter.
  NetworkParams backward(const NetworkParams& p, const ForwardTrace& t, const Eigen::VectorXd& dscores) const {
    NetworkParams g = zero_like(p);
    g.head_w = dscores * t.features.transpose();
    g.head_b = dscores;
    const Eigen::VectorXd dfeat = p.head_w.transpose() * dscores;
    FeatureMap dx = like(t.head_input, t.head_input.fiber);
    const auto slots = copy_slots(t.head_input.fiber);
    const int cells = t.head_input.cells();
    for (std::size_t s = 0; s < slots.size(); ++s) {
      const int d = slots[s].capsule->dim(), off = slots[s].offset;
      const double gs = dfeat(static_cast<Eigen::Index>(s));
      for (int c = 0; c < cells; ++c) {
        if (slots[s].capsule->rep.flags().is_permutation) {
          dx.data[t.head_source[s * cells + c]] += gs;
        } else {
          double r2 = 0.0;
          for (int j = off; j < off + d; ++j) r2 += t.head_input.at(j, c) * t.head_input.at(j, c);
          const double r = std::sqrt(r2);
          if (r <= kNormFloor) continue;
          for (int j = off; j < off + d; ++j) dx.at(j, c) += gs * t.head_input.at(j, c) / r;
        }
      }
    }
    for (int l = static_cast<int>(layouts_.size()) - 1; l >= 0; --l) {
      const auto& lt = t.layers[l];
      const auto& layer = spec_.layers[l];
      FeatureMap dact = pool_backward(lt.act, lt.pool, dx);
      FeatureMap dconv;
      switch (layer.nonlin) {
        case NonlinKind::None: dconv = dact; break;
        case NonlinKind::ReLU: dconv = relu_backward(lt.conv, dact); break;
        case NonlinKind::CReLU: dconv = crelu_backward(lt.conv, dact); break;
        case NonlinKind::NormReLU: {
          auto nr = norm_relu_backward(lt.conv, p.layers[l].norm_bias, dact);
          dconv = std::move(nr.input);
          g.layers[l].norm_bias = std::move(nr.bias);
          break;
        }
      }
      dconv.fiber = lt.conv.fiber;
      ConvGrads cg = convolve_backward(lt.input, lt.bank, dconv);
      g.layers[l].bank = project_kernel(layouts_[l], cg.kernel);
      dx = std::move(cg.input);
    }
    return g;
  }

  FiberType pooled_fiber(const FiberType& act, const PoolSpec& pool, const std::string& where) const {
    switch (pool.kind) {
      case PoolSpec::Kind::None: return act;
      case PoolSpec::Kind::FiberMax: {
        FiberType out;
        for (const auto& e : act.entries) {
          if (!e.capsule.rep.flags().is_permutation)
            throw AdmissibilityError(where + ": fiber max pooling requires permutation capsules, got '" +
                                     e.capsule.descriptor + "'");
          out.entries.push_back({trivial_capsule(spec_.group), e.mult});
        }
        return out;
      }
      case PoolSpec::Kind::Quotient: {
        for (const auto& e : act.entries)
          if (e.capsule.kind != CapsuleKind::Regular)
            throw AdmissibilityError(where + ": quotient pooling requires regular capsules, got '" +
                                     e.capsule.descriptor + "'");
        return FiberType({{quotient_capsule(spec_.group, pool.subgroup), act.copies()}});
      }
    }
    return act;
  }

 private:
  static PoolResult apply_pool(const FeatureMap& a, const PoolSpec& pool) {
    switch (pool.kind) {
      case PoolSpec::Kind::FiberMax: return fiber_max_pool(a);
      case PoolSpec::Kind::Quotient: return quotient_pool(a, pool.subgroup);
      case PoolSpec::Kind::None: break;
    }
    PoolResult r{a, std::vector<int>(a.data.size())};
    for (std::size_t i = 0; i < r.source.size(); ++i) r.source[i] = static_cast<int>(i);
    return r;
  }

  void check_input(const FeatureMap& f) const {
    if (f.window.size != spec_.input_window || f.window.dim != spec_.group->dim())
      throw ShapeError("input window does not match the network spec");
    if (!f.fiber.same_layout(spec_.input))
      throw ShapeError("input fiber " + f.fiber.describe() + " does not match the network input " + spec_.input.describe());
  }

  NetworkSpec spec_;
  std::vector<FilterBankLayout> layouts_;
  FiberType head_fiber_;
};

}  // namespace eqnn
