#pragma once

// Synthetic motif classification and plain mini-batch gradient descent.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "eqnn/feature_map.hpp"
#include "eqnn/network.hpp"
#include "eqnn/verify.hpp"

namespace eqnn {

struct TaskConfig {
  std::string group = "D4";
  int window = 9;
  int classes = 2;
  std::vector<std::vector<IntVec>> motifs;  // one point set per class, empty = built-in motifs
  int train_samples = 64;
  int test_samples = 32;
  double noise = 0.1;
  double learning_rate = 0.05;
  int batch = 16;
  int epochs = 10;
  std::uint64_t seed = 1;
};

/// Built-in motifs: a line, a corner, a single dot, a plus; padded with zeros
/// to the grid dimension.
inline std::vector<std::vector<IntVec>> default_motifs(int classes, int dim) {
  const std::vector<std::vector<std::pair<int, int>>> shapes{
      {{-1, 0}, {0, 0}, {1, 0}},
      {{0, 0}, {1, 0}, {0, 1}},
      {{0, 0}},
      {{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}},
  };
  if (classes > static_cast<int>(shapes.size()))
    throw SpecError("at most " + std::to_string(shapes.size()) + " classes have built-in motifs");
  std::vector<std::vector<IntVec>> out;
  for (int c = 0; c < classes; ++c) {
    std::vector<IntVec> pts;
    for (auto [a, b] : shapes[c]) {
      IntVec p(dim, 0);
      p[0] = a;
      if (dim > 1) p[1] = b;
      pts.push_back(p);
    }
    out.push_back(pts);
  }
  return out;
}

struct Sample {
  FeatureMap x;
  int label = 0;
};

/// Class c: motif c moved by a uniformly random group element (cyclic window)
/// plus uniform noise in [-noise, noise].
inline std::vector<Sample> generate_samples(const TaskConfig& cfg, const GroupPtr& g, int count, std::mt19937_64& rng) {
  const auto motifs = cfg.motifs.empty() ? default_motifs(cfg.classes, g->dim()) : cfg.motifs;
  if (static_cast<int>(motifs.size()) != cfg.classes) throw SpecError("task needs one motif per class");
  const Box window(cfg.window, g->dim());
  std::uniform_int_distribution<int> cls(0, cfg.classes - 1), stab(0, g->order() - 1),
      shift(-window.radius(), window.radius());
  std::uniform_real_distribution<double> noise(-cfg.noise, cfg.noise);
  std::vector<Sample> out;
  for (int i = 0; i < count; ++i) {
    Sample s{FeatureMap(window, Boundary::Cyclic, trivial_fiber(g, 1)), cls(rng)};
    for (const auto& p : motifs[s.label]) {
      if (static_cast<int>(p.size()) != g->dim()) throw SpecError("motif point has the wrong dimension");
      const int idx = window.index(p);
      if (idx < 0) throw WindowError("motif point outside the window");
      s.x.at(0, idx) = 1.0;
    }
    SemidirectElement a{IntVec(g->dim()), stab(rng)};
    for (auto& c : a.translation) c = shift(rng);
    s.x = transform_input(*g, a, s.x);
    for (auto& v : s.x.data) v += noise(rng);
    out.push_back(std::move(s));
  }
  return out;
}

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};

inline int predict(const Eigen::VectorXd& scores) {
  Eigen::Index i = 0;
  scores.maxCoeff(&i);
  return static_cast<int>(i);
}

/// Mean loss and accuracy over a data set.
inline EpochLog evaluate(const SteerableNetwork& net, const NetworkParams& p, const std::vector<Sample>& data) {
  EpochLog e;
  for (const auto& s : data) {
    const Eigen::VectorXd scores = net.forward(p, s.x);
    e.loss += softmax_cross_entropy(scores, s.label);
    e.accuracy += predict(scores) == s.label;
  }
  if (!data.empty()) {
    e.loss /= static_cast<double>(data.size());
    e.accuracy /= static_cast<double>(data.size());
  }
  return e;
}

struct TrainResult {
  NetworkParams params;
  std::vector<EpochLog> log;  // entry 0 is the initial state
};

/// Mini-batch gradient descent on softmax cross-entropy, single-threaded and
/// deterministic for a fixed rng state.
inline TrainResult train(const SteerableNetwork& net, NetworkParams p, const std::vector<Sample>& data, const TaskConfig& cfg,
                         std::mt19937_64& rng) {
  if (cfg.batch <= 0) throw SpecError("batch size must be positive");
  if (net.spec().classes != cfg.classes)
    throw SpecError("network head has " + std::to_string(net.spec().classes) + " classes, task has " +
                    std::to_string(cfg.classes));
  TrainResult r;
  r.log.push_back(evaluate(net, p, data));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < order.size(); b += cfg.batch) {
      const std::size_t end = std::min(order.size(), b + cfg.batch);
      std::vector<double> grad(p.size(), 0.0);
      for (std::size_t i = b; i < end; ++i) {
        const auto& s = data[order[i]];
        ForwardTrace trace;
        Eigen::VectorXd dscores;
        const double loss = softmax_cross_entropy(net.forward(p, s.x, &trace), s.label, &dscores);
        if (!std::isfinite(loss))
          throw Error("non-finite loss at epoch " + std::to_string(epoch) + ", sample " + std::to_string(order[i]));
        const auto g = net.backward(p, trace, dscores).flatten();
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += g[k];
      }
      std::vector<double> theta = p.flatten();
      const double scale = cfg.learning_rate / static_cast<double>(end - b);
      for (std::size_t k = 0; k < theta.size(); ++k) theta[k] -= scale * grad[k];
      p.unflatten(theta);
    }
    r.log.push_back(evaluate(net, p, data));
    r.log.back().epoch = epoch;
    if (!std::isfinite(r.log.back().loss)) throw Error("non-finite loss after epoch " + std::to_string(epoch));
  }
  r.params = std::move(p);
  return r;
}

}  // namespace eqnn
