#pragma once

// Finite-dimensional real representations of a stabilizer group, stored either
// as dense matrices or (for permutation representations) as index maps.

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "eqnn/error.hpp"
#include "eqnn/geometry.hpp"
#include "eqnn/group.hpp"

namespace eqnn {

struct RepFlags {
  bool is_permutation = false;
  bool is_monomial = false;
  bool is_orthogonal = false;
};

inline constexpr double kRepTolerance = 1e-10;

class Representation {
 public:
  Representation() = default;

  /// Dense representation; validated as a homomorphism on construction.
  Representation(GroupPtr g, std::vector<Eigen::MatrixXd> matrices, std::string label)
      : group_(std::move(g)), label_(std::move(label)), dense_(std::move(matrices)) {
    if (!group_) throw RepresentationError("representation without group");
    if (static_cast<int>(dense_.size()) != group_->order())
      throw RepresentationError("representation '" + label_ + "': expected one matrix per group element");
    dim_ = static_cast<int>(dense_.front().rows());
    if (dim_ <= 0) throw RepresentationError("representation '" + label_ + "': dimension must be positive");
    for (const auto& m : dense_)
      if (m.rows() != dim_ || m.cols() != dim_)
        throw RepresentationError("representation '" + label_ + "': matrices must be square of equal size");
    compute_flags();
    validate();
  }

  /// Permutation representation: perms[h][j] is the index that basis vector e_j is sent to.
  static Representation from_permutations(GroupPtr g, std::vector<std::vector<int>> perms, std::string label) {
    Representation r;
    r.group_ = std::move(g);
    r.label_ = std::move(label);
    if (!r.group_) throw RepresentationError("representation without group");
    if (static_cast<int>(perms.size()) != r.group_->order())
      throw RepresentationError("representation '" + r.label_ + "': expected one permutation per group element");
    r.dim_ = static_cast<int>(perms.front().size());
    if (r.dim_ <= 0) throw RepresentationError("representation '" + r.label_ + "': dimension must be positive");
    for (const auto& p : perms) {
      if (static_cast<int>(p.size()) != r.dim_) throw RepresentationError("permutation size mismatch");
      std::vector<char> hit(r.dim_, 0);
      for (int v : p) {
        if (v < 0 || v >= r.dim_ || hit[v]) throw RepresentationError("'" + r.label_ + "': not a permutation");
        hit[v] = 1;
      }
    }
    r.perm_ = std::move(perms);
    r.flags_ = {true, true, true};
    r.validate();
    return r;
  }

  const GroupPtr& group() const { return group_; }
  int dim() const { return dim_; }
  const RepFlags& flags() const { return flags_; }
  const std::string& label() const { return label_; }
  bool permutation_backed() const { return perm_.has_value(); }
  const std::vector<int>& permutation(int h) const { return perm_.value().at(h); }

  Eigen::MatrixXd matrix(int h) const {
    if (!perm_) return dense_.at(h);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim_, dim_);
    const auto& p = (*perm_)[h];
    for (int j = 0; j < dim_; ++j) m(p[j], j) = 1.0;
    return m;
  }

  /// out = rho(h) * in, both of length dim().
  void apply(int h, const double* in, double* out) const {
    if (perm_) {
      const auto& p = (*perm_)[h];
      for (int j = 0; j < dim_; ++j) out[p[j]] = in[j];
      return;
    }
    Eigen::Map<const Eigen::VectorXd> x(in, dim_);
    Eigen::Map<Eigen::VectorXd> y(out, dim_);
    y.noalias() = dense_[h] * x;
  }

  Eigen::VectorXd apply(int h, const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(dim_);
    apply(h, v.data(), out.data());
    return out;
  }

  /// Identity at e and rho(a) rho(g) = rho(a g) for every a and generator g.
  void validate() const {
    const int n = group_->order();
    if (perm_) {
      for (int j = 0; j < dim_; ++j)
        if ((*perm_)[group_->identity()][j] != j)
          throw RepresentationError("representation '" + label_ + "': identity element not mapped to the identity");
      for (int a = 0; a < n; ++a)
        for (int g : group_->generators())
          if (!perm_composes(a, g))
            throw RepresentationError("representation '" + label_ + "' is not a homomorphism at (" + group_->label(a) +
                                      ", " + group_->label(g) + ")");
      return;
    }
    if ((matrix(group_->identity()) - Eigen::MatrixXd::Identity(dim_, dim_)).cwiseAbs().maxCoeff() > kRepTolerance)
      throw RepresentationError("representation '" + label_ + "': identity element not mapped to the identity");
    for (int a = 0; a < n; ++a)
      for (int g : group_->generators()) {
        const double err = (matrix(a) * matrix(g) - matrix(group_->mul(a, g))).cwiseAbs().maxCoeff();
        if (err > kRepTolerance)
          throw RepresentationError("representation '" + label_ + "' is not a homomorphism at (" + group_->label(a) +
                                    ", " + group_->label(g) + ")");
      }
  }

  /// Largest homomorphism defect over all element pairs.
  double homomorphism_defect() const {
    double worst = 0.0;
    if (perm_) {
      for (int a = 0; a < group_->order(); ++a)
        for (int b = 0; b < group_->order(); ++b)
          if (!perm_composes(a, b)) worst = 1.0;
      return worst;
    }
    for (int a = 0; a < group_->order(); ++a)
      for (int b = 0; b < group_->order(); ++b)
        worst = std::max(worst, (matrix(a) * matrix(b) - matrix(group_->mul(a, b))).cwiseAbs().maxCoeff());
    return worst;
  }

 private:
  bool perm_composes(int a, int b) const {
    const auto& pa = (*perm_)[a];
    const auto& pb = (*perm_)[b];
    const auto& pab = (*perm_)[group_->mul(a, b)];
    for (int j = 0; j < dim_; ++j)
      if (pa[pb[j]] != pab[j]) return false;
    return true;
  }

  void compute_flags() {
    bool perm = true, mono = true, orth = true;
    for (const auto& m : dense_) {
      for (int i = 0; i < dim_ && mono; ++i) {
        int row_nz = 0, col_nz = 0;
        for (int j = 0; j < dim_; ++j) {
          const double r = m(i, j), c = m(j, i);
          if (std::abs(r) > kRepTolerance) {
            ++row_nz;
            if (std::abs(std::abs(r) - 1.0) > kRepTolerance) mono = false;
            if (std::abs(r - 1.0) > kRepTolerance) perm = false;
          }
          if (std::abs(c) > kRepTolerance) ++col_nz;
        }
        if (row_nz != 1 || col_nz != 1) mono = false;
      }
      if ((m.transpose() * m - Eigen::MatrixXd::Identity(dim_, dim_)).cwiseAbs().maxCoeff() > kRepTolerance) orth = false;
    }
    flags_ = {perm && mono, mono, orth};
  }

  GroupPtr group_;
  int dim_ = 0;
  std::string label_;
  RepFlags flags_;
  std::vector<Eigen::MatrixXd> dense_;
  std::optional<std::vector<std::vector<int>>> perm_;
};

inline Representation trivial_rep(const GroupPtr& g) {
  return Representation::from_permutations(g, std::vector<std::vector<int>>(g->order(), std::vector<int>{0}), "trivial");
}

/// Permutation representation on left cosets: rho(g') e_{gK} = e_{g'gK}.
inline Representation quotient_rep(const QuotientSpace& q, std::string label = {}) {
  const auto& g = *q.parent;
  std::vector<std::vector<int>> perms(g.order(), std::vector<int>(q.size()));
  for (int a = 0; a < g.order(); ++a)
    for (int c = 0; c < q.size(); ++c) perms[a][c] = q.coset_of[g.mul(a, q.cosets[c].front())];
  if (label.empty()) {
    label = "quotient{";
    for (std::size_t i = 0; i < q.subgroup.size(); ++i) label += (i ? ";" : "") + g.label(q.subgroup[i]);
    label += "}";
  }
  return Representation::from_permutations(q.parent, std::move(perms), std::move(label));
}

inline Representation quotient_rep(const GroupPtr& g, const std::vector<int>& k) { return quotient_rep(cosets(g, k)); }

inline Representation regular_rep(const GroupPtr& g) { return quotient_rep(cosets(g, {g->identity()}), "regular"); }

inline void require_same_group(const GroupPtr& a, const GroupPtr& b, const char* what) {
  if (a != b && (a->name() != b->name() || a->order() != b->order()))
    throw ContextError(std::string(what) + ": representations over different groups (" + a->name() + " vs " + b->name() + ")");
}

inline Representation direct_sum(const std::vector<Representation>& parts, std::string label = {}) {
  if (parts.empty()) throw RepresentationError("direct_sum of nothing");
  const GroupPtr& g = parts.front().group();
  bool all_perm = true;
  int dim = 0;
  for (const auto& p : parts) {
    require_same_group(g, p.group(), "direct_sum");
    all_perm = all_perm && p.permutation_backed();
    dim += p.dim();
  }
  if (label.empty())
    for (std::size_t i = 0; i < parts.size(); ++i) label += (i ? "+" : "") + parts[i].label();
  if (all_perm) {
    std::vector<std::vector<int>> perms(g->order());
    for (int h = 0; h < g->order(); ++h) {
      int off = 0;
      for (const auto& p : parts) {
        for (int v : p.permutation(h)) perms[h].push_back(v + off);
        off += p.dim();
      }
    }
    return Representation::from_permutations(g, std::move(perms), std::move(label));
  }
  std::vector<Eigen::MatrixXd> mats(g->order(), Eigen::MatrixXd::Zero(dim, dim));
  for (int h = 0; h < g->order(); ++h) {
    int off = 0;
    for (const auto& p : parts) {
      mats[h].block(off, off, p.dim(), p.dim()) = p.matrix(h);
      off += p.dim();
    }
  }
  return Representation(g, std::move(mats), std::move(label));
}

inline Representation direct_sum(const Representation& a, const Representation& b) { return direct_sum({a, b}); }

/// k-fold direct sum of one representation.
inline Representation repeat(const Representation& r, int copies) {
  if (copies <= 0) throw RepresentationError("repeat: copy count must be positive");
  return direct_sum(std::vector<Representation>(copies, r));
}

inline std::vector<double> character(const Representation& r) {
  std::vector<double> chi(r.group()->order());
  for (int h = 0; h < r.group()->order(); ++h) {
    if (r.permutation_backed()) {
      int fixed = 0;
      const auto& p = r.permutation(h);
      for (int j = 0; j < r.dim(); ++j) fixed += p[j] == j;
      chi[h] = fixed;
    } else {
      chi[h] = r.matrix(h).trace();
    }
  }
  return chi;
}

/// Extends generator images to the whole group by breadth-first search over
/// words; the result is then validated as a homomorphism.
inline Representation rep_from_generator_images(const GroupPtr& g, const std::map<int, Eigen::MatrixXd>& images,
                                                std::string label) {
  if (images.empty()) throw RepresentationError("no generator images given");
  const int dim = static_cast<int>(images.begin()->second.rows());
  std::vector<std::optional<Eigen::MatrixXd>> mats(g->order());
  mats[g->identity()] = Eigen::MatrixXd::Identity(dim, dim);
  std::queue<int> frontier;
  frontier.push(g->identity());
  while (!frontier.empty()) {
    const int a = frontier.front();
    frontier.pop();
    for (const auto& [gen, m] : images) {
      const int b = g->mul(a, gen);
      if (!mats[b]) {
        mats[b] = *mats[a] * m;
        frontier.push(b);
      }
    }
  }
  std::vector<Eigen::MatrixXd> out;
  for (auto& m : mats) {
    if (!m) throw RepresentationError("generator images do not reach every element");
    out.push_back(std::move(*m));
  }
  Representation r(g, std::move(out), std::move(label));
  if (r.homomorphism_defect() > kRepTolerance) throw RepresentationError("generator images violate the group relations");
  return r;
}

/// Representation on filters psi: Z^n (s-box) -> fiber, (pi(h) psi)(x) = fiber(h) psi(h^-1 x).
/// Coordinates are ordered fiber-channel major, spatial cell minor.
inline Representation filter_space_rep(const GroupPtr& g, int s, const Representation& fiber) {
  require_same_group(g, fiber.group(), "filter_space_rep");
  if (s <= 0 || s % 2 == 0) throw WindowError("filter size must be odd, got " + std::to_string(s));
  const Box box(s, g->dim());
  const int cells = box.count();
  const int d = fiber.dim();
  // cell_map[h][u] = index of h.u
  std::vector<std::vector<int>> cell_map(g->order(), std::vector<int>(cells));
  for (int h = 0; h < g->order(); ++h)
    for (int u = 0; u < cells; ++u) cell_map[h][u] = box.index(g->action().act(h, box.offset(u)));
  const std::string label = "filter(" + std::to_string(s) + "," + fiber.label() + ")";
  if (fiber.permutation_backed()) {
    std::vector<std::vector<int>> perms(g->order(), std::vector<int>(static_cast<std::size_t>(d) * cells));
    for (int h = 0; h < g->order(); ++h)
      for (int l = 0; l < d; ++l)
        for (int u = 0; u < cells; ++u) perms[h][l * cells + u] = fiber.permutation(h)[l] * cells + cell_map[h][u];
    return Representation::from_permutations(g, std::move(perms), label);
  }
  std::vector<Eigen::MatrixXd> mats(g->order(), Eigen::MatrixXd::Zero(d * cells, d * cells));
  for (int h = 0; h < g->order(); ++h) {
    const Eigen::MatrixXd f = fiber.matrix(h);
    for (int k = 0; k < d; ++k)
      for (int l = 0; l < d; ++l)
        if (f(k, l) != 0.0)
          for (int u = 0; u < cells; ++u) mats[h](k * cells + cell_map[h][u], l * cells + u) = f(k, l);
  }
  return Representation(g, std::move(mats), label);
}

}  // namespace eqnn
