#pragma once

// Intertwiner spaces Hom_H(pi, rho) and steerable filter banks assembled from them.

#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "eqnn/capsule.hpp"
#include "eqnn/error.hpp"
#include "eqnn/linalg.hpp"
#include "eqnn/representation.hpp"

namespace eqnn {

struct IntertwinerBasis {
  Representation pi;
  Representation rho;
  std::vector<Eigen::MatrixXd> basis;  // each dim(rho) x dim(pi), Frobenius-orthonormal

  int dim() const { return static_cast<int>(basis.size()); }
};

/// Largest |rho(h) B - B pi(h)| over all h.
inline double intertwining_defect(const Representation& pi, const Representation& rho, const Eigen::MatrixXd& b) {
  double worst = 0.0;
  for (int h = 0; h < pi.group()->order(); ++h)
    worst = std::max(worst, (rho.matrix(h) * b - b * pi.matrix(h)).cwiseAbs().maxCoeff());
  return worst;
}

/// Null space of the generator constraints rho(g) B - B pi(g) = 0 on vec(B)
/// (column-major), checked afterwards on every group element.
inline IntertwinerBasis intertwiner_basis(const Representation& pi, const Representation& rho) {
  require_same_group(pi.group(), rho.group(), "intertwiner_basis");
  const int dp = pi.dim(), dr = rho.dim();
  const int unknowns = dp * dr;
  const auto& gens = pi.group()->generators();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(gens.size()) * unknowns, unknowns);
  const Eigen::MatrixXd ip = Eigen::MatrixXd::Identity(dp, dp), ir = Eigen::MatrixXd::Identity(dr, dr);
  for (std::size_t gi = 0; gi < gens.size(); ++gi) {
    const Eigen::MatrixXd r = rho.matrix(gens[gi]), p = pi.matrix(gens[gi]);
    auto block = c.block(static_cast<Eigen::Index>(gi) * unknowns, 0, unknowns, unknowns);
    // vec(rho B) = (I (x) rho) vec B ; vec(B pi) = (pi^T (x) I) vec B
    for (int a = 0; a < dp; ++a) block.block(a * dr, a * dr, dr, dr) += r;
    for (int a = 0; a < dp; ++a)
      for (int b = 0; b < dp; ++b)
        if (p(b, a) != 0.0) block.block(a * dr, b * dr, dr, dr) -= p(b, a) * ir;
  }
  const Eigen::MatrixXd ns = null_space(c);
  IntertwinerBasis out{pi, rho, {}};
  for (Eigen::Index k = 0; k < ns.cols(); ++k) {
    Eigen::MatrixXd b = Eigen::Map<const Eigen::MatrixXd>(ns.col(k).data(), dr, dp);
    const double err = intertwining_defect(pi, rho, b);
    if (err > 1e-9)
      throw RepresentationError("intertwiner from generator constraints fails on the full group (defect " +
                                std::to_string(err) + ") for " + pi.label() + " -> " + rho.label());
    out.basis.push_back(std::move(b));
  }
  return out;
}

inline double parameter_efficiency(int dim_pi, int dim_rho, int dim_hom) {
  if (dim_hom <= 0) throw Error("parameter efficiency undefined: intertwiner space is zero-dimensional");
  return static_cast<double>(dim_pi) * dim_rho / dim_hom;
}

inline double parameter_efficiency(const Representation& pi, const Representation& rho) {
  return parameter_efficiency(pi.dim(), rho.dim(), intertwiner_basis(pi, rho).dim());
}

// ---------------------------------------------------------------------------
// Filter banks.

namespace detail {

inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Bases of Hom(filter_space(s, in capsule), out capsule), shared process-wide.
inline const IntertwinerBasis& capsule_pair_basis(int s, const Capsule& in, const Capsule& out) {
  static std::mutex mu;
  static std::map<std::tuple<std::string, int, std::string, std::string>, IntertwinerBasis> cache;
  const auto key = std::make_tuple(in.group()->name(), s, in.descriptor, out.descriptor);
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, intertwiner_basis(filter_space_rep(in.group(), s, in.rep), out.rep)).first;
  return it->second;
}

}  // namespace detail

/// Everything about a steerable filter bank except its parameters.
struct FilterBankLayout {
  GroupPtr group;
  int size = 1;  // filter window s
  FiberType in, out;
  std::vector<const IntertwinerBasis*> bases;  // index i * out.entries.size() + j
  std::string hash;

  int cells() const { return Box(size, group->dim()).count(); }
  int pair(int i, int j) const { return i * static_cast<int>(out.entries.size()) + j; }

  /// Rows and columns of Phi_ij.
  std::pair<int, int> phi_shape(int i, int j) const {
    return {bases[pair(i, j)]->dim(), in.entries[i].mult * out.entries[j].mult};
  }

  int parameter_count() const {
    int n = 0;
    for (std::size_t i = 0; i < in.entries.size(); ++i)
      for (std::size_t j = 0; j < out.entries.size(); ++j) {
        auto [r, c] = phi_shape(static_cast<int>(i), static_cast<int>(j));
        n += r * c;
      }
    return n;
  }
};

inline FilterBankLayout make_filter_bank_layout(int size, const FiberType& in, const FiberType& out) {
  if (in.empty() || out.empty()) throw ShapeError("filter bank needs non-empty input and output fibers");
  const GroupPtr g = in.group();
  require_same_group(g, out.group(), "filter bank");
  if (size <= 0 || size % 2 == 0) throw WindowError("filter size must be odd, got " + std::to_string(size));
  FilterBankLayout l{g, size, in, out, {}, {}};
  for (const auto& ei : in.entries)
    for (const auto& ej : out.entries) l.bases.push_back(&detail::capsule_pair_basis(size, ei.capsule, ej.capsule));
  l.hash = detail::fnv1a_hex(g->name() + "|" + std::to_string(size) + "|" + in.describe() + "|" + out.describe());
  return l;
}

/// Per capsule-pair parameter matrices Phi_ij (dim Hom x m_i n_j); column a * n_j + b
/// couples input copy a with output copy b.
struct FilterBankParams {
  std::vector<Eigen::MatrixXd> phi;
};

inline FilterBankParams zero_params(const FilterBankLayout& l) {
  FilterBankParams p;
  for (std::size_t i = 0; i < l.in.entries.size(); ++i)
    for (std::size_t j = 0; j < l.out.entries.size(); ++j) {
      auto [r, c] = l.phi_shape(static_cast<int>(i), static_cast<int>(j));
      p.phi.push_back(Eigen::MatrixXd::Zero(r, c));
    }
  return p;
}

/// Uniform in [-a, a], a = sqrt(3 / (dim Hom * input copies)).
template <class Rng>
FilterBankParams init_params(const FilterBankLayout& l, Rng& rng) {
  FilterBankParams p = zero_params(l);
  for (std::size_t i = 0; i < l.in.entries.size(); ++i)
    for (std::size_t j = 0; j < l.out.entries.size(); ++j) {
      auto& phi = p.phi[l.pair(static_cast<int>(i), static_cast<int>(j))];
      if (phi.size() == 0) continue;
      const double a = std::sqrt(3.0 / (static_cast<double>(phi.rows()) * l.in.entries[i].mult));
      std::uniform_real_distribution<double> u(-a, a);
      for (Eigen::Index k = 0; k < phi.size(); ++k) phi.data()[k] = u(rng);
    }
  return p;
}

struct AssembledFilterBank {
  FiberType in, out;
  int size = 1;
  int cells = 1;
  /// K' x (K * cells); column k * cells + u is input channel k at filter cell u.
  Eigen::MatrixXd kernel;
  std::string provenance;

  double at(int k_out, int k_in, int u) const { return kernel(k_out, k_in * cells + u); }
};

namespace detail {
inline void check_param_shapes(const FilterBankLayout& l, const FilterBankParams& p) {
  if (p.phi.size() != l.bases.size()) throw ShapeError("filter bank parameters: wrong number of capsule pairs");
  for (std::size_t i = 0; i < l.in.entries.size(); ++i)
    for (std::size_t j = 0; j < l.out.entries.size(); ++j) {
      auto [r, c] = l.phi_shape(static_cast<int>(i), static_cast<int>(j));
      const auto& phi = p.phi[l.pair(static_cast<int>(i), static_cast<int>(j))];
      if (phi.rows() != r || phi.cols() != c)
        throw ShapeError("Phi for capsule pair (" + std::to_string(i) + "," + std::to_string(j) + ") has shape " +
                         std::to_string(phi.rows()) + "x" + std::to_string(phi.cols()) + ", expected " +
                         std::to_string(r) + "x" + std::to_string(c));
    }
}

/// Calls fn(i, j, a, b, row0, col0) for every (input copy, output copy) superblock cell.
template <class Fn>
void for_each_block(const FilterBankLayout& l, Fn&& fn) {
  const int cells = l.cells();
  int in_off = 0;
  for (std::size_t i = 0; i < l.in.entries.size(); ++i) {
    const auto& ei = l.in.entries[i];
    int out_off = 0;
    for (std::size_t j = 0; j < l.out.entries.size(); ++j) {
      const auto& ej = l.out.entries[j];
      for (int a = 0; a < ei.mult; ++a)
        for (int b = 0; b < ej.mult; ++b)
          fn(static_cast<int>(i), static_cast<int>(j), a, b, out_off + b * ej.capsule.dim(),
             (in_off + a * ei.capsule.dim()) * cells);
      out_off += ej.mult * ej.capsule.dim();
    }
    in_off += ei.mult * ei.capsule.dim();
  }
}
}  // namespace detail

/// Superblock H_ij = psi_ij Phi_ij: each (input copy a, output copy b) block is
/// sum_p Phi_ij(p, a n_j + b) basis_p.
inline AssembledFilterBank assemble(const FilterBankLayout& l, const FilterBankParams& p) {
  detail::check_param_shapes(l, p);
  const int cells = l.cells();
  AssembledFilterBank bank{l.in, l.out, l.size, cells,
                           Eigen::MatrixXd::Zero(l.out.channels(), static_cast<Eigen::Index>(l.in.channels()) * cells),
                           l.hash};
  detail::for_each_block(l, [&](int i, int j, int a, int b, int row0, int col0) {
    const auto& basis = l.bases[l.pair(i, j)]->basis;
    const auto& phi = p.phi[l.pair(i, j)];
    const int col = a * l.out.entries[j].mult + b;
    for (std::size_t q = 0; q < basis.size(); ++q)
      bank.kernel.block(row0, col0, basis[q].rows(), basis[q].cols()) += phi(static_cast<Eigen::Index>(q), col) * basis[q];
  });
  return bank;
}

/// Adjoint of assemble: Frobenius inner products of kernel blocks with the basis.
/// For a kernel in the span of the layout this recovers its parameters.
inline FilterBankParams project_kernel(const FilterBankLayout& l, const Eigen::MatrixXd& kernel) {
  const int cells = l.cells();
  if (kernel.rows() != l.out.channels() || kernel.cols() != static_cast<Eigen::Index>(l.in.channels()) * cells)
    throw ShapeError("kernel shape does not match the filter bank layout");
  FilterBankParams p = zero_params(l);
  detail::for_each_block(l, [&](int i, int j, int a, int b, int row0, int col0) {
    const auto& basis = l.bases[l.pair(i, j)]->basis;
    auto& phi = p.phi[l.pair(i, j)];
    const int col = a * l.out.entries[j].mult + b;
    for (std::size_t q = 0; q < basis.size(); ++q)
      phi(static_cast<Eigen::Index>(q), col) =
          (kernel.block(row0, col0, basis[q].rows(), basis[q].cols()).array() * basis[q].array()).sum();
  });
  return p;
}

/// max_h |rho_out(h) K - K pi_in(h)| / max|K| (0 for a zero kernel).
inline double bank_constraint_residual(const AssembledFilterBank& bank) {
  const GroupPtr g = bank.in.group();
  const Representation pi = filter_space_rep(g, bank.size, bank.in.representation());
  const Representation rho = bank.out.representation();
  const double scale = bank.kernel.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return intertwining_defect(pi, rho, bank.kernel) / scale;
}

}  // namespace eqnn
