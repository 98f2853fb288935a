#pragma once

// Change of basis that block-diagonalizes a representation into the exact
// irrep matrices of a table.
//
// For an irrep D of dimension d and a vector u, the map
//   B_u = (1/|H|) sum_h rep(h) u e_1^T D(h^-1)
// intertwines D with rep, so its d columns span a copy of D on which rep acts
// by exactly D's matrices. Copies are harvested from the canonical basis
// vectors u = e_0, e_1, ... until the multiplicity is reached.

#include <Eigen/Dense>
#include <algorithm>
#include <string>
#include <vector>

#include "eqnn/error.hpp"
#include "eqnn/irreps.hpp"
#include "eqnn/linalg.hpp"
#include "eqnn/representation.hpp"

namespace eqnn {

struct IsotypicBlock {
  int irrep = 0;
  int copy = 0;
  int offset = 0;
};

struct IsotypicDecomposition {
  Eigen::MatrixXd change_of_basis;  // A: A rep(h) A^-1 is block diagonal
  Eigen::MatrixXd basis;            // A^-1: columns are the adapted basis vectors
  std::vector<IsotypicBlock> layout;
  TypeVector type;

  /// block_diag of the table's irrep matrices at h, in layout order.
  Eigen::MatrixXd block_diagonal(const IrrepTable& table, int h) const {
    const auto n = basis.rows();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    for (const auto& b : layout) {
      const int d = table.irreps[b.irrep].dim();
      out.block(b.offset, b.offset, d, d) = table.irreps[b.irrep].matrix(h);
    }
    return out;
  }
};

inline IsotypicDecomposition isotypic_decompose(const Representation& rep, const IrrepTable& table) {
  const TypeVector type = multiplicity(rep, table);
  const auto& g = *rep.group();
  const int order = g.order();
  const int n = rep.dim();
  std::vector<Eigen::MatrixXd> rho(order);
  for (int h = 0; h < order; ++h) rho[h] = rep.matrix(h);

  IsotypicDecomposition out;
  out.type = type;
  out.basis = Eigen::MatrixXd::Zero(n, n);
  int offset = 0;
  for (int i = 0; i < table.size(); ++i) {
    const int m = type.multiplicities[i];
    if (m == 0) continue;
    const auto& irrep = table.irreps[i];
    const int d = irrep.dim();
    struct Copy {
      Eigen::MatrixXd cols;
      int lead;
    };
    std::vector<Copy> copies;
    Eigen::MatrixXd accepted(n, 0);
    for (int u = 0; u < n && static_cast<int>(copies.size()) < m; ++u) {
      Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, d);
      for (int h = 0; h < order; ++h) {
        const Eigen::MatrixXd dinv = irrep.matrix(g.inv(h));
        b += rho[h].col(u) * dinv.row(0);
      }
      b /= order;
      if (b.cwiseAbs().maxCoeff() < 1e-12) continue;
      Eigen::MatrixXd trial(n, accepted.cols() + d);
      trial << accepted, b;
      if (numerical_rank(trial) != trial.cols()) continue;
      accepted = trial;
      // unit first column, positive leading coordinate
      int lead = 0;
      while (lead < n && std::abs(b(lead, 0)) <= 1e-9) ++lead;
      if (lead == n) continue;
      b /= b.col(0).norm();
      if (b(lead, 0) < 0) b = -b;
      copies.push_back({b, lead});
    }
    if (static_cast<int>(copies.size()) < m)
      throw DecompositionError("found only " + std::to_string(copies.size()) + " of " + std::to_string(m) +
                               " copies of irrep " + table.labels[i] + " in '" + rep.label() + "'");
    std::stable_sort(copies.begin(), copies.end(), [](const Copy& a, const Copy& b) { return a.lead < b.lead; });
    for (int c = 0; c < m; ++c) {
      out.basis.block(0, offset, n, d) = copies[c].cols;
      out.layout.push_back({i, c, offset});
      offset += d;
    }
  }
  if (offset != n) throw DecompositionError("decomposition does not cover '" + rep.label() + "'");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(out.basis);
  if (!lu.isInvertible()) throw DecompositionError("adapted basis of '" + rep.label() + "' is singular");
  out.change_of_basis = lu.inverse();
  for (int h = 0; h < order; ++h) {
    const double err = (out.change_of_basis * rho[h] * out.basis - out.block_diagonal(table, h)).cwiseAbs().maxCoeff();
    if (err > 1e-8)
      throw DecompositionError("block diagonalization of '" + rep.label() + "' off by " + std::to_string(err) + " at " +
                               g.label(h));
  }
  return out;
}

}  // namespace eqnn
