#pragma once

#include <Eigen/Dense>

namespace eqnn {

/// Orthonormal basis (as columns) of the null space of c. Singular values below
/// rel_tol * sigma_max count as zero; an all-zero c has the whole space as null space.
/// A Householder QR first reduces c to a square triangular factor with the same
/// null space, which then goes through a two-sided Jacobi SVD.
inline Eigen::MatrixXd null_space(const Eigen::MatrixXd& c, double rel_tol = 1e-8) {
  const Eigen::Index n = c.cols();
  if (c.rows() == 0 || c.cwiseAbs().maxCoeff() == 0.0) return Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd tall = c;
  if (tall.rows() < n) {
    tall = Eigen::MatrixXd::Zero(n, n);
    tall.topRows(c.rows()) = c;
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(tall);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cutoff = rel_tol * sv(0);
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > cutoff) ++rank;
  return svd.matrixV().rightCols(n - rank);
}

inline int numerical_rank(const Eigen::MatrixXd& m, double rel_tol = 1e-9) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  int rank = 0;
  while (rank < sv.size() && sv(rank) > rel_tol * sv(0)) ++rank;
  return rank;
}

}  // namespace eqnn
