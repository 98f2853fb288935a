#pragma once

// Hardcoded real irreducible representations, multiplicities via the
// character formula, and intertwiner dimensions from types.
//
// Over the reals an irrep may have an endomorphism algebra larger than the
// scalars (C4's two-dimensional rotation irrep commutes with all rotations).
// Each table records endo_dim_i = (1/|H|) sum_h chi_i(h)^2, and the formulas
// below carry that factor; it is 1 for every irrep of D4, S2 and S3.

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "eqnn/error.hpp"
#include "eqnn/group.hpp"
#include "eqnn/representation.hpp"

namespace eqnn {

struct IrrepTable {
  GroupPtr group;
  std::vector<std::string> labels;
  std::vector<Representation> irreps;
  std::vector<std::vector<double>> characters;
  std::vector<int> endo_dims;

  int size() const { return static_cast<int>(irreps.size()); }

  int index_of(const std::string& label) const {
    for (int i = 0; i < size(); ++i)
      if (labels[i] == label) return i;
    throw NoTableError("irrep '" + label + "' not in the table of " + group->name());
  }

  std::vector<int> dims() const {
    std::vector<int> d;
    for (const auto& r : irreps) d.push_back(r.dim());
    return d;
  }
};

struct TypeVector {
  std::vector<int> multiplicities;
  std::vector<int> irrep_dims;
  std::vector<int> endo_dims;

  int dim() const {
    int d = 0;
    for (std::size_t i = 0; i < multiplicities.size(); ++i) d += multiplicities[i] * irrep_dims[i];
    return d;
  }

  friend bool operator==(const TypeVector& a, const TypeVector& b) { return a.multiplicities == b.multiplicities; }
};

namespace detail {

inline Eigen::MatrixXd mat(int n, std::initializer_list<double> entries) {
  Eigen::MatrixXd m(n, n);
  auto it = entries.begin();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = *it++;
  return m;
}

inline Representation one_dim(const GroupPtr& g, const std::vector<double>& values, const std::string& label) {
  std::vector<Eigen::MatrixXd> mats;
  for (double v : values) mats.push_back(Eigen::MatrixXd::Constant(1, 1, v));
  return Representation(g, std::move(mats), label);
}

inline Representation from_list(const GroupPtr& g, int n, const std::vector<std::initializer_list<double>>& entries,
                                const std::string& label) {
  std::vector<Eigen::MatrixXd> mats;
  for (const auto& e : entries) mats.push_back(mat(n, e));
  return Representation(g, std::move(mats), label);
}

inline void finish_table(IrrepTable& t) {
  const int order = t.group->order();
  for (const auto& r : t.irreps) {
    auto chi = character(r);
    double sq = 0.0;
    for (double c : chi) sq += c * c;
    t.endo_dims.push_back(static_cast<int>(std::lround(sq / order)));
    t.characters.push_back(std::move(chi));
    t.labels.push_back(r.label());
  }
}

}  // namespace detail

/// Irrep tables for C4, D4, S2 and S3. Element order follows the group's
/// canonical enumeration, so D4 columns read e, r, r^2, r^3, m, mr, mr^2, mr^3
/// and S3 columns read e, (12), (13), (23), (123), (132).
inline IrrepTable irrep_table(const GroupPtr& g) {
  using detail::from_list;
  using detail::one_dim;
  IrrepTable t;
  t.group = g;
  const std::string& name = g->name();
  if (name == "C4") {
    t.irreps.push_back(one_dim(g, {1, 1, 1, 1}, "A"));
    t.irreps.push_back(one_dim(g, {1, -1, 1, -1}, "B"));
    t.irreps.push_back(from_list(g, 2, {{1, 0, 0, 1}, {0, -1, 1, 0}, {-1, 0, 0, -1}, {0, 1, -1, 0}}, "E"));
  } else if (name == "D4") {
    t.irreps.push_back(one_dim(g, {1, 1, 1, 1, 1, 1, 1, 1}, "A1"));
    t.irreps.push_back(one_dim(g, {1, 1, 1, 1, -1, -1, -1, -1}, "A2"));
    t.irreps.push_back(one_dim(g, {1, -1, 1, -1, 1, -1, 1, -1}, "B1"));
    t.irreps.push_back(one_dim(g, {1, -1, 1, -1, -1, 1, -1, 1}, "B2"));
    t.irreps.push_back(from_list(g, 2,
                                 {{1, 0, 0, 1},
                                  {0, -1, 1, 0},
                                  {-1, 0, 0, -1},
                                  {0, 1, -1, 0},
                                  {-1, 0, 0, 1},
                                  {0, 1, 1, 0},
                                  {1, 0, 0, -1},
                                  {0, -1, -1, 0}},
                                 "E"));
  } else if (name == "S2") {
    t.irreps.push_back(one_dim(g, {1, 1}, "id"));
    t.irreps.push_back(one_dim(g, {1, -1}, "sgn"));
  } else if (name == "S3") {
    t.irreps.push_back(one_dim(g, {1, 1, 1, 1, 1, 1}, "id"));
    t.irreps.push_back(one_dim(g, {1, -1, -1, -1, 1, 1}, "sgn"));
    // Standard representation, generated from its (12) and (23) matrices.
    t.irreps.push_back(rep_from_generator_images(
        g, {{g->index_of("(12)"), detail::mat(2, {1, 0, -1, -1})}, {g->index_of("(23)"), detail::mat(2, {0, 1, 1, 0})}},
        "V_s"));
  } else {
    throw NoTableError("no irrep table for group " + name + " (regular and quotient capsules remain available)");
  }
  detail::finish_table(t);
  return t;
}

/// Type of a representation: m_i = <chi_rep, chi_i> / endo_i.
inline TypeVector multiplicity(const Representation& rep, const IrrepTable& table) {
  require_same_group(rep.group(), table.group, "multiplicity");
  const auto chi = character(rep);
  const int order = table.group->order();
  TypeVector t{{}, table.dims(), table.endo_dims};
  for (int i = 0; i < table.size(); ++i) {
    double s = 0.0;
    for (int h = 0; h < order; ++h) s += chi[h] * table.characters[i][h];
    const double m = s / order / table.endo_dims[i];
    const double rounded = std::round(m);
    if (std::abs(m - rounded) >= 1e-6 || rounded < 0)
      throw RepresentationError("non-integer multiplicity " + std::to_string(m) + " of irrep " + table.labels[i] +
                                " in '" + rep.label() + "'");
    t.multiplicities.push_back(static_cast<int>(rounded));
  }
  if (t.dim() != rep.dim())
    throw RepresentationError("irreps of the table do not exhaust '" + rep.label() + "' (type dimension " +
                              std::to_string(t.dim()) + " vs " + std::to_string(rep.dim()) + ")");
  return t;
}

inline TypeVector type_vector(const IrrepTable& table, std::vector<int> multiplicities) {
  if (static_cast<int>(multiplicities.size()) != table.size())
    throw ShapeError("type vector length " + std::to_string(multiplicities.size()) + " does not match the " +
                     std::to_string(table.size()) + " irreps of " + table.group->name());
  for (int m : multiplicities)
    if (m < 0) throw ShapeError("negative multiplicity in type vector");
  return {std::move(multiplicities), table.dims(), table.endo_dims};
}

/// dim Hom(pi, rho) = sum_i m_i(pi) m_i(rho) endo_i.
inline int dim_hom(const TypeVector& pi, const TypeVector& rho) {
  if (pi.multiplicities.size() != rho.multiplicities.size()) throw ShapeError("dim_hom: type vectors not aligned");
  int d = 0;
  for (std::size_t i = 0; i < pi.multiplicities.size(); ++i) {
    const int endo = i < pi.endo_dims.size() ? pi.endo_dims[i] : 1;
    d += pi.multiplicities[i] * rho.multiplicities[i] * endo;
  }
  return d;
}

/// Direct sum of irreps with the given multiplicities, in table order.
inline Representation rep_of_type(const IrrepTable& table, const TypeVector& type) {
  std::vector<Representation> parts;
  for (int i = 0; i < table.size(); ++i)
    for (int c = 0; c < type.multiplicities[i]; ++c) parts.push_back(table.irreps[i]);
  if (parts.empty()) throw RepresentationError("rep_of_type: zero-dimensional type");
  return direct_sum(parts);
}

}  // namespace eqnn
