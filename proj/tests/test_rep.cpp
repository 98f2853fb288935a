#include <gtest/gtest.h>

#include <random>

#include "eqnn/irreps.hpp"
#include "eqnn/isotypic.hpp"
#include "eqnn/representation.hpp"
#include "oracles.hpp"

using namespace eqnn;

namespace {

Eigen::MatrixXd m2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

const std::vector<const char*> kTableGroups{"C4", "D4", "S2", "S3"};

}  // namespace

TEST(Representation, RegularRepIsLeftMultiplication) {
  auto s2 = build_stabilizer("S2");
  auto reg = regular_rep(s2);
  EXPECT_EQ(reg.dim(), 2);
  EXPECT_TRUE(reg.matrix(1).isApprox(m2(0, 1, 1, 0)));
  EXPECT_TRUE(reg.flags().is_permutation);
  auto d4 = build_stabilizer("D4");
  auto r = regular_rep(d4);
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) EXPECT_EQ(r.matrix(a)(d4->mul(a, b), b), 1.0);
}

TEST(Representation, QuotientReps) {
  auto s3 = build_stabilizer("S3");
  auto q = quotient_rep(s3, parse_subgroup(*s3, "A3"));
  ASSERT_EQ(q.dim(), 2);
  for (const char* t : {"(12)", "(13)", "(23)"}) EXPECT_TRUE(q.matrix(s3->index_of(t)).isApprox(m2(0, 1, 1, 0)));
  for (const char* c : {"(123)", "(132)"}) EXPECT_TRUE(q.matrix(s3->index_of(c)).isApprox(m2(1, 0, 0, 1)));
  auto whole = quotient_rep(s3, parse_subgroup(*s3, "S3"));
  EXPECT_EQ(whole.dim(), 1);
  for (int h = 0; h < 6; ++h) EXPECT_EQ(whole.matrix(h)(0, 0), 1.0);
  auto reg = regular_rep(s3);
  auto viaq = quotient_rep(s3, {0});
  for (int h = 0; h < 6; ++h) EXPECT_EQ(reg.matrix(h), viaq.matrix(h));
  EXPECT_THROW(quotient_rep(s3, {s3->index_of("(123)")}), SubgroupError);
}

TEST(Representation, HomomorphismHoldsExhaustively) {
  for (const char* name : kTableGroups) {
    auto g = build_stabilizer(name);
    auto t = irrep_table(g);
    for (const auto& r : t.irreps) EXPECT_LE(r.homomorphism_defect(), 1e-12) << name << " " << r.label();
    EXPECT_EQ(regular_rep(g).homomorphism_defect(), 0.0);
    EXPECT_LE(filter_space_rep(g, 3, t.irreps.back()).homomorphism_defect(), 1e-12);
  }
}

TEST(Representation, RejectsNonHomomorphism) {
  auto s2 = build_stabilizer("S2");
  // squares to [[1,-2],[0,1]], not the identity
  std::vector<Eigen::MatrixXd> mats{Eigen::MatrixXd::Identity(2, 2), m2(1, -1, 0, 1)};
  EXPECT_THROW(Representation(s2, mats, "bad"), RepresentationError);
}

TEST(Representation, StructuralFlags) {
  auto d4 = irrep_table(build_stabilizer("D4"));
  const auto& e = d4.irreps[d4.index_of("E")];
  EXPECT_TRUE(e.flags().is_monomial);
  EXPECT_TRUE(e.flags().is_orthogonal);
  EXPECT_FALSE(e.flags().is_permutation);
  auto s3 = irrep_table(build_stabilizer("S3"));
  const auto& vs = s3.irreps[s3.index_of("V_s")];
  EXPECT_FALSE(vs.flags().is_monomial);
  EXPECT_FALSE(vs.flags().is_orthogonal);
  EXPECT_TRUE(s3.irreps[0].flags().is_permutation);
  EXPECT_FALSE(s3.irreps[1].flags().is_permutation);
  EXPECT_TRUE(s3.irreps[1].flags().is_monomial);
}

TEST(IrrepTable, PrintedEntries) {
  auto d4 = build_stabilizer("D4");
  auto t = irrep_table(d4);
  EXPECT_EQ(t.labels, (std::vector<std::string>{"A1", "A2", "B1", "B2", "E"}));
  EXPECT_EQ(t.irreps[t.index_of("B1")].matrix(d4->index_of("r"))(0, 0), -1.0);
  EXPECT_TRUE(t.irreps[4].matrix(d4->index_of("mr^3")).isApprox(m2(0, -1, -1, 0)));
  auto s3 = build_stabilizer("S3");
  auto ts = irrep_table(s3);
  const auto& vs = ts.irreps[2];
  EXPECT_TRUE(vs.matrix(s3->index_of("(23)")).isApprox(m2(0, 1, 1, 0)));
  EXPECT_TRUE(vs.matrix(s3->index_of("(12)")).isApprox(m2(1, 0, -1, -1)));
  EXPECT_TRUE(vs.matrix(s3->index_of("(132)")).isApprox(m2(0, 1, -1, -1)));
  // the two remaining entries are forced by the homomorphism property
  EXPECT_TRUE(vs.matrix(s3->index_of("(13)")).isApprox(m2(-1, -1, 0, 1)));
  EXPECT_TRUE(vs.matrix(s3->index_of("(123)")).isApprox(m2(-1, -1, 1, 0)));
  for (const char* name : kTableGroups) {
    auto tt = irrep_table(build_stabilizer(name));
    for (int h = 0; h < tt.group->order(); ++h) EXPECT_EQ(tt.irreps[0].matrix(h)(0, 0), 1.0);
  }
  EXPECT_THROW(irrep_table(build_stabilizer("S4")), NoTableError);
}

TEST(IrrepTable, DimensionSumAndOrthogonality) {
  for (const char* name : kTableGroups) {
    auto t = irrep_table(build_stabilizer(name));
    const int order = t.group->order();
    int sum = 0;
    for (int i = 0; i < t.size(); ++i) sum += t.irreps[i].dim() * t.irreps[i].dim() / t.endo_dims[i];
    EXPECT_EQ(sum, order) << name;
    for (int i = 0; i < t.size(); ++i)
      for (int j = 0; j < t.size(); ++j) {
        double s = 0;
        for (int h = 0; h < order; ++h) s += t.characters[i][h] * t.characters[j][h];
        EXPECT_NEAR(s / order, i == j ? t.endo_dims[i] : 0, 1e-12) << name << " " << i << " " << j;
      }
  }
  auto d4 = irrep_table(build_stabilizer("D4"));
  EXPECT_EQ(d4.endo_dims, (std::vector<int>{1, 1, 1, 1, 1}));
  auto c4 = irrep_table(build_stabilizer("C4"));
  EXPECT_EQ(c4.endo_dims, (std::vector<int>{1, 1, 2}));
}

TEST(Character, FilterSpaceTraces) {
  auto d4 = build_stabilizer("D4");
  auto chi = character(filter_space_rep(d4, 3, trivial_rep(d4)));
  EXPECT_EQ(chi[0], 9);
  EXPECT_EQ(chi[d4->index_of("m")], 3);
  for (const char* name : {"C4", "D4", "S2", "S3", "S4"}) {
    auto g = build_stabilizer(name);
    for (int s : {1, 3, 5}) {
      auto c = character(filter_space_rep(g, s, trivial_rep(g)));
      for (int h = 0; h < g->order(); ++h) EXPECT_EQ(c[h], oracle::fixed_cells(*g, h, s)) << name << " " << s;
    }
  }
  auto s3 = build_stabilizer("S3");
  auto cs = character(filter_space_rep(s3, 3, trivial_rep(s3)));
  EXPECT_EQ(cs, (std::vector<double>{27, 9, 9, 9, 3, 3}));
}

TEST(Character, ClassFunction) {
  for (const char* name : kTableGroups) {
    auto g = build_stabilizer(name);
    auto t = irrep_table(g);
    std::vector<Representation> reps = t.irreps;
    reps.push_back(filter_space_rep(g, 3, t.irreps.back()));
    for (const auto& r : reps) {
      auto chi = character(r);
      for (int a = 0; a < g->order(); ++a)
        for (int h = 0; h < g->order(); ++h) EXPECT_NEAR(chi[g->mul(g->mul(a, h), g->inv(a))], chi[h], 1e-12);
    }
  }
}

TEST(Multiplicity, FilterSpaceTypes) {
  auto d4 = build_stabilizer("D4");
  EXPECT_EQ(multiplicity(filter_space_rep(d4, 3, trivial_rep(d4)), irrep_table(d4)).multiplicities,
            (std::vector<int>{3, 0, 1, 1, 2}));
  auto s2 = build_stabilizer("S2");
  EXPECT_EQ(multiplicity(filter_space_rep(s2, 3, trivial_rep(s2)), irrep_table(s2)).multiplicities,
            (std::vector<int>{6, 3}));
  auto s3 = build_stabilizer("S3");
  EXPECT_EQ(multiplicity(filter_space_rep(s3, 3, trivial_rep(s3)), irrep_table(s3)).multiplicities,
            (std::vector<int>{10, 1, 8}));
}

TEST(Multiplicity, RegularRepContainsEachIrrepByDimension) {
  for (const char* name : kTableGroups) {
    auto g = build_stabilizer(name);
    auto t = irrep_table(g);
    auto m = multiplicity(regular_rep(g), t);
    for (int i = 0; i < t.size(); ++i) EXPECT_EQ(m.multiplicities[i], t.irreps[i].dim() / t.endo_dims[i]) << name;
    EXPECT_EQ(m.dim(), g->order());
  }
  auto s3 = build_stabilizer("S3");
  EXPECT_EQ(multiplicity(regular_rep(s3), irrep_table(s3)).multiplicities, (std::vector<int>{1, 1, 2}));
}

TEST(Multiplicity, AdditiveOverDirectSums) {
  std::mt19937_64 rng(7);
  for (const char* name : kTableGroups) {
    auto g = build_stabilizer(name);
    auto t = irrep_table(g);
    std::vector<Representation> pool = t.irreps;
    pool.push_back(regular_rep(g));
    pool.push_back(filter_space_rep(g, 3, trivial_rep(g)));
    for (int trial = 0; trial < 10; ++trial) {
      const auto& a = pool[rng() % pool.size()];
      const auto& b = pool[rng() % pool.size()];
      auto ma = multiplicity(a, t), mb = multiplicity(b, t), mab = multiplicity(direct_sum(a, b), t);
      for (int i = 0; i < t.size(); ++i) EXPECT_EQ(mab.multiplicities[i], ma.multiplicities[i] + mb.multiplicities[i]);
    }
  }
}

TEST(Multiplicity, ErrorsOnInconsistentTable) {
  auto d4 = build_stabilizer("D4");
  auto t = irrep_table(d4);
  t.characters[0][0] = 1.5;
  EXPECT_THROW(multiplicity(regular_rep(d4), t), RepresentationError);
  EXPECT_THROW(multiplicity(regular_rep(build_stabilizer("S3")), irrep_table(d4)), ContextError);
}

TEST(FilterSpaceRep, ShapesAndErrors) {
  auto d4 = build_stabilizer("D4");
  EXPECT_EQ(filter_space_rep(d4, 3, trivial_rep(d4)).dim(), 9);
  auto s3 = build_stabilizer("S3");
  EXPECT_EQ(filter_space_rep(s3, 3, trivial_rep(s3)).dim(), 27);
  EXPECT_THROW(filter_space_rep(d4, 4, trivial_rep(d4)), WindowError);
  auto e = irrep_table(d4).irreps[4];
  auto one = filter_space_rep(d4, 1, e);
  for (int h = 0; h < 8; ++h) EXPECT_EQ(one.matrix(h), e.matrix(h));
  // pi(h) psi (x) = psi(h^-1 x): a delta at cell u moves to h u
  auto pi = filter_space_rep(d4, 3, trivial_rep(d4));
  Box box(3, 2);
  const int r = d4->index_of("r");
  const int u = box.index({1, 0});
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(9);
  delta(u) = 1;
  Eigen::VectorXd moved = pi.apply(r, delta);
  EXPECT_EQ(moved(box.index({0, 1})), 1.0);
}

TEST(Isotypic, D4BlocksMatchPrintedOrder) {
  auto d4 = build_stabilizer("D4");
  auto t = irrep_table(d4);
  auto pi = filter_space_rep(d4, 3, trivial_rep(d4));
  auto dec = isotypic_decompose(pi, t);
  std::vector<int> order;
  for (const auto& b : dec.layout) order.push_back(b.irrep);
  EXPECT_EQ(order, (std::vector<int>{0, 0, 0, 2, 3, 4, 4}));
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(9, 9);
  expected.diagonal() << 1, 1, 1, -1, -1, 0, 0, 0, 0;
  expected.block(5, 5, 2, 2) = m2(0, -1, 1, 0);
  expected.block(7, 7, 2, 2) = m2(0, -1, 1, 0);
  const int r = d4->index_of("r");
  EXPECT_LE((dec.change_of_basis * pi.matrix(r) * dec.basis - expected).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Isotypic, ReassemblesEveryRepresentation) {
  for (const char* name : kTableGroups) {
    auto g = build_stabilizer(name);
    auto t = irrep_table(g);
    std::vector<Representation> reps{trivial_rep(g), regular_rep(g), filter_space_rep(g, 3, trivial_rep(g)),
                                     filter_space_rep(g, 3, regular_rep(g)), filter_space_rep(g, 3, t.irreps.back())};
    for (const auto& rep : reps) {
      auto dec = isotypic_decompose(rep, t);
      for (int h = 0; h < g->order(); ++h) {
        const Eigen::MatrixXd back = dec.basis * dec.block_diagonal(t, h) * dec.change_of_basis;
        EXPECT_LE((back - rep.matrix(h)).cwiseAbs().maxCoeff(), 1e-8) << name << " " << rep.label();
      }
    }
  }
}

TEST(Isotypic, S3FilterSpaceBlockCounts) {
  auto s3 = build_stabilizer("S3");
  auto dec = isotypic_decompose(filter_space_rep(s3, 3, trivial_rep(s3)), irrep_table(s3));
  std::vector<int> counts(3, 0);
  for (const auto& b : dec.layout) ++counts[b.irrep];
  EXPECT_EQ(counts, (std::vector<int>{10, 1, 8}));
}

TEST(Isotypic, TrivialRepIsItsOwnBlock) {
  auto c4 = build_stabilizer("C4");
  auto dec = isotypic_decompose(trivial_rep(c4), irrep_table(c4));
  ASSERT_EQ(dec.layout.size(), 1u);
  EXPECT_EQ(dec.change_of_basis(0, 0), 1.0);
}
