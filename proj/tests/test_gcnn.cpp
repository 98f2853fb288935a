#include <gtest/gtest.h>

#include <random>

#include "eqnn/gcnn.hpp"
#include "oracles.hpp"

using namespace eqnn;

namespace {

GFeatureMap random_gmap(const GroupPtr& g, int window, int channels, std::mt19937_64& rng, bool integer = false) {
  GFeatureMap f(g, Box(window, g->dim()), Boundary::Cyclic, channels);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> ui(-20, 20);
  for (auto& v : f.data) v = integer ? ui(rng) : u(rng);
  return f;
}

FeatureMap random_planar(const GroupPtr& g, int window, int channels, std::mt19937_64& rng) {
  FeatureMap f(Box(window, g->dim()), Boundary::Cyclic, trivial_fiber(g, channels));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& v : f.data) v = u(rng);
  return f;
}

SemidirectElement random_element(const StabilizerGroup& g, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> t(-3, 3), s(0, g.order() - 1);
  IntVec tr(g.dim());
  for (auto& c : tr) c = t(rng);
  return {tr, s(rng)};
}

/// psi evaluated at an arbitrary offset, zero outside its box.
double filter_value(const GFilter& psi, int ko, int ki, int s, const IntVec& p) {
  const int u = psi.box.index(p);
  return u < 0 ? 0.0 : psi.at(ko, ki, s, u);
}

/// sum_y sum_s f(k, s, y) psi(k', k, h^-1 s, h^-1 (y - x)) over the whole group.
GFeatureMap direct_group_correlation(const GFeatureMap& f, const GFilter& psi) {
  const auto& g = *f.group;
  GFeatureMap out(f.group, f.window, f.boundary, psi.out_channels);
  for (int ko = 0; ko < psi.out_channels; ++ko)
    for (int h = 0; h < g.order(); ++h) {
      const auto& m = g.action().point_maps[g.inv(h)];
      for (int x = 0; x < f.cells(); ++x) {
        const IntVec px = f.window.offset(x);
        double acc = 0.0;
        for (int y = 0; y < f.cells(); ++y) {
          const IntVec py = f.window.offset(y);
          IntVec d(px.size());
          for (std::size_t i = 0; i < d.size(); ++i) d[i] = oracle::centred_mod(py[i] - px[i], f.window.size);
          const IntVec r = m.apply(d);
          for (int ki = 0; ki < f.channels; ++ki)
            for (int s = 0; s < g.order(); ++s)
              acc += f.at(ki, s, y) * filter_value(psi, ko, ki, psi.stab_in == 1 ? 0 : g.mul(g.inv(h), s), r);
        }
        out.at(ko, h, x) = acc;
      }
    }
  return out;
}

GFeatureMap lift(const FeatureMap& f, const GroupPtr& g) {
  // a planar map seen as a G-map constant along the stabilizer axis, restricted to s = e
  GFeatureMap out(g, f.window, f.boundary, f.channels());
  for (int k = 0; k < f.channels(); ++k)
    for (int x = 0; x < f.cells(); ++x) out.at(k, g->identity(), x) = f.at(k, x);
  return out;
}

}  // namespace

TEST(GFeatureMap, SteerableRoundTrip) {
  auto g = build_stabilizer("D4");
  std::mt19937_64 rng(1);
  auto f = random_gmap(g, 5, 3, rng);
  auto s = to_steerable(f);
  EXPECT_EQ(s.fiber.describe(), "3xregular");
  EXPECT_EQ(from_steerable(s).data, f.data);
  EXPECT_THROW(from_steerable(FeatureMap(Box(3, 2), Boundary::Cyclic, trivial_fiber(g, 8))), ShapeError);
}

TEST(GFeatureMap, GroupActionMatchesInducedRegularAction) {
  std::mt19937_64 rng(2);
  for (const char* name : {"C4", "D4", "S2", "S3"}) {
    auto g = build_stabilizer(name);
    auto f = random_gmap(g, g->dim() == 3 ? 3 : 5, 2, rng);
    for (int trial = 0; trial < 8; ++trial) {
      const auto a = random_element(*g, rng);
      EXPECT_EQ(to_steerable(transform_g(a, f)).data, transform_induced(*g, a, to_steerable(f)).data) << name;
    }
  }
}

TEST(GConv, FirstLayerMatchesDirectCorrelation) {
  std::mt19937_64 rng(3);
  for (const char* name : {"C4", "D4", "S3"}) {
    auto g = build_stabilizer(name);
    const int w = g->dim() == 3 ? 3 : 5;
    auto f = random_planar(g, w, 2, rng);
    GFilter psi(2, 2, 1, Box(3, g->dim()));
    psi.randomize(rng);
    auto fast = gconv_first(f, psi, g);
    auto slow = direct_group_correlation(lift(f, g), psi);
    EXPECT_LT(oracle::max_abs_diff(fast.data, slow.data), 1e-12) << name;
  }
}

TEST(GConv, IdentitySliceIsPlanarConvolution) {
  auto g = build_stabilizer("D4");
  std::mt19937_64 rng(4);
  auto f = random_planar(g, 7, 1, rng);
  GFilter psi(1, 1, 1, Box(3, 2));
  psi.randomize(rng);
  AssembledFilterBank bank;
  bank.in = bank.out = trivial_fiber(g, 1);
  bank.size = 3;
  bank.cells = 9;
  bank.kernel = Eigen::Map<const Eigen::MatrixXd>(psi.data.data(), 1, 9);
  auto planar = convolve(f, bank);
  auto full = gconv_first(f, psi, g);
  for (int x = 0; x < f.cells(); ++x) EXPECT_EQ(full.at(0, g->identity(), x), planar.at(0, x));
}

TEST(GConv, HigherLayerMatchesDirectCorrelation) {
  std::mt19937_64 rng(5);
  for (const char* name : {"C4", "D4", "S3"}) {
    auto g = build_stabilizer(name);
    auto f = random_gmap(g, g->dim() == 3 ? 3 : 5, 2, rng);
    GFilter psi(2, 2, g->order(), Box(3, g->dim()));
    psi.randomize(rng);
    EXPECT_LT(oracle::max_abs_diff(gconv_higher(f, psi).data, direct_group_correlation(f, psi).data), 1e-12) << name;
  }
}

TEST(GConv, LayersAreEquivariant) {
  std::mt19937_64 rng(6);
  for (const char* name : {"C4", "D4", "S2", "S3"}) {
    auto g = build_stabilizer(name);
    const int w = g->dim() == 3 ? 5 : 7;
    auto f = random_planar(g, w, 1, rng);
    auto fg = random_gmap(g, w, 2, rng);
    GFilter psi1(2, 1, 1, Box(3, g->dim())), psi2(2, 2, g->order(), Box(3, g->dim()));
    psi1.randomize(rng);
    psi2.randomize(rng);
    const auto y1 = gconv_first(f, psi1, g);
    const auto y2 = gconv_higher(fg, psi2);
    for (int trial = 0; trial < 6; ++trial) {
      const auto a = random_element(*g, rng);
      EXPECT_LT(oracle::max_abs_diff(gconv_first(transform_input(*g, a, f), psi1, g).data, transform_g(a, y1).data), 1e-12)
          << name;
      EXPECT_LT(oracle::max_abs_diff(gconv_higher(transform_g(a, fg), psi2).data, transform_g(a, y2).data), 1e-12) << name;
    }
  }
}

TEST(GConv, ExpandedBankIsEquivariantAndReproducesLayers) {
  std::mt19937_64 rng(7);
  for (const char* name : {"C4", "D4", "S3"}) {
    auto g = build_stabilizer(name);
    const int w = g->dim() == 3 ? 3 : 5;
    GFilter psi1(2, 1, 1, Box(3, g->dim())), psi2(1, 2, g->order(), Box(3, g->dim()));
    psi1.randomize(rng);
    psi2.randomize(rng);
    const auto b1 = expand_filter_bank(psi1, g), b2 = expand_filter_bank(psi2, g);
    EXPECT_LT(bank_constraint_residual(b1), 1e-12) << name;
    EXPECT_LT(bank_constraint_residual(b2), 1e-12) << name;
    auto f = random_planar(g, w, 1, rng);
    auto fg = random_gmap(g, w, 2, rng);
    EXPECT_LT(oracle::max_abs_diff(convolve(f, b1).data, to_steerable(gconv_first(f, psi1, g)).data), 1e-12);
    EXPECT_LT(oracle::max_abs_diff(convolve(to_steerable(fg), b2).data, to_steerable(gconv_higher(fg, psi2)).data), 1e-12);
  }
}

TEST(GConv, ShapeErrors) {
  auto g = build_stabilizer("C4");
  std::mt19937_64 rng(8);
  GFilter planar(1, 2, 1, Box(3, 2)), group(1, 1, 4, Box(3, 2));
  EXPECT_THROW(gconv_first(random_planar(g, 5, 1, rng), planar, g), ShapeError);
  EXPECT_THROW(gconv_first(random_planar(g, 5, 1, rng), group, g), ShapeError);
  EXPECT_THROW(gconv_higher(random_gmap(g, 5, 1, rng), planar), ShapeError);
}

TEST(GPooling, GroupPoolIsEquivariant) {
  std::mt19937_64 rng(9);
  for (const char* name : {"C4", "D4", "S3"}) {
    auto g = build_stabilizer(name);
    const int w = g->dim() == 3 ? 5 : 7;
    auto f = random_gmap(g, w, 2, rng, true);
    PoolNeighbourhood u;
    const Box b(3, g->dim());
    for (int i = 0; i < b.count(); ++i) u.elements.push_back({b.offset(i), 0});
    u.elements.push_back({IntVec(g->dim(), 0), 1});
    const auto pf = group_pool(f, u);
    for (int trial = 0; trial < 6; ++trial) {
      const auto a = random_element(*g, rng);
      EXPECT_EQ(group_pool(transform_g(a, f), u).data, transform_g(a, pf).data) << name;
    }
  }
}

TEST(GPooling, GroupPoolValues) {
  auto g = build_stabilizer("C4");
  GFeatureMap f(g, Box(3, 2), Boundary::Cyclic, 1);
  f.at(0, 1, f.window.index({1, 0})) = 7.0;
  // U = {(0, e), ((1,0), e)}: Pf(x, h) = max(f(x, h), f(x + h (1,0), h))
  PoolNeighbourhood u{{{{0, 0}, 0}, {{1, 0}, 0}}};
  auto p = group_pool(f, u);
  const IntVec r10 = g->action().act(1, {1, 0});
  EXPECT_EQ(p.at(0, 1, f.window.wrap_index({1 - r10[0], -r10[1]})), 7.0);
  EXPECT_EQ(p.at(0, 1, f.window.index({1, 0})), 7.0);
  EXPECT_EQ(p.at(0, 0, f.window.index({0, 0})), 0.0);
  EXPECT_THROW(group_pool(f, PoolNeighbourhood{}), ShapeError);
}

TEST(GPooling, CosetPoolMatchesQuotientPool) {
  std::mt19937_64 rng(10);
  for (auto [name, sub] : {std::pair{"D4", "C4"}, std::pair{"S3", "A3"}, std::pair{"C4", "C2"}, std::pair{"D4", "M"}}) {
    auto g = build_stabilizer(name);
    const auto k = parse_subgroup(*g, sub);
    auto f = random_gmap(g, g->dim() == 3 ? 3 : 5, 2, rng, true);
    const auto pooled = coset_pool(f, k);
    EXPECT_EQ(pooled.data, quotient_pool(to_steerable(f), k).map.data) << name;
    for (int trial = 0; trial < 6; ++trial) {
      const auto a = random_element(*g, rng);
      EXPECT_EQ(coset_pool(transform_g(a, f), k).data, transform_induced(*g, a, pooled).data) << name << "/" << sub;
    }
  }
}

TEST(GcnnEquivalence, TwoLayerNetworksAgree) {
  for (const char* name : {"C4", "D4", "S2", "S3"}) {
    auto g = build_stabilizer(name);
    const auto r = gcnn_equivalence(g, 11, g->dim() == 3 ? 5 : 7);
    EXPECT_LT(r.first_layer, 1e-9) << name;
    EXPECT_LT(r.residual, 1e-9) << name;
    EXPECT_EQ(r.parameters_gcnn, r.parameters_steerable) << name;
  }
}

TEST(GConv, ExpandedCopiesAreRotatedFilters) {
  auto g = build_stabilizer("C4");
  std::mt19937_64 rng(12);
  GFilter psi(1, 1, 1, Box(3, 2));
  psi.randomize(rng);
  const auto bank = expand_filter_bank(psi, g);
  // copy r^k holds the base filter turned k quarter turns counterclockwise
  std::vector<double> turned = psi.data;
  for (int k = 0; k < 4; ++k) {
    const int h = g->index_of(k == 0 ? "e" : k == 1 ? "r" : "r^" + std::to_string(k));
    for (int u = 0; u < 9; ++u) EXPECT_EQ(bank.at(h, 0, u), turned[u]) << "copy " << k << " cell " << u;
    std::vector<double> next(9);
    for (int u = 0; u < 9; ++u) {
      const IntVec p = psi.box.offset(u);
      next[psi.box.index({-p[1], p[0]})] = turned[u];
    }
    turned = next;
  }
}

TEST(GConv, S2SecondCopyIsDiagonalReflection) {
  auto g = build_stabilizer("S2");
  std::mt19937_64 rng(13);
  GFilter psi(1, 1, 1, Box(3, 2));
  psi.randomize(rng);
  const auto bank = expand_filter_bank(psi, g);
  for (int u = 0; u < 9; ++u) {
    const IntVec p = psi.box.offset(u);
    EXPECT_EQ(bank.at(0, 0, u), psi.data[u]);
    EXPECT_EQ(bank.at(1, 0, u), psi.data[psi.box.index({p[1], p[0]})]);
  }
}
