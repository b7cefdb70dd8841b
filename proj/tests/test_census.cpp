#include <gtest/gtest.h>

#include <cmath>

#include "circlebif/census.hpp"

using namespace circlebif;

namespace {

Family arnold() { return Family(families::arnold_2p({0.0, 1.0, -1.0, 1.0})); }

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::IoError;
}

// Number of sign changes of G on an independent dense grid.
int dense_sign_changes(const Family& fam, const Rational& pq, double s, double theta, int n) {
  int count = 0;
  double prev = displacement(fam, pq, s, theta, 0.0);
  const double first = prev;
  for (int i = 1; i <= n; ++i) {
    const double cur = i == n ? first : displacement(fam, pq, s, theta, static_cast<double>(i) / n);
    if ((cur < 0.0) != (prev < 0.0)) ++count;
    prev = cur;
  }
  return count;
}

}  // namespace

TEST(Census, ArnoldSourceAndSink) {
  const auto c = run_census(arnold(), {0.5, 0.0}, Rational(0, 1));
  ASSERT_EQ(c.orbits.size(), 2u);
  EXPECT_NEAR(c.orbits[0].points[0], 0.0, 1e-12);
  EXPECT_NEAR(c.orbits[0].multiplier, 1.5, 1e-12);
  EXPECT_EQ(c.orbits[0].kind, OrbitKind::source);
  EXPECT_NEAR(c.orbits[1].points[0], 0.5, 1e-12);
  EXPECT_NEAR(c.orbits[1].multiplier, 0.5, 1e-12);
  EXPECT_EQ(c.orbits[1].kind, OrbitKind::sink);
  EXPECT_EQ(c.sources_topological, 1);
  EXPECT_EQ(c.sinks_topological, 1);
  EXPECT_TRUE(c.all_hyperbolic);
  EXPECT_EQ(c.grid_used, 4096);
}

TEST(Census, RigidRationalIsNonIsolated) {
  EXPECT_EQ(code_of([] { run_census(Family(families::rigid_rotation(0.5)), {0, 0}, Rational(1, 2)); }),
            ErrorCode::NonIsolatedOrbits);
}

TEST(Census, NotAttainedAndGridPrecondition) {
  EXPECT_EQ(code_of([] { run_census(arnold(), {0.5, 0.2}, Rational(0, 1)); }), ErrorCode::RationalNotAttained);
  EXPECT_EQ(code_of([] { run_census(arnold(), {0.5, 0.0}, Rational(0, 1), 512); }),
            ErrorCode::PreconditionViolation);
}

TEST(Census, LemmaOneHalfTwoOrbits) {
  const Family fam(build_lemma1_family({1, 2, 2, 0.05, 1.0, 64}));
  const auto c = run_census(fam, {0, 0}, Rational(1, 2));
  EXPECT_EQ(c.orbits.size(), 4u);
  EXPECT_EQ(c.point_count(), 8u);
  EXPECT_EQ(c.sources_topological, 2);
  EXPECT_EQ(c.sinks_topological, 2);
  EXPECT_TRUE(c.all_hyperbolic);
  EXPECT_EQ(dense_sign_changes(fam, Rational(1, 2), 0, 0, 1 << 16), 8);
}

TEST(Census, LemmaFixedPointMultipliers) {
  const Family fam(build_lemma1_family({0, 1, 1, 0.05, 1.0, 64}));
  const auto c = run_census(fam, {0, 0}, Rational(0, 1));
  ASSERT_EQ(c.orbits.size(), 2u);
  EXPECT_NEAR(c.orbits[0].points[0], 0.0, 1e-12);
  EXPECT_EQ(c.orbits[0].kind, OrbitKind::source);
  EXPECT_NEAR(c.orbits[0].multiplier, std::exp(0.05 * kTwoPi), 1e-8);
  EXPECT_NEAR(c.orbits[1].points[0], 0.5, 1e-12);
  EXPECT_EQ(c.orbits[1].kind, OrbitKind::sink);
  EXPECT_NEAR(c.orbits[1].multiplier, std::exp(-0.05 * kTwoPi), 1e-8);
}

TEST(Census, TongueBoundaryIsSemistable) {
  const double s = 0.5;
  const auto c = run_census(arnold(), {s, s / kTwoPi}, Rational(0, 1));
  ASSERT_EQ(c.orbits.size(), 1u);
  EXPECT_EQ(c.orbits[0].kind, OrbitKind::parabolic_semistable);
  EXPECT_NEAR(c.orbits[0].points[0], 0.75, 1e-6);
  EXPECT_EQ(count_topological_sources(c), 0);
  EXPECT_FALSE(c.all_hyperbolic);
}

TEST(Census, CubicTangencyIsParabolicSource) {
  // x + theta + s sin 2 pi x + 0.1 sin 4 pi x at its cusp: G ~ (x - 1/2)^3.
  const Family fam(families::cusp_2p());
  const auto c = run_census(fam, {0.2, 0.0}, Rational(0, 1));
  bool found = false;
  for (const auto& o : c.orbits)
    if (std::abs(o.points[0] - 0.5) < 1e-6) {
      found = true;
      EXPECT_NE(o.kind, OrbitKind::parabolic_semistable);
    }
  EXPECT_TRUE(found);
}

TEST(Census, CountTopologicalSources) {
  using K = OrbitKind;
  EXPECT_EQ(count_topological_sources({K::source, K::sink}), 1);
  EXPECT_EQ(count_topological_sources({K::parabolic_semistable}), 0);
  EXPECT_EQ(count_topological_sources({K::source, K::sink, K::parabolic_source, K::sink}), 2);
}

TEST(Census, ConjugacyShiftsPositions) {
  const auto spec = families::arnold_2p({0.0, 1.0, -1.0, 1.0});
  const Family c(conjugate_family(spec, FourierStage{Poly2::constant(0.3), {}}));
  const auto a = run_census(arnold(), {0.5, 0.02}, Rational(0, 1));
  const auto b = run_census(c, {0.5, 0.02}, Rational(0, 1));
  ASSERT_EQ(a.orbits.size(), b.orbits.size());
  for (const auto& oa : a.orbits) {
    const double want = detail::wrap01(oa.points[0] - 0.3);
    bool matched = false;
    for (const auto& ob : b.orbits)
      if (detail::circle_dist(ob.points[0], want) < 1e-9) {
        matched = true;
        EXPECT_NEAR(ob.multiplier, oa.multiplier, 1e-9);
        EXPECT_EQ(ob.kind, oa.kind);
      }
    EXPECT_TRUE(matched);
  }
}

TEST(Census, ConjugacyByNonlinearMapPreservesMultipliers) {
  const auto spec = build_lemma1_family({1, 3, 1, 0.05, 1.0, 64});
  const Family a(spec);
  const Family c(conjugate_family(spec, FourierStage{Poly2::constant(0.3), {{1, Poly2::constant(0.1), Poly2{}}}}));
  const auto ca = run_census(a, {0, 0}, Rational(1, 3));
  const auto cc = run_census(c, {0, 0}, Rational(1, 3));
  ASSERT_EQ(ca.orbits.size(), cc.orbits.size());
  std::vector<double> ma, mc;
  for (const auto& o : ca.orbits) ma.push_back(o.multiplier);
  for (const auto& o : cc.orbits) mc.push_back(o.multiplier);
  std::sort(ma.begin(), ma.end());
  std::sort(mc.begin(), mc.end());
  for (std::size_t i = 0; i < ma.size(); ++i) EXPECT_NEAR(ma[i], mc[i], 1e-8);
}

TEST(Census, InvariantsOnLemmaFamilies) {
  for (auto [p, q, n] : std::vector<std::tuple<int, int, int>>{{0, 1, 1}, {1, 2, 2}, {1, 3, 3}, {2, 5, 1}}) {
    const Family fam(build_lemma1_family({p, q, n, 0.05, 1.0, 64}));
    const Rational pq(p, q);
    const auto c = run_census(fam, {0, 0}, pq);
    EXPECT_EQ(static_cast<int>(c.orbits.size()), 2 * n);
    EXPECT_EQ(c.sources_topological, n);
    EXPECT_TRUE(c.all_hyperbolic);
    for (const auto& o : c.orbits) {
      ASSERT_EQ(static_cast<int>(o.points.size()), q);
      EXPECT_LT(o.residual, 1e-10);
      double chain = 1.0;
      for (double x : o.points) chain *= fam.lift(Dual(x, 1.0), Dual(0.0), Dual(0.0)).d;
      EXPECT_NEAR(o.multiplier, chain, 1e-9);
      for (double x : o.points) EXPECT_NEAR(displacement_dx(fam, pq, 0, 0, x).d + 1.0, o.multiplier, 1e-9);
    }
    CensusOptions twice;
    twice.grid_m = 2 * c.grid_used;
    EXPECT_EQ(run_census(fam, {0, 0}, pq, twice).orbits.size(), c.orbits.size());
  }
}
