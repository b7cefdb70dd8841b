#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>

#include "circlebif/invariants.hpp"

using namespace circlebif;

namespace {

constexpr double kPi = std::numbers::pi;

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::IoError;
}

FamilySpec lemma_theta(int n) {
  Lemma1Params p;
  p.n = n;
  return embed_theta_shift(build_lemma1_family(p));
}

FourierStage warp() {
  FourierStage h;
  h.offset = Poly2::constant(0.3);
  h.modes.push_back({1, Poly2::constant(0.1 / (2 * kPi)), Poly2{}});
  return h;
}

}  // namespace

TEST(Invariants, ArnoldHasOneSourceInsideAndNoneAtTheEnds) {
  const Family fam(families::arnold_theta(0.5));
  const auto r = max_sources_at_rational(fam, Rational(0, 1), 64);
  EXPECT_EQ(r.a, 1);
  EXPECT_EQ(r.b, 1);
  ASSERT_EQ(r.tongue_intervals.size(), 1u);
  EXPECT_NEAR(r.tongue_intervals[0].lo, -0.5 / (2 * kPi), 1e-10);
  EXPECT_NEAR(r.tongue_intervals[0].hi, 0.5 / (2 * kPi), 1e-10);
  ASSERT_EQ(r.samples, 66);
  ASSERT_EQ(r.sample_counts.size(), 66u);
  EXPECT_EQ(r.sample_counts.front().sources, 0);
  EXPECT_EQ(r.sample_counts.back().sources, 0);
  for (std::size_t i = 1; i + 1 < r.sample_counts.size(); ++i) EXPECT_EQ(r.sample_counts[i].sources, 1);
}

TEST(Invariants, LemmaEmbeddingReachesItsTarget) {
  for (int n : {1, 2, 3}) {
    const auto r = max_sources_at_rational(Family(lemma_theta(n)), Rational(0, 1), 64);
    EXPECT_EQ(r.a, n) << "N = " << n;
    EXPECT_EQ(r.b, n % 2);
    int best = 0;
    for (const auto& smp : r.sample_counts) best = std::max(best, smp.sources);
    EXPECT_EQ(best, r.a);
  }
}

TEST(Invariants, RigidRotationIsNonGeneric) {
  EXPECT_EQ(code_of([] { max_sources_at_rational(Family(families::rigid_theta()), Rational(1, 2), 64); }),
            ErrorCode::NonGenericFamily);
}

TEST(Invariants, PreconditionsAndErrors) {
  const Family arnold(families::arnold_theta(0.5));
  EXPECT_EQ(code_of([&] { max_sources_at_rational(arnold, Rational(0, 1), 63); }), ErrorCode::PreconditionViolation);
  EXPECT_EQ(code_of([] { max_sources_at_rational(Family(families::rigid_rotation(0.2)), Rational(0, 1), 64); }),
            ErrorCode::MonotonicityUnverified);
  FamilySpec narrow = families::arnold_theta(0.5);
  narrow.box = {0.0, 1.0, 0.2, 0.3};
  EXPECT_EQ(code_of([&] { max_sources_at_rational(Family(narrow), Rational(0, 1), 64); }),
            ErrorCode::RationalNotAttained);
}

TEST(Invariants, ParityRecordIsConjugacyInvariant) {
  const FamilySpec base = families::arnold_theta(0.5);
  const Family a(base);
  const Family b(conjugate_family(base, warp()));
  for (const Rational& pq : {Rational(0, 1), Rational(1, 2)}) {
    const auto ra = max_sources_at_rational(a, pq, 64);
    const auto rb = max_sources_at_rational(b, pq, 64);
    EXPECT_EQ(ra.a, rb.a);
    EXPECT_EQ(ra.b, rb.b);
    EXPECT_NEAR(ra.tongue_intervals[0].width(), rb.tongue_intervals[0].width(), 1e-6);
  }
}

TEST(Invariants, ParityPrefixDiff) {
  const Family arnold(families::arnold_theta(0.5));
  const std::vector<Rational> pqs{Rational(0, 1), Rational(1, 2)};
  EXPECT_FALSE(parity_prefix_diff(arnold, arnold, pqs, 64).index.has_value());

  const auto d = parity_prefix_diff(arnold, Family(lemma_theta(2)), pqs, 64);
  ASSERT_TRUE(d.index.has_value());
  EXPECT_EQ(*d.index, 0u);
  EXPECT_EQ(d.records_a[0]->a, 1);
  EXPECT_EQ(d.records_b[0]->a, 2);

  const Family conj(conjugate_family(families::arnold_theta(0.5), warp()));
  const auto c = parity_prefix_diff(arnold, conj, pqs, 64);
  EXPECT_FALSE(c.index.has_value());
  EXPECT_TRUE(c.skipped.empty());

  FamilySpec narrow = families::arnold_theta(0.5);
  narrow.box = {0.0, 1.0, -0.2, 0.2};  // excludes the 1/2 tongue
  const auto sk = parity_prefix_diff(arnold, Family(narrow), pqs, 64);
  EXPECT_FALSE(sk.index.has_value());
  ASSERT_EQ(sk.skipped.size(), 1u);
  EXPECT_EQ(sk.skipped[0], 1u);
  EXPECT_FALSE(sk.records_b[1].has_value());

  EXPECT_EQ(code_of([&] { parity_prefix_diff(arnold, arnold, {}, 64); }), ErrorCode::PreconditionViolation);
}

TEST(Invariants, ConstantHomotopyScanIsFlat) {
  const FamilySpec f = families::arnold_theta(0.5);
  const auto scan = section_scan(Family(build_homotopy(f, f)), Rational(0, 1), 32, 64);
  ASSERT_EQ(scan.s_grid.size(), 33u);
  for (const auto& v : scan.a_of_s) {
    ASSERT_TRUE(v.has_value());
    EXPECT_EQ(*v, 1);
  }
  EXPECT_TRUE(scan.unit_increments_ok);
  EXPECT_EQ(scan.refinements, 0);
}

TEST(Invariants, HomotopyToLemmaClimbsByOne) {
  const Family hom(build_homotopy(families::arnold_theta(0.5), lemma_theta(3)));
  const auto scan = section_scan(hom, Rational(0, 1), 40, 64);
  EXPECT_TRUE(scan.unit_increments_ok);
  std::vector<bool> seen(4, false);
  for (const auto& v : scan.a_of_s) {
    ASSERT_TRUE(v.has_value());
    ASSERT_GE(*v, 0);
    ASSERT_LE(*v, 3);
    seen[*v] = true;
  }
  EXPECT_TRUE(seen[1] && seen[2] && seen[3]);
  EXPECT_EQ(*scan.a_of_s.front(), 1);
  EXPECT_EQ(*scan.a_of_s.back(), 3);
}

TEST(Invariants, SectionsOutsideTheTongueAreAbsent) {
  // Blending x + theta + c sin 2 pi x from c > 0 to c < 0 passes through the
  // rigid rotation, whose 0/1 tongue is theta = 0 and lies outside the box.
  FamilySpec f0 = families::arnold_theta(0.5);
  FamilySpec f1 = families::arnold_theta(-0.5);
  f0.box = f1.box = {0.0, 1.0, 0.01, 0.2};
  const auto scan = section_scan(Family(build_homotopy(f0, f1)), Rational(0, 1), 32, 64);
  ASSERT_TRUE(scan.a_of_s.front().has_value());
  ASSERT_TRUE(scan.a_of_s.back().has_value());
  EXPECT_FALSE(scan.a_of_s[16].has_value());
  EXPECT_TRUE(scan.unit_increments_ok);
}

TEST(Invariants, JumpDetectionSkipsAbsentValues) {
  EXPECT_TRUE(detail::jumps({1, std::nullopt, 2, 3}).empty());
  const auto j = detail::jumps({1, std::nullopt, 3, 3});
  ASSERT_EQ(j.size(), 1u);
  EXPECT_EQ(j[0], std::make_pair(std::size_t{0}, std::size_t{2}));
  EXPECT_EQ(code_of([] {
              const FamilySpec f = families::arnold_theta(0.5);
              section_scan(Family(build_homotopy(f, f)), Rational(0, 1), 31, 64);
            }),
            ErrorCode::PreconditionViolation);
}

TEST(Invariants, ResultsDoNotDependOnThreadCount) {
  const Family fam(lemma_theta(2));
  set_thread_count(1);
  const auto a = max_sources_at_rational(fam, Rational(0, 1), 64);
  set_thread_count(3);
  const auto b = max_sources_at_rational(fam, Rational(0, 1), 64);
  set_thread_count(0);
  EXPECT_TRUE(a == b);
}
