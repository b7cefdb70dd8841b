#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "circlebif/family.hpp"
#include "circlebif/family_json.hpp"
#include "circlebif/iterate.hpp"
#include "oracles.hpp"

using namespace circlebif;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::IoError;  // sentinel: nothing thrown
}

}  // namespace

TEST(Validate, RigidRotationHasUnitDerivative) {
  const auto rep = validate_diffeo(Family(families::rigid_rotation(0.37)));
  EXPECT_DOUBLE_EQ(rep.min_derivative, 1.0);
  EXPECT_TRUE(rep.ok);
}

TEST(Validate, ArnoldClosedFormMinimum) {
  const auto rep = validate_diffeo(Family(families::arnold_2p({0.0, 0.5, -0.5, 0.5})));
  EXPECT_NEAR(rep.min_derivative, 0.5, 1e-12);
  EXPECT_NEAR(rep.at_s, 0.5, 1e-15);
  EXPECT_TRUE(rep.ok);
  const auto bad = validate_diffeo(Family(families::arnold_2p({0.0, 1.2, -0.5, 0.5})));
  EXPECT_NEAR(bad.min_derivative, -0.2, 1e-12);
  EXPECT_FALSE(bad.ok);
}

TEST(Validate, GridPreconditions) {
  const Family fam(families::rigid_rotation(0.1));
  EXPECT_EQ(code_of([&] { validate_diffeo(fam, 128, 16); }), ErrorCode::PreconditionViolation);
  EXPECT_EQ(code_of([&] { validate_diffeo(fam, 256, 8); }), ErrorCode::PreconditionViolation);
}

TEST(Validate, StructuralErrors) {
  FamilySpec empty;
  EXPECT_EQ(code_of([&] { Family f(empty); }), ErrorCode::InvalidFamily);
  FamilySpec bad_box = families::rigid_theta();
  bad_box.box = {1.0, 0.0, -1.0, 1.0};
  EXPECT_EQ(code_of([&] { Family f(bad_box); }), ErrorCode::InvalidFamily);
  FamilySpec bad_mode;
  bad_mode.stages.emplace_back(FourierStage{Poly2{}, {{0, Poly2::constant(0.1), Poly2{}}}});
  EXPECT_EQ(code_of([&] { Family f(bad_mode); }), ErrorCode::InvalidFamily);
}

TEST(Family, LiftIsDegreeOneEquivariant) {
  std::vector<FamilySpec> specs{families::arnold_2p(), families::cusp_2p(), families::intersect_2p(),
                                build_lemma1_family({1, 3, 2, 0.05, 1.0, 64})};
  specs.push_back(conjugate_family(families::arnold_2p(), FourierStage{Poly2::constant(0.3), {{1, Poly2::constant(0.1), Poly2{}}}}));
  for (const auto& spec : specs) {
    const Family fam(spec);
    for (double x : {-2.3, -0.1, 0.0, 0.37, 0.99, 4.5}) {
      const double a = fam(x, 0.3, 0.05), b = fam(x + 1.0, 0.3, 0.05);
      EXPECT_NEAR(b - a, 1.0, 1e-12) << x;
    }
  }
}

TEST(Lemma1, RejectsDegenerateParameters) {
  EXPECT_EQ(code_of([] { build_lemma1_family({0, 1, 1, 0.0, 1.0, 64}); }), ErrorCode::DegenerateConstruction);
  EXPECT_EQ(code_of([] { build_lemma1_family({0, 1, 1, 0.05, 0.0, 64}); }), ErrorCode::DegenerateConstruction);
  EXPECT_EQ(code_of([] { build_lemma1_family({2, 4, 1, 0.05, 1.0, 64}); }), ErrorCode::PreconditionViolation);
}

TEST(Lemma1, FlowFieldIsInvariantUnderTheRotation) {
  for (auto [p, q, n] : std::vector<std::tuple<int, int, int>>{{0, 1, 1}, {1, 2, 2}, {1, 3, 3}, {2, 5, 1}}) {
    const auto spec = build_lemma1_family({p, q, n, 0.05, 1.0, 64});
    const auto& flow = std::get<FlowStage>(spec.stages.at(0).v);
    ASSERT_EQ(flow.field.size(), 1u);
    const double k = flow.field[0].k;
    const double amp = flow.field[0].amp_sin.eval(0.0, 0.0);
    for (int i = 0; i < 512; ++i) {
      const double x = i / 512.0;
      const double v0 = amp * std::sin(kTwoPi * k * x);
      const double v1 = amp * std::sin(kTwoPi * k * (x + static_cast<double>(p) / q));
      EXPECT_NEAR(v0, v1, 1e-12);
    }
    const Family fam(spec);
    EXPECT_TRUE(validate_diffeo(fam).ok);
    // The map commutes with the rotation by p/q.
    for (int i = 0; i < 64; ++i) {
      const double x = i / 64.0 + 0.003;
      EXPECT_NEAR(fam(x + static_cast<double>(p) / q, 0, 0), fam(x, 0, 0) + static_cast<double>(p) / q, 1e-12);
    }
  }
}

TEST(Lemma1, EquilibriumMultiplierMatchesFlowLinearization) {
  const Family fam(build_lemma1_family({0, 1, 1, 0.05, 1.0, 64}));
  const double d0 = fam.lift(Dual(0.0, 1.0), Dual(0.0), Dual(0.0)).d;
  const double dh = fam.lift(Dual(0.5, 1.0), Dual(0.0), Dual(0.0)).d;
  EXPECT_NEAR(d0, std::exp(0.05 * kTwoPi), 1e-8);
  EXPECT_NEAR(dh, std::exp(-0.05 * kTwoPi), 1e-8);
  EXPECT_NEAR(fam(0.0, 0, 0), 0.0, 1e-15);
  EXPECT_NEAR(fam(0.5, 0, 0), 0.5, 1e-15);
}

TEST(Homotopy, SmoothstepIdentities) {
  EXPECT_EQ(smoothstep(0.0), 0.0);
  EXPECT_EQ(smoothstep(1.0), 1.0);
  EXPECT_EQ(smoothstep_derivative(0.0), 0.0);
  EXPECT_EQ(smoothstep_derivative(1.0), 0.0);
  const double h = 1e-6;
  for (double s : {0.1, 0.4, 0.8})
    EXPECT_NEAR((smoothstep(s + h) - smoothstep(s - h)) / (2 * h), smoothstep_derivative(s), 1e-8);
}

TEST(Homotopy, ConstantHomotopyIsIndependentOfS) {
  const auto a = families::arnold_theta(0.5);
  const Family h(build_homotopy(a, a));
  const Family base(a);
  for (double s : {0.0, 0.3, 1.0})
    for (double x : {0.1, 0.6}) EXPECT_NEAR(h(x, s, 0.02), base(x, 0.0, 0.02), 1e-15);
}

TEST(Homotopy, EndpointsReproduceInputs) {
  const auto f0 = families::arnold_theta(0.5);
  const auto f1 = embed_theta_shift(build_lemma1_family({0, 1, 3, 0.05, 1.0, 64}));
  const Family h(build_homotopy(f0, f1));
  EXPECT_TRUE(h.depends_on_s());
  const Family a(f0), b(f1);
  for (double x : {0.05, 0.45, 0.8}) {
    EXPECT_NEAR(h(x, 0.0, 0.01), a(x, 0.0, 0.01), 1e-14);
    EXPECT_NEAR(h(x, 1.0, 0.01), b(x, 0.0, 0.01), 1e-14);
  }
  // s-derivative from jets equals sigma'(s) * (lift1 - lift0).
  const auto j = iterate_jet(h, 1, 0.3, 0.01, 0.2);
  EXPECT_NEAR(j.jet.ds(), smoothstep_derivative(0.3) * (b(0.2, 0, 0.01) - a(0.2, 0, 0.01)), 1e-12);
}

TEST(Homotopy, RejectsNonDiffeomorphicBlend) {
  // Two valid maps whose average folds: x + 0.9 sin-type bumps of opposite phase
  // are both fine, so build the failure from an endpoint instead.
  FamilySpec bad = families::arnold_theta(1.5);
  EXPECT_EQ(code_of([&] { build_homotopy(families::arnold_theta(0.5), bad); }), ErrorCode::NotDiffeomorphism);
  FamilySpec other_range = families::arnold_theta(0.5);
  other_range.box.theta_lo = -0.5;
  EXPECT_EQ(code_of([&] { build_homotopy(families::arnold_theta(0.5), other_range); }),
            ErrorCode::PreconditionViolation);
}

TEST(Conjugate, IdentityLeavesEvaluationsUnchanged) {
  const auto spec = families::arnold_2p();
  const Family a(spec), c(conjugate_family(spec, FourierStage{}));
  for (double x : {0.0, 0.2, 0.77})
    for (double s : {0.1, 0.9}) EXPECT_NEAR(c(x, s, 0.1), a(x, s, 0.1), 1e-13);
}

TEST(Conjugate, ShiftConjugacyRelation) {
  const auto spec = families::arnold_2p();
  const Family a(spec), c(conjugate_family(spec, FourierStage{Poly2::constant(0.3), {}}));
  for (double x : {0.0, 0.2, 0.77}) EXPECT_NEAR(c(x, 0.5, 0.1), a(x + 0.3, 0.5, 0.1) - 0.3, 1e-13);
}

TEST(Conjugate, InverseStageJetsMatchFiniteDifferences) {
  const FourierStage h{Poly2::constant(0.3), {{1, Poly2::constant(0.1), Poly2{}}}};
  const Family c(conjugate_family(families::arnold_2p(), h));
  auto f = [&](oracle::Real x, oracle::Real s, oracle::Real t) {
    return static_cast<oracle::Real>(c(static_cast<double>(x), static_cast<double>(s), static_cast<double>(t)));
  };
  const double x = 0.41, s = 0.6, t = 0.07;
  const auto j = iterate_jet(c, 1, s, t, x).jet;
  // Double-precision evaluations limit the oracle; use larger steps.
  const std::array<oracle::Real, 3> p{x, s, t};
  EXPECT_TRUE(oracle::close_rel(j.dx(), static_cast<double>(oracle::central_partial(f, p, {1, 0, 0}, 1e-4L)), 1e-7));
  EXPECT_TRUE(oracle::close_rel(j.ds(), static_cast<double>(oracle::central_partial(f, p, {0, 1, 0}, 1e-4L)), 1e-7));
  EXPECT_TRUE(oracle::close_rel(j.dxx(), static_cast<double>(oracle::central_partial(f, p, {2, 0, 0}, 1e-3L)), 1e-5));
  EXPECT_TRUE(oracle::close_rel(j.dxxx(), static_cast<double>(oracle::central_partial(f, p, {3, 0, 0}, 1e-2L)), 1e-3));
}

TEST(Conjugate, RejectsNonDiffeomorphicConjugator) {
  const FourierStage h{Poly2{}, {{1, Poly2::constant(0.5), Poly2{}}}};
  EXPECT_EQ(code_of([&] { conjugate_family(families::arnold_2p(), h); }), ErrorCode::NotDiffeomorphism);
}

TEST(Json, RoundTripsEveryStageKind) {
  const auto f0 = families::arnold_theta(0.5);
  const auto f1 = embed_theta_shift(build_lemma1_family({1, 2, 2, 0.05, 1.0, 32}));
  std::vector<FamilySpec> specs{families::intersect_2p(), build_homotopy(f0, f0),
                                conjugate_family(families::cusp_2p(), FourierStage{Poly2::constant(0.3), {}}), f1};
  for (const auto& spec : specs) {
    const Json j = to_json(spec);
    const FamilySpec back = family_from_json(parse_json_text(j.dump(), "test"));
    EXPECT_TRUE(back == spec);
    EXPECT_EQ(to_json(back).dump(), j.dump());
  }
}

TEST(Json, ExactRationalsSurvive) {
  const auto spec = build_lemma1_family({1, 3, 1, 0.05, 1.0, 64});
  const std::string text = to_json(spec).dump();
  EXPECT_NE(text.find("\"1/3\""), std::string::npos);
  const Family fam(family_from_json(parse_json_text(text, "t")));
  EXPECT_NEAR(fam(0.0, 0, 0), 1.0 / 3.0, 1e-15);
}

TEST(Json, ParseErrors) {
  EXPECT_EQ(code_of([] { parse_json_text("{", "x"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { family_from_json(parse_json_text("{}", "x")); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { family_from_json(parse_json_text(R"({"stages":[{"type":"spiral"}]})", "x")); }),
            ErrorCode::ParseError);
  EXPECT_EQ(code_of([] {
              family_from_json(parse_json_text(
                  R"({"stages":[{"type":"rotation","offsetPoly":{"terms":[{"i":0,"j":0,"coef":"2/4"}]}}]})", "x"));
            }),
            ErrorCode::ParseError);
}

TEST(Json, ShippedSamplesLoad) {
  for (const char* name : {"arnold2p", "cusp2p", "intersect2p", "rigid037"}) {
    const auto spec = load_family(std::string(CIRCLEBIF_SAMPLES_DIR) + "/families/" + name + ".json");
    EXPECT_NO_THROW(Family f(spec)) << name;
  }
}
