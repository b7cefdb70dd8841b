// End-to-end acceptance suite: one PASS/FAIL line per criterion, nonzero exit
// status if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "circlebif/bifurcation.hpp"
#include "circlebif/invariants.hpp"
#include "diagram_oracle.hpp"
#include "oracles.hpp"

using namespace circlebif;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool ok = true;
  std::ostringstream detail;

  // Records the first failure message only; later ones rarely add information.
  void check(bool cond, const std::string& what) {
    if (!cond && ok) detail << what << "; ";
    ok = ok && cond;
  }
};

// ---- 1 ----------------------------------------------------------------------

void jet_correctness(Outcome& o) {
  const Family fam(families::arnold_2p({0.0, 1.0, -1.0, 1.0}));
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> us(0.05, 0.95), ut(-0.5, 0.5), ux(0.0, 1.0);
  const std::array<std::array<int, 3>, 8> orders{
      {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}, {1, 0, 1}}};
  double worst12 = 0.0, worst3 = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const double s = us(rng), th = ut(rng), x = ux(rng);
    const std::array<oracle::Real, 3> p{x, s, th};
    for (int q = 1; q <= 5; ++q) {
      const auto it = iterate_jet(fam, q, s, th, x);
      auto f = [q](oracle::Real xx, oracle::Real ss, oracle::Real tt) { return oracle::arnold_iterate(q, xx, ss, tt); };
      for (const auto& ord : orders) {
        const int total = ord[0] + ord[1] + ord[2];
        const double want = total == 0 ? static_cast<double>(f(p[0], p[1], p[2]))
                                       : static_cast<double>(oracle::central_partial(f, p, ord, oracle::default_step(total)));
        const double got = total == 0 ? it.jet.value() : it.jet.partial(ord[0], ord[1], ord[2]);
        const double err = std::abs(got - want) / std::max(1.0, std::abs(want));
        (total == 3 ? worst3 : worst12) = std::max(total == 3 ? worst3 : worst12, err);
      }
    }
  }
  o.check(worst12 < 1e-4, "first/second order error too large");
  o.check(worst3 < 1e-3, "third order error too large");
  o.detail << "max rel err " << worst12 << " (order<=2), " << worst3 << " (order 3)";
}

// ---- 2 ----------------------------------------------------------------------

void rotation_numbers(Outcome& o) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> ua(-0.9, 0.9);
  double worst_rigid = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double a = ua(rng);
    const auto est = estimate_rho(Family(families::rigid_rotation(a)), {0.0, 0.0}, 10000);
    worst_rigid = std::max(worst_rigid, std::abs(est.value - a));
  }
  o.check(worst_rigid < 1e-9, "rigid rotation number off");

  const FamilySpec spec = families::arnold_2p({0.0, 1.0, -1.0, 1.0});
  const Family arnold(spec);
  int monotone_violations = 0;
  for (double s : {0.3, 0.8, 1.0}) {
    auto prev = estimate_rho(arnold, {s, -0.5}, 20000);
    for (int i = 1; i <= 40; ++i) {
      const auto cur = estimate_rho(arnold, {s, -0.5 + i * 0.025}, 20000);
      if (prev.value > cur.value + prev.error_bound + cur.error_bound) ++monotone_violations;
      prev = cur;
    }
  }
  o.check(monotone_violations == 0, "estimate decreased in theta");

  const Family conj(conjugate_family(spec, FourierStage{Poly2::constant(0.3), {{1, Poly2::constant(0.1), Poly2{}}}}));
  std::uniform_real_distribution<double> us(0.0, 0.95), ut(-1.0, 1.0);
  int conj_violations = 0;
  for (int i = 0; i < 20; ++i) {
    const ParamPoint p{us(rng), ut(rng)};
    const auto a = estimate_rho(arnold, p, 20000), c = estimate_rho(conj, p, 20000);
    if (std::abs(a.value - c.value) > a.error_bound + c.error_bound + 1e-12) ++conj_violations;
  }
  o.check(conj_violations == 0, "conjugate estimates disagree");
  o.detail << "rigid max err " << worst_rigid << ", monotonicity violations " << monotone_violations
           << ", conjugacy violations " << conj_violations;
}

// ---- 3 ----------------------------------------------------------------------

void closed_form_tongue(Outcome& o) {
  const Family fam(families::arnold_2p({0.1, 1.0, -0.5, 0.5}));
  const Rational zero(0, 1);
  double worst_solve = 0.0;
  for (double s : {0.2, 0.5, 0.9}) {
    // theta = -s / 2 pi at x = 1/4 and theta = +s / 2 pi at x = 3/4.
    for (double sign : {-1.0, 1.0}) {
      const double x_star = sign < 0 ? 0.25 : 0.75;
      const auto p = solve_saddle_node(fam, zero, {s, 0.0, x_star + 0.03}, Frozen::s_fixed());
      worst_solve = std::max({worst_solve, std::abs(p.theta - sign * s / (2 * kPi)), std::abs(p.x - x_star)});
    }
  }
  o.check(worst_solve < 1e-8, "saddle-node solve off the closed form");

  const auto seed = solve_saddle_node(fam, zero, {0.5, 0.0, 0.75}, Frozen::s_fixed());
  const auto curve = trace_curve(fam, zero, {seed.s, seed.theta, seed.x});
  double worst_line = 0.0, s_min = 1.0, s_max = 0.0;
  for (const auto& p : curve.points) {
    worst_line = std::max(worst_line, std::abs(p.theta - p.s / (2 * kPi)));
    s_min = std::min(s_min, p.s);
    s_max = std::max(s_max, p.s);
  }
  o.check(worst_line < 1e-6, "traced curve leaves the line");
  o.check(std::abs(s_min - 0.1) < 1e-9 && std::abs(s_max - 1.0) < 1e-9, "traced curve does not span s in [0.1, 1]");
  o.detail << "solve max err " << worst_solve << ", trace max deviation " << worst_line << " over s in [" << s_min << ", "
           << s_max << "] (" << curve.points.size() << " points)";
}

// ---- 4 ----------------------------------------------------------------------

void lemma_construction(Outcome& o) {
  double slowest = 0.0;
  double worst_mult = 0.0;
  for (auto [p, q, n] : std::vector<std::tuple<int, int, int>>{{0, 1, 1}, {1, 2, 2}, {1, 3, 3}, {2, 5, 1}}) {
    const auto t0 = std::chrono::steady_clock::now();
    Lemma1Params prm;
    prm.p = p;
    prm.q = q;
    prm.n = n;
    prm.delta = 0.05;
    prm.amplitude = 1.0;
    const Family fam(build_lemma1_family(prm));
    const Rational pq(p, q);
    const auto c = run_census(fam, {0.0, 0.0}, pq);
    const std::string tag = pq.str() + " N=" + std::to_string(n) + ": ";
    o.check(static_cast<int>(c.orbits.size()) == 2 * n, tag + "wrong orbit count");
    o.check(c.sources_topological == n, tag + "wrong source count");
    o.check(c.all_hyperbolic, tag + "not all hyperbolic");
    const auto rho = detect_rational(fam, {0.0, 0.0});
    o.check(rho && *rho == pq, tag + "rotation number not p/q");
    if (q == 1) {
      // v(x) = A sin(2 pi q N x), so v'(x*) = 2 pi q N A cos(2 pi q N x*).
      for (const auto& orb : c.orbits) {
        const double vprime = 2 * kPi * q * n * std::cos(2 * kPi * q * n * orb.points[0]);
        worst_mult = std::max(worst_mult, std::abs(orb.multiplier - std::exp(0.05 * vprime)));
      }
    }
    slowest = std::max(slowest, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  o.check(worst_mult < 1e-8, "fixed-point multipliers off");
  o.check(slowest < 10.0, "a case took longer than 10 s");
  o.detail << "4 cases, multiplier max err " << worst_mult << ", slowest case " << slowest << " s";
}

// ---- 5 ----------------------------------------------------------------------

void cusp_detection(Outcome& o) {
  const Family cusp(families::cusp_2p());
  const auto d = assemble_diagram(cusp, Rational(0, 1));
  o.check(d.cusps.size() == 1, "expected exactly one cusp");
  if (d.cusps.size() == 1) {
    const auto& c = d.cusps[0];
    const double err = std::max({std::abs(c.s - 0.2), std::abs(c.theta), std::abs(c.x - 0.5)});
    o.check(err < 1e-8, "cusp location off");
    o.check(std::abs(c.gxxx) > 1e-3 && std::abs(c.cusp_cond) > 1e-3, "cusp is degenerate");
    o.detail << "cusp err " << err << ", |Gxxx| " << std::abs(c.gxxx) << ", |cusp cond| " << std::abs(c.cusp_cond);
  }
  const Family arnold(families::arnold_2p({0.1, 1.0, -0.5, 0.5}));
  const auto da = assemble_diagram(arnold, Rational(0, 1));
  // Seed the cusp solver from every traced point as well.
  std::vector<Vec3> seeds;
  for (const auto& c : da.curves)
    for (const auto& p : c.points) seeds.push_back({p.s, p.theta, p.x});
  const auto extra = find_cusps(arnold, Rational(0, 1), seeds);
  o.check(da.cusps.empty() && extra.empty(), "Arnold family reported a cusp");
  o.detail << ", Arnold cusps " << da.cusps.size() + extra.size() << " from " << seeds.size() << " seeds";
}

// ---- 6 ----------------------------------------------------------------------

FamilySpec lemma_theta(int n) {
  Lemma1Params p;
  p.n = n;
  return embed_theta_shift(build_lemma1_family(p));
}

void section_unit_increments(Outcome& o) {
  const Family hom(build_homotopy(families::arnold_theta(0.5), lemma_theta(3)));
  const auto scan = section_scan(hom, Rational(0, 1), 200);
  std::vector<bool> seen(4, false);
  int absent = 0;
  for (const auto& v : scan.a_of_s) {
    if (!v) {
      ++absent;
      continue;
    }
    if (*v >= 0 && *v <= 3) seen[*v] = true;
  }
  o.check(scan.unit_increments_ok, "a(s) jumps by more than one");
  o.check(seen[1] && seen[2] && seen[3], "not every value in {1, 2, 3} is attained");
  o.detail << scan.s_grid.size() << " sections, values seen:";
  for (int k = 0; k <= 3; ++k)
    if (seen[k]) o.detail << " " << k;
  o.detail << ", absent " << absent << ", refinements " << scan.refinements;
}

// ---- 7 ----------------------------------------------------------------------

void parity_invariant(Outcome& o) {
  const FamilySpec arnold_spec = families::arnold_theta(0.5);
  const Family arnold(arnold_spec);
  const std::vector<Rational> pqs{Rational(0, 1), Rational(1, 2), Rational(1, 3)};
  const auto d = parity_prefix_diff(arnold, Family(lemma_theta(2)), pqs);
  o.check(d.index && *d.index == 0, "Arnold vs Lemma N=2 should differ at index 0");
  FourierStage warp;
  warp.offset = Poly2::constant(0.3);
  warp.modes.push_back({1, Poly2::constant(0.1 / (2 * kPi)), Poly2{}});
  const auto c = parity_prefix_diff(arnold, Family(conjugate_family(arnold_spec, warp)), pqs);
  o.check(!c.index, "conjugated Arnold should not differ");
  o.detail << "Arnold vs Lemma N=2: " << (d.index ? "index " + std::to_string(*d.index) : std::string("none"))
           << "; Arnold vs conjugate: " << (c.index ? "index " + std::to_string(*c.index) : std::string("none"));
}

// ---- 8 ----------------------------------------------------------------------

void bookkeeping(Outcome& o) {
  const auto t = jet_dimension_table(3);
  std::vector<long long> dims;
  for (const auto& [k, dim] : t.jet_dims) dims.push_back(dim);
  std::vector<int> codims;
  for (const auto& e : t.codimensions) codims.push_back(e.codimension);
  o.check(dims == std::vector<long long>{7, 13, 23}, "jet dimensions wrong");
  o.check(codims == std::vector<int>{2, 6, 10, 3, 4, 4, 7, 7, 3}, "codimension list wrong");
  o.detail << "dims";
  for (auto v : dims) o.detail << " " << v;
  o.detail << "; codims";
  for (auto v : codims) o.detail << " " << v;
}

// ---- 9 ----------------------------------------------------------------------

void structural_balance(Outcome& o) {
  std::mt19937_64 rng(424242);
  std::uniform_real_distribution<double> u01(0.0, 1.0), usgn(-1.0, 1.0);
  int accepted = 0, violations = 0, tried = 0, rejected_invalid = 0, no_rational = 0, non_hyperbolic = 0, errors = 0;
  while (accepted < 200 && tried < 20000) {
    ++tried;
    FamilySpec f;
    FourierStage st;
    st.offset = Poly2::constant(u01(rng));
    const int modes = 1 + static_cast<int>(u01(rng) * 3);
    // Target a one-step derivative bound of budget < 1 spread over the modes.
    const double budget = 0.2 + 0.79 * u01(rng);
    std::vector<double> w(2 * modes);
    double wsum = 0.0;
    for (auto& v : w) wsum += (v = u01(rng));
    for (int k = 1; k <= modes; ++k) {
      const double a = budget * w[2 * k - 2] / wsum / (2 * kPi * k) * (usgn(rng) < 0 ? -1 : 1);
      const double b = budget * w[2 * k - 1] / wsum / (2 * kPi * k) * (usgn(rng) < 0 ? -1 : 1);
      st.modes.push_back({k, Poly2::constant(a), Poly2::constant(b)});
    }
    f.stages.emplace_back(std::move(st));
    const Family fam(f);
    if (!validate_diffeo(fam).ok) {
      ++rejected_invalid;
      continue;
    }
    try {
      const auto pq = detect_rational(fam, {0.0, 0.0}, 12);
      if (!pq) {
        ++no_rational;
        continue;
      }
      const auto c = run_census(fam, {0.0, 0.0}, *pq);
      if (!c.all_hyperbolic) {
        ++non_hyperbolic;
        continue;
      }
      ++accepted;
      if (c.sources_topological != c.sinks_topological || c.orbits.size() % 2 != 0) ++violations;
    } catch (const Error&) {
      ++errors;
    }
  }
  o.check(accepted == 200, "could not draw 200 qualifying families");
  o.check(violations == 0, "source/sink imbalance found");
  o.detail << accepted << " families checked, " << violations << " violations (" << tried << " drawn: " << no_rational
           << " irrational-looking, " << non_hyperbolic << " non-hyperbolic, " << rejected_invalid << " invalid, "
           << errors << " errors)";
}

// ---- 10 ---------------------------------------------------------------------

void oracle_equivalence(Outcome& o) {
  struct Case {
    const char* name;
    FamilySpec spec;
    oracle::TrigFamily trig;
  };
  const std::vector<Case> cases{
      {"arnold", families::arnold_2p(), {1.0L / oracle::kTwoPiL, 0.0L, 0.0L}},
      {"cusp", families::cusp_2p(), {1.0L, 0.1L, 0.0L}},
      {"intersect", families::intersect_2p(), {1.0L, 0.02L, 0.015L}},
  };
  double worst = 0.0;
  for (const auto& cs : cases) {
    const Family fam(cs.spec);
    const auto& b = fam.box();
    const auto d = assemble_diagram(fam, Rational(0, 1));
    const auto ref = oracle::reference_diagram(cs.trig, {b.s_lo, b.s_hi, b.theta_lo, b.theta_hi}, 1024);
    const std::string tag = std::string(cs.name) + ": ";
    o.check(static_cast<int>(d.curves.size()) == ref.curves(), tag + "curve count differs");
    o.check(d.cusps.size() == ref.cusps.size(), tag + "cusp count differs");
    o.check(d.intersections.size() == ref.intersections.size(), tag + "intersection count differs");
    for (std::size_t i = 0; i < std::min(d.cusps.size(), ref.cusps.size()); ++i)
      worst = std::max({worst, std::abs(d.cusps[i].s - static_cast<double>(ref.cusps[i].s)),
                        std::abs(d.cusps[i].theta - static_cast<double>(ref.cusps[i].theta))});
    for (std::size_t i = 0; i < std::min(d.intersections.size(), ref.intersections.size()); ++i)
      worst = std::max({worst, std::abs(d.intersections[i].s - static_cast<double>(ref.intersections[i].s)),
                        std::abs(d.intersections[i].theta - static_cast<double>(ref.intersections[i].theta))});
    o.detail << tag << d.curves.size() << "/" << d.cusps.size() << "/" << d.intersections.size() << " ";
  }
  o.check(worst < 1e-4, "feature location off");
  o.detail << "(curves/cusps/intersections), max location err " << worst;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria{
      {"jet partials match finite differences", jet_correctness},
      {"rotation numbers", rotation_numbers},
      {"closed-form tongue boundary", closed_form_tongue},
      {"Lemma-1 construction census", lemma_construction},
      {"cusp detection", cusp_detection},
      {"section scan unit increments", section_unit_increments},
      {"parity invariant", parity_invariant},
      {"jet and codimension bookkeeping", bookkeeping},
      {"structural balance on random families", structural_balance},
      {"diagram matches brute-force oracle", oracle_equivalence},
  };
  int failed = 0;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail << " exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.ok) ++failed;
    std::printf("%s  %2zu  %-40s %7.2fs  %s\n", o.ok ? "PASS" : "FAIL", i + 1, criteria[i].first, secs,
                o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed in %.1fs\n", criteria.size() - failed, criteria.size(),
              std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  return failed == 0 ? 0 : 1;
}
