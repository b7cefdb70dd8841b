#pragma once

// Period-q orbit census at one parameter point.
//
// Zeros of G(x) = Lift^q(x) - x - p on [0, 1) are bracketed on a uniform grid,
// polished by safeguarded Newton, deduplicated on the circle and grouped into
// orbits by forward iteration. Zeros of even multiplicity, which never show up
// as a sign change, are looked for at small local minima of |G|.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "circlebif/errors.hpp"
#include "circlebif/family.hpp"
#include "circlebif/iterate.hpp"
#include "circlebif/parallel.hpp"
#include "circlebif/rational.hpp"
#include "circlebif/rotation.hpp"

namespace circlebif {

enum class OrbitKind { source, sink, parabolic_semistable, parabolic_source, parabolic_sink };

inline const char* to_string(OrbitKind k) {
  switch (k) {
    case OrbitKind::source: return "source";
    case OrbitKind::sink: return "sink";
    case OrbitKind::parabolic_semistable: return "parabolicSemistable";
    case OrbitKind::parabolic_source: return "parabolicSource";
    case OrbitKind::parabolic_sink: return "parabolicSink";
  }
  return "?";
}

inline std::optional<OrbitKind> orbit_kind_from_string(const std::string& s) {
  for (auto k : {OrbitKind::source, OrbitKind::sink, OrbitKind::parabolic_semistable, OrbitKind::parabolic_source,
                 OrbitKind::parabolic_sink})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

inline bool is_topological_source(OrbitKind k) { return k == OrbitKind::source || k == OrbitKind::parabolic_source; }
inline bool is_topological_sink(OrbitKind k) { return k == OrbitKind::sink || k == OrbitKind::parabolic_sink; }
inline bool is_hyperbolic(OrbitKind k) { return k == OrbitKind::source || k == OrbitKind::sink; }

struct PeriodicOrbit {
  std::vector<double> points;  // in [0, 1), forward-iteration order
  double multiplier = 1.0;
  OrbitKind kind = OrbitKind::parabolic_semistable;
  double residual = 0.0;

  friend bool operator==(const PeriodicOrbit&, const PeriodicOrbit&) = default;
};

struct UnresolvedZero {
  double x = 0.0;
  double residual = 0.0;

  friend bool operator==(const UnresolvedZero&, const UnresolvedZero&) = default;
};

struct OrbitCensus {
  Rational pq;
  ParamPoint at;
  std::vector<PeriodicOrbit> orbits;
  int sources_topological = 0;
  int sinks_topological = 0;
  bool all_hyperbolic = true;
  int grid_used = 0;
  std::vector<UnresolvedZero> unresolved;

  std::size_t point_count() const {
    std::size_t n = 0;
    for (const auto& o : orbits) n += o.points.size();
    return n;
  }
};

struct CensusOptions {
  int grid_m = 0;  // 0: 4096 q
  double hyp_tol = 1e-8;
  double probe = 1e-5;
  double newton_target = 1e-12;
  double accept_residual = 1e-10;
  double dedupe = 1e-9;
  double orbit_match = 1e-7;
  double non_isolated = 1e-10;
  double tangential_window = 1e-6;
};

namespace detail {

inline double circle_dist(double a, double b) {
  double d = std::abs(a - b);
  d -= std::floor(d);
  return std::min(d, 1.0 - d);
}

inline double wrap01(double x) {
  double r = x - std::floor(x);
  if (r >= 1.0) r = 0.0;
  return r;
}

/// Safeguarded Newton inside a sign-change bracket [a, b].
inline double refine_in_bracket(const Family& fam, const Rational& pq, double s, double theta, double a, double b,
                                double ga, double target) {
  double x = 0.5 * (a + b);
  for (int it = 0; it < 100; ++it) {
    const Dual g = displacement_dx(fam, pq, s, theta, x);
    if (std::abs(g.v) < target * 1e-2) return x;
    if ((g.v < 0.0) == (ga < 0.0)) {
      a = x;
      ga = g.v;
    } else {
      b = x;
    }
    double next = (g.d != 0.0) ? x - g.v / g.d : 0.5 * (a + b);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (b - a < 1e-16 || next == x) return x;
    x = next;
  }
  return x;
}

}  // namespace detail

inline OrbitCensus run_census(const Family& fam, const ParamPoint& at, const Rational& pq,
                              const CensusOptions& opt = {}) {
  require(pq.q >= 1, "census: q must be >= 1");
  const int q = static_cast<int>(pq.q);
  const int grid = opt.grid_m > 0 ? opt.grid_m : kDefaultGridPerQ * q;
  require(grid >= 1024 * q, "census: gridM must be >= 1024 q");
  const double s = at.s, theta = at.theta;
  auto G = [&](double x) { return displacement(fam, pq, s, theta, x); };

  const double h = 1.0 / grid;
  const auto g = parallel_map<double>(static_cast<std::size_t>(grid), [&](std::size_t i) { return G(static_cast<double>(i) * h); });
  double gmax = 0.0;
  for (double v : g) gmax = std::max(gmax, std::abs(v));
  if (gmax < opt.non_isolated)
    fail(ErrorCode::NonIsolatedOrbits, "every point is periodic with rotation number " + pq.str() + " (max |G| = " +
                                           std::to_string(gmax) + ")");

  // Candidate zeros, each either exact, bracketed or tangential.
  struct Candidate {
    double a, b, ga;
    bool bracket;
  };
  std::vector<Candidate> cands;
  for (int i = 0; i < grid; ++i) {
    const int j = (i + 1) % grid;
    const double xa = i * h, xb = (i + 1) * h;
    if (g[i] == 0.0) {
      cands.push_back({xa, xa, 0.0, false});
      continue;
    }
    if (g[j] != 0.0 && (g[i] < 0.0) != (g[j] < 0.0)) {
      cands.push_back({xa, xb, g[i], true});
      continue;
    }
    const int k = (i + grid - 1) % grid;
    const double ai = std::abs(g[i]);
    const bool same_sign = (g[k] < 0.0) == (g[i] < 0.0) && (g[j] < 0.0) == (g[i] < 0.0);
    // The true extremum can sit up to a second difference away from the grid value.
    const double window = std::max(opt.tangential_window, std::abs(g[k] + g[j] - 2.0 * g[i]));
    if (same_sign && ai < window && ai <= std::abs(g[k]) && ai <= std::abs(g[j])) {
      // Polish the extremum of G; it either touches zero or dips across.
      const bool is_max = g[i] < 0.0;
      const auto [xe, ge] = detail::polish_extremum(fam, pq, s, theta, xa, g[i], h, is_max);
      if (std::abs(ge) <= opt.accept_residual) {
        cands.push_back({xe, xe, 0.0, false});
      } else if ((ge < 0.0) != (g[i] < 0.0)) {
        // Dips across zero between grid points: one crossing on each side.
        const double xn = xe > xa ? xb : (i - 1) * h;
        const double gn = xe > xa ? g[j] : g[k];
        auto add = [&](double u, double gu, double v, double gv) {
          if (u < v)
            cands.push_back({u, v, gu, true});
          else
            cands.push_back({v, u, gv, true});
        };
        add(xa, g[i], xe, ge);
        add(xe, ge, xn, gn);
      }
    }
  }

  std::vector<UnresolvedZero> unresolved;
  std::vector<double> zeros;
  const auto refined = parallel_map<std::pair<double, double>>(cands.size(), [&](std::size_t n) {
    const auto& c = cands[n];
    double x = c.a;
    if (c.bracket) x = detail::refine_in_bracket(fam, pq, s, theta, c.a, c.b, c.ga, opt.newton_target);
    return std::make_pair(x, G(x));
  });
  for (const auto& [x, gx] : refined) {
    if (std::abs(gx) <= opt.accept_residual)
      zeros.push_back(detail::wrap01(x));
    else
      unresolved.push_back({detail::wrap01(x), std::abs(gx)});
  }
  std::sort(zeros.begin(), zeros.end());
  std::vector<double> uniq;
  for (double z : zeros)
    if (uniq.empty() || detail::circle_dist(z, uniq.back()) > opt.dedupe) uniq.push_back(z);
  if (uniq.size() > 1 && detail::circle_dist(uniq.front(), uniq.back()) <= opt.dedupe) uniq.pop_back();

  if (uniq.empty())
    fail(ErrorCode::RationalNotAttained, pq.str() + " has no periodic orbit at (s, theta) = (" + std::to_string(s) +
                                             ", " + std::to_string(theta) + ")");

  OrbitCensus out;
  out.pq = pq;
  out.at = at;
  out.grid_used = grid;
  out.unresolved = std::move(unresolved);
  std::vector<bool> used(uniq.size(), false);
  auto match = [&](double x) -> std::optional<std::size_t> {
    // uniq is sorted; look at the neighbours of the insertion point.
    const auto it = std::lower_bound(uniq.begin(), uniq.end(), x);
    std::optional<std::size_t> best;
    double best_d = opt.orbit_match;
    for (auto cand : {it, it == uniq.begin() ? uniq.end() - 1 : it - 1}) {
      const auto idx = static_cast<std::size_t>((cand == uniq.end() ? uniq.begin() : cand) - uniq.begin());
      const double d = detail::circle_dist(uniq[idx], x);
      if (d <= best_d) {
        best_d = d;
        best = idx;
      }
    }
    return best;
  };
  for (std::size_t i = 0; i < uniq.size(); ++i) {
    if (used[i]) continue;
    PeriodicOrbit orb;
    double x = uniq[i];
    used[i] = true;
    orb.points.push_back(x);
    for (int k = 1; k < q; ++k) {
      x = detail::wrap01(fam(x, s, theta));
      if (const auto m = match(x)) {
        used[*m] = true;
        x = uniq[*m];
      }
      orb.points.push_back(x);
    }
    orb.multiplier = displacement_dx(fam, pq, s, theta, orb.points.front()).d + 1.0;
    for (double p : orb.points) orb.residual = std::max(orb.residual, std::abs(G(p)));
    const double x0 = orb.points.front();
    if (orb.multiplier > 1.0 + opt.hyp_tol) {
      orb.kind = OrbitKind::source;
    } else if (orb.multiplier < 1.0 - opt.hyp_tol) {
      orb.kind = OrbitKind::sink;
    } else {
      const double left = G(x0 - opt.probe), right = G(x0 + opt.probe);
      if (left < 0.0 && right > 0.0)
        orb.kind = OrbitKind::parabolic_source;
      else if (left > 0.0 && right < 0.0)
        orb.kind = OrbitKind::parabolic_sink;
      else
        orb.kind = OrbitKind::parabolic_semistable;
    }
    out.orbits.push_back(std::move(orb));
  }
  for (const auto& o : out.orbits) {
    if (is_topological_source(o.kind)) ++out.sources_topological;
    if (is_topological_sink(o.kind)) ++out.sinks_topological;
    if (!is_hyperbolic(o.kind)) out.all_hyperbolic = false;
  }
  if (!out.unresolved.empty()) out.all_hyperbolic = false;
  return out;
}

inline OrbitCensus run_census(const Family& fam, const ParamPoint& at, const Rational& pq, int grid_m) {
  CensusOptions opt;
  opt.grid_m = grid_m;
  return run_census(fam, at, pq, opt);
}

inline int count_topological_sources(const std::vector<OrbitKind>& kinds) {
  return static_cast<int>(std::count_if(kinds.begin(), kinds.end(), is_topological_source));
}

inline int count_topological_sources(const OrbitCensus& census) {
  int n = 0;
  for (const auto& o : census.orbits) n += is_topological_source(o.kind) ? 1 : 0;
  return n;
}

}  // namespace circlebif
