#pragma once

// Rotation numbers and orbit-based rational detection.
//
// A rational p/q is attained at a parameter exactly when G(x) = Lift^q(x) - x - p
// has a zero. G is periodic, so that happens iff min G <= 0 <= max G. The grid
// extremes are polished by Newton on G' before the comparison, which is what
// catches tangential (even multiplicity) zeros at tongue boundaries.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>

#include "circlebif/errors.hpp"
#include "circlebif/family.hpp"
#include "circlebif/iterate.hpp"
#include "circlebif/rational.hpp"

namespace circlebif {

inline constexpr double kDefaultRationalTol = 1e-10;
inline constexpr int kDefaultGridPerQ = 4096;
inline constexpr std::int64_t kDefaultQMax = 64;

struct RotationEstimate {
  double value = 0.0;
  double error_bound = 0.0;
  std::int64_t iterations = 0;
  std::optional<Rational> rational;
};

/// Refined extremes of G over one period.
struct DisplacementRange {
  double min = 0.0;
  double max = 0.0;
  double argmin = 0.0;
  double argmax = 0.0;
};

namespace detail {

/// Newton on G' started from a grid extremum, kept inside [x - h, x + h].
/// Returns the improved extreme value, or the start value if Newton wanders.
inline std::pair<double, double> polish_extremum(const Family& fam, const Rational& pq, double s, double theta,
                                                 double x, double gx, double h, bool is_max) {
  double best_x = x, best = gx;
  double y = x;
  for (int it = 0; it < 20; ++it) {
    const Jet3 g = displacement_jet(fam, pq, s, theta, y);
    const double g1 = g.dx(), g2 = g.dxx();
    const double val = g.value();
    if (is_max ? val > best : val < best) {
      best = val;
      best_x = y;
    }
    if (g2 == 0.0 || !std::isfinite(g2)) break;
    const double step = g1 / g2;
    const double next = y - step;
    if (std::abs(next - x) > h) break;
    if (std::abs(step) < 1e-15) {
      y = next;
      break;
    }
    y = next;
  }
  const double last = displacement(fam, pq, s, theta, y);
  if (is_max ? last > best : last < best) {
    best = last;
    best_x = y;
  }
  return {best_x, best};
}

}  // namespace detail

inline DisplacementRange displacement_range(const Family& fam, const Rational& pq, double s, double theta,
                                            int grid) {
  require(grid >= 2, "displacement grid needs at least 2 points");
  DisplacementRange r;
  r.min = std::numeric_limits<double>::infinity();
  r.max = -r.min;
  for (int i = 0; i < grid; ++i) {
    const double x = static_cast<double>(i) / grid;
    const double g = displacement(fam, pq, s, theta, x);
    if (g < r.min) {
      r.min = g;
      r.argmin = x;
    }
    if (g > r.max) {
      r.max = g;
      r.argmax = x;
    }
  }
  const double h = 1.0 / grid;
  std::tie(r.argmin, r.min) = detail::polish_extremum(fam, pq, s, theta, r.argmin, r.min, h, false);
  std::tie(r.argmax, r.max) = detail::polish_extremum(fam, pq, s, theta, r.argmax, r.max, h, true);
  return r;
}

/// True iff G has a zero: a sign change, a grid value within tol of zero, or
/// a polished extremum that reaches zero within tol.
inline bool attains(const Family& fam, const Rational& pq, double s, double theta, double tol = kDefaultRationalTol,
                    int grid_per_q = kDefaultGridPerQ) {
  require(pq.q >= 1, "attains: q must be >= 1");
  const int grid = static_cast<int>(grid_per_q * pq.q);
  const auto r = displacement_range(fam, pq, s, theta, grid);
  return r.min <= tol && r.max >= -tol;
}

inline RotationEstimate estimate_rho(const Family& fam, const ParamPoint& at, std::int64_t n_iter = 100000,
                                     double x0 = 0.0) {
  require(n_iter >= 1000, "estimate_rho: nIter must be >= 1000");
  RotationEstimate est;
  est.iterations = n_iter;
  const auto it = iterate_lift<double>(fam, static_cast<int>(n_iter), x0, at.s, at.theta);
  const double x0_floor = std::floor(x0);
  const double raw = ((it.reduced - (x0 - x0_floor)) + (static_cast<double>(it.winding) - x0_floor)) /
                     static_cast<double>(n_iter);
  est.value = raw;
  est.error_bound = 2.0 / static_cast<double>(n_iter);
  const auto q_cap = static_cast<std::int64_t>(std::sqrt(static_cast<double>(n_iter)));
  for (const Rational& c : convergents(raw, q_cap)) {
    const auto r = displacement_range(fam, c, at.s, at.theta, 128);
    if (r.min <= kDefaultRationalTol && r.max >= -kDefaultRationalTol) {
      est.value = c.value();
      est.error_bound = 0.0;
      est.rational = c;
      return est;
    }
    // Lift^q(x) - x - p in [min, max] everywhere pins rho to that band / q.
    const double lo = c.value() + r.min / static_cast<double>(c.q);
    const double hi = c.value() + r.max / static_cast<double>(c.q);
    const double half = 0.5 * (hi - lo);
    if (half < est.error_bound) {
      est.value = 0.5 * (lo + hi);
      est.error_bound = half;
    }
  }
  return est;
}

/// Smallest-denominator convergent p/q (q <= qMax) whose orbit exists. With
/// nIter = 4 qMax^2 the raw estimate is within 1/(2q^2) of any attained p/q,
/// so by Legendre's theorem the attained rational is among the convergents.
inline std::optional<Rational> detect_rational(const Family& fam, const ParamPoint& at,
                                               std::int64_t q_max = kDefaultQMax, double tol = kDefaultRationalTol) {
  require(q_max >= 1, "detect_rational: qMax must be >= 1");
  require(tol > 0.0, "detect_rational: tol must be positive");
  const std::int64_t n = std::max<std::int64_t>(1000, 4 * q_max * q_max);
  const auto it = iterate_lift<double>(fam, static_cast<int>(n), 0.0, at.s, at.theta);
  const double raw = (it.reduced + static_cast<double>(it.winding)) / static_cast<double>(n);
  for (const Rational& c : convergents(raw, q_max))
    if (attains(fam, c, at.s, at.theta, tol)) return c;
  return std::nullopt;
}

struct TongueInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool degenerate = false;

  double width() const { return hi - lo; }
};

/// The theta-interval at fixed s on which p/q is attained, for families whose
/// lift increases with theta. Both extremes of G then increase with theta, so
/// the tongue is [inf{max G >= 0}, sup{min G <= 0}].
inline TongueInterval tongue_interval(const Family& fam, double s, const Rational& pq,
                                      double tol = kDefaultRationalTol, int grid_per_q = kDefaultGridPerQ) {
  require(tol > 0.0, "tongue_interval: tol must be positive");
  require(grid_per_q >= 64, "tongue_interval: grid per q must be >= 64");
  if (!fam.monotone_in_theta() || !verify_monotone_in_theta(fam, s))
    fail(ErrorCode::MonotonicityUnverified, "family is not verified monotone in theta at s = " + std::to_string(s));
  const auto& b = fam.box();
  const int grid = static_cast<int>(grid_per_q * pq.q);
  auto range = [&](double t) { return displacement_range(fam, pq, s, t, grid); };

  const auto at_lo = range(b.theta_lo);
  const auto at_hi = range(b.theta_hi);
  if (at_hi.max < -tol || at_lo.min > tol)
    fail(ErrorCode::RationalNotAttained, pq.str() + " is not attained for theta in the box");

  // Root of an increasing extreme value m(theta) = max or min of G, with
  // m' = G_theta at the extremum. Newton inside a shrinking bracket
  // [lo, hi] with m(lo) < 0 <= m(hi); falls back to bisection.
  auto root = [&](bool is_max, bool want_hi) {
    auto eval = [&](double t) {
      const auto r = range(t);
      const double x = is_max ? r.argmax : r.argmin;
      const double v = is_max ? r.max : r.min;
      return std::make_pair(v, displacement_jet(fam, pq, s, t, x).dtheta());
    };
    double lo = b.theta_lo, hi = b.theta_hi;
    auto [flo, dlo] = eval(lo);
    if (flo >= 0.0) return lo;
    auto [fhi, dhi] = eval(hi);
    if (fhi < 0.0) return hi;
    double t = std::abs(flo) < std::abs(fhi) ? lo : hi;
    double f = t == lo ? flo : fhi, d = t == lo ? dlo : dhi;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++i) {
      double next = d > 0.0 ? t - f / d : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      std::tie(f, d) = eval(next);
      t = next;
      if (f == 0.0) return t;
      (f > 0.0 ? hi : lo) = t;
      // Probe just past the predicted root to close the bracket from the other side.
      if (d > 0.0) {
        const double eps = 4e-16 * std::max(1.0, std::abs(t));
        const double probe = t - f / d + (f < 0.0 ? eps : -eps);
        if (probe > lo && probe < hi) {
          const auto [fp, dp] = eval(probe);
          if (fp == 0.0) return probe;
          (fp > 0.0 ? hi : lo) = probe;
          if (std::abs(fp) < std::abs(f)) {
            t = probe;
            f = fp;
            d = dp;
          }
        }
      }
    }
    return want_hi ? hi : lo;
  };
  const double t_lo = root(true, true);
  double t_hi = b.theta_hi;
  if (at_hi.min > 0.0) t_hi = std::max(root(false, false), b.theta_lo);

  TongueInterval out;
  if (t_hi < t_lo) {
    if (t_lo - t_hi > tol) fail(ErrorCode::RationalNotAttained, pq.str() + " is not attained at s = " + std::to_string(s));
    const double mid = 0.5 * (t_lo + t_hi);
    out.lo = out.hi = mid;
  } else {
    out.lo = t_lo;
    out.hi = t_hi;
  }
  out.degenerate = out.width() < tol;
  return out;
}

}  // namespace circlebif
