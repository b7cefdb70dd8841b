#pragma once

// Saddle-node curves in the (s, theta) plane.
//
// A parabolic period-q point solves H1 = G = 0, H2 = G_x = 0 with
// G(s, theta, x) = Lift^q(x) - x - p. Two equations in three unknowns give
// curves, traced by pseudo-arclength continuation in box-normalized
// coordinates (u, w, x) = ((s - s_lo) / Ls, (theta - theta_lo) / Lt, x).
// Along a curve x is kept unwrapped so the branch of the lift never changes;
// stored points are wrapped back into [0, 1).

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
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

using Vec3 = std::array<double, 3>;

// ---- the defining system ------------------------------------------------------

/// H1, H2 and their gradients in (s, theta, x), plus the higher jets needed for
/// cusp and transversality diagnostics.
struct ContinuationSystem {
  Rational pq;
  double s = 0.0, theta = 0.0, x = 0.0;
  double h1 = 0.0;
  double h2 = 0.0;
  Vec3 grad_h1{};
  Vec3 grad_h2{};
  double gxx = 0.0;
  double gxxx = 0.0;
  double cusp_cond = 0.0;  // G_s G_xtheta - G_theta G_xs
  Vec3 grad_gxx{};
};

inline ContinuationSystem continuation_system(const Family& fam, const Rational& pq, double s, double theta,
                                              double x) {
  const Jet3 g = displacement_jet(fam, pq, s, theta, x);
  ContinuationSystem sys;
  sys.pq = pq;
  sys.s = s;
  sys.theta = theta;
  sys.x = x;
  sys.h1 = g.value();
  sys.h2 = g.dx();
  sys.grad_h1 = {g.ds(), g.dtheta(), g.dx()};
  sys.grad_h2 = {g.dxs(), g.dxtheta(), g.dxx()};
  sys.gxx = g.dxx();
  sys.gxxx = g.dxxx();
  sys.cusp_cond = g.ds() * g.dxtheta() - g.dtheta() * g.dxs();
  sys.grad_gxx = {g.partial(2, 1, 0), g.partial(2, 0, 1), g.dxxx()};
  return sys;
}

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline constexpr double kRankTol = 1e-10;

/// Unit vector along grad H1 x grad H2, flipped to agree with `previous`.
inline Vec3 tangent_vector(const Vec3& grad_h1, const Vec3& grad_h2, const Vec3* previous = nullptr) {
  Vec3 v = cross(grad_h1, grad_h2);
  const double n = norm(v);
  if (!(n > kRankTol)) fail(ErrorCode::RankDeficient, "gradients of H1 and H2 are parallel");
  for (double& c : v) c /= n;
  if (previous && dot(v, *previous) < 0.0)
    for (double& c : v) c = -c;
  return v;
}

inline Vec3 tangent_vector(const ContinuationSystem& sys, const Vec3* previous = nullptr) {
  return tangent_vector(sys.grad_h1, sys.grad_h2, previous);
}

// ---- point solves ---------------------------------------------------------------

enum class FrozenKind { s, theta, line };

/// Which coordinates stay fixed in a 2x2 solve. For `line`, (s, theta) moves
/// along the seed's (s, theta) plus t * (ds, dtheta).
struct Frozen {
  FrozenKind kind = FrozenKind::s;
  double ds = 0.0;
  double dtheta = 0.0;

  static Frozen s_fixed() { return {FrozenKind::s, 0.0, 1.0}; }
  static Frozen theta_fixed() { return {FrozenKind::theta, 1.0, 0.0}; }
  static Frozen along(double ds, double dtheta) { return {FrozenKind::line, ds, dtheta}; }
};

struct SaddleNodePoint {
  double s = 0.0, theta = 0.0, x = 0.0;
  double h1 = 0.0, h2 = 0.0;
  double condition = 0.0;  // singular-value ratio of the final 2x2 Jacobian
  int iterations = 0;
};

struct SolveOptions {
  double tol = 1e-11;
  int max_iter = 50;
};

inline SaddleNodePoint solve_saddle_node(const Family& fam, const Rational& pq, const Vec3& seed, Frozen frozen,
                                         const SolveOptions& opt = {}) {
  require(fam.box().contains(seed[0], seed[1], 1e-9), "solve_saddle_node: seed outside the parameter box");
  double ds = frozen.ds, dt = frozen.dtheta;
  if (frozen.kind == FrozenKind::s) ds = 0.0, dt = 1.0;
  if (frozen.kind == FrozenKind::theta) ds = 1.0, dt = 0.0;
  const double dn = std::hypot(ds, dt);
  require(dn > 0.0, "solve_saddle_node: zero line direction");
  ds /= dn;
  dt /= dn;

  double t = 0.0, x = seed[2];
  auto eval = [&](double tt, double xx) { return continuation_system(fam, pq, seed[0] + tt * ds, seed[1] + tt * dt, xx); };
  ContinuationSystem sys = eval(t, x);
  SaddleNodePoint out;
  for (int it = 0; it <= opt.max_iter; ++it) {
    Eigen::Matrix2d J;
    J << sys.grad_h1[0] * ds + sys.grad_h1[1] * dt, sys.grad_h1[2], sys.grad_h2[0] * ds + sys.grad_h2[1] * dt,
        sys.grad_h2[2];
    const Eigen::JacobiSVD<Eigen::Matrix2d> svd(J);
    const auto sv = svd.singularValues();
    out.condition = sv(1) > 0.0 ? sv(0) / sv(1) : std::numeric_limits<double>::infinity();
    if (std::abs(sys.h1) < opt.tol && std::abs(sys.h2) < opt.tol) {
      out.s = seed[0] + t * ds;
      out.theta = seed[1] + t * dt;
      out.x = x;
      out.h1 = sys.h1;
      out.h2 = sys.h2;
      out.iterations = it;
      return out;
    }
    if (it == opt.max_iter) break;
    if (!(sv(1) > 1e-13 * std::max(1.0, sv(0))))
      fail(ErrorCode::SingularSystem, "saddle-node Jacobian is singular");
    const Eigen::Vector2d step = J.partialPivLu().solve(Eigen::Vector2d(-sys.h1, -sys.h2));
    double lambda = 1.0;
    const double r0 = std::hypot(sys.h1, sys.h2);
    // Keep steps sane on the circle, then backtrack on the residual.
    const double big = std::max(std::abs(step(0)), std::abs(step(1)));
    if (big > 0.25) lambda = 0.25 / big;
    ContinuationSystem trial;
    for (int bt = 0; bt < 30; ++bt) {
      trial = eval(t + lambda * step(0), x + lambda * step(1));
      if (std::hypot(trial.h1, trial.h2) < r0 || bt == 29) break;
      lambda *= 0.5;
    }
    t += lambda * step(0);
    x += lambda * step(1);
    sys = trial;
    if (!std::isfinite(t) || !std::isfinite(x)) break;
  }
  fail(ErrorCode::NoConvergence, "saddle-node Newton did not converge from (" + std::to_string(seed[0]) + ", " +
                                     std::to_string(seed[1]) + ", " + std::to_string(seed[2]) + ")");
}

// ---- cusps ------------------------------------------------------------------------

struct CuspPoint {
  double s = 0.0, theta = 0.0, x = 0.0;
  double h1 = 0.0, h2 = 0.0, gxx = 0.0;
  double gxxx = 0.0;
  double cusp_cond = 0.0;
  bool non_generic = false;

  friend bool operator==(const CuspPoint&, const CuspPoint&) = default;
};

namespace detail {

inline double wrap_unit(double x) {
  double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

inline double circ(double a, double b) {
  double d = std::abs(a - b);
  d -= std::floor(d);
  return std::min(d, 1.0 - d);
}

/// Newton on (H1, H2, G_xx) in (s, theta, x).
inline std::optional<CuspPoint> cusp_newton(const Family& fam, const Rational& pq, Vec3 p, int max_iter = 50) {
  for (int it = 0; it <= max_iter; ++it) {
    const auto sys = continuation_system(fam, pq, p[0], p[1], p[2]);
    if (!std::isfinite(sys.h1) || !std::isfinite(sys.gxx)) return std::nullopt;
    if (std::abs(sys.h1) < 1e-12 && std::abs(sys.h2) < 1e-11 && std::abs(sys.gxx) < 1e-9) {
      CuspPoint c;
      c.s = p[0];
      c.theta = p[1];
      c.x = wrap_unit(p[2]);
      c.h1 = sys.h1;
      c.h2 = sys.h2;
      c.gxx = sys.gxx;
      c.gxxx = sys.gxxx;
      c.cusp_cond = sys.cusp_cond;
      c.non_generic = std::abs(c.gxxx) < 1e-8 || std::abs(c.cusp_cond) < 1e-8;
      return c;
    }
    if (it == max_iter) break;
    Eigen::Matrix3d J;
    J << sys.grad_h1[0], sys.grad_h1[1], sys.grad_h1[2], sys.grad_h2[0], sys.grad_h2[1], sys.grad_h2[2],
        sys.grad_gxx[0], sys.grad_gxx[1], sys.grad_gxx[2];
    const auto lu = J.fullPivLu();
    if (lu.rank() < 3) return std::nullopt;
    Eigen::Vector3d step = lu.solve(Eigen::Vector3d(-sys.h1, -sys.h2, -sys.gxx));
    const double big = step.cwiseAbs().maxCoeff();
    if (!std::isfinite(big)) return std::nullopt;
    if (big > 0.1) step *= 0.1 / big;
    for (int k = 0; k < 3; ++k) p[k] += step(k);
  }
  return std::nullopt;
}

}  // namespace detail

/// 3-D Newton from every seed; converged solutions deduplicated at 1e-7.
/// Solutions that Newton carried outside the parameter box are dropped.
inline std::vector<CuspPoint> find_cusps(const Family& fam, const Rational& pq, const std::vector<Vec3>& seeds) {
  const auto found = parallel_map<std::optional<CuspPoint>>(
      seeds.size(), [&](std::size_t i) { return detail::cusp_newton(fam, pq, seeds[i]); });
  std::vector<CuspPoint> out;
  for (const auto& c : found) {
    if (!c || !fam.box().contains(c->s, c->theta, 1e-9)) continue;
    const bool dup = std::any_of(out.begin(), out.end(), [&](const CuspPoint& o) {
      return std::abs(o.s - c->s) < 1e-7 && std::abs(o.theta - c->theta) < 1e-7 && detail::circ(o.x, c->x) < 1e-7;
    });
    if (!dup) out.push_back(*c);
  }
  std::sort(out.begin(), out.end(), [](const CuspPoint& a, const CuspPoint& b) {
    return std::tie(a.s, a.theta, a.x) < std::tie(b.s, b.theta, b.x);
  });
  return out;
}

// ---- curve tracing -------------------------------------------------------------------

enum class TerminationKind { boundary, cusp, closed_loop, stalled };
enum class Edge { none, s_lo, s_hi, theta_lo, theta_hi };

inline const char* to_string(TerminationKind k) {
  switch (k) {
    case TerminationKind::boundary: return "boundary";
    case TerminationKind::cusp: return "cusp";
    case TerminationKind::closed_loop: return "closedLoop";
    case TerminationKind::stalled: return "stalled";
  }
  return "?";
}

inline const char* to_string(Edge e) {
  switch (e) {
    case Edge::none: return "none";
    case Edge::s_lo: return "sLo";
    case Edge::s_hi: return "sHi";
    case Edge::theta_lo: return "thetaLo";
    case Edge::theta_hi: return "thetaHi";
  }
  return "?";
}

struct Termination {
  TerminationKind kind = TerminationKind::stalled;
  Edge edge = Edge::none;
  int cusp_index = -1;

  friend bool operator==(const Termination&, const Termination&) = default;
};

struct CurvePoint {
  double s = 0.0, theta = 0.0, x = 0.0;  // x in [0, 1)
  double r1 = 0.0, r2 = 0.0;             // |H1|, |H2|
  double gxx = 0.0;
  Vec3 tangent{};                        // unit, in (s, theta, x), along increasing index

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

struct SaddleNodeCurve {
  Rational pq;
  std::vector<CurvePoint> points;
  Termination start;
  Termination end;

  friend bool operator==(const SaddleNodeCurve&, const SaddleNodeCurve&) = default;
};

struct StepControl {
  double min_step = 1e-6;
  double max_step = 1e-2;
  double tol = 1e-11;
  int max_corrector = 20;
  int max_points = 200000;
};

namespace detail {

/// Box-normalized coordinates. x is shared unscaled.
struct Scaling {
  double s0, t0, ls, lt;
  explicit Scaling(const ParamBox& b) : s0(b.s_lo), t0(b.theta_lo), ls(b.s_len()), lt(b.theta_len()) {}
  Vec3 to_scaled(const Vec3& p) const { return {(p[0] - s0) / ls, (p[1] - t0) / lt, p[2]}; }
  Vec3 to_real(const Vec3& y) const { return {s0 + y[0] * ls, t0 + y[1] * lt, y[2]}; }
  Vec3 grad_scaled(const Vec3& g) const { return {g[0] * ls, g[1] * lt, g[2]}; }
  Vec3 dir_real(const Vec3& v) const { return {v[0] * ls, v[1] * lt, v[2]}; }
};

inline double dist3(const Vec3& a, const Vec3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

/// Same, with x compared on the circle.
inline double dist3_circ(const Vec3& a, const Vec3& b) {
  const double dx = circ(a[2], b[2]);
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + dx * dx);
}

struct Corrected {
  Vec3 y{};
  ContinuationSystem sys;
  int iterations = 0;
};

/// Newton on (H1, H2, n . (y - anchor)) in scaled coordinates.
inline std::optional<Corrected> correct(const Family& fam, const Rational& pq, const Scaling& sc, Vec3 y,
                                        const Vec3& anchor, const Vec3& normal, const StepControl& ctl) {
  for (int it = 0; it <= ctl.max_corrector; ++it) {
    const Vec3 p = sc.to_real(y);
    const auto sys = continuation_system(fam, pq, p[0], p[1], p[2]);
    const double c3 = dot(normal, {y[0] - anchor[0], y[1] - anchor[1], y[2] - anchor[2]});
    if (!std::isfinite(sys.h1) || !std::isfinite(sys.h2)) return std::nullopt;
    if (std::abs(sys.h1) < ctl.tol && std::abs(sys.h2) < ctl.tol && std::abs(c3) < 1e-12)
      return Corrected{y, sys, it};
    if (it == ctl.max_corrector) break;
    const Vec3 g1 = sc.grad_scaled(sys.grad_h1), g2 = sc.grad_scaled(sys.grad_h2);
    Eigen::Matrix3d J;
    J << g1[0], g1[1], g1[2], g2[0], g2[1], g2[2], normal[0], normal[1], normal[2];
    const auto lu = J.fullPivLu();
    if (lu.rank() < 3) return std::nullopt;
    const Eigen::Vector3d step = lu.solve(Eigen::Vector3d(-sys.h1, -sys.h2, -c3));
    if (!step.allFinite() || step.norm() > 0.5) return std::nullopt;
    for (int k = 0; k < 3; ++k) y[k] += step(k);
  }
  return std::nullopt;
}

inline Vec3 scaled_tangent(const Scaling& sc, const ContinuationSystem& sys, const Vec3* prev) {
  return tangent_vector(sc.grad_scaled(sys.grad_h1), sc.grad_scaled(sys.grad_h2), prev);
}

/// Real-coordinate tangent oriented like the scaled one.
inline Vec3 real_tangent(const Scaling& sc, const ContinuationSystem& sys, const Vec3& scaled_dir) {
  const Vec3 ref = sc.dir_real(scaled_dir);
  return tangent_vector(sys.grad_h1, sys.grad_h2, &ref);
}

inline CurvePoint make_point(const Scaling& sc, const ContinuationSystem& sys, const Vec3& y, const Vec3& scaled_dir) {
  const Vec3 p = sc.to_real(y);
  CurvePoint cp;
  cp.s = p[0];
  cp.theta = p[1];
  cp.x = wrap_unit(p[2]);
  cp.r1 = std::abs(sys.h1);
  cp.r2 = std::abs(sys.h2);
  cp.gxx = sys.gxx;
  cp.tangent = real_tangent(sc, sys, scaled_dir);
  return cp;
}

inline bool inside_unit(const Vec3& y) { return y[0] >= 0.0 && y[0] <= 1.0 && y[1] >= 0.0 && y[1] <= 1.0; }

struct Branch {
  std::vector<CurvePoint> points;  // excludes the seed
  Termination end;
  bool closed = false;
};

/// Land on the box edge crossed between y0 (inside) and y1 (outside).
inline std::optional<std::pair<Vec3, Edge>> land_on_edge(const Family& fam, const Rational& pq, const Scaling& sc,
                                                        const Vec3& y0, const Vec3& y1) {
  struct Cand {
    double lambda;
    Edge edge;
  };
  std::vector<Cand> cands;
  auto add = [&](double a, double b, double level, Edge e) {
    if ((a - level) * (b - level) < 0.0 || b == level) cands.push_back({(level - a) / (b - a), e});
  };
  add(y0[0], y1[0], 0.0, Edge::s_lo);
  add(y0[0], y1[0], 1.0, Edge::s_hi);
  add(y0[1], y1[1], 0.0, Edge::theta_lo);
  add(y0[1], y1[1], 1.0, Edge::theta_hi);
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.lambda < b.lambda; });
  for (const auto& c : cands) {
    Vec3 y{};
    for (int k = 0; k < 3; ++k) y[k] = y0[k] + c.lambda * (y1[k] - y0[k]);
    const bool s_edge = c.edge == Edge::s_lo || c.edge == Edge::s_hi;
    if (s_edge) y[0] = c.edge == Edge::s_lo ? 0.0 : 1.0;
    else y[1] = c.edge == Edge::theta_lo ? 0.0 : 1.0;
    y[0] = std::clamp(y[0], 0.0, 1.0);
    y[1] = std::clamp(y[1], 0.0, 1.0);
    try {
      const auto sol = solve_saddle_node(fam, pq, sc.to_real(y), s_edge ? Frozen::s_fixed() : Frozen::theta_fixed());
      const Vec3 ys = sc.to_scaled({sol.s, sol.theta, sol.x});
      if (ys[0] >= -1e-12 && ys[0] <= 1.0 + 1e-12 && ys[1] >= -1e-12 && ys[1] <= 1.0 + 1e-12 &&
          dist3(ys, y) < 0.1)
        return std::make_pair(ys, c.edge);
    } catch (const Error&) {
    }
  }
  return std::nullopt;
}

inline Branch trace_branch(const Family& fam, const Rational& pq, const Scaling& sc, const Vec3& y_seed,
                           const Vec3& t_seed, const StepControl& ctl) {
  Branch br;
  Vec3 y = y_seed, t = t_seed;
  auto sys = continuation_system(fam, pq, sc.to_real(y)[0], sc.to_real(y)[1], y[2]);
  double h = std::min(ctl.max_step, std::max(ctl.min_step, 0.25 * ctl.max_step));
  double travelled = 0.0;
  while (true) {
    if (static_cast<int>(br.points.size()) >= ctl.max_points) {
      br.end.kind = TerminationKind::stalled;
      return br;
    }
    const Vec3 pred{y[0] + h * t[0], y[1] + h * t[1], y[2] + h * t[2]};
    auto corr = correct(fam, pq, sc, pred, pred, t, ctl);
    std::optional<Vec3> t_new;
    if (corr) {
      try {
        t_new = scaled_tangent(sc, corr->sys, &t);
      } catch (const Error&) {
        t_new.reset();
      }
    }
    const bool ok = corr && t_new && dot(*t_new, t) > 0.8 && dist3(corr->y, y) < 2.0 * h + 1e-12;
    if (!ok) {
      h *= 0.5;
      if (h < ctl.min_step) {
        br.end.kind = TerminationKind::stalled;
        return br;
      }
      continue;
    }
    Vec3 y_new = corr->y;

    // Cusp: G_xx changes sign between consecutive curve points.
    if (sys.gxx != 0.0 && corr->sys.gxx != 0.0 && (sys.gxx < 0.0) != (corr->sys.gxx < 0.0)) {
      const double lam = sys.gxx / (sys.gxx - corr->sys.gxx);
      Vec3 yc{};
      for (int k = 0; k < 3; ++k) yc[k] = y[k] + lam * (y_new[k] - y[k]);
      if (const auto c = cusp_newton(fam, pq, sc.to_real(yc))) {
        Vec3 yk = sc.to_scaled({c->s, c->theta, c->x});
        yk[2] = y[2] + (c->x - wrap_unit(y[2]));  // keep x on the unwrapped branch
        if (std::abs(yk[2] - yc[2]) > 0.5) yk[2] += (yc[2] > yk[2]) ? 1.0 : -1.0;
        if (dist3(yk, y) <= 2.0 * h + 1e-9 && inside_unit(yk)) {
          const auto csys = continuation_system(fam, pq, c->s, c->theta, yk[2]);
          Vec3 dir = t;
          try {
            dir = scaled_tangent(sc, csys, &t);
          } catch (const Error&) {
          }
          br.points.push_back(make_point(sc, csys, yk, dir));
          br.end.kind = TerminationKind::cusp;
          return br;
        }
      }
    }

    if (!inside_unit(y_new)) {
      if (const auto landed = land_on_edge(fam, pq, sc, y, y_new)) {
        Vec3 yb = landed->first;
        yb[2] = y[2] + (yb[2] - y[2]) - std::round(yb[2] - y[2]);  // unwrap near previous
        const auto bsys = continuation_system(fam, pq, sc.to_real(yb)[0], sc.to_real(yb)[1], yb[2]);
        Vec3 dir = t;
        try {
          dir = scaled_tangent(sc, bsys, &t);
        } catch (const Error&) {
        }
        if (!br.points.empty() && dist3(yb, y) < ctl.min_step / 4) br.points.pop_back();
        br.points.push_back(make_point(sc, bsys, yb, dir));
        br.end.kind = TerminationKind::boundary;
        br.end.edge = landed->second;
        return br;
      }
      br.end.kind = TerminationKind::stalled;
      return br;
    }

    travelled += dist3(y_new, y);
    y = y_new;
    t = *t_new;
    sys = corr->sys;
    br.points.push_back(make_point(sc, sys, y, t));

    const Vec3 back{y[0] - y_seed[0], y[1] - y_seed[1], circ(y[2], y_seed[2])};
    if (travelled > 4.0 * h && norm(back) < std::max(h, ctl.min_step) && dot(t, t_seed) > 0.9) {
      br.end.kind = TerminationKind::closed_loop;
      br.closed = true;
      return br;
    }

    if (corr->iterations <= 3) h = std::min(2.0 * h, ctl.max_step);
    else if (corr->iterations >= 8) h = std::max(0.5 * h, ctl.min_step);
  }
}

}  // namespace detail

/// Traces the saddle-node curve through a converged seed in both directions.
inline SaddleNodeCurve trace_curve(const Family& fam, const Rational& pq, const Vec3& seed,
                                   const StepControl& ctl = {}) {
  require(ctl.min_step > 0.0 && ctl.max_step >= ctl.min_step, "trace_curve: bad step control");
  const auto sys0 = continuation_system(fam, pq, seed[0], seed[1], seed[2]);
  require(std::abs(sys0.h1) < 1e-9 && std::abs(sys0.h2) < 1e-9, "trace_curve: seed is not a converged saddle-node point");
  require(fam.box().contains(seed[0], seed[1], 1e-9), "trace_curve: seed outside the parameter box");
  const detail::Scaling sc(fam.box());
  Vec3 y0 = sc.to_scaled(seed);
  y0[0] = std::clamp(y0[0], 0.0, 1.0);
  y0[1] = std::clamp(y0[1], 0.0, 1.0);
  const Vec3 t0 = detail::scaled_tangent(sc, sys0, nullptr);
  const Vec3 t0m{-t0[0], -t0[1], -t0[2]};

  // A seed on the box edge has only one direction into the box.
  auto outward = [&](const Vec3& dir) -> std::optional<Edge> {
    const Vec3 probe{y0[0] + 1e-6 * dir[0], y0[1] + 1e-6 * dir[1], 0.0};
    if (detail::inside_unit(probe)) return std::nullopt;
    if (probe[0] < 0.0) return Edge::s_lo;
    if (probe[0] > 1.0) return Edge::s_hi;
    if (probe[1] < 0.0) return Edge::theta_lo;
    return Edge::theta_hi;
  };
  auto run = [&](const Vec3& dir) {
    detail::Branch br;
    if (const auto e = outward(dir)) {
      br.end.kind = TerminationKind::boundary;
      br.end.edge = *e;
      return br;
    }
    return detail::trace_branch(fam, pq, sc, y0, dir, ctl);
  };

  SaddleNodeCurve curve;
  curve.pq = pq;
  const auto fwd = run(t0);
  const CurvePoint seed_pt = detail::make_point(sc, sys0, y0, t0);
  if (fwd.closed) {
    curve.points.push_back(seed_pt);
    curve.points.insert(curve.points.end(), fwd.points.begin(), fwd.points.end());
    curve.start = curve.end = fwd.end;
    return curve;
  }
  const auto bwd = run(t0m);
  for (auto it = bwd.points.rbegin(); it != bwd.points.rend(); ++it) {
    CurvePoint p = *it;
    for (double& c : p.tangent) c = -c;
    curve.points.push_back(p);
  }
  curve.points.push_back(seed_pt);
  curve.points.insert(curve.points.end(), fwd.points.begin(), fwd.points.end());
  curve.start = bwd.end;
  curve.end = fwd.end;
  return curve;
}

// ---- special points -------------------------------------------------------------------

enum class TangentDirection { horizontal, vertical };

struct SpecialPoint {
  int curve = -1;
  int segment = 0;
  CurvePoint point;

  friend bool operator==(const SpecialPoint&, const SpecialPoint&) = default;
};

/// Horizontal tangents have ds = 0 (the s-axis is drawn vertically); vertical
/// ones have dtheta = 0. Zeros at cusp endpoints are excluded.
inline std::vector<SpecialPoint> find_special_points(const Family& fam, const SaddleNodeCurve& curve,
                                                     TangentDirection dir, double arclength_tol = 1e-8) {
  require(curve.points.size() >= 2, "find_special_points: curve needs at least 2 points");
  const int comp = dir == TangentDirection::horizontal ? 0 : 1;
  const detail::Scaling sc(fam.box());
  const auto n = curve.points.size();
  std::vector<SpecialPoint> out;
  auto excluded = [&](std::size_t i) {
    return (i == 0 && curve.start.kind == TerminationKind::cusp) ||
           (i + 1 == n && curve.end.kind == TerminationKind::cusp);
  };
  StepControl ctl;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (excluded(i) || excluded(i + 1)) continue;
    const auto& a = curve.points[i];
    const auto& b = curve.points[i + 1];
    const double ca = a.tangent[comp], cb = b.tangent[comp];
    if (ca == 0.0 || (ca < 0.0) == (cb < 0.0)) continue;
    Vec3 ya = sc.to_scaled({a.s, a.theta, a.x});
    Vec3 yb = sc.to_scaled({b.s, b.theta, b.x});
    yb[2] = ya[2] + (yb[2] - ya[2]) - std::round(yb[2] - ya[2]);
    const Vec3 chord{yb[0] - ya[0], yb[1] - ya[1], yb[2] - ya[2]};
    const double len = norm(chord);
    if (len == 0.0) continue;
    const Vec3 nrm{chord[0] / len, chord[1] / len, chord[2] / len};
    const Vec3 chord_real = sc.dir_real(chord);
    double lo = 0.0, hi = 1.0;
    std::optional<CurvePoint> best;
    auto sample = [&](double lam) -> std::optional<std::pair<double, CurvePoint>> {
      const Vec3 anchor{ya[0] + lam * chord[0], ya[1] + lam * chord[1], ya[2] + lam * chord[2]};
      const auto c = detail::correct(fam, curve.pq, sc, anchor, anchor, nrm, ctl);
      if (!c) return std::nullopt;
      try {
        const Vec3 t = tangent_vector(c->sys.grad_h1, c->sys.grad_h2, &chord_real);
        CurvePoint p = detail::make_point(sc, c->sys, c->y, nrm);
        p.tangent = t;
        return std::make_pair(t[comp], p);
      } catch (const Error&) {
        return std::nullopt;
      }
    };
    bool failed = false;
    while ((hi - lo) * len > arclength_tol) {
      const double mid = 0.5 * (lo + hi);
      const auto sm = sample(mid);
      if (!sm) {
        failed = true;
        break;
      }
      best = sm->second;
      if ((sm->first < 0.0) == (ca < 0.0)) lo = mid;
      else hi = mid;
    }
    if (failed || !best) continue;
    out.push_back({-1, static_cast<int>(i), *best});
  }
  return out;
}

// ---- intersections ---------------------------------------------------------------------

struct IntersectionRecord {
  double s = 0.0, theta = 0.0;
  double x1 = 0.0, x2 = 0.0;
  double transversality_det = std::numeric_limits<double>::quiet_NaN();
  int curve_a = -1, curve_b = -1;
  int segment_a = -1, segment_b = -1;
  bool non_generic = false;

  friend bool operator==(const IntersectionRecord&, const IntersectionRecord&) = default;
};

/// Crossings of the (s, theta) projections, from the polylines alone. Pairs
/// whose preimages share x (the same orbit) are not intersections.
inline std::vector<IntersectionRecord> find_intersections(const std::vector<SaddleNodeCurve>& curves,
                                                          double same_orbit_tol = 1e-6) {
  std::vector<IntersectionRecord> out;
  for (std::size_t a = 0; a < curves.size(); ++a)
    for (std::size_t b = a; b < curves.size(); ++b) {
      const auto& pa = curves[a].points;
      const auto& pb = curves[b].points;
      for (std::size_t i = 0; i + 1 < pa.size(); ++i) {
        const double ax0 = std::min(pa[i].s, pa[i + 1].s), ax1 = std::max(pa[i].s, pa[i + 1].s);
        const double ay0 = std::min(pa[i].theta, pa[i + 1].theta), ay1 = std::max(pa[i].theta, pa[i + 1].theta);
        for (std::size_t j = (a == b ? i + 2 : 0); j + 1 < pb.size(); ++j) {
          if (std::max(pb[j].s, pb[j + 1].s) < ax0 || std::min(pb[j].s, pb[j + 1].s) > ax1) continue;
          if (std::max(pb[j].theta, pb[j + 1].theta) < ay0 || std::min(pb[j].theta, pb[j + 1].theta) > ay1) continue;
          const double rx = pa[i + 1].s - pa[i].s, ry = pa[i + 1].theta - pa[i].theta;
          const double qx = pb[j + 1].s - pb[j].s, qy = pb[j + 1].theta - pb[j].theta;
          const double den = rx * qy - ry * qx;
          if (den == 0.0) continue;
          const double wx = pb[j].s - pa[i].s, wy = pb[j].theta - pa[i].theta;
          const double lam = (wx * qy - wy * qx) / den;
          const double mu = (wx * ry - wy * rx) / den;
          if (lam < 0.0 || lam > 1.0 || mu < 0.0 || mu > 1.0) continue;
          auto lerp_x = [](double x0, double x1, double l) {
            const double d = x1 - x0 - std::round(x1 - x0);
            return detail::wrap_unit(x0 + l * d);
          };
          IntersectionRecord r;
          r.s = pa[i].s + lam * rx;
          r.theta = pa[i].theta + lam * ry;
          r.x1 = lerp_x(pa[i].x, pa[i + 1].x, lam);
          r.x2 = lerp_x(pb[j].x, pb[j + 1].x, mu);
          if (detail::circ(r.x1, r.x2) <= same_orbit_tol) continue;
          r.curve_a = static_cast<int>(a);
          r.curve_b = static_cast<int>(b);
          r.segment_a = static_cast<int>(i);
          r.segment_b = static_cast<int>(j);
          const bool dup = std::any_of(out.begin(), out.end(), [&](const IntersectionRecord& o) {
            return o.curve_a == r.curve_a && o.curve_b == r.curve_b && std::abs(o.s - r.s) < 1e-9 &&
                   std::abs(o.theta - r.theta) < 1e-9;
          });
          if (!dup) out.push_back(r);
        }
      }
    }
  return out;
}

namespace detail {

/// 4x4 Newton on (H1, H2) at x1 and at x2 sharing (s, theta).
inline std::optional<IntersectionRecord> refine_intersection(const Family& fam, const Rational& pq,
                                                             IntersectionRecord r) {
  double s = r.s, t = r.theta, x1 = r.x1, x2 = r.x2;
  for (int it = 0; it <= 50; ++it) {
    const auto a = continuation_system(fam, pq, s, t, x1);
    const auto b = continuation_system(fam, pq, s, t, x2);
    const double res = std::max({std::abs(a.h1), std::abs(a.h2), std::abs(b.h1), std::abs(b.h2)});
    if (res < 1e-11) {
      r.s = s;
      r.theta = t;
      r.x1 = wrap_unit(x1);
      r.x2 = wrap_unit(x2);
      r.transversality_det = a.grad_h1[0] * b.grad_h1[1] - a.grad_h1[1] * b.grad_h1[0];
      r.non_generic = std::abs(r.transversality_det) < 1e-8;
      return r;
    }
    if (it == 50) break;
    Eigen::Matrix4d J;
    J << a.grad_h1[0], a.grad_h1[1], a.grad_h1[2], 0.0,  //
        a.grad_h2[0], a.grad_h2[1], a.grad_h2[2], 0.0,   //
        b.grad_h1[0], b.grad_h1[1], 0.0, b.grad_h1[2],   //
        b.grad_h2[0], b.grad_h2[1], 0.0, b.grad_h2[2];
    const auto lu = J.fullPivLu();
    if (lu.rank() < 4) return std::nullopt;
    Eigen::Vector4d step = lu.solve(Eigen::Vector4d(-a.h1, -a.h2, -b.h1, -b.h2));
    if (!step.allFinite()) return std::nullopt;
    const double big = step.cwiseAbs().maxCoeff();
    if (big > 0.05) step *= 0.05 / big;
    s += step(0);
    t += step(1);
    x1 += step(2);
    x2 += step(3);
  }
  return std::nullopt;
}

}  // namespace detail

/// Polyline crossings refined jointly on both preimages, kept when strictly
/// inside the box and on distinct orbits.
inline std::vector<IntersectionRecord> find_intersections(const Family& fam, const Rational& pq,
                                                          const std::vector<SaddleNodeCurve>& curves) {
  const auto raw = find_intersections(curves);
  const auto& b = fam.box();
  std::vector<IntersectionRecord> out;
  for (const auto& r0 : raw) {
    const auto r = detail::refine_intersection(fam, pq, r0);
    if (!r) continue;
    const double ms = 1e-9 * b.s_len(), mt = 1e-9 * b.theta_len();
    if (!(r->s > b.s_lo + ms && r->s < b.s_hi - ms && r->theta > b.theta_lo + mt && r->theta < b.theta_hi - mt))
      continue;
    if (detail::circ(r->x1, r->x2) <= 1e-6) continue;
    const bool dup = std::any_of(out.begin(), out.end(), [&](const IntersectionRecord& o) {
      const bool same_pair = (detail::circ(o.x1, r->x1) < 1e-7 && detail::circ(o.x2, r->x2) < 1e-7) ||
                             (detail::circ(o.x1, r->x2) < 1e-7 && detail::circ(o.x2, r->x1) < 1e-7);
      return same_pair && std::abs(o.s - r->s) < 1e-9 && std::abs(o.theta - r->theta) < 1e-9;
    });
    if (!dup) out.push_back(*r);
  }
  return out;
}

// ---- diagram assembly -----------------------------------------------------------------

struct BoundaryHit {
  int curve = -1;
  bool at_end = false;  // false: the curve's first point
  Edge edge = Edge::none;
  double s = 0.0, theta = 0.0, x = 0.0;
  bool near_corner = false;

  friend bool operator==(const BoundaryHit&, const BoundaryHit&) = default;
};

struct BifurcationDiagram {
  Rational pq;
  std::vector<SaddleNodeCurve> curves;
  std::vector<CuspPoint> cusps;
  std::vector<SpecialPoint> horizontal_tangents;
  std::vector<SpecialPoint> vertical_tangents;
  std::vector<IntersectionRecord> intersections;
  std::vector<BoundaryHit> boundary_hits;
  std::vector<bool> rotation_confirmed;  // per curve

  friend bool operator==(const BifurcationDiagram&, const BifurcationDiagram&) = default;
};

struct DiagramOptions {
  int scan_grid = 16;
  int edge_samples = 64;
  StepControl step;
  double corner_margin = 1e-3;
  double hausdorff_tol = 1e-5;
};

namespace detail {

/// Local extrema of G(., s, theta) on a grid: candidate x for saddle nodes.
inline std::vector<double> displacement_extrema(const Family& fam, const Rational& pq, double s, double theta,
                                                int grid) {
  std::vector<double> g(grid);
  for (int i = 0; i < grid; ++i) g[i] = displacement(fam, pq, s, theta, static_cast<double>(i) / grid);
  std::vector<double> out;
  for (int i = 0; i < grid; ++i) {
    const double l = g[(i + grid - 1) % grid], c = g[i], r = g[(i + 1) % grid];
    if ((c > l && c >= r) || (c < l && c <= r)) out.push_back(static_cast<double>(i) / grid);
  }
  return out;
}

/// Inflection candidates: sign changes of G_xx on a grid.
inline std::vector<double> displacement_inflections(const Family& fam, const Rational& pq, double s, double theta,
                                                    int grid) {
  std::vector<double> g(grid);
  for (int i = 0; i < grid; ++i)
    g[i] = displacement_jet(fam, pq, s, theta, static_cast<double>(i) / grid).dxx();
  std::vector<double> out;
  for (int i = 0; i < grid; ++i)
    if ((g[i] < 0.0) != (g[(i + 1) % grid] < 0.0)) out.push_back((i + 0.5) / grid);
  return out;
}

inline double point_segment_dist(const Vec3& p, const Vec3& a, Vec3 b) {
  b[2] = a[2] + (b[2] - a[2]) - std::round(b[2] - a[2]);
  Vec3 pp = p;
  pp[2] = a[2] + (pp[2] - a[2]) - std::round(pp[2] - a[2]);
  const Vec3 ab{b[0] - a[0], b[1] - a[1], b[2] - a[2]};
  const double l2 = dot(ab, ab);
  double lam = l2 > 0.0 ? dot({pp[0] - a[0], pp[1] - a[1], pp[2] - a[2]}, ab) / l2 : 0.0;
  lam = std::clamp(lam, 0.0, 1.0);
  return dist3(pp, {a[0] + lam * ab[0], a[1] + lam * ab[1], a[2] + lam * ab[2]});
}

/// Scaled distance from p to a curve polyline, refined by projecting onto the
/// actual curve when close.
inline double distance_to_curve(const Family& fam, const Rational& pq, const Scaling& sc, const Vec3& y,
                                const SaddleNodeCurve& c) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_i = 0;
  std::vector<Vec3> ys(c.points.size());
  for (std::size_t i = 0; i < c.points.size(); ++i) ys[i] = sc.to_scaled({c.points[i].s, c.points[i].theta, c.points[i].x});
  for (std::size_t i = 0; i + 1 < ys.size(); ++i) {
    const double d = point_segment_dist(y, ys[i], ys[i + 1]);
    if (d < best) {
      best = d;
      best_i = i;
    }
  }
  if (ys.size() == 1) best = dist3_circ(y, ys[0]);
  if (best > 0.05 || ys.size() < 2) return best;
  // Project onto the true curve through the hyperplane orthogonal to the chord.
  Vec3 a = ys[best_i], b = ys[best_i + 1];
  b[2] = a[2] + (b[2] - a[2]) - std::round(b[2] - a[2]);
  Vec3 yy = y;
  yy[2] = a[2] + (yy[2] - a[2]) - std::round(yy[2] - a[2]);
  Vec3 ch{b[0] - a[0], b[1] - a[1], b[2] - a[2]};
  const double len = norm(ch);
  if (len == 0.0) return best;
  for (double& v : ch) v /= len;
  StepControl ctl;
  const auto cor = correct(fam, pq, sc, yy, yy, ch, ctl);
  if (!cor) return best;
  return std::min(best, dist3(cor->y, yy));
}

inline double hausdorff(const Scaling& sc, const SaddleNodeCurve& a, const SaddleNodeCurve& b) {
  auto directed = [&](const SaddleNodeCurve& p, const SaddleNodeCurve& q) {
    double worst = 0.0;
    for (const auto& pt : p.points) {
      const Vec3 y = sc.to_scaled({pt.s, pt.theta, pt.x});
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i + 1 < q.points.size(); ++i)
        best = std::min(best, point_segment_dist(y, sc.to_scaled({q.points[i].s, q.points[i].theta, q.points[i].x}),
                                                 sc.to_scaled({q.points[i + 1].s, q.points[i + 1].theta, q.points[i + 1].x})));
      if (q.points.size() == 1) best = dist3_circ(y, sc.to_scaled({q.points[0].s, q.points[0].theta, q.points[0].x}));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

inline bool lex_less(const CurvePoint& a, const CurvePoint& b) {
  return std::tie(a.s, a.theta, a.x) < std::tie(b.s, b.theta, b.x);
}

inline void reverse_curve(SaddleNodeCurve& c) {
  std::reverse(c.points.begin(), c.points.end());
  for (auto& p : c.points)
    for (double& v : p.tangent) v = -v;
  std::swap(c.start, c.end);
}

}  // namespace detail

inline BifurcationDiagram assemble_diagram(const Family& fam, const Rational& pq, const DiagramOptions& opt = {}) {
  require(opt.scan_grid >= 2, "assemble_diagram: scanGrid must be >= 2");
  require(opt.edge_samples >= 2, "assemble_diagram: edge samples must be >= 2");
  const auto& box = fam.box();
  const detail::Scaling sc(box);
  const int xgrid = static_cast<int>(256 * pq.q);
  BifurcationDiagram d;
  d.pq = pq;

  // Seed solves: frozen-edge solves along the boundary, frozen-s and
  // frozen-theta solves through interior cell centres.
  struct SeedTask {
    double s, theta;
    bool edge_s;   // solve with s frozen
    bool edge_t;   // solve with theta frozen
  };
  std::vector<SeedTask> tasks;
  for (int k = 0; k <= opt.edge_samples; ++k) {
    const double f = static_cast<double>(k) / opt.edge_samples;
    tasks.push_back({box.s_lo, box.theta_lo + f * box.theta_len(), true, false});
    tasks.push_back({box.s_hi, box.theta_lo + f * box.theta_len(), true, false});
    tasks.push_back({box.s_lo + f * box.s_len(), box.theta_lo, false, true});
    tasks.push_back({box.s_lo + f * box.s_len(), box.theta_hi, false, true});
  }
  for (int i = 0; i < opt.scan_grid; ++i)
    for (int j = 0; j < opt.scan_grid; ++j)
      tasks.push_back({box.s_lo + (i + 0.5) / opt.scan_grid * box.s_len(),
                       box.theta_lo + (j + 0.5) / opt.scan_grid * box.theta_len(), true, true});

  const auto solved = parallel_map<std::vector<Vec3>>(tasks.size(), [&](std::size_t n) {
    const auto& tk = tasks[n];
    std::vector<Vec3> found;
    for (double xe : detail::displacement_extrema(fam, pq, tk.s, tk.theta, xgrid)) {
      for (int mode = 0; mode < 2; ++mode) {
        if ((mode == 0 && !tk.edge_s) || (mode == 1 && !tk.edge_t)) continue;
        try {
          const auto p = solve_saddle_node(fam, pq, {tk.s, tk.theta, xe},
                                           mode == 0 ? Frozen::s_fixed() : Frozen::theta_fixed());
          if (box.contains(p.s, p.theta, 0.0)) found.push_back({p.s, p.theta, detail::wrap_unit(p.x)});
        } catch (const Error&) {
        }
      }
    }
    return found;
  });
  std::vector<Vec3> seeds;
  for (const auto& v : solved)
    for (const auto& p : v) {
      const Vec3 y = sc.to_scaled(p);
      const bool dup = std::any_of(seeds.begin(), seeds.end(),
                                   [&](const Vec3& o) { return detail::dist3_circ(sc.to_scaled(o), y) < 1e-8; });
      if (!dup) seeds.push_back(p);
    }
  std::sort(seeds.begin(), seeds.end());

  for (const auto& seed : seeds) {
    const Vec3 y = sc.to_scaled(seed);
    const bool covered = std::any_of(d.curves.begin(), d.curves.end(), [&](const SaddleNodeCurve& c) {
      return detail::distance_to_curve(fam, pq, sc, y, c) < 1e-6;
    });
    if (covered) continue;
    SaddleNodeCurve c;
    try {
      c = trace_curve(fam, pq, seed, opt.step);
    } catch (const Error&) {
      continue;
    }
    if (c.points.size() < 2) continue;
    const bool dup = std::any_of(d.curves.begin(), d.curves.end(), [&](const SaddleNodeCurve& o) {
      return detail::hausdorff(sc, o, c) < opt.hausdorff_tol;
    });
    if (!dup) d.curves.push_back(std::move(c));
  }

  // Canonical orientation and ordering.
  for (auto& c : d.curves)
    if (c.start.kind != TerminationKind::closed_loop && detail::lex_less(c.points.back(), c.points.front()))
      detail::reverse_curve(c);
  std::sort(d.curves.begin(), d.curves.end(), [](const SaddleNodeCurve& a, const SaddleNodeCurve& b) {
    return detail::lex_less(a.points.front(), b.points.front());
  });

  // Cusps: curve terminations plus independent 3-D solves from inflections.
  std::vector<Vec3> cusp_seeds;
  for (const auto& c : d.curves) {
    if (c.start.kind == TerminationKind::cusp) cusp_seeds.push_back({c.points.front().s, c.points.front().theta, c.points.front().x});
    if (c.end.kind == TerminationKind::cusp) cusp_seeds.push_back({c.points.back().s, c.points.back().theta, c.points.back().x});
  }
  for (int i = 0; i < opt.scan_grid; ++i)
    for (int j = 0; j < opt.scan_grid; ++j) {
      const double s = box.s_lo + (i + 0.5) / opt.scan_grid * box.s_len();
      const double t = box.theta_lo + (j + 0.5) / opt.scan_grid * box.theta_len();
      for (double xi : detail::displacement_inflections(fam, pq, s, t, xgrid)) cusp_seeds.push_back({s, t, xi});
    }
  for (const auto& c : find_cusps(fam, pq, cusp_seeds))
    if (box.contains(c.s, c.theta, 0.0)) d.cusps.push_back(c);

  auto cusp_index = [&](const CurvePoint& p) {
    int best = -1;
    double bd = 1e-6;
    for (std::size_t k = 0; k < d.cusps.size(); ++k) {
      const double dd = detail::dist3_circ({p.s, p.theta, p.x}, {d.cusps[k].s, d.cusps[k].theta, d.cusps[k].x});
      if (dd < bd) {
        bd = dd;
        best = static_cast<int>(k);
      }
    }
    return best;
  };

  for (std::size_t ci = 0; ci < d.curves.size(); ++ci) {
    auto& c = d.curves[ci];
    if (c.start.kind == TerminationKind::cusp) c.start.cusp_index = cusp_index(c.points.front());
    if (c.end.kind == TerminationKind::cusp) c.end.cusp_index = cusp_index(c.points.back());
    for (int e = 0; e < 2; ++e) {
      const Termination& term = e == 0 ? c.start : c.end;
      if (term.kind != TerminationKind::boundary) continue;
      const CurvePoint& p = e == 0 ? c.points.front() : c.points.back();
      BoundaryHit hit;
      hit.curve = static_cast<int>(ci);
      hit.at_end = e == 1;
      hit.edge = term.edge;
      hit.s = p.s;
      hit.theta = p.theta;
      hit.x = p.x;
      const Vec3 y = sc.to_scaled({p.s, p.theta, p.x});
      for (double cu : {0.0, 1.0})
        for (double cw : {0.0, 1.0})
          if (std::hypot(y[0] - cu, y[1] - cw) < opt.corner_margin) hit.near_corner = true;
      d.boundary_hits.push_back(hit);
    }
    for (auto sp : find_special_points(fam, c, TangentDirection::horizontal)) {
      sp.curve = static_cast<int>(ci);
      d.horizontal_tangents.push_back(sp);
    }
    for (auto sp : find_special_points(fam, c, TangentDirection::vertical)) {
      sp.curve = static_cast<int>(ci);
      d.vertical_tangents.push_back(sp);
    }
    const auto& mid = c.points[c.points.size() / 2];
    const auto r = detect_rational(fam, {mid.s, mid.theta}, pq.q);
    d.rotation_confirmed.push_back(r && *r == pq);
  }
  d.intersections = find_intersections(fam, pq, d.curves);
  return d;
}

inline std::vector<BifurcationDiagram> assemble_diagram(const Family& fam, const std::vector<Rational>& pqs,
                                                        const DiagramOptions& opt = {}) {
  std::vector<BifurcationDiagram> out;
  for (const auto& pq : pqs) out.push_back(assemble_diagram(fam, pq, opt));
  return out;
}

// ---- jet-space bookkeeping --------------------------------------------------------------

struct CodimensionEntry {
  std::string stratum;
  int codimension = 0;
};

struct JetDimensionTable {
  std::vector<std::pair<int, long long>> jet_dims;  // (k, dim J^k)
  std::vector<CodimensionEntry> codimensions;
};

inline long long binomial(int n, int k) {
  require(n >= 0 && k >= 0 && k <= n, "binomial: need 0 <= k <= n");
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// dim J^k(U x A, E) = dim(U x A) + C(dim(U x A) + k, k) with dim(U x A) = 3.
inline long long jet_space_dimension(int k) {
  require(k >= 0, "jet order must be >= 0");
  return 3 + binomial(3 + k, k);
}

inline JetDimensionTable jet_dimension_table(int max_k = 3) {
  JetDimensionTable t;
  for (int k = 1; k <= max_k; ++k) t.jet_dims.emplace_back(k, jet_space_dimension(k));
  t.codimensions = {{"Sigma_par", 2},          {"Sigma_par^(2)", 6},      {"Sigma_par^(3)", 10},
                    {"Sigma_deg", 3},          {"Sigma_deg,1", 4},        {"Sigma_deg,2", 4},
                    {"Sigma_deg,par^(2)", 7},  {"Sigma_par,tan^(2)", 7},  {"Sigma_par,hor", 3}};
  return t;
}

/// Remark on isolated points: Sigma_{l+1} has codimension l + 2.
inline int isolated_stratum_codimension(int l) {
  require(l >= 1, "parameter count must be >= 1");
  return l + 2;
}

}  // namespace circlebif
