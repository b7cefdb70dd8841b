#pragma once

// Parametric families of circle-map lifts.
//
// FamilySpec is plain data (what the JSON spec files hold). Family is the
// compiled, immutable evaluator built from it; every numerical routine in the
// library takes a `const Family&`.

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "circlebif/errors.hpp"
#include "circlebif/jet.hpp"
#include "circlebif/rational.hpp"

namespace circlebif {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct ParamBox {
  double s_lo = 0.0;
  double s_hi = 1.0;
  double theta_lo = -1.0;
  double theta_hi = 1.0;

  double s_len() const { return s_hi - s_lo; }
  double theta_len() const { return theta_hi - theta_lo; }
  bool contains(double s, double theta, double slack = 0.0) const {
    return s >= s_lo - slack && s <= s_hi + slack && theta >= theta_lo - slack && theta <= theta_hi + slack;
  }

  friend bool operator==(const ParamBox&, const ParamBox&) = default;
};

struct ParamPoint {
  double s = 0.0;
  double theta = 0.0;
};

struct Poly2Term {
  int i = 0;
  int j = 0;
  double coef = 0.0;
  /// Set when the coefficient was given as an exact rational "p/q".
  std::optional<Rational> exact;

  friend bool operator==(const Poly2Term&, const Poly2Term&) = default;
};

/// sum coef * s^i * theta^j
struct Poly2 {
  std::vector<Poly2Term> terms;

  static Poly2 constant(double c) { return Poly2{{{0, 0, c, std::nullopt}}}; }
  static Poly2 rational(const Rational& r) { return Poly2{{{0, 0, r.value(), r}}}; }
  static Poly2 monomial(int i, int j, double c) { return Poly2{{{i, j, c, std::nullopt}}}; }

  Poly2& add(int i, int j, double c) {
    terms.push_back({i, j, c, std::nullopt});
    return *this;
  }

  bool depends_on_s() const {
    for (const auto& t : terms)
      if (t.i > 0 && t.coef != 0.0) return true;
    return false;
  }
  bool depends_on_theta() const {
    for (const auto& t : terms)
      if (t.j > 0 && t.coef != 0.0) return true;
    return false;
  }

  template <class T>
  T eval(const T& s, const T& theta) const {
    T acc(0.0);
    for (const auto& t : terms) {
      if (t.i == 0 && t.j == 0) {
        acc += T(t.coef);
        continue;
      }
      T m(t.coef);
      for (int n = 0; n < t.i; ++n) m *= s;
      for (int n = 0; n < t.j; ++n) m *= theta;
      acc += m;
    }
    return acc;
  }

  friend bool operator==(const Poly2&, const Poly2&) = default;
};

struct FourierMode {
  int k = 1;
  Poly2 amp_sin;
  Poly2 amp_cos;

  friend bool operator==(const FourierMode&, const FourierMode&) = default;
};

/// x -> x + offset(s, theta)
struct RotationStage {
  Poly2 offset;
  friend bool operator==(const RotationStage&, const RotationStage&) = default;
};

/// x -> x + offset + sum_k [a_k sin 2 pi k x + b_k cos 2 pi k x]
struct FourierStage {
  Poly2 offset;
  std::vector<FourierMode> modes;
  friend bool operator==(const FourierStage&, const FourierStage&) = default;
};

/// Time-delta map of x' = v(x), v a Fourier series (k = 0 allowed for a
/// constant drift), integrated by fixed-step RK4.
struct FlowStage {
  std::vector<FourierMode> field;
  double delta = 0.0;
  int steps = 64;
  friend bool operator==(const FlowStage&, const FlowStage&) = default;
};

struct Stage;

/// Inverse of a parameter-free chain of stages.
struct InverseStage {
  std::vector<Stage> of;
};

enum class Blend { smoothstep };

/// x + (1 - sigma(s)) (L0(theta, x) - x) + sigma(s) (L1(theta, x) - x)
struct HomotopyStage {
  std::vector<Stage> from;
  std::vector<Stage> to;
  Blend blend = Blend::smoothstep;
};

struct Stage {
  std::variant<RotationStage, FourierStage, FlowStage, InverseStage, HomotopyStage> v;

  Stage() = default;
  template <class S, class = std::enable_if_t<!std::is_same_v<std::decay_t<S>, Stage>>>
  Stage(S&& s) : v(std::forward<S>(s)) {}  // NOLINT: implicit by intent
};

inline bool operator==(const Stage& a, const Stage& b);
inline bool operator==(const InverseStage& a, const InverseStage& b) { return a.of == b.of; }
inline bool operator==(const HomotopyStage& a, const HomotopyStage& b) {
  return a.blend == b.blend && a.from == b.from && a.to == b.to;
}
inline bool operator==(const Stage& a, const Stage& b) { return a.v == b.v; }

/// Declarative description of a two-parameter family of lifts. Stages are
/// applied in list order (the first stage acts on x first).
struct FamilySpec {
  ParamBox box;
  bool monotone_in_theta = false;
  std::vector<Stage> stages;

  friend bool operator==(const FamilySpec& a, const FamilySpec& b) {
    return a.box == b.box && a.monotone_in_theta == b.monotone_in_theta && a.stages == b.stages;
  }
};

inline double smoothstep(double s) { return s * s * (3.0 - 2.0 * s); }
inline double smoothstep_derivative(double s) { return 6.0 * s * (1.0 - s); }

namespace detail {

inline bool chain_depends_on_s(const std::vector<Stage>& chain);
inline bool chain_depends_on_theta(const std::vector<Stage>& chain);

inline bool modes_depend(const std::vector<FourierMode>& modes, bool on_s) {
  for (const auto& m : modes) {
    if (on_s ? (m.amp_sin.depends_on_s() || m.amp_cos.depends_on_s())
             : (m.amp_sin.depends_on_theta() || m.amp_cos.depends_on_theta()))
      return true;
  }
  return false;
}

inline bool stage_depends(const Stage& st, bool on_s) {
  return std::visit(
      [&](const auto& s) -> bool {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, RotationStage>) {
          return on_s ? s.offset.depends_on_s() : s.offset.depends_on_theta();
        } else if constexpr (std::is_same_v<S, FourierStage>) {
          return (on_s ? s.offset.depends_on_s() : s.offset.depends_on_theta()) || modes_depend(s.modes, on_s);
        } else if constexpr (std::is_same_v<S, FlowStage>) {
          return modes_depend(s.field, on_s);
        } else if constexpr (std::is_same_v<S, InverseStage>) {
          return on_s ? chain_depends_on_s(s.of) : chain_depends_on_theta(s.of);
        } else {
          if (on_s) return true;
          return chain_depends_on_theta(s.from) || chain_depends_on_theta(s.to);
        }
      },
      st.v);
}

inline bool chain_depends_on_s(const std::vector<Stage>& chain) {
  for (const auto& st : chain)
    if (stage_depends(st, true)) return true;
  return false;
}
inline bool chain_depends_on_theta(const std::vector<Stage>& chain) {
  for (const auto& st : chain)
    if (stage_depends(st, false)) return true;
  return false;
}

template <class T>
T fourier_sum(const std::vector<FourierMode>& modes, const std::vector<std::pair<T, T>>& amps, const T& x) {
  T acc(0.0);
  for (std::size_t n = 0; n < modes.size(); ++n) {
    const int k = modes[n].k;
    if (k == 0) {
      acc += amps[n].second;
      continue;
    }
    const auto sc = sincos(x * (kTwoPi * k));
    acc += amps[n].first * sc.sin + amps[n].second * sc.cos;
  }
  return acc;
}

/// Exact-input cache for parameter-free stages evaluated in double precision.
/// Grid scans revisit the same abscissae many times; the cache returns
/// bit-identical results to a fresh evaluation.
class StageMemo {
 public:
  std::optional<double> find(double x) const {
    const auto key = std::bit_cast<std::uint64_t>(x);
    std::lock_guard lock(m_);
    auto it = map_.find(key);
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }
  void store(double x, double y) const {
    const auto key = std::bit_cast<std::uint64_t>(x);
    std::lock_guard lock(m_);
    if (map_.size() >= kCapacity) map_.clear();
    map_.emplace(key, y);
  }

 private:
  static constexpr std::size_t kCapacity = std::size_t{1} << 20;
  mutable std::mutex m_;
  mutable std::unordered_map<std::uint64_t, double> map_;
};

struct CompiledStage;
using CompiledChain = std::vector<CompiledStage>;

struct CompiledStage {
  const Stage* src = nullptr;
  CompiledChain sub_a;  // inverse: h; homotopy: from
  CompiledChain sub_b;  // homotopy: to
  bool param_free = false;
  double inverse_bound = 0.0;  // bracket half-width for inverse solves
  std::unique_ptr<StageMemo> memo;
};

template <class T>
T eval_chain(const CompiledChain& chain, T x, const T& s, const T& theta);

inline double invert_chain(const CompiledChain& h, double bound, double u);

template <class T>
T eval_stage_uncached(const CompiledStage& cs, const T& x, const T& s, const T& theta) {
  return std::visit(
      [&](const auto& st) -> T {
        using S = std::decay_t<decltype(st)>;
        if constexpr (std::is_same_v<S, RotationStage>) {
          return x + st.offset.eval(s, theta);
        } else if constexpr (std::is_same_v<S, FourierStage>) {
          std::vector<std::pair<T, T>> amps;
          amps.reserve(st.modes.size());
          for (const auto& m : st.modes) amps.emplace_back(m.amp_sin.eval(s, theta), m.amp_cos.eval(s, theta));
          return x + st.offset.eval(s, theta) + fourier_sum(st.modes, amps, x);
        } else if constexpr (std::is_same_v<S, FlowStage>) {
          std::vector<std::pair<T, T>> amps;
          amps.reserve(st.field.size());
          for (const auto& m : st.field) amps.emplace_back(m.amp_sin.eval(s, theta), m.amp_cos.eval(s, theta));
          const double h = st.delta / st.steps;
          T y = x;
          for (int n = 0; n < st.steps; ++n) {
            const T k1 = fourier_sum(st.field, amps, y);
            const T k2 = fourier_sum(st.field, amps, y + k1 * (h / 2.0));
            const T k3 = fourier_sum(st.field, amps, y + k2 * (h / 2.0));
            const T k4 = fourier_sum(st.field, amps, y + k3 * h);
            y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
          }
          return y;
        } else if constexpr (std::is_same_v<S, InverseStage>) {
          const double y0 = invert_chain(cs.sub_a, cs.inverse_bound, value_of(x));
          if constexpr (std::is_same_v<T, double>) {
            return y0;
          } else if constexpr (std::is_same_v<T, Dual>) {
            const Dual hy = eval_chain(cs.sub_a, Dual(y0, 1.0), Dual(0.0), Dual(0.0));
            return apply_series(x, {y0, 1.0 / hy.d, 0.0, 0.0});
          } else {
            // Inverse-function series: if h(y0 + t) = u0 + h1 t + h2 t^2 + h3 t^3
            // then t = a1 w + a2 w^2 + a3 w^3 with w = u - u0.
            const JetBase b{y0, 0.0, 0.0};
            const Jet3 hy = eval_chain(cs.sub_a, Jet3::variable(b, Var::x), Jet3(b, 0.0), Jet3(b, 0.0));
            const double h1 = hy.coeff(1, 0, 0), h2 = hy.coeff(2, 0, 0), h3 = hy.coeff(3, 0, 0);
            const double a1 = 1.0 / h1;
            const double a2 = -h2 / (h1 * h1 * h1);
            const double a3 = (2.0 * h2 * h2 - h1 * h3) / (h1 * h1 * h1 * h1 * h1);
            return apply_series(x, {y0, a1, a2, a3});
          }
        } else {
          const T l0 = eval_chain(cs.sub_a, x, s, theta);
          const T l1 = eval_chain(cs.sub_b, x, s, theta);
          const T sigma = s * s * (T(3.0) - s * 2.0);
          return x + (T(1.0) - sigma) * (l0 - x) + sigma * (l1 - x);
        }
      },
      cs.src->v);
}

template <class T>
T eval_stage(const CompiledStage& cs, const T& x, const T& s, const T& theta) {
  if constexpr (std::is_same_v<T, double>) {
    if (cs.memo) {
      if (auto hit = cs.memo->find(x)) return *hit;
      const double y = eval_stage_uncached(cs, x, s, theta);
      cs.memo->store(x, y);
      return y;
    }
  }
  return eval_stage_uncached(cs, x, s, theta);
}

template <class T>
T eval_chain(const CompiledChain& chain, T x, const T& s, const T& theta) {
  for (const auto& cs : chain) x = eval_stage(cs, x, s, theta);
  return x;
}

inline double invert_chain(const CompiledChain& h, double bound, double u) {
  const double n = std::floor(u);
  const double r = u - n;
  const auto g = [&](double y) { return eval_chain(h, y, 0.0, 0.0) - r; };
  double lo = r - bound, hi = r + bound;
  double glo = g(lo), ghi = g(hi);
  for (int it = 0; it < 60 && glo > 0.0; ++it) {
    lo -= bound;
    glo = g(lo);
  }
  for (int it = 0; it < 60 && ghi < 0.0; ++it) {
    hi += bound;
    ghi = g(hi);
  }
  if (glo > 0.0 || ghi < 0.0) fail(ErrorCode::NotDiffeomorphism, "inverse stage: cannot bracket preimage");
  double y = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const Dual gy = eval_chain(h, Dual(y, 1.0), Dual(0.0), Dual(0.0)) - Dual(r);
    if (gy.v == 0.0) break;
    if (gy.v < 0.0)
      lo = y;
    else
      hi = y;
    double next = (gy.d > 0.0) ? y - gy.v / gy.d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - y);
    y = next;
    if (step < 1e-15 * (1.0 + std::abs(y)) || hi - lo < 1e-15) break;
  }
  return y + n;
}

}  // namespace detail

/// Compiled, immutable family evaluator. Copies share state.
class Family {
 public:
  explicit Family(FamilySpec spec) : impl_(std::make_shared<Impl>(std::move(spec))) {}

  const FamilySpec& spec() const { return impl_->spec; }
  const ParamBox& box() const { return impl_->spec.box; }
  bool monotone_in_theta() const { return impl_->spec.monotone_in_theta; }
  bool depends_on_s() const { return impl_->dep_s; }
  bool depends_on_theta() const { return impl_->dep_theta; }

  /// One application of the lift of f_(s, theta).
  template <class T>
  T lift(const T& x, const T& s, const T& theta) const {
    return detail::eval_chain(impl_->chain, x, s, theta);
  }
  double operator()(double x, double s, double theta) const { return lift(x, s, theta); }

 private:
  struct Impl {
    FamilySpec spec;
    detail::CompiledChain chain;
    bool dep_s = false;
    bool dep_theta = false;

    explicit Impl(FamilySpec sp) : spec(std::move(sp)) {
      check_box(spec.box);
      if (spec.stages.empty()) fail(ErrorCode::InvalidFamily, "family has no stages");
      chain = compile(spec.stages, "stages");
      dep_s = detail::chain_depends_on_s(spec.stages);
      dep_theta = detail::chain_depends_on_theta(spec.stages);
    }
  };

  static void check_box(const ParamBox& b) {
    const bool finite = std::isfinite(b.s_lo) && std::isfinite(b.s_hi) && std::isfinite(b.theta_lo) &&
                        std::isfinite(b.theta_hi);
    if (!finite || !(b.s_lo < b.s_hi) || !(b.theta_lo < b.theta_hi))
      fail(ErrorCode::InvalidFamily, "parameter box must have finite bounds with lo < hi");
  }

  static void check_poly(const Poly2& p, const std::string& where) {
    for (const auto& t : p.terms) {
      if (t.i < 0 || t.j < 0) fail(ErrorCode::InvalidFamily, where + ": negative exponent");
      if (!std::isfinite(t.coef)) fail(ErrorCode::InvalidFamily, where + ": non-finite coefficient");
    }
  }

  static void check_modes(const std::vector<FourierMode>& modes, int min_k, const std::string& where) {
    for (const auto& m : modes) {
      if (m.k < min_k) fail(ErrorCode::InvalidFamily, where + ": mode index below " + std::to_string(min_k));
      check_poly(m.amp_sin, where);
      check_poly(m.amp_cos, where);
    }
  }

  static detail::CompiledChain compile(const std::vector<Stage>& stages, const std::string& where) {
    detail::CompiledChain out;
    out.reserve(stages.size());
    for (std::size_t n = 0; n < stages.size(); ++n) {
      const std::string here = where + "[" + std::to_string(n) + "]";
      detail::CompiledStage cs;
      cs.src = &stages[n];
      cs.param_free = !detail::stage_depends(stages[n], true) && !detail::stage_depends(stages[n], false);
      std::visit(
          [&](const auto& st) {
            using S = std::decay_t<decltype(st)>;
            if constexpr (std::is_same_v<S, RotationStage>) {
              check_poly(st.offset, here);
            } else if constexpr (std::is_same_v<S, FourierStage>) {
              check_poly(st.offset, here);
              check_modes(st.modes, 1, here);
            } else if constexpr (std::is_same_v<S, FlowStage>) {
              check_modes(st.field, 0, here);
              if (!std::isfinite(st.delta)) fail(ErrorCode::InvalidFamily, here + ": non-finite delta");
              if (st.steps < 1) fail(ErrorCode::InvalidFamily, here + ": flow needs steps >= 1");
              if (cs.param_free) cs.memo = std::make_unique<detail::StageMemo>();
            } else if constexpr (std::is_same_v<S, InverseStage>) {
              if (st.of.empty()) fail(ErrorCode::InvalidFamily, here + ": inverse of an empty chain");
              if (detail::chain_depends_on_s(st.of) || detail::chain_depends_on_theta(st.of))
                fail(ErrorCode::InvalidFamily, here + ": inverse stage must be parameter-free");
              cs.sub_a = compile(st.of, here + ".of");
              double sup = 0.0;
              for (int i = 0; i < 1024; ++i) {
                const double y = i / 1024.0;
                sup = std::max(sup, std::abs(detail::eval_chain(cs.sub_a, y, 0.0, 0.0) - y));
              }
              cs.inverse_bound = sup + 0.25;
              cs.memo = std::make_unique<detail::StageMemo>();
            } else {
              if (detail::chain_depends_on_s(st.from) || detail::chain_depends_on_s(st.to))
                fail(ErrorCode::InvalidFamily, here + ": homotopy endpoints must be one-parameter (theta) families");
              if (st.from.empty() || st.to.empty()) fail(ErrorCode::InvalidFamily, here + ": empty homotopy endpoint");
              cs.sub_a = compile(st.from, here + ".from");
              cs.sub_b = compile(st.to, here + ".to");
            }
          },
          stages[n].v);
      out.push_back(std::move(cs));
    }
    return out;
  }

  std::shared_ptr<const Impl> impl_;
};

// ---- validation -----------------------------------------------------------

struct ValidationReport {
  double min_derivative = 0.0;
  bool ok = false;
  double at_s = 0.0;
  double at_theta = 0.0;
  double at_x = 0.0;
};

namespace detail {

inline std::vector<double> param_axis(double lo, double hi, int n, bool varies) {
  if (!varies) return {lo};
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

}  // namespace detail

/// Minimum of d/dx of the one-step lift over an x grid times a parameter grid;
/// axes the family does not depend on are sampled once.
inline ValidationReport validate_diffeo(const Family& fam, int grid_x = 256, int grid_params = 16) {
  require(grid_x >= 256, "validate_diffeo: gridX must be >= 256");
  require(grid_params >= 16, "validate_diffeo: gridParams must be >= 16");
  const auto& b = fam.box();
  const auto ss = detail::param_axis(b.s_lo, b.s_hi, grid_params, fam.depends_on_s());
  const auto ts = detail::param_axis(b.theta_lo, b.theta_hi, grid_params, fam.depends_on_theta());
  ValidationReport rep;
  rep.min_derivative = std::numeric_limits<double>::infinity();
  for (double s : ss)
    for (double t : ts)
      for (int i = 0; i < grid_x; ++i) {
        const double x = static_cast<double>(i) / grid_x;
        const Dual d = fam.lift(Dual(x, 1.0), Dual(s), Dual(t));
        if (!std::isfinite(d.d)) fail(ErrorCode::InvalidFamily, "non-finite derivative during validation");
        if (d.d < rep.min_derivative) {
          rep.min_derivative = d.d;
          rep.at_s = s;
          rep.at_theta = t;
          rep.at_x = x;
        }
      }
  rep.ok = rep.min_derivative > 0.0;
  return rep;
}

/// Checks d/dtheta of the lift is positive on a grid (used before tongue
/// searches that rely on monotonicity). Evaluated at a single s.
inline bool verify_monotone_in_theta(const Family& fam, double s, int grid_x = 256, int grid_theta = 16) {
  if (!fam.depends_on_theta()) return false;
  const auto& b = fam.box();
  for (int j = 0; j < grid_theta; ++j) {
    const double t = b.theta_lo + b.theta_len() * j / (grid_theta - 1);
    for (int i = 0; i < grid_x; ++i) {
      const double x = static_cast<double>(i) / grid_x;
      const Dual d = fam.lift(Dual(x), Dual(s), Dual(t, 1.0));
      if (!(d.d > 0.0)) return false;
    }
  }
  return true;
}

// ---- constructions ----------------------------------------------------------

struct Lemma1Params {
  std::int64_t p = 0;
  std::int64_t q = 1;
  int n = 1;
  double delta = 0.05;
  double amplitude = 1.0;
  int steps = 64;
};

/// Rotation by p/q composed after the time-delta map of
/// x' = amplitude * sin(2 pi q N x). The field has period 1/(qN), so it commutes
/// with the rotation and has N sinks and N sources per fundamental domain.
inline FamilySpec build_lemma1_family(const Lemma1Params& prm) {
  require(prm.q >= 1, "lemma1: q must be >= 1");
  require(std::gcd(prm.p, prm.q) == 1, "lemma1: p and q must be coprime");
  require(prm.n >= 1, "lemma1: N must be >= 1");
  require(prm.steps >= 1, "lemma1: steps must be >= 1");
  if (prm.delta == 0.0 || prm.amplitude == 0.0)
    fail(ErrorCode::DegenerateConstruction, "delta and amplitude must be nonzero (result would be a rigid rotation)");
  require(prm.delta > 0.0 && prm.amplitude > 0.0, "lemma1: delta and amplitude must be positive");
  FlowStage flow;
  flow.field.push_back({static_cast<int>(prm.q * prm.n), Poly2::constant(prm.amplitude), Poly2{}});
  flow.delta = prm.delta;
  flow.steps = prm.steps;
  FamilySpec spec;
  spec.stages.emplace_back(std::move(flow));
  spec.stages.emplace_back(RotationStage{Poly2::rational(Rational(prm.p, prm.q))});
  return spec;
}

/// theta-family x -> theta + lift(x), lift taken from a parameter-free spec.
inline FamilySpec embed_theta_shift(FamilySpec spec) {
  spec.stages.emplace_back(RotationStage{Poly2::monomial(0, 1, 1.0)});
  spec.monotone_in_theta = true;
  return spec;
}

inline FamilySpec build_homotopy(const FamilySpec& f0, const FamilySpec& f1, Blend blend = Blend::smoothstep) {
  require(f0.box.theta_lo == f1.box.theta_lo && f0.box.theta_hi == f1.box.theta_hi,
          "homotopy endpoints must share the theta range");
  for (const auto* f : {&f0, &f1}) {
    const Family fam(*f);
    if (fam.depends_on_s()) fail(ErrorCode::InvalidFamily, "homotopy endpoints must not depend on s");
    const auto rep = validate_diffeo(fam);
    if (!rep.ok) fail(ErrorCode::NotDiffeomorphism, "homotopy endpoint is not a diffeomorphism family");
  }
  FamilySpec out;
  out.box = {0.0, 1.0, f0.box.theta_lo, f0.box.theta_hi};
  out.monotone_in_theta = f0.monotone_in_theta && f1.monotone_in_theta;
  out.stages.emplace_back(HomotopyStage{f0.stages, f1.stages, blend});
  const auto rep = validate_diffeo(Family(out));
  if (!rep.ok) {
    std::ostringstream os;
    os.precision(17);
    os << "blended family fails at (s, theta, x) = (" << rep.at_s << ", " << rep.at_theta << ", " << rep.at_x
       << "), d/dx = " << rep.min_derivative;
    fail(ErrorCode::NotDiffeomorphism, os.str());
  }
  return out;
}

/// h^-1 o f o h for a parameter-free Fourier lift h.
inline FamilySpec conjugate_family(const FamilySpec& spec, const FourierStage& h) {
  if (h.offset.depends_on_s() || h.offset.depends_on_theta() || detail::modes_depend(h.modes, true) ||
      detail::modes_depend(h.modes, false))
    fail(ErrorCode::InvalidFamily, "conjugating map must not depend on parameters");
  FamilySpec hs;
  hs.stages.emplace_back(h);
  const auto rep = validate_diffeo(Family(hs), 1024, 16);
  if (!rep.ok) fail(ErrorCode::NotDiffeomorphism, "conjugating map is not a diffeomorphism");
  FamilySpec out = spec;
  out.stages.clear();
  out.stages.emplace_back(h);
  for (const auto& st : spec.stages) out.stages.push_back(st);
  out.stages.emplace_back(InverseStage{{Stage(h)}});
  return out;
}

// ---- built-in families -------------------------------------------------------

namespace families {

inline FamilySpec rigid_rotation(double alpha) {
  FamilySpec f;
  f.stages.emplace_back(RotationStage{Poly2::constant(alpha)});
  return f;
}

inline FamilySpec rigid_theta() {
  FamilySpec f;
  f.monotone_in_theta = true;
  f.stages.emplace_back(RotationStage{Poly2::monomial(0, 1, 1.0)});
  return f;
}

/// x + theta + (s / 2 pi) sin 2 pi x at a fixed s.
inline FamilySpec arnold_theta(double s) {
  FamilySpec f;
  f.monotone_in_theta = true;
  FourierStage st;
  st.offset = Poly2::monomial(0, 1, 1.0);
  st.modes.push_back({1, Poly2::constant(s / kTwoPi), Poly2{}});
  f.stages.emplace_back(std::move(st));
  return f;
}

/// x + theta + (s / 2 pi) sin 2 pi x with s a parameter.
inline FamilySpec arnold_2p(ParamBox box = {0.1, 1.0, -0.5, 0.5}) {
  FamilySpec f;
  f.box = box;
  f.monotone_in_theta = true;
  FourierStage st;
  st.offset = Poly2::monomial(0, 1, 1.0);
  st.modes.push_back({1, Poly2::monomial(1, 0, 1.0 / kTwoPi), Poly2{}});
  f.stages.emplace_back(std::move(st));
  return f;
}

/// x + theta + s sin 2 pi x + 0.1 sin 4 pi x: a cusp at (s, theta, x) = (0.2, 0, 0.5).
inline FamilySpec cusp_2p(ParamBox box = {0.0, 0.5, -0.2, 0.2}) {
  FamilySpec f;
  f.box = box;
  f.monotone_in_theta = true;
  FourierStage st;
  st.offset = Poly2::monomial(0, 1, 1.0);
  st.modes.push_back({1, Poly2::monomial(1, 0, 1.0), Poly2{}});
  st.modes.push_back({2, Poly2::constant(0.1), Poly2{}});
  f.stages.emplace_back(std::move(st));
  return f;
}

/// x + theta + s sin 2 pi x + 0.02 sin 4 pi x + 0.015 cos 2 pi x.
inline FamilySpec intersect_2p(ParamBox box = {0.0, 0.1, -0.15, 0.15}) {
  FamilySpec f;
  f.box = box;
  f.monotone_in_theta = true;
  FourierStage st;
  st.offset = Poly2::monomial(0, 1, 1.0);
  st.modes.push_back({1, Poly2::monomial(1, 0, 1.0), Poly2::constant(0.015)});
  st.modes.push_back({2, Poly2::constant(0.02), Poly2{}});
  f.stages.emplace_back(std::move(st));
  return f;
}

}  // namespace families

}  // namespace circlebif
