#pragma once

// Truncated Taylor arithmetic used to transport derivatives through lifts.
//
// Jet3 is a degree-3 expansion in the three variables (x, s, theta) around a
// base point; Dual carries a value and one directional first derivative. Both
// model the same small "scalar" concept as double, so every lift in the
// library is written once as a template and evaluated in whichever type the
// caller needs.

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "circlebif/errors.hpp"

namespace circlebif {

struct JetBase {
  double x = 0.0;
  double s = 0.0;
  double theta = 0.0;

  friend bool operator==(const JetBase&, const JetBase&) = default;
};

enum class Var { x, s, theta };

namespace detail {

inline constexpr int kJetOrder = 3;
inline constexpr int kJetSize = 20;

struct MonomialTable {
  std::array<std::array<std::array<int, 4>, 4>, 4> index{};
  std::array<std::array<int, 3>, kJetSize> exps{};
  struct Product {
    int lhs;
    int rhs;
    int out;
  };
  std::array<Product, 84> products{};
  int product_count = 0;
};

constexpr MonomialTable make_monomial_table() {
  MonomialTable t{};
  for (auto& a : t.index)
    for (auto& b : a)
      for (auto& c : b) c = -1;
  int n = 0;
  for (int deg = 0; deg <= kJetOrder; ++deg)
    for (int i = deg; i >= 0; --i)
      for (int j = deg - i; j >= 0; --j) {
        const int k = deg - i - j;
        t.index[i][j][k] = n;
        t.exps[n] = {i, j, k};
        ++n;
      }
  for (int a = 0; a < kJetSize; ++a)
    for (int b = 0; b < kJetSize; ++b) {
      const int i = t.exps[a][0] + t.exps[b][0];
      const int j = t.exps[a][1] + t.exps[b][1];
      const int k = t.exps[a][2] + t.exps[b][2];
      if (i + j + k <= kJetOrder) t.products[t.product_count++] = {a, b, t.index[i][j][k]};
    }
  return t;
}

inline constexpr MonomialTable kMonomials = make_monomial_table();
static_assert(kMonomials.product_count == 84);

constexpr double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

}  // namespace detail

/// Truncated trivariate Taylor polynomial of total degree <= 3.
///
/// A jet built from a plain number has no base point and combines with jets
/// at any base; two based jets must share their base exactly.
class Jet3 {
 public:
  static constexpr int kSize = detail::kJetSize;

  Jet3() = default;
  Jet3(double constant) { c_[0] = constant; }  // NOLINT: implicit by intent
  Jet3(const JetBase& base, double constant) : base_(base), has_base_(true) { c_[0] = constant; }

  static Jet3 variable(const JetBase& base, Var v) {
    Jet3 j(base, 0.0);
    switch (v) {
      case Var::x:
        j.c_[0] = base.x;
        j.c_[idx(1, 0, 0)] = 1.0;
        break;
      case Var::s:
        j.c_[0] = base.s;
        j.c_[idx(0, 1, 0)] = 1.0;
        break;
      case Var::theta:
        j.c_[0] = base.theta;
        j.c_[idx(0, 0, 1)] = 1.0;
        break;
    }
    return j;
  }

  static constexpr int idx(int i, int j, int k) { return detail::kMonomials.index[i][j][k]; }

  const JetBase& base() const { return base_; }
  bool has_base() const { return has_base_; }

  double coeff(int i, int j, int k) const { return c_[idx(i, j, k)]; }
  void set_coeff(int i, int j, int k, double v) { c_[idx(i, j, k)] = v; }
  const std::array<double, kSize>& coeffs() const { return c_; }
  std::array<double, kSize>& coeffs() { return c_; }

  double value() const { return c_[0]; }
  /// Partial derivative d^(i+j+k) / dx^i ds^j dtheta^k at the base point.
  double partial(int i, int j, int k) const {
    return detail::factorial(i) * detail::factorial(j) * detail::factorial(k) * coeff(i, j, k);
  }
  double dx() const { return coeff(1, 0, 0); }
  double dxx() const { return 2.0 * coeff(2, 0, 0); }
  double dxxx() const { return 6.0 * coeff(3, 0, 0); }
  double ds() const { return coeff(0, 1, 0); }
  double dtheta() const { return coeff(0, 0, 1); }
  double dxs() const { return coeff(1, 1, 0); }
  double dxtheta() const { return coeff(1, 0, 1); }

  bool all_finite() const {
    for (double v : c_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  Jet3 operator-() const {
    Jet3 r = *this;
    for (double& v : r.c_) v = -v;
    return r;
  }

  Jet3& operator+=(const Jet3& o) {
    adopt_base(o);
    for (int n = 0; n < kSize; ++n) c_[n] += o.c_[n];
    return *this;
  }
  Jet3& operator-=(const Jet3& o) {
    adopt_base(o);
    for (int n = 0; n < kSize; ++n) c_[n] -= o.c_[n];
    return *this;
  }
  Jet3& operator*=(const Jet3& o) {
    *this = *this * o;
    return *this;
  }
  Jet3& operator+=(double v) {
    c_[0] += v;
    return *this;
  }
  Jet3& operator-=(double v) {
    c_[0] -= v;
    return *this;
  }
  Jet3& operator*=(double v) {
    for (double& x : c_) x *= v;
    return *this;
  }
  Jet3& operator/=(double v) {
    for (double& x : c_) x /= v;
    return *this;
  }

  friend Jet3 operator+(Jet3 a, const Jet3& b) { return a += b; }
  friend Jet3 operator-(Jet3 a, const Jet3& b) { return a -= b; }
  friend Jet3 operator+(Jet3 a, double b) { return a += b; }
  friend Jet3 operator+(double a, Jet3 b) { return b += a; }
  friend Jet3 operator-(Jet3 a, double b) { return a -= b; }
  friend Jet3 operator-(double a, const Jet3& b) { return (-b) += a; }
  friend Jet3 operator*(Jet3 a, double b) { return a *= b; }
  friend Jet3 operator*(double a, Jet3 b) { return b *= a; }
  friend Jet3 operator/(Jet3 a, double b) { return a /= b; }

  friend Jet3 operator*(const Jet3& a, const Jet3& b) {
    Jet3 r;
    r.base_ = a.has_base_ ? a.base_ : b.base_;
    r.has_base_ = a.has_base_ || b.has_base_;
    if (a.has_base_ && b.has_base_ && !(a.base_ == b.base_)) mismatch();
    for (int n = 0; n < detail::kMonomials.product_count; ++n) {
      const auto& p = detail::kMonomials.products[n];
      r.c_[p.out] += a.c_[p.lhs] * b.c_[p.rhs];
    }
    return r;
  }

 private:
  [[noreturn]] static void mismatch() { fail(ErrorCode::BasePointMismatch, "jet operands expanded at different base points"); }

  void adopt_base(const Jet3& o) {
    if (!o.has_base_) return;
    if (!has_base_) {
      base_ = o.base_;
      has_base_ = true;
    } else if (!(base_ == o.base_)) {
      mismatch();
    }
  }

  std::array<double, kSize> c_{};
  JetBase base_{};
  bool has_base_ = false;
};

/// Value plus one directional first derivative; the cheap path for Newton
/// iterations that only need d/dx (or a monotonicity check in d/dtheta).
struct Dual {
  double v = 0.0;
  double d = 0.0;

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit by intent
  Dual(double value, double deriv) : v(value), d(deriv) {}

  Dual operator-() const { return {-v, -d}; }
  Dual& operator+=(const Dual& o) {
    v += o.v;
    d += o.d;
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    d -= o.d;
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    d = d * o.v + v * o.d;
    v *= o.v;
    return *this;
  }
  Dual& operator/=(double c) {
    v /= c;
    d /= c;
    return *this;
  }
  friend Dual operator+(Dual a, const Dual& b) { return a += b; }
  friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
  friend Dual operator*(Dual a, const Dual& b) { return a *= b; }
  friend Dual operator/(Dual a, double c) { return a /= c; }
};

// ---- uniform scalar interface -------------------------------------------

inline double value_of(double v) { return v; }
inline double value_of(const Dual& v) { return v.v; }
inline double value_of(const Jet3& v) { return v.value(); }

/// Returns t0 + t1*u + t2*u^2 + t3*u^3 where u = a - value(a); the coefficients
/// are the Taylor coefficients of a scalar function at value(a).
inline double apply_series(double, const std::array<double, 4>& t) { return t[0]; }
inline Dual apply_series(const Dual& a, const std::array<double, 4>& t) { return {t[0], t[1] * a.d}; }
inline Jet3 apply_series(const Jet3& a, const std::array<double, 4>& t) {
  Jet3 u = a;
  u.coeffs()[0] = 0.0;
  const Jet3 u2 = u * u;
  const Jet3 u3 = u2 * u;
  Jet3 r = u * t[1] + u2 * t[2] + u3 * t[3];
  r.coeffs()[0] += t[0];
  return r;
}

inline std::array<double, 4> sin_series(double a0) {
  const double s = std::sin(a0), c = std::cos(a0);
  return {s, c, -s / 2.0, -c / 6.0};
}
inline std::array<double, 4> cos_series(double a0) {
  const double s = std::sin(a0), c = std::cos(a0);
  return {c, -s, -c / 2.0, s / 6.0};
}

inline Dual sin(const Dual& a) { return {std::sin(a.v), std::cos(a.v) * a.d}; }
inline Dual cos(const Dual& a) { return {std::cos(a.v), -std::sin(a.v) * a.d}; }
inline Dual exp(const Dual& a) {
  const double e = std::exp(a.v);
  return {e, e * a.d};
}

inline Jet3 sin(const Jet3& a) { return apply_series(a, sin_series(a.value())); }
inline Jet3 cos(const Jet3& a) { return apply_series(a, cos_series(a.value())); }
inline Jet3 exp(const Jet3& a) {
  const double e = std::exp(a.value());
  return apply_series(a, {e, e, e / 2.0, e / 6.0});
}

/// sin and cos of the same argument, sharing the powers of the perturbation.
template <class T>
struct SinCos {
  T sin;
  T cos;
};

inline SinCos<double> sincos(double a) { return {std::sin(a), std::cos(a)}; }
inline SinCos<Dual> sincos(const Dual& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return {{s, c * a.d}, {c, -s * a.d}};
}
inline SinCos<Jet3> sincos(const Jet3& a) {
  const double s = std::sin(a.value()), c = std::cos(a.value());
  Jet3 u = a;
  u.coeffs()[0] = 0.0;
  const Jet3 u2 = u * u;
  const Jet3 u3 = u2 * u;
  Jet3 rs = u * c + u2 * (-s / 2.0) + u3 * (-c / 6.0);
  Jet3 rc = u * (-s) + u2 * (-c / 2.0) + u3 * (s / 6.0);
  rs.coeffs()[0] += s;
  rc.coeffs()[0] += c;
  return {rs, rc};
}

enum class JetOp { add, sub, mul };
enum class JetFn { sin, cos, exp };

inline Jet3 jet_arith(const Jet3& a, const Jet3& b, JetOp op) {
  switch (op) {
    case JetOp::add: return a + b;
    case JetOp::sub: return a - b;
    case JetOp::mul: return a * b;
  }
  return a;
}

inline Jet3 jet_transcendental(const Jet3& a, JetFn fn) {
  switch (fn) {
    case JetFn::sin: return sin(a);
    case JetFn::cos: return cos(a);
    case JetFn::exp: return exp(a);
  }
  return a;
}

inline constexpr double kCompositionBaseTol = 1e-12;

/// Degree-3 truncation of (x, s, theta) -> outer(inner(x, s, theta), s, theta).
///
/// outer is expanded at (y0, s0, theta0) and inner at (x0, s0, theta0) with
/// value(inner) == y0; parameters enter both factors.
inline Jet3 jet_compose(const Jet3& outer, const Jet3& inner) {
  const JetBase& ob = outer.base();
  const JetBase& ib = inner.base();
  if (std::abs(ob.x - inner.value()) > kCompositionBaseTol || std::abs(ob.s - ib.s) > kCompositionBaseTol ||
      std::abs(ob.theta - ib.theta) > kCompositionBaseTol) {
    fail(ErrorCode::CompositionBaseMismatch,
         "outer jet base does not match the inner jet value or parameter base");
  }
  Jet3 u = inner;
  u.coeffs()[0] = inner.value() - ob.x;
  const Jet3 ds = Jet3::variable(ib, Var::s) - ib.s;
  const Jet3 dt = Jet3::variable(ib, Var::theta) - ib.theta;

  std::array<Jet3, 4> pu{Jet3(ib, 1.0), u, u * u, Jet3()};
  pu[3] = pu[2] * u;
  std::array<Jet3, 4> ps{Jet3(ib, 1.0), ds, ds * ds, Jet3()};
  ps[3] = ps[2] * ds;
  std::array<Jet3, 4> pt{Jet3(ib, 1.0), dt, dt * dt, Jet3()};
  pt[3] = pt[2] * dt;

  Jet3 r(ib, 0.0);
  for (int n = 0; n < Jet3::kSize; ++n) {
    const double c = outer.coeffs()[n];
    if (c == 0.0) continue;
    const auto& e = detail::kMonomials.exps[n];
    r += (pu[e[0]] * ps[e[1]] * pt[e[2]]) * c;
  }
  return r;
}

}  // namespace circlebif
