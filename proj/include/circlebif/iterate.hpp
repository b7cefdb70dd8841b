#pragma once

// Iterates of a lift with integer winding bookkeeping.
//
// After every step the integer part of the value is moved into `winding`, so
// the carried value stays in a unit strip and the arithmetic never loses
// precision to a large accumulated translation. Lift(x + n) = Lift(x) + n
// makes this exact.

#include <cmath>
#include <cstdint>

#include "circlebif/family.hpp"
#include "circlebif/jet.hpp"
#include "circlebif/rational.hpp"

namespace circlebif {

template <class T>
struct LiftIterate {
  T reduced;
  std::int64_t winding = 0;

  T full() const { return reduced + static_cast<double>(winding); }
};

namespace detail {

template <class T>
void shift_value(T& v, double by) {
  if constexpr (std::is_same_v<T, Jet3>)
    v.coeffs()[0] += by;
  else if constexpr (std::is_same_v<T, Dual>)
    v.v += by;
  else
    v += by;
}

}  // namespace detail

template <class T>
LiftIterate<T> iterate_lift(const Family& fam, int q, T x, const T& s, const T& theta) {
  LiftIterate<T> out;
  const double n0 = std::floor(value_of(x));
  detail::shift_value(x, -n0);
  out.winding = static_cast<std::int64_t>(n0);
  for (int i = 0; i < q; ++i) {
    x = fam.lift(x, s, theta);
    const double n = std::floor(value_of(x));
    detail::shift_value(x, -n);
    out.winding += static_cast<std::int64_t>(n);
  }
  out.reduced = x;
  return out;
}

/// G(x) = Lift^q(x) - x - p, evaluated without forming the large value.
inline double displacement(const Family& fam, const Rational& pq, double s, double theta, double x) {
  const auto it = iterate_lift<double>(fam, static_cast<int>(pq.q), x, s, theta);
  return (it.reduced - x) + static_cast<double>(it.winding - pq.p);
}

/// G and dG/dx.
inline Dual displacement_dx(const Family& fam, const Rational& pq, double s, double theta, double x) {
  const auto it = iterate_lift<Dual>(fam, static_cast<int>(pq.q), Dual(x, 1.0), Dual(s), Dual(theta));
  return {(it.reduced.v - x) + static_cast<double>(it.winding - pq.p), it.reduced.d - 1.0};
}

struct IterateJet {
  Jet3 jet;  ///< jet of Lift^q, value including the winding
  std::int64_t winding = 0;
  int q = 1;
};

inline IterateJet iterate_jet(const Family& fam, int q, double s, double theta, double x) {
  require(q >= 1, "iterate_jet: q must be >= 1");
  const JetBase base{x, s, theta};
  const auto it = iterate_lift<Jet3>(fam, q, Jet3::variable(base, Var::x), Jet3::variable(base, Var::s),
                                     Jet3::variable(base, Var::theta));
  IterateJet out;
  out.jet = it.reduced;
  out.jet.coeffs()[0] += static_cast<double>(it.winding);
  out.winding = it.winding;
  out.q = q;
  return out;
}

/// Jet of G = Lift^q(x) - x - p with the constant term formed as
/// (reduced - x) + (winding - p).
inline Jet3 displacement_jet(const Family& fam, const Rational& pq, double s, double theta, double x) {
  const JetBase base{x, s, theta};
  const auto it = iterate_lift<Jet3>(fam, static_cast<int>(pq.q), Jet3::variable(base, Var::x),
                                     Jet3::variable(base, Var::s), Jet3::variable(base, Var::theta));
  Jet3 g = it.reduced - Jet3::variable(base, Var::x);
  g.coeffs()[0] = (it.reduced.value() - x) + static_cast<double>(it.winding - pq.p);
  return g;
}

}  // namespace circlebif
