#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "circlebif/errors.hpp"

namespace circlebif {

/// Reduced fraction p/q with q >= 1.
struct Rational {
  std::int64_t p = 0;
  std::int64_t q = 1;

  Rational() = default;
  Rational(std::int64_t num, std::int64_t den) : p(num), q(den) {
    if (q == 0) fail(ErrorCode::ParseError, "zero denominator");
    if (q < 0) {
      p = -p;
      q = -q;
    }
    const auto g = std::gcd(p, q);
    if (g > 1) {
      p /= g;
      q /= g;
    }
  }

  double value() const { return static_cast<double>(p) / static_cast<double>(q); }
  std::string str() const { return std::to_string(p) + "/" + std::to_string(q); }

  friend bool operator==(const Rational&, const Rational&) = default;
};

/// Parses "p/q" (or a bare integer). Non-reduced input is rejected so that
/// command lines and spec files name each rational in exactly one way.
inline Rational parse_rational(const std::string& text) {
  const auto slash = text.find('/');
  try {
    std::size_t used = 0;
    if (slash == std::string::npos) {
      const auto p = std::stoll(text, &used);
      if (used != text.size()) fail(ErrorCode::ParseError, "bad rational '" + text + "'");
      return Rational(p, 1);
    }
    const auto num = text.substr(0, slash);
    const auto den = text.substr(slash + 1);
    const auto p = std::stoll(num, &used);
    if (used != num.size()) fail(ErrorCode::ParseError, "bad rational '" + text + "'");
    const auto q = std::stoll(den, &used);
    if (used != den.size() || q <= 0) fail(ErrorCode::ParseError, "bad rational '" + text + "'");
    if (std::gcd(p, q) != 1) fail(ErrorCode::ParseError, "rational '" + text + "' is not reduced");
    return Rational(p, q);
  } catch (const std::logic_error&) {
    fail(ErrorCode::ParseError, "bad rational '" + text + "'");
  }
}

/// Continued-fraction convergents of x with denominators up to q_max.
inline std::vector<Rational> convergents(double x, std::int64_t q_max) {
  std::vector<Rational> out;
  if (!std::isfinite(x)) return out;
  std::int64_t h_prev = 1, h_prev2 = 0;
  std::int64_t k_prev = 0, k_prev2 = 1;
  double r = x;
  for (int it = 0; it < 64; ++it) {
    const double a_real = std::floor(r);
    if (std::abs(a_real) > 1e15) break;
    const auto a = static_cast<std::int64_t>(a_real);
    const auto h = a * h_prev + h_prev2;
    const auto k = a * k_prev + k_prev2;
    if (k > q_max) break;
    out.emplace_back(h, k);
    h_prev2 = h_prev;
    h_prev = h;
    k_prev2 = k_prev;
    k_prev = k;
    const double frac = r - a_real;
    if (frac < 1e-15) break;
    r = 1.0 / frac;
  }
  return out;
}

}  // namespace circlebif
