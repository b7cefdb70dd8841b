#pragma once

// Counting invariants over one-parameter (theta) families: a = the largest
// number of coexisting topological source orbits at a rational rotation
// number, b = a mod 2, plus horizontal-section scans of two-parameter families.

#include <algorithm>
#include <optional>
#include <vector>

#include "circlebif/census.hpp"
#include "circlebif/errors.hpp"
#include "circlebif/family.hpp"
#include "circlebif/parallel.hpp"
#include "circlebif/rational.hpp"
#include "circlebif/rotation.hpp"

namespace circlebif {

inline constexpr int kDefaultThetaSamples = 256;

struct ThetaSample {
  double theta = 0.0;
  int sources = 0;

  friend bool operator==(const ThetaSample&, const ThetaSample&) = default;
};

struct ParityRecord {
  Rational pq;
  int a = 0;
  int b = 0;
  std::vector<TongueInterval> tongue_intervals;
  int samples = 0;
  double s = 0.0;
  std::vector<ThetaSample> sample_counts;

  friend bool operator==(const ParityRecord& x, const ParityRecord& y) {
    auto same_tongues = [&] {
      if (x.tongue_intervals.size() != y.tongue_intervals.size()) return false;
      for (std::size_t i = 0; i < x.tongue_intervals.size(); ++i) {
        const auto &u = x.tongue_intervals[i], &v = y.tongue_intervals[i];
        if (u.lo != v.lo || u.hi != v.hi || u.degenerate != v.degenerate) return false;
      }
      return true;
    };
    return x.pq == y.pq && x.a == y.a && x.b == y.b && x.samples == y.samples && x.s == y.s &&
           x.sample_counts == y.sample_counts && same_tongues();
  }
};

struct InvariantOptions {
  int census_grid_per_q = 1024;
  int tongue_grid_per_q = 256;
  double tongue_tol = kDefaultRationalTol;
  double endpoint_merge = 1e-6;
};

namespace detail {

/// Census source count at one theta. At a tongue endpoint (one_sided) the
/// parabolic orbit may show up split by rounding into a source and a sink a
/// hair apart; such a pair is one semistable orbit and contributes no source.
/// If rounding loses the orbit entirely, step inward until it is seen.
inline int sources_at(const Family& fam, const Rational& pq, double s, double theta, double inward,
                      const InvariantOptions& opt) {
  const int grid = static_cast<int>(opt.census_grid_per_q * pq.q);
  double t = theta;
  for (int attempt = 0;; ++attempt) {
    try {
      const auto c = run_census(fam, {s, t}, pq, grid);
      if (inward == 0.0) return count_topological_sources(c);
      int n = 0;
      for (const auto& o : c.orbits) {
        if (!is_topological_source(o.kind)) continue;
        const bool paired = std::any_of(c.orbits.begin(), c.orbits.end(), [&](const PeriodicOrbit& other) {
          if (!is_topological_sink(other.kind)) return false;
          for (double u : o.points)
            for (double v : other.points)
              if (circle_dist(u, v) < opt.endpoint_merge) return true;
          return false;
        });
        if (!paired) ++n;
      }
      return n;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NonIsolatedOrbits)
        fail(ErrorCode::NonGenericFamily, "circle of periodic points at theta = " + std::to_string(t));
      if (e.code() != ErrorCode::RationalNotAttained || inward == 0.0 || attempt == 8) throw;
      t += inward * std::ldexp(1.0, attempt);
    }
  }
}

}  // namespace detail

/// Samples the tongue at s: thetaSamples interior points plus both endpoints.
/// Endpoint orbits are parabolic and counted one-sidedly by the census kinds
/// (a semistable orbit is not a source).
inline ParityRecord max_sources_at_rational(const Family& fam, const Rational& pq,
                                            int theta_samples = kDefaultThetaSamples,
                                            std::optional<double> s_opt = std::nullopt,
                                            const InvariantOptions& opt = {}) {
  require(theta_samples >= 64, "max_sources_at_rational: thetaSamples must be >= 64");
  const double s = s_opt.value_or(fam.box().s_lo);
  const TongueInterval tongue = tongue_interval(fam, s, pq, opt.tongue_tol, opt.tongue_grid_per_q);
  ParityRecord rec;
  rec.pq = pq;
  rec.s = s;
  rec.tongue_intervals.push_back(tongue);

  std::vector<double> thetas;
  std::vector<double> inward;
  if (tongue.degenerate) {
    thetas.push_back(0.5 * (tongue.lo + tongue.hi));
    inward.push_back(0.0);
  } else {
    const double w = tongue.width();
    const double nudge = std::max(1e-14, 1e-12 * w);
    thetas.push_back(tongue.lo);
    inward.push_back(nudge);
    for (int i = 0; i < theta_samples; ++i) {
      thetas.push_back(tongue.lo + w * (i + 1) / (theta_samples + 1));
      inward.push_back(0.0);
    }
    thetas.push_back(tongue.hi);
    inward.push_back(-nudge);
  }
  const auto counts = parallel_map<int>(thetas.size(), [&](std::size_t i) {
    return detail::sources_at(fam, pq, s, thetas[i], inward[i], opt);
  });
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    rec.sample_counts.push_back({thetas[i], counts[i]});
    rec.a = std::max(rec.a, counts[i]);
  }
  rec.samples = static_cast<int>(thetas.size());
  rec.b = rec.a % 2;
  return rec;
}

struct ParityDiff {
  std::optional<std::size_t> index;
  std::vector<std::size_t> skipped;  // indices where either family misses the rational
  std::vector<std::optional<ParityRecord>> records_a;
  std::vector<std::optional<ParityRecord>> records_b;
};

/// First index where the parities differ. The two families are walked in step
/// so the prefix is compared in order.
inline ParityDiff parity_prefix_diff(const Family& fam_a, const Family& fam_b, const std::vector<Rational>& pqs,
                                     int theta_samples = kDefaultThetaSamples, const InvariantOptions& opt = {}) {
  require(!pqs.empty(), "parity_prefix_diff: rational list must be nonempty");
  for (const Family* f : {&fam_a, &fam_b})
    if (!f->monotone_in_theta())
      fail(ErrorCode::MonotonicityUnverified, "parity_prefix_diff: both families must be monotone in theta");
  ParityDiff out;
  auto record = [&](const Family& f, const Rational& pq) -> std::optional<ParityRecord> {
    try {
      return max_sources_at_rational(f, pq, theta_samples, std::nullopt, opt);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::RationalNotAttained) return std::nullopt;
      throw;
    }
  };
  for (std::size_t n = 0; n < pqs.size(); ++n) {
    auto ra = record(fam_a, pqs[n]);
    auto rb = record(fam_b, pqs[n]);
    const bool skip = !ra || !rb;
    const bool differ = !skip && ra->b != rb->b;
    out.records_a.push_back(std::move(ra));
    out.records_b.push_back(std::move(rb));
    if (skip) {
      out.skipped.push_back(n);
      continue;
    }
    if (differ) {
      out.index = n;
      break;
    }
  }
  return out;
}

struct SectionScan {
  Rational pq;
  std::vector<double> s_grid;
  std::vector<std::optional<int>> a_of_s;
  bool unit_increments_ok = true;
  int refinements = 0;

  friend bool operator==(const SectionScan&, const SectionScan&) = default;
};

namespace detail {

inline std::optional<int> slice_value(const Family& fam, const Rational& pq, double s, int theta_samples,
                                      const InvariantOptions& opt) {
  try {
    return max_sources_at_rational(fam, pq, theta_samples, s, opt).a;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::RationalNotAttained) return std::nullopt;
    throw;
  }
}

/// Offending neighbour pairs: consecutive present values more than 1 apart.
/// Absent values are skipped, so a pair may straddle a gap.
inline std::vector<std::pair<std::size_t, std::size_t>> jumps(const std::vector<std::optional<int>>& a) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::optional<std::size_t> last;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i]) continue;
    if (last && std::abs(*a[i] - *a[*last]) > 1) out.emplace_back(*last, i);
    last = i;
  }
  return out;
}

}  // namespace detail

/// a(s) along sSteps + 1 equally spaced horizontal sections. A jump larger
/// than 1 is bisected up to three times before it is reported.
inline SectionScan section_scan(const Family& fam, const Rational& pq, int s_steps,
                                int theta_samples = kDefaultThetaSamples, const InvariantOptions& opt = {}) {
  require(s_steps >= 32, "section_scan: sSteps must be >= 32");
  const auto& box = fam.box();
  SectionScan out;
  out.pq = pq;
  for (int i = 0; i <= s_steps; ++i) out.s_grid.push_back(box.s_lo + box.s_len() * i / s_steps);
  out.a_of_s = parallel_map<std::optional<int>>(out.s_grid.size(), [&](std::size_t i) {
    return detail::slice_value(fam, pq, out.s_grid[i], theta_samples, opt);
  });

  for (int round = 0; round < 3; ++round) {
    const auto bad = detail::jumps(out.a_of_s);
    if (bad.empty()) break;
    ++out.refinements;
    std::vector<double> mids;
    for (const auto& [i, j] : bad) {
      // Split every grid cell between the offending neighbours.
      for (std::size_t k = i; k < j; ++k) mids.push_back(0.5 * (out.s_grid[k] + out.s_grid[k + 1]));
    }
    const auto vals = parallel_map<std::optional<int>>(
        mids.size(), [&](std::size_t k) { return detail::slice_value(fam, pq, mids[k], theta_samples, opt); });
    std::vector<std::pair<double, std::optional<int>>> merged;
    for (std::size_t k = 0; k < out.s_grid.size(); ++k) merged.emplace_back(out.s_grid[k], out.a_of_s[k]);
    for (std::size_t k = 0; k < mids.size(); ++k) merged.emplace_back(mids[k], vals[k]);
    std::sort(merged.begin(), merged.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    merged.erase(std::unique(merged.begin(), merged.end(),
                             [](const auto& x, const auto& y) { return x.first == y.first; }),
                 merged.end());
    out.s_grid.clear();
    out.a_of_s.clear();
    for (auto& [sv, av] : merged) {
      out.s_grid.push_back(sv);
      out.a_of_s.push_back(av);
    }
  }
  out.unit_increments_ok = detail::jumps(out.a_of_s).empty();
  return out;
}

}  // namespace circlebif
