#pragma once

// JSON, CSV and SVG forms of computed results. JSON numbers use the shortest
// representation that reads back to the same double; non-finite values are
// written as null. Every to_json here has a matching *_from_json.

#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "circlebif/bifurcation.hpp"
#include "circlebif/census.hpp"
#include "circlebif/errors.hpp"
#include "circlebif/family_json.hpp"
#include "circlebif/invariants.hpp"
#include "circlebif/rational.hpp"
#include "circlebif/rotation.hpp"

namespace circlebif {

namespace io {

inline Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline double get_num(const Json& j, const char* key, const std::string& where) {
  const Json& v = detail::at(j, key, where);
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return detail::get_number(v, where + "." + key);
}

inline int get_int(const Json& j, const char* key, const std::string& where) {
  return detail::get_int(detail::at(j, key, where), where + "." + key);
}

inline bool get_bool(const Json& j, const char* key, const std::string& where) {
  const Json& v = detail::at(j, key, where);
  if (!v.is_boolean()) fail(ErrorCode::ParseError, where + "." + key + ": expected a boolean");
  return v.get<bool>();
}

inline std::string get_string(const Json& j, const char* key, const std::string& where) {
  const Json& v = detail::at(j, key, where);
  if (!v.is_string()) fail(ErrorCode::ParseError, where + "." + key + ": expected a string");
  return v.get<std::string>();
}

inline const Json& get_array(const Json& j, const char* key, const std::string& where) {
  const Json& v = detail::at(j, key, where);
  if (!v.is_array()) fail(ErrorCode::ParseError, where + "." + key + ": expected an array");
  return v;
}

inline Rational get_rational(const Json& j, const char* key, const std::string& where) {
  try {
    return parse_rational(get_string(j, key, where));
  } catch (const Error& e) {
    fail(ErrorCode::ParseError, where + "." + key + ": " + e.what());
  }
}

inline Json vec3(const Vec3& v) { return Json::array({num(v[0]), num(v[1]), num(v[2])}); }

inline Vec3 get_vec3(const Json& j, const char* key, const std::string& where) {
  const Json& a = get_array(j, key, where);
  if (a.size() != 3) fail(ErrorCode::ParseError, where + "." + key + ": expected 3 numbers");
  Vec3 v{};
  for (int k = 0; k < 3; ++k)
    v[k] = a[k].is_null() ? std::numeric_limits<double>::quiet_NaN() : detail::get_number(a[k], where + "." + key);
  return v;
}

/// Shortest round-trip decimal for CSV cells.
inline std::string fmt(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace io

// ---- rotation -------------------------------------------------------------------

inline Json to_json(const RotationEstimate& r) {
  Json j;
  j["value"] = io::num(r.value);
  j["errorBound"] = io::num(r.error_bound);
  j["iterations"] = r.iterations;
  j["rational"] = r.rational ? Json(r.rational->str()) : Json(nullptr);
  return j;
}

inline RotationEstimate rotation_estimate_from_json(const Json& j) {
  const std::string w = "rotation";
  RotationEstimate r;
  r.value = io::get_num(j, "value", w);
  r.error_bound = io::get_num(j, "errorBound", w);
  r.iterations = detail::at(j, "iterations", w).get<std::int64_t>();
  if (!detail::at(j, "rational", w).is_null()) r.rational = io::get_rational(j, "rational", w);
  return r;
}

inline Json to_json(const TongueInterval& t) {
  Json j;
  j["lo"] = io::num(t.lo);
  j["hi"] = io::num(t.hi);
  j["degenerate"] = t.degenerate;
  return j;
}

inline TongueInterval tongue_from_json(const Json& j) {
  TongueInterval t;
  t.lo = io::get_num(j, "lo", "tongue");
  t.hi = io::get_num(j, "hi", "tongue");
  t.degenerate = io::get_bool(j, "degenerate", "tongue");
  return t;
}

// ---- census -----------------------------------------------------------------------

inline Json to_json(const OrbitCensus& c) {
  Json j;
  j["rational"] = c.pq.str();
  j["s"] = io::num(c.at.s);
  j["theta"] = io::num(c.at.theta);
  j["gridUsed"] = c.grid_used;
  j["sourcesTopological"] = c.sources_topological;
  j["sinksTopological"] = c.sinks_topological;
  j["allHyperbolic"] = c.all_hyperbolic;
  Json orbits = Json::array();
  for (const auto& o : c.orbits) {
    Json jo;
    jo["points"] = Json::array();
    for (double x : o.points) jo["points"].push_back(io::num(x));
    jo["multiplier"] = io::num(o.multiplier);
    jo["kind"] = to_string(o.kind);
    jo["residual"] = io::num(o.residual);
    orbits.push_back(std::move(jo));
  }
  j["orbits"] = std::move(orbits);
  Json un = Json::array();
  for (const auto& u : c.unresolved) un.push_back({{"x", io::num(u.x)}, {"residual", io::num(u.residual)}});
  j["unresolved"] = std::move(un);
  return j;
}

inline OrbitCensus census_from_json(const Json& j) {
  const std::string w = "census";
  OrbitCensus c;
  c.pq = io::get_rational(j, "rational", w);
  c.at = {io::get_num(j, "s", w), io::get_num(j, "theta", w)};
  c.grid_used = io::get_int(j, "gridUsed", w);
  c.sources_topological = io::get_int(j, "sourcesTopological", w);
  c.sinks_topological = io::get_int(j, "sinksTopological", w);
  c.all_hyperbolic = io::get_bool(j, "allHyperbolic", w);
  for (const auto& jo : io::get_array(j, "orbits", w)) {
    PeriodicOrbit o;
    for (const auto& x : io::get_array(jo, "points", w + ".orbits")) o.points.push_back(detail::get_number(x, w));
    o.multiplier = io::get_num(jo, "multiplier", w);
    const auto kind = orbit_kind_from_string(io::get_string(jo, "kind", w));
    if (!kind) fail(ErrorCode::ParseError, w + ": unknown orbit kind");
    o.kind = *kind;
    o.residual = io::get_num(jo, "residual", w);
    c.orbits.push_back(std::move(o));
  }
  for (const auto& ju : io::get_array(j, "unresolved", w))
    c.unresolved.push_back({io::get_num(ju, "x", w), io::get_num(ju, "residual", w)});
  return c;
}

inline std::string census_csv(const OrbitCensus& c) {
  std::ostringstream out;
  out << "orbit,index,x,multiplier,kind\n";
  for (std::size_t i = 0; i < c.orbits.size(); ++i)
    for (std::size_t k = 0; k < c.orbits[i].points.size(); ++k)
      out << i << ',' << k << ',' << io::fmt(c.orbits[i].points[k]) << ',' << io::fmt(c.orbits[i].multiplier) << ','
          << to_string(c.orbits[i].kind) << '\n';
  return out.str();
}

// ---- bifurcation ------------------------------------------------------------------

namespace io {

inline TerminationKind termination_kind_from_string(const std::string& s) {
  for (auto k : {TerminationKind::boundary, TerminationKind::cusp, TerminationKind::closed_loop,
                 TerminationKind::stalled})
    if (s == to_string(k)) return k;
  fail(ErrorCode::ParseError, "unknown termination kind '" + s + "'");
}

inline Edge edge_from_string(const std::string& s) {
  for (auto e : {Edge::none, Edge::s_lo, Edge::s_hi, Edge::theta_lo, Edge::theta_hi})
    if (s == to_string(e)) return e;
  fail(ErrorCode::ParseError, "unknown edge '" + s + "'");
}

inline Json point_json(const CurvePoint& p) {
  return {{"s", num(p.s)},   {"theta", num(p.theta)}, {"x", num(p.x)},
          {"r1", num(p.r1)}, {"r2", num(p.r2)},       {"gxx", num(p.gxx)},
          {"tangent", vec3(p.tangent)}};
}

inline CurvePoint point_from(const Json& j, const std::string& w) {
  CurvePoint p;
  p.s = get_num(j, "s", w);
  p.theta = get_num(j, "theta", w);
  p.x = get_num(j, "x", w);
  p.r1 = get_num(j, "r1", w);
  p.r2 = get_num(j, "r2", w);
  p.gxx = get_num(j, "gxx", w);
  p.tangent = get_vec3(j, "tangent", w);
  return p;
}

inline Json termination_json(const Termination& t) {
  return {{"kind", to_string(t.kind)}, {"edge", to_string(t.edge)}, {"cuspIndex", t.cusp_index}};
}

inline Termination termination_from(const Json& j, const std::string& w) {
  Termination t;
  t.kind = termination_kind_from_string(get_string(j, "kind", w));
  t.edge = edge_from_string(get_string(j, "edge", w));
  t.cusp_index = get_int(j, "cuspIndex", w);
  return t;
}

inline Json special_json(const SpecialPoint& sp) {
  return {{"curve", sp.curve}, {"segment", sp.segment}, {"point", point_json(sp.point)}};
}

inline SpecialPoint special_from(const Json& j, const std::string& w) {
  return {get_int(j, "curve", w), get_int(j, "segment", w), point_from(detail::at(j, "point", w), w)};
}

}  // namespace io

inline Json to_json(const SaddleNodeCurve& c) {
  Json j;
  j["rational"] = c.pq.str();
  j["start"] = io::termination_json(c.start);
  j["end"] = io::termination_json(c.end);
  j["points"] = Json::array();
  for (const auto& p : c.points) j["points"].push_back(io::point_json(p));
  return j;
}

inline SaddleNodeCurve curve_from_json(const Json& j) {
  const std::string w = "curve";
  SaddleNodeCurve c;
  c.pq = io::get_rational(j, "rational", w);
  c.start = io::termination_from(detail::at(j, "start", w), w);
  c.end = io::termination_from(detail::at(j, "end", w), w);
  for (const auto& p : io::get_array(j, "points", w)) c.points.push_back(io::point_from(p, w));
  return c;
}

inline Json to_json(const CuspPoint& c) {
  return {{"s", io::num(c.s)},       {"theta", io::num(c.theta)}, {"x", io::num(c.x)},
          {"h1", io::num(c.h1)},     {"h2", io::num(c.h2)},       {"gxx", io::num(c.gxx)},
          {"gxxx", io::num(c.gxxx)}, {"cuspCond", io::num(c.cusp_cond)}, {"nonGeneric", c.non_generic}};
}

inline CuspPoint cusp_from_json(const Json& j) {
  const std::string w = "cusp";
  CuspPoint c;
  c.s = io::get_num(j, "s", w);
  c.theta = io::get_num(j, "theta", w);
  c.x = io::get_num(j, "x", w);
  c.h1 = io::get_num(j, "h1", w);
  c.h2 = io::get_num(j, "h2", w);
  c.gxx = io::get_num(j, "gxx", w);
  c.gxxx = io::get_num(j, "gxxx", w);
  c.cusp_cond = io::get_num(j, "cuspCond", w);
  c.non_generic = io::get_bool(j, "nonGeneric", w);
  return c;
}

inline Json to_json(const IntersectionRecord& r) {
  return {{"s", io::num(r.s)},
          {"theta", io::num(r.theta)},
          {"x1", io::num(r.x1)},
          {"x2", io::num(r.x2)},
          {"transversalityDet", io::num(r.transversality_det)},
          {"curveA", r.curve_a},
          {"curveB", r.curve_b},
          {"segmentA", r.segment_a},
          {"segmentB", r.segment_b},
          {"nonGeneric", r.non_generic}};
}

inline IntersectionRecord intersection_from_json(const Json& j) {
  const std::string w = "intersection";
  IntersectionRecord r;
  r.s = io::get_num(j, "s", w);
  r.theta = io::get_num(j, "theta", w);
  r.x1 = io::get_num(j, "x1", w);
  r.x2 = io::get_num(j, "x2", w);
  r.transversality_det = io::get_num(j, "transversalityDet", w);
  r.curve_a = io::get_int(j, "curveA", w);
  r.curve_b = io::get_int(j, "curveB", w);
  r.segment_a = io::get_int(j, "segmentA", w);
  r.segment_b = io::get_int(j, "segmentB", w);
  r.non_generic = io::get_bool(j, "nonGeneric", w);
  return r;
}

inline Json to_json(const BoundaryHit& h) {
  return {{"curve", h.curve},         {"atEnd", h.at_end},         {"edge", to_string(h.edge)},
          {"s", io::num(h.s)},        {"theta", io::num(h.theta)}, {"x", io::num(h.x)},
          {"nearCorner", h.near_corner}};
}

inline BoundaryHit boundary_hit_from_json(const Json& j) {
  const std::string w = "boundaryHit";
  BoundaryHit h;
  h.curve = io::get_int(j, "curve", w);
  h.at_end = io::get_bool(j, "atEnd", w);
  h.edge = io::edge_from_string(io::get_string(j, "edge", w));
  h.s = io::get_num(j, "s", w);
  h.theta = io::get_num(j, "theta", w);
  h.x = io::get_num(j, "x", w);
  h.near_corner = io::get_bool(j, "nearCorner", w);
  return h;
}

inline Json to_json(const BifurcationDiagram& d) {
  Json j;
  j["rational"] = d.pq.str();
  auto list = [](const auto& v, auto&& f) {
    Json a = Json::array();
    for (const auto& e : v) a.push_back(f(e));
    return a;
  };
  j["curves"] = list(d.curves, [](const SaddleNodeCurve& c) { return to_json(c); });
  j["cusps"] = list(d.cusps, [](const CuspPoint& c) { return to_json(c); });
  j["horizontalTangents"] = list(d.horizontal_tangents, io::special_json);
  j["verticalTangents"] = list(d.vertical_tangents, io::special_json);
  j["intersections"] = list(d.intersections, [](const IntersectionRecord& r) { return to_json(r); });
  j["boundaryHits"] = list(d.boundary_hits, [](const BoundaryHit& h) { return to_json(h); });
  j["rotationConfirmed"] = Json::array();
  for (bool b : d.rotation_confirmed) j["rotationConfirmed"].push_back(b);
  return j;
}

inline BifurcationDiagram diagram_from_json(const Json& j) {
  const std::string w = "diagram";
  BifurcationDiagram d;
  d.pq = io::get_rational(j, "rational", w);
  for (const auto& c : io::get_array(j, "curves", w)) d.curves.push_back(curve_from_json(c));
  for (const auto& c : io::get_array(j, "cusps", w)) d.cusps.push_back(cusp_from_json(c));
  for (const auto& c : io::get_array(j, "horizontalTangents", w)) d.horizontal_tangents.push_back(io::special_from(c, w));
  for (const auto& c : io::get_array(j, "verticalTangents", w)) d.vertical_tangents.push_back(io::special_from(c, w));
  for (const auto& c : io::get_array(j, "intersections", w)) d.intersections.push_back(intersection_from_json(c));
  for (const auto& c : io::get_array(j, "boundaryHits", w)) d.boundary_hits.push_back(boundary_hit_from_json(c));
  for (const auto& b : io::get_array(j, "rotationConfirmed", w)) {
    if (!b.is_boolean()) fail(ErrorCode::ParseError, w + ".rotationConfirmed: expected booleans");
    d.rotation_confirmed.push_back(b.get<bool>());
  }
  return d;
}

/// One row per curve point, all diagrams stacked.
inline std::string diagram_csv(const std::vector<BifurcationDiagram>& ds) {
  std::ostringstream out;
  out << "rational,curve,index,s,theta,x,gxx\n";
  for (const auto& d : ds)
    for (std::size_t c = 0; c < d.curves.size(); ++c)
      for (std::size_t i = 0; i < d.curves[c].points.size(); ++i) {
        const auto& p = d.curves[c].points[i];
        out << d.pq.str() << ',' << c << ',' << i << ',' << io::fmt(p.s) << ',' << io::fmt(p.theta) << ','
            << io::fmt(p.x) << ',' << io::fmt(p.gxx) << '\n';
      }
  return out.str();
}

/// theta runs left to right, s bottom to top.
inline std::string diagram_svg(const ParamBox& box, const std::vector<BifurcationDiagram>& ds) {
  const double W = 640, H = 640, M = 40;
  auto px = [&](double theta) { return M + (theta - box.theta_lo) / box.theta_len() * W; };
  auto py = [&](double s) { return M + (box.s_hi - s) / box.s_len() * H; };
  auto f = [](double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, std::round(v * 100.0) / 100.0);
    return std::string(buf, res.ptr);
  };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f(W + 2 * M) << "\" height=\"" << f(H + 2 * M)
      << "\" viewBox=\"0 0 " << f(W + 2 * M) << ' ' << f(H + 2 * M) << "\">\n";
  out << "<rect x=\"" << f(M) << "\" y=\"" << f(M) << "\" width=\"" << f(W) << "\" height=\"" << f(H)
      << "\" fill=\"white\" stroke=\"black\"/>\n";
  out << "<text x=\"" << f(M + W / 2) << "\" y=\"" << f(H + 1.8 * M) << "\" text-anchor=\"middle\">theta</text>\n";
  out << "<text x=\"" << f(M / 3) << "\" y=\"" << f(M + H / 2) << "\">s</text>\n";
  for (std::size_t k = 0; k < ds.size(); ++k) {
    const auto& d = ds[k];
    const char* color = palette[k % 6];
    out << "<g id=\"rational-" << d.pq.p << '-' << d.pq.q << "\">\n";
    for (const auto& c : d.curves) {
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < c.points.size(); ++i)
        out << (i ? " " : "") << f(px(c.points[i].theta)) << ',' << f(py(c.points[i].s));
      out << "\"/>\n";
    }
    for (const auto& c : d.cusps)
      out << "<circle class=\"cusp\" cx=\"" << f(px(c.theta)) << "\" cy=\"" << f(py(c.s)) << "\" r=\"4\" fill=\""
          << color << "\"/>\n";
    for (const auto& r : d.intersections) {
      const double x = px(r.theta), y = py(r.s);
      out << "<path class=\"intersection\" d=\"M" << f(x - 5) << ',' << f(y - 5) << " L" << f(x + 5) << ','
          << f(y + 5) << " M" << f(x - 5) << ',' << f(y + 5) << " L" << f(x + 5) << ',' << f(y - 5)
          << "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
    }
    for (const auto& h : d.horizontal_tangents)
      out << "<circle class=\"horizontal-tangent\" cx=\"" << f(px(h.point.theta)) << "\" cy=\"" << f(py(h.point.s))
          << "\" r=\"4\" fill=\"none\" stroke=\"black\"/>\n";
    out << "</g>\n";
  }
  out << "</svg>\n";
  return out.str();
}

// ---- invariants -------------------------------------------------------------------

inline Json to_json(const ParityRecord& r) {
  Json j;
  j["rational"] = r.pq.str();
  j["a"] = r.a;
  j["b"] = r.b;
  j["s"] = io::num(r.s);
  j["samples"] = r.samples;
  j["tongueIntervals"] = Json::array();
  for (const auto& t : r.tongue_intervals) j["tongueIntervals"].push_back(to_json(t));
  j["sampleCounts"] = Json::array();
  for (const auto& smp : r.sample_counts)
    j["sampleCounts"].push_back({{"theta", io::num(smp.theta)}, {"sources", smp.sources}});
  return j;
}

inline ParityRecord parity_record_from_json(const Json& j) {
  const std::string w = "parity";
  ParityRecord r;
  r.pq = io::get_rational(j, "rational", w);
  r.a = io::get_int(j, "a", w);
  r.b = io::get_int(j, "b", w);
  r.s = io::get_num(j, "s", w);
  r.samples = io::get_int(j, "samples", w);
  for (const auto& t : io::get_array(j, "tongueIntervals", w)) r.tongue_intervals.push_back(tongue_from_json(t));
  for (const auto& smp : io::get_array(j, "sampleCounts", w))
    r.sample_counts.push_back({io::get_num(smp, "theta", w), io::get_int(smp, "sources", w)});
  return r;
}

inline Json to_json(const ParityDiff& d) {
  Json j;
  j["index"] = d.index ? Json(*d.index) : Json(nullptr);
  j["skipped"] = Json::array();
  for (auto n : d.skipped) j["skipped"].push_back(n);
  auto recs = [](const std::vector<std::optional<ParityRecord>>& v) {
    Json a = Json::array();
    for (const auto& r : v) a.push_back(r ? to_json(*r) : Json(nullptr));
    return a;
  };
  j["recordsA"] = recs(d.records_a);
  j["recordsB"] = recs(d.records_b);
  return j;
}

inline ParityDiff parity_diff_from_json(const Json& j) {
  const std::string w = "parityDiff";
  ParityDiff d;
  const Json& idx = detail::at(j, "index", w);
  if (!idx.is_null()) d.index = idx.get<std::size_t>();
  for (const auto& n : io::get_array(j, "skipped", w)) d.skipped.push_back(n.get<std::size_t>());
  for (const char* key : {"recordsA", "recordsB"}) {
    auto& dst = std::string(key) == "recordsA" ? d.records_a : d.records_b;
    for (const auto& r : io::get_array(j, key, w))
      dst.push_back(r.is_null() ? std::nullopt : std::optional<ParityRecord>(parity_record_from_json(r)));
  }
  return d;
}

inline Json to_json(const SectionScan& s) {
  Json j;
  j["rational"] = s.pq.str();
  j["unitIncrementsOk"] = s.unit_increments_ok;
  j["refinements"] = s.refinements;
  j["sGrid"] = Json::array();
  for (double v : s.s_grid) j["sGrid"].push_back(io::num(v));
  j["aOfS"] = Json::array();
  for (const auto& a : s.a_of_s) j["aOfS"].push_back(a ? Json(*a) : Json(nullptr));
  return j;
}

inline SectionScan section_scan_from_json(const Json& j) {
  const std::string w = "sectionScan";
  SectionScan s;
  s.pq = io::get_rational(j, "rational", w);
  s.unit_increments_ok = io::get_bool(j, "unitIncrementsOk", w);
  s.refinements = io::get_int(j, "refinements", w);
  for (const auto& v : io::get_array(j, "sGrid", w)) s.s_grid.push_back(detail::get_number(v, w + ".sGrid"));
  for (const auto& v : io::get_array(j, "aOfS", w))
    s.a_of_s.push_back(v.is_null() ? std::nullopt : std::optional<int>(detail::get_int(v, w + ".aOfS")));
  if (s.s_grid.size() != s.a_of_s.size()) fail(ErrorCode::ParseError, w + ": sGrid and aOfS differ in length");
  return s;
}

inline std::string section_scan_csv(const SectionScan& s) {
  std::ostringstream out;
  out << "s,a\n";
  for (std::size_t i = 0; i < s.s_grid.size(); ++i)
    out << io::fmt(s.s_grid[i]) << ',' << (s.a_of_s[i] ? std::to_string(*s.a_of_s[i]) : std::string()) << '\n';
  return out.str();
}

inline Json to_json(const JetDimensionTable& t) {
  Json j;
  j["jetDimensions"] = Json::array();
  for (const auto& [k, dim] : t.jet_dims) j["jetDimensions"].push_back({{"k", k}, {"dim", dim}});
  j["codimensions"] = Json::array();
  for (const auto& c : t.codimensions) j["codimensions"].push_back({{"stratum", c.stratum}, {"codimension", c.codimension}});
  return j;
}

}  // namespace circlebif
