#pragma once

// JSON schema for family spec files:
//
//   {"paramBox": {"s": [lo, hi], "theta": [lo, hi]},
//    "monotoneInTheta": bool,
//    "stages": [ ...stage objects... ]}
//
// Stage objects carry a "type" tag: rotation {offsetPoly}, fourier
// {offsetPoly, modes}, flow {field, delta, steps}, inverse {of}, homotopy
// {blend, from, to}. A Poly2 is {"terms": [{"i", "j", "coef"}]} where coef is a
// number or an exact rational string "p/q".

#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "circlebif/errors.hpp"
#include "circlebif/family.hpp"
#include "circlebif/rational.hpp"

namespace circlebif {

using Json = nlohmann::ordered_json;

namespace detail {

inline const Json& at(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) fail(ErrorCode::ParseError, where + ": missing key '" + key + "'");
  return j.at(key);
}

inline double get_number(const Json& j, const std::string& where) {
  if (!j.is_number()) fail(ErrorCode::ParseError, where + ": expected a number");
  return j.get<double>();
}

inline int get_int(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(ErrorCode::ParseError, where + ": expected an integer");
  return j.get<int>();
}

inline Json poly_to_json(const Poly2& p) {
  Json terms = Json::array();
  for (const auto& t : p.terms) {
    Json jt;
    jt["i"] = t.i;
    jt["j"] = t.j;
    if (t.exact)
      jt["coef"] = t.exact->str();
    else
      jt["coef"] = t.coef;
    terms.push_back(std::move(jt));
  }
  Json out;
  out["terms"] = std::move(terms);
  return out;
}

inline Poly2 poly_from_json(const Json& j, const std::string& where) {
  Poly2 p;
  const Json& terms = at(j, "terms", where);
  if (!terms.is_array()) fail(ErrorCode::ParseError, where + ".terms: expected an array");
  for (std::size_t n = 0; n < terms.size(); ++n) {
    const std::string here = where + ".terms[" + std::to_string(n) + "]";
    const Json& jt = terms[n];
    Poly2Term t;
    t.i = get_int(at(jt, "i", here), here + ".i");
    t.j = get_int(at(jt, "j", here), here + ".j");
    const Json& c = at(jt, "coef", here);
    if (c.is_string()) {
      const Rational r = parse_rational(c.get<std::string>());
      t.coef = r.value();
      t.exact = r;
    } else {
      t.coef = get_number(c, here + ".coef");
    }
    p.terms.push_back(t);
  }
  return p;
}

inline Json modes_to_json(const std::vector<FourierMode>& modes) {
  Json out = Json::array();
  for (const auto& m : modes) {
    Json jm;
    jm["k"] = m.k;
    jm["ampSin"] = poly_to_json(m.amp_sin);
    jm["ampCos"] = poly_to_json(m.amp_cos);
    out.push_back(std::move(jm));
  }
  return out;
}

inline std::vector<FourierMode> modes_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) fail(ErrorCode::ParseError, where + ": expected an array of modes");
  std::vector<FourierMode> out;
  for (std::size_t n = 0; n < j.size(); ++n) {
    const std::string here = where + "[" + std::to_string(n) + "]";
    FourierMode m;
    m.k = get_int(at(j[n], "k", here), here + ".k");
    if (j[n].contains("ampSin")) m.amp_sin = poly_from_json(j[n]["ampSin"], here + ".ampSin");
    if (j[n].contains("ampCos")) m.amp_cos = poly_from_json(j[n]["ampCos"], here + ".ampCos");
    out.push_back(std::move(m));
  }
  return out;
}

inline Json stages_to_json(const std::vector<Stage>& stages);
inline std::vector<Stage> stages_from_json(const Json& j, const std::string& where);

inline Json stage_to_json(const Stage& st) {
  return std::visit(
      [](const auto& s) -> Json {
        using S = std::decay_t<decltype(s)>;
        Json j;
        if constexpr (std::is_same_v<S, RotationStage>) {
          j["type"] = "rotation";
          j["offsetPoly"] = poly_to_json(s.offset);
        } else if constexpr (std::is_same_v<S, FourierStage>) {
          j["type"] = "fourier";
          j["offsetPoly"] = poly_to_json(s.offset);
          j["modes"] = modes_to_json(s.modes);
        } else if constexpr (std::is_same_v<S, FlowStage>) {
          j["type"] = "flow";
          j["field"] = modes_to_json(s.field);
          j["delta"] = s.delta;
          j["steps"] = s.steps;
        } else if constexpr (std::is_same_v<S, InverseStage>) {
          j["type"] = "inverse";
          j["of"] = stages_to_json(s.of);
        } else {
          j["type"] = "homotopy";
          j["blend"] = "smoothstep";
          j["from"] = stages_to_json(s.from);
          j["to"] = stages_to_json(s.to);
        }
        return j;
      },
      st.v);
}

inline Stage stage_from_json(const Json& j, const std::string& where) {
  const Json& type = at(j, "type", where);
  if (!type.is_string()) fail(ErrorCode::ParseError, where + ".type: expected a string");
  const auto t = type.get<std::string>();
  if (t == "rotation") return RotationStage{poly_from_json(at(j, "offsetPoly", where), where + ".offsetPoly")};
  if (t == "fourier") {
    FourierStage st;
    st.offset = poly_from_json(at(j, "offsetPoly", where), where + ".offsetPoly");
    st.modes = modes_from_json(at(j, "modes", where), where + ".modes");
    return st;
  }
  if (t == "flow") {
    FlowStage st;
    st.field = modes_from_json(at(j, "field", where), where + ".field");
    st.delta = get_number(at(j, "delta", where), where + ".delta");
    st.steps = j.contains("steps") ? get_int(j["steps"], where + ".steps") : 64;
    return st;
  }
  if (t == "inverse") return InverseStage{stages_from_json(at(j, "of", where), where + ".of")};
  if (t == "homotopy") {
    HomotopyStage st;
    if (j.contains("blend") && j["blend"] != "smoothstep")
      fail(ErrorCode::ParseError, where + ".blend: only 'smoothstep' is supported");
    st.from = stages_from_json(at(j, "from", where), where + ".from");
    st.to = stages_from_json(at(j, "to", where), where + ".to");
    return st;
  }
  fail(ErrorCode::ParseError, where + ": unknown stage type '" + t + "'");
}

inline Json stages_to_json(const std::vector<Stage>& stages) {
  Json out = Json::array();
  for (const auto& st : stages) out.push_back(stage_to_json(st));
  return out;
}

inline std::vector<Stage> stages_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) fail(ErrorCode::ParseError, where + ": expected an array of stages");
  std::vector<Stage> out;
  for (std::size_t n = 0; n < j.size(); ++n) out.push_back(stage_from_json(j[n], where + "[" + std::to_string(n) + "]"));
  return out;
}

inline std::pair<double, double> range_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) fail(ErrorCode::ParseError, where + ": expected [lo, hi]");
  return {get_number(j[0], where), get_number(j[1], where)};
}

}  // namespace detail

inline Json to_json(const FamilySpec& spec) {
  Json j;
  j["paramBox"]["s"] = {spec.box.s_lo, spec.box.s_hi};
  j["paramBox"]["theta"] = {spec.box.theta_lo, spec.box.theta_hi};
  j["monotoneInTheta"] = spec.monotone_in_theta;
  j["stages"] = detail::stages_to_json(spec.stages);
  return j;
}

inline FamilySpec family_from_json(const Json& j) {
  FamilySpec spec;
  if (!j.is_object()) fail(ErrorCode::ParseError, "family: expected a JSON object");
  if (j.contains("paramBox")) {
    const Json& b = j["paramBox"];
    if (b.contains("s")) std::tie(spec.box.s_lo, spec.box.s_hi) = detail::range_from_json(b["s"], "paramBox.s");
    if (b.contains("theta"))
      std::tie(spec.box.theta_lo, spec.box.theta_hi) = detail::range_from_json(b["theta"], "paramBox.theta");
  }
  if (j.contains("monotoneInTheta")) {
    if (!j["monotoneInTheta"].is_boolean()) fail(ErrorCode::ParseError, "monotoneInTheta: expected a boolean");
    spec.monotone_in_theta = j["monotoneInTheta"].get<bool>();
  }
  spec.stages = detail::stages_from_json(detail::at(j, "stages", "family"), "stages");
  return spec;
}

inline Json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, what + ": " + e.what());
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path + "'");
  out << text;
  if (!out) fail(ErrorCode::IoError, "write failed for '" + path + "'");
}

inline FamilySpec load_family(const std::string& path) {
  return family_from_json(parse_json_text(read_text_file(path), path));
}

inline void save_family(const std::string& path, const FamilySpec& spec) { write_text_file(path, to_json(spec).dump(2) + "\n"); }

}  // namespace circlebif
