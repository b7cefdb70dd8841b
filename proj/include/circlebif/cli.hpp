#pragma once

// Command-line front end. One process runs one subcommand; results go to
// --out (or stdout) as JSON, with optional CSV/SVG side files.
//
// Exit codes: 0 success, 2 invalid input or failed validation,
// 3 numerical non-convergence, 1 any other library error.

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "circlebif/bifurcation.hpp"
#include "circlebif/census.hpp"
#include "circlebif/errors.hpp"
#include "circlebif/family.hpp"
#include "circlebif/family_json.hpp"
#include "circlebif/invariants.hpp"
#include "circlebif/parallel.hpp"
#include "circlebif/results_io.hpp"
#include "circlebif/rotation.hpp"

namespace circlebif::cli {

enum ExitCode { kOk = 0, kFailure = 1, kInvalid = 2, kNumerical = 3 };

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::InvalidFamily:
    case ErrorCode::NotDiffeomorphism:
    case ErrorCode::PreconditionViolation:
    case ErrorCode::IoError:
    case ErrorCode::DegenerateConstruction:
      return kInvalid;
    case ErrorCode::NoConvergence:
    case ErrorCode::SingularSystem:
    case ErrorCode::RankDeficient:
      return kNumerical;
    default:
      return kFailure;
  }
}

inline std::vector<Rational> parse_rational_list(const std::string& text) {
  std::vector<Rational> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(parse_rational(item));
  if (out.empty()) fail(ErrorCode::ParseError, "empty rational list");
  return out;
}

namespace detail {

inline void emit(const std::string& path, const Json& j, std::ostream& out) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty() || path == "-")
    out << text;
  else
    write_text_file(path, text);
}

inline void require_positive(double v, const char* what) {
  if (!(v > 0.0)) fail(ErrorCode::PreconditionViolation, std::string(what) + " must be positive");
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Saddle-node bifurcation toolkit for two-parameter circle-map families", "circlebif"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0: CIRCLEBIF_THREADS or 1)")->check(CLI::NonNegativeNumber);

  std::string family_path, out_path, csv_path, svg_path;
  double s = 0.0, theta = 0.0, x = 0.0, tol = kDefaultRationalTol;
  std::string rational = "0/1", rationals = "0/1";

  auto add_family = [&](CLI::App* c) { c->add_option("--family", family_path, "family spec JSON")->required(); };
  auto add_out = [&](CLI::App* c) { c->add_option("--out", out_path, "output JSON path (default stdout)"); };
  auto add_point = [&](CLI::App* c) {
    c->add_option("--s", s, "parameter s");
    c->add_option("--theta", theta, "parameter theta");
  };

  auto* rotnum = app.add_subcommand("rotnum", "rotation number estimate");
  std::int64_t iters = 100000;
  add_family(rotnum), add_point(rotnum), add_out(rotnum);
  rotnum->add_option("--iters", iters, "iterations (>= 1000)");
  rotnum->add_option("--x0", x, "initial point");

  auto* detect = app.add_subcommand("detect", "rational rotation number with an existing orbit");
  std::int64_t q_max = kDefaultQMax;
  add_family(detect), add_point(detect), add_out(detect);
  detect->add_option("--qmax", q_max, "largest denominator");
  detect->add_option("--tol", tol, "zero tolerance");

  auto* census = app.add_subcommand("census", "periodic orbits of one rational at one parameter");
  int grid = 0;
  add_family(census), add_point(census), add_out(census);
  census->add_option("--rational", rational, "p/q")->required();
  census->add_option("--grid", grid, "grid points (0: 4096 q)");
  census->add_option("--csv", csv_path, "orbit table CSV");

  auto* tongue = app.add_subcommand("tongue", "theta-interval of a rational at fixed s");
  add_family(tongue), add_out(tongue);
  tongue->add_option("--s", s, "parameter s");
  tongue->add_option("--rational", rational, "p/q")->required();
  tongue->add_option("--tol", tol, "tolerance");

  auto* trace = app.add_subcommand("trace", "trace one saddle-node curve from a seed");
  std::string frozen = "s";
  StepControl step;
  add_family(trace), add_point(trace), add_out(trace);
  trace->add_option("--x", x, "seed x");
  trace->add_option("--rational", rational, "p/q")->required();
  trace->add_option("--frozen", frozen, "coordinate held fixed while solving the seed")
      ->check(CLI::IsMember({"s", "theta"}));
  trace->add_option("--max-step", step.max_step, "largest continuation step (box units)");
  trace->add_option("--min-step", step.min_step, "smallest continuation step (box units)");

  auto* diagram = app.add_subcommand("diagram", "assemble the bifurcation diagram");
  DiagramOptions dopt;
  add_family(diagram), add_out(diagram);
  diagram->add_option("--rationals", rationals, "comma-separated p/q list");
  diagram->add_option("--scan-grid", dopt.scan_grid, "seed scan cells per side");
  diagram->add_option("--edge-samples", dopt.edge_samples, "seed samples per box edge");
  diagram->add_option("--svg", svg_path, "SVG plot path");
  diagram->add_option("--csv", csv_path, "curve points CSV");

  auto* cusps = app.add_subcommand("cusps", "cusp points of one rational");
  int scan_grid = 16;
  add_family(cusps), add_out(cusps);
  cusps->add_option("--rational", rational, "p/q")->required();
  cusps->add_option("--scan-grid", scan_grid, "seed scan cells per side");

  auto* invariants = app.add_subcommand("invariants", "maximal coexisting sources at a rational");
  int theta_samples = kDefaultThetaSamples;
  std::optional<double> s_slice;
  bool jet_table = false;
  add_family(invariants), add_out(invariants);
  invariants->add_option("--rational", rational, "p/q");
  invariants->add_option("--theta-samples", theta_samples, "interior theta samples (>= 64)");
  invariants->add_option("--s", s_slice, "slice s (default: lower box edge)");
  invariants->add_flag("--jet-table", jet_table, "print jet-space dimensions and codimensions instead");

  auto* parity = app.add_subcommand("parity-diff", "first index where parities differ");
  std::string family_b;
  parity->add_option("--family", family_path, "first family")->required();
  parity->add_option("--other", family_b, "second family")->required();
  parity->add_option("--rationals", rationals, "comma-separated p/q list")->required();
  parity->add_option("--theta-samples", theta_samples, "interior theta samples (>= 64)");
  add_out(parity);

  auto* scan = app.add_subcommand("scan-section", "a(s) along horizontal sections");
  int s_steps = 200;
  add_family(scan), add_out(scan);
  scan->add_option("--rational", rational, "p/q")->required();
  scan->add_option("--s-steps", s_steps, "sections (>= 32)");
  scan->add_option("--theta-samples", theta_samples, "interior theta samples (>= 64)");
  scan->add_option("--csv", csv_path, "a(s) CSV");

  auto* lemma = app.add_subcommand("construct-lemma1", "build the N-sink/N-source family around p/q");
  Lemma1Params lp;
  std::string lemma_pq = "0/1";
  bool theta_shift = false;
  lemma->add_option("--pq", lemma_pq, "p/q")->required();
  lemma->add_option("--n", lp.n, "N")->required();
  lemma->add_option("--delta", lp.delta, "flow time");
  lemma->add_option("--amp", lp.amplitude, "field amplitude");
  lemma->add_option("--steps", lp.steps, "RK4 steps");
  lemma->add_flag("--theta-shift", theta_shift, "append x -> x + theta");
  add_out(lemma);

  auto* validate = app.add_subcommand("validate", "check that a family is a diffeomorphism family");
  int grid_x = 256, grid_params = 16;
  add_family(validate), add_out(validate);
  validate->add_option("--grid-x", grid_x, "x samples (>= 256)");
  validate->add_option("--grid-params", grid_params, "samples per parameter (>= 16)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInvalid;
  }

  try {
    set_thread_count(threads);
    detail::require_positive(tol, "--tol");
    auto load = [&](const std::string& path) { return load_family(path); };

    if (*rotnum) {
      const Family fam(load(family_path));
      detail::emit(out_path, to_json(estimate_rho(fam, {s, theta}, iters, x)), out);
    } else if (*detect) {
      const Family fam(load(family_path));
      const auto r = detect_rational(fam, {s, theta}, q_max, tol);
      Json j;
      j["s"] = io::num(s);
      j["theta"] = io::num(theta);
      j["qMax"] = q_max;
      j["rational"] = r ? Json(r->str()) : Json(nullptr);
      detail::emit(out_path, j, out);
    } else if (*census) {
      const Family fam(load(family_path));
      const auto c = run_census(fam, {s, theta}, parse_rational(rational), grid);
      if (!csv_path.empty()) write_text_file(csv_path, census_csv(c));
      detail::emit(out_path, to_json(c), out);
    } else if (*tongue) {
      const Family fam(load(family_path));
      const Rational pq = parse_rational(rational);
      Json j = to_json(tongue_interval(fam, s, pq, tol));
      j["rational"] = pq.str();
      j["s"] = io::num(s);
      detail::emit(out_path, j, out);
    } else if (*trace) {
      const Family fam(load(family_path));
      const Rational pq = parse_rational(rational);
      const auto seed =
          solve_saddle_node(fam, pq, {s, theta, x}, frozen == "s" ? Frozen::s_fixed() : Frozen::theta_fixed());
      detail::emit(out_path, to_json(trace_curve(fam, pq, {seed.s, seed.theta, seed.x}, step)), out);
    } else if (*diagram) {
      const Family fam(load(family_path));
      const auto ds = assemble_diagram(fam, parse_rational_list(rationals), dopt);
      Json j;
      j["paramBox"] = {{"s", {io::num(fam.box().s_lo), io::num(fam.box().s_hi)}},
                       {"theta", {io::num(fam.box().theta_lo), io::num(fam.box().theta_hi)}}};
      j["diagrams"] = Json::array();
      for (const auto& d : ds) j["diagrams"].push_back(to_json(d));
      if (!svg_path.empty()) write_text_file(svg_path, diagram_svg(fam.box(), ds));
      if (!csv_path.empty()) write_text_file(csv_path, diagram_csv(ds));
      detail::emit(out_path, j, out);
    } else if (*cusps) {
      require(scan_grid >= 2, "--scan-grid must be >= 2");
      const Family fam(load(family_path));
      const Rational pq = parse_rational(rational);
      const auto& b = fam.box();
      std::vector<Vec3> seeds;
      for (int i = 0; i < scan_grid; ++i)
        for (int k = 0; k < scan_grid; ++k) {
          const double ss = b.s_lo + (i + 0.5) / scan_grid * b.s_len();
          const double tt = b.theta_lo + (k + 0.5) / scan_grid * b.theta_len();
          for (double xi : circlebif::detail::displacement_inflections(fam, pq, ss, tt, static_cast<int>(256 * pq.q)))
            seeds.push_back({ss, tt, xi});
        }
      Json j;
      j["rational"] = pq.str();
      j["cusps"] = Json::array();
      for (const auto& c : find_cusps(fam, pq, seeds))
        if (b.contains(c.s, c.theta)) j["cusps"].push_back(to_json(c));
      detail::emit(out_path, j, out);
    } else if (*invariants) {
      if (jet_table) {
        detail::emit(out_path, to_json(jet_dimension_table(3)), out);
      } else {
        const Family fam(load(family_path));
        detail::emit(out_path, to_json(max_sources_at_rational(fam, parse_rational(rational), theta_samples, s_slice)),
                     out);
      }
    } else if (*parity) {
      const Family fa(load(family_path));
      const Family fb(load(family_b));
      detail::emit(out_path, to_json(parity_prefix_diff(fa, fb, parse_rational_list(rationals), theta_samples)), out);
    } else if (*scan) {
      const Family fam(load(family_path));
      const auto r = section_scan(fam, parse_rational(rational), s_steps, theta_samples);
      if (!csv_path.empty()) write_text_file(csv_path, section_scan_csv(r));
      detail::emit(out_path, to_json(r), out);
    } else if (*lemma) {
      const Rational pq = parse_rational(lemma_pq);
      lp.p = pq.p;
      lp.q = pq.q;
      FamilySpec spec = build_lemma1_family(lp);
      if (theta_shift) spec = embed_theta_shift(spec);
      detail::emit(out_path, to_json(spec), out);
    } else if (*validate) {
      const Family fam(load(family_path));
      const auto rep = validate_diffeo(fam, grid_x, grid_params);
      Json j;
      j["ok"] = rep.ok;
      j["minDerivative"] = io::num(rep.min_derivative);
      j["at"] = {{"s", io::num(rep.at_s)}, {"theta", io::num(rep.at_theta)}, {"x", io::num(rep.at_x)}};
      detail::emit(out_path, j, out);
      if (!rep.ok) {
        err << "error: NotDiffeomorphism: minimum derivative " << rep.min_derivative << " is not positive\n";
        return kInvalid;
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}

}  // namespace circlebif::cli
