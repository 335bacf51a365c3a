#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cheegerlab/constellation.hpp"
#include "cheegerlab/error.hpp"
#include "cheegerlab/extrinsic_analysis.hpp"
#include "cheegerlab/format.hpp"
#include "cheegerlab/mesh_generators.hpp"
#include "cheegerlab/mesh_io.hpp"
#include "cheegerlab/model_space.hpp"
#include "cheegerlab/numerics/grid.hpp"
#include "cheegerlab/parallel.hpp"

namespace cheegerlab::cli {

enum ExitCode : int { kOk = 0, kSpecError = 2, kNumericFailure = 3, kInputMismatch = 4 };

inline Json to_json(const IsoperimetricReport& r) {
  return Json{{"pass", r.pass},
              {"min_margin", r.min_margin},
              {"t_at_min", r.t_at_min},
              {"min_relative_margin", r.min_relative_margin},
              {"t_at_min_relative", r.t_at_min_relative},
              {"max_abs_relative_margin", r.max_abs_relative_margin},
              {"epsilon_mesh", r.epsilon_mesh}};
}

inline Json to_json(const ProfileViolations& v) {
  return Json{{"pass", v.pass},
              {"epsilon_mesh", v.epsilon_mesh},
              {"f_monotone", Json{{"worst_drop", v.monotonicity}, {"t", v.t_monotonicity}}},
              {"F_nonnegative", Json{{"worst_deficit", v.nonnegativity}, {"t", v.t_nonnegativity}}}};
}

inline Json to_json(const CheegerReport& c) {
  Json j{{"upper_estimate_from_exhaustion", c.upper_estimate},
         {"t_at_min", c.t_at_min},
         {"model_upper_bound", cheegerlab::to_json(c.model_upper)},
         {"model_lower_bound", cheegerlab::to_json(c.model_lower)},
         {"tolerance", c.tolerance},
         {"sandwich_verdict", c.sandwich_verdict}};
  j["below_model_upper"] = c.below_model_upper ? Json(*c.below_model_upper) : Json(nullptr);
  j["diagnostics"] = c.diagnostics;
  return j;
}

inline Json to_json(const LaplacianReport& r) {
  return Json{{"pass", r.pass},
              {"interior_vertices", r.interior_vertices},
              {"eligible_vertices", r.eligible},
              {"violations", r.violations},
              {"violation_fraction", r.violation_fraction},
              {"near_pole_vertices", r.near_pole},
              {"near_pole_violations", r.near_pole_violations},
              {"concentrated_near_pole", r.concentrated_near_pole},
              {"slack_relative", r.slack_relative},
              {"residual_median", r.residual_median},
              {"residual_p95", r.residual_p95},
              {"residual_max", r.residual_max},
              {"worst", Json{{"r", r.worst_r}, {"laplacian", r.worst_laplacian}, {"bound", r.worst_bound}}}};
}

inline Json to_json(const DivergenceReport& d) {
  return Json{{"pass", d.pass}, {"t", d.t}, {"lhs", d.lhs}, {"rhs", d.rhs}, {"relative_mismatch", d.relative_mismatch}};
}

inline Json mesh_json(const SampledSubmanifold& P) {
  return Json{{"ambient", P.ambient.tag().substr(9)},
              {"vertices", P.vertices.size()},
              {"faces", P.faces.size()},
              {"h_max", P.max_edge},
              {"mean_edge", P.mean_edge},
              {"truncation_radius", P.truncation_radius}};
}

inline void write_profile_csv(std::ostream& out, const GrowthProfile& G) {
  out << "t,vol_D,vol_bdry,vol_D_prime,f,F,ref_sphere_ball,margin\n";
  for (std::size_t i = 0; i < G.t.size(); ++i) {
    const double row[] = {G.t[i], G.vol_D[i], G.vol_bdry[i], G.vol_D_prime[i],
                          G.f[i], G.F[i],     G.ref_sphere_ball[i], G.margin[i]};
    write_csv_row(out, row);
  }
}

/// Mesh ambient must be the space form the constellation was stated in.
inline void require_ambient_match(const SampledSubmanifold& P, const ConstellationSpec& spec,
                                  std::vector<std::string>& warnings) {
  if (spec.m != P.m)
    throw InputMismatch("constellation has m = " + std::to_string(spec.m) + " but the mesh is a surface (m = 2)");
  if (!spec.ambient_b) {
    warnings.push_back("constellation ambient is not a space form; mesh ambient not cross-checked");
    return;
  }
  const double b = *spec.ambient_b;
  const bool euclid = P.ambient.model() == AmbientModel::Euclidean;
  if (euclid ? b != 0.0 : b != P.ambient.b())
    throw InputMismatch("mesh ambient (" + P.ambient.tag().substr(9) + ") does not match constellation b = " +
                        format_double(b));
}

namespace detail {

class Output {
public:
  Output(const std::string& path, std::ostream& fallback) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw ParseError("cannot write " + path);
    }
    out_ = file_.is_open() ? static_cast<std::ostream*>(&file_) : &fallback;
  }
  std::ostream& stream() { return *out_; }

private:
  std::ofstream file_;
  std::ostream* out_;
};

inline void write_json(const std::string& path, std::ostream& fallback, const Json& j) {
  Output o(path, fallback);
  o.stream() << j.dump(2) << '\n';
}

struct GridOptions {
  std::optional<double> t_min;
  std::optional<double> t_max;
  int count = 100;
  std::string spacing = "linear";
};

inline std::vector<double> build_t_grid(const GridOptions& g, const SampledSubmanifold& P) {
  const double t_max = g.t_max.value_or(P.truncation_radius);
  if (!std::isfinite(t_max)) throw DomainError("closed mesh: --tmax is required");
  if (g.count < 2) throw DomainError("--count must be at least 2");
  double t_min = 0.0;
  if (g.t_min) {
    t_min = *g.t_min;
  } else {
    // Smallest radius that contains a whole face, so D_t is never empty.
    double first_full = std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < P.faces.size(); ++f) first_full = std::min(first_full, P.r_max(f));
    t_min = std::max(t_max / g.count, first_full);
  }
  if (!(t_min > 0.0) || !(t_min < t_max)) throw DomainError("need 0 < tmin < tmax");
  if (g.spacing == "linear") return numerics::linear_grid(t_min, t_max, static_cast<std::size_t>(g.count));
  if (g.spacing == "log") return numerics::log_grid(t_min, t_max, static_cast<std::size_t>(g.count));
  throw ParseError("--spacing must be linear or log");
}

inline void add_grid_options(CLI::App* cmd, GridOptions& g) {
  cmd->add_option("--tmin", g.t_min, "Smallest radius of the t grid (default: first full face)");
  cmd->add_option("--tmax", g.t_max, "Largest radius of the t grid (default: truncation radius)");
  cmd->add_option("--count", g.count, "Number of grid radii")->capture_default_str();
  cmd->add_option("--spacing", g.spacing, "linear or log")->capture_default_str();
}

} // namespace detail

/// Runs the command line; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Model spaces, isoperimetric comparison and Cheeger bounds on sampled minimal surfaces"};
  app.require_subcommand(1);

  // model
  auto* model = app.add_subcommand("model", "Tabulate w, η, K and volumes of a model space");
  std::optional<double> model_b;
  std::string model_w_csv, model_w_name, model_out;
  int model_m = 2, model_n = 100;
  std::optional<double> model_rmax, model_rmin;
  std::string model_spacing = "linear";
  auto* ob = model->add_option("--b", model_b, "Space-form curvature");
  auto* oc = model->add_option("--w-csv", model_w_csv, "Tabulated warping function (CSV r,w)");
  auto* on = model->add_option("--w", model_w_name, "Named warping function (exp-r2)");
  ob->excludes(oc, on);
  oc->excludes(on);
  model->add_option("--m", model_m, "Dimension")->capture_default_str();
  model->add_option("--rmax", model_rmax, "Largest radius (default 10; required with --w-csv)");
  model->add_option("--rmin", model_rmin, "Smallest radius (default rmax/n)");
  model->add_option("--n", model_n, "Number of radii")->capture_default_str();
  model->add_option("--spacing", model_spacing, "linear or log")->capture_default_str();
  model->add_option("--out", model_out, "Output CSV (default stdout)");

  // constellation
  auto* cons = app.add_subcommand("constellation", "Construct W, check balance, compute Cheeger values");
  std::string cons_spec, cons_out;
  cons->add_option("--spec", cons_spec, "Constellation JSON")->required();
  cons->add_option("--out", cons_out, "Output JSON (default stdout)");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a test surface mesh");
  std::string gen_kind, gen_out;
  double gen_tmax = 0.0, gen_a = 1.0, gen_pitch = 1.0, gen_b = -1.0;
  std::optional<double> gen_radial, gen_arc;
  std::optional<int> gen_sectors;
  int gen_refine = 0;
  gen->add_option("--kind", gen_kind, "plane, catenoid, helicoid or h2-in-h3")->required();
  gen->add_option("--tmax", gen_tmax, "Largest extrinsic radius")->required();
  gen->add_option("--a", gen_a, "Catenoid neck radius")->capture_default_str();
  gen->add_option("--pitch", gen_pitch, "Helicoid pitch")->capture_default_str();
  gen->add_option("--b", gen_b, "Ambient curvature for h2-in-h3")->capture_default_str();
  gen->add_option("--radial-step", gen_radial, "Ring spacing");
  gen->add_option("--arc-step", gen_arc, "Target vertex spacing along rings");
  gen->add_option("--min-sectors", gen_sectors, "Minimum vertices per ring");
  gen->add_option("--refine", gen_refine, "Refinement levels (each halves all spacings)")->capture_default_str();
  gen->add_option("--out", gen_out, "Output mesh (OFF)")->required();

  // analyze
  auto* ana = app.add_subcommand("analyze", "Growth profile, isoperimetric and Cheeger checks on a mesh");
  std::string ana_mesh, ana_cons, ana_dir = ".";
  detail::GridOptions ana_grid;
  bool ana_lap = false;
  std::optional<double> ana_div;
  double ana_tol = 0.02, ana_slack = 0.05;
  ana->add_option("--mesh", ana_mesh, "Mesh file (OFF)")->required();
  ana->add_option("--constellation", ana_cons, "Constellation JSON")->required();
  detail::add_grid_options(ana, ana_grid);
  ana->add_option("--out-dir", ana_dir, "Directory for profile.csv and verdict.json")->capture_default_str();
  ana->add_flag("--laplacian", ana_lap, "Also run the discrete Laplacian check");
  ana->add_option("--divergence", ana_div, "Also run the divergence audit at this radius");
  ana->add_option("--tolerance", ana_tol, "Sandwich tolerance")->capture_default_str();
  ana->add_option("--slack", ana_slack, "Relative Laplacian slack")->capture_default_str();

  // laplacian-check
  auto* lap = app.add_subcommand("laplacian-check", "Discrete Laplacian comparison on a mesh");
  std::string lap_mesh, lap_cons, lap_out;
  double lap_slack = 0.05;
  lap->add_option("--mesh", lap_mesh, "Mesh file (OFF)")->required();
  lap->add_option("--constellation", lap_cons, "Constellation JSON")->required();
  lap->add_option("--slack", lap_slack, "Relative slack")->capture_default_str();
  lap->add_option("--out", lap_out, "Output JSON (default stdout)");

  // divergence-audit
  auto* div = app.add_subcommand("divergence-audit", "Integrated divergence identity on D_t");
  std::string div_mesh, div_out;
  double div_t = 0.0;
  div->add_option("--mesh", div_mesh, "Mesh file (OFF)")->required();
  div->add_option("--t", div_t, "Radius")->required();
  div->add_option("--out", div_out, "Output JSON (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kSpecError;
  }

  try {
    if (*model) {
      WarpingFunction w;
      if (!model_w_csv.empty())
        w = WarpingFunction::from_csv(model_w_csv);
      else if (!model_w_name.empty())
        w = WarpingFunction::named(model_w_name);
      else
        w = WarpingFunction::space_form(model_b.value_or(0.0));
      if (model_n < 2) throw DomainError("--n must be at least 2");
      if (!model_rmax && !model_w_csv.empty()) throw DomainError("--rmax is required with --w-csv");
      const double rmax = model_rmax.value_or(10.0);
      const double rmin = model_rmin.value_or(rmax / model_n);
      if (!(rmin > 0.0) || !(rmin < rmax)) throw DomainError("need 0 < rmin < rmax");
      std::vector<double> grid;
      if (model_spacing == "linear")
        grid = numerics::linear_grid(rmin, rmax, static_cast<std::size_t>(model_n));
      else if (model_spacing == "log")
        grid = numerics::log_grid(rmin, rmax, static_cast<std::size_t>(model_n));
      else
        throw ParseError("--spacing must be linear or log");
      const ModelSpace M(model_m, w);
      std::vector<std::array<double, 7>> rows(grid.size());
      parallel_for(grid.size(), [&](std::size_t i) {
        const double r = grid[i];
        rows[i] = {r, w.value(r), w.eta(r), w.curvature(r), M.sphere_volume(r), M.ball_volume(r),
                   M.isoperimetric_quotient(r)};
      });
      detail::Output o(model_out, out);
      o.stream() << "r,w,eta,K,vol_sphere,vol_ball,q\n";
      for (const auto& row : rows) write_csv_row(o.stream(), row);
      return kOk;
    }

    if (*cons) {
      const auto spec = load_constellation(cons_spec);
      const auto space = build_space(spec);
      Json j = constellation_report(space);
      j["ambient_b"] = optional_json(spec.ambient_b);
      detail::write_json(cons_out, out, j);
      return kOk;
    }

    if (*gen) {
      SurfaceParams p;
      p.kind = parse_surface_kind(gen_kind);
      p.t_max = gen_tmax;
      p.neck = gen_a;
      p.pitch = gen_pitch;
      p.b = gen_b;
      p.resolution = default_resolution(p.kind);
      if (gen_radial) p.resolution.radial_step = *gen_radial;
      if (gen_arc) p.resolution.arc_step = *gen_arc;
      if (gen_sectors) p.resolution.min_sectors = *gen_sectors;
      if (gen_refine < 0) throw DomainError("--refine must be non-negative");
      p.resolution = p.resolution.refined(gen_refine);
      const auto P = generate_surface(p);
      write_off(gen_out, P);
      err << "wrote " << gen_out << ": " << P.vertices.size() << " vertices, " << P.faces.size() << " faces\n";
      return kOk;
    }

    if (*ana) {
      const auto spec = load_constellation(ana_cons);
      const auto P = read_off(ana_mesh);
      std::vector<std::string> warnings;
      require_ambient_match(P, spec, warnings);
      const auto grid = detail::build_t_grid(ana_grid, P);
      const auto space = build_space(spec);
      const auto G = compute_profile(P, space, grid);
      const auto balance = check_balance(space, default_balance_grid(space.R));
      if (!balance.balanced_below)
        warnings.push_back("space is not balanced from below; the isoperimetric comparison is not guaranteed");
      Json verdict;
      verdict["mesh"] = mesh_json(P);
      verdict["comparison_space"] = Json{{"m", space.m}, {"W", space.W.describe()}, {"R", space.R}};
      verdict["balance"] = cheegerlab::to_json(balance);
      verdict["t_grid"] = Json{{"min", grid.front()}, {"max", grid.back()}, {"count", grid.size()},
                               {"spacing", ana_grid.spacing}, {"derivative_step", G.derivative_step}};
      verdict["epsilon_mesh"] = G.epsilon_mesh;
      verdict["isoperimetric"] = to_json(verify_isoperimetric_inequality(G));
      verdict["profile_checks"] = to_json(profile_violations(G));
      verdict["cheeger"] = to_json(cheeger_estimate(G, space, ana_tol));
      if (ana_lap) verdict["laplacian"] = to_json(discrete_laplacian_check(P, space, ana_slack));
      if (ana_div) verdict["divergence"] = to_json(divergence_audit(P, *ana_div));
      verdict["warnings"] = warnings;
      std::filesystem::create_directories(ana_dir);
      {
        detail::Output o((std::filesystem::path(ana_dir) / "profile.csv").string(), out);
        write_profile_csv(o.stream(), G);
      }
      detail::write_json((std::filesystem::path(ana_dir) / "verdict.json").string(), out, verdict);
      return kOk;
    }

    if (*lap) {
      const auto spec = load_constellation(lap_cons);
      const auto P = read_off(lap_mesh);
      std::vector<std::string> warnings;
      require_ambient_match(P, spec, warnings);
      const auto space = build_space(spec);
      Json j = to_json(discrete_laplacian_check(P, space, lap_slack));
      j["mesh"] = mesh_json(P);
      j["warnings"] = warnings;
      detail::write_json(lap_out, out, j);
      return kOk;
    }

    if (*div) {
      const auto P = read_off(div_mesh);
      Json j = to_json(divergence_audit(P, div_t));
      j["mesh"] = mesh_json(P);
      detail::write_json(div_out, out, j);
      return kOk;
    }
  } catch (const InputMismatch& e) {
    err << "input mismatch: " << e.what() << '\n';
    return kInputMismatch;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kSpecError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kSpecError;
  }
  return kOk;
}

} // namespace cheegerlab::cli
