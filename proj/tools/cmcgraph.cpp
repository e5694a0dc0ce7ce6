#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "cmcgraph/equidistant.hpp"
#include "cmcgraph/geometry.hpp"
#include "cmcgraph/profiles.hpp"
#include "cmcgraph/solver.hpp"
#include "cmcgraph/verify.hpp"

namespace {

using nlohmann::json;

// Exit codes (also listed in --help):
//   0 success, 1 verification failures, 2 invalid parameters or domain errors,
//   3 Newton non-convergence, 4 t-bracket failure, 5 numerical failure,
//   6 solve finished without meeting the convergence declaration.
constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitBadParams = 2;
constexpr int kExitNewton = 3;
constexpr int kExitBracket = 4;
constexpr int kExitNumerics = 5;
constexpr int kExitNotConverged = 6;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct OutputFile {
  FILE* f = stdout;
  bool owned = false;

  explicit OutputFile(const std::string& path) {
    if (!path.empty() && path != "-") {
      f = std::fopen(path.c_str(), "wb");
      if (!f) throw std::runtime_error("cannot open output file: " + path);
      owned = true;
    }
  }
  ~OutputFile() {
    if (owned) std::fclose(f);
  }
  OutputFile(const OutputFile&) = delete;
  OutputFile& operator=(const OutputFile&) = delete;
};

cmcgraph::Slope parse_slope(const std::string& text) {
  if (text == "inf" || text == "infinity") return cmcgraph::Slope::infinite();
  size_t used = 0;
  const double v = std::stod(text, &used);
  if (used != text.size()) throw std::domain_error("slope: cannot parse '" + text + "'");
  return cmcgraph::Slope::finite(v);
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t used = 0;
    out.push_back(std::stod(text.substr(pos), &used));
    pos += used;
    if (pos < text.size()) {
      if (text[pos] != ',') throw std::domain_error("list: expected ',' in '" + text + "'");
      ++pos;
    }
  }
  if (out.empty()) throw std::domain_error("list: no values in '" + text + "'");
  return out;
}

std::string output_dir_override(const std::string& cli_value) {
  const char* env = std::getenv("CMCGRAPH_OUT_DIR");
  if (env && *env) return env;
  return cli_value;
}

struct ProfileArgs {
  double rho = 1.0;
  std::string slope = "inf";
  double H = 0.0;
  double rmax = 5.0;
  int rows = 101;
  double tol = cmcgraph::kDefaultQuadTol;
  std::string out;
};

int run_profile(const ProfileArgs& a) {
  const cmcgraph::CmcParams params(a.rho, parse_slope(a.slope), a.H);
  if (!(a.rmax > a.rho)) throw std::domain_error("profile: need rmax > rho");
  if (a.rows < 2) throw std::domain_error("profile: need at least 2 rows");
  const cmcgraph::RadialProfile prof(params, a.tol);

  OutputFile out(a.out);
  std::fprintf(out.f, "# schema: cmcgraph/profile/1\n");
  std::fprintf(out.f, "# rho=%s s=%s H=%s quad_tol=%s\n", fmt17(a.rho).c_str(),
               a.slope.c_str(), fmt17(a.H).c_str(), fmt17(a.tol).c_str());
  std::fprintf(out.f, "r,f,fprime\n");
  for (int k = 0; k < a.rows; ++k) {
    const double r = a.rho + (a.rmax - a.rho) * k / (a.rows - 1);
    std::fprintf(out.f, "%s,%s,%s\n", fmt17(r).c_str(), fmt17(prof.value(r)).c_str(),
                 fmt17(prof.derivative(r)).c_str());
  }
  return kExitOk;
}

struct BoundsArgs {
  std::string h_list = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
  bool with_w0 = false;
  std::string catenoid_rho;
  double tol = cmcgraph::kDefaultQuadTol;
  std::string format = "csv";
  std::string out;
};

int run_bounds(const BoundsArgs& a) {
  const std::vector<double> hs = parse_list(a.h_list);
  for (double H : hs) {
    if (!(H >= 0.0 && H < 1.0)) {
      throw std::domain_error("bounds: H must lie in [0, 1); got " + fmt17(H));
    }
  }
  std::vector<double> cat_rhos;
  if (!a.catenoid_rho.empty()) cat_rhos = parse_list(a.catenoid_rho);

  std::vector<double> B(hs.size()), w0(hs.size(), 0.0);
  for (size_t k = 0; k < hs.size(); ++k) {
    B[k] = cmcgraph::height_bound_B(hs[k], a.tol);
    if (a.with_w0) w0[k] = cmcgraph::equidistant_height_w(0.0, hs[k], a.tol);
  }
  std::vector<double> cat_limits(cat_rhos.size());
  for (size_t k = 0; k < cat_rhos.size(); ++k) {
    cat_limits[k] = cmcgraph::catenoid_h2r_limit(cat_rhos[k], a.tol);
  }

  OutputFile out(a.out);
  const double pi4 = std::numbers::pi / 4.0;
  const double pi2 = std::numbers::pi / 2.0;
  if (a.format == "json") {
    json doc;
    doc["schema"] = "cmcgraph/bounds/1";
    doc["pi_over_4"] = pi4;
    doc["pi_over_2"] = pi2;
    doc["quad_tol"] = a.tol;
    json rows = json::array();
    for (size_t k = 0; k < hs.size(); ++k) {
      json row;
      row["H"] = hs[k];
      row["B"] = B[k];
      if (a.with_w0) row["w0"] = w0[k];
      rows.push_back(row);
    }
    doc["rows"] = rows;
    if (!cat_rhos.empty()) {
      json cats = json::array();
      for (size_t k = 0; k < cat_rhos.size(); ++k) {
        cats.push_back({{"rho", cat_rhos[k]}, {"limit", cat_limits[k]}});
      }
      doc["catenoid_limits"] = cats;
    }
    std::fprintf(out.f, "%s\n", doc.dump(2).c_str());
  } else {
    std::fprintf(out.f, "# schema: cmcgraph/bounds/1\n");
    std::fprintf(out.f, "# pi_over_4 = %s\n", fmt17(pi4).c_str());
    std::fprintf(out.f, "# pi_over_2 = %s\n", fmt17(pi2).c_str());
    for (size_t k = 0; k < cat_rhos.size(); ++k) {
      std::fprintf(out.f, "# catenoid_limit rho=%s: %s\n", fmt17(cat_rhos[k]).c_str(),
                   fmt17(cat_limits[k]).c_str());
    }
    std::fprintf(out.f, a.with_w0 ? "H,B,w0\n" : "H,B\n");
    for (size_t k = 0; k < hs.size(); ++k) {
      if (a.with_w0) {
        std::fprintf(out.f, "%s,%s,%s\n", fmt17(hs[k]).c_str(), fmt17(B[k]).c_str(),
                     fmt17(w0[k]).c_str());
      } else {
        std::fprintf(out.f, "%s,%s\n", fmt17(hs[k]).c_str(), fmt17(B[k]).c_str());
      }
    }
  }
  return kExitOk;
}

struct SolveArgs {
  double rho = 1.0;
  std::string ellipse;
  double H = 0.0;
  std::string slope = "1";
  std::string radii;
  int stages = 3;
  double step = 1.0;
  int n_r = 64;
  int n_theta = 32;
  double newton_tol = 1e-10;
  double slope_tol = 1e-7;
  double exhaustion_tol = 1e-3;
  bool equidistant = false;
  std::string out = "cmcgraph-out";
};

json report_to_json(const cmcgraph::SolveReport& rep) {
  json j;
  j["schema"] = "cmcgraph/solve-report/1";
  j["t_star"] = rep.t_star;
  j["sup_grad_inner"] = rep.sup_grad_inner;
  j["sup_u"] = rep.sup_u;
  j["residual_norm"] = rep.residual_norm;
  j["newton_iters"] = rep.newton_iters;
  j["n_r"] = rep.n_r;
  j["n_theta"] = rep.n_theta;
  j["r_outer"] = rep.r_outer;
  j["converged"] = rep.converged;
  j["slope_monotone"] = rep.slope_monotone;
  j["stage_radii"] = rep.stage_radii;
  j["stage_t"] = rep.stage_t;
  j["stage_changes"] = rep.stage_changes;
  j["exhaustion_converged"] = rep.exhaustion_converged;
  return j;
}

void write_field_csv(const std::string& path, const cmcgraph::ScalarField& f,
                     const char* value_name) {
  OutputFile out(path);
  std::fprintf(out.f, "# schema: cmcgraph/field/1\n");
  std::fprintf(out.f, "r,theta,%s\n", value_name);
  const cmcgraph::PolarMesh& m = f.mesh;
  for (int i = 0; i <= m.n_r; ++i) {
    for (int j = 0; j < m.n_theta; ++j) {
      std::fprintf(out.f, "%s,%s,%s\n", fmt17(m.radius(i, j)).c_str(),
                   fmt17(m.theta(j)).c_str(), fmt17(f.at(i, j)).c_str());
    }
  }
}

int run_solve(const SolveArgs& a) {
  const cmcgraph::Slope s = parse_slope(a.slope);
  if (s.is_infinite()) {
    throw std::domain_error(
        "solve: the infinite slope is not accepted by the solver (profiles only)");
  }
  cmcgraph::StarDomain domain = cmcgraph::StarDomain::disk(a.rho);
  if (!a.ellipse.empty()) {
    const std::vector<double> ab = parse_list(a.ellipse);
    if (ab.size() != 2) throw std::domain_error("solve: --ellipse expects a,b");
    domain = cmcgraph::StarDomain::ellipse(ab[0], ab[1]);
  }

  cmcgraph::SolverOptions opts;
  opts.newton_tol = a.newton_tol;
  opts.slope_tol = a.slope_tol;
  opts.exhaustion_tol = a.exhaustion_tol;

  std::vector<double> radii;
  if (!a.radii.empty()) {
    radii = parse_list(a.radii);
  } else {
    radii = cmcgraph::default_exhaustion(domain, a.H, s.value(), a.stages, a.step);
  }

  const std::string dir = output_dir_override(a.out);
  std::filesystem::create_directories(dir);

  cmcgraph::SolveReport report;
  if (a.equidistant) {
    const cmcgraph::EquidistantSolveResult res =
        cmcgraph::solve_on_equidistant(domain, a.H, s.value(), radii, a.n_r, a.n_theta, opts);
    for (size_t k = 0; k < res.base_stages.size(); ++k) {
      char name[64];
      std::snprintf(name, sizeof(name), "stage_%02zu.csv", k);
      write_field_csv(dir + "/" + name, res.base_stages[k], "u_tilde");
    }
    write_field_csv(dir + "/eh_field.csv", res.eh_field, "u");
    report = res.report;
  } else {
    const cmcgraph::ExteriorSolveResult res =
        cmcgraph::exterior_solve(domain, a.H, s.value(), radii, a.n_r, a.n_theta, opts);
    for (size_t k = 0; k < res.stages.size(); ++k) {
      char name[64];
      std::snprintf(name, sizeof(name), "stage_%02zu.csv", k);
      write_field_csv(dir + "/" + name, res.stages[k], "u");
    }
    report = res.report;
  }

  {
    OutputFile out(dir + "/report.json");
    std::fprintf(out.f, "%s\n", report_to_json(report).dump(2).c_str());
  }
  std::fprintf(stderr, "report written to %s/report.json\n", dir.c_str());
  if (!report.converged) return kExitNewton;
  if (!report.exhaustion_converged) return kExitNotConverged;
  return kExitOk;
}

struct VerifyArgs {
  bool quick = false;
  bool inject_c_sign_flip = false;
  std::string out;
};

int run_verify(const VerifyArgs& a) {
  cmcgraph::VerifyOptions opts;
  opts.quick = a.quick;
  opts.inject_c_sign_flip = a.inject_c_sign_flip;
  const std::vector<cmcgraph::InvariantResult> results = cmcgraph::run_verification(opts);

  json rows = json::array();
  for (const auto& r : results) {
    std::printf("%-4s %-45s observed=%s threshold=%s margin=%s\n", r.pass ? "PASS" : "FAIL",
                r.name.c_str(), fmt17(r.observed).c_str(), fmt17(r.threshold).c_str(),
                fmt17(r.margin).c_str());
    if (!r.detail.empty()) std::printf("     %s\n", r.detail.c_str());
    json row;
    row["name"] = r.name;
    row["pass"] = r.pass;
    row["observed"] = r.observed;
    row["threshold"] = r.threshold;
    row["margin"] = r.margin;
    if (!r.detail.empty()) row["detail"] = r.detail;
    rows.push_back(row);
  }
  const bool ok = cmcgraph::all_passed(results);
  if (!a.out.empty()) {
    json doc;
    doc["schema"] = "cmcgraph/verify/1";
    doc["all_passed"] = ok;
    doc["invariants"] = rows;
    OutputFile out(a.out);
    std::fprintf(out.f, "%s\n", doc.dump(2).c_str());
  }
  if (!ok) {
    std::printf("verification FAILED\n");
    return kExitVerifyFailed;
  }
  std::printf("verification passed\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "cmcgraph: rotational profiles, height bounds and exterior Dirichlet solves for\n"
      "constant-mean-curvature Killing graphs over exterior domains.\n\n"
      "Exit codes: 0 success; 1 verification failures; 2 invalid parameters or domain\n"
      "errors; 3 Newton non-convergence; 4 t-bracket failure; 5 numerical failure;\n"
      "6 finished without meeting the convergence declaration.\n\n"
      "The environment variable CMCGRAPH_OUT_DIR overrides the solve output directory."};
  app.require_subcommand(1);
  app.set_config("--config")
      ->description("key=value file with one [subcommand] section per command");

  ProfileArgs pa;
  CLI::App* profile = app.add_subcommand("profile", "Tabulate a rotational profile f, f'");
  profile->add_option("--rho", pa.rho, "inner radius (> 0)");
  profile->add_option("--s", pa.slope, "boundary slope (nonnegative real or 'inf')");
  profile->add_option("--H", pa.H, "mean curvature in (-1, 1)");
  profile->add_option("--rmax", pa.rmax, "last tabulated radius");
  profile->add_option("--rows", pa.rows, "number of table rows");
  profile->add_option("--tol", pa.tol, "relative quadrature tolerance");
  profile->add_option("--out", pa.out, "output file ('-' or empty for stdout)");

  BoundsArgs ba;
  CLI::App* bounds = app.add_subcommand("bounds", "Tabulate the height bound B(H) and friends");
  bounds->add_option("--H", ba.h_list, "comma-separated H grid in [0, 1)");
  bounds->add_flag("--w0", ba.with_w0, "include the equidistant height w(0; H)");
  bounds->add_option("--catenoid-rho", ba.catenoid_rho,
                     "comma-separated waist radii: emit catenoid height limits");
  bounds->add_option("--tol", ba.tol, "relative quadrature tolerance");
  bounds->add_option("--format", ba.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  bounds->add_option("--out", ba.out, "output file ('-' or empty for stdout)");

  SolveArgs sa;
  CLI::App* solve = app.add_subcommand("solve", "Exterior continuity-scheme solve");
  solve->add_option("--rho", sa.rho, "disk domain: inner radius");
  solve->add_option("--ellipse", sa.ellipse, "elliptical inner boundary 'a,b' (overrides --rho)");
  solve->add_option("--H", sa.H, "mean curvature in [0, 1)");
  solve->add_option("--s", sa.slope, "prescribed boundary slope (finite)");
  solve->add_option("--radii", sa.radii, "comma-separated exhaustion radii");
  solve->add_option("--stages", sa.stages, "number of stages when --radii is absent");
  solve->add_option("--step", sa.step, "radius step when --radii is absent");
  solve->add_option("--nr", sa.n_r, "radial intervals");
  solve->add_option("--ntheta", sa.n_theta, "angular nodes");
  solve->add_option("--newton-tol", sa.newton_tol, "Newton residual tolerance (max-norm)");
  solve->add_option("--slope-tol", sa.slope_tol, "boundary-slope matching tolerance");
  solve->add_option("--exhaustion-tol", sa.exhaustion_tol,
                    "stage-change threshold declaring convergence");
  solve->add_flag("--equidistant", sa.equidistant,
                  "treat the domain as a subset of the equidistant surface E_H");
  solve->add_option("--out", sa.out, "output directory");

  VerifyArgs va;
  CLI::App* verify = app.add_subcommand("verify", "Run the cross-module invariant suite");
  verify->add_flag("--quick", va.quick, "smaller meshes in the solver checks");
  verify->add_flag("--inject-c-sign-flip", va.inject_c_sign_flip)->group("");  // test fixture
  verify->add_option("--out", va.out, "also write a JSON report to this path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitBadParams;
  }

  try {
    if (profile->parsed()) return run_profile(pa);
    if (bounds->parsed()) return run_bounds(ba);
    if (solve->parsed()) return run_solve(sa);
    if (verify->parsed()) return run_verify(va);
  } catch (const cmcgraph::BracketError& e) {
    std::fprintf(stderr, "error: %s (endpoint slopes %s, %s)\n", e.what(),
                 fmt17(e.slope_low).c_str(), fmt17(e.slope_high).c_str());
    return kExitBracket;
  } catch (const cmcgraph::NewtonError& e) {
    std::fprintf(stderr, "error: %s (iterations %d, residual %s)\n", e.what(), e.iterations,
                 fmt17(e.final_residual).c_str());
    return kExitNewton;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitBadParams;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitBadParams;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerics;
  }
  return kExitOk;
}
