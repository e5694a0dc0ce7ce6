// Acceptance suite: one check per criterion, each printed as a PASS/FAIL line
// with its measured quantities and wall time. Exit code is the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "cmcgraph/equidistant.hpp"
#include "cmcgraph/profiles.hpp"
#include "cmcgraph/solver.hpp"
#include "oracles.hpp"

using namespace cmcgraph;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kPi4 = std::numbers::pi / 4.0;
constexpr double kPi2 = std::numbers::pi / 2.0;

struct Outcome {
  bool pass = true;
  std::ostringstream note;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (note.tellp() > 0) note << "; ";
      note << "FAILED: " << what;
    }
  }
};

struct SharedState {
  std::vector<ScalarField> c5_fields;
  std::vector<double> c5_t;
};

SharedState g_state;

double eh_fn(double R, double th, int k) {
  switch (k) {
    case 0:
      return 0.25 * R * R;
    case 1:
      return std::sin(R) * std::cos(th);
    default:
      return 0.3 * R * (2.0 + std::cos(2.0 * th));
  }
}

void criterion1(Outcome& out) {
  const double B0 = height_bound_B(0.0, 1e-10);
  const double brute = oracles::height_bound_B(0.0);
  out.note << "B(0)=" << B0 << " vs brute " << brute;
  out.require(B0 < 0.78539816, "B(0) < pi/4");
  out.require(std::fabs(B0 - brute) <= 1e-8, "agreement with the midpoint oracle to 1e-8");
}

void criterion2(Outcome& out) {
  double prev = -1.0;
  bool increasing = true;
  for (int k = 0; k <= 9; ++k) {
    const double B = height_bound_B(0.1 * k);
    increasing = increasing && B > prev;
    prev = B;
  }
  const double far = height_bound_B(0.999);
  out.note << "B(0.9)=" << prev << " B(0.999)=" << far;
  out.require(increasing, "B strictly increasing on {0,...,0.9}");
  out.require(far > prev + 1.0, "B(0.999) > B(0.9) + 1");
}

void criterion3(Outcome& out) {
  struct Combo {
    double rho;
    bool inf;
    double s;
    double H;
  };
  const Combo combos[12] = {
      {0.5, false, 0.0, 0.3}, {0.5, false, 1.0, 0.0}, {0.5, false, 2.5, 0.6},
      {0.5, true, 0.0, 0.8},  {1.0, false, 0.0, 0.3}, {1.0, false, 1.0, 0.0},
      {1.0, false, 2.5, 0.6}, {1.0, true, 0.0, 0.8},  {2.0, false, 0.0, 0.3},
      {2.0, false, 1.0, 0.0}, {2.0, false, 2.5, 0.6}, {2.0, true, 0.0, 0.8},
  };
  const double h = 1e-5;
  double worst = 0.0;
  for (const Combo& c : combos) {
    const CmcParams p(c.rho, c.inf ? Slope::infinite() : Slope::finite(c.s), c.H);
    for (int k = 0; k < 100; ++k) {
      const double t = c.rho + 0.02 + (10.0 - 0.02) * k / 99.0;
      const double gp =
          (slope_g(t + h, p) - slope_g(t - h, p)) / (2.0 * h);
      const double resid =
          gp + slope_g(t, p) * (1.0 / std::tanh(t) + std::tanh(t)) - 2.0 * c.H;
      worst = std::max(worst, std::fabs(resid));
    }
  }
  out.note << "worst |residual|=" << worst;
  out.require(worst < 1e-8, "ODE residual below 1e-8 on all 12 combos");
}

void criterion4(Outcome& out) {
  double worst = 0.0;
  for (double rho : {0.5, 1.0, 2.0}) {
    for (double s : {0.0, 1.0, 3.0}) {
      for (double H : {0.0, 0.4, 0.8}) {
        worst = std::max(
            worst, std::fabs(profile_derivative(rho, CmcParams(rho, Slope::finite(s), H)) - s));
      }
    }
  }
  out.note << "worst |f'(rho)-s|=" << worst;
  out.require(worst <= 1e-10, "boundary slope exact to 1e-10 on the 3x3x3 grid");
}

void criterion5(Outcome& out) {
  SolverOptions opts;
  opts.newton_tol = 1e-9;
  opts.slope_tol = 1e-9;
  const StarDomain disk = StarDomain::disk(1.0);
  const RadialProfile oracle(CmcParams(1.0, Slope::finite(1.0), 0.0));
  const std::pair<int, int> meshes[3] = {{64, 32}, {128, 64}, {256, 128}};
  std::vector<double> errs;
  for (const auto& [nr, nth] : meshes) {
    const ExteriorSolveResult res = exterior_solve(disk, 0.0, 1.0, {6.0, 9.0}, nr, nth, opts);
    double err = 0.0;
    const ScalarField& u = res.stages.back();
    for (int i = 0; i <= nr; ++i) {
      for (int j = 0; j < nth; ++j) {
        err = std::max(err, std::fabs(u.at(i, j) - oracle.value(u.mesh.radius(i, j))));
      }
    }
    errs.push_back(err);
    g_state.c5_fields.push_back(u);
    g_state.c5_t.push_back(res.report.t_star);
  }
  out.note << "errors " << errs[0] << " / " << errs[1] << " / " << errs[2];
  for (size_t k = 1; k < errs.size(); ++k) {
    const double order = std::log2(errs[k - 1] / errs[k]);
    out.note << (k == 1 ? ", orders " : ", ") << order;
    out.require(order >= 1.5 && order <= 2.5, "observed order within 2.0 +/- 0.5");
  }
  out.require(errs.back() < 1e-4, "finest-mesh max error below 1e-4");
}

void criterion6(Outcome& out) {
  SolverOptions opts;
  opts.newton_tol = 1e-9;
  for (int kind = 0; kind < 2; ++kind) {
    const StarDomain dom = kind == 0 ? StarDomain::disk(1.0) : StarDomain::ellipse(1.3, 0.8);
    for (double H : {0.0, 0.3, 0.6}) {
      const ExteriorSolveResult res = exterior_solve(dom, H, 1.0, {4.0, 7.0}, 64, 32, opts);
      const double bound = (H == 0.0) ? kPi4 : height_bound_B(H);
      out.note << (kind == 0 ? " disk" : " ellipse") << " H=" << H
               << " sup=" << res.report.sup_u;
      out.require(res.report.sup_u < bound + 1e-3,
                  "sup u within the rotational height bound");
    }
  }
}

void criterion7(Outcome& out) {
  if (g_state.c5_fields.empty()) {
    out.require(false, "criterion-5 runs unavailable");
    return;
  }
  for (size_t k = 0; k < g_state.c5_fields.size(); ++k) {
    const BarrierCheckReport rep =
        barrier_check(g_state.c5_fields[k], g_state.c5_t[k], 1.0, 0.0);
    out.note << (k ? ", " : "") << "worst=" << rep.worst() << " (5h^2=" << 5.0 * rep.h * rep.h
             << ")";
    out.require(rep.worst() <= 5.0 * rep.h * rep.h, "sandwich violation below 5 h^2");
  }
}

void criterion8(Outcome& out) {
  if (g_state.c5_fields.empty()) {
    out.require(false, "criterion-5 runs unavailable");
    return;
  }
  const ScalarField& u = g_state.c5_fields.back();
  double prev = 1e300;
  double last = 0.0;
  for (double radius : {3.0, 5.0, 8.0}) {
    const double g = max_gradient_on_circle(u, radius);
    out.note << "g(" << radius << ")=" << g << " ";
    out.require(g < prev, "max |grad u| strictly decreasing over the circles");
    prev = g;
    last = g;
  }
  out.require(last < 0.05, "max |grad u| below 0.05 at radius 8");
}

void criterion9(Outcome& out) {
  const EquidistantChart chart(0.5);
  for (int k = 0; k < 3; ++k) {
    const EhFunction uf = [&chart, k](const HalfSpacePoint& x) {
      const GeodesicPolarPoint bp = to_geodesic_polar(project_to_base(x));
      return eh_fn(chart.eh_radius(bp.r), bp.theta, k);
    };
    const BaseFunction ut = transform_to_base(uf, chart);
    double errs[3];
    for (int lev = 0; lev < 3; ++lev) {
      const double h = 1e-2 / (1 << lev);
      double worst = 0.0;
      for (int kr = 1; kr <= 4; ++kr) {
        for (int kt = 0; kt < 4; ++kt) {
          const double R = 0.6 * kr;
          const double th = 2.0 * std::numbers::pi * kt / 4.0 + 0.2;
          const HalfSpacePoint x = chart.eh_point(R, th);
          const GeodesicPolarPoint bp = to_geodesic_polar(project_to_base(x));
          const double hh = 1e-6;
          const double uR = (eh_fn(R + hh, th, k) - eh_fn(R - hh, th, k)) / (2.0 * hh);
          const double uT = (eh_fn(R, th + hh, k) - eh_fn(R, th - hh, k)) / (2.0 * hh);
          const double rt = bp.r;
          const double ew = std::exp(chart.w(rt));
          const ModelVector q_pos = {x.x / ew, x.y / ew, x.z / ew};
          ModelVector tm = ew * (chart.w_derivative(rt) * q_pos + hemisphere_radial_unit(bp));
          ModelVector ta = ew * hemisphere_angular_unit(bp);
          tm = (1.0 / model_norm(x, tm)) * tm;
          ta = (1.0 / model_norm(x, ta)) * ta;
          const ModelVector grad_u = uR * tm + (uT / std::sinh(rt)) * ta;
          const ModelVector analytic = gradient_transform(grad_u, x, chart);
          const double u0 = ut(bp);
          const double ur = (ut(GeodesicPolarPoint(bp.r + h, bp.theta)) - u0) / h;
          const double uthd = (ut(GeodesicPolarPoint(bp.r, bp.theta + h)) - u0) / h;
          const ModelVector fd = ur * hemisphere_radial_unit(bp) +
                                 (uthd / std::sinh(bp.r)) * hemisphere_angular_unit(bp);
          worst = std::max(worst, model_norm(to_half_space(bp), analytic - fd));
        }
      }
      errs[lev] = worst;
    }
    const double o1 = std::log2(errs[0] / errs[1]);
    const double o2 = std::log2(errs[1] / errs[2]);
    out.note << "fn" << k << " orders " << o1 << "," << o2 << " ";
    out.require(o1 > 0.7 && o1 < 1.6 && o2 > 0.7 && o2 < 1.6,
                "first-order convergence of the forward-difference error");
  }
  // graph-set identity on sampled grids
  double worst = 0.0;
  for (int k = 0; k < 3; ++k) {
    const EhFunction uf = [&chart, k](const HalfSpacePoint& x) {
      const GeodesicPolarPoint bp = to_geodesic_polar(project_to_base(x));
      return eh_fn(chart.eh_radius(bp.r), bp.theta, k);
    };
    const BaseFunction ut = transform_to_base(uf, chart);
    for (int kr = 1; kr <= 6; ++kr) {
      for (int kt = 0; kt < 6; ++kt) {
        const HalfSpacePoint x = chart.eh_point(0.5 * kr, std::numbers::pi * kt / 3.0);
        const HalfSpacePoint a = killing_flow(x, uf(x));
        const GeodesicPolarPoint bp = to_geodesic_polar(project_to_base(x));
        const HalfSpacePoint b = killing_flow(to_half_space(bp), ut(bp));
        worst = std::max(worst, hyperbolic_distance(a, b));
      }
    }
  }
  out.note << "graph-set distance " << worst;
  out.require(worst <= 1e-10, "graph-set identity to 1e-10");
}

void criterion10(Outcome& out) {
  for (double rho : {0.5, 1.0, 2.0}) {
    const double lim = catenoid_h2r_limit(rho, 1e-10);
    out.note << "lim(" << rho << ")=" << lim << " ";
    out.require(lim < kPi2, "catenoid height limit below pi/2");
    out.require(lim + 1e-9 < kPi2, "margin beyond the certified tail");
  }
}

void criterion11(Outcome& out) {
  SolverOptions opts;
  opts.newton_tol = 1e-9;
  const StarDomain eh_disk = StarDomain::disk(1.0);

  const EquidistantSolveResult zero =
      solve_on_equidistant(eh_disk, 0.5, 0.0, {4.0}, 32, 16, opts);
  out.note << "s=0 max|u|=" << zero.eh_field.max_abs();
  out.require(zero.eh_field.max_abs() <= opts.newton_tol,
              "zero slope returns the zero field to newton_tol");

  const double H = 0.5, s = 1.0;
  const EquidistantSolveResult res =
      solve_on_equidistant(eh_disk, H, s, {4.0, 7.0}, 64, 32, opts);
  const EquidistantChart& chart = *res.chart;
  const double rho_t = chart.base_radius(1.0);
  const double s_tilde = s * chart.meridian_speed(rho_t) + chart.w_derivative(rho_t);
  const RadialProfile vprof(CmcParams(rho_t, Slope::finite(s_tilde), H));
  const double w_b = chart.w(rho_t);
  double err = 0.0;
  for (int i = 0; i <= res.eh_field.mesh.n_r; ++i) {
    for (int j = 0; j < res.eh_field.mesh.n_theta; ++j) {
      const double rt = res.eh_field.mesh.radius(i, j);
      err = std::max(err,
                     std::fabs(res.eh_field.at(i, j) - (w_b - chart.w(rt) + vprof.value(rt))));
    }
  }
  out.note << ", s=1 oracle error=" << err;
  out.require(err < 2.5e-4, "base-side radial oracle matched within C h^2");
}

struct Criterion {
  int id;
  std::string label;
  double budget_seconds;  // 0: no stated budget
  std::function<void(Outcome&)> body;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "height bound B(0) below pi/4, brute-force agreement", 1.0, criterion1},
      {2, "monotonicity and divergence of B", 5.0, criterion2},
      {3, "ODE residual of the slope function", 5.0, criterion3},
      {4, "boundary slope of the profiles", 0.0, criterion4},
      {5, "radial oracle equivalence of exterior_solve", 120.0, criterion5},
      {6, "height bounds of solutions", 0.0, criterion6},
      {7, "barrier sandwich on the criterion-5 runs", 0.0, criterion7},
      {8, "gradient decay on circles", 0.0, criterion8},
      {9, "graph-transform consistency", 0.0, criterion9},
      {10, "catenoid height bound", 0.0, criterion10},
      {11, "equidistant-surface pipeline", 120.0, criterion11},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    Outcome out;
    const auto start = Clock::now();
    try {
      c.body(out);
    } catch (const std::exception& e) {
      out.require(false, std::string("exception: ") + e.what());
    }
    const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
    if (c.budget_seconds > 0.0 && elapsed >= c.budget_seconds) {
      out.require(false, "runtime budget exceeded");
    }
    std::printf("[%s] criterion %2d: %s  (%.2f s)  %s\n", out.pass ? "PASS" : "FAIL", c.id,
                c.label.c_str(), elapsed, out.note.str().c_str());
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  if (failures == 0) {
    std::printf("all %zu acceptance criteria passed\n", criteria.size());
  } else {
    std::printf("%d acceptance criteria FAILED\n", failures);
  }
  return failures;
}
