#include "cmcgraph/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "cmcgraph/equidistant.hpp"
#include "cmcgraph/geometry.hpp"
#include "cmcgraph/profiles.hpp"
#include "cmcgraph/solver.hpp"

namespace cmcgraph {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

InvariantResult bounded_above(const std::string& name, double observed, double threshold,
                              const std::string& detail = {}) {
  InvariantResult r;
  r.name = name;
  r.observed = observed;
  r.threshold = threshold;
  r.margin = threshold - observed;
  r.pass = observed <= threshold;
  r.detail = detail;
  return r;
}

InvariantResult bounded_below(const std::string& name, double observed, double threshold,
                              const std::string& detail = {}) {
  InvariantResult r;
  r.name = name;
  r.observed = observed;
  r.threshold = threshold;
  r.margin = observed - threshold;
  r.pass = observed >= threshold;
  r.detail = detail;
  return r;
}

InvariantResult check_flow_isometry() {
  std::mt19937 rng(20240511);
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  std::uniform_real_distribution<double> height(0.2, 3.0);
  std::uniform_real_distribution<double> time(-3.0, 3.0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const HalfSpacePoint p(coord(rng), coord(rng), height(rng));
    const HalfSpacePoint q(coord(rng), coord(rng), height(rng));
    const double t = time(rng);
    const double d0 = hyperbolic_distance(p, q);
    const double d1 = hyperbolic_distance(killing_flow(p, t), killing_flow(q, t));
    worst = std::max(worst, std::fabs(d1 - d0));
  }
  return bounded_above("geometry/killing-flow-isometry", worst, 1e-10);
}

InvariantResult check_polar_roundtrip() {
  double worst = 0.0;
  for (int ir = 0; ir <= 40; ++ir) {
    const double r = 10.0 * ir / 40.0;
    for (int it = 0; it < 8; ++it) {
      const GeodesicPolarPoint p(r, kTwoPi * it / 8.0);
      const GeodesicPolarPoint back = to_geodesic_polar(to_half_space(p));
      worst = std::max(worst, std::fabs(back.r - r));
    }
  }
  return bounded_above("geometry/polar-roundtrip", worst, 1e-10);
}

InvariantResult check_killing_norm_model() {
  double worst = 0.0;
  for (int ir = 0; ir <= 30; ++ir) {
    const double r = 6.0 * ir / 30.0;
    for (int it = 0; it < 5; ++it) {
      const GeodesicPolarPoint gp(r, kTwoPi * it / 5.0 + 0.1);
      const HalfSpacePoint p = to_half_space(gp);
      const double model = model_norm(p, killing_vector(p));
      worst = std::max(worst, std::fabs(model - killing_norm(r)));
    }
  }
  return bounded_above("geometry/killing-norm-model", worst, 1e-10);
}

struct OdeCombo {
  double rho;
  bool s_inf;
  double s;
  double H;
};

InvariantResult check_ode_residual(bool inject) {
  const OdeCombo combos[12] = {
      {0.5, false, 0.0, 0.3}, {0.5, false, 1.0, 0.0},  {0.5, false, 2.5, 0.6},
      {0.5, true, 0.0, 0.8},  {1.0, false, 0.0, 0.3},  {1.0, false, 1.0, 0.0},
      {1.0, false, 2.5, 0.6}, {1.0, true, 0.0, 0.8},   {2.0, false, 0.0, 0.3},
      {2.0, false, 1.0, 0.0}, {2.0, false, 2.5, 0.6},  {2.0, true, 0.0, 0.8},
  };
  const double h = 1e-5;
  double worst = 0.0;
  for (const OdeCombo& c : combos) {
    const Slope s = c.s_inf ? Slope::infinite() : Slope::finite(c.s);
    const CmcParams params(c.rho, s, c.H);
    double corrupted_C = 0.0;
    if (inject) {
      // test fixture: sign error on the slope term of C
      const double cs = c.s_inf ? 1.0 : std::cosh(c.rho) * c.s /
                                            std::hypot(1.0, std::cosh(c.rho) * c.s);
      corrupted_C = -c.H * std::cosh(2.0 * c.rho) - cs * std::sinh(2.0 * c.rho);
    }
    const auto g = [&](double t) {
      if (inject) {
        return (c.H * std::cosh(2.0 * t) + corrupted_C) / std::sinh(2.0 * t);
      }
      return slope_g(t, params);
    };
    for (int k = 0; k < 100; ++k) {
      const double t = c.rho + 0.02 + (10.0 - 0.02) * k / 99.0;
      const double gp = (g(t + h) - g(t - h)) / (2.0 * h);
      const double resid = gp + g(t) * (1.0 / std::tanh(t) + std::tanh(t)) - 2.0 * c.H;
      worst = std::max(worst, std::fabs(resid));
    }
    // initial condition of the IVP: C is the ODE's free constant, so only the
    // boundary value g(rho) pins it
    const double k_boundary = c.s_inf ? 1.0 : std::cosh(c.rho) * c.s /
                                                  std::hypot(1.0, std::cosh(c.rho) * c.s);
    worst = std::max(worst, std::fabs(g(c.rho) - k_boundary));
  }
  return bounded_above("profiles/ode-residual", worst, 1e-8);
}

InvariantResult check_boundary_slope() {
  const double rhos[3] = {0.5, 1.0, 2.0};
  const double slopes[3] = {0.0, 1.0, 3.0};
  const double hs[3] = {0.0, 0.4, 0.8};
  double worst = 0.0;
  for (double rho : rhos) {
    for (double s : slopes) {
      for (double H : hs) {
        const CmcParams p(rho, Slope::finite(s), H);
        worst = std::max(worst, std::fabs(profile_derivative(rho, p) - s));
      }
    }
  }
  return bounded_above("profiles/boundary-slope", worst, 1e-10);
}

InvariantResult check_profile_monotone() {
  double worst_drop = 0.0;
  const double rhos[2] = {0.5, 1.5};
  const double hs[2] = {0.0, 0.5};
  for (double rho : rhos) {
    for (double H : hs) {
      for (int si = 0; si < 3; ++si) {
        const Slope s = si == 2 ? Slope::infinite() : Slope::finite(si == 0 ? 0.0 : 1.0);
        const RadialProfile prof(CmcParams(rho, s, H));
        double prev = 0.0;
        for (int k = 1; k <= 40; ++k) {
          const double r = rho + 8.0 * k / 40.0;
          const double v = prof.value(r);
          worst_drop = std::max(worst_drop, prev - v);
          prev = v;
        }
      }
    }
  }
  return bounded_above("profiles/monotone-in-r", worst_drop, 1e-12);
}

InvariantResult check_x_rho_monotone() {
  // x_rho(t) = g_{rho,inf,H}(rho + t); d x_rho / d rho > 0
  double worst = 1e300;
  const double drho = 1e-4;
  for (double H : {0.0, 0.5, 0.9}) {
    for (double rho : {0.5, 1.0, 2.0}) {
      for (int k = 0; k < 10; ++k) {
        const double t = 0.05 + k * 0.6;
        const CmcParams a(rho, Slope::infinite(), H);
        const CmcParams b(rho + drho, Slope::infinite(), H);
        const double deriv = (slope_g(rho + drho + t, b) - slope_g(rho + t, a)) / drho;
        worst = std::min(worst, deriv);
      }
    }
  }
  return bounded_below("profiles/x-rho-monotone", worst, 0.0);
}

InvariantResult check_bound_chain() {
  double worst = -1e300;  // max of asymptotic - B
  for (double rho : {0.5, 1.0, 2.0, 5.0}) {
    for (double H : {0.0, 0.3, 0.6}) {
      const double a = asymptotic_height(CmcParams(rho, Slope::infinite(), H));
      const double B = height_bound_B(H);
      worst = std::max(worst, a - B);
    }
  }
  return bounded_above("profiles/bound-chain", worst, kDefaultQuadTol);
}

InvariantResult check_integrand_comparison() {
  // H (coth 2t - cosech 2t) = H tanh t <= H + (1-H) e^{-2t}
  double worst = -1e300;
  for (double H : {0.1, 0.5, 0.9}) {
    for (int k = 1; k <= 200; ++k) {
      const double t = 0.05 * k;
      const double lhs = H * std::tanh(t);
      const double rhs = H + (1.0 - H) * std::exp(-2.0 * t);
      worst = std::max(worst, lhs - rhs);
    }
  }
  return bounded_above("profiles/equidistant-integrand-comparison", worst, 0.0);
}

double eh_test_function(double R, double theta, int which) {
  switch (which) {
    case 0:
      return 0.25 * R * R;
    case 1:
      return std::sin(R) * std::cos(theta);
    default:
      return 0.3 * R * (2.0 + std::cos(2.0 * theta));
  }
}

InvariantResult check_graph_set_identity() {
  const EquidistantChart chart(0.5);
  double worst = 0.0;
  for (int which = 0; which < 3; ++which) {
    const EhFunction u = [&chart, which](const HalfSpacePoint& x) {
      const GeodesicPolarPoint bp = to_geodesic_polar(project_to_base(x));
      return eh_test_function(chart.eh_radius(bp.r), bp.theta, which);
    };
    const BaseFunction ut = transform_to_base(u, chart);
    for (int kr = 1; kr <= 6; ++kr) {
      for (int kt = 0; kt < 6; ++kt) {
        const double R = 0.5 * kr;
        const double theta = kTwoPi * kt / 6.0;
        const HalfSpacePoint x = chart.eh_point(R, theta);
        const HalfSpacePoint graph_eh = killing_flow(x, u(x));
        const GeodesicPolarPoint bp = to_geodesic_polar(project_to_base(x));
        const HalfSpacePoint graph_base = killing_flow(to_half_space(bp), ut(bp));
        worst = std::max(worst, hyperbolic_distance(graph_eh, graph_base));
      }
    }
  }
  return bounded_above("equidistant/graph-set-identity", worst, 1e-10);
}

InvariantResult check_barrier_decomposition() {
  double worst = -1e300;  // positive => outside [0, B(H)]
  for (double H : {0.2, 0.5, 0.8}) {
    auto chart = std::make_shared<const EquidistantChart>(H);
    const double B = height_bound_B(H);
    for (double Rb : {0.5, 1.0, 2.0}) {
      const EquidistantBarrier f(Rb, chart);
      for (int k = 0; k <= 20; ++k) {
        const double R = Rb + 0.4 * k;
        const double v1 = f.lift_component(R);
        const double v2 = f.shift_component(R);
        worst = std::max({worst, -v1, -v2, v1 - B, v2 - B});
      }
    }
  }
  return bounded_above("equidistant/barrier-decomposition", worst, 1e-9);
}

// Analytic gradient of a test function on E_H, in model components.
ModelVector eh_gradient(const EquidistantChart& chart, double R, double theta, int which) {
  const double h = 1e-6;
  const double uR = (eh_test_function(R + h, theta, which) -
                     eh_test_function(R - h, theta, which)) / (2.0 * h);
  const double uT = (eh_test_function(R, theta + h, which) -
                     eh_test_function(R, theta - h, which)) / (2.0 * h);
  const double rt = chart.base_radius(R);
  const GeodesicPolarPoint bp(rt, theta);
  const HalfSpacePoint x = killing_flow(to_half_space(bp), chart.w(rt));
  const double ew = std::exp(chart.w(rt));
  const ModelVector q_pos = {x.x / ew, x.y / ew, x.z / ew};
  ModelVector t_mer = ew * (chart.w_derivative(rt) * q_pos + hemisphere_radial_unit(bp));
  ModelVector t_ang = ew * hemisphere_angular_unit(bp);
  const double mer_norm = model_norm(x, t_mer);
  const double ang_norm = model_norm(x, t_ang);  // = sinh(rt)
  t_mer = (1.0 / mer_norm) * t_mer;
  t_ang = (1.0 / ang_norm) * t_ang;
  const double psi = std::sinh(rt);  // circle speed on E_H in model terms
  return uR * t_mer + (uT / psi) * t_ang;
}

InvariantResult check_gradient_transform_fd() {
  const EquidistantChart chart(0.5);
  double worst = 0.0;
  const double h = 1e-4;
  for (int which = 0; which < 3; ++which) {
    const EhFunction u = [&chart, which](const HalfSpacePoint& x) {
      const GeodesicPolarPoint bp = to_geodesic_polar(project_to_base(x));
      return eh_test_function(chart.eh_radius(bp.r), bp.theta, which);
    };
    const BaseFunction ut = transform_to_base(u, chart);
    for (int kr = 1; kr <= 4; ++kr) {
      for (int kt = 0; kt < 4; ++kt) {
        const double R = 0.6 * kr;
        const double theta = kTwoPi * kt / 4.0 + 0.2;
        const HalfSpacePoint x = chart.eh_point(R, theta);
        const ModelVector grad_u = eh_gradient(chart, R, theta, which);
        const ModelVector analytic = gradient_transform(grad_u, x, chart);
        const GeodesicPolarPoint bp = to_geodesic_polar(project_to_base(x));
        const double ur = (ut(GeodesicPolarPoint(bp.r + h, bp.theta)) -
                           ut(GeodesicPolarPoint(bp.r - h, bp.theta))) / (2.0 * h);
        const double uth = (ut(GeodesicPolarPoint(bp.r, bp.theta + h)) -
                            ut(GeodesicPolarPoint(bp.r, bp.theta - h))) / (2.0 * h);
        const ModelVector fd = ur * hemisphere_radial_unit(bp) +
                               (uth / std::sinh(bp.r)) * hemisphere_angular_unit(bp);
        const ModelVector diff = analytic - fd;
        worst = std::max(worst, model_norm(to_half_space(bp), diff));
      }
    }
  }
  return bounded_above("equidistant/gradient-transform-fd", worst, 1e-6);
}

std::vector<double> fourier_row(std::mt19937& rng, int n, double scale) {
  std::uniform_real_distribution<double> amp(-scale, scale);
  const double a0 = amp(rng), a1 = amp(rng), b1 = amp(rng), a2 = amp(rng);
  std::vector<double> row(n);
  for (int j = 0; j < n; ++j) {
    const double th = kTwoPi * j / n;
    row[j] = a0 + a1 * std::cos(th) + b1 * std::sin(th) + a2 * std::cos(2.0 * th);
  }
  return row;
}

InvariantResult check_comparison_principle(bool quick) {
  const int n_r = quick ? 16 : 24;
  const int n_theta = quick ? 12 : 16;
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> bump(0.0, 0.15);
  const StarDomain dom = StarDomain::disk(1.0);
  const PolarMesh mesh = PolarMesh::build(dom, 4.0, n_r, n_theta);
  double worst = -1e300;  // max of u1 - u2
  for (double H : {0.0, 0.3}) {
    for (int trial = 0; trial < 3; ++trial) {
      std::vector<double> inner1 = fourier_row(rng, n_theta, 0.15);
      std::vector<double> outer1 = fourier_row(rng, n_theta, 0.15);
      std::vector<double> inner2(inner1), outer2(outer1);
      const double c0 = bump(rng), c1 = bump(rng);
      for (int j = 0; j < n_theta; ++j) {
        const double lift = c0 + c1 * 0.5 * (1.0 + std::cos(kTwoPi * j / n_theta));
        inner2[j] += lift;
        outer2[j] += lift * 0.7;
      }
      const ScalarField u1 = solve_dirichlet_data(mesh, inner1, outer1, H);
      const ScalarField u2 = solve_dirichlet_data(mesh, inner2, outer2, H);
      for (size_t n = 0; n < u1.values.size(); ++n) {
        worst = std::max(worst, u1.values[n] - u2.values[n]);
      }
    }
  }
  return bounded_above("solver/comparison-principle", worst, 1e-8);
}

InvariantResult check_radial_exactness() {
  const StarDomain dom = StarDomain::disk(1.0);
  const ScalarField u = solve_dirichlet(dom, 5.0, 0.3, 0.3, 32, 16);
  double worst = 0.0;
  for (int i = 0; i <= u.mesh.n_r; ++i) {
    double lo = u.at(i, 0), hi = u.at(i, 0);
    for (int j = 1; j < u.mesh.n_theta; ++j) {
      lo = std::min(lo, u.at(i, j));
      hi = std::max(hi, u.at(i, j));
    }
    worst = std::max(worst, hi - lo);
  }
  return bounded_above("solver/radial-exactness", worst, 1e-9);
}

InvariantResult check_order2_convergence(bool quick) {
  const StarDomain dom = StarDomain::disk(1.0);
  const double R = 4.0;
  const RadialProfile oracle(CmcParams(1.0, Slope::finite(1.0), 0.0));
  const double t = oracle.value(R);
  std::vector<int> sizes = quick ? std::vector<int>{64, 128, 256}
                                 : std::vector<int>{64, 128, 256, 512};
  std::vector<double> errs;
  for (int n_r : sizes) {
    const ScalarField u = solve_dirichlet(dom, R, t, 0.0, n_r, 8);
    double err = 0.0;
    for (int i = 0; i <= n_r; ++i) {
      err = std::max(err, std::fabs(u.at(i, 0) - oracle.value(u.mesh.radius(i, 0))));
    }
    errs.push_back(err);
  }
  double worst_lo = 1e300, worst_hi = -1e300;
  std::ostringstream detail;
  for (size_t k = 1; k < errs.size(); ++k) {
    const double ratio = errs[k - 1] / errs[k];
    worst_lo = std::min(worst_lo, ratio);
    worst_hi = std::max(worst_hi, ratio);
    detail << (k > 1 ? ", " : "") << ratio;
  }
  InvariantResult r;
  r.name = "solver/order-2-convergence";
  r.observed = worst_lo;
  r.threshold = 3.5;
  r.pass = worst_lo >= 3.5 && worst_hi <= 4.5;
  r.margin = std::min(worst_lo - 3.5, 4.5 - worst_hi);
  r.detail = "error ratios per mesh doubling: " + detail.str();
  return r;
}

InvariantResult check_slope_monotone_in_t() {
  const StarDomain dom = StarDomain::disk(1.0);
  const PolarMesh mesh = PolarMesh::build(dom, 5.0, 32, 8);
  const std::vector<double> inner(8, 0.0);
  double prev = -1.0;
  double worst_drop = -1e300;
  for (int k = 0; k <= 8; ++k) {
    const double t = 0.045 * k;
    const ScalarField u = solve_dirichlet_data(mesh, inner, std::vector<double>(8, t), 0.0);
    const double slope = boundary_gradient_sup(u);
    worst_drop = std::max(worst_drop, prev - slope);
    prev = slope;
  }
  return bounded_above("solver/slope-monotone-in-t", worst_drop, 1e-12);
}

InvariantResult check_gradient_decay(bool quick) {
  const StarDomain dom = StarDomain::disk(1.0);
  const int n_r = quick ? 64 : 96;
  const ExteriorSolveResult res = exterior_solve(dom, 0.0, 1.0, {3.0, 5.0, 8.0}, n_r, 8);
  const ScalarField& u = res.stages.back();
  double prev = 1e300;
  double worst_rise = -1e300;
  for (double radius : {2.0, 3.0, 4.0, 6.0}) {
    const double g = max_gradient_on_circle(u, radius);
    worst_rise = std::max(worst_rise, g - prev);
    prev = g;
  }
  return bounded_above("solver/gradient-decay", worst_rise, 0.0);
}

}  // namespace

std::vector<InvariantResult> run_verification(const VerifyOptions& opts) {
  std::vector<InvariantResult> out;
  out.push_back(check_flow_isometry());
  out.push_back(check_polar_roundtrip());
  out.push_back(check_killing_norm_model());
  out.push_back(check_ode_residual(opts.inject_c_sign_flip));
  out.push_back(check_boundary_slope());
  out.push_back(check_profile_monotone());
  out.push_back(check_x_rho_monotone());
  out.push_back(check_bound_chain());
  out.push_back(check_integrand_comparison());
  out.push_back(check_graph_set_identity());
  out.push_back(check_barrier_decomposition());
  out.push_back(check_gradient_transform_fd());
  out.push_back(check_comparison_principle(opts.quick));
  out.push_back(check_radial_exactness());
  out.push_back(check_order2_convergence(opts.quick));
  out.push_back(check_slope_monotone_in_t());
  out.push_back(check_gradient_decay(opts.quick));
  return out;
}

bool all_passed(const std::vector<InvariantResult>& results) {
  for (const auto& r : results) {
    if (!r.pass) return false;
  }
  return true;
}

}  // namespace cmcgraph
