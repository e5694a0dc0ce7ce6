#include "cmcgraph/solver.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <utility>

namespace cmcgraph {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct FluxEval {
  double value;
  double d_uxi;
  double d_utheta;
};

// F^xi = sqrt(g) cosh(r) (g^xx u_xi + g^xt u_th) / W at a radial half node.
FluxEval radial_flux(const MetricCoeffs& mc, double uxi, double uth, bool exact) {
  const double p = mc.inv_xx * uxi + mc.inv_xt * uth;
  const double q = mc.inv_xt * uxi + mc.inv_tt * uth;
  const double ch2 = mc.cosh_r * mc.cosh_r;
  const double W = std::sqrt(1.0 + ch2 * (uxi * p + uth * q));
  const double scale = mc.sqrt_g * mc.cosh_r;
  FluxEval f;
  f.value = scale * p / W;
  if (exact) {
    const double W3 = W * W * W;
    f.d_uxi = scale * (mc.inv_xx / W - ch2 * p * p / W3);
    f.d_utheta = scale * (mc.inv_xt / W - ch2 * p * q / W3);
  } else {
    f.d_uxi = scale * mc.inv_xx / W;
    f.d_utheta = scale * mc.inv_xt / W;
  }
  return f;
}

// F^theta = sqrt(g) cosh(r) (g^xt u_xi + g^tt u_th) / W at an angular half node.
FluxEval angular_flux(const MetricCoeffs& mc, double uxi, double uth, bool exact) {
  const double p = mc.inv_xx * uxi + mc.inv_xt * uth;
  const double q = mc.inv_xt * uxi + mc.inv_tt * uth;
  const double ch2 = mc.cosh_r * mc.cosh_r;
  const double W = std::sqrt(1.0 + ch2 * (uxi * p + uth * q));
  const double scale = mc.sqrt_g * mc.cosh_r;
  FluxEval f;
  f.value = scale * q / W;
  if (exact) {
    const double W3 = W * W * W;
    f.d_uxi = scale * (mc.inv_xt / W - ch2 * q * p / W3);
    f.d_utheta = scale * (mc.inv_tt / W - ch2 * q * q / W3);
  } else {
    f.d_uxi = scale * mc.inv_xt / W;
    f.d_utheta = scale * mc.inv_tt / W;
  }
  return f;
}

// sinh(r) <grad u, grad r> / W at a node, central gradients.
FluxEval node_term(const MetricCoeffs& mc, double uxi, double uth, bool exact) {
  const double p = mc.inv_xx * uxi + mc.inv_xt * uth;
  const double q = mc.inv_xt * uxi + mc.inv_tt * uth;
  const double ch2 = mc.cosh_r * mc.cosh_r;
  const double W = std::sqrt(1.0 + ch2 * (uxi * p + uth * q));
  const double Rx = mc.inv_xx * mc.r_xi + mc.inv_xt * mc.r_theta;
  const double Rt = mc.inv_xt * mc.r_xi + mc.inv_tt * mc.r_theta;
  const double D = uxi * Rx + uth * Rt;  // = p r_xi + q r_theta
  FluxEval f;
  f.value = mc.sinh_r * D / W;
  if (exact) {
    const double W3 = W * W * W;
    f.d_uxi = mc.sinh_r * (Rx / W - D * ch2 * p / W3);
    f.d_utheta = mc.sinh_r * (Rt / W - D * ch2 * q / W3);
  } else {
    f.d_uxi = mc.sinh_r * Rx / W;
    f.d_utheta = mc.sinh_r * Rt / W;
  }
  return f;
}

using Triplets = std::vector<Eigen::Triplet<double>>;

// Residual of the discrete operator at interior nodes (boundary entries 0);
// with trips != nullptr also the Jacobian w.r.t. interior unknowns
// (exact = false freezes W, the Picard linearization).
void assemble(const PolarMesh& m, const std::vector<double>& u, double H, bool exact,
              std::vector<double>& res, Triplets* trips) {
  const int nr = m.n_r;
  const int nt = m.n_theta;
  res.assign(m.node_count(), 0.0);

  const auto U = [&](int i, int j) { return u[m.index(i, j)]; };
  const auto unknown = [&](int i, int j) -> int {
    if (i <= 0 || i >= nr) return -1;
    return (i - 1) * nt + m.wrap(j);
  };

  std::vector<double> inv_sg(m.node_count());
  for (int i = 0; i <= nr; ++i) {
    for (int j = 0; j < nt; ++j) {
      inv_sg[m.index(i, j)] =
          1.0 / metric_at(m.xi(i), m.rho[j], m.rho_prime[j], m.r_outer, m.grading).sqrt_g;
    }
  }

  const double inv_dxi = 1.0 / m.dxi;
  const double inv_dth = 1.0 / m.dtheta;

  struct StencilPoint {
    int i, j;
    double w_xi, w_th;
  };

  // radial fluxes between levels i and i+1
  for (int i = 0; i < nr; ++i) {
    for (int j = 0; j < nt; ++j) {
      const MetricCoeffs mc =
          metric_at((i + 0.5) * m.dxi, m.rho[j], m.rho_prime[j], m.r_outer, m.grading);
      const double uxi = (U(i + 1, j) - U(i, j)) * inv_dxi;
      const double uth = (U(i, j + 1) - U(i, j - 1) + U(i + 1, j + 1) - U(i + 1, j - 1)) *
                         0.25 * inv_dth;
      const FluxEval f = radial_flux(mc, uxi, uth, exact);
      const double cA = inv_sg[m.index(i, j)] * inv_dxi;
      const double cB = inv_sg[m.index(i + 1, j)] * inv_dxi;
      if (i >= 1) res[m.index(i, j)] += cA * f.value;
      if (i + 1 <= nr - 1) res[m.index(i + 1, j)] -= cB * f.value;
      if (trips) {
        const StencilPoint st[6] = {
            {i, j, -inv_dxi, 0.0},
            {i + 1, j, inv_dxi, 0.0},
            {i, j + 1, 0.0, 0.25 * inv_dth},
            {i, j - 1, 0.0, -0.25 * inv_dth},
            {i + 1, j + 1, 0.0, 0.25 * inv_dth},
            {i + 1, j - 1, 0.0, -0.25 * inv_dth},
        };
        const int rowA = unknown(i, j);
        const int rowB = unknown(i + 1, j);
        for (const auto& sp : st) {
          const int col = unknown(sp.i, sp.j);
          if (col < 0) continue;
          const double dF = f.d_uxi * sp.w_xi + f.d_utheta * sp.w_th;
          if (rowA >= 0) trips->emplace_back(rowA, col, cA * dF);
          if (rowB >= 0) trips->emplace_back(rowB, col, -cB * dF);
        }
      }
    }
  }

  // angular fluxes between angles j and j+1 at interior levels
  for (int i = 1; i <= nr - 1; ++i) {
    for (int j = 0; j < nt; ++j) {
      const MetricCoeffs mc =
          metric_at(m.xi(i), m.rho_half[j], m.rho_prime_half[j], m.r_outer, m.grading);
      const double uth = (U(i, j + 1) - U(i, j)) * inv_dth;
      const double uxi = (U(i + 1, j) - U(i - 1, j) + U(i + 1, j + 1) - U(i - 1, j + 1)) *
                         0.25 * inv_dxi;
      const FluxEval f = angular_flux(mc, uxi, uth, exact);
      const double cA = inv_sg[m.index(i, j)] * inv_dth;
      const double cB = inv_sg[m.index(i, j + 1)] * inv_dth;
      res[m.index(i, j)] += cA * f.value;
      res[m.index(i, j + 1)] -= cB * f.value;
      if (trips) {
        const StencilPoint st[6] = {
            {i, j, 0.0, -inv_dth},
            {i, j + 1, 0.0, inv_dth},
            {i + 1, j, 0.25 * inv_dxi, 0.0},
            {i - 1, j, -0.25 * inv_dxi, 0.0},
            {i + 1, j + 1, 0.25 * inv_dxi, 0.0},
            {i - 1, j + 1, -0.25 * inv_dxi, 0.0},
        };
        const int rowA = unknown(i, j);
        const int rowB = unknown(i, j + 1);
        for (const auto& sp : st) {
          const int col = unknown(sp.i, sp.j);
          if (col < 0) continue;
          const double dF = f.d_uxi * sp.w_xi + f.d_utheta * sp.w_th;
          trips->emplace_back(rowA, col, cA * dF);
          trips->emplace_back(rowB, col, -cB * dF);
        }
      }
    }
  }

  // first-order term and curvature constant
  for (int i = 1; i <= nr - 1; ++i) {
    for (int j = 0; j < nt; ++j) {
      const MetricCoeffs mc = metric_at(m.xi(i), m.rho[j], m.rho_prime[j], m.r_outer, m.grading);
      const double uxi = (U(i + 1, j) - U(i - 1, j)) * 0.5 * inv_dxi;
      const double uth = (U(i, j + 1) - U(i, j - 1)) * 0.5 * inv_dth;
      const FluxEval f = node_term(mc, uxi, uth, exact);
      res[m.index(i, j)] += f.value - 2.0 * H;
      if (trips) {
        const StencilPoint st[4] = {
            {i + 1, j, 0.5 * inv_dxi, 0.0},
            {i - 1, j, -0.5 * inv_dxi, 0.0},
            {i, j + 1, 0.0, 0.5 * inv_dth},
            {i, j - 1, 0.0, -0.5 * inv_dth},
        };
        const int row = unknown(i, j);
        for (const auto& sp : st) {
          const int col = unknown(sp.i, sp.j);
          if (col < 0) continue;
          trips->emplace_back(row, col, f.d_uxi * sp.w_xi + f.d_utheta * sp.w_th);
        }
      }
    }
  }
}

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

// Radial shape interpolating 0 at the inner boundary and 1 at the outer
// circle with the e^{-2(r-rho)} decay of the rotational profiles; a linear
// ramp puts cosh(r) u_r far into the saturated-flux regime on large domains
// and strands Newton outside its basin.
double boundary_blend(const PolarMesh& m, int i, int j) {
  const int jw = m.wrap(j);
  const double r = m.radius(i, jw);
  return std::expm1(-2.0 * (r - m.rho[jw])) / std::expm1(-2.0 * (m.r_outer - m.rho[jw]));
}

double half_sq_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return 0.5 * s;
}

double gradient_norm_impl(const ScalarField& f, int i, int j);

ScalarField newton_solve(const PolarMesh& mesh, const std::vector<double>& inner,
                         const std::vector<double>& outer, double H, const SolverOptions& opts,
                         NewtonStats& stats, const ScalarField* initial) {
  const int nr = mesh.n_r;
  const int nt = mesh.n_theta;
  const int n_unknowns = (nr - 1) * nt;

  ScalarField u(mesh);
  if (initial && static_cast<int>(initial->values.size()) == mesh.node_count()) {
    u.values = initial->values;
  } else {
    for (int i = 0; i <= nr; ++i) {
      for (int j = 0; j < nt; ++j) {
        u.at(i, j) = inner[j] + boundary_blend(mesh, i, j) * (outer[j] - inner[j]);
      }
    }
  }
  for (int j = 0; j < nt; ++j) {
    u.at(0, j) = inner[j];
    u.at(nr, j) = outer[j];
  }

  std::vector<double> res;
  assemble(mesh, u.values, H, true, res, nullptr);
  double rnorm = inf_norm(res);
  double merit = half_sq_norm(res);

  Eigen::SparseMatrix<double> A(n_unknowns, n_unknowns);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  Triplets trips;
  trips.reserve(static_cast<size_t>(12) * n_unknowns);

  std::vector<double> u_try(u.values.size());
  std::vector<double> res_try;

  for (int iter = 0;; ++iter) {
    if (rnorm <= opts.newton_tol) {
      stats.converged = true;
      stats.residual = rnorm;
      return u;
    }
    if (iter >= opts.max_newton_iters) {
      throw NewtonError("Newton iteration did not converge", iter, rnorm);
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      const bool exact = (attempt == 0);
      if (!exact) ++stats.picard_steps;
      trips.clear();
      std::vector<double> res_full;
      assemble(mesh, u.values, H, exact, res_full, &trips);
      A.setFromTriplets(trips.begin(), trips.end());
      lu.compute(A);
      if (lu.info() != Eigen::Success) {
        if (!exact) throw NewtonError("Jacobian and Picard factorizations failed", iter, rnorm);
        continue;
      }
      Eigen::VectorXd rhs(n_unknowns);
      for (int i = 1; i <= nr - 1; ++i) {
        for (int j = 0; j < nt; ++j) {
          rhs[(i - 1) * nt + j] = -res_full[mesh.index(i, j)];
        }
      }
      const Eigen::VectorXd direction = lu.solve(rhs);
      if (lu.info() != Eigen::Success) {
        if (!exact) throw NewtonError("linear solve failed", iter, rnorm);
        continue;
      }

      // Keep each step below the flux-saturation scale: a nodal overshoot of
      // cosh(r) |grad du| >> 1 at large r drives W into the degenerate regime
      // and strands the iteration, so start the backtracking there instead of
      // at the full step.
      double saturation = 0.0;
      {
        ScalarField dfield(mesh);
        for (int i = 1; i <= nr - 1; ++i) {
          for (int j = 0; j < nt; ++j) {
            dfield.at(i, j) = direction[(i - 1) * nt + j];
          }
        }
        for (int i = 1; i <= nr - 1; ++i) {
          for (int j = 0; j < nt; ++j) {
            const double g = gradient_norm_impl(dfield, i, j);
            saturation = std::max(saturation, std::cosh(mesh.radius(i, j)) * g);
          }
        }
      }
      double lambda = std::min(1.0, 2.0 / std::max(1.0, saturation));
      double best_merit = merit;
      double best_rnorm = rnorm;
      const double lambda_min = lambda / 4096.0;
      std::vector<double> best_u;
      std::vector<double> best_res;
      while (lambda >= lambda_min) {
        u_try = u.values;
        for (int i = 1; i <= nr - 1; ++i) {
          for (int j = 0; j < nt; ++j) {
            u_try[mesh.index(i, j)] += lambda * direction[(i - 1) * nt + j];
          }
        }
        assemble(mesh, u_try, H, true, res_try, nullptr);
        const double merit_try = half_sq_norm(res_try);
        const double rnorm_try = inf_norm(res_try);
        if (rnorm_try <= opts.newton_tol ||
            merit_try <= merit * (1.0 - 2.0e-4 * lambda)) {
          accepted = true;
          break;
        }
        if (merit_try < best_merit && rnorm_try < best_rnorm) {
          best_merit = merit_try;
          best_rnorm = rnorm_try;
          best_u = u_try;
          best_res = res_try;
        }
        lambda *= 0.5;
      }
      if (!accepted && !best_u.empty()) {
        u_try.swap(best_u);
        res_try.swap(best_res);
        accepted = true;
      }
    }
    if (!accepted) {
      throw NewtonError("Newton line search stalled", iter, rnorm);
    }
    u.values.swap(u_try);
    res.swap(res_try);
    rnorm = inf_norm(res);
    merit = half_sq_norm(res);
    ++stats.iterations;
  }
}

double height_upper_bound(double H, double quad_tol) {
  return (H == 0.0) ? 0.25 * kPi : height_bound_B(H, quad_tol);
}

void validate_solver_params(double H, double s) {
  if (!(H >= 0.0 && H < 1.0)) {
    throw std::domain_error("solver: H must lie in [0, 1)");
  }
  if (!(s >= 0.0) || !std::isfinite(s)) {
    throw std::domain_error("solver: boundary slope s must be finite and nonnegative");
  }
}

// Metric gradient evaluated from nodal differences; one-sided second order at
// the two boundary levels, central otherwise.
double gradient_norm_impl(const ScalarField& f, int i, int j) {
  const PolarMesh& m = f.mesh;
  const double inv_dxi = 1.0 / m.dxi;
  const double inv_dth = 1.0 / m.dtheta;
  double uxi;
  if (i == 0) {
    uxi = (-3.0 * f.at(0, j) + 4.0 * f.at(1, j) - f.at(2, j)) * 0.5 * inv_dxi;
  } else if (i == m.n_r) {
    uxi = (3.0 * f.at(i, j) - 4.0 * f.at(i - 1, j) + f.at(i - 2, j)) * 0.5 * inv_dxi;
  } else {
    uxi = (f.at(i + 1, j) - f.at(i - 1, j)) * 0.5 * inv_dxi;
  }
  const double uth = (f.at(i, j + 1) - f.at(i, j - 1)) * 0.5 * inv_dth;
  const MetricCoeffs mc = metric_at(m.xi(i), m.rho[m.wrap(j)], m.rho_prime[m.wrap(j)], m.r_outer, m.grading);
  const double p = mc.inv_xx * uxi + mc.inv_xt * uth;
  const double q = mc.inv_xt * uxi + mc.inv_tt * uth;
  const double grad2 = uxi * p + uth * q;
  return std::sqrt(std::max(0.0, grad2));
}

// Signed boundary radial derivative of one ray, recovered by fitting the
// rotational profile family through the first interior node: solve
// v_{rho,sigma,H}(r1) = u1 - u0 for sigma. The profiles absorb the boundary
// layer that defeats one-sided differences at coarse spacing. Descending rays
// (negative increment, H > 0 sag regime) fall back to the one-sided value.
double fit_ray_slope(double rho, double r1, double delta, double H, double quad_tol,
                     double fd_fallback) {
  if (delta == 0.0) return 0.0;
  if (delta < 0.0) return fd_fallback;
  const double cap = profile_value(r1, CmcParams(rho, Slope::infinite(), H), quad_tol);
  if (delta >= cap) return 1e6;  // steeper than the vertical-tangency profile
  const auto value = [&](double sigma) {
    return profile_value(r1, CmcParams(rho, Slope::finite(sigma), H), quad_tol);
  };
  double lo = 0.0;
  double hi = 1.0;
  while (value(hi) < delta) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e7) return 1e6;
  }
  for (int k = 0; k < 120; ++k) {
    const double mid = 0.5 * (lo + hi);
    const double v = value(mid);
    if (std::fabs(v - delta) <= 1e-15 + 1e-12 * std::fabs(delta)) return mid;
    if (v < delta) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-13 * (1.0 + hi)) break;
  }
  return 0.5 * (lo + hi);
}

struct RaySlopeKey {
  double rho;
  double delta;
  bool operator<(const RaySlopeKey& o) const {
    return rho < o.rho || (rho == o.rho && delta < o.delta);
  }
};

// Fitted signed du/dr and boundary-row u_theta for every ray; rays with equal
// (rho, increment) share one fit (radial domains collapse to a single solve).
struct BoundarySlopes {
  std::vector<double> dudr;
  std::vector<double> utheta;
};

BoundarySlopes fit_boundary_slopes(const ScalarField& f, double H, double quad_tol) {
  const PolarMesh& m = f.mesh;
  BoundarySlopes out;
  out.dudr.resize(m.n_theta);
  out.utheta.resize(m.n_theta);
  std::map<RaySlopeKey, double> memo;
  for (int j = 0; j < m.n_theta; ++j) {
    const double r_xi0 = (m.r_outer - m.rho[j]) * m.stretch_prime(0.0);
    const double delta = f.at(1, j) - f.at(0, j);
    const double fd =
        (-3.0 * f.at(0, j) + 4.0 * f.at(1, j) - f.at(2, j)) * 0.5 / (m.dxi * r_xi0);
    const RaySlopeKey key{m.rho[j], delta};
    const auto it = memo.find(key);
    if (it != memo.end()) {
      out.dudr[j] = it->second;
    } else {
      const double fit =
          fit_ray_slope(m.rho[j], m.radius(1, j), delta, H, quad_tol, fd);
      memo.emplace(key, fit);
      out.dudr[j] = fit;
    }
    out.utheta[j] = (f.at(0, j + 1) - f.at(0, j - 1)) * 0.5 / m.dtheta;
  }
  return out;
}

double metric_slope_from_parts(const PolarMesh& m, int j, double dudr, double uth) {
  const MetricCoeffs mc = metric_at(0.0, m.rho[j], m.rho_prime[j], m.r_outer, m.grading);
  const double uxi = dudr * mc.r_xi;
  const double p = mc.inv_xx * uxi + mc.inv_xt * uth;
  const double q = mc.inv_xt * uxi + mc.inv_tt * uth;
  return std::sqrt(std::max(0.0, uxi * p + uth * q));
}

// Model vector of the boundary gradient of one ray from its physical parts.
ModelVector boundary_gradient_model_vector(const PolarMesh& m, int j, double dudr,
                                           double uth) {
  const MetricCoeffs mc = metric_at(0.0, m.rho[j], m.rho_prime[j], m.r_outer, m.grading);
  const double uxi = dudr * mc.r_xi;
  const double p = mc.inv_xx * uxi + mc.inv_xt * uth;
  const double q = mc.inv_xt * uxi + mc.inv_tt * uth;
  const double radial = p * mc.r_xi + q * mc.r_theta;   // du/dr
  const double angular = q * mc.sinh_r;                 // du along e_theta
  const GeodesicPolarPoint bp(m.rho[j], m.theta(j));
  return radial * hemisphere_radial_unit(bp) + angular * hemisphere_angular_unit(bp);
}

struct TEval {
  double t = 0.0;
  double slope = kInf;
  bool failed = false;
  int newton_iters = 0;
  ScalarField field;
};

struct TSearchContext {
  const PolarMesh& mesh;
  std::vector<double> inner;
  std::vector<double> outer_base;  // outer data at t = 0
  double H;
  const SolverOptions& opts;
  std::function<double(const ScalarField&)> slope_of;
  const ScalarField* stage_warm = nullptr;  // prior-stage field on this mesh
  double stage_warm_t = 0.0;
};

bool tsearch_trace() {
  static const bool on = std::getenv("CMCGRAPH_TRACE_TSEARCH") != nullptr;
  return on;
}

TEval eval_t(const TSearchContext& cx, double t, const TEval* warm) {
  std::vector<double> outer(cx.outer_base);
  for (double& v : outer) v += t;

  ScalarField init;
  const ScalarField* initp = nullptr;
  if (warm && !warm->failed) {
    init = warm->field;
    const double dt = t - warm->t;
    const PolarMesh& m = cx.mesh;
    for (int i = 0; i <= m.n_r; ++i) {
      for (int j = 0; j < m.n_theta; ++j) {
        init.at(i, j) += dt * boundary_blend(m, i, j);
      }
    }
    initp = &init;
  }

  TEval out;
  out.t = t;
  NewtonStats st;
  try {
    out.field = newton_solve(cx.mesh, cx.inner, outer, cx.H, cx.opts, st, initp);
    out.newton_iters = st.iterations;
    out.slope = cx.slope_of(out.field);
  } catch (const NewtonError& e) {
    // treat a failed solve as exceeding every reachable slope: the continuous
    // family ceases to exist above the critical outer height
    out.failed = true;
    out.slope = kInf;
    out.newton_iters = e.iterations;
  }
  if (tsearch_trace()) {
    std::fprintf(stderr, "[tsearch] t=%.15g slope=%.12g failed=%d iters=%d\n", out.t,
                 out.slope, out.failed ? 1 : 0, out.newton_iters);
  }
  return out;
}

struct TSearchOutcome {
  TEval best;
  double slope_at_zero = 0.0;
  int newton_total = 0;
  bool monotone = true;
  std::vector<std::pair<double, double>> samples;  // (t, slope), solved only
};

void note_sample(TSearchOutcome& out, const TEval& e) {
  if (!e.failed) out.samples.emplace_back(e.t, e.slope);
}

bool samples_monotone(std::vector<std::pair<double, double>> samples) {
  std::sort(samples.begin(), samples.end());
  for (size_t k = 1; k < samples.size(); ++k) {
    if (samples[k].second < samples[k - 1].second - 1e-9) return false;
  }
  return true;
}

TSearchOutcome search_t(const TSearchContext& cx, double s, double upper,
                        std::optional<double> hint) {
  TSearchOutcome out;

  TEval e0 = eval_t(cx, 0.0, nullptr);
  out.newton_total += e0.newton_iters;
  if (e0.failed) {
    throw NewtonError("solve at t = 0 failed", e0.newton_iters, kInf);
  }
  note_sample(out, e0);
  out.slope_at_zero = e0.slope;

  if (s == 0.0) {
    // t = 0 is the trivial member of the admissible family
    out.best = std::move(e0);
    out.monotone = true;
    return out;
  }

  TEval lo = std::move(e0);
  TEval hi;
  hi.t = upper;
  hi.slope = kInf;  // the rotational bound caps the family; not solved eagerly

  if (lo.slope > s + cx.opts.slope_tol) {
    // slope(0) already exceeds the target: coarse scan for the ascending
    // branch, keeping the largest t with slope <= s
    const int kScan = 16;
    std::vector<TEval> scan;
    scan.reserve(kScan);
    const TEval* prev = &lo;
    for (int k = 1; k < kScan; ++k) {
      scan.push_back(eval_t(cx, upper * k / kScan, prev));
      out.newton_total += scan.back().newton_iters;
      note_sample(out, scan.back());
      if (!scan.back().failed) prev = &scan.back();
    }
    int pick = -1;
    for (int k = 0; k < static_cast<int>(scan.size()); ++k) {
      if (scan[k].slope <= s) pick = k;
    }
    if (pick < 0) {
      out.monotone = samples_monotone(out.samples);
      double min_slope = kInf;
      for (const auto& sm : out.samples) min_slope = std::min(min_slope, sm.second);
      throw BracketError("no outer height with boundary slope <= s found in [0, bound]",
                         min_slope, scan.back().slope);
    }
    if (pick + 1 < static_cast<int>(scan.size())) hi = std::move(scan[pick + 1]);
    lo = std::move(scan[pick]);
  }

  if (std::fabs(lo.slope - s) <= cx.opts.slope_tol) {
    out.monotone = samples_monotone(out.samples);
    out.best = std::move(lo);
    return out;
  }

  TEval seed;
  seed.t = cx.stage_warm_t;
  if (cx.stage_warm) {
    seed.field = *cx.stage_warm;
    seed.slope = -1.0;  // slope unknown; only the field is used for warm starts
  }
  const TEval* first_warm = cx.stage_warm ? &seed : &lo;

  if (hint && *hint > lo.t && *hint < hi.t) {
    TEval eh = eval_t(cx, *hint, first_warm);
    out.newton_total += eh.newton_iters;
    note_sample(out, eh);
    if (std::fabs(eh.slope - s) <= cx.opts.slope_tol) {
      out.monotone = samples_monotone(out.samples);
      out.best = std::move(eh);
      return out;
    }
    if (eh.slope <= s) {
      lo = std::move(eh);
    } else {
      hi = std::move(eh);
    }
  }

  for (int iter = 0; iter < cx.opts.max_bisection_iters; ++iter) {
    if (hi.t - lo.t <= 1e-13 * std::max(1.0, upper)) break;
    const double tm = 0.5 * (lo.t + hi.t);
    const TEval* warm = &lo;
    if (!hi.failed && hi.slope < kInf && (hi.t - tm) < (tm - lo.t)) warm = &hi;
    if (cx.stage_warm && lo.t == 0.0 && (hi.failed || hi.slope == kInf)) warm = &seed;
    TEval em = eval_t(cx, tm, warm);
    out.newton_total += em.newton_iters;
    note_sample(out, em);
    if (std::fabs(em.slope - s) <= cx.opts.slope_tol) {
      out.monotone = samples_monotone(out.samples);
      out.best = std::move(em);
      return out;
    }
    if (em.slope <= s) {
      lo = std::move(em);
    } else {
      hi = std::move(em);
    }
  }

  out.monotone = samples_monotone(out.samples);
  if (s - lo.slope > cx.opts.slope_tol) {
    throw BracketError("boundary slope target not reached: slope at the height bound stays below s",
                       lo.slope, hi.slope);
  }
  out.best = std::move(lo);
  return out;
}

SolveReport base_report(const PolarMesh& mesh, const TSearchOutcome& outcome,
                        const SolverOptions& opts, double H) {
  SolveReport rep;
  rep.t_star = outcome.best.t;
  rep.sup_grad_inner = outcome.best.slope;
  rep.sup_u = outcome.best.field.max_value();
  std::vector<double> res;
  assemble(mesh, outcome.best.field.values, H, true, res, nullptr);
  rep.residual_norm = inf_norm(res);
  rep.newton_iters = outcome.newton_total;
  rep.n_r = mesh.n_r;
  rep.n_theta = mesh.n_theta;
  rep.r_outer = mesh.r_outer;
  rep.converged = rep.residual_norm <= opts.newton_tol;
  rep.slope_monotone = outcome.monotone;
  return rep;
}

// 4-point Lagrange interpolation of a field along the ray of angle index j.
double interp_along_ray(const ScalarField& f, int j, double r) {
  const PolarMesh& m = f.mesh;
  const double pos = m.xi_of_radius(r, j) / m.dxi;
  int base = static_cast<int>(std::floor(pos)) - 1;
  base = std::clamp(base, 0, m.n_r - 3);
  double value = 0.0;
  for (int a = 0; a < 4; ++a) {
    double wgt = 1.0;
    for (int b = 0; b < 4; ++b) {
      if (a == b) continue;
      wgt *= (pos - (base + b)) / (static_cast<double>(a) - b);
    }
    value += wgt * f.at(base + a, j);
  }
  return value;
}

// Previous-stage field carried onto a larger-domain mesh: interpolated where
// the domains overlap, continued with a per-ray tail value beyond.
ScalarField extend_to_mesh(const ScalarField& prev, const PolarMesh& mesh,
                           const std::function<double(double, int)>& tail) {
  ScalarField out(mesh);
  for (int j = 0; j < mesh.n_theta; ++j) {
    for (int i = 0; i <= mesh.n_r; ++i) {
      const double r = mesh.radius(i, j);
      out.at(i, j) = (r <= prev.mesh.r_outer) ? interp_along_ray(prev, j, r) : tail(r, j);
    }
  }
  return out;
}

double stage_change(const ScalarField& prev, const ScalarField& cur) {
  const PolarMesh& m = prev.mesh;
  double worst = 0.0;
  for (int j = 0; j < m.n_theta; ++j) {
    for (int i = 0; i <= m.n_r; ++i) {
      const double r = m.radius(i, j);
      worst = std::max(worst, std::fabs(interp_along_ray(cur, j, r) - prev.at(i, j)));
    }
  }
  return worst;
}

std::vector<double> constant_row(int n, double v) { return std::vector<double>(n, v); }

}  // namespace

ScalarField residual_MH(const ScalarField& field, double H) {
  if (!(H >= 0.0 && H < 1.0)) {
    throw std::domain_error("residual_MH: H must lie in [0, 1)");
  }
  ScalarField out(field.mesh);
  assemble(field.mesh, field.values, H, true, out.values, nullptr);
  return out;
}

ScalarField jacobian_action(const ScalarField& field, double H, const ScalarField& direction) {
  const PolarMesh& m = field.mesh;
  const int nt = m.n_theta;
  std::vector<double> res;
  Triplets trips;
  assemble(m, field.values, H, true, res, &trips);
  ScalarField out(m);
  for (const auto& t : trips) {
    const int row_i = t.row() / nt + 1;
    const int row_j = t.row() % nt;
    const int col_i = t.col() / nt + 1;
    const int col_j = t.col() % nt;
    out.at(row_i, row_j) += t.value() * direction.at(col_i, col_j);
  }
  return out;
}

ScalarField solve_dirichlet_data(const PolarMesh& mesh, const std::vector<double>& inner,
                                 const std::vector<double>& outer, double H,
                                 const SolverOptions& opts, NewtonStats* stats,
                                 const ScalarField* initial) {
  if (static_cast<int>(inner.size()) != mesh.n_theta ||
      static_cast<int>(outer.size()) != mesh.n_theta) {
    throw std::invalid_argument("solve_dirichlet_data: boundary data size mismatch");
  }
  NewtonStats local;
  NewtonStats& st = stats ? *stats : local;
  return newton_solve(mesh, inner, outer, H, opts, st, initial);
}

ScalarField solve_dirichlet(const StarDomain& domain, double r_outer, double t, double H,
                            int n_r, int n_theta, const SolverOptions& opts,
                            NewtonStats* stats) {
  validate_solver_params(H, 0.0);
  if (!(t >= 0.0)) {
    throw std::domain_error("solve_dirichlet: outer height t must be nonnegative");
  }
  const double bound = height_upper_bound(H, opts.quad_tol);
  if (t > bound * (1.0 + 1e-12)) {
    throw std::domain_error("solve_dirichlet: outer height t exceeds the rotational height bound");
  }
  const PolarMesh mesh = PolarMesh::build(domain, r_outer, n_r, n_theta);
  return solve_dirichlet_data(mesh, constant_row(n_theta, 0.0), constant_row(n_theta, t), H,
                              opts, stats);
}

double boundary_gradient_sup(const ScalarField& field) {
  double sup = 0.0;
  for (int j = 0; j < field.mesh.n_theta; ++j) {
    sup = std::max(sup, gradient_norm_impl(field, 0, j));
  }
  return sup;
}

double gradient_norm_at(const ScalarField& field, int i, int j) {
  return gradient_norm_impl(field, i, j);
}

double boundary_slope_profile_fit(const ScalarField& field, double H, double quad_tol) {
  const BoundarySlopes bs = fit_boundary_slopes(field, H, quad_tol);
  double sup = 0.0;
  for (int j = 0; j < field.mesh.n_theta; ++j) {
    sup = std::max(sup, metric_slope_from_parts(field.mesh, j, bs.dudr[j], bs.utheta[j]));
  }
  return sup;
}

double max_gradient_on_circle(const ScalarField& field, double radius) {
  const PolarMesh& m = field.mesh;
  double worst = 0.0;
  bool hit = false;
  for (int j = 0; j < m.n_theta; ++j) {
    if (radius <= m.rho[j] || radius >= m.r_outer) continue;
    const double xi = m.xi_of_radius(radius, j);
    hit = true;
    const double pos = xi / m.dxi;
    int i0 = std::clamp(static_cast<int>(std::floor(pos)), 0, m.n_r - 1);
    const double frac = pos - i0;
    const double g0 = gradient_norm_impl(field, i0, j);
    const double g1 = gradient_norm_impl(field, i0 + 1, j);
    worst = std::max(worst, (1.0 - frac) * g0 + frac * g1);
  }
  if (!hit) {
    throw std::domain_error("max_gradient_on_circle: circle does not meet the mesh");
  }
  return worst;
}

namespace {

TSearchResult find_t_on_mesh(const PolarMesh& mesh, double H, double s,
                             const SolverOptions& opts, std::optional<double> t_hint,
                             const ScalarField* stage_warm, double stage_warm_t) {
  TSearchContext cx{mesh,
                    constant_row(mesh.n_theta, 0.0),
                    constant_row(mesh.n_theta, 0.0),
                    H,
                    opts,
                    [H, &opts](const ScalarField& f) {
                      return boundary_slope_profile_fit(f, H, opts.quad_tol);
                    },
                    stage_warm,
                    stage_warm_t};
  const double upper = height_upper_bound(H, opts.quad_tol);
  TSearchOutcome outcome = search_t(cx, s, upper, t_hint);

  TSearchResult result;
  result.t_star = outcome.best.t;
  result.report = base_report(mesh, outcome, opts, H);
  result.field = std::move(outcome.best.field);
  return result;
}

}  // namespace

TSearchResult find_t_for_slope(const StarDomain& domain, double r_outer, double H, double s,
                               int n_r, int n_theta, const SolverOptions& opts,
                               std::optional<double> t_hint) {
  validate_solver_params(H, s);
  const PolarMesh mesh = PolarMesh::build(domain, r_outer, n_r, n_theta);
  return find_t_on_mesh(mesh, H, s, opts, t_hint, nullptr, 0.0);
}

double first_exhaustion_radius(const StarDomain& domain, double H, double s, double quad_tol) {
  validate_solver_params(H, s);
  const double R0 = domain.max_inner_radius();
  if (s == 0.0) return R0;
  (void)quad_tol;
  const CmcParams barrier(R0, Slope::infinite(), H);
  const double target = 0.5 * s;
  double lo = R0;
  double hi = R0 + 0.5;
  while (profile_derivative(hi, barrier) > target) {
    lo = hi;
    hi += 0.5;
    if (hi > R0 + 200.0) {
      throw std::runtime_error("first_exhaustion_radius: barrier slope does not decay");
    }
  }
  for (int k = 0; k < 80; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (profile_derivative(mid, barrier) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

std::vector<double> default_exhaustion(const StarDomain& domain, double H, double s, int stages,
                                       double step, double quad_tol) {
  if (stages < 1) throw std::invalid_argument("default_exhaustion: need at least one stage");
  const double R1 = first_exhaustion_radius(domain, H, s, quad_tol);
  std::vector<double> radii(stages);
  for (int m = 0; m < stages; ++m) radii[m] = R1 + step * (m + 1);
  return radii;
}

ExteriorSolveResult exterior_solve(const StarDomain& domain, double H, double s,
                                   const std::vector<double>& exhaustion_radii, int n_r,
                                   int n_theta, const SolverOptions& opts) {
  validate_solver_params(H, s);
  if (exhaustion_radii.empty()) {
    throw std::invalid_argument("exterior_solve: empty exhaustion schedule");
  }
  for (size_t k = 1; k < exhaustion_radii.size(); ++k) {
    if (!(exhaustion_radii[k] > exhaustion_radii[k - 1])) {
      throw std::invalid_argument("exterior_solve: exhaustion radii must increase");
    }
  }
  if (s > 0.0) {
    const double R1 = first_exhaustion_radius(domain, H, s, opts.quad_tol);
    if (exhaustion_radii.front() < R1 - 1e-9) {
      throw std::invalid_argument(
          "exterior_solve: first exhaustion radius lies inside the gradient-decay threshold "
          "(barrier slope > s/2)");
    }
  }

  ExteriorSolveResult result;
  result.report.stage_radii = exhaustion_radii;
  std::optional<double> hint;
  for (double R : exhaustion_radii) {
    const PolarMesh mesh = PolarMesh::build(domain, R, n_r, n_theta);
    ScalarField warm;
    const ScalarField* warm_ptr = nullptr;
    if (!result.stages.empty()) {
      const ScalarField& prev = result.stages.back();
      warm = extend_to_mesh(prev, mesh, [&prev](double, int j) {
        return prev.at(prev.mesh.n_r, j);
      });
      warm_ptr = &warm;
    }
    TSearchResult stage = find_t_on_mesh(mesh, H, s, opts, hint, warm_ptr, hint.value_or(0.0));
    hint = stage.t_star;
    result.report.stage_t.push_back(stage.t_star);
    result.report.newton_iters += stage.report.newton_iters;
    result.report.slope_monotone = result.report.slope_monotone && stage.report.slope_monotone;
    if (!result.stages.empty()) {
      result.report.stage_changes.push_back(stage_change(result.stages.back(), stage.field));
    }
    result.stages.push_back(std::move(stage.field));

    result.report.t_star = stage.report.t_star;
    result.report.sup_grad_inner = stage.report.sup_grad_inner;
    result.report.sup_u = stage.report.sup_u;
    result.report.residual_norm = stage.report.residual_norm;
    result.report.n_r = stage.report.n_r;
    result.report.n_theta = stage.report.n_theta;
    result.report.r_outer = stage.report.r_outer;
    result.report.converged = stage.report.converged;
  }
  result.report.exhaustion_converged =
      result.report.stage_changes.empty() ||
      result.report.stage_changes.back() <= opts.exhaustion_tol;
  return result;
}

BarrierCheckReport barrier_check(const ScalarField& field, double t, double R0, double H,
                                 double quad_tol) {
  const PolarMesh& m = field.mesh;
  BarrierCheckReport rep;
  const double Lmax = m.r_outer - *std::min_element(m.rho.begin(), m.rho.end());
  rep.h = std::max(m.dxi * Lmax * m.stretch_prime(1.0), m.dtheta);

  RadialProfile barrier(CmcParams(R0, Slope::infinite(), H), quad_tol);
  const double v_outer = barrier.value(m.r_outer);
  for (int i = 0; i <= m.n_r; ++i) {
    for (int j = 0; j < m.n_theta; ++j) {
      const double u = field.at(i, j);
      rep.worst_upper_violation = std::max(rep.worst_upper_violation, u - t);
      const double r = m.radius(i, j);
      if (r >= R0) {
        const double lower = barrier.value(r) - (v_outer + t);
        rep.worst_lower_violation = std::max(rep.worst_lower_violation, lower - u);
        ++rep.nodes_checked;
      }
    }
  }
  return rep;
}

EquidistantSolveResult solve_on_equidistant(const StarDomain& eh_domain, double H, double s,
                                            const std::vector<double>& eh_exhaustion_radii,
                                            int n_r, int n_theta, const SolverOptions& opts) {
  if (!(H > 0.0 && H < 1.0)) {
    throw std::domain_error("solve_on_equidistant: H must lie in (0, 1)");
  }
  if (!(s >= 0.0) || !std::isfinite(s)) {
    throw std::domain_error("solve_on_equidistant: slope must be finite and nonnegative");
  }
  if (eh_exhaustion_radii.empty()) {
    throw std::invalid_argument("solve_on_equidistant: empty exhaustion schedule");
  }
  for (size_t k = 1; k < eh_exhaustion_radii.size(); ++k) {
    if (!(eh_exhaustion_radii[k] > eh_exhaustion_radii[k - 1])) {
      throw std::invalid_argument("solve_on_equidistant: exhaustion radii must increase");
    }
  }

  EquidistantSolveResult result;
  auto chart = std::make_shared<const EquidistantChart>(H, opts.quad_tol);
  result.chart = chart;

  // project the domain to the base along Killing cylinders
  StarDomain base_domain = StarDomain::from_function(
      [chart, &eh_domain](double theta) {
        return chart->base_radius(eh_domain.inner_radius(theta));
      });

  std::vector<double> base_radii(eh_exhaustion_radii.size());
  for (size_t k = 0; k < eh_exhaustion_radii.size(); ++k) {
    base_radii[k] = chart->base_radius(eh_exhaustion_radii[k]);
  }

  result.report.stage_radii = eh_exhaustion_radii;

  const auto eh_slope_of = [&chart, H, &opts](const ScalarField& f) {
    const BoundarySlopes bs = fit_boundary_slopes(f, H, opts.quad_tol);
    double sup = 0.0;
    for (int j = 0; j < f.mesh.n_theta; ++j) {
      const ModelVector grad_ut =
          boundary_gradient_model_vector(f.mesh, j, bs.dudr[j], bs.utheta[j]);
      const GeodesicPolarPoint bp(f.mesh.rho[j], f.mesh.theta(j));
      const ModelVector grad_u = gradient_transform_inverse(grad_ut, bp, *chart);
      const HalfSpacePoint x = killing_flow(to_half_space(bp), chart->w(bp.r));
      sup = std::max(sup, model_norm(x, grad_u));
    }
    return sup;
  };

  if (s > 0.0) {
    // admissibility of the first radius: the slope of the E_H barrier over the
    // smallest enclosing disk must have decayed below s/2
    EquidistantBarrier f_R0(eh_domain.max_inner_radius(), chart, opts.quad_tol);
    const double slope_at_first =
        std::fabs(f_R0.radial_derivative(eh_exhaustion_radii.front()));
    if (slope_at_first > 0.5 * s) {
      throw std::invalid_argument(
          "solve_on_equidistant: first exhaustion radius inside the gradient-decay threshold");
    }
  }

  const double upper = height_bound_B(H, opts.quad_tol);
  std::optional<double> hint;
  ScalarField final_field;
  PolarMesh final_mesh;
  for (size_t k = 0; k < base_radii.size(); ++k) {
    const PolarMesh mesh = PolarMesh::build(base_domain, base_radii[k], n_r, n_theta);
    std::vector<double> inner(n_theta), outer_base(n_theta);
    for (int j = 0; j < n_theta; ++j) inner[j] = chart->w(mesh.rho[j]);
    const double w_outer = chart->w(base_radii[k]);
    for (int j = 0; j < n_theta; ++j) outer_base[j] = w_outer;

    if (s == 0.0) {
      // E_H itself is the solution: u = 0, u~ = w
      ScalarField wf(mesh);
      for (int i = 0; i <= mesh.n_r; ++i) {
        for (int j = 0; j < mesh.n_theta; ++j) {
          wf.at(i, j) = chart->w(mesh.radius(i, j));
        }
      }
      if (!result.base_stages.empty()) {
        result.report.stage_changes.push_back(
            stage_change(result.base_stages.back(), wf));
      }
      result.base_stages.push_back(wf);
      result.report.stage_t.push_back(0.0);
      final_field = std::move(wf);
      final_mesh = mesh;
      result.report.t_star = 0.0;
      result.report.sup_grad_inner = 0.0;
      result.report.sup_u = 0.0;
      result.report.residual_norm = 0.0;
      result.report.converged = true;
      result.report.n_r = mesh.n_r;
      result.report.n_theta = mesh.n_theta;
      result.report.r_outer = mesh.r_outer;
      continue;
    }

    TSearchContext cx{mesh, inner, outer_base, H, opts, eh_slope_of};
    TSearchOutcome outcome = search_t(cx, s, upper, hint);
    hint = outcome.best.t;

    result.report.stage_t.push_back(outcome.best.t);
    result.report.newton_iters += outcome.newton_total;
    result.report.slope_monotone = result.report.slope_monotone && outcome.monotone;
    if (!result.base_stages.empty()) {
      result.report.stage_changes.push_back(
          stage_change(result.base_stages.back(), outcome.best.field));
    }
    SolveReport stage_rep = base_report(mesh, outcome, opts, H);
    result.report.t_star = stage_rep.t_star;
    result.report.sup_grad_inner = stage_rep.sup_grad_inner;
    result.report.residual_norm = stage_rep.residual_norm;
    result.report.converged = stage_rep.converged;
    result.report.n_r = stage_rep.n_r;
    result.report.n_theta = stage_rep.n_theta;
    result.report.r_outer = stage_rep.r_outer;
    result.base_stages.push_back(outcome.best.field);
    final_field = std::move(outcome.best.field);
    final_mesh = mesh;
  }

  // transform the final stage back to E_H: u = u~ - w on each flow line
  result.eh_field = ScalarField(final_mesh);
  result.eh_radii.resize(final_mesh.node_count());
  double sup_u = 0.0;
  for (int i = 0; i <= final_mesh.n_r; ++i) {
    for (int j = 0; j < final_mesh.n_theta; ++j) {
      const double rt = final_mesh.radius(i, j);
      const double v = final_field.at(i, j) - chart->w(rt);
      result.eh_field.at(i, j) = v;
      result.eh_radii[final_mesh.index(i, j)] = chart->eh_radius(rt);
      sup_u = std::max(sup_u, v);
    }
  }
  if (s > 0.0) result.report.sup_u = sup_u;
  result.report.exhaustion_converged =
      result.report.stage_changes.empty() ||
      result.report.stage_changes.back() <= opts.exhaustion_tol;
  return result;
}

}  // namespace cmcgraph
