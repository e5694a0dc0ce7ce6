#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmcgraph/equidistant.hpp"
#include "cmcgraph/mesh.hpp"
#include "cmcgraph/profiles.hpp"

namespace cmcgraph {

struct SolverOptions {
  double newton_tol = 1e-10;    // max-norm of the discrete residual
  int max_newton_iters = 60;
  double slope_tol = 1e-7;      // |boundary slope - s| target of the t-search
  int max_bisection_iters = 80;
  double exhaustion_tol = 1e-4; // stage-to-stage max change declaring convergence
  double quad_tol = kDefaultQuadTol;
};

struct SolveReport {
  double t_star = 0.0;
  double sup_grad_inner = 0.0;
  double sup_u = 0.0;
  double residual_norm = 0.0;
  int newton_iters = 0;
  int n_r = 0;
  int n_theta = 0;
  double r_outer = 0.0;
  bool converged = false;
  bool slope_monotone = true;  // monotonicity of the boundary slope in t as observed
  std::vector<double> stage_radii;
  std::vector<double> stage_t;
  std::vector<double> stage_changes;
  bool exhaustion_converged = false;
};

struct SolveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NewtonError : SolveError {
  NewtonError(const std::string& what, int iters, double residual)
      : SolveError(what), iterations(iters), final_residual(residual) {}
  int iterations;
  double final_residual;
};

struct BracketError : SolveError {
  BracketError(const std::string& what, double lo, double hi)
      : SolveError(what), slope_low(lo), slope_high(hi) {}
  double slope_low;
  double slope_high;
};

struct NewtonStats {
  int iterations = 0;
  int picard_steps = 0;
  double residual = 0.0;
  bool converged = false;
};

// Nodal residual of the conservative discretization of
//   M_H(u) = div(cosh r grad u / W) + <grad u, sinh r grad r>/W - 2H,
// W = sqrt(1 + cosh^2 r |grad u|^2), with fluxes at cell half-nodes.
// Boundary rows are zero.
ScalarField residual_MH(const ScalarField& field, double H);

// Action of the exact discrete Jacobian of residual_MH at `field` on a
// direction (interior nodes; boundary rows zero).
ScalarField jacobian_action(const ScalarField& field, double H, const ScalarField& direction);

// Dirichlet solve with per-angle boundary values (inner row i=0, outer row
// i=n_r); Newton iteration with the exact stencil Jacobian, Armijo
// backtracking and a damped Picard fallback.
ScalarField solve_dirichlet_data(const PolarMesh& mesh, const std::vector<double>& inner,
                                 const std::vector<double>& outer, double H,
                                 const SolverOptions& opts = {}, NewtonStats* stats = nullptr,
                                 const ScalarField* initial = nullptr);

// u = 0 on the star boundary, u = t on the outer circle. Rejects t above the
// rotational height bound (pi/4 for H = 0, B(H) otherwise).
ScalarField solve_dirichlet(const StarDomain& domain, double r_outer, double t, double H,
                            int n_r, int n_theta, const SolverOptions& opts = {},
                            NewtonStats* stats = nullptr);

// Supremum of the metric gradient norm over inner-boundary nodes,
// second-order one-sided in the radial direction.
double boundary_gradient_sup(const ScalarField& field);

// Boundary slope with the normal part recovered by fitting the rotational
// profile family through the first interior node of each ray (exact on radial
// solutions, where the one-sided difference is polluted by the boundary
// layer); tangential part from the boundary row. Falls back to the one-sided
// difference on descending rays. This is the functional the t-search matches.
double boundary_slope_profile_fit(const ScalarField& field, double H,
                                  double quad_tol = kDefaultQuadTol);

// Metric gradient norm at an interior node (central differences).
double gradient_norm_at(const ScalarField& field, int i, int j);

// Max of |grad u| over the circle of the given base radius (linear
// interpolation between bracketing node levels).
double max_gradient_on_circle(const ScalarField& field, double radius);

struct TSearchResult {
  double t_star = 0.0;
  ScalarField field;
  SolveReport report;
};

// Bisection on the outer height t in [0, bound] for the t whose solution has
// inner boundary slope s; falls back to a coarse scan when slope(0) > s.
TSearchResult find_t_for_slope(const StarDomain& domain, double r_outer, double H, double s,
                               int n_r, int n_theta, const SolverOptions& opts = {},
                               std::optional<double> t_hint = std::nullopt);

struct ExteriorSolveResult {
  std::vector<ScalarField> stages;
  SolveReport report;
};

// Domain exhaustion: find_t_for_slope on each radius of the increasing
// schedule, reporting stagewise fields and the max nodal change between
// consecutive stages on the common region.
ExteriorSolveResult exterior_solve(const StarDomain& domain, double H, double s,
                                   const std::vector<double>& exhaustion_radii, int n_r,
                                   int n_theta, const SolverOptions& opts = {});

// Smallest radius at which the vertical-tangency barrier over the enclosing
// disk has slope <= s/2 (the admissibility rule for the first exhaustion radius).
double first_exhaustion_radius(const StarDomain& domain, double H, double s,
                               double quad_tol = kDefaultQuadTol);

std::vector<double> default_exhaustion(const StarDomain& domain, double H, double s, int stages,
                                       double step = 1.0, double quad_tol = kDefaultQuadTol);

struct BarrierCheckReport {
  double worst_lower_violation = 0.0;  // max over nodes of barrier - u
  double worst_upper_violation = 0.0;  // max over nodes of u - t
  double h = 0.0;                      // mesh spacing measure for tolerance scaling
  int nodes_checked = 0;
  double worst() const { return std::max(worst_lower_violation, worst_upper_violation); }
};

// Verifies the maximum-principle sandwich
//   v_{R0,inf,H}(r) - (v_{R0,inf,H}(R_outer) + t) <= u <= t
// at every node where the barrier is defined (report only, never throws).
BarrierCheckReport barrier_check(const ScalarField& field, double t, double R0, double H,
                                 double quad_tol = kDefaultQuadTol);

struct EquidistantSolveResult {
  std::shared_ptr<const EquidistantChart> chart;
  std::vector<ScalarField> base_stages;  // u~ per stage on the projected base domain
  ScalarField eh_field;                  // final-stage u on E_H: values u~ - w per node
  std::vector<double> eh_radii;          // E_H radius per node of the final stage
  SolveReport report;
};

// Exterior problem on the equidistant surface E_H: projects the domain to the
// base along Killing cylinders, solves M_H with boundary data w (inner) and
// w + t (outer), and transforms back; the boundary slope s is measured on the
// E_H side through the gradient transform.
EquidistantSolveResult solve_on_equidistant(const StarDomain& eh_domain, double H, double s,
                                            const std::vector<double>& eh_exhaustion_radii,
                                            int n_r, int n_theta,
                                            const SolverOptions& opts = {});

}  // namespace cmcgraph
