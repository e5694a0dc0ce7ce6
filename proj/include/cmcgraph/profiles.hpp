#pragma once

#include <map>
#include <mutex>

namespace cmcgraph {

inline constexpr double kDefaultQuadTol = 1e-10;

// Boundary slope prescribed on the inner circle. The vertical-tangency case
// is a distinct state, never a floating sentinel.
class Slope {
 public:
  static Slope finite(double value);
  static Slope infinite();

  bool is_infinite() const noexcept { return infinite_; }
  double value() const;  // throws std::logic_error for the infinite slope

 private:
  Slope(bool infinite, double value) : infinite_(infinite), value_(value) {}
  bool infinite_;
  double value_;
};

// Parameters (rho, s, H) of a rotational constant-mean-curvature profile over
// the exterior of the disk of radius rho.
struct CmcParams {
  double rho;
  Slope s;
  double H;

  CmcParams(double rho_in, Slope s_in, double H_in);
};

// C(rho, s, H) = -H cosh(2 rho) + sinh(2 rho) cosh(rho) s / sqrt(1 + cosh^2(rho) s^2),
// with the second factor replaced by its limit 1 for the infinite slope.
double coefficient_C(double rho, const Slope& s, double H);

// g(t) = H coth(2t) + C cosech(2t); the flux variable of the profile ODE
// g' + g (coth + tanh) - 2H = 0. Requires t >= rho.
double slope_g(double t, const CmcParams& params);

// f(r) = integral_rho^r g / (cosh t sqrt(1 - g^2)) dt, relative error <= quad_tol.
double profile_value(double r, const CmcParams& params, double quad_tol = kDefaultQuadTol);

// f'(r) = g(r) / (cosh(r) sqrt(1 - g(r)^2)); +infinity at r = rho when the
// slope is infinite.
double profile_derivative(double r, const CmcParams& params);

// lim_{r->inf} f(r) for H in [0,1), truncated where the analytic tail bound
// drops below quad_tol relative to the accumulated value.
double asymptotic_height(const CmcParams& params, double quad_tol = kDefaultQuadTol);

// B(H) = integral_0^inf (H + (1-H) e^{-2t}) / (cosh t sqrt(1 - (...)^2)) dt,
// the uniform height bound of the vertical-tangency profiles, H in [0,1).
double height_bound_B(double H, double quad_tol = kDefaultQuadTol);

// Flow height w(r) of the equidistant surface as a graph over the base:
// w(r) = -integral_r^inf H tanh t / (cosh t sqrt(1 - H^2 tanh^2 t)) dt, using
// coth(2t) - cosech(2t) = tanh(t). Negative, increasing to zero.
double equidistant_height_w(double r, double H, double quad_tol = kDefaultQuadTol);

// dw/dr, i.e. the integrand above evaluated at r.
double equidistant_height_w_derivative(double r, double H);

// Half catenoid profile of the product space H^2 x R with waist parameter rho:
// integral_0^r sinh(rho) / sqrt(sinh^2(t + rho) - sinh^2(rho)) dt.
double catenoid_h2r(double r, double rho, double quad_tol = kDefaultQuadTol);

// r -> infinity limit of catenoid_h2r, truncated under a certified tail bound.
double catenoid_h2r_limit(double rho, double quad_tol = kDefaultQuadTol);

// Profile evaluator with a node cache so dense mesh sampling integrates each
// radial segment once. Concurrent use is guarded by an internal mutex.
class RadialProfile {
 public:
  explicit RadialProfile(CmcParams params, double quad_tol = kDefaultQuadTol);

  double value(double r) const;
  double derivative(double r) const;

  const CmcParams& params() const { return params_; }
  double quad_tol() const { return quad_tol_; }

 private:
  CmcParams params_;
  double quad_tol_;
  mutable std::mutex mutex_;
  mutable std::map<double, double> nodes_;  // r -> f(r)
};

}  // namespace cmcgraph
