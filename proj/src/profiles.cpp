#include "cmcgraph/profiles.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "cmcgraph/quadrature.hpp"

namespace cmcgraph {

namespace {

struct Coeffs {
  double rho;
  double H;
  double k;  // cosh(rho) s / sqrt(1 + cosh^2(rho) s^2); 1 for the infinite slope
  double C;
  double sinh2rho;
  bool vertical;  // s = infinity
};

Coeffs make_coeffs(const CmcParams& p) {
  Coeffs c;
  c.rho = p.rho;
  c.H = p.H;
  c.sinh2rho = std::sinh(2.0 * p.rho);
  c.vertical = p.s.is_infinite();
  if (c.vertical) {
    c.k = 1.0;
  } else {
    const double cs = std::cosh(p.rho) * p.s.value();
    c.k = cs / std::hypot(1.0, cs);
  }
  c.C = -p.H * std::cosh(2.0 * p.rho) + c.k * c.sinh2rho;
  return c;
}

struct GPair {
  double g;
  double one_minus;  // 1 - g, exact near the vertical-tangency endpoint
};

// delta = t - rho supplied exactly by the caller; the difference
// sinh(2t) - H cosh(2t) - C is expanded by sum-to-product so no cancellation
// occurs as t -> rho:
//   1 - g(t) = [2 sinh(delta)(cosh(t+rho) - H sinh(t+rho)) + (1-k) sinh(2rho)] / sinh(2t)
GPair eval_g(const Coeffs& c, double delta) {
  const double tpr = 2.0 * c.rho + delta;       // t + rho
  const double s2t = std::sinh(tpr + delta);    // sinh(2t)
  const double d = 2.0 * std::sinh(delta) * (std::cosh(tpr) - c.H * std::sinh(tpr)) +
                   (1.0 - c.k) * c.sinh2rho;
  GPair g;
  g.one_minus = d / s2t;
  g.g = 1.0 - g.one_minus;
  return g;
}

[[noreturn]] void throw_slope_reaches_one() {
  throw std::domain_error("profile: slope function g reaches 1 in modulus");
}

double integrand_t(const Coeffs& c, double t) {
  const GPair gp = eval_g(c, t - c.rho);
  if (gp.one_minus <= 0.0 || gp.g <= -1.0) throw_slope_reaches_one();
  return gp.g / (std::cosh(t) * std::sqrt(gp.one_minus * (1.0 + gp.g)));
}

// Substituted integrand for the vertical-tangency endpoint, t = rho + u^2.
double integrand_u(const Coeffs& c, double u) {
  const double delta = u * u;
  if (delta < 1e-250) {
    // limit: 1 - g ~ delta * (2 coth(2rho) - 2H), so the 2u factor cancels
    const double c0 = 2.0 * (std::cosh(2.0 * c.rho) - c.H * std::sinh(2.0 * c.rho)) / c.sinh2rho;
    return 2.0 / (std::cosh(c.rho) * std::sqrt(2.0 * c0));
  }
  const GPair gp = eval_g(c, delta);
  if (gp.one_minus <= 0.0 || gp.g <= -1.0) throw_slope_reaches_one();
  return 2.0 * u * gp.g /
         (std::cosh(c.rho + delta) * std::sqrt(gp.one_minus * (1.0 + gp.g)));
}

// Integral of the profile integrand over [r_from, r_to], rho <= r_from.
// The absolute floor keeps cancellation-level integrands (g identically zero
// up to roundoff) from defeating the relative test.
constexpr double kAbsFloor = 1e-15;

double segment_integral(const Coeffs& c, double r_from, double r_to, double tol) {
  if (r_to <= r_from) return 0.0;
  if (c.H == 0.0 && c.k == 0.0) return 0.0;  // g identically zero
  if (c.vertical) {
    const double u0 = std::sqrt(std::max(r_from - c.rho, 0.0));
    const double u1 = std::sqrt(r_to - c.rho);
    return integrate([&](double u) { return integrand_u(c, u); }, u0, u1, tol, kAbsFloor).value;
  }
  return integrate([&](double t) { return integrand_t(c, t); }, r_from, r_to, tol, kAbsFloor).value;
}

double snap_to_inner_radius(double r, double rho) {
  if (r < rho && rho - r < 1e-12 * (1.0 + rho)) return rho;
  return r;
}

double w_integrand(double t, double H) {
  const double th = std::tanh(t);
  return H * th / (std::cosh(t) * std::sqrt((1.0 - H * th) * (1.0 + H * th)));
}

}  // namespace

Slope Slope::finite(double value) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw std::domain_error("Slope: finite slope must be a nonnegative real");
  }
  return Slope(false, value);
}

Slope Slope::infinite() { return Slope(true, 0.0); }

double Slope::value() const {
  if (infinite_) throw std::logic_error("Slope: no finite value for the infinite slope");
  return value_;
}

CmcParams::CmcParams(double rho_in, Slope s_in, double H_in)
    : rho(rho_in), s(s_in), H(H_in) {
  if (!(rho_in > 0.0) || !std::isfinite(rho_in)) {
    throw std::domain_error("CmcParams: rho must be positive");
  }
  if (!(std::fabs(H_in) < 1.0)) {
    throw std::domain_error("CmcParams: H must lie in (-1, 1)");
  }
}

double coefficient_C(double rho, const Slope& s, double H) {
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw std::domain_error("coefficient_C: rho must be positive");
  }
  if (!(std::fabs(H) < 1.0)) {
    throw std::domain_error("coefficient_C: H must lie in (-1, 1)");
  }
  return make_coeffs(CmcParams(rho, s, H)).C;
}

double slope_g(double t, const CmcParams& params) {
  const double tt = snap_to_inner_radius(t, params.rho);
  if (!(tt >= params.rho)) {
    throw std::domain_error("slope_g: t must be >= rho");
  }
  const GPair gp = eval_g(make_coeffs(params), tt - params.rho);
  if (gp.one_minus < 0.0 || gp.g < -1.0) {
    throw std::domain_error("slope_g: |g| exceeds 1 for these parameters");
  }
  return gp.g;
}

double profile_value(double r, const CmcParams& params, double quad_tol) {
  const double rr = snap_to_inner_radius(r, params.rho);
  if (!(rr >= params.rho)) {
    throw std::domain_error("profile_value: r must be >= rho");
  }
  if (rr == params.rho) return 0.0;
  return segment_integral(make_coeffs(params), params.rho, rr, quad_tol);
}

double profile_derivative(double r, const CmcParams& params) {
  const double rr = snap_to_inner_radius(r, params.rho);
  if (!(rr >= params.rho)) {
    throw std::domain_error("profile_derivative: r must be >= rho");
  }
  const Coeffs c = make_coeffs(params);
  if (rr == params.rho && c.vertical) {
    return std::numeric_limits<double>::infinity();
  }
  const GPair gp = eval_g(c, rr - params.rho);
  if (gp.one_minus <= 0.0 || gp.g <= -1.0) {
    throw std::domain_error("profile_derivative: |g(r)| = 1");
  }
  return gp.g / (std::cosh(rr) * std::sqrt(gp.one_minus * (1.0 + gp.g)));
}

double asymptotic_height(const CmcParams& params, double quad_tol) {
  if (!(params.H >= 0.0)) {
    throw std::domain_error("asymptotic_height: requires H in [0, 1)");
  }
  const Coeffs c = make_coeffs(params);
  double T = params.rho + 8.0;
  double value = segment_integral(c, params.rho, T, quad_tol);
  for (;;) {
    // |g(t)| <= H coth(2T) + |C| cosech(2T) for t >= T, and the sech factor
    // integrates to 2 atan(e^-T) <= 2 e^-T.
    const double s2 = std::sinh(2.0 * T);
    const double ghat = params.H * std::cosh(2.0 * T) / s2 + std::fabs(c.C) / s2;
    double tail = std::numeric_limits<double>::infinity();
    if (ghat < 1.0) {
      tail = 2.0 * std::exp(-T) * ghat / std::sqrt((1.0 - ghat) * (1.0 + ghat));
    }
    if (tail <= quad_tol * std::max(value, 1e-12)) break;
    const double T2 = T + 4.0;
    value += segment_integral(c, T, T2, quad_tol);
    T = T2;
    if (T > params.rho + 500.0) {
      throw std::runtime_error("asymptotic_height: tail bound did not certify");
    }
  }
  return value;
}

double height_bound_B(double H, double quad_tol) {
  if (!(H >= 0.0 && H < 1.0)) {
    throw std::domain_error("height_bound_B: requires H in [0, 1)");
  }
  // Limit integrand x(t) = H + (1-H) e^{-2t} with 1 - x = (1-H)(-expm1(-2t));
  // substitution t = u^2 removes the inverse-square-root endpoint.
  const auto f = [H](double u) {
    const double t = u * u;
    if (t < 1e-250) return 1.0 / std::sqrt(1.0 - H);
    const double x = H + (1.0 - H) * std::exp(-2.0 * t);
    const double omx = (1.0 - H) * (-std::expm1(-2.0 * t));
    return 2.0 * u * x / (std::cosh(t) * std::sqrt(omx * (1.0 + x)));
  };
  double T = 14.0;
  double value = integrate(f, 0.0, std::sqrt(T), quad_tol, 1e-15).value;
  for (;;) {
    const double xT = H + (1.0 - H) * std::exp(-2.0 * T);
    const double tail = 2.0 * std::exp(-T) * xT / std::sqrt((1.0 - xT) * (1.0 + xT));
    if (tail <= quad_tol * value) break;
    const double T2 = T + 6.0;
    value += integrate(f, std::sqrt(T), std::sqrt(T2), quad_tol, 1e-15).value;
    T = T2;
    if (T > 500.0) {
      throw std::runtime_error("height_bound_B: tail bound did not certify");
    }
  }
  return value;
}

double equidistant_height_w(double r, double H, double quad_tol) {
  if (!(r >= 0.0)) {
    throw std::domain_error("equidistant_height_w: r must be nonnegative");
  }
  if (!(H >= 0.0 && H < 1.0)) {
    throw std::domain_error("equidistant_height_w: requires H in [0, 1)");
  }
  if (H == 0.0) return 0.0;
  double T = r + 26.0;
  double value = integrate([H](double t) { return w_integrand(t, H); }, r, T, quad_tol, 1e-15).value;
  for (;;) {
    const double tail = 2.0 * std::exp(-T) * H / std::sqrt((1.0 - H) * (1.0 + H));
    if (tail <= quad_tol * value) break;
    const double T2 = T + 6.0;
    value += integrate([H](double t) { return w_integrand(t, H); }, T, T2, quad_tol, 1e-15).value;
    T = T2;
    if (T > r + 500.0) {
      throw std::runtime_error("equidistant_height_w: tail bound did not certify");
    }
  }
  return -value;
}

double equidistant_height_w_derivative(double r, double H) {
  if (!(r >= 0.0)) {
    throw std::domain_error("equidistant_height_w_derivative: r must be nonnegative");
  }
  if (!(H >= 0.0 && H < 1.0)) {
    throw std::domain_error("equidistant_height_w_derivative: requires H in [0, 1)");
  }
  return w_integrand(r, H);
}

double catenoid_h2r(double r, double rho, double quad_tol) {
  if (!(r > 0.0) || !(rho > 0.0)) {
    throw std::domain_error("catenoid_h2r: r and rho must be positive");
  }
  // sinh^2(t+rho) - sinh^2(rho) = sinh(2rho + t) sinh(t); substitution t = u^2.
  const double sr = std::sinh(rho);
  const auto f = [rho, sr](double u) {
    const double t = u * u;
    if (t < 1e-250) return 2.0 * sr / std::sqrt(std::sinh(2.0 * rho));
    return 2.0 * u * sr / std::sqrt(std::sinh(2.0 * rho + t) * std::sinh(t));
  };
  return integrate(f, 0.0, std::sqrt(r), quad_tol, 1e-15).value;
}

double catenoid_h2r_limit(double rho, double quad_tol) {
  if (!(rho > 0.0)) {
    throw std::domain_error("catenoid_h2r_limit: rho must be positive");
  }
  double T = 16.0;
  double value = catenoid_h2r(T, rho, quad_tol);
  const double sr = std::sinh(rho);
  const auto f = [rho, sr](double t) {
    return sr / std::sqrt(std::sinh(2.0 * rho + t) * std::sinh(t));
  };
  for (;;) {
    const double tail = 2.0 * sr * std::exp(-rho - T) /
                        std::sqrt((-std::expm1(-4.0 * rho - 2.0 * T)) * (-std::expm1(-2.0 * T)));
    if (tail <= quad_tol * value) break;
    const double T2 = T + 6.0;
    value += integrate(f, T, T2, quad_tol, 1e-15).value;
    T = T2;
    if (T > 500.0) {
      throw std::runtime_error("catenoid_h2r_limit: tail bound did not certify");
    }
  }
  return value;
}

RadialProfile::RadialProfile(CmcParams params, double quad_tol)
    : params_(params), quad_tol_(quad_tol) {}

double RadialProfile::value(double r) const {
  const double rr = snap_to_inner_radius(r, params_.rho);
  if (!(rr >= params_.rho)) {
    throw std::domain_error("RadialProfile::value: r must be >= rho");
  }
  if (rr == params_.rho) return 0.0;

  std::lock_guard<std::mutex> lock(mutex_);
  double r0 = params_.rho;
  double f0 = 0.0;
  auto it = nodes_.upper_bound(rr);
  if (it != nodes_.begin()) {
    --it;
    r0 = it->first;
    f0 = it->second;
    if (r0 == rr) return f0;
  }
  const double f = f0 + segment_integral(make_coeffs(params_), r0, rr, quad_tol_);
  nodes_[rr] = f;
  return f;
}

double RadialProfile::derivative(double r) const {
  return profile_derivative(r, params_);
}

}  // namespace cmcgraph
