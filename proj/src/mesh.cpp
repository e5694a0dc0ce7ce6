#include "cmcgraph/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cmcgraph {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

StarDomain StarDomain::disk(double rho) {
  if (!(rho > 0.0)) throw std::domain_error("StarDomain::disk: rho must be positive");
  StarDomain d;
  d.inner_radius = [rho](double) { return rho; };
  d.inner_radius_derivative = [](double) { return 0.0; };
  return d;
}

StarDomain StarDomain::ellipse(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw std::domain_error("StarDomain::ellipse: semi-axes must be positive");
  }
  StarDomain d;
  d.inner_radius = [a, b](double theta) {
    const double c = b * std::cos(theta);
    const double s = a * std::sin(theta);
    return a * b / std::sqrt(c * c + s * s);
  };
  d.inner_radius_derivative = [a, b](double theta) {
    const double c = b * std::cos(theta);
    const double s = a * std::sin(theta);
    const double q = c * c + s * s;
    return -a * b * 0.5 * (a * a - b * b) * std::sin(2.0 * theta) / (q * std::sqrt(q));
  };
  return d;
}

StarDomain StarDomain::from_function(std::function<double(double)> rho) {
  StarDomain d;
  d.inner_radius = rho;
  d.inner_radius_derivative = [rho](double theta) {
    const double h = 1e-6;
    return (rho(theta + h) - rho(theta - h)) / (2.0 * h);
  };
  return d;
}

double StarDomain::max_inner_radius(int samples) const {
  double m = 0.0;
  for (int k = 0; k < samples; ++k) {
    m = std::max(m, inner_radius(kTwoPi * k / samples));
  }
  return m;
}

double StarDomain::min_inner_radius(int samples) const {
  double m = inner_radius(0.0);
  for (int k = 1; k < samples; ++k) {
    m = std::min(m, inner_radius(kTwoPi * k / samples));
  }
  return m;
}

PolarMesh PolarMesh::build(const StarDomain& domain, double r_outer, int n_r, int n_theta,
                           double grading) {
  if (n_r < 2 || n_theta < 4) {
    throw std::invalid_argument("PolarMesh::build: need n_r >= 2 and n_theta >= 4");
  }
  if (!(grading >= 0.0)) {
    throw std::invalid_argument("PolarMesh::build: grading must be nonnegative");
  }
  PolarMesh m;
  m.grading = grading;
  m.n_r = n_r;
  m.n_theta = n_theta;
  m.r_outer = r_outer;
  m.dxi = 1.0 / n_r;
  m.dtheta = kTwoPi / n_theta;
  m.rho.resize(n_theta);
  m.rho_prime.resize(n_theta);
  m.rho_half.resize(n_theta);
  m.rho_prime_half.resize(n_theta);
  for (int j = 0; j < n_theta; ++j) {
    const double th = m.dtheta * j;
    m.rho[j] = domain.inner_radius(th);
    m.rho_prime[j] = domain.inner_radius_derivative(th);
    m.rho_half[j] = domain.inner_radius(th + 0.5 * m.dtheta);
    m.rho_prime_half[j] = domain.inner_radius_derivative(th + 0.5 * m.dtheta);
    if (!(m.rho[j] > 0.0) || !(m.rho[j] < r_outer)) {
      throw std::domain_error("PolarMesh::build: need 0 < rho(theta) < r_outer");
    }
  }
  return m;
}

double ScalarField::max_value() const {
  double m = values.empty() ? 0.0 : values[0];
  for (double v : values) m = std::max(m, v);
  return m;
}

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::fabs(v));
  return m;
}

MetricCoeffs metric_at(double xi, double rho0, double rho1, double r_outer,
                       double grading) {
  MetricCoeffs c;
  const double L = r_outer - rho0;
  double s, sp;
  if (grading == 0.0) {
    s = xi;
    sp = 1.0;
  } else {
    const double em = std::expm1(grading);
    s = std::expm1(grading * xi) / em;
    sp = grading * std::exp(grading * xi) / em;
  }
  c.r_xi = L * sp;
  c.r = rho0 + s * L;
  c.r_theta = rho1 * (1.0 - s);
  c.sinh_r = std::sinh(c.r);
  c.cosh_r = std::cosh(c.r);
  const double sh2 = c.sinh_r * c.sinh_r;
  const double L2 = c.r_xi * c.r_xi;
  c.sqrt_g = c.r_xi * c.sinh_r;
  c.inv_xx = (c.r_theta * c.r_theta + sh2) / (L2 * sh2);
  c.inv_xt = -c.r_theta / (c.r_xi * sh2);
  c.inv_tt = 1.0 / sh2;
  return c;
}

}  // namespace cmcgraph
