#pragma once

#include <cmath>
#include <functional>
#include <vector>

namespace cmcgraph {

// Exterior domain whose excluded compact set has a star-shaped boundary
// r = inner_radius(theta) about the origin, with min inner_radius > 0.
struct StarDomain {
  std::function<double(double)> inner_radius;
  std::function<double(double)> inner_radius_derivative;  // d rho / d theta

  static StarDomain disk(double rho);
  // Polar oval rho(theta) = a b / sqrt((b cos)^2 + (a sin)^2).
  static StarDomain ellipse(double a, double b);
  // Wraps a radius function; the derivative falls back to central differences.
  static StarDomain from_function(std::function<double(double)> rho);

  // Radius of the smallest origin-centered disk containing the compact set.
  double max_inner_radius(int samples = 720) const;
  double min_inner_radius(int samples = 720) const;
};

inline constexpr double kDefaultGrading = 3.0;

// Logically rectangular mesh of the annular region between the star boundary
// and the circle r = r_outer: each angular ray's interval [rho(theta), r_outer]
// is mapped to xi in [0,1] through the graded stretch
//   r = rho + (r_outer - rho) * (e^{grading xi} - 1)/(e^{grading} - 1),
// which clusters radial levels into the boundary layer of the rotational
// profiles (grading = 0 degenerates to the affine map). Uniform in xi and
// theta, periodic in theta. Radial levels i = 0..n_r (i = 0 inner boundary,
// i = n_r outer circle), angular nodes j = 0..n_theta-1.
struct PolarMesh {
  int n_r = 0;
  int n_theta = 0;
  double r_outer = 0.0;
  double dxi = 0.0;
  double dtheta = 0.0;
  double grading = kDefaultGrading;
  std::vector<double> rho;             // rho(theta_j)
  std::vector<double> rho_prime;       // rho'(theta_j)
  std::vector<double> rho_half;        // rho(theta_j + dtheta/2)
  std::vector<double> rho_prime_half;  // rho'(theta_j + dtheta/2)

  static PolarMesh build(const StarDomain& domain, double r_outer, int n_r, int n_theta,
                         double grading = kDefaultGrading);

  int wrap(int j) const {
    j %= n_theta;
    return j < 0 ? j + n_theta : j;
  }
  double theta(int j) const { return dtheta * wrap(j); }
  double xi(int i) const { return dxi * i; }
  double stretch(double xi_val) const {
    if (grading == 0.0) return xi_val;
    return std::expm1(grading * xi_val) / std::expm1(grading);
  }
  double stretch_prime(double xi_val) const {
    if (grading == 0.0) return 1.0;
    return grading * std::exp(grading * xi_val) / std::expm1(grading);
  }
  double xi_of_stretch(double s) const {
    if (grading == 0.0) return s;
    return std::log1p(s * std::expm1(grading)) / grading;
  }
  double radius(int i, int j) const {
    const int jw = wrap(j);
    return rho[jw] + stretch(xi(i)) * (r_outer - rho[jw]);
  }
  double xi_of_radius(double r, int j) const {
    const int jw = wrap(j);
    return xi_of_stretch((r - rho[jw]) / (r_outer - rho[jw]));
  }
  int node_count() const { return (n_r + 1) * n_theta; }
  int index(int i, int j) const { return i * n_theta + wrap(j); }
};

// Nodal values of a graph function on a polar mesh.
struct ScalarField {
  PolarMesh mesh;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(PolarMesh m) : mesh(std::move(m)), values(mesh.node_count(), 0.0) {}

  double& at(int i, int j) { return values[mesh.index(i, j)]; }
  double at(int i, int j) const { return values[mesh.index(i, j)]; }

  double max_value() const;
  double max_abs() const;
};

// Metric data of the mapped coordinates (xi, theta) at a point of the ray
// with inner radius rho0 and derivative rho1: the base metric is
// dr^2 + sinh^2(r) dtheta^2 with r = rho0 + stretch(xi) (r_outer - rho0).
struct MetricCoeffs {
  double r;
  double sinh_r;
  double cosh_r;
  double sqrt_g;    // r_xi sinh(r)
  double inv_xx;    // g^{xi xi}
  double inv_xt;    // g^{xi theta}
  double inv_tt;    // g^{theta theta}
  double r_xi;      // (r_outer - rho0) stretch'(xi)
  double r_theta;   // rho1 (1 - stretch(xi))
};

MetricCoeffs metric_at(double xi, double rho0, double rho1, double r_outer,
                       double grading = kDefaultGrading);

}  // namespace cmcgraph
