#include "cmcgraph/geometry.hpp"

#include <numbers>
#include <stdexcept>

namespace cmcgraph {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double normalize_angle(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  if (t >= kTwoPi) t = 0.0;
  return t;
}
}  // namespace

GeodesicPolarPoint::GeodesicPolarPoint(double r_in, double theta_in)
    : r(r_in), theta(normalize_angle(theta_in)) {
  if (!(r_in >= 0.0)) {
    throw std::domain_error("GeodesicPolarPoint: r must be nonnegative");
  }
}

HalfSpacePoint::HalfSpacePoint(double x_in, double y_in, double z_in)
    : x(x_in), y(y_in), z(z_in) {
  if (!(z_in > 0.0)) {
    throw std::domain_error("HalfSpacePoint: z must be positive");
  }
}

double model_inner(const HalfSpacePoint& at, const ModelVector& a, const ModelVector& b) {
  return euclidean_dot(a, b) / (at.z * at.z);
}

double model_norm(const HalfSpacePoint& at, const ModelVector& a) {
  return std::sqrt(euclidean_dot(a, a)) / at.z;
}

HalfSpacePoint to_half_space(const GeodesicPolarPoint& p) {
  // Along a hemisphere great circle through the pole, arclength r corresponds
  // to the Euclidean polar angle phi with sin(phi) = tanh(r).
  const double t = std::tanh(p.r);
  const double se = 1.0 / std::cosh(p.r);
  return HalfSpacePoint(t * std::cos(p.theta), t * std::sin(p.theta), se);
}

GeodesicPolarPoint to_geodesic_polar(const HalfSpacePoint& p) {
  const double r = hyperbolic_distance(p, HalfSpacePoint(0.0, 0.0, 1.0));
  if (p.x == 0.0 && p.y == 0.0) return GeodesicPolarPoint(r, 0.0);
  return GeodesicPolarPoint(r, std::atan2(p.y, p.x));
}

HalfSpacePoint killing_flow(const HalfSpacePoint& p, double t) {
  const double c = std::exp(t);
  return HalfSpacePoint(c * p.x, c * p.y, c * p.z);
}

ModelVector killing_vector(const HalfSpacePoint& p) { return {p.x, p.y, p.z}; }

double killing_norm(double r) {
  if (!(r >= 0.0)) {
    throw std::domain_error("killing_norm: r must be nonnegative");
  }
  return std::cosh(r);
}

double hyperbolic_distance(const HalfSpacePoint& p, const HalfSpacePoint& q) {
  const double dx = p.x - q.x;
  const double dy = p.y - q.y;
  const double dz = p.z - q.z;
  // cosh d = 1 + |p-q|^2 / (2 p.z q.z), evaluated as 2 asinh of the half
  // chord so small separations keep full precision.
  const double s = (dx * dx + dy * dy + dz * dz) / (4.0 * p.z * q.z);
  return 2.0 * std::asinh(std::sqrt(s));
}

ModelVector hemisphere_radial_unit(const GeodesicPolarPoint& p) {
  const double se = 1.0 / std::cosh(p.r);
  const double ta = std::tanh(p.r);
  return {se * se * std::cos(p.theta), se * se * std::sin(p.theta), -se * ta};
}

ModelVector hemisphere_angular_unit(const GeodesicPolarPoint& p) {
  const double se = 1.0 / std::cosh(p.r);
  return {-se * std::sin(p.theta), se * std::cos(p.theta), 0.0};
}

}  // namespace cmcgraph
