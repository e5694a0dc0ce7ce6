#pragma once

#include <cmath>

namespace cmcgraph {

// Point of the base totally geodesic surface in geodesic polar coordinates
// about the origin o. r is hyperbolic arclength, theta is kept in [0, 2*pi).
struct GeodesicPolarPoint {
  double r = 0.0;
  double theta = 0.0;

  GeodesicPolarPoint() = default;
  GeodesicPolarPoint(double r_in, double theta_in);
};

// Upper half-space model point; the metric is (dx^2 + dy^2 + dz^2) / z^2.
struct HalfSpacePoint {
  double x = 0.0;
  double y = 0.0;
  double z = 1.0;

  HalfSpacePoint() = default;
  HalfSpacePoint(double x_in, double y_in, double z_in);
};

// Euclidean components of a tangent vector attached to a model point.
struct ModelVector {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline ModelVector operator+(const ModelVector& a, const ModelVector& b) {
  return {a.x + b.x, a.y + b.y, a.z + b.z};
}
inline ModelVector operator-(const ModelVector& a, const ModelVector& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}
inline ModelVector operator*(double c, const ModelVector& a) {
  return {c * a.x, c * a.y, c * a.z};
}
inline double euclidean_dot(const ModelVector& a, const ModelVector& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}
inline ModelVector euclidean_cross(const ModelVector& a, const ModelVector& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

// Half-space metric pairing of tangent vectors at a common base point.
double model_inner(const HalfSpacePoint& at, const ModelVector& a, const ModelVector& b);
double model_norm(const HalfSpacePoint& at, const ModelVector& a);

// Point of the unit upper hemisphere at geodesic distance p.r from the pole
// (0,0,1) along direction p.theta.
HalfSpacePoint to_half_space(const GeodesicPolarPoint& p);

// Inverse chart for points of the unit upper hemisphere (tolerant of small
// off-surface perturbations: distance is measured in the ambient metric).
GeodesicPolarPoint to_geodesic_polar(const HalfSpacePoint& p);

// Hyperbolic Killing flow: Euclidean scaling by e^t.
HalfSpacePoint killing_flow(const HalfSpacePoint& p, double t);

// Generator of the flow, X(p) = p.
ModelVector killing_vector(const HalfSpacePoint& p);

// |X| at base distance r from the origin: cosh(r).
double killing_norm(double r);

double hyperbolic_distance(const HalfSpacePoint& p, const HalfSpacePoint& q);

// Unit radial / angular frame of the hemisphere at (r, theta); both vectors
// have unit hyperbolic norm and are tangent to the hemisphere.
ModelVector hemisphere_radial_unit(const GeodesicPolarPoint& p);
ModelVector hemisphere_angular_unit(const GeodesicPolarPoint& p);

}  // namespace cmcgraph
