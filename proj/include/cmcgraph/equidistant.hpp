#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <vector>

#include "cmcgraph/geometry.hpp"
#include "cmcgraph/profiles.hpp"

namespace cmcgraph {

// Correspondence between the equidistant surface E_H (curvature H in (0,1))
// and the base surface through the Killing flow: E_H is the graph of the
// radial flow height w, and Killing cylinders match the E_H disk of geodesic
// radius R with the base disk of radius base_radius(R).
//
// Radii are related by integrating the hyperbolic meridian speed; anchors on
// a geometric base-radius grid are filled at construction and extended on
// demand under a lock, so a built chart can be shared across threads.
class EquidistantChart {
 public:
  explicit EquidistantChart(double H, double quad_tol = kDefaultQuadTol);

  double curvature() const { return H_; }
  double quad_tol() const { return tol_; }

  // Flow height of E_H over the base at base radius rt; negative, increasing.
  double w(double base_r) const;
  double w_derivative(double base_r) const;

  // Meridian arclength of E_H from the axis to the flow line over base radius rt.
  double eh_radius(double base_r) const;

  // radius_map: E_H geodesic radius -> base radius of the associated disk.
  double base_radius(double eh_r) const;

  // w_hat(R) = -w(base_radius(R)); positive, decreasing to zero.
  double w_hat(double eh_r) const;

  // Hyperbolic meridian speed d(eh_radius)/d(base_r): Euclidean speed over z.
  double meridian_speed(double base_r) const;

  // The point of E_H over base polar coordinates (base_radius(eh_r), theta).
  HalfSpacePoint eh_point(double eh_r, double theta) const;

 private:
  size_t locate_locked(double base_r) const;
  void extend_locked(double base_r) const;
  double eh_radius_from(size_t anchor, double base_r) const;
  double w_from(size_t anchor, double base_r) const;

  double H_;
  double tol_;
  mutable std::mutex mutex_;
  mutable std::vector<double> rt_;  // anchor base radii, rt_[0] = 0
  mutable std::vector<double> R_;   // meridian arclength at anchors
  mutable std::vector<double> wv_;  // flow height at anchors
};

// Foot of the Killing flow line through p on the base hemisphere: p / |p|.
HalfSpacePoint project_to_base(const HalfSpacePoint& p);

using EhFunction = std::function<double(const HalfSpacePoint&)>;
using BaseFunction = std::function<double(const GeodesicPolarPoint&)>;

// u on a region of E_H  ->  u_tilde(x~) = u(flow_w(x~)) + w(x~) on the base;
// both functions describe the same Killing graph. The chart must outlive the
// returned evaluator.
BaseFunction transform_to_base(EhFunction u, const EquidistantChart& chart);

// grad u_tilde(x~) = <grad u, X> grad w + [D2 phi_w]^{-1} proj(grad u) + grad w,
// all vectors in half-space model components.
ModelVector gradient_transform(const ModelVector& grad_u, const HalfSpacePoint& x,
                               const EquidistantChart& chart);

// Inverse of gradient_transform: recovers grad u (tangent to E_H) at the E_H
// point over the given base point.
ModelVector gradient_transform_inverse(const ModelVector& grad_u_tilde,
                                       const GeodesicPolarPoint& base_point,
                                       const EquidistantChart& chart);

// Hyperbolic-unit normal of E_H at the point over base_point, oriented so
// that <normal, X> > 0.
ModelVector eh_normal(const GeodesicPolarPoint& base_point, const EquidistantChart& chart);

// Radial barrier f_R on E_H minus the disk of radius R: the vertical-tangency
// profile over the associated base disk, lifted to E_H and shifted so it
// vanishes on the disk boundary. f_R = lift_component - shift_component.
class EquidistantBarrier {
 public:
  EquidistantBarrier(double eh_boundary_radius, std::shared_ptr<const EquidistantChart> chart,
                     double quad_tol = kDefaultQuadTol);

  double value(double eh_r) const;
  double radial_derivative(double eh_r) const;
  double lift_component(double eh_r) const;   // v1, in [0, B(H)]
  double shift_component(double eh_r) const;  // v2, in [0, B(H)]
  double boundary_radius() const { return eh_boundary_radius_; }
  double base_boundary_radius() const { return base_boundary_radius_; }

 private:
  std::shared_ptr<const EquidistantChart> chart_;
  double eh_boundary_radius_;
  double base_boundary_radius_;
  double w_at_boundary_;
  RadialProfile profile_;
};

EquidistantBarrier barrier_f_R(double eh_boundary_radius,
                               std::shared_ptr<const EquidistantChart> chart,
                               double quad_tol = kDefaultQuadTol);

}  // namespace cmcgraph
