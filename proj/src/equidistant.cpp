#include "cmcgraph/equidistant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cmcgraph/quadrature.hpp"

namespace cmcgraph {

namespace {
constexpr double kAnchorStart = 0.0625;
constexpr double kAnchorRatio = 1.25;
}  // namespace

EquidistantChart::EquidistantChart(double H, double quad_tol) : H_(H), tol_(quad_tol) {
  if (!(H > 0.0 && H < 1.0)) {
    throw std::domain_error("EquidistantChart: H must lie in (0, 1)");
  }
  rt_.push_back(0.0);
  double a = kAnchorStart;
  while (a < 4.0) {
    rt_.push_back(a);
    a *= kAnchorRatio;
  }
  rt_.push_back(a);

  const size_t n = rt_.size();
  R_.assign(n, 0.0);
  for (size_t k = 1; k < n; ++k) {
    R_[k] = eh_radius_from(k - 1, rt_[k]);
  }
  wv_.assign(n, 0.0);
  wv_[n - 1] = equidistant_height_w(rt_[n - 1], H_, tol_);
  for (size_t k = n - 1; k > 0; --k) {
    const double seg = integrate([this](double t) { return w_derivative(t); },
                                 rt_[k - 1], rt_[k], tol_, tol_ * 1e-4).value;
    wv_[k - 1] = wv_[k] - seg;
  }
}

double EquidistantChart::w_derivative(double base_r) const {
  return equidistant_height_w_derivative(base_r, H_);
}

double EquidistantChart::meridian_speed(double base_r) const {
  // Meridian c(r) = e^{w(r)} q(r): Euclidean speed e^w sqrt(w'^2 + sech^2 r),
  // z = e^w sech r; the conformal factors cancel.
  const double wp = w_derivative(base_r);
  const double se = 1.0 / std::cosh(base_r);
  return std::sqrt(wp * wp + se * se) * std::cosh(base_r);
}

double EquidistantChart::eh_radius_from(size_t anchor, double base_r) const {
  if (base_r == rt_[anchor]) return R_[anchor];
  return R_[anchor] + integrate([this](double t) { return meridian_speed(t); },
                                rt_[anchor], base_r, tol_, tol_ * 1e-4).value;
}

double EquidistantChart::w_from(size_t anchor, double base_r) const {
  if (base_r == rt_[anchor]) return wv_[anchor];
  return wv_[anchor] + integrate([this](double t) { return w_derivative(t); },
                                 rt_[anchor], base_r, tol_, tol_ * 1e-4).value;
}

void EquidistantChart::extend_locked(double base_r) const {
  while (rt_.back() < base_r) {
    const double next = rt_.back() * kAnchorRatio;
    const size_t k = rt_.size() - 1;
    rt_.push_back(next);
    R_.push_back(eh_radius_from(k, next));
    wv_.push_back(w_from(k, next));
  }
}

size_t EquidistantChart::locate_locked(double base_r) const {
  extend_locked(base_r);
  const auto it = std::upper_bound(rt_.begin(), rt_.end(), base_r);
  return static_cast<size_t>(it - rt_.begin()) - 1;
}

double EquidistantChart::w(double base_r) const {
  if (!(base_r >= 0.0)) throw std::domain_error("EquidistantChart::w: negative radius");
  std::lock_guard<std::mutex> lock(mutex_);
  return w_from(locate_locked(base_r), base_r);
}

double EquidistantChart::eh_radius(double base_r) const {
  if (!(base_r >= 0.0)) throw std::domain_error("EquidistantChart::eh_radius: negative radius");
  std::lock_guard<std::mutex> lock(mutex_);
  return eh_radius_from(locate_locked(base_r), base_r);
}

double EquidistantChart::base_radius(double eh_r) const {
  if (!(eh_r >= 0.0)) throw std::domain_error("EquidistantChart::base_radius: negative radius");
  if (eh_r == 0.0) return 0.0;

  size_t k;
  double lo, hi, R_lo;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    // speed >= 1, so anchors out to base radius eh_r always bracket it
    extend_locked(eh_r);
    const auto it = std::upper_bound(R_.begin(), R_.end(), eh_r);
    if (it == R_.begin()) return 0.0;
    k = static_cast<size_t>(it - R_.begin()) - 1;
    if (k + 1 >= rt_.size()) {
      extend_locked(rt_.back() * kAnchorRatio);
    }
    lo = rt_[k];
    hi = rt_[k + 1];
    R_lo = R_[k];
  }

  // monotone bisection of R(rt) = R_lo + arclength on [lo, rt]
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double Rm = (mid == lo) ? R_lo
                                  : R_lo + integrate([this](double t) { return meridian_speed(t); },
                                                     lo, mid, tol_, tol_ * 1e-4).value;
    if (std::fabs(Rm - eh_r) <= 1e-13 * (1.0 + eh_r) || hi - lo < 1e-14 * (1.0 + hi)) {
      return mid;
    }
    if (Rm < eh_r) {
      lo = mid;
      R_lo = Rm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double EquidistantChart::w_hat(double eh_r) const { return -w(base_radius(eh_r)); }

HalfSpacePoint EquidistantChart::eh_point(double eh_r, double theta) const {
  const double rt = base_radius(eh_r);
  return killing_flow(to_half_space(GeodesicPolarPoint(rt, theta)), w(rt));
}

HalfSpacePoint project_to_base(const HalfSpacePoint& p) {
  const double n = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
  return HalfSpacePoint(p.x / n, p.y / n, p.z / n);
}

BaseFunction transform_to_base(EhFunction u, const EquidistantChart& chart) {
  return [u = std::move(u), &chart](const GeodesicPolarPoint& bp) {
    const double wv = chart.w(bp.r);
    const HalfSpacePoint x = killing_flow(to_half_space(bp), wv);
    return u(x) + wv;
  };
}

ModelVector gradient_transform(const ModelVector& grad_u, const HalfSpacePoint& x,
                               const EquidistantChart& chart) {
  const GeodesicPolarPoint bp = to_geodesic_polar(project_to_base(x));
  const double wv = chart.w(bp.r);
  const ModelVector grad_w = chart.w_derivative(bp.r) * hemisphere_radial_unit(bp);
  const ModelVector X = killing_vector(x);
  const double xnorm2 = model_inner(x, X, X);
  const double a = model_inner(x, grad_u, X);
  const ModelVector proj = grad_u - (a / xnorm2) * X;
  return (1.0 + a) * grad_w + std::exp(-wv) * proj;
}

ModelVector eh_normal(const GeodesicPolarPoint& base_point, const EquidistantChart& chart) {
  const double wv = chart.w(base_point.r);
  const HalfSpacePoint x = killing_flow(to_half_space(base_point), wv);
  const ModelVector X = killing_vector(x);
  if (base_point.r < 1e-8) {
    // on the axis the flow line is the geodesic orthogonal to E_H
    return (1.0 / model_norm(x, X)) * X;
  }
  const double ew = std::exp(wv);
  const ModelVector q_rad = hemisphere_radial_unit(base_point);
  const ModelVector q_pos = {x.x / ew, x.y / ew, x.z / ew};  // base point as a vector
  const ModelVector t_meridian = ew * (chart.w_derivative(base_point.r) * q_pos + q_rad);
  const ModelVector t_angular = ew * hemisphere_angular_unit(base_point);
  ModelVector nu = euclidean_cross(t_meridian, t_angular);
  const double orient = model_inner(x, nu, X);
  const double scale = (orient >= 0.0 ? 1.0 : -1.0) / model_norm(x, nu);
  return scale * nu;
}

ModelVector gradient_transform_inverse(const ModelVector& grad_u_tilde,
                                       const GeodesicPolarPoint& base_point,
                                       const EquidistantChart& chart) {
  const double wv = chart.w(base_point.r);
  const HalfSpacePoint x = killing_flow(to_half_space(base_point), wv);
  const ModelVector grad_w = chart.w_derivative(base_point.r) * hemisphere_radial_unit(base_point);
  const ModelVector V = grad_u_tilde - grad_w;
  const ModelVector nu = eh_normal(base_point, chart);
  const ModelVector X = killing_vector(x);
  const double xnorm2 = model_inner(x, X, X);
  const double ew = std::exp(wv);
  // G = e^w (V - a grad_w) + a X/|X|^2 must be tangent to E_H: <G, nu> = 0
  const double denom = ew * model_inner(x, grad_w, nu) - model_inner(x, X, nu) / xnorm2;
  if (std::fabs(denom) < 1e-300) {
    throw std::runtime_error("gradient_transform_inverse: degenerate frame");
  }
  const double a = ew * model_inner(x, V, nu) / denom;
  return ew * (V - a * grad_w) + (a / xnorm2) * X;
}

EquidistantBarrier::EquidistantBarrier(double eh_boundary_radius,
                                       std::shared_ptr<const EquidistantChart> chart,
                                       double quad_tol)
    : chart_(std::move(chart)),
      eh_boundary_radius_(eh_boundary_radius),
      base_boundary_radius_(chart_->base_radius(eh_boundary_radius)),
      w_at_boundary_(chart_->w(base_boundary_radius_)),
      profile_(CmcParams(base_boundary_radius_, Slope::infinite(), chart_->curvature()),
               quad_tol) {
  if (!(eh_boundary_radius > 0.0)) {
    throw std::domain_error("EquidistantBarrier: boundary radius must be positive");
  }
}

double EquidistantBarrier::value(double eh_r) const {
  const double rt = chart_->base_radius(eh_r);
  return profile_.value(rt) + w_at_boundary_ - chart_->w(rt);
}

double EquidistantBarrier::radial_derivative(double eh_r) const {
  const double rt = chart_->base_radius(eh_r);
  return (profile_.derivative(rt) - chart_->w_derivative(rt)) / chart_->meridian_speed(rt);
}

double EquidistantBarrier::lift_component(double eh_r) const {
  return profile_.value(chart_->base_radius(eh_r));
}

double EquidistantBarrier::shift_component(double eh_r) const {
  return chart_->w(chart_->base_radius(eh_r)) - w_at_boundary_;
}

EquidistantBarrier barrier_f_R(double eh_boundary_radius,
                               std::shared_ptr<const EquidistantChart> chart,
                               double quad_tol) {
  return EquidistantBarrier(eh_boundary_radius, std::move(chart), quad_tol);
}

}  // namespace cmcgraph
