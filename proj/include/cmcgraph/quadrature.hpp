#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace cmcgraph {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int panels = 0;
};

namespace quad_detail {

// Gauss-Kronrod 7-15 nodes and weights (abscissae for the positive half,
// node 7 is the interval midpoint).
inline constexpr double kXgk[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
    0.7415311855993945, 0.5860872354676911, 0.4058451513773972,
    0.2077849550078985, 0.0};
inline constexpr double kWgk[8] = {
    0.0229353220105292, 0.0630920926299786, 0.1047900103222502,
    0.1406532597155259, 0.1690047266392679, 0.1903505780647854,
    0.2044329400752989, 0.2094821410847278};
inline constexpr double kWg[4] = {0.1294849661688697, 0.2797053914892767,
                                  0.3818300505051189, 0.4179591836734694};

struct Panel {
  double a, b;
  double value;
  double error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

// One G7/K15 evaluation on [a, b] with the QUADPACK error heuristic.
template <typename F>
Panel evaluate(F&& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double center = 0.5 * (a + b);

  double fv[15];
  const double fc = f(center);
  fv[14] = fc;
  for (int k = 0; k < 7; ++k) {
    fv[k] = f(center - half * kXgk[k]);
    fv[7 + k] = f(center + half * kXgk[k]);
  }

  double resk = kWgk[7] * fc;
  double resabs = kWgk[7] * std::fabs(fc);
  for (int k = 0; k < 7; ++k) {
    resk += kWgk[k] * (fv[k] + fv[7 + k]);
    resabs += kWgk[k] * (std::fabs(fv[k]) + std::fabs(fv[7 + k]));
  }
  double resg = kWg[3] * fc;
  for (int k = 0; k < 3; ++k) {
    resg += kWg[k] * (fv[2 * k + 1] + fv[7 + 2 * k + 1]);
  }

  const double mean = 0.5 * resk;
  double resasc = kWgk[7] * std::fabs(fc - mean);
  for (int k = 0; k < 7; ++k) {
    resasc += kWgk[k] * (std::fabs(fv[k] - mean) + std::fabs(fv[7 + k] - mean));
  }

  Panel p;
  p.a = a;
  p.b = b;
  p.value = resk * half;
  double err = std::fabs((resk - resg) * half);
  resasc *= std::fabs(half);
  if (resasc != 0.0 && err != 0.0) {
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  }
  const double round_floor = 50.0 * std::numeric_limits<double>::epsilon() * resabs * std::fabs(half);
  p.error = std::max(err, round_floor);
  return p;
}

}  // namespace quad_detail

// Globally adaptive Gauss-Kronrod integration of f over [a, b]; bisects the
// worst panel until the summed error estimate meets
// max(abs_tol, rel_tol * |integral|). Throws std::runtime_error when the
// tolerance cannot be met within max_panels.
template <typename F>
QuadratureResult integrate(F&& f, double a, double b, double rel_tol,
                           double abs_tol = 0.0, int max_panels = 4000) {
  QuadratureResult out;
  if (a == b) return out;
  if (!(rel_tol > 0.0) && !(abs_tol > 0.0)) {
    throw std::invalid_argument("integrate: no positive tolerance given");
  }

  std::vector<quad_detail::Panel> heap;
  heap.push_back(quad_detail::evaluate(f, a, b));
  double total = heap.front().value;
  double total_err = heap.front().error;

  const double min_width = 1e-14 * (std::fabs(a) + std::fabs(b) + 1.0);
  while (total_err > std::max(abs_tol, rel_tol * std::fabs(total))) {
    std::pop_heap(heap.begin(), heap.end());
    quad_detail::Panel worst = heap.back();
    heap.pop_back();

    if (worst.b - worst.a < min_width ||
        static_cast<int>(heap.size()) + 2 > max_panels) {
      throw std::runtime_error("integrate: adaptive quadrature failed to converge");
    }

    const double mid = 0.5 * (worst.a + worst.b);
    quad_detail::Panel left = quad_detail::evaluate(f, worst.a, mid);
    quad_detail::Panel right = quad_detail::evaluate(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end());
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end());
  }

  out.value = total;
  out.error_estimate = total_err;
  out.panels = static_cast<int>(heap.size());
  return out;
}

}  // namespace cmcgraph
