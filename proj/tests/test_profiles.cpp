#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

#include "cmcgraph/profiles.hpp"
#include "oracles.hpp"

using namespace cmcgraph;

namespace {
constexpr double kPi4 = std::numbers::pi / 4.0;
}

TEST_CASE("slope type") {
  CHECK(Slope::finite(2.0).value() == 2.0);
  CHECK(Slope::infinite().is_infinite());
  CHECK_THROWS_AS(Slope::finite(-1.0), std::domain_error);
  CHECK_THROWS_AS(Slope::finite(std::nan("")), std::domain_error);
  CHECK_THROWS_AS(Slope::infinite().value(), std::logic_error);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(CmcParams(0.0, Slope::finite(1.0), 0.0), std::domain_error);
  CHECK_THROWS_AS(CmcParams(-1.0, Slope::finite(1.0), 0.0), std::domain_error);
  CHECK_THROWS_AS(CmcParams(1.0, Slope::finite(1.0), 1.0), std::domain_error);
  CHECK_THROWS_AS(CmcParams(1.0, Slope::finite(1.0), -1.0), std::domain_error);
  CHECK_THROWS_AS(coefficient_C(-1.0, Slope::finite(0.0), 0.0), std::domain_error);
}

TEST_CASE("coefficient C special slopes") {
  for (double rho : {0.5, 1.0, 2.0}) {
    for (double H : {-0.5, 0.0, 0.7}) {
      CHECK(coefficient_C(rho, Slope::finite(0.0), H) ==
            doctest::Approx(-H * std::cosh(2.0 * rho)).epsilon(1e-14));
      CHECK(coefficient_C(rho, Slope::infinite(), H) ==
            doctest::Approx(-H * std::cosh(2.0 * rho) + std::sinh(2.0 * rho)).epsilon(1e-14));
    }
  }
}

TEST_CASE("coefficient C against long-double evaluation") {
  // C(1,1,0) = sinh(2) cosh(1) / sqrt(1 + cosh^2(1))
  const long double expected =
      std::sinh(2.0L) * std::cosh(1.0L) / std::sqrt(1.0L + std::cosh(1.0L) * std::cosh(1.0L));
  CHECK(std::fabs(coefficient_C(1.0, Slope::finite(1.0), 0.0) -
                  static_cast<double>(expected)) < 1e-14);
}

TEST_CASE("slope function g") {
  // vertical tangency: g(rho) = 1 exactly
  for (double rho : {0.5, 1.0, 3.0}) {
    for (double H : {0.0, 0.4, 0.9}) {
      CHECK(slope_g(rho, CmcParams(rho, Slope::infinite(), H)) == 1.0);
    }
  }
  // s = 0, H = 0: g vanishes identically
  const CmcParams flat(1.0, Slope::finite(0.0), 0.0);
  for (double t : {1.0, 1.5, 4.0, 9.0}) {
    CHECK(std::fabs(slope_g(t, flat)) < 1e-15);
  }
  // finite s: g(rho) = cosh(rho) s / sqrt(1 + cosh^2(rho) s^2)
  for (double rho : {0.5, 2.0}) {
    for (double s : {0.3, 1.0, 5.0}) {
      const double cs = std::cosh(rho) * s;
      CHECK(slope_g(rho, CmcParams(rho, Slope::finite(s), 0.2)) ==
            doctest::Approx(cs / std::sqrt(1.0 + cs * cs)).epsilon(1e-13));
    }
  }
  CHECK_THROWS_AS(slope_g(0.5, CmcParams(1.0, Slope::finite(1.0), 0.0)), std::domain_error);
}

TEST_CASE("ode residual of g (central differences)") {
  const double h = 1e-5;
  for (double H : {0.0, 0.5}) {
    for (int si = 0; si < 2; ++si) {
      const Slope s = si == 0 ? Slope::finite(1.5) : Slope::infinite();
      const CmcParams p(1.0, s, H);
      for (int k = 1; k <= 20; ++k) {
        const double t = 1.0 + 0.4 * k;
        const double gp = oracles::central_diff([&](double x) { return slope_g(x, p); }, t, h);
        const double resid =
            gp + slope_g(t, p) * (1.0 / std::tanh(t) + std::tanh(t)) - 2.0 * H;
        CHECK(std::fabs(resid) < 1e-8);
      }
    }
  }
}

TEST_CASE("profile value at the inner boundary and for the flat profile") {
  const CmcParams p(1.0, Slope::infinite(), 0.3);
  CHECK(profile_value(1.0, p) == 0.0);
  const CmcParams flat(0.7, Slope::finite(0.0), 0.0);
  for (double r : {0.7, 1.0, 3.0, 8.0}) {
    CHECK(std::fabs(profile_value(r, flat)) < 1e-13);
  }
  CHECK_THROWS_AS(profile_value(0.5, p), std::domain_error);
}

TEST_CASE("profile value against the brute-force midpoint oracle") {
  // H = 0, s = inf, rho = 1: f(3) (the substitution removes the endpoint
  // singularity; 1e6 midpoint subintervals)
  const double lib = profile_value(3.0, CmcParams(1.0, Slope::infinite(), 0.0));
  const double brute = oracles::profile_value(3.0, 1.0, 0.0, 0.0, true);
  CHECK(std::fabs(lib - brute) < 1e-8);
  // frozen high-precision value for regression
  CHECK(lib == doctest::Approx(0.3936798694001858).epsilon(1e-11));
  // a finite-slope case
  const double lib2 = profile_value(2.0, CmcParams(1.0, Slope::finite(1.0), 0.0));
  const double brute2 = oracles::profile_value(2.0, 1.0, 1.0, 0.0, false);
  CHECK(std::fabs(lib2 - brute2) < 1e-8);
  CHECK(lib2 == doctest::Approx(0.2233263983141046).epsilon(1e-11));
}

TEST_CASE("profile derivative boundary value and decay") {
  for (double rho : {0.5, 1.0, 2.0}) {
    for (double s : {0.0, 1.0, 3.0}) {
      for (double H : {0.0, 0.4, 0.8}) {
        CHECK(std::fabs(profile_derivative(rho, CmcParams(rho, Slope::finite(s), H)) - s) <
              1e-10);
      }
    }
  }
  CHECK(std::isinf(profile_derivative(1.0, CmcParams(1.0, Slope::infinite(), 0.0))));
  for (double H : {0.0, 0.5}) {
    CHECK(profile_derivative(20.0, CmcParams(1.0, Slope::infinite(), H)) < 1e-8);
  }
  CHECK_THROWS_AS(profile_derivative(0.2, CmcParams(1.0, Slope::finite(1.0), 0.0)),
                  std::domain_error);
}

TEST_CASE("profile derivative matches central differences of the value") {
  const CmcParams p(1.0, Slope::finite(1.0), 0.3);
  for (double r : {1.4, 2.0, 3.5}) {
    const double fd =
        oracles::central_diff([&](double x) { return profile_value(x, p); }, r, 1e-5);
    CHECK(std::fabs(fd - profile_derivative(r, p)) < 1e-6);
  }
}

TEST_CASE("profile is nondecreasing in r") {
  for (double H : {0.0, 0.5}) {
    for (int si = 0; si < 3; ++si) {
      const Slope s = si == 2 ? Slope::infinite() : Slope::finite(si * 1.0);
      const RadialProfile prof(CmcParams(1.0, s, H));
      double prev = 0.0;
      for (int k = 1; k <= 30; ++k) {
        const double v = prof.value(1.0 + 0.3 * k);
        CHECK(v >= prev - 1e-13);
        prev = v;
      }
    }
  }
}

TEST_CASE("asymptotic height: bounds and flat case") {
  // H = 0, s = inf stays below pi/4 for every rho
  for (double rho : {0.3, 0.5, 1.0, 2.0, 5.0}) {
    const double a = asymptotic_height(CmcParams(rho, Slope::infinite(), 0.0));
    CHECK(a < kPi4);
    CHECK(a > 0.0);
  }
  // bounded by B(H)
  for (double rho : {0.5, 1.0, 2.0, 5.0}) {
    for (double H : {0.0, 0.3, 0.6}) {
      CHECK(asymptotic_height(CmcParams(rho, Slope::infinite(), H)) <=
            height_bound_B(H) + 1e-10);
    }
  }
  CHECK(asymptotic_height(CmcParams(1.0, Slope::finite(0.0), 0.0)) == 0.0);
  CHECK_THROWS_AS(asymptotic_height(CmcParams(1.0, Slope::infinite(), -0.2)),
                  std::domain_error);
  // frozen value: lim v_{1,inf,0} = 0.3942758130784184
  CHECK(asymptotic_height(CmcParams(1.0, Slope::infinite(), 0.0)) ==
        doctest::Approx(0.3942758130784184).epsilon(1e-9));
}

TEST_CASE("height bound B") {
  const double B0 = height_bound_B(0.0, 1e-10);
  CHECK(B0 < kPi4);
  CHECK(std::fabs(B0 - oracles::height_bound_B(0.0)) < 1e-8);
  CHECK(B0 == doctest::Approx(0.7119586597782638).epsilon(1e-10));
  double prev = B0;
  for (double H : {0.2, 0.5, 0.8}) {
    const double B = height_bound_B(H);
    CHECK(B > prev);
    prev = B;
  }
  CHECK(height_bound_B(0.999) > height_bound_B(0.9) + 1.0);
  CHECK_THROWS_AS(height_bound_B(1.0), std::domain_error);
  CHECK_THROWS_AS(height_bound_B(-0.1), std::domain_error);
}

TEST_CASE("equidistant height w") {
  // negative, increasing, to zero; closed-form oracle w = -asinh(H sech r / sqrt(1-H^2))
  for (double H : {0.2, 0.5, 0.9}) {
    double prev = -1e9;
    for (double r : {0.0, 0.5, 1.0, 2.0, 5.0}) {
      const double w = equidistant_height_w(r, H);
      CHECK(w < 0.0);
      CHECK(w > prev);
      CHECK(std::fabs(w - oracles::equidistant_w(r, H)) < 1e-10);
      prev = w;
    }
    CHECK(std::fabs(equidistant_height_w(12.0, H)) < 1e-4);
    // |w(0)| = atanh(H)
    CHECK(std::fabs(equidistant_height_w(0.0, H) + std::atanh(H)) < 1e-10);
  }
  // increasing dependence on H and divergence toward H = 1
  double prev = 0.0;
  for (double H : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const double mag = -equidistant_height_w(0.0, H);
    CHECK(mag > prev);
    prev = mag;
  }
  CHECK(-equidistant_height_w(0.0, 0.999) > -equidistant_height_w(0.0, 0.9) + 1.0);
  // H -> 0 limit
  CHECK(std::fabs(equidistant_height_w(1.0, 1e-12)) < 1e-11);
  CHECK(equidistant_height_w(1.0, 0.0) == 0.0);
  // derivative is the integrand
  const double h = 1e-6;
  const double fd = (equidistant_height_w(1.0 + h, 0.5) - equidistant_height_w(1.0 - h, 0.5)) /
                    (2.0 * h);
  CHECK(std::fabs(fd - equidistant_height_w_derivative(1.0, 0.5)) < 1e-9);
}

TEST_CASE("catenoid profile") {
  const double lib = catenoid_h2r(1.0, 1.0);
  CHECK(std::fabs(lib - oracles::catenoid(1.0, 1.0)) < 1e-8);
  CHECK(lib == doctest::Approx(1.0386158808948349).epsilon(1e-10));
  CHECK(catenoid_h2r(1e-8, 1.0) < 2e-4);
  for (double rho : {0.5, 1.0, 2.0}) {
    const double lim = catenoid_h2r_limit(rho);
    CHECK(lim < std::numbers::pi / 2.0);
    CHECK(lim > catenoid_h2r(5.0, rho));
  }
  CHECK(catenoid_h2r_limit(1.0) == doctest::Approx(1.3644961913128757).epsilon(1e-9));
  CHECK_THROWS_AS(catenoid_h2r(0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(catenoid_h2r(1.0, -1.0), std::domain_error);
  CHECK_THROWS_AS(catenoid_h2r_limit(0.0), std::domain_error);
}

TEST_CASE("cached profile agrees with direct integration on unordered queries") {
  const CmcParams p(1.0, Slope::infinite(), 0.4);
  const RadialProfile prof(p);
  const double queries[] = {4.0, 1.5, 2.7, 1.2, 6.0, 2.7, 5.1, 1.01};
  for (double r : queries) {
    const double cached = prof.value(r);
    CHECK(std::fabs(cached - profile_value(r, p)) < 1e-11);
    CHECK(prof.value(r) == cached);
  }
}

TEST_CASE("profile cache tolerates concurrent readers") {
  const CmcParams p(1.0, Slope::infinite(), 0.3);
  const RadialProfile prof(p);
  std::vector<double> expected(40);
  for (int k = 0; k < 40; ++k) {
    expected[k] = profile_value(1.0 + 0.2 * (k + 1), p);
  }
  std::vector<std::thread> workers;
  std::atomic<int> mismatches{0};
  for (int w = 0; w < 4; ++w) {
    workers.emplace_back([&, w]() {
      for (int rep = 0; rep < 3; ++rep) {
        for (int k = 0; k < 40; ++k) {
          const int idx = (w * 7 + k * 13) % 40;  // interleaved orders
          const double v = prof.value(1.0 + 0.2 * (idx + 1));
          if (std::fabs(v - expected[idx]) > 1e-10) ++mismatches;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  CHECK(mismatches.load() == 0);
}

TEST_CASE("monotone dependence of the vertical-tangency slope on rho") {
  // x_rho(t) = g_{rho,inf,H}(rho + t) increases in rho
  const double drho = 1e-4;
  for (double H : {0.0, 0.5, 0.9}) {
    for (double rho : {0.5, 1.0, 2.0}) {
      for (int k = 0; k < 8; ++k) {
        const double t = 0.1 + 0.7 * k;
        const double a = slope_g(rho + t, CmcParams(rho, Slope::infinite(), H));
        const double b = slope_g(rho + drho + t, CmcParams(rho + drho, Slope::infinite(), H));
        CHECK(b > a);
      }
    }
  }
}

TEST_CASE("equidistant integrand comparison") {
  // H (coth 2t - cosech 2t) = H tanh t <= H + (1-H) e^{-2t}
  for (double H : {0.1, 0.5, 0.9}) {
    for (int k = 1; k <= 100; ++k) {
      const double t = 0.08 * k;
      CHECK(H * std::tanh(t) <= H + (1.0 - H) * std::exp(-2.0 * t));
    }
  }
}
