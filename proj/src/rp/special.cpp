#include "rp/special.hpp"

#include <cmath>
#include <limits>

#include <boost/math/special_functions/erf.hpp>

#include "common/error.hpp"
#include "common/quadrature.hpp"

namespace rmtlab::special {

namespace {

constexpr double kSqrtPi = 1.7724538509055160273;

double ei_series(double x) {
  double term = 1.0;
  double sum = 0.0;
  for (int n = 1; n < 500; ++n) {
    term *= x / n;
    double add = term / n;
    sum += add;
    if (std::fabs(add) < 1e-17 * std::fabs(sum)) break;
  }
  return kEulerGamma + std::log(std::fabs(x)) + sum;
}

double ei_asymptotic(double x) {
  if (x > 709.0) return std::numeric_limits<double>::infinity();
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    double next = term * k / x;
    if (next > term) break;
    term = next;
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return std::exp(x) / x * sum;
}

}  // namespace

double erfc(double x) { return std::erfc(x); }

double erfcx(double x) {
  if (x < 4.0) return std::exp(x * x) * std::erfc(x);
  // Continued fraction, evaluated backwards with a fixed depth that is
  // ample for x >= 4.
  double f = 0.0;
  for (int k = 60; k >= 1; --k) f = (0.5 * k) / (x + f);
  return 1.0 / (kSqrtPi * (x + f));
}

double expint_ei(double x) {
  require(x != 0.0, ErrorCode::InvalidArgument, "expint_ei: argument must be nonzero");
  if (x < 0.0) return std::expint(x);
  if (x <= 40.0) return ei_series(x);
  return ei_asymptotic(x);
}

double hyp2f2_half(double x) {
  if (x <= 50.0) {
    // t_n = x^n / ((2n+1) (3/2)_n)
    double term = 1.0;
    double sum = 1.0;
    for (int n = 0; n < 2000; ++n) {
      term *= x * (2.0 * n + 1.0) / ((2.0 * n + 3.0) * (n + 1.5));
      sum += term;
      if (std::fabs(term) < 1e-14 * std::fabs(sum)) return sum;
    }
    fail(ErrorCode::Numeric, "hyp2f2_half: series did not converge");
  }
  if (x > 700.0) return std::numeric_limits<double>::infinity();
  // int_0^1 1F1(1; 3/2; x t^2) dt with 1F1(1; 3/2; y) = sqrt(pi) e^y erf(sqrt y) / (2 sqrt y)
  double sx = std::sqrt(x);
  auto f = [sx, x](double t) {
    if (t < 1e-8) return 1.0;
    double y = sx * t;
    return kSqrtPi * std::exp(x * t * t) * std::erf(y) / (2.0 * y);
  };
  return quad::integrate(f, 0.0, 1.0, 0.0, 1e-13, 20, "hyp2f2_half").value;
}

double bessel_i1e(double x) {
  double ax = std::fabs(x);
  double r;
  if (ax < 1e-300) {
    r = 0.5 * ax;
  } else if (ax <= 700.0) {
    r = std::cyl_bessel_i(1.0, ax) * std::exp(-ax);
  } else {
    // I_nu(x) ~ e^x / sqrt(2 pi x) * sum_k (-1)^k a_k(nu) / x^k, mu = 4 nu^2 = 4
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 30; ++k) {
      double m = 2.0 * k - 1.0;
      term *= -(4.0 - m * m) / (8.0 * k * ax);
      sum += term;
      if (std::fabs(term) < 1e-17) break;
    }
    r = sum / std::sqrt(2.0 * M_PI * ax);
  }
  return x < 0.0 ? -r : r;
}

double bessel_i1(double x) {
  double ax = std::fabs(x);
  if (ax > 700.0) return x > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  if (ax < 1e-300) return 0.5 * x;
  double r = std::cyl_bessel_i(1.0, ax);
  return x < 0.0 ? -r : r;
}

double normal_quantile(double p) {
  require(p > 0.0 && p < 1.0, ErrorCode::InvalidArgument, "normal_quantile: p must lie in (0, 1)");
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

}  // namespace rmtlab::special
