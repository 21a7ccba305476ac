#include <doctest.h>

#include <cmath>

#include "common/error.hpp"
#include "common/quadrature.hpp"
#include "observables/observables.hpp"
#include "rp/rp_analytics.hpp"
#include "rp/special.hpp"

using namespace rmtlab;
using namespace rmtlab::rp;
namespace sp = rmtlab::special;

TEST_CASE("special functions") {
  CHECK(sp::erfc(0.0) == 1.0);
  CHECK(sp::erfc(1.0) == doctest::Approx(0.15729920705028513).epsilon(1e-12));
  CHECK(sp::expint_ei(1.0) == doctest::Approx(1.8951178163559368).epsilon(1e-12));
  CHECK(sp::expint_ei(50.0) == doctest::Approx(1.0585636897131690e20).epsilon(1e-10));
  CHECK(sp::expint_ei(-1.0) == doctest::Approx(-0.21938393439552027).epsilon(1e-12));
  CHECK_THROWS_AS(sp::expint_ei(0.0), Error);
  CHECK(sp::hyp2f2_half(0.0) == 1.0);
  double series = 0.0, poch = 1.0;
  for (int k = 0; k < 40; ++k) {
    series += 1.0 / ((2.0 * k + 1) * poch);
    poch *= 1.5 + k;
  }
  CHECK(sp::hyp2f2_half(1.0) == doctest::Approx(series).epsilon(1e-10));
  CHECK(sp::bessel_i1(1e-6) / 1e-6 == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(sp::bessel_i1(1.0) == doctest::Approx(0.5651591039924851).epsilon(1e-12));
  CHECK(sp::bessel_i1e(800.0) == doctest::Approx(1.0 / std::sqrt(2 * M_PI * 800.0) *
                                                     (1 - 3.0 / (8 * 800.0) - 15.0 / (128 * 800.0 * 800.0)))
                                        .epsilon(1e-8));
  CHECK(sp::normal_quantile(0.5) == doctest::Approx(0.0));
  CHECK(sp::normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-10));
}

TEST_CASE("scale conventions") {
  auto pub = RpScales::from_lambda(0.5, ScaleConvention::Published);
  CHECK(pub.alpha_tilde == doctest::Approx(M_PI / std::sqrt(2.0) * 0.5));
  CHECK(pub.alpha_L == doctest::Approx(std::sqrt(2.0) * 0.5));
  auto cal = RpScales::from_lambda(0.5);
  CHECK(cal.alpha_tilde == doctest::Approx(kCalibratedAlphaTildePerLambda * 0.5));
  CHECK(cal.alpha_L == doctest::Approx(kCalibratedAlphaLPerLambda * 0.5));
}

TEST_CASE("form factor limits") {
  CHECK(std::fabs(k_rp(0.5, 1e-3) - 1.0) < 1e-3);
  CHECK(std::fabs(k_rp(50.0, 0.475) - 1.0) < 1e-3);
  for (double tau : {0.5, 1.0, 3.0, 6.0}) CHECK(std::fabs(form_factor(tau, 18.5) - tau / (2 * M_PI)) < 0.01);
  CHECK_THROWS_AS(k_rp(-1.0, 0.5), Error);
}

TEST_CASE("cluster function limits") {
  double y = y2_rp(0.5, 5.0, ScaleConvention::Published);
  CHECK(std::fabs(y - 0.4053) < 0.01);
  double prev = std::fabs(y2_rp(5.0, 0.475));
  for (double r : {10.0, 20.0, 40.0, 80.0}) {
    double cur = std::fabs(y2_rp(r, 0.475));
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK(prev < 0.03);
  CHECK(std::fabs(cluster_function(1.0, 0.9) - cluster_function_from_k(1.0, 0.9)) < 1e-5);
}

TEST_CASE("form factor and cluster function are Fourier partners") {
  const double a = RpScales::from_lambda(0.475).alpha_tilde;
  for (double tau : {1.0, 2.0, 4.0, 2 * M_PI}) {
    auto f = [&](double r) { return 2.0 * cluster_function_from_k(r, a) * std::cos(r * tau); };
    double b = quad::integrate_lenient(f, 0.0, 40.0, 1e-8, 20).value;
    INFO("tau = " << tau);
    CHECK(std::fabs((1.0 - form_factor(tau, a)) - b) < 0.01);
  }
}

TEST_CASE("number variance") {
  CHECK(sigma2_rp(0.0, 0.475) == 0.0);
  CHECK(std::fabs(sigma2_rp(5.0, 1e-3) - 5.0) < 1e-2);
  CHECK(std::fabs(number_variance(2.0, 0.9) - number_variance_from_cluster(2.0, 0.9)) < 2e-4);
  for (double L : {1.0, 3.0, 5.0}) {
    double prev = 1e9;
    for (double lam = 0.0; lam <= 3.0 + 1e-9; lam += 0.25) {
      double v = lam == 0.0 ? L : sigma2_rp(L, lam);
      CHECK(v <= prev + 1e-9);
      prev = v;
    }
  }
}

TEST_CASE("spacing surmise normalization") {
  for (auto conv : {ScaleConvention::Published, ScaleConvention::Calibrated})
    for (double lam : {0.1, 0.5, 1.0, 5.0, 20.0}) {
      const double aL = RpScales::from_lambda(lam, conv).alpha_L;
      auto p = [&](double s) { return spacing_density(s, aL); };
      auto sp1 = [&](double s) { return s * spacing_density(s, aL); };
      INFO("lambda = " << lam);
      CHECK(std::fabs(quad::integrate(p, 0.0, 40.0, 1e-10).value - 1.0) < 1e-4);
      CHECK(std::fabs(quad::integrate(sp1, 0.0, 40.0, 1e-10).value - 1.0) < 1e-4);
      CHECK(spacing_density(0.0, aL) == 0.0);
    }
}

TEST_CASE("spacing surmise limits") {
  for (double s = 0.1; s <= 4.0; s += 0.1) CHECK(std::fabs(nnsd_rp(s, 1e-3) - std::exp(-s)) < 1e-2);
  for (double s = 0.1; s <= 3.0; s += 0.1)
    CHECK(std::fabs(nnsd_rp(s, 20.0) -
                    observables::wigner_surmise(observables::ReferenceKind::GUE, s)) < 1e-2);
  CHECK(std::isfinite(nnsd_rp(12.0, 3.0)));
}

TEST_CASE("D(alpha_L) forms agree") {
  for (double a : {0.3, 0.8, 1.0, 1.2, 2.0}) {
    INFO("alpha_L = " << a);
    CHECK(surmise_d_closed_form(a) == doctest::Approx(surmise_d_stable(a)).epsilon(1e-9));
  }
  CHECK(std::isfinite(surmise_d(40.0)));
}

TEST_CASE("window nodes") {
  auto nodes = window_nodes(QuantileWindow{});
  double w = 0.0;
  for (auto [f, wt] : nodes) {
    w += wt;
    CHECK(f > 0.0);
    CHECK(f <= 1.0);
  }
  CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
  auto plain = curve(Curve::NumberVariance, {1.0, 2.0}, 0.4);
  auto avg = curve(Curve::NumberVariance, {1.0, 2.0}, 0.4, ScaleConvention::Calibrated, nullptr);
  CHECK(plain == avg);
  QuantileWindow qw;
  auto win = curve(Curve::NumberVariance, {1.0, 2.0}, 0.4, ScaleConvention::Calibrated, &qw);
  CHECK(win[1] > plain[1]);
}

TEST_CASE("spacing cdf table") {
  auto t = SpacingCdfTable::for_lambda(0.475);
  CHECK(t.cdf(0.0) == 0.0);
  CHECK(t.cdf(12.0) == doctest::Approx(1.0).epsilon(1e-6));
  const double aL = RpScales::from_lambda(0.475).alpha_L;
  CHECK(t.cdf(1.0) == doctest::Approx(spacing_cdf(1.0, aL)).epsilon(1e-6));
}
