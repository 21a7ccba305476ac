#include <doctest.h>

#include <cmath>

#include "common/error.hpp"
#include "helpers.hpp"
#include "inference/inference.hpp"

using namespace rmtlab;
using namespace rmtlab::inference;
using namespace testing_helpers;

namespace {

std::vector<double> arange(double lo, double hi, double step) {
  std::vector<double> g;
  for (double x = lo; x <= hi + 1e-9; x += step) g.push_back(x);
  return g;
}

XiTable synthetic_table() {
  XiTable t;
  t.T_a = 0.6;
  t.T_b = 0.68;
  t.tau_abs = 1.6;
  for (int i = 0; i <= 10; ++i) {
    double xi = 0.1 * i;
    t.xi.push_back(xi);
    t.c_cross.push_back(std::exp(-6.0 * xi * xi) * (1 - 0.02 * xi));
  }
  t.c_cross_raw = t.c_cross;
  t.stderr_.assign(t.xi.size(), 0.01);
  t.realizations = 1;
  t.dim = 100;
  return t;
}

}  // namespace

TEST_CASE("lambda fit recovers an rp ensemble") {
  auto e = matrix_ensemble(ensembles::EnsembleKind::RpPoissonToGue, 100, 400, 4500, 0.45);
  auto s2 = observables::number_variance(e, arange(0.25, 5.0, 0.25));
  FitResult f = fit_lambda_sigma2(s2);
  CHECK(f.parameter == "lambda");
  CHECK(std::fabs(f.estimate - 0.45) < 0.05);
  CHECK(f.estimate >= f.lo);
  CHECK(f.estimate <= f.hi);
  CHECK(std::isfinite(f.objective));
  CHECK(f.bound.empty());
  for (std::size_t i = 1; i < f.trace.size(); ++i) CHECK(f.trace[i] <= f.trace[i - 1]);
}

TEST_CASE("lambda fit of poisson data sits at the lower edge") {
  auto e = poisson_ensemble(100, 400, 12);
  auto s2 = observables::number_variance(e, arange(0.25, 5.0, 0.25));
  LambdaFitOptions opt;
  opt.window.reset();
  FitResult f = fit_lambda_sigma2(s2, opt);
  CHECK(f.estimate < 0.05);
}

TEST_CASE("lambda fit input checks") {
  observables::ObservableCurve c;
  c.observable = observables::Observable::NumberVariance;
  c.grid = {0.25, 0.5};
  c.values = {0.25, 0.5};
  CHECK_THROWS_AS(fit_lambda_sigma2(c), Error);
  c.grid = {1e-4, 2e-4, 3e-4};
  c.values = {1e-4, 2e-4, 3e-4};
  LambdaFitOptions opt;
  opt.L_max = 3e-4;
  opt.lo = 2.9;
  opt.window.reset();
  FitResult f = fit_lambda_sigma2(c, opt);
  CHECK(!f.warnings.empty());
}

TEST_CASE("xi lookup") {
  XiTable t = synthetic_table();
  CHECK(estimate_xi(1.0, t).estimate == 0.0);
  FitResult lo = estimate_xi(0.0, t);
  CHECK(lo.estimate == doctest::Approx(1.0));
  CHECK(lo.bound == ">=");
  double c = std::exp(-6.0 * 0.28 * 0.28) * (1 - 0.02 * 0.28);
  CHECK(estimate_xi(c, t).estimate == doctest::Approx(0.28).epsilon(0.03));
  CHECK_THROWS_AS(estimate_xi(1.5, t), Error);
  CHECK_THROWS_AS(estimate_xi(-0.1, t), Error);
  std::vector<XiTable> tables{t};
  CHECK(estimate_xi_crosscorr(c, 0.6, 0.68, 1.6, tables).estimate == doctest::Approx(0.28).epsilon(0.03));
  try {
    estimate_xi_crosscorr(c, 0.5, 0.68, 1.6, tables);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutOfRange);
  }
}

TEST_CASE("xi lookup refuses extrapolation above the table maximum") {
  XiTable t = synthetic_table();
  for (double& v : t.c_cross) v *= 0.9;
  try {
    estimate_xi(0.95, t);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutOfRange);
  }
}

TEST_CASE("monte-carlo xi table is monotone and starts at one") {
  XiTableConfig cfg;
  cfg.scattering.dim = 80;
  cfg.scattering.fictitious = 8;
  cfg.scattering.n_freq = 128;
  cfg.scattering.window_spacings = 30;
  cfg.xi_grid = {0.0, 0.2, 0.4, 0.8};
  cfg.realizations = 6;
  cfg.calibration.realizations = 10;
  XiTable t = build_xi_table(cfg);
  CHECK(t.c_cross.front() == doctest::Approx(1.0).epsilon(1e-6));
  for (std::size_t i = 1; i < t.c_cross.size(); ++i) CHECK(t.c_cross[i] <= t.c_cross[i - 1]);
  CHECK(t.c_cross.back() < 0.5);
  CHECK(t.covers(0.6, 0.68, 1.6));
}

TEST_CASE("tau fit on a synthetic table") {
  TauTable t;
  t.eps = arange(0.0, 10.0, 0.25);
  t.tau = arange(0.25, 6.0, 0.25);
  for (double tau : t.tau) {
    std::vector<double> c;
    for (double e : t.eps) c.push_back(1.0 / (1.0 + (e / (0.3 + tau)) * (e / (0.3 + tau))));
    t.curves.push_back(c);
  }
  observables::ObservableCurve curve;
  curve.observable = observables::Observable::SCorrelation;
  curve.grid = arange(0.0, 10.0, 0.1);
  for (double e : curve.grid) curve.values.push_back(1.0 / (1.0 + (e / 1.9) * (e / 1.9)));
  FitResult f = fit_tau_abs(curve, t);
  CHECK(f.estimate == doctest::Approx(1.6).epsilon(0.25 / 1.6));
  CHECK(f.bound.empty());
  curve.values.clear();
  for (double e : curve.grid) curve.values.push_back(1.0 / (1.0 + (e / 0.1) * (e / 0.1)));
  FitResult edge = fit_tau_abs(curve, t);
  CHECK(edge.estimate == doctest::Approx(0.25));
  CHECK(edge.bound == "<=");
}

TEST_CASE("tau fit reports several local minima") {
  TauTable t;
  t.eps = {0, 1, 2, 3};
  t.tau = {1, 2, 3, 4, 5};
  t.curves = {{1, 0.5, 0.2, 0.1}, {1, 0.7, 0.4, 0.2}, {1, 0.5, 0.2, 0.1}, {1, 0.9, 0.8, 0.7}, {1, 0.5, 0.2, 0.1}};
  observables::ObservableCurve curve;
  curve.observable = observables::Observable::SCorrelation;
  curve.grid = {0, 1, 2, 3};
  curve.values = {1, 0.5, 0.2, 0.1};
  FitResult f = fit_tau_abs(curve, t);
  CHECK(f.local_minima.size() >= 2);
}
