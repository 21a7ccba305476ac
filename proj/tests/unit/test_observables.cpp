#include <doctest.h>

#include <cmath>
#include <numeric>

#include "billiards/billiards.hpp"
#include "common/error.hpp"
#include "helpers.hpp"
#include "observables/observables.hpp"

using namespace rmtlab;
using namespace rmtlab::observables;
using namespace testing_helpers;

namespace {

double integral(const ObservableCurve& c) {
  double w = c.grid.size() > 1 ? c.grid[1] - c.grid[0] : 1.0;
  return std::accumulate(c.values.begin(), c.values.end(), 0.0) * w;
}

std::vector<double> arange(double lo, double hi, double step) {
  std::vector<double> g;
  for (double x = lo; x <= hi + 1e-9; x += step) g.push_back(x);
  return g;
}

const Ensemble& gue_ensemble() {
  static const Ensemble e = matrix_ensemble(ensembles::EnsembleKind::GUE, 200, 400, 77);
  return e;
}

}  // namespace

TEST_CASE("poisson spacings follow the exponential law") {
  Ensemble e{as_unfolded(poisson_levels(100001, 1))};
  auto s = spacings(e);
  CHECK(cdf_sup_distance(s, [](double x) { return 1 - std::exp(-x); }) < 0.01);
  auto p = nnsd(e);
  CHECK(integral(p) == doctest::Approx(1.0).epsilon(1e-3));
  auto c = cumulative_nnsd(e);
  CHECK(std::is_sorted(c.values.begin(), c.values.end()));
  CHECK(c.values.back() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("gue spacings follow the gue surmise") {
  const Ensemble& e = gue_ensemble();
  auto s = spacings(e);
  double mean = std::accumulate(s.begin(), s.end(), 0.0) / s.size();
  CHECK(mean == doctest::Approx(1.0).epsilon(0.02));
  CHECK(cdf_sup_distance(s, [](double x) { return wigner_surmise_cdf(ReferenceKind::GUE, x); }) < 0.015);
  CHECK(integral(nnsd(e)) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("nnsd needs 100 levels") {
  Ensemble e{as_unfolded(poisson_levels(50, 2))};
  CHECK_THROWS_AS(nnsd(e), Error);
}

TEST_CASE("ratio statistics") {
  std::vector<std::vector<double>> p{poisson_levels(100001, 3)};
  auto r = ratios(p[0], false);
  CHECK(cdf_sup_distance(r, [](double x) { return x / (1 + x); }) < 0.01);
  CHECK(mean_ratio_tilde(p) == doctest::Approx(2 * std::log(2.0) - 1).epsilon(0.005 / 0.3863));
  std::vector<std::vector<double>> g;
  for (auto& u : gue_ensemble()) g.push_back(u.epsilons);
  CHECK(std::fabs(mean_ratio_tilde(g) - 0.600) < 0.005);
  auto d = ratio_distribution(p);
  CHECK(integral(d) == doctest::Approx(1.0).epsilon(1e-3));
  std::vector<std::vector<double>> degenerate{{0, 1, 1, 2, 3}};
  try {
    ratios(degenerate[0], true);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateInput);
  }
}

TEST_CASE("ratio statistics are invariant under unfolding") {
  auto x = poisson_levels(1000, 4);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = 3.0 * x[i] + 7.0;
  auto a = ratios(x, true), b = ratios(y, true);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-9));
}

TEST_CASE("number variance") {
  Ensemble p = poisson_ensemble(20, 2000, 5);
  auto c = number_variance(p, {0.05, 1.0, 5.0});
  CHECK(c.values[2] == doctest::Approx(5.0).epsilon(0.15 / 5));
  CHECK(c.values[0] == doctest::Approx(0.05).epsilon(0.02));
  auto g = number_variance(gue_ensemble(), {0.05, 1.0});
  CHECK(g.values[0] == doctest::Approx(0.05).epsilon(0.02));
  // GUE Sigma^2(1) from the sine kernel is 0.344; see the reference test below.
  CHECK(std::fabs(g.values[1] - sigma2_reference(ReferenceKind::GUE, 1.0)) < 0.01);
  Ensemble short_e{as_unfolded(poisson_levels(40, 6))};
  CHECK_THROWS_AS(number_variance(short_e, {5.0}), Error);
}

TEST_CASE("sine-kernel number variance reference") {
  CHECK(sigma2_reference(ReferenceKind::GUE, 1.0) == doctest::Approx(0.3445).epsilon(2e-3));
  CHECK(sigma2_reference(ReferenceKind::Poisson, 3.5) == 3.5);
}

TEST_CASE("cluster function") {
  auto grid = arange(0.5, 5.0, 0.25);
  auto p = estimate_y2(poisson_ensemble(400, 1000, 7), grid);
  for (double v : p.values) CHECK(std::fabs(v) < 0.03);
  auto g = estimate_y2(matrix_ensemble(ensembles::EnsembleKind::GUE, 1500, 200, 79), grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    INFO("r = " << grid[i]);
    double pr = M_PI * grid[i];
    CHECK(std::fabs(g.values[i] - std::sin(pr) * std::sin(pr) / (pr * pr)) < 0.03);
  }
  Ensemble single{as_unfolded(poisson_levels(200, 8))};
  auto w = estimate_y2(single, grid);
  CHECK(!w.warnings.empty());
}

TEST_CASE("form factor") {
  auto grid = arange(0.5, 2 * M_PI, 0.25);
  auto p = form_factor(poisson_ensemble(1500, 400, 9), grid);
  for (double v : p.values) CHECK(std::fabs(v - 1.0) < 0.05);
  auto g = form_factor(gue_ensemble(), grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    INFO("tau = " << grid[i]);
    CHECK(std::fabs(g.values[i] - grid[i] / (2 * M_PI)) < 0.05);
  }
}

TEST_CASE("power spectrum") {
  std::vector<double> rigid(200);
  for (std::size_t q = 0; q < rigid.size(); ++q) rigid[q] = static_cast<double>(q);
  auto z = power_spectrum({as_unfolded(rigid)});
  for (double v : z.values) CHECK(std::fabs(v) < 1e-20);
  auto p = power_spectrum(poisson_ensemble(200, 400, 10));
  CHECK(std::fabs(loglog_slope(p, 0.01, 0.1).slope + 2.0) < 0.15);
  auto g = power_spectrum(gue_ensemble());
  CHECK(std::fabs(loglog_slope(g, 0.01, 0.1).slope + 1.0) < 0.15);
}

TEST_CASE("shift invariance") {
  Ensemble a = poisson_ensemble(5, 500, 11);
  Ensemble b = a;
  for (auto& u : b)
    for (double& x : u.epsilons) x += 12.5;
  auto grid = arange(0.5, 3.0, 0.5);
  auto na = number_variance(a, grid), nb = number_variance(b, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(na.values[i] == doctest::Approx(nb.values[i]).epsilon(1e-9));
  auto pa = power_spectrum(a), pb = power_spectrum(b);
  for (std::size_t i = 0; i < pa.values.size(); ++i)
    CHECK(pa.values[i] == doctest::Approx(pb.values[i]).epsilon(1e-6));
}

TEST_CASE("length spectrum of the circle oracle") {
  auto g = billiards::BilliardGeometry::circle(0.25);
  auto f = unfolding::prepare({billiards::circle_eigenfrequencies(g, 20.0), unfolding::Source::Synthetic, ""}).levels;
  auto grid = arange(0.0, 3.0, 0.001);
  auto c = length_spectrum(f, [&](double x) { return billiards::weyl_density(g, x); }, grid);
  auto peaks = local_maxima(c);
  for (auto& pk : peaks) CHECK(pk.position > 0.3);
  std::sort(peaks.begin(), peaks.end(), [](auto& a, auto& b) { return a.height > b.height; });
  for (double target : {1.0, 1.2990, 1.4142}) {
    bool found = false;
    for (std::size_t i = 0; i < std::min<std::size_t>(8, peaks.size()); ++i)
      found |= std::fabs(peaks[i].position - target) < 0.005;
    CHECK_MESSAGE(found, "no peak near " << target);
  }
}

TEST_CASE("length spectrum of smooth staircase samples has no peaks") {
  auto g = billiards::BilliardGeometry::circle(0.25);
  g.n0 = 0.5;
  std::vector<double> f;
  for (int i = 1;; ++i) {
    double lo = 0.01, hi = 30.0;
    if (billiards::weyl_count(g, hi) < i) break;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      (billiards::weyl_count(g, mid) < i - 0.5 ? lo : hi) = mid;
    }
    if (lo > 20.0) break;
    f.push_back(0.5 * (lo + hi));
  }
  auto grid = arange(0.0, 3.0, 0.001);
  auto smooth = length_spectrum(f, [&](double x) { return billiards::weyl_density(g, x); }, grid);
  auto circ = unfolding::prepare({billiards::circle_eigenfrequencies(g, 20.0), unfolding::Source::Synthetic, ""}).levels;
  auto real = length_spectrum(circ, [&](double x) { return billiards::weyl_density(g, x); }, grid);
  double max_smooth = 0.0, max_real = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid[i] > 0.3) max_smooth = std::max(max_smooth, smooth.values[i]), max_real = std::max(max_real, real.values[i]);
  CHECK(max_smooth < 0.1 * max_real);
}

TEST_CASE("reference curves") {
  auto grid = arange(0.0, 4.0, 0.5);
  auto p = reference_statistics(ReferenceKind::Poisson, Observable::NNSD, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(p.values[i] == doctest::Approx(std::exp(-grid[i])));
  auto g = reference_statistics(ReferenceKind::GUE, Observable::NNSD, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double s = grid[i];
    CHECK(g.values[i] == doctest::Approx(32 / (M_PI * M_PI) * s * s * std::exp(-4 * s * s / M_PI)));
  }
  auto n = reference_statistics(ReferenceKind::Poisson, Observable::NumberVariance, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(n.values[i] == doctest::Approx(grid[i]));
  try {
    reference_statistics(ReferenceKind::GOE, Observable::LengthSpectrum, grid);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotAvailable);
  }
}

TEST_CASE("gue surmise against N = 400 matrices") {
  CHECK(cdf_sup_distance(spacings(gue_ensemble()),
                         [](double s) { return wigner_surmise_cdf(ReferenceKind::GUE, s); }) < 0.01);
}

TEST_CASE("observable names round-trip") {
  for (auto o : {Observable::NNSD, Observable::CumulativeNNSD, Observable::RatioDist, Observable::CumulativeRatioDist,
                 Observable::NumberVariance, Observable::Y2, Observable::FormFactor, Observable::PowerSpectrum,
                 Observable::LengthSpectrum})
    CHECK(parse_observable(observable_name(o)) == o);
  CHECK_THROWS_AS(parse_observable("delta3"), Error);
}
