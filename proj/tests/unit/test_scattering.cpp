#include <doctest.h>

#include <cmath>
#include <random>

#include "common/error.hpp"
#include "ensembles/ensembles.hpp"
#include "scattering/scattering.hpp"

using namespace rmtlab;
using namespace rmtlab::scattering;
using ensembles::EnsembleKind;
using ensembles::EnsembleSpec;

namespace {

EnsembleSpec source(EnsembleKind kind, int dim, int realizations, std::uint64_t seed, double xi = 0.0,
                    double lambda = 0.0) {
  EnsembleSpec s;
  s.kind = kind;
  s.dim = dim;
  s.realizations = realizations;
  s.master_seed = seed;
  s.xi = xi;
  s.lambda = lambda;
  return s;
}

ScatteringConfig small_config(double Ta = 0.6, double Tb = 0.68, double tau = 1.6) {
  ScatteringConfig c;
  c.dim = 120;
  c.fictitious = 10;
  c.target_T = {Ta, Tb};
  c.tau_abs = tau;
  c.n_freq = 256;
  c.window_spacings = 40;
  return c;
}

CalibrationOptions quick_calibration() {
  CalibrationOptions o;
  o.realizations = 20;
  return o;
}

}  // namespace

TEST_CASE("coupling rows are orthogonal with norms n v^2") {
  rng::Stream s(1, 0, rng::Purpose::Coupling);
  Eigen::MatrixXd w = build_coupling(400, 32, std::vector<double>(32, 0.1), s);
  Eigen::MatrixXd g = w.transpose() * w;
  for (int i = 0; i < 32; ++i) {
    CHECK(std::fabs(g(i, i) - 4.0) < 1e-10);
    for (int j = 0; j < 32; ++j)
      if (i != j) CHECK(std::fabs(g(i, j)) < 1e-10 * 400);
  }
  rng::Stream s2(1, 0, rng::Purpose::Coupling);
  CHECK_THROWS_AS(build_coupling(10, 11, std::vector<double>(11, 0.1), s2), Error);
}

TEST_CASE("zero coupling decouples a channel") {
  rng::Stream hs(2, 0);
  auto h = ensembles::sample_goe(60, hs);
  rng::Stream cs(2, 0, rng::Purpose::Coupling);
  Eigen::MatrixXd w = build_coupling(60, 2, {0.0, 0.2}, cs);
  CHECK(w.col(0).cwiseAbs().maxCoeff() == 0.0);
  Eigen::MatrixXcd s = s_matrix(h, w, 0.01);
  CHECK(s(0, 0) == cplx(1.0, 0.0));
  CHECK(s(0, 1) == cplx(0.0, 0.0));
}

TEST_CASE("W = 0 gives the identity") {
  rng::Stream hs(3, 0);
  auto h = ensembles::sample_gue(30, hs);
  Eigen::MatrixXcd s = s_matrix(h, Eigen::MatrixXd::Zero(30, 3), 0.123);
  CHECK((s - Eigen::MatrixXcd::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("reciprocity and unitarity of the dense S-matrix") {
  rng::Stream hs(4, 0);
  auto h = ensembles::sample_goe(400, hs);
  rng::Stream cs(4, 0, rng::Purpose::Coupling);
  Eigen::MatrixXd w = build_coupling(400, 32, std::vector<double>(32, 0.05), cs);
  for (double f : {-0.3, 0.0, 0.21}) {
    Eigen::MatrixXcd s = s_matrix(h, w, f);
    CHECK((s - s.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((s.adjoint() * s - Eigen::MatrixXcd::Identity(32, 32)).cwiseAbs().maxCoeff() < 1e-8);
  }
  rng::Stream gs(5, 0);
  auto hg = ensembles::sample_goe_to_gue(200, 1.0, gs);
  rng::Stream cs2(5, 0, rng::Purpose::Coupling);
  Eigen::MatrixXd w2 = build_coupling(200, 4, std::vector<double>(4, 0.1), cs2);
  Eigen::MatrixXcd s2 = s_matrix(hg, w2, 0.05);
  CHECK((s2.adjoint() * s2 - Eigen::MatrixXcd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((s2 - s2.transpose()).cwiseAbs().maxCoeff() > 1e-4);
}

TEST_CASE("singular system reports the frequency") {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3, 3);
  d(0, 0) = 0.5;
  d(1, 1) = 1.0;
  d(2, 2) = 2.0;
  auto h = ensembles::HermitianMatrix::from_real(d);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 1);
  w(2, 0) = 0.1;
  try {
    s_matrix(h, w, 0.5);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Numeric);
    CHECK(std::string(e.what()).find("0.5") != std::string::npos);
  }
}

TEST_CASE("spectral route matches the dense solve") {
  rng::Stream hs(6, 0);
  auto h = ensembles::sample_goe_to_gue(150, 0.3, hs);
  rng::Stream cs(6, 0, rng::Purpose::Coupling);
  const int M = 5;
  Eigen::MatrixXd q = orthonormal_channels(150, M, cs);
  std::vector<double> v{0.12, 0.2, 0.03, 0.03, 0.03};
  Eigen::MatrixXd w = q;
  for (int e = 0; e < M; ++e) w.col(e) *= std::sqrt(150.0) * v[e];
  ResonanceSystem rs(h, q, 40);
  const double f_unfolded = 0.37;
  const double f_raw = rs.energy_origin() + f_unfolded * rs.energy_unit();
  Eigen::MatrixXcd dense = s_matrix(h, w, f_raw);
  // Spectral route works in unfolded energy; couplings scale with sqrt(unit).
  std::vector<double> vs(M);
  for (int e = 0; e < M; ++e) vs[e] = v[e] / std::sqrt(rs.energy_unit());
  Eigen::MatrixXcd fast = s_from_khat(rs.khat(f_unfolded), vs, 150, {0, 1, 2, 3, 4});
  CHECK((dense - fast).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("transmission of an uncoupled channel is zero") {
  std::vector<std::vector<cplx>> see{std::vector<cplx>(50, cplx(1.0, 0.0))};
  CHECK(transmission(see) == 0.0);
  auto cfg = small_config(0.0, 0.5, 1.0);
  auto cal = calibrate_coupling(cfg, source(EnsembleKind::GOE, cfg.dim, 1, 1), quick_calibration());
  CHECK(cal.v[0] == 0.0);
  CHECK(cal.T_antenna[0] == 0.0);
}

TEST_CASE("calibration reproduces the target transmissions") {
  auto cfg = small_config(0.60, 0.68, 1.6);
  auto src = source(EnsembleKind::GOE, cfg.dim, 1, 7);
  auto cal = calibrate_coupling(cfg, src, quick_calibration());
  CHECK(std::fabs(cal.T_antenna[0] - 0.60) < 0.02);
  CHECK(std::fabs(cal.T_antenna[1] - 0.68) < 0.02);
  CHECK(cal.T_fictitious == doctest::Approx(1.6 / 10).epsilon(0.02));
  src.realizations = 60;
  src.master_seed = 99;
  auto series = simulate(cfg, src, cal.v);
  CHECK(std::fabs(transmission(series.s_aa) - 0.60) < 0.02);
  CHECK(std::fabs(transmission(series.s_bb) - 0.68) < 0.02);
}

TEST_CASE("estimators on synthetic series") {
  std::mt19937_64 g(5);
  std::normal_distribution<double> n;
  std::vector<std::vector<cplx>> noise(40, std::vector<cplx>(400));
  for (auto& s : noise)
    for (auto& x : s) x = cplx(n(g), n(g));
  std::vector<double> eps{0.0, 1.0, 2.0, 5.0};
  auto c = two_point_correlation(noise, 0.1, eps);
  CHECK(c.values[0] > 0.0);
  for (std::size_t i = 1; i < eps.size(); ++i) CHECK(std::fabs(c.values[i]) < 3.0 * c.stderr_[i] + 1e-12);
  CHECK_THROWS_AS(two_point_correlation(noise, 0.1, {30.0}), Error);
  CHECK(cross_correlation(noise, noise) == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<cplx> zero(100, cplx(0.3, 0.1));
  CHECK_THROWS_AS(cross_correlation({zero}, {zero}), Error);
}

TEST_CASE("fluctuating part removes the window mean") {
  std::vector<cplx> s(10);
  for (int i = 0; i < 10; ++i) s[i] = cplx(i, 1.0);
  auto f = fluctuating(s);
  cplx sum = 0;
  for (auto x : f) sum += x;
  CHECK(std::abs(sum) < 1e-12);
  auto w = fluctuating(s, 5);
  CHECK(w[0] == cplx(-2.0, 0.0));
  CHECK(w[5] == cplx(-2.0, 0.0));
}

TEST_CASE("detailed balance measure") {
  std::vector<cplx> a{cplx(0.2, 0.1), cplx(-0.3, 0.4), cplx(0, 0)};
  auto same = detailed_balance_delta(a, a);
  CHECK(same.delta[0] == 0.0);
  CHECK(same.delta[1] == 0.0);
  CHECK(std::isnan(same.delta[2]));
  CHECK(same.excluded == 1);
  CHECK(same.mean == 0.0);
  std::vector<cplx> b{cplx(0.1, 0.05), cplx(-0.15, 0.2), cplx(1, 0)};
  auto d = detailed_balance_delta(a, b);
  CHECK(d.delta[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(d.delta[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(d.delta[2] == 1.0);
}

TEST_CASE("amplitude distribution") {
  std::mt19937_64 g(8);
  std::normal_distribution<double> n;
  std::vector<double> amps(20000);
  for (auto& x : amps) x = std::hypot(n(g), n(g));
  auto a = amplitude_distribution(amps);
  CHECK(a.sup_distance < 0.02);
  CHECK(a.rayleigh_sigma == doctest::Approx(1.0).epsilon(0.02));
  double area = 0.0;
  for (std::size_t i = 0; i < a.histogram.grid.size(); ++i)
    area += a.histogram.values[i] * (a.histogram.grid.size() > 1 ? a.histogram.grid[1] - a.histogram.grid[0] : 1.0);
  CHECK(area == doctest::Approx(1.0).epsilon(1e-3));
  CHECK_THROWS_AS(amplitude_distribution(std::vector<double>(100, 1.0)), Error);
}

TEST_CASE("xi = 0 bundle is reciprocal, strong violation is not") {
  auto cfg = small_config();
  BundleOptions opt;
  opt.calibration = quick_calibration();
  auto b0 = run_bundle(cfg, source(EnsembleKind::GoeToGue, cfg.dim, 10, 3, 0.0), opt);
  CHECK(std::fabs(b0.c_cross.value - 1.0) < 1e-6);
  CHECK(b0.delta_mean < 1e-8);
  auto b5 = run_bundle(cfg, source(EnsembleKind::GoeToGue, cfg.dim, 30, 3, 5.0), opt);
  CHECK(std::fabs(b5.c_cross.value) < 0.1);
  CHECK(b5.delta_mean > 0.05);
  CHECK(!b0.has_amplitude);
  CHECK(!b0.warnings.empty());
}

TEST_CASE("normalized correlation decays") {
  auto cfg = small_config();
  BundleOptions opt;
  opt.calibration = quick_calibration();
  auto b = run_bundle(cfg, source(EnsembleKind::GOE, cfg.dim, 20, 4), opt);
  const auto& c = b.c_ab_normalized;
  CHECK(c.values.front() == doctest::Approx(1.0));
  CHECK(c.values[20] < 0.5 * c.values.front());
  CHECK(b.c_ab.values.front() > 0.0);
}

TEST_CASE("scattering config validation") {
  ScatteringConfig c;
  c.target_T = {1.2, 0.5};
  CHECK_THROWS_AS(c.validate(), Error);
  c = ScatteringConfig{};
  c.tau_abs = -1;
  CHECK_THROWS_AS(c.validate(), Error);
  c = ScatteringConfig{};
  c.fictitious = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = ScatteringConfig{};
  CHECK_NOTHROW(c.validate());
  auto f = frequency_grid(c);
  CHECK(f.size() == 1024);
  CHECK(f.front() == doctest::Approx(-50.0));
  CHECK(f.back() == doctest::Approx(50.0));
}
