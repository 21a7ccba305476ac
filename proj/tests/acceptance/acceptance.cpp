#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "billiards/billiards.hpp"
#include "common/quadrature.hpp"
#include "ensembles/ensembles.hpp"
#include "inference/inference.hpp"
#include "observables/observables.hpp"
#include "rp/rp_analytics.hpp"
#include "scattering/scattering.hpp"
#include "unfolding/unfolding.hpp"

using namespace rmtlab;
using observables::Ensemble;
using observables::ObservableCurve;
using observables::ReferenceKind;

namespace {

constexpr int kDim = 400;
constexpr int kRealizations = 200;

std::vector<double> arange(double lo, double hi, double step) {
  std::vector<double> g;
  for (int i = 0;; ++i) {
    double x = lo + i * step;
    if (x > hi + 1e-9) break;
    g.push_back(x);
  }
  return g;
}

Ensemble matrix_ensemble(ensembles::EnsembleKind kind, double lambda, int count, std::uint64_t seed) {
  ensembles::EnsembleSpec spec;
  spec.kind = kind;
  spec.dim = kDim;
  spec.realizations = count;
  spec.master_seed = seed;
  spec.lambda = lambda;
  std::vector<unfolding::RawSpectrum> raws;
  for (auto& v : ensembles::sample_spectra(spec)) raws.push_back({std::move(v), unfolding::Source::Matrix, ""});
  return unfolding::unfold_ensemble(raws);
}

const Ensemble& rp_ensemble(double lambda) {
  static std::map<double, Ensemble> cache;
  auto it = cache.find(lambda);
  if (it != cache.end()) return it->second;
  auto seed = static_cast<std::uint64_t>(9100 + std::lround(lambda * 1000));
  return cache.emplace(lambda, matrix_ensemble(ensembles::EnsembleKind::RpPoissonToGue, lambda, kRealizations, seed))
      .first->second;
}

const Ensemble& gue_ensemble() {
  static const Ensemble e = matrix_ensemble(ensembles::EnsembleKind::GUE, 0.0, kRealizations, 9201);
  return e;
}

const Ensemble& poisson_ensemble() {
  static const Ensemble e = matrix_ensemble(ensembles::EnsembleKind::Poisson, 0.0, kRealizations, 9202);
  return e;
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void check(bool ok) { pass = pass && ok; }
};

std::string fmt(double x, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, x);
  return buf;
}

// ---------------------------------------------------------------- 1

void rp_nnsd(Outcome& o) {
  for (double lambda : {0.325, 0.475, 0.625}) {
    auto sp = observables::spacings(rp_ensemble(lambda));
    auto lit = rp::SpacingCdfTable::for_lambda(lambda, rp::ScaleConvention::Published, nullptr);
    double sup = observables::cdf_sup_distance(sp, [&](double s) { return lit.cdf(s); });
    rp::QuantileWindow w;
    auto cal = rp::SpacingCdfTable::for_lambda(lambda, rp::ScaleConvention::Calibrated, &w);
    double sup_cal = observables::cdf_sup_distance(sp, [&](double s) { return cal.cdf(s); });
    o.check(sup < 0.02);
    o.detail << "lambda=" << lambda << " sup=" << fmt(sup) << " (calibrated windowed " << fmt(sup_cal) << "); ";
  }
}

// ---------------------------------------------------------------- 2

void rp_sigma2(Outcome& o) {
  auto grid = arange(0.25, 8.0, 0.25);
  for (double lambda : {0.325, 0.475, 0.625}) {
    auto c = observables::number_variance(rp_ensemble(lambda), grid);
    inference::LambdaFitOptions opt;
    double dev = 0.0, dev_pub = 0.0, at = 0.0, se = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double d = std::fabs(c.values[i] - inference::sigma2_model(grid[i], lambda, opt));
      if (d > dev) dev = d, at = grid[i], se = c.stderr_[i];
      dev_pub = std::max(dev_pub, std::fabs(c.values[i] - rp::sigma2_rp(grid[i], lambda, rp::ScaleConvention::Published)));
    }
    o.check(dev < 0.03);
    o.detail << "lambda=" << lambda << " maxdev=" << fmt(dev) << " at L=" << at << " (MC stderr " << fmt(se, 2)
             << ", published pointwise " << fmt(dev_pub) << "); ";
  }
}

// ---------------------------------------------------------------- 3

double fourier_of_cluster(double alpha_tilde, double tau) {
  // Y2 tabulated once per scale: fine steps through the correlation hole,
  // coarse ones over the smooth tail.
  static std::map<double, std::pair<boost::math::interpolators::cardinal_cubic_b_spline<double>,
                                    boost::math::interpolators::cardinal_cubic_b_spline<double>>>
      cache;
  constexpr double r_mid = 8.0, r_max = 80.0, h_fine = 0.025, h_coarse = 0.25;
  auto it = cache.find(alpha_tilde);
  if (it == cache.end()) {
    std::vector<double> fine, coarse;
    for (double r = 0.0; r <= r_mid + 1e-9; r += h_fine) fine.push_back(rp::cluster_function(std::max(r, 1e-6), alpha_tilde));
    for (double r = r_mid; r <= r_max + 1e-9; r += h_coarse) coarse.push_back(rp::cluster_function(r, alpha_tilde));
    it = cache
             .emplace(alpha_tilde, std::make_pair(boost::math::interpolators::cardinal_cubic_b_spline<double>(
                                                      fine.begin(), fine.end(), 0.0, h_fine),
                                                  boost::math::interpolators::cardinal_cubic_b_spline<double>(
                                                      coarse.begin(), coarse.end(), r_mid, h_coarse)))
             .first;
  }
  auto& [near, far] = it->second;
  auto y2 = [&](double r) { return r <= r_mid ? near(r) : far(r); };
  // Simpson on a step resolving cos(r tau) for tau <= 2 pi.
  const double h = 0.005;
  const int n = static_cast<int>(std::lround(r_max / h));
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    double r = i * h;
    double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * y2(r) * std::cos(r * tau);
  }
  return 2.0 * acc * h / 3.0;
}

void rp_form_factor(Outcome& o) {
  const double lambda = 0.475;
  auto grid = arange(0.5, 2.0 * M_PI, 0.25);
  auto mc = observables::form_factor(rp_ensemble(lambda), grid);
  rp::QuantileWindow w;
  auto model = rp::curve(rp::Curve::FormFactor, grid, lambda, rp::ScaleConvention::Calibrated, &w);
  double dev = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) dev = std::max(dev, std::fabs(mc.values[i] - model[i]));
  o.check(dev < 0.05);
  const double a = rp::RpScales::from_lambda(lambda).alpha_tilde;
  double ft = 0.0;
  for (double tau : arange(1.0, 2.0 * M_PI, 0.25)) {
    double b = fourier_of_cluster(a, tau);
    ft = std::max(ft, std::fabs((1.0 - rp::form_factor(tau, a)) - b));
  }
  o.check(ft < 0.01);
  o.detail << "MC vs windowed k_rp maxdev=" << fmt(dev) << "; |(1-K) - FT(Y2)| max=" << fmt(ft);
}

// ---------------------------------------------------------------- 4

void endpoint_limits(Outcome& o) {
  for (auto conv : {rp::ScaleConvention::Calibrated, rp::ScaleConvention::Published}) {
    const double lambda = 1e-3;
    auto sc = rp::RpScales::from_lambda(lambda, conv);
    double cdf = 0.0, pdf = 0.0, s2 = 0.0, k = 0.0;
    for (double s : arange(0.0, 10.0, 0.01)) cdf = std::max(cdf, std::fabs(rp::spacing_cdf(s, sc.alpha_L) + std::expm1(-s)));
    for (double s : arange(0.05, 5.0, 0.05)) pdf = std::max(pdf, std::fabs(rp::spacing_density(s, sc.alpha_L) - std::exp(-s)));
    for (double L : arange(0.25, 8.0, 0.25)) s2 = std::max(s2, std::fabs(rp::sigma2_rp(L, lambda, conv) - L));
    for (double t : arange(0.5, 2.0 * M_PI, 0.25)) k = std::max(k, std::fabs(rp::k_rp(t, lambda, conv) - 1.0));
    o.check(cdf < 1e-2 && pdf < 1e-2 && s2 < 1e-2 && k < 1e-2);
    o.detail << (conv == rp::ScaleConvention::Calibrated ? "calibrated" : "published") << " lambda=1e-3: cdf "
             << fmt(cdf) << ", P(s>=0.05) " << fmt(pdf) << ", Sigma2 " << fmt(s2) << ", K " << fmt(k) << "; ";
  }
  const Ensemble& e = rp_ensemble(5.0);
  double sup = observables::cdf_sup_distance(observables::spacings(e), [](double s) {
    return observables::wigner_surmise_cdf(ReferenceKind::GUE, s);
  });
  auto grid = arange(0.25, 8.0, 0.25);
  auto c = observables::number_variance(e, grid);
  double dev = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    dev = std::max(dev, std::fabs(c.values[i] - observables::sigma2_reference(ReferenceKind::GUE, grid[i])));
  o.check(sup < 0.02 && dev < 0.03);
  o.detail << "MC lambda=5: NNSD sup vs GUE " << fmt(sup) << ", Sigma2 maxdev vs GUE " << fmt(dev);
}

// ---------------------------------------------------------------- 5

void normalization(Outcome& o) {
  double worst = 0.0;
  for (auto conv : {rp::ScaleConvention::Calibrated, rp::ScaleConvention::Published})
    for (double lambda : {0.1, 0.5, 1.0, 5.0, 20.0}) {
      const double aL = rp::RpScales::from_lambda(lambda, conv).alpha_L;
      double n0 = quad::integrate([&](double s) { return rp::spacing_density(s, aL); }, 0.0, 60.0, 1e-12).value;
      double n1 = quad::integrate([&](double s) { return s * rp::spacing_density(s, aL); }, 0.0, 60.0, 1e-12).value;
      worst = std::max({worst, std::fabs(n0 - 1.0), std::fabs(n1 - 1.0)});
    }
  o.check(worst < 1e-4);
  o.detail << "max |int P - 1|, |int sP - 1| over both conventions = " << fmt(worst, 3);
}

// ---------------------------------------------------------------- 6

scattering::ScatteringConfig reference_config() {
  scattering::ScatteringConfig cfg;
  cfg.dim = kDim;
  cfg.fictitious = 30;
  cfg.target_T = {0.60, 0.68};
  cfg.tau_abs = 1.6;
  cfg.n_freq = 256;
  cfg.window_spacings = 100.0;
  return cfg;
}

ensembles::EnsembleSpec scatter_source(ensembles::EnsembleKind kind, double xi, int realizations, std::uint64_t seed) {
  ensembles::EnsembleSpec s;
  s.kind = kind;
  s.dim = kDim;
  s.xi = xi;
  s.realizations = realizations;
  s.master_seed = seed;
  return s;
}

void reciprocity(Outcome& o) {
  auto cfg = reference_config();
  const int M = cfg.channels();
  double rec = 0.0, uni = 0.0;
  auto src = scatter_source(ensembles::EnsembleKind::GOE, 0.0, 1, 9301);
  for (std::uint64_t r = 0; r < 4; ++r) {
    auto h = ensembles::sample_matrix(src, r);
    rng::Stream cs(src.master_seed, r, rng::Purpose::Coupling);
    std::vector<double> v(M, 0.02);
    v[0] = 0.05;
    v[1] = 0.04;
    auto w = scattering::build_coupling(kDim, M, v, cs);
    for (double f : {-0.6, -0.1, 0.0, 0.25, 0.7}) {
      Eigen::MatrixXcd s = scattering::s_matrix(h, w, f);
      rec = std::max(rec, (s - s.transpose()).cwiseAbs().maxCoeff());
      uni = std::max(uni, (s.adjoint() * s - Eigen::MatrixXcd::Identity(M, M)).cwiseAbs().maxCoeff());
    }
  }
  o.check(rec < 1e-10 && uni < 1e-8);
  scattering::BundleOptions bo;
  bo.calibration.seed = 9302;
  auto b0 = scattering::run_bundle(cfg, scatter_source(ensembles::EnsembleKind::GoeToGue, 0.0, 40, 9303), bo);
  auto b5 = scattering::run_bundle(cfg, scatter_source(ensembles::EnsembleKind::GoeToGue, 5.0, 40, 9304), bo);
  o.check(std::fabs(b0.c_cross.value - 1.0) < 1e-6 && std::fabs(b5.c_cross.value) < 0.05);
  o.detail << "max|S-S^T|=" << fmt(rec, 3) << ", max|S^H S-1|=" << fmt(uni, 3) << ", C_cross(xi=0)-1="
           << fmt(b0.c_cross.value - 1.0, 3) << ", C_cross(xi=5)=" << fmt(b5.c_cross.value, 3) << " +- "
           << fmt(b5.c_cross.stderr_, 2);
}

// ---------------------------------------------------------------- 7

void roundtrips(Outcome& o) {
  // Transmission coefficients: calibrated on one set of draws, checked on another.
  {
    auto cfg = reference_config();
    auto cal_src = scatter_source(ensembles::EnsembleKind::GOE, 0.0, 1, 0);
    scattering::CalibrationOptions copt;
    copt.seed = 9401;
    scattering::CalibrationSet set(cfg, cal_src, copt);
    auto cache = scattering::prepare_sweeps(cfg, scatter_source(ensembles::EnsembleKind::GOE, 0.0, 40, 9402));
    double worst = 0.0;
    for (double T : arange(0.05, 0.95, 0.15)) {
      cfg.target_T = {T, std::min(0.95, T + 0.05)};
      auto cal = set.solve(cfg);
      auto s = scattering::simulate(cache, cal.v);
      worst = std::max({worst, std::fabs(scattering::transmission(s.s_aa) - cfg.target_T[0]),
                        std::fabs(scattering::transmission(s.s_bb) - cfg.target_T[1])});
    }
    o.check(worst < 0.02);
    o.detail << "T max error " << fmt(worst, 3) << "; ";
  }
  // xi from C_cross with an independently seeded table.
  {
    auto cfg = reference_config();
    inference::XiTableConfig xc;
    xc.scattering = cfg;
    xc.xi_grid = arange(0.16, 0.40, 0.02);
    xc.realizations = 60;
    xc.seed = 9411;
    xc.calibration.seed = 9412;
    auto table = inference::build_xi_table(xc);
    scattering::BundleOptions bo;
    bo.calibration.seed = 9413;
    auto b = scattering::run_bundle(cfg, scatter_source(ensembles::EnsembleKind::GoeToGue, 0.28, 60, 9414), bo);
    auto f = inference::estimate_xi_crosscorr(b.c_cross.value, cfg.target_T[0], cfg.target_T[1], cfg.tau_abs, {table});
    o.check(std::fabs(f.estimate - 0.28) < 0.05);
    o.detail << "xi " << fmt(f.estimate, 3) << " (C_cross " << fmt(b.c_cross.value, 3) << "); ";
  }
  // tau_abs from the normalized correlation curve.
  {
    auto cfg = reference_config();
    inference::TauTableConfig tc;
    tc.scattering = cfg;
    tc.source = scatter_source(ensembles::EnsembleKind::GOE, 0.0, 40, 9421);
    tc.realizations = 40;
    tc.seed = 9421;
    tc.calibration.seed = 9422;
    auto table = inference::build_tau_table(tc);
    scattering::BundleOptions bo;
    bo.calibration.seed = 9423;
    bo.eps_grid = table.eps;
    auto b = scattering::run_bundle(cfg, scatter_source(ensembles::EnsembleKind::GOE, 0.0, 40, 9424), bo);
    auto f = inference::fit_tau_abs(b.c_ab_normalized, table);
    o.check(std::fabs(f.estimate - 1.6) < 0.25);
    o.detail << "tau_abs " << fmt(f.estimate, 3) << "; ";
  }
  // lambda from Sigma^2.
  for (double lambda : {0.2, 0.475, 0.8}) {
    auto e = matrix_ensemble(ensembles::EnsembleKind::RpPoissonToGue, lambda, 100,
                             static_cast<std::uint64_t>(9430 + std::lround(lambda * 1000)));
    auto c = observables::number_variance(e, arange(0.25, 5.0, 0.25));
    auto f = inference::fit_lambda_sigma2(c);
    o.check(std::fabs(f.estimate - lambda) < 0.05);
    o.detail << "lambda " << lambda << "->" << fmt(f.estimate, 3) << " ";
  }
}

// ---------------------------------------------------------------- 8

void ericson(Outcome& o) {
  auto cfg = reference_config();
  cfg.target_T = {0.9, 0.9};
  cfg.tau_abs = 10.0;
  cfg.n_freq = 1024;
  scattering::BundleOptions bo;
  bo.calibration.seed = 9501;
  auto b = scattering::run_bundle(cfg, scatter_source(ensembles::EnsembleKind::GOE, 0.0, 20, 9502), bo);
  o.check(b.has_amplitude && b.amplitude_ab.sup_distance < 0.02);
  o.detail << "T_a=" << fmt(b.T_a, 3) << " T_b=" << fmt(b.T_b, 3) << ", Rayleigh sup=" << fmt(b.amplitude_ab.sup_distance, 3);
}

// ---------------------------------------------------------------- 9

void length_peaks(Outcome& o) {
  auto g = billiards::BilliardGeometry::circle(0.25);
  auto f = unfolding::prepare({billiards::circle_eigenfrequencies(g, 20.0), unfolding::Source::Synthetic, ""}).levels;
  auto c = observables::length_spectrum(f, [&](double x) { return billiards::weyl_density(g, x); }, arange(0.0, 3.0, 0.001));
  auto peaks = observables::local_maxima(c);
  std::sort(peaks.begin(), peaks.end(), [](auto& a, auto& b) { return a.height > b.height; });
  for (double target : {1.0, 1.2990, 1.4142}) {
    double best = 1e9;
    for (std::size_t i = 0; i < std::min<std::size_t>(8, peaks.size()); ++i)
      best = std::min(best, std::fabs(peaks[i].position - target));
    o.check(best < 0.005);
    o.detail << target << " m: nearest top-8 peak off by " << fmt(best * 1000, 3) << " mm; ";
  }
}

// ---------------------------------------------------------------- 10

void power_spectra(Outcome& o) {
  auto p = observables::power_spectrum(poisson_ensemble());
  auto g = observables::power_spectrum(gue_ensemble());
  auto sp = observables::loglog_slope(p, 0.01, 0.1);
  auto sg = observables::loglog_slope(g, 0.01, 0.1);
  o.check(std::fabs(sp.slope + 2.0) < 0.15 && std::fabs(sg.slope + 1.0) < 0.15);
  o.detail << "Poisson slope " << fmt(sp.slope, 3) << ", GUE slope " << fmt(sg.slope, 3) << "; ";
  for (double lambda : {0.325, 0.625}) {
    auto r = observables::power_spectrum(rp_ensemble(lambda));
    auto sr = observables::loglog_slope(r, 0.01, 0.1);
    std::size_t n = std::min({r.grid.size(), p.grid.size(), g.grid.size()});
    int points = 0, between = 0;
    double worst_z = 1e9, worst_t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = r.grid[i];
      if (t < 0.01 || t > 0.1) continue;
      // The three curves share the grid only if they share the length.
      auto at = [&](const ObservableCurve& c, double& v, double& e) {
        auto it = std::lower_bound(c.grid.begin(), c.grid.end(), t - 1e-12);
        std::size_t j = std::min<std::size_t>(it - c.grid.begin(), c.grid.size() - 1);
        if (j > 0 && std::fabs(c.grid[j - 1] - t) < std::fabs(c.grid[j] - t)) --j;
        v = c.values[j];
        e = c.stderr_[j];
      };
      double vp, ep, vg, eg;
      at(p, vp, ep);
      at(g, vg, eg);
      ++points;
      const double vr = r.values[i], er = r.stderr_[i];
      double z = std::min((vr - vg) / std::hypot(er, eg), (vp - vr) / std::hypot(er, ep));
      if (z < worst_z) worst_z = z, worst_t = t;
      if (z > 2.0) ++between;
    }
    o.check(points > 0 && between == points);
    o.detail << "RP " << lambda << ": slope " << fmt(sr.slope, 3) << ", strictly between at " << between << "/" << points
             << " points, smallest margin " << fmt(worst_z, 3) << " sigma at tau=" << fmt(worst_t, 3) << "; ";
  }
}

struct Criterion {
  int id;
  const char* name;
  std::function<void(Outcome&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<Criterion> all{
      {1, "RP NNSD vs spacing surmise", rp_nnsd},
      {2, "RP number variance vs analytic", rp_sigma2},
      {3, "RP form factor and Fourier consistency", rp_form_factor},
      {4, "endpoint limits", endpoint_limits},
      {5, "spacing surmise normalization", normalization},
      {6, "scattering reciprocity and unitarity", reciprocity},
      {7, "calibration and inversion roundtrips", roundtrips},
      {8, "Ericson amplitude distribution", ericson},
      {9, "circle length spectrum peaks", length_peaks},
      {10, "power-spectrum slopes", power_spectra},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "error: " << e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.str().c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
