#include "scattering/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "common/error.hpp"
#include "common/parallel.hpp"

namespace rmtlab::scattering {

namespace {

constexpr double kPi = 3.14159265358979323846;
const cplx kI{0.0, 1.0};

// Single-channel relation T = 4x / (1 + x)^2 solved on the weak branch.
double x_from_T(double T) {
  if (T <= 0.0) return 0.0;
  if (T >= 1.0) return 1.0;
  return (2.0 - T - 2.0 * std::sqrt(1.0 - T)) / T;
}

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

ensembles::EnsembleSpec with_dim(const ScatteringConfig& cfg, ensembles::EnsembleSpec source) {
  source.dim = cfg.dim;
  source.validate();
  return source;
}

ResonanceSystem make_system(const ScatteringConfig& cfg, const ensembles::EnsembleSpec& spec, std::uint64_t index) {
  ensembles::HermitianMatrix h = ensembles::sample_matrix(spec, index);
  rng::Stream cs(spec.master_seed, index, rng::Purpose::Coupling);
  Eigen::MatrixXd q = orthonormal_channels(cfg.dim, cfg.channels(), cs);
  return ResonanceSystem(h, q, cfg.window_spacings);
}

void check_series(const std::vector<std::vector<cplx>>& s, const char* what) {
  require(!s.empty(), ErrorCode::InsufficientData, std::string(what) + ": no series supplied");
  for (const auto& x : s)
    require(x.size() == s.front().size() && !x.empty(), ErrorCode::InvalidArgument,
            std::string(what) + ": series must share one non-empty frequency grid");
}

}  // namespace

void ScatteringConfig::validate() const {
  require(dim >= 2, ErrorCode::InvalidArgument, "scattering: dim must be at least 2");
  require(fictitious >= 1, ErrorCode::InvalidArgument, "scattering: fictitious channel count must be at least 1");
  require(channels() <= dim, ErrorCode::InvalidArgument,
          "scattering: channel count " + std::to_string(channels()) + " exceeds dim " + std::to_string(dim));
  for (double T : target_T)
    require(T >= 0.0 && T <= 1.0, ErrorCode::InvalidArgument, fmt("scattering: target T %.6g outside [0, 1]", T));
  require(tau_abs >= 0.0, ErrorCode::InvalidArgument, "scattering: tau_abs must be non-negative");
  require(fictitious_T() <= 1.0, ErrorCode::InvalidArgument, "scattering: tau_abs / fictitious exceeds 1");
  require(v.empty() || static_cast<int>(v.size()) == channels(), ErrorCode::InvalidArgument,
          "scattering: coupling list must have one entry per channel");
  for (double x : v) require(std::isfinite(x), ErrorCode::InvalidArgument, "scattering: non-finite coupling");
  require(n_freq >= 2, ErrorCode::InvalidArgument, "scattering: n_freq must be at least 2");
  require(window_spacings >= 2.0 && window_spacings < dim, ErrorCode::InvalidArgument,
          "scattering: window must span between 2 and dim mean spacings");
}

Eigen::MatrixXd orthonormal_channels(int n, int channels, rng::Stream& stream) {
  require(channels >= 1, ErrorCode::InvalidArgument, "build_coupling: need at least one channel");
  require(channels <= n, ErrorCode::InvalidArgument,
          "build_coupling: " + std::to_string(channels) + " channels exceed dimension " + std::to_string(n));
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd g(n, channels);
  for (int e = 0; e < channels; ++e)
    for (int i = 0; i < n; ++i) g(i, e) = gauss(stream);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, channels);
}

Eigen::MatrixXd build_coupling(int n, int channels, const std::vector<double>& v, rng::Stream& stream) {
  require(static_cast<int>(v.size()) == channels, ErrorCode::InvalidArgument,
          "build_coupling: one amplitude per channel required");
  Eigen::MatrixXd w = orthonormal_channels(n, channels, stream);
  const double sn = std::sqrt(static_cast<double>(n));
  for (int e = 0; e < channels; ++e) w.col(e) *= sn * v[e];
  return w;
}

Eigen::MatrixXcd s_matrix(const ensembles::HermitianMatrix& h, const Eigen::MatrixXd& w, cplx f) {
  const int n = h.dim();
  require(w.rows() == n, ErrorCode::InvalidArgument, "s_matrix: coupling rows must equal the Hamiltonian dimension");
  const int m = static_cast<int>(w.cols());
  Eigen::MatrixXcd a = -h.dense();
  a.diagonal().array() += f;
  a += kI * kPi * (w * w.transpose()).cast<cplx>();
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(a);
  if (!lu.isInvertible())
    fail(ErrorCode::Numeric, fmt("s_matrix: singular system at frequency %.12g%+.3gi", f.real(), f.imag()));
  Eigen::MatrixXcd x = lu.solve(w.cast<cplx>());
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Identity(m, m) - 2.0 * kPi * kI * (w.transpose().cast<cplx>() * x);
  require(s.allFinite(), ErrorCode::Numeric, fmt("s_matrix: non-finite result at frequency %.12g", f.real()));
  return s;
}

ResonanceSystem::ResonanceSystem(const ensembles::HermitianMatrix& h, const Eigen::MatrixXd& q,
                                 double window_spacings) {
  const int n = h.dim();
  require(q.rows() == n, ErrorCode::InvalidArgument, "ResonanceSystem: coupling rows must equal dimension");
  ensembles::Eigensystem es = ensembles::eigensystem(h);
  const int c = n / 2;
  const int half = static_cast<int>(std::lround(0.5 * window_spacings));
  require(c - half >= 0 && c + half < n, ErrorCode::InvalidArgument,
          "ResonanceSystem: window exceeds the spectrum");
  origin_ = 0.5 * (es.values[c - 1] + es.values[c]);
  unit_ = (es.values[c + half] - es.values[c - half]) / (2.0 * half);
  require(unit_ > 0.0, ErrorCode::DegenerateInput, "ResonanceSystem: zero central spacing");
  energies_.resize(n);
  for (int i = 0; i < n; ++i) energies_[i] = (es.values[i] - origin_) / unit_;
  wt_re_ = es.vec_re.transpose() * q;
  if (es.vec_im.size() != 0) wt_im_ = -(es.vec_im.transpose() * q);
}

Eigen::MatrixXcd ResonanceSystem::khat(cplx f) const {
  const int n = dim();
  Eigen::MatrixXcd wt = is_real() ? wt_re_.cast<cplx>() : Eigen::MatrixXcd(wt_re_.cast<cplx>() + kI * wt_im_.cast<cplx>());
  Eigen::VectorXcd g(n);
  for (int i = 0; i < n; ++i) g(i) = 1.0 / (f - energies_[i]);
  return wt.adjoint() * (g.asDiagonal() * wt);
}

std::vector<std::pair<int, int>> packed_pairs(int channels) {
  std::vector<std::pair<int, int>> p;
  for (int e = 0; e < channels; ++e)
    for (int f = e; f < channels; ++f) p.emplace_back(e, f);
  return p;
}

void ResonanceSystem::khat_sweep(const std::vector<double>& freqs, Eigen::MatrixXd& re, Eigen::MatrixXd& im) const {
  const int n = dim();
  const int m = channels();
  const auto pairs = packed_pairs(m);
  const int np = static_cast<int>(pairs.size());
  Eigen::MatrixXd g(freqs.size(), n);
  for (std::size_t k = 0; k < freqs.size(); ++k)
    for (int i = 0; i < n; ++i) g(k, i) = 1.0 / (freqs[k] - energies_[i]);
  require(g.allFinite(), ErrorCode::Numeric, "khat_sweep: frequency coincides with an eigenvalue");
  Eigen::MatrixXd pre(n, np);
  Eigen::MatrixXd pim;
  if (!is_real()) pim.resize(n, np);
  for (int p = 0; p < np; ++p) {
    const auto [e, f] = pairs[p];
    if (is_real()) {
      pre.col(p) = wt_re_.col(e).cwiseProduct(wt_re_.col(f));
    } else {
      pre.col(p) = wt_re_.col(e).cwiseProduct(wt_re_.col(f)) + wt_im_.col(e).cwiseProduct(wt_im_.col(f));
      pim.col(p) = wt_re_.col(e).cwiseProduct(wt_im_.col(f)) - wt_im_.col(e).cwiseProduct(wt_re_.col(f));
    }
  }
  re.noalias() = g * pre;
  if (is_real())
    im = Eigen::MatrixXd::Zero(re.rows(), re.cols());
  else
    im.noalias() = g * pim;
}

Eigen::MatrixXcd unpack_khat(const Eigen::MatrixXd& re, const Eigen::MatrixXd& im, int row, int channels) {
  Eigen::MatrixXcd k(channels, channels);
  int p = 0;
  for (int e = 0; e < channels; ++e)
    for (int f = e; f < channels; ++f, ++p) {
      cplx z(re(row, p), im(row, p));
      k(e, f) = z;
      k(f, e) = std::conj(z);
    }
  return k;
}

Eigen::MatrixXcd s_from_khat(const Eigen::MatrixXcd& khat, const std::vector<double>& v, int n,
                             const std::vector<int>& columns) {
  const int m = static_cast<int>(khat.rows());
  require(static_cast<int>(v.size()) == m, ErrorCode::InvalidArgument, "s_from_khat: one amplitude per channel");
  Eigen::VectorXd d(m);
  for (int e = 0; e < m; ++e) d(e) = std::sqrt(static_cast<double>(n)) * v[e];
  Eigen::MatrixXcd a = (kI * kPi) * (d.asDiagonal() * khat * d.asDiagonal());
  a.diagonal().array() += 1.0;
  Eigen::MatrixXcd rhs = Eigen::MatrixXcd::Zero(m, columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) rhs(columns[j], j) = 1.0;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
  Eigen::MatrixXcd s = 2.0 * lu.solve(rhs) - rhs;
  require(s.allFinite(), ErrorCode::Numeric, "s_from_khat: singular system");
  return s;
}

std::vector<double> frequency_grid(const ScatteringConfig& cfg) {
  std::vector<double> f(cfg.n_freq);
  const double w = cfg.window_spacings;
  for (int k = 0; k < cfg.n_freq; ++k) f[k] = -0.5 * w + w * k / (cfg.n_freq - 1);
  return f;
}

CalibrationSet::CalibrationSet(const ScatteringConfig& cfg, const ensembles::EnsembleSpec& source,
                               const CalibrationOptions& opt)
    : dim_(cfg.dim), channels_(cfg.channels()), tol_(opt.tol) {
  cfg.validate();
  require(opt.realizations >= 1 && opt.centres >= 1 && opt.smoothing > 0.0 && opt.tol > 0.0,
          ErrorCode::InvalidArgument, "calibrate_coupling: invalid options");
  ensembles::EnsembleSpec spec = with_dim(cfg, source);
  spec.master_seed = rng::mix64(opt.seed ^ 0xCA11B0A7ULL);
  // Lorentzian-smoothed S(f + i I) equals the Lorentzian frequency average
  // of S on the real axis, so a few centres per realization suffice.
  std::vector<cplx> centres(opt.centres);
  for (int c = 0; c < opt.centres; ++c) {
    double t = opt.centres == 1 ? 0.5 : static_cast<double>(c) / (opt.centres - 1);
    centres[c] = cplx(cfg.window_spacings * (-0.4 + 0.8 * t), opt.smoothing);
  }
  khat_.resize(static_cast<std::size_t>(opt.realizations) * opt.centres);
  parallel_for(opt.realizations, [&](std::size_t r) {
    ResonanceSystem sys = make_system(cfg, spec, r);
    for (int c = 0; c < opt.centres; ++c) khat_[r * opt.centres + c] = sys.khat(centres[c]);
  });
}

std::vector<double> CalibrationSet::transmissions(const std::vector<double>& v) const {
  const int m = channels_;
  std::vector<int> all(m);
  for (int e = 0; e < m; ++e) all[e] = e;
  std::vector<Eigen::VectorXcd> diag(khat_.size());
  parallel_for(khat_.size(), [&](std::size_t i) { diag[i] = s_from_khat(khat_[i], v, dim_, all).diagonal(); });
  Eigen::VectorXcd mean = Eigen::VectorXcd::Zero(m);
  for (const auto& d : diag) mean += d;
  mean /= static_cast<double>(diag.size());
  std::vector<double> T(m);
  for (int e = 0; e < m; ++e) T[e] = 1.0 - std::norm(mean(e));
  return T;
}

Calibration CalibrationSet::solve(const ScatteringConfig& cfg) const {
  cfg.validate();
  require(cfg.dim == dim_ && cfg.channels() == channels_, ErrorCode::InvalidArgument,
          "calibrate_coupling: configuration does not match the calibration ensemble");
  const int m = channels_;
  const double tf = cfg.fictitious_T();
  std::array<double, kAntennas + 1> target{cfg.target_T[0], cfg.target_T[1], tf};
  std::array<double, kAntennas + 1> x{};
  for (int g = 0; g <= kAntennas; ++g) x[g] = x_from_T(target[g]);
  auto amplitudes = [&] {
    std::vector<double> v(m);
    for (int e = 0; e < m; ++e) v[e] = std::sqrt(x[std::min(e, kAntennas)]) / kPi;
    return v;
  };

  constexpr int kMaxIter = 60;
  Calibration out;
  std::array<double, kAntennas + 1> got{};
  for (int it = 1; it <= kMaxIter; ++it) {
    std::vector<double> T = transmissions(amplitudes());
    got = {T[0], T[1], 0.0};
    for (int e = kAntennas; e < m; ++e) got[2] += T[e];
    got[2] /= cfg.fictitious;
    out.iterations = it;
    bool done = true;
    for (int g = 0; g <= kAntennas; ++g)
      if (std::fabs(got[g] - target[g]) > tol_) done = false;
    if (done) break;
    if (it == kMaxIter) {
      char buf[256];
      std::snprintf(buf, sizeof buf,
                    "calibrate_coupling: no convergence, targets (%.4f, %.4f, %.4f) reached (%.4f, %.4f, %.4f)",
                    target[0], target[1], target[2], got[0], got[1], got[2]);
      fail(ErrorCode::Calibration, buf);
    }
    // Each channel's x is rescaled by the ratio the single-channel law
    // predicts between target and achieved T.
    for (int g = 0; g <= kAntennas; ++g) {
      if (target[g] <= 0.0) continue;
      require(got[g] > 0.0 && got[g] < 1.0, ErrorCode::Calibration,
              fmt("calibrate_coupling: search left the bracket (T = %.6g at x = %.6g)", got[g], x[g]));
      x[g] = std::clamp(x[g] * x_from_T(target[g]) / x_from_T(got[g]), 1e-12, 1.0);
    }
  }
  out.v = amplitudes();
  out.T_antenna = {got[0], got[1]};
  out.T_fictitious = got[2];
  return out;
}

Calibration calibrate_coupling(const ScatteringConfig& cfg, const ensembles::EnsembleSpec& source,
                               const CalibrationOptions& opt) {
  return CalibrationSet(cfg, source, opt).solve(cfg);
}

namespace {

void fill_series(SeriesSet& out, std::size_t r, const Eigen::MatrixXd& re, const Eigen::MatrixXd& im,
                 const std::vector<double>& v, int dim, int m) {
  static const std::vector<int> cols{0, 1};
  for (std::size_t k = 0; k < out.freqs.size(); ++k) {
    Eigen::MatrixXcd s = s_from_khat(unpack_khat(re, im, static_cast<int>(k), m), v, dim, cols);
    out.s_aa[r][k] = s(0, 0);
    out.s_ba[r][k] = s(1, 0);
    out.s_ab[r][k] = s(0, 1);
    out.s_bb[r][k] = s(1, 1);
  }
}

void allocate(SeriesSet& out, std::size_t R) {
  for (auto* s : {&out.s_aa, &out.s_ab, &out.s_ba, &out.s_bb})
    s->assign(R, std::vector<cplx>(out.freqs.size()));
}

}  // namespace

SeriesSet simulate(const ScatteringConfig& cfg, const ensembles::EnsembleSpec& source, const std::vector<double>& v) {
  cfg.validate();
  require(static_cast<int>(v.size()) == cfg.channels(), ErrorCode::InvalidArgument,
          "simulate: one amplitude per channel required");
  require(source.realizations >= 1, ErrorCode::InvalidArgument, "simulate: need at least one realization");
  const ensembles::EnsembleSpec spec = with_dim(cfg, source);
  SeriesSet out;
  out.freqs = frequency_grid(cfg);
  allocate(out, source.realizations);
  parallel_for(source.realizations, [&](std::size_t r) {
    ResonanceSystem sys = make_system(cfg, spec, r);
    Eigen::MatrixXd re, im;
    sys.khat_sweep(out.freqs, re, im);
    fill_series(out, r, re, im, v, cfg.dim, cfg.channels());
  });
  return out;
}

SweepCache prepare_sweeps(const ScatteringConfig& cfg, const ensembles::EnsembleSpec& source) {
  cfg.validate();
  require(source.realizations >= 1, ErrorCode::InvalidArgument, "prepare_sweeps: need at least one realization");
  const ensembles::EnsembleSpec spec = with_dim(cfg, source);
  SweepCache c;
  c.dim = cfg.dim;
  c.channels = cfg.channels();
  c.freqs = frequency_grid(cfg);
  c.re.resize(source.realizations);
  c.im.resize(source.realizations);
  parallel_for(source.realizations, [&](std::size_t r) {
    ResonanceSystem sys = make_system(cfg, spec, r);
    sys.khat_sweep(c.freqs, c.re[r], c.im[r]);
  });
  return c;
}

SeriesSet simulate(const SweepCache& cache, const std::vector<double>& v) {
  require(static_cast<int>(v.size()) == cache.channels, ErrorCode::InvalidArgument,
          "simulate: one amplitude per channel required");
  SeriesSet out;
  out.freqs = cache.freqs;
  allocate(out, cache.re.size());
  parallel_for(cache.re.size(), [&](std::size_t r) {
    fill_series(out, r, cache.re[r], cache.im[r], v, cache.dim, cache.channels);
  });
  return out;
}

std::vector<cplx> fluctuating(const std::vector<cplx>& s, int window) {
  const std::size_t n = s.size();
  std::size_t w = window <= 0 ? n : std::min<std::size_t>(window, n);
  std::vector<cplx> out(n);
  for (std::size_t lo = 0; lo < n;) {
    std::size_t hi = lo + w;
    if (hi > n || n - hi < w) hi = n;
    cplx mean = 0.0;
    for (std::size_t i = lo; i < hi; ++i) mean += s[i];
    mean /= static_cast<double>(hi - lo);
    for (std::size_t i = lo; i < hi; ++i) out[i] = s[i] - mean;
    lo = hi;
  }
  return out;
}

double transmission(const std::vector<std::vector<cplx>>& see) {
  check_series(see, "transmission");
  cplx mean = 0.0;
  std::size_t count = 0;
  for (const auto& s : see)
    for (cplx z : s) mean += z, ++count;
  mean /= static_cast<double>(count);
  return 1.0 - std::norm(mean);
}

namespace {

struct ComplexCorrelation {
  std::vector<cplx> mean;
  std::vector<double> stderr_re;
};

ComplexCorrelation correlate(const std::vector<std::vector<cplx>>& s, double df, const std::vector<double>& eps,
                             int window, const char* what) {
  check_series(s, what);
  require(df > 0.0, ErrorCode::InvalidArgument, std::string(what) + ": frequency step must be positive");
  require(!eps.empty(), ErrorCode::InvalidArgument, std::string(what) + ": empty eps grid");
  const std::size_t n = s.front().size();
  const std::size_t span = window <= 0 ? n : std::min<std::size_t>(window, n);
  for (double e : eps) {
    require(e >= 0.0, ErrorCode::InvalidArgument, std::string(what) + ": eps must be non-negative");
    require(e / df + 1.0 < 0.5 * span, ErrorCode::InsufficientData,
            fmt((std::string(what) + ": eps = %.6g needs a window longer than %.6g").c_str(), e, 2.0 * (e + df)));
  }
  const std::size_t R = s.size();
  std::vector<std::vector<cplx>> per(R, std::vector<cplx>(eps.size()));
  parallel_for(R, [&](std::size_t r) {
    std::vector<cplx> fl = fluctuating(s[r], window);
    auto lag = [&](std::size_t k) {
      cplx acc = 0.0;
      for (std::size_t i = 0; i + k < n; ++i) acc += fl[i] * std::conj(fl[i + k]);
      return acc / static_cast<double>(n - k);
    };
    for (std::size_t j = 0; j < eps.size(); ++j) {
      double u = eps[j] / df;
      std::size_t k = static_cast<std::size_t>(std::floor(u));
      double t = u - k;
      cplx c = lag(k);
      if (t > 1e-12) c = (1.0 - t) * c + t * lag(k + 1);
      per[r][j] = c;
    }
  });
  ComplexCorrelation out;
  out.mean.assign(eps.size(), 0.0);
  out.stderr_re.assign(eps.size(), 0.0);
  for (std::size_t j = 0; j < eps.size(); ++j) {
    cplx m = 0.0;
    for (std::size_t r = 0; r < R; ++r) m += per[r][j];
    m /= static_cast<double>(R);
    out.mean[j] = m;
    if (R > 1) {
      double v = 0.0;
      for (std::size_t r = 0; r < R; ++r) v += std::pow(per[r][j].real() - m.real(), 2);
      out.stderr_re[j] = std::sqrt(v / (R - 1) / R);
    }
  }
  return out;
}

}  // namespace

observables::ObservableCurve two_point_correlation(const std::vector<std::vector<cplx>>& s, double df,
                                                   const std::vector<double>& eps_grid, int window) {
  ComplexCorrelation c = correlate(s, df, eps_grid, window, "two_point_correlation");
  observables::ObservableCurve out;
  out.observable = observables::Observable::SCorrelation;
  out.grid = eps_grid;
  for (cplx z : c.mean) out.values.push_back(z.real());
  if (s.size() > 1) out.stderr_ = c.stderr_re;
  out.meta["series"] = std::to_string(s.size());
  out.meta["secular_window"] = std::to_string(window);
  out.validate();
  return out;
}

observables::ObservableCurve normalized_correlation(const std::vector<std::vector<cplx>>& s, double df,
                                                    const std::vector<double>& eps_grid, int window) {
  std::vector<double> grid = eps_grid;
  const bool has_zero = !grid.empty() && grid.front() == 0.0;
  if (!has_zero) grid.insert(grid.begin(), 0.0);
  ComplexCorrelation c = correlate(s, df, grid, window, "normalized_correlation");
  const double c0 = c.mean.front().real();
  require(c0 > 0.0, ErrorCode::DegenerateInput, "normalized_correlation: zero fluctuation variance");
  observables::ObservableCurve out;
  out.observable = observables::Observable::SCorrelation;
  for (std::size_t j = has_zero ? 0 : 1; j < grid.size(); ++j) {
    out.grid.push_back(grid[j]);
    out.values.push_back(std::abs(c.mean[j]) / c0);
  }
  out.meta["normalized"] = "modulus";
  out.validate();
  return out;
}

Estimate cross_correlation_estimate(const std::vector<std::vector<cplx>>& s_ab,
                                    const std::vector<std::vector<cplx>>& s_ba, int window) {
  check_series(s_ab, "cross_correlation");
  check_series(s_ba, "cross_correlation");
  require(s_ab.size() == s_ba.size() && s_ab.front().size() == s_ba.front().size(), ErrorCode::InvalidArgument,
          "cross_correlation: S_ab and S_ba must share realizations and frequency grid");
  const std::size_t R = s_ab.size();
  std::vector<std::array<double, 3>> part(R);
  double raw = 0.0;
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t i = 0; i < s_ab[r].size(); ++i) raw += std::norm(s_ab[r][i]) + std::norm(s_ba[r][i]);
    std::vector<cplx> a = fluctuating(s_ab[r], window);
    std::vector<cplx> b = fluctuating(s_ba[r], window);
    part[r] = {0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < a.size(); ++i) {
      part[r][0] += (a[i] * std::conj(b[i])).real();
      part[r][1] += std::norm(a[i]);
      part[r][2] += std::norm(b[i]);
    }
  }
  std::array<double, 3> tot{0.0, 0.0, 0.0};
  for (const auto& p : part)
    for (int j = 0; j < 3; ++j) tot[j] += p[j];
  // Fluctuations at rounding level of the raw signal count as zero variance.
  const double floor = 1e-24 * raw;
  require(tot[1] > floor && tot[2] > floor, ErrorCode::DegenerateInput, "cross_correlation: zero-variance input");
  Estimate est;
  est.value = tot[0] / std::sqrt(tot[1] * tot[2]);
  if (R > 1) {
    std::vector<double> loo(R);
    double mean = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
      double n = tot[0] - part[r][0], va = tot[1] - part[r][1], vb = tot[2] - part[r][2];
      loo[r] = va > 0.0 && vb > 0.0 ? n / std::sqrt(va * vb) : est.value;
      mean += loo[r];
    }
    mean /= R;
    double v = 0.0;
    for (double x : loo) v += (x - mean) * (x - mean);
    est.stderr_ = std::sqrt(v * (R - 1) / R);
  }
  return est;
}

double cross_correlation(const std::vector<std::vector<cplx>>& s_ab, const std::vector<std::vector<cplx>>& s_ba,
                         int window) {
  return cross_correlation_estimate(s_ab, s_ba, window).value;
}

DetailedBalance detailed_balance_delta(const std::vector<cplx>& s_ab, const std::vector<cplx>& s_ba, int window) {
  require(s_ab.size() == s_ba.size() && !s_ab.empty(), ErrorCode::InvalidArgument,
          "detailed_balance_delta: series must be non-empty and of equal length");
  DetailedBalance out;
  const std::size_t n = s_ab.size();
  out.delta.resize(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double a = std::abs(s_ab[i]);
    double b = std::abs(s_ba[i]);
    if (a + b == 0.0) {
      out.delta[i] = std::numeric_limits<double>::quiet_NaN();
      ++out.excluded;
      continue;
    }
    out.delta[i] = std::fabs(a - b) / (a + b);
    sum += out.delta[i];
  }
  require(out.excluded < n, ErrorCode::DegenerateInput, "detailed_balance_delta: all amplitudes vanish");
  out.mean = sum / static_cast<double>(n - out.excluded);
  const std::size_t w = window <= 0 ? n : std::min<std::size_t>(window, n);
  const std::size_t step = std::max<std::size_t>(1, w / 8);
  for (std::size_t lo = 0; lo + w <= n; lo += step) {
    double acc = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = lo; i < lo + w; ++i)
      if (!std::isnan(out.delta[i])) acc += out.delta[i], ++cnt;
    out.sliding.push_back(cnt ? acc / cnt : std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

std::vector<double> fluctuating_amplitudes(const std::vector<std::vector<cplx>>& s, int window) {
  std::vector<double> a;
  for (const auto& x : s)
    for (cplx z : fluctuating(x, window)) a.push_back(std::abs(z));
  return a;
}

AmplitudeDistribution amplitude_distribution(const std::vector<double>& amplitudes, double bin_width) {
  require(amplitudes.size() >= 10000, ErrorCode::InsufficientData,
          "amplitude_distribution: at least 10000 samples required, got " + std::to_string(amplitudes.size()));
  std::vector<double> x = amplitudes;
  std::sort(x.begin(), x.end());
  require(x.front() >= 0.0, ErrorCode::InvalidArgument, "amplitude_distribution: amplitudes must be non-negative");
  double m2 = 0.0;
  for (double a : x) m2 += a * a;
  m2 /= static_cast<double>(x.size());
  require(m2 > 0.0, ErrorCode::DegenerateInput, "amplitude_distribution: all amplitudes vanish");
  AmplitudeDistribution out;
  out.rayleigh_sigma = std::sqrt(0.5 * m2);
  const double s2 = 2.0 * out.rayleigh_sigma * out.rayleigh_sigma;
  out.sup_distance = observables::cdf_sup_distance(x, [s2](double a) { return -std::expm1(-a * a / s2); });

  const double h = bin_width > 0.0 ? bin_width : x.back() / 50.0;
  const std::size_t bins = static_cast<std::size_t>(std::floor(x.back() / h)) + 1;
  std::vector<double> counts(bins, 0.0);
  for (double a : x) counts[std::min(bins - 1, static_cast<std::size_t>(a / h))] += 1.0;
  auto& c = out.histogram;
  c.observable = observables::Observable::AmplitudeDist;
  for (std::size_t b = 0; b < bins; ++b) {
    c.grid.push_back((b + 0.5) * h);
    c.values.push_back(counts[b] / (x.size() * h));
  }
  c.meta["bin_width"] = fmt("%.6g", h);
  c.meta["rayleigh_sigma"] = fmt("%.6g", out.rayleigh_sigma);
  c.meta["rayleigh_sup_distance"] = fmt("%.6g", out.sup_distance);
  return out;
}

Bundle analyze(const SeriesSet& s, const BundleOptions& opt) {
  check_series(s.s_ab, "analyze");
  require(s.freqs.size() == s.s_ab.front().size() && s.freqs.size() >= 2, ErrorCode::InvalidArgument,
          "analyze: frequency grid does not match the series");
  const double df = (s.freqs.back() - s.freqs.front()) / (s.freqs.size() - 1);
  for (std::size_t i = 1; i < s.freqs.size(); ++i)
    require(std::fabs(s.freqs[i] - s.freqs[i - 1] - df) <= 1e-6 * df, ErrorCode::InvalidArgument,
            "analyze: frequency grid must be uniform");
  Bundle b;
  b.T_a = transmission(s.s_aa);
  b.T_b = transmission(s.s_bb);
  std::vector<double> eps = opt.eps_grid;
  if (eps.empty())
    for (int i = 0; i <= 100; ++i) eps.push_back(0.1 * i);
  b.c_ab = two_point_correlation(s.s_ab, df, eps, opt.secular_window);
  b.c_ab_normalized = normalized_correlation(s.s_ab, df, eps, opt.secular_window);
  b.c_cross = cross_correlation_estimate(s.s_ab, s.s_ba, opt.secular_window);
  double dsum = 0.0;
  for (std::size_t r = 0; r < s.s_ab.size(); ++r)
    dsum += detailed_balance_delta(s.s_ab[r], s.s_ba[r], opt.secular_window).mean;
  b.delta_mean = dsum / s.s_ab.size();
  std::vector<double> amp = fluctuating_amplitudes(s.s_ab, opt.secular_window);
  if (amp.size() >= 10000) {
    b.amplitude_ab = amplitude_distribution(amp, opt.amplitude_bin);
    b.has_amplitude = true;
  } else {
    b.warnings.push_back("amplitude distribution skipped: " + std::to_string(amp.size()) +
                         " samples, at least 10000 required");
  }
  if (opt.keep_series) b.series = s;
  return b;
}

Bundle run_bundle(const ScatteringConfig& cfg, const ensembles::EnsembleSpec& source, const BundleOptions& opt) {
  cfg.validate();
  Calibration cal;
  if (cfg.v.empty()) {
    cal = calibrate_coupling(cfg, source, opt.calibration);
  } else {
    cal.v = cfg.v;
  }
  Bundle b = analyze(simulate(cfg, source, cal.v), opt);
  b.calibration = cal;
  return b;
}

}  // namespace rmtlab::scattering
