#include "inference/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "common/error.hpp"

namespace rmtlab::inference {

namespace {

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

struct GoldenResult {
  double x;
  double f;
  std::vector<double> trace;
};

// Golden-section minimisation of f on [a, b] until the bracket is
// shorter than tol; the ends are evaluated too so boundary minima win.
GoldenResult golden(const std::function<double(double)>& f, double a, double b, double tol) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(x1), f2 = f(x2);
  GoldenResult r{f1 < f2 ? x1 : x2, std::min(f1, f2), {}};
  r.trace.push_back(r.f);
  while (b - a > tol) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    }
    if (f1 < r.f) r.x = x1, r.f = f1;
    if (f2 < r.f) r.x = x2, r.f = f2;
    r.trace.push_back(r.f);
  }
  return r;
}

}  // namespace

// ------------------------------------------------------------- lambda

double sigma2_model(double L, double lambda, const LambdaFitOptions& opt) {
  if (!opt.window) return rp::sigma2_rp(L, lambda, opt.convention);
  return rp::window_average(lambda, *opt.window,
                            [&](double lam) { return rp::sigma2_rp(L, lam, opt.convention); });
}

FitResult fit_lambda_sigma2(const observables::ObservableCurve& sigma2, const LambdaFitOptions& opt) {
  sigma2.validate();
  require(opt.L_max > 0.0 && opt.lo >= 0.0 && opt.hi > opt.lo && opt.tol > 0.0, ErrorCode::InvalidArgument,
          "fit_lambda_sigma2: invalid search settings");
  require(!sigma2.grid.empty() && sigma2.grid.back() >= opt.L_max - 1e-9, ErrorCode::InsufficientData,
          "fit_lambda_sigma2: curve must extend to L_max = " + num(opt.L_max));
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < sigma2.grid.size(); ++i)
    if (sigma2.grid[i] > 0.0 && sigma2.grid[i] <= opt.L_max + 1e-12) pts.emplace_back(sigma2.grid[i], sigma2.values[i]);
  require(pts.size() >= 3, ErrorCode::InsufficientData, "fit_lambda_sigma2: fewer than 3 points with 0 < L <= L_max");
  auto objective = [&](double lam) {
    double acc = 0.0;
    for (auto [L, y] : pts) {
      double d = y - sigma2_model(L, lam, opt);
      acc += d * d;
    }
    return acc;
  };
  GoldenResult g = golden(objective, opt.lo, opt.hi, opt.tol);
  FitResult r;
  r.parameter = "lambda";
  r.estimate = g.x;
  r.lo = opt.lo;
  r.hi = opt.hi;
  r.objective = g.f;
  r.curve_used = "sigma2";
  r.trace = g.trace;
  r.settings["L_max"] = num(opt.L_max);
  r.settings["tolerance"] = num(opt.tol);
  r.settings["points"] = std::to_string(pts.size());
  r.settings["convention"] = opt.convention == rp::ScaleConvention::Calibrated ? "calibrated" : "published";
  r.settings["window"] = opt.window ? num(opt.window->p_lo) + "-" + num(opt.window->p_hi) : "none";
  if (g.x - opt.lo < 2.0 * opt.tol) r.bound = "<=";
  if (opt.hi - g.x < 2.0 * opt.tol) r.bound = ">=";
  const double h = 0.05 * (opt.hi - opt.lo) / 3.0;
  const double xm = std::max(opt.lo, r.estimate - h), xp = std::min(opt.hi, r.estimate + h);
  const double curvature = (objective(xm) + objective(xp) - 2.0 * r.objective) / (0.25 * (xp - xm) * (xp - xm));
  r.settings["curvature"] = num(curvature);
  if (!(std::fabs(curvature) > 1e-6)) r.warnings.push_back("flat objective: lambda is not identifiable from this curve");
  return r;
}

ScaleCalibration calibrate_rp_scales(const observables::ObservableCurve& sigma2, const std::vector<double>& spacings,
                                     double lambda, const rp::QuantileWindow& window) {
  require(lambda > 0.0, ErrorCode::InvalidArgument, "calibrate_rp_scales: lambda must be positive");
  require(spacings.size() >= 1000, ErrorCode::InsufficientData, "calibrate_rp_scales: need at least 1000 spacings");
  const auto nodes = rp::window_nodes(window);
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < sigma2.grid.size(); ++i)
    if (sigma2.grid[i] > 0.0) pts.emplace_back(sigma2.grid[i], sigma2.values[i]);
  require(pts.size() >= 3, ErrorCode::InsufficientData, "calibrate_rp_scales: Sigma^2 curve too short");
  auto sse = [&](double c) {
    double acc = 0.0;
    for (auto [L, y] : pts) {
      double m = 0.0;
      for (auto [f, w] : nodes) m += w * rp::number_variance(L, c * lambda * f);
      acc += (y - m) * (y - m);
    }
    return acc;
  };
  auto sup = [&](double c) {
    std::vector<std::pair<double, double>> comps;
    for (auto [f, w] : nodes) comps.emplace_back(c * lambda * f, w);
    rp::SpacingCdfTable t(comps);
    return observables::cdf_sup_distance(spacings, [&](double s) { return t.cdf(s); });
  };
  ScaleCalibration out;
  GoldenResult a = golden(sse, 0.5, 8.0, 1e-3);
  GoldenResult b = golden(sup, 0.3, 5.0, 1e-3);
  out.alpha_tilde_per_lambda = a.x;
  out.sigma2_rms = std::sqrt(a.f / pts.size());
  out.alpha_L_per_lambda = b.x;
  out.nnsd_sup = b.f;
  return out;
}

// ----------------------------------------------------------------- xi

bool XiTable::covers(double ta, double tb, double tau, double tol) const {
  return std::fabs(ta - T_a) <= tol && std::fabs(tb - T_b) <= tol && std::fabs(tau - tau_abs) <= tol;
}

namespace {

// Pool-adjacent-violators projection onto non-increasing sequences.
std::vector<double> monotone_decreasing(const std::vector<double>& y) {
  struct Block {
    double sum;
    int count;
  };
  std::vector<Block> st;
  for (double v : y) {
    st.push_back({v, 1});
    while (st.size() > 1 && st[st.size() - 2].sum / st[st.size() - 2].count < st.back().sum / st.back().count) {
      st[st.size() - 2].sum += st.back().sum;
      st[st.size() - 2].count += st.back().count;
      st.pop_back();
    }
  }
  std::vector<double> out;
  for (const Block& b : st) out.insert(out.end(), b.count, b.sum / b.count);
  return out;
}

}  // namespace

XiTable build_xi_table(const XiTableConfig& cfg) {
  cfg.scattering.validate();
  require(cfg.realizations >= 2, ErrorCode::InvalidArgument, "build_xi_table: need at least 2 realizations");
  std::vector<double> grid = cfg.xi_grid;
  if (grid.empty())
    for (int i = 0; i <= 50; ++i) grid.push_back(0.02 * i);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    require(grid[i] >= 0.0, ErrorCode::InvalidArgument, "build_xi_table: xi must be non-negative");
    require(i == 0 || grid[i] > grid[i - 1], ErrorCode::InvalidArgument, "build_xi_table: xi grid must ascend");
  }
  require(grid.size() >= 2, ErrorCode::InvalidArgument, "build_xi_table: need at least 2 grid points");

  ensembles::EnsembleSpec spec;
  spec.kind = ensembles::EnsembleKind::GoeToGue;
  spec.dim = cfg.scattering.dim;
  spec.master_seed = cfg.seed;
  spec.realizations = cfg.realizations;
  spec.xi = grid[grid.size() / 2];

  XiTable t;
  t.T_a = cfg.scattering.target_T[0];
  t.T_b = cfg.scattering.target_T[1];
  t.tau_abs = cfg.scattering.tau_abs;
  t.realizations = cfg.realizations;
  t.dim = cfg.scattering.dim;
  t.couplings = cfg.scattering.v.empty() ? scattering::calibrate_coupling(cfg.scattering, spec, cfg.calibration).v
                                          : cfg.scattering.v;
  for (double xi : grid) {
    spec.xi = xi;
    scattering::SeriesSet s = scattering::simulate(cfg.scattering, spec, t.couplings);
    scattering::Estimate e = scattering::cross_correlation_estimate(s.s_ab, s.s_ba, cfg.secular_window);
    t.xi.push_back(xi);
    t.c_cross_raw.push_back(e.value);
    t.stderr_.push_back(e.stderr_);
  }
  t.c_cross = monotone_decreasing(t.c_cross_raw);
  return t;
}

FitResult estimate_xi(double c, const XiTable& t) {
  require(!t.xi.empty() && t.xi.size() == t.c_cross.size(), ErrorCode::InvalidArgument, "estimate_xi: empty table");
  require(std::isfinite(c) && c >= -1e-9 && c <= 1.0 + 1e-9, ErrorCode::OutOfRange,
          "estimate_xi: C^cross = " + num(c) + " outside [0, 1]");
  FitResult r;
  r.parameter = "xi";
  r.lo = t.xi.front();
  r.hi = t.xi.back();
  r.curve_used = "c_cross";
  r.settings["T_a"] = num(t.T_a);
  r.settings["T_b"] = num(t.T_b);
  r.settings["tau_abs"] = num(t.tau_abs);
  r.settings["table_cells"] = std::to_string(t.xi.size());
  r.settings["table_realizations"] = std::to_string(t.realizations);
  r.settings["table_dim"] = std::to_string(t.dim);
  const auto& m = t.c_cross;
  if (c >= 1.0 - 1e-6) {
    r.estimate = 0.0;
    r.bound = t.xi.front() > 0.0 ? "<=" : "";
    return r;
  }
  require(c <= m.front(), ErrorCode::OutOfRange,
          "estimate_xi: C^cross = " + num(c) + " above the table maximum " + num(m.front()) +
              " at xi = " + num(t.xi.front()) + "; extrapolation refused");
  if (c <= m.back()) {
    r.estimate = t.xi.back();
    r.bound = ">=";
    r.objective = m.back() - c;
    r.warnings.push_back("C^cross at or below the table minimum; xi reported as a lower bound");
    return r;
  }
  for (std::size_t i = 0; i + 1 < m.size(); ++i) {
    if (c <= m[i] && c >= m[i + 1]) {
      if (m[i] == m[i + 1]) {
        r.estimate = 0.5 * (t.xi[i] + t.xi[i + 1]);
      } else {
        double w = (m[i] - c) / (m[i] - m[i + 1]);
        r.estimate = t.xi[i] + w * (t.xi[i + 1] - t.xi[i]);
      }
      return r;
    }
  }
  fail(ErrorCode::Internal, "estimate_xi: lookup fell through");
}

FitResult estimate_xi_crosscorr(double c, double T_a, double T_b, double tau_abs, const std::vector<XiTable>& tables) {
  for (const XiTable& t : tables)
    if (t.covers(T_a, T_b, tau_abs)) return estimate_xi(c, t);
  fail(ErrorCode::OutOfRange, "estimate_xi: no table for T_a = " + num(T_a) + ", T_b = " + num(T_b) +
                                  ", tau_abs = " + num(tau_abs));
}

// ------------------------------------------------------------ tau_abs

TauTable build_tau_table(const TauTableConfig& cfg) {
  require(cfg.realizations >= 1, ErrorCode::InvalidArgument, "build_tau_table: need at least one realization");
  TauTable t;
  t.tau = cfg.tau_grid;
  if (t.tau.empty())
    for (int i = 1; i <= 24; ++i) t.tau.push_back(0.25 * i);
  t.eps = cfg.eps_grid;
  if (t.eps.empty())
    for (int i = 0; i <= 40; ++i) t.eps.push_back(0.25 * i);
  for (std::size_t i = 0; i < t.tau.size(); ++i) {
    require(t.tau[i] >= 0.0, ErrorCode::InvalidArgument, "build_tau_table: tau_abs must be non-negative");
    require(i == 0 || t.tau[i] > t.tau[i - 1], ErrorCode::InvalidArgument, "build_tau_table: tau grid must ascend");
  }
  scattering::ScatteringConfig sc = cfg.scattering;
  sc.v.clear();
  sc.tau_abs = t.tau[t.tau.size() / 2];
  sc.validate();
  ensembles::EnsembleSpec spec = cfg.source;
  spec.dim = sc.dim;
  spec.master_seed = cfg.seed;
  spec.realizations = cfg.realizations;
  const scattering::SweepCache cache = scattering::prepare_sweeps(sc, spec);
  const scattering::CalibrationSet cal(sc, spec, cfg.calibration);
  const double df = cache.freqs[1] - cache.freqs[0];
  for (double tau : t.tau) {
    sc.tau_abs = tau;
    scattering::Calibration c = cal.solve(sc);
    scattering::SeriesSet s = scattering::simulate(cache, c.v);
    t.curves.push_back(scattering::normalized_correlation(s.s_ab, df, t.eps, cfg.secular_window).values);
  }
  t.settings["model"] = ensembles::kind_name(spec.kind);
  t.settings["lambda"] = num(spec.lambda);
  t.settings["xi"] = num(spec.xi);
  t.settings["T_a"] = num(sc.target_T[0]);
  t.settings["T_b"] = num(sc.target_T[1]);
  t.settings["realizations"] = std::to_string(cfg.realizations);
  t.settings["dim"] = std::to_string(sc.dim);
  t.settings["n_freq"] = std::to_string(sc.n_freq);
  return t;
}

FitResult fit_tau_abs(const observables::ObservableCurve& curve, const TauTable& t) {
  curve.validate();
  require(t.tau.size() >= 2 && t.curves.size() == t.tau.size(), ErrorCode::InvalidArgument, "fit_tau_abs: empty table");
  require(!curve.grid.empty() && curve.grid.front() <= t.eps.front() + 1e-12 &&
              curve.grid.back() >= t.eps.back() - 1e-12,
          ErrorCode::InsufficientData, "fit_tau_abs: curve must cover eps in [" + num(t.eps.front()) + ", " +
                                           num(t.eps.back()) + "]");
  std::vector<double> y(t.eps.size());
  for (std::size_t j = 0; j < t.eps.size(); ++j) {
    auto it = std::lower_bound(curve.grid.begin(), curve.grid.end(), t.eps[j] - 1e-12);
    std::size_t k = std::min<std::size_t>(it - curve.grid.begin(), curve.grid.size() - 1);
    if (k == 0 || std::fabs(curve.grid[k] - t.eps[j]) < 1e-12) {
      y[j] = curve.values[k];
    } else {
      double w = (t.eps[j] - curve.grid[k - 1]) / (curve.grid[k] - curve.grid[k - 1]);
      y[j] = (1 - w) * curve.values[k - 1] + w * curve.values[k];
    }
  }
  std::vector<double> d(t.tau.size(), 0.0);
  for (std::size_t i = 0; i < t.tau.size(); ++i)
    for (std::size_t j = 0; j < t.eps.size(); ++j) d[i] += std::pow(y[j] - t.curves[i][j], 2);
  FitResult r;
  r.parameter = "tau_abs";
  r.lo = t.tau.front();
  r.hi = t.tau.back();
  r.curve_used = "c_ab_normalized";
  r.settings = t.settings;
  r.settings["grid_points"] = std::to_string(t.tau.size());
  const std::size_t n = d.size();
  for (std::size_t i = 0; i < n; ++i) {
    bool left = i == 0 || d[i] < d[i - 1];
    bool right = i + 1 == n || d[i] < d[i + 1];
    if (left && right) r.local_minima.push_back(t.tau[i]);
  }
  r.trace = d;
  const std::size_t i = std::min_element(d.begin(), d.end()) - d.begin();
  r.estimate = t.tau[i];
  r.objective = d[i];
  if (i == 0) {
    r.bound = "<=";
  } else if (i + 1 == n) {
    r.bound = ">=";
  } else {
    // Parabola through three (possibly unequally spaced) points.
    const double x0 = t.tau[i - 1], x1 = t.tau[i], x2 = t.tau[i + 1];
    const double y0 = d[i - 1], y1 = d[i], y2 = d[i + 1];
    const double num_ = (x1 - x0) * (x1 - x0) * (y1 - y2) - (x1 - x2) * (x1 - x2) * (y1 - y0);
    const double den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    if (den != 0.0) {
      double xv = std::clamp(x1 - 0.5 * num_ / den, x0, x2);
      r.estimate = xv;
      // Lagrange form of the parabola at xv.
      r.objective = y0 * (xv - x1) * (xv - x2) / ((x0 - x1) * (x0 - x2)) +
                    y1 * (xv - x0) * (xv - x2) / ((x1 - x0) * (x1 - x2)) +
                    y2 * (xv - x0) * (xv - x1) / ((x2 - x0) * (x2 - x1));
      r.objective = std::max(0.0, r.objective);
    }
  }
  if (r.local_minima.size() > 1) r.warnings.push_back("objective has " + std::to_string(r.local_minima.size()) +
                                                      " local minima over the tau_abs grid");
  if (!r.bound.empty()) r.warnings.push_back("tau_abs estimate at the grid edge");
  return r;
}

}  // namespace rmtlab::inference
