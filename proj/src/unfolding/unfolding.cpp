#include "unfolding/unfolding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <Eigen/Dense>

#include "common/error.hpp"

namespace rmtlab::unfolding {

namespace {

// Legendre P_0..P_d at t together with derivatives.
void legendre(double t, int d, std::vector<double>& p, std::vector<double>* dp) {
  p.assign(d + 1, 0.0);
  p[0] = 1.0;
  if (d >= 1) p[1] = t;
  for (int k = 1; k < d; ++k) p[k + 1] = ((2.0 * k + 1.0) * t * p[k] - k * p[k - 1]) / (k + 1.0);
  if (dp) {
    dp->assign(d + 1, 0.0);
    for (int k = 1; k <= d; ++k) (*dp)[k] = k * p[k - 1] + t * (*dp)[k - 1];
  }
}

// Flags unit mismatches such as levels in Hz against a GHz geometry.
void check_scale(UnfoldedSpectrum& u) {
  double ms = u.mean_spacing();
  if (!(ms > 0.1 && ms < 10.0)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "mean unfolded spacing %.4g deviates from 1 by more than a factor 10", ms);
    u.warnings.emplace_back(buf);
  }
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::Weyl: return "weyl";
    case Method::Polynomial: return "polynomial";
    case Method::Analytic: return "analytic";
    case Method::Ensemble: return "ensemble";
  }
  return "unknown";
}

double UnfoldedSpectrum::mean_spacing() const {
  if (epsilons.size() < 2) return 0.0;
  return (epsilons.back() - epsilons.front()) / static_cast<double>(epsilons.size() - 1);
}

RawSpectrum prepare(const RawSpectrum& raw) {
  const auto& x = raw.levels;
  require(x.size() >= kMinLevels, ErrorCode::InsufficientData,
          "unfolding: at least " + std::to_string(kMinLevels) + " levels required, got " + std::to_string(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i)
    require(std::isfinite(x[i]), ErrorCode::InvalidArgument, "unfolding: non-finite level at index " +
                                                                 std::to_string(i));
  for (std::size_t i = 1; i < x.size(); ++i)
    require(x[i] >= x[i - 1], ErrorCode::InvalidArgument, "unfolding: levels not ascending at index " +
                                                              std::to_string(i));
  const double span = x.back() - x.front();
  require(span > 0.0, ErrorCode::DegenerateInput, "unfolding: all levels coincide");
  const double delta = 1e-9 * span / static_cast<double>(x.size() - 1);
  RawSpectrum out = raw;
  auto& y = out.levels;
  for (std::size_t i = 1; i < y.size(); ++i)
    if (y[i] <= y[i - 1]) y[i] = y[i - 1] + delta;
  return out;
}

RawSpectrum retain_central(const RawSpectrum& raw, double fraction) {
  require(fraction > 0.0 && fraction <= 1.0, ErrorCode::InvalidArgument,
          "retain_central: fraction must lie in (0, 1]");
  const std::size_t n = raw.levels.size();
  const std::size_t cut = static_cast<std::size_t>(std::floor(0.5 * (1.0 - fraction) * n + 1e-9));
  RawSpectrum out = raw;
  out.levels.assign(raw.levels.begin() + cut, raw.levels.end() - cut);
  require(out.levels.size() >= kMinLevels, ErrorCode::InsufficientData,
          "retain_central: fewer than " + std::to_string(kMinLevels) + " levels retained");
  return out;
}

SmoothStaircase::SmoothStaircase(const std::vector<double>& x, const std::vector<double>& y, int degree) {
  require(x.size() == y.size() && x.size() > static_cast<std::size_t>(degree), ErrorCode::InsufficientData,
          "SmoothStaircase: too few points for the requested degree");
  lo_ = *std::min_element(x.begin(), x.end());
  hi_ = *std::max_element(x.begin(), x.end());
  center_ = 0.5 * (lo_ + hi_);
  half_ = 0.5 * (hi_ - lo_);
  require(half_ > 0.0, ErrorCode::DegenerateInput, "SmoothStaircase: zero-width data range");
  Eigen::MatrixXd a(x.size(), degree + 1);
  Eigen::VectorXd b(x.size());
  std::vector<double> p;
  for (std::size_t i = 0; i < x.size(); ++i) {
    legendre((x[i] - center_) / half_, degree, p, nullptr);
    for (int k = 0; k <= degree; ++k) a(i, k) = p[k];
    b(i) = y[i];
  }
  Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
  coef_.assign(c.data(), c.data() + c.size());
}

double SmoothStaircase::operator()(double x) const {
  std::vector<double> p;
  legendre((x - center_) / half_, static_cast<int>(coef_.size()) - 1, p, nullptr);
  double s = 0.0;
  for (std::size_t k = 0; k < coef_.size(); ++k) s += coef_[k] * p[k];
  return s;
}

double SmoothStaircase::derivative(double x) const {
  std::vector<double> p, dp;
  legendre((x - center_) / half_, static_cast<int>(coef_.size()) - 1, p, &dp);
  double s = 0.0;
  for (std::size_t k = 0; k < coef_.size(); ++k) s += coef_[k] * dp[k];
  return s / half_;
}

double SmoothStaircase::min_slope(int samples) const {
  double m = derivative(lo_);
  for (int i = 1; i <= samples; ++i) m = std::min(m, derivative(lo_ + (hi_ - lo_) * i / samples));
  return m;
}

UnfoldedSpectrum unfold_weyl(const RawSpectrum& raw, const billiards::BilliardGeometry& geom) {
  geom.validate();
  RawSpectrum r = prepare(raw);
  billiards::BilliardGeometry g = geom;
  g.n0 = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < r.levels.size(); ++i) acc += (i + 0.5) - billiards::weyl_count(g, r.levels[i]);
  g.n0 = acc / static_cast<double>(r.levels.size());
  UnfoldedSpectrum u;
  u.method = Method::Weyl;
  u.n0 = g.n0;
  u.epsilons.reserve(r.levels.size());
  for (double f : r.levels) u.epsilons.push_back(billiards::weyl_count(g, f));
  for (std::size_t i = 1; i < u.epsilons.size(); ++i)
    if (!(u.epsilons[i] > u.epsilons[i - 1])) {
      u.warnings.emplace_back("Weyl staircase is not increasing over the data range");
      break;
    }
  check_scale(u);
  return u;
}

UnfoldedSpectrum unfold_polynomial(const RawSpectrum& raw, int degree) {
  require(degree == 2 || degree == 3, ErrorCode::InvalidArgument, "unfold_polynomial: degree must be 2 or 3");
  RawSpectrum r = prepare(raw);
  std::vector<double> y(r.levels.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = i + 0.5;
  SmoothStaircase s(r.levels, y, degree);
  require(s.min_slope() > 0.0, ErrorCode::DegenerateInput,
          "unfold_polynomial: fitted staircase is not monotone over the data range");
  UnfoldedSpectrum u;
  u.method = Method::Polynomial;
  u.degree = degree;
  u.epsilons.reserve(r.levels.size());
  for (double x : r.levels) u.epsilons.push_back(s(x));
  check_scale(u);
  return u;
}

UnfoldedSpectrum unfold_analytic(const RawSpectrum& raw, const std::function<double(double)>& staircase) {
  RawSpectrum r = prepare(raw);
  UnfoldedSpectrum u;
  u.method = Method::Analytic;
  for (double x : r.levels) u.epsilons.push_back(staircase(x));
  for (std::size_t i = 1; i < u.epsilons.size(); ++i)
    require(u.epsilons[i] > u.epsilons[i - 1], ErrorCode::DegenerateInput,
            "unfold_analytic: staircase is not increasing over the data range");
  check_scale(u);
  return u;
}

std::vector<UnfoldedSpectrum> unfold_ensemble(const std::vector<RawSpectrum>& raws, const EnsembleUnfoldOptions& opt) {
  require(!raws.empty(), ErrorCode::InsufficientData, "unfold_ensemble: no spectra");
  require(0.0 <= opt.fit_lo && opt.fit_lo < opt.fit_hi && opt.fit_hi <= 1.0 && opt.fit_lo <= opt.keep_lo &&
              opt.keep_lo < opt.keep_hi && opt.keep_hi <= opt.fit_hi,
          ErrorCode::InvalidArgument, "unfold_ensemble: quantiles must satisfy fit_lo <= keep_lo < keep_hi <= fit_hi");
  std::vector<RawSpectrum> prepared;
  prepared.reserve(raws.size());
  std::vector<double> pooled;
  for (const auto& r : raws) {
    prepared.push_back(prepare(r));
    pooled.insert(pooled.end(), prepared.back().levels.begin(), prepared.back().levels.end());
  }
  std::sort(pooled.begin(), pooled.end());
  const double R = static_cast<double>(raws.size());
  const std::size_t P = pooled.size();
  auto qidx = [&](double q) { return std::min(P - 1, static_cast<std::size_t>(q * (P - 1) + 0.5)); };

  const std::size_t i0 = qidx(opt.fit_lo), i1 = qidx(opt.fit_hi);
  std::vector<double> x, y;
  x.reserve(i1 - i0 + 1);
  y.reserve(i1 - i0 + 1);
  for (std::size_t k = i0; k <= i1; ++k) {
    x.push_back(pooled[k]);
    y.push_back((k + 0.5) / R);
  }
  SmoothStaircase s(x, y, opt.degree);
  require(s.min_slope() > 0.0, ErrorCode::DegenerateInput,
          "unfold_ensemble: fitted staircase is not monotone over the fit range");
  const double keep_a = pooled[qidx(opt.keep_lo)];
  const double keep_b = pooled[qidx(opt.keep_hi)];

  std::vector<UnfoldedSpectrum> out;
  out.reserve(raws.size());
  for (const auto& r : prepared) {
    UnfoldedSpectrum u;
    u.method = Method::Ensemble;
    u.degree = opt.degree;
    for (double v : r.levels)
      if (v >= keep_a && v <= keep_b) u.epsilons.push_back(s(v));
    out.push_back(std::move(u));
  }
  return out;
}

}  // namespace rmtlab::unfolding
