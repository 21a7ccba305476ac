#include "observables/observables.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numeric>
#include <tuple>

#include "common/error.hpp"
#include "common/parallel.hpp"
#include "common/quadrature.hpp"
#include "ensembles/ensembles.hpp"

namespace rmtlab::observables {

namespace {

constexpr double kEulerGamma = 0.57721566490153286061;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Standard error of the mean of per-group estimates.
double group_stderr(const std::vector<double>& g) {
  if (g.size() < 2) return 0.0;
  double m = mean_of(g);
  double ss = 0.0;
  for (double x : g) ss += (x - m) * (x - m);
  return std::sqrt(ss / (g.size() - 1) / g.size());
}

std::vector<double> histogram_edges(const std::vector<double>& samples, const HistogramOptions& opt, double lo) {
  require(opt.bin_width > 0.0, ErrorCode::InvalidArgument, "histogram: bin width must be positive");
  double hi = opt.max;
  if (hi <= 0.0) {
    double m = *std::max_element(samples.begin(), samples.end());
    hi = lo + opt.bin_width * std::max(1.0, std::ceil((m - lo) / opt.bin_width + 1e-12));
    if (hi <= m) hi += opt.bin_width;
  }
  int nb = static_cast<int>(std::llround((hi - lo) / opt.bin_width));
  require(nb >= 1, ErrorCode::InvalidArgument, "histogram: empty range");
  std::vector<double> edges(nb + 1);
  for (int i = 0; i <= nb; ++i) edges[i] = lo + i * opt.bin_width;
  return edges;
}

ObservableCurve density_histogram(Observable obs, const std::vector<double>& samples, const std::vector<double>& edges) {
  const int nb = static_cast<int>(edges.size()) - 1;
  const double bw = edges[1] - edges[0];
  std::vector<double> counts(nb, 0.0);
  std::size_t outside = 0;
  for (double s : samples) {
    int b = static_cast<int>(std::floor((s - edges[0]) / bw));
    if (s == edges.back()) b = nb - 1;
    if (b < 0 || b >= nb) {
      ++outside;
      continue;
    }
    counts[b] += 1.0;
  }
  ObservableCurve c;
  c.observable = obs;
  const double n = static_cast<double>(samples.size());
  for (int b = 0; b < nb; ++b) {
    c.grid.push_back(0.5 * (edges[b] + edges[b + 1]));
    c.values.push_back(counts[b] / (n * bw));
    c.stderr_.push_back(std::sqrt(counts[b]) / (n * bw));
  }
  c.meta["bin_width"] = fmt(bw);
  c.meta["samples"] = std::to_string(samples.size());
  if (outside) c.meta["outside_range"] = std::to_string(outside);
  return c;
}

ObservableCurve cumulative_curve(Observable obs, std::vector<double> samples, const std::vector<double>& edges) {
  std::sort(samples.begin(), samples.end());
  ObservableCurve c;
  c.observable = obs;
  const double n = static_cast<double>(samples.size());
  for (std::size_t i = 1; i < edges.size(); ++i) {
    auto it = std::upper_bound(samples.begin(), samples.end(), edges[i]);
    double p = static_cast<double>(it - samples.begin()) / n;
    c.grid.push_back(edges[i]);
    c.values.push_back(p);
    c.stderr_.push_back(std::sqrt(p * (1.0 - p) / n));
  }
  c.meta["bin_width"] = fmt(edges[1] - edges[0]);
  c.meta["samples"] = std::to_string(samples.size());
  return c;
}

std::size_t total_levels(const Ensemble& e) {
  std::size_t n = 0;
  for (const auto& u : e) n += u.epsilons.size();
  return n;
}

void check_sorted(const std::vector<double>& x, const char* what) {
  for (std::size_t i = 1; i < x.size(); ++i)
    require(x[i] > x[i - 1], ErrorCode::DegenerateInput, std::string(what) + ": levels must be strictly increasing");
}

}  // namespace

const char* observable_name(Observable o) {
  switch (o) {
    case Observable::NNSD: return "nnsd";
    case Observable::CumulativeNNSD: return "nnsd_cumulative";
    case Observable::RatioDist: return "ratio";
    case Observable::CumulativeRatioDist: return "ratio_cumulative";
    case Observable::NumberVariance: return "sigma2";
    case Observable::Y2: return "y2";
    case Observable::FormFactor: return "form_factor";
    case Observable::PowerSpectrum: return "power_spectrum";
    case Observable::LengthSpectrum: return "length";
    case Observable::SCorrelation: return "c_ab";
    case Observable::AmplitudeDist: return "amplitude";
  }
  return "unknown";
}

Observable parse_observable(const std::string& name) {
  for (Observable o : {Observable::NNSD, Observable::CumulativeNNSD, Observable::RatioDist,
                       Observable::CumulativeRatioDist, Observable::NumberVariance, Observable::Y2,
                       Observable::FormFactor, Observable::PowerSpectrum, Observable::LengthSpectrum,
                       Observable::SCorrelation, Observable::AmplitudeDist})
    if (name == observable_name(o)) return o;
  if (name == "k") return Observable::FormFactor;
  if (name == "power") return Observable::PowerSpectrum;
  fail(ErrorCode::InvalidArgument, "unknown observable '" + name + "'");
}

void ObservableCurve::validate() const {
  require(grid.size() == values.size(), ErrorCode::Internal, "ObservableCurve: grid and values differ in length");
  require(stderr_.empty() || stderr_.size() == grid.size(), ErrorCode::Internal,
          "ObservableCurve: stderr length mismatch");
  for (std::size_t i = 1; i < grid.size(); ++i)
    require(grid[i] > grid[i - 1], ErrorCode::Internal, "ObservableCurve: grid not ascending");
}

std::vector<double> spacings(const Ensemble& e) {
  std::vector<double> s;
  for (const auto& u : e)
    for (std::size_t i = 1; i < u.epsilons.size(); ++i) s.push_back(u.epsilons[i] - u.epsilons[i - 1]);
  return s;
}

double cdf_sup_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
  require(!samples.empty(), ErrorCode::InsufficientData, "cdf_sup_distance: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double f = cdf(samples[i]);
    d = std::max(d, std::max(std::fabs((i + 1) / n - f), std::fabs(i / n - f)));
  }
  return d;
}

ObservableCurve nnsd(const Ensemble& e, const HistogramOptions& opt) {
  require(total_levels(e) >= 100, ErrorCode::InsufficientData, "nnsd: at least 100 levels required");
  auto s = spacings(e);
  auto c = density_histogram(Observable::NNSD, s, histogram_edges(s, opt, 0.0));
  c.meta["mean_spacing"] = fmt(mean_of(s));
  return c;
}

ObservableCurve cumulative_nnsd(const Ensemble& e, const HistogramOptions& opt) {
  require(total_levels(e) >= 100, ErrorCode::InsufficientData, "nnsd: at least 100 levels required");
  auto s = spacings(e);
  auto edges = histogram_edges(s, opt, 0.0);
  return cumulative_curve(Observable::CumulativeNNSD, std::move(s), edges);
}

std::vector<double> ratios(const std::vector<double>& levels, bool tilde) {
  std::vector<double> r;
  if (levels.size() < 3) return r;
  r.reserve(levels.size() - 2);
  for (std::size_t j = 1; j + 1 < levels.size(); ++j) {
    double a = levels[j] - levels[j - 1];
    double b = levels[j + 1] - levels[j];
    require(a > 0.0 && b > 0.0, ErrorCode::DegenerateInput,
            "ratio_distribution: zero or negative spacing at index " + std::to_string(j));
    double q = b / a;
    r.push_back(tilde ? std::min(q, 1.0 / q) : q);
  }
  return r;
}

namespace {

std::vector<double> pooled_ratios(const std::vector<std::vector<double>>& level_sets, bool tilde) {
  std::size_t n = 0;
  for (const auto& l : level_sets) n += l.size();
  require(n >= 100, ErrorCode::InsufficientData, "ratio_distribution: at least 100 levels required");
  std::vector<double> r;
  for (const auto& l : level_sets) {
    auto q = ratios(l, tilde);
    r.insert(r.end(), q.begin(), q.end());
  }
  return r;
}

}  // namespace

ObservableCurve ratio_distribution(const std::vector<std::vector<double>>& level_sets, bool tilde,
                                   const HistogramOptions& opt) {
  auto r = pooled_ratios(level_sets, tilde);
  HistogramOptions o = opt;
  if (tilde) o.max = 1.0;
  auto c = density_histogram(Observable::RatioDist, r, histogram_edges(r, o, 0.0));
  c.meta["tilde"] = tilde ? "true" : "false";
  c.meta["mean"] = fmt(mean_of(r));
  return c;
}

ObservableCurve cumulative_ratio_distribution(const std::vector<std::vector<double>>& level_sets, bool tilde,
                                              const HistogramOptions& opt) {
  auto r = pooled_ratios(level_sets, tilde);
  HistogramOptions o = opt;
  if (tilde) o.max = 1.0;
  auto edges = histogram_edges(r, o, 0.0);
  auto c = cumulative_curve(Observable::CumulativeRatioDist, std::move(r), edges);
  c.meta["tilde"] = tilde ? "true" : "false";
  return c;
}

double mean_ratio_tilde(const std::vector<std::vector<double>>& level_sets) {
  return mean_of(pooled_ratios(level_sets, true));
}

ObservableCurve number_variance(const Ensemble& e, const std::vector<double>& L_grid, double step) {
  require(!e.empty(), ErrorCode::InsufficientData, "number_variance: empty ensemble");
  require(step > 0.0, ErrorCode::InvalidArgument, "number_variance: step must be positive");
  require(!L_grid.empty(), ErrorCode::InvalidArgument, "number_variance: empty L grid");
  const double L_max = *std::max_element(L_grid.begin(), L_grid.end());
  for (const auto& u : e) {
    check_sorted(u.epsilons, "number_variance");
    require(L_max <= u.epsilons.size() / 10.0, ErrorCode::InsufficientData,
            "number_variance: L_max " + fmt(L_max) + " exceeds level count / 10 (" +
                std::to_string(u.epsilons.size()) + " levels)");
  }
  const bool batches = e.size() == 1;
  const std::size_t groups = batches ? 10 : e.size();
  ObservableCurve c;
  c.observable = Observable::NumberVariance;
  for (double L : L_grid) {
    require(L >= 0.0, ErrorCode::InvalidArgument, "number_variance: L must be nonnegative");
    c.grid.push_back(L);
    if (L == 0.0) {
      c.values.push_back(0.0);
      c.stderr_.push_back(0.0);
      continue;
    }
    std::vector<double> g_n(groups, 0.0), g_s(groups, 0.0), g_s2(groups, 0.0);
    for (std::size_t k = 0; k < e.size(); ++k) {
      const auto& x = e[k].epsilons;
      const std::size_t windows = static_cast<std::size_t>(std::ceil((x.back() - L - x.front()) / step - 1e-12));
      for (std::size_t w = 0; w < windows; ++w) {
        double a = x.front() + w * step;
        double cnt = static_cast<double>(std::lower_bound(x.begin(), x.end(), a + L) -
                                         std::lower_bound(x.begin(), x.end(), a));
        std::size_t g = batches ? std::min(groups - 1, w * groups / std::max<std::size_t>(windows, 1)) : k;
        g_n[g] += 1.0;
        g_s[g] += cnt;
        g_s2[g] += cnt * cnt;
      }
    }
    double n = 0, s = 0, s2 = 0;
    std::vector<double> per;
    for (std::size_t g = 0; g < groups; ++g) {
      n += g_n[g];
      s += g_s[g];
      s2 += g_s2[g];
      if (g_n[g] > 1) {
        double m = g_s[g] / g_n[g];
        per.push_back(g_s2[g] / g_n[g] - m * m);
      }
    }
    require(n > 1, ErrorCode::InsufficientData, "number_variance: no complete windows for L = " + fmt(L));
    double m = s / n;
    c.values.push_back(s2 / n - m * m);
    c.stderr_.push_back(group_stderr(per));
  }
  c.meta["step"] = fmt(step);
  c.meta["spectra"] = std::to_string(e.size());
  return c;
}

ObservableCurve estimate_y2(const Ensemble& e, const std::vector<double>& r_grid, double bin_width) {
  require(!e.empty(), ErrorCode::InsufficientData, "estimate_y2: empty ensemble");
  require(!r_grid.empty() && bin_width > 0.0, ErrorCode::InvalidArgument, "estimate_y2: invalid grid");
  const double h = 0.5 * bin_width;
  const double r_top = *std::max_element(r_grid.begin(), r_grid.end()) + h;
  const std::size_t nr = r_grid.size();
  // Pairs are counted from reference levels lying at least r_top plus a
  // margin of two spacings below the last level, so R2 is the conditional
  // density given a level, free of the repulsion around the endpoint.
  const double margin = 2.0;
  std::vector<std::vector<double>> counts(e.size(), std::vector<double>(nr, 0.0));
  std::vector<double> refs(e.size(), 0.0);
  for (std::size_t k = 0; k < e.size(); ++k) {
    const auto& x = e[k].epsilons;
    check_sorted(x, "estimate_y2");
    for (std::size_t i = 0; i < x.size() && x[i] + r_top + margin <= x.back(); ++i) {
      refs[k] += 1.0;
      for (std::size_t j = i + 1; j < x.size() && x[j] - x[i] < r_top; ++j) {
        double d = x[j] - x[i];
        for (std::size_t b = 0; b < nr; ++b)
          if (d >= r_grid[b] - h && d < r_grid[b] + h) counts[k][b] += 1.0;
      }
    }
  }
  ObservableCurve c;
  c.observable = Observable::Y2;
  for (std::size_t b = 0; b < nr; ++b) {
    double num = 0.0, den = 0.0;
    std::vector<double> per;
    for (std::size_t k = 0; k < e.size(); ++k) {
      double norm = refs[k] * bin_width;
      num += counts[k][b];
      den += norm;
      if (norm > 0.0) per.push_back(1.0 - counts[k][b] / norm);
    }
    require(den > 0.0, ErrorCode::InsufficientData, "estimate_y2: separation exceeds spectrum span");
    c.grid.push_back(r_grid[b]);
    c.values.push_back(1.0 - num / den);
    c.stderr_.push_back(group_stderr(per));
  }
  if (e.size() < 50) c.warnings.emplace_back("fewer than 50 spectra: Y2 estimate has high variance");
  c.meta["bin_width"] = fmt(bin_width);
  c.meta["spectra"] = std::to_string(e.size());
  return c;
}

ObservableCurve form_factor(const Ensemble& e, const std::vector<double>& tau_grid, const FormFactorOptions& opt) {
  require(!e.empty(), ErrorCode::InsufficientData, "form_factor: empty ensemble");
  require(opt.window_fraction > 0.0 && opt.band >= 0.0 && opt.band_points >= 1, ErrorCode::InvalidArgument,
          "form_factor: invalid options");
  for (double t : tau_grid) require(t > 0.0, ErrorCode::InvalidArgument, "form_factor: tau must be positive");
  const std::size_t nt = tau_grid.size();
  std::vector<double> offsets(opt.band_points, 0.0);
  if (opt.band_points > 1)
    for (int i = 0; i < opt.band_points; ++i) offsets[i] = opt.band * (2.0 * i / (opt.band_points - 1) - 1.0);
  std::vector<std::vector<double>> per(e.size(), std::vector<double>(nt, 0.0));
  parallel_for(e.size(), [&](std::size_t k) {
    const auto& x = e[k].epsilons;
    require(x.size() >= 10, ErrorCode::InsufficientData, "form_factor: spectrum too short");
    const double c = 0.5 * (x.front() + x.back());
    const double sigma = opt.window_fraction * (x.back() - x.front());
    std::vector<double> w(x.size());
    double w2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double d = (x[i] - c) / sigma;
      w[i] = std::exp(-0.5 * d * d);
      w2 += w[i] * w[i];
    }
    for (std::size_t t = 0; t < nt; ++t) {
      double acc = 0.0;
      for (double off : offsets) {
        const double tau = tau_grid[t] + off;
        double re = 0.0, im = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
          re += w[i] * std::cos(tau * (x[i] - c));
          im += w[i] * std::sin(tau * (x[i] - c));
        }
        // Subtract the transform of the smooth unit density.
        re -= std::sqrt(2.0 * M_PI) * sigma * std::exp(-0.5 * sigma * sigma * tau * tau);
        acc += (re * re + im * im) / w2;
      }
      per[k][t] = acc / offsets.size();
    }
  });
  ObservableCurve out;
  out.observable = Observable::FormFactor;
  for (std::size_t t = 0; t < nt; ++t) {
    std::vector<double> col(e.size());
    for (std::size_t k = 0; k < e.size(); ++k) col[k] = per[k][t];
    out.grid.push_back(tau_grid[t]);
    out.values.push_back(mean_of(col));
    out.stderr_.push_back(group_stderr(col));
  }
  out.meta["window"] = "gaussian";
  out.meta["window_fraction"] = fmt(opt.window_fraction);
  out.meta["band"] = fmt(opt.band);
  out.meta["band_points"] = std::to_string(opt.band_points);
  out.meta["spectra"] = std::to_string(e.size());
  return out;
}

ObservableCurve power_spectrum(const Ensemble& e) {
  require(!e.empty(), ErrorCode::InsufficientData, "power_spectrum: empty ensemble");
  std::size_t n = e.front().epsilons.size();
  for (const auto& u : e) n = std::min(n, u.epsilons.size());
  require(n >= 100, ErrorCode::InsufficientData, "power_spectrum: at least 100 levels per spectrum required");
  std::vector<double> cs(n), sn(n);
  for (std::size_t m = 0; m < n; ++m) {
    cs[m] = std::cos(2.0 * M_PI * m / n);
    sn[m] = std::sin(2.0 * M_PI * m / n);
  }
  std::vector<std::vector<double>> per(e.size(), std::vector<double>(n));
  parallel_for(e.size(), [&](std::size_t k) {
    const auto& x = e[k].epsilons;
    std::vector<double> d(n);
    for (std::size_t q = 0; q < n; ++q) d[q] = x[q] - x[0] - static_cast<double>(q);
    for (std::size_t l = 1; l <= n; ++l) {
      double re = 0.0, im = 0.0;
      for (std::size_t q = 0; q < n; ++q) {
        std::size_t m = (l * q) % n;
        re += d[q] * cs[m];
        im -= d[q] * sn[m];
      }
      per[k][l - 1] = (re * re + im * im) / n;
    }
  });
  ObservableCurve c;
  c.observable = Observable::PowerSpectrum;
  for (std::size_t l = 1; l <= n; ++l) {
    std::vector<double> col(e.size());
    for (std::size_t k = 0; k < e.size(); ++k) col[k] = per[k][l - 1];
    c.grid.push_back(static_cast<double>(l) / n);
    c.values.push_back(mean_of(col));
    c.stderr_.push_back(group_stderr(col));
  }
  c.meta["n"] = std::to_string(n);
  c.meta["spectra"] = std::to_string(e.size());
  return c;
}

Slope loglog_slope(const ObservableCurve& c, double lo, double hi) {
  std::vector<double> x, y, sy;
  for (std::size_t i = 0; i < c.grid.size(); ++i)
    if (c.grid[i] >= lo && c.grid[i] <= hi && c.values[i] > 0.0) {
      x.push_back(std::log(c.grid[i]));
      y.push_back(std::log(c.values[i]));
      sy.push_back(c.has_stderr() ? c.stderr_[i] / c.values[i] : 0.0);
    }
  require(x.size() >= 3, ErrorCode::InsufficientData, "loglog_slope: fewer than 3 points in range");
  const double mx = mean_of(x), my = mean_of(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double b = sxy / sxx;
  double var = 0.0;
  if (c.has_stderr()) {
    for (std::size_t i = 0; i < x.size(); ++i) var += std::pow((x[i] - mx) / sxx * sy[i], 2);
  } else {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) rss += std::pow(y[i] - my - b * (x[i] - mx), 2);
    var = rss / (x.size() - 2) / sxx;
  }
  return {b, std::sqrt(var)};
}

ObservableCurve length_spectrum(const std::vector<double>& levels_ghz,
                                const std::function<double(double)>& density_per_ghz,
                                const std::vector<double>& l_grid_m, const LengthSpectrumOptions& opt) {
  require(levels_ghz.size() >= 10, ErrorCode::InsufficientData, "length_spectrum: at least 10 levels required");
  require(!l_grid_m.empty(), ErrorCode::InvalidArgument, "length_spectrum: empty length grid");
  require(opt.taper_fraction > 0.0 && opt.taper_fraction < 0.5, ErrorCode::InvalidArgument,
          "length_spectrum: taper fraction must lie in (0, 0.5)");
  const double c_light = billiards::kSpeedOfLight;
  auto to_k = [&](double f_ghz) { return 2.0 * M_PI * f_ghz * 1e9 / c_light; };
  std::vector<double> k(levels_ghz.size());
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = to_k(levels_ghz[i]);
  for (std::size_t i = 1; i < k.size(); ++i)
    require(k[i] >= k[i - 1], ErrorCode::InvalidArgument, "length_spectrum: levels must be ascending");
  const double ka = k.front(), kb = k.back();
  require(kb > ka, ErrorCode::DegenerateInput, "length_spectrum: zero k range");
  const double taper = opt.taper_fraction * (kb - ka);
  const double sig = taper / 3.0;
  auto window = [&](double kk) {
    double d = 0.0;
    if (kk < ka + taper) d = ka + taper - kk;
    else if (kk > kb - taper) d = kk - (kb - taper);
    return std::exp(-0.5 * (d / sig) * (d / sig));
  };
  const double l_max = *std::max_element(l_grid_m.begin(), l_grid_m.end());
  const double dfdk = c_light / (2.0 * M_PI) * 1e-9;
  std::size_t segs = static_cast<std::size_t>(
      std::ceil(opt.smooth_points_per_period * (kb - ka) * std::max(l_max, 1.0) / (2.0 * M_PI)));
  segs = std::max<std::size_t>(segs + (segs % 2), 2000);
  const double hk = (kb - ka) / segs;
  std::vector<double> node_k(segs + 1), node_w(segs + 1);
  for (std::size_t j = 0; j <= segs; ++j) {
    double kk = ka + j * hk;
    double simpson = (j == 0 || j == segs) ? 1.0 : (j % 2 ? 4.0 : 2.0);
    node_k[j] = kk;
    node_w[j] = simpson * hk / 3.0 * window(kk) * density_per_ghz(kk * dfdk) * dfdk;
  }
  std::vector<double> lw(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) lw[i] = window(k[i]);

  ObservableCurve c;
  c.observable = Observable::LengthSpectrum;
  c.grid = l_grid_m;
  c.values.resize(l_grid_m.size());
  parallel_for(l_grid_m.size(), [&](std::size_t t) {
    const double l = l_grid_m[t];
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
      re += lw[i] * std::cos(k[i] * l);
      im += lw[i] * std::sin(k[i] * l);
    }
    for (std::size_t j = 0; j <= segs; ++j) {
      re -= node_w[j] * std::cos(node_k[j] * l);
      im -= node_w[j] * std::sin(node_k[j] * l);
    }
    c.values[t] = std::hypot(re, im);
  });
  const double heisenberg = 2.0 * M_PI * (k.size() - 1) / (kb - ka);
  if (l_max > heisenberg)
    c.warnings.emplace_back("length grid exceeds the resolution limit 2 pi / dk = " + fmt(heisenberg) + " m");
  c.meta["taper_fraction"] = fmt(opt.taper_fraction);
  c.meta["k_min"] = fmt(ka);
  c.meta["k_max"] = fmt(kb);
  return c;
}

std::vector<Peak> local_maxima(const ObservableCurve& c, double min_position) {
  std::vector<Peak> out;
  const auto& x = c.grid;
  const auto& v = c.values;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    if (x[i] <= min_position) continue;
    if (v[i] > v[i - 1] && v[i] >= v[i + 1]) {
      double den = v[i - 1] - 2.0 * v[i] + v[i + 1];
      double shift = den != 0.0 ? 0.5 * (v[i - 1] - v[i + 1]) / den : 0.0;
      double h = x[i + 1] - x[i];
      out.push_back({x[i] + shift * h, v[i] - 0.25 * (v[i - 1] - v[i + 1]) * shift});
    }
  }
  return out;
}

// ------------------------------------------------------------ references

ReferenceKind parse_reference(const std::string& name) {
  if (name == "poisson") return ReferenceKind::Poisson;
  if (name == "goe") return ReferenceKind::GOE;
  if (name == "gue") return ReferenceKind::GUE;
  fail(ErrorCode::InvalidArgument, "unknown reference kind '" + name + "'");
}

const char* reference_name(ReferenceKind k) {
  switch (k) {
    case ReferenceKind::Poisson: return "poisson";
    case ReferenceKind::GOE: return "goe";
    case ReferenceKind::GUE: return "gue";
  }
  return "unknown";
}

double wigner_surmise(ReferenceKind kind, double s) {
  if (s < 0.0) return 0.0;
  switch (kind) {
    case ReferenceKind::Poisson: return std::exp(-s);
    case ReferenceKind::GOE: return 0.5 * M_PI * s * std::exp(-0.25 * M_PI * s * s);
    case ReferenceKind::GUE: return 32.0 / (M_PI * M_PI) * s * s * std::exp(-4.0 * s * s / M_PI);
  }
  return 0.0;
}

double wigner_surmise_cdf(ReferenceKind kind, double s) {
  if (s <= 0.0) return 0.0;
  switch (kind) {
    case ReferenceKind::Poisson: return -std::expm1(-s);
    case ReferenceKind::GOE: return -std::expm1(-0.25 * M_PI * s * s);
    case ReferenceKind::GUE:
      return std::erf(2.0 * s / std::sqrt(M_PI)) - 4.0 / M_PI * s * std::exp(-4.0 * s * s / M_PI);
  }
  return 0.0;
}

double ratio_tilde_density(ReferenceKind kind, double r) {
  if (r < 0.0 || r > 1.0) return 0.0;
  switch (kind) {
    case ReferenceKind::Poisson: return 2.0 / ((1.0 + r) * (1.0 + r));
    case ReferenceKind::GOE: return 2.0 * 27.0 / 8.0 * (r + r * r) / std::pow(1.0 + r + r * r, 2.5);
    case ReferenceKind::GUE:
      return 2.0 * 81.0 * std::sqrt(3.0) / (4.0 * M_PI) * std::pow(r + r * r, 2) / std::pow(1.0 + r + r * r, 4);
  }
  return 0.0;
}

double sine_integral(double x) {
  if (x == 0.0) return 0.0;
  const double ax = std::fabs(x);
  auto f = [](double t) { return t < 1e-8 ? 1.0 : std::sin(t) / t; };
  double acc = 0.0;
  for (double a = 0.0; a < ax; a += M_PI) acc += quad::integrate(f, a, std::min(ax, a + M_PI), 1e-15, 1e-13).value;
  return x < 0.0 ? -acc : acc;
}

namespace {

double sinc_pi(double r) {
  double x = M_PI * r;
  return std::fabs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
}

double sinc_pi_derivative(double r) {
  double x = M_PI * r;
  if (std::fabs(x) < 1e-4) return -M_PI * x / 3.0;
  return M_PI * (x * std::cos(x) - std::sin(x)) / (x * x);
}

}  // namespace

double y2_reference(ReferenceKind kind, double r) {
  r = std::fabs(r);
  switch (kind) {
    case ReferenceKind::Poisson: return 0.0;
    case ReferenceKind::GUE: {
      double s = sinc_pi(r);
      return s * s;
    }
    case ReferenceKind::GOE: {
      double s = sinc_pi(r);
      return s * s + sinc_pi_derivative(r) * (0.5 - sine_integral(M_PI * r) / M_PI);
    }
  }
  return 0.0;
}

double k_reference(ReferenceKind kind, double tau) {
  require(tau >= 0.0, ErrorCode::InvalidArgument, "k_reference: tau must be nonnegative");
  const double x = tau / (2.0 * M_PI);
  switch (kind) {
    case ReferenceKind::Poisson: return 1.0;
    case ReferenceKind::GUE: return std::min(x, 1.0);
    case ReferenceKind::GOE:
      if (x <= 1.0) return 2.0 * x - x * std::log1p(2.0 * x);
      return 2.0 - x * std::log((2.0 * x + 1.0) / (2.0 * x - 1.0));
  }
  return 0.0;
}

double sigma2_reference(ReferenceKind kind, double L) {
  require(L >= 0.0, ErrorCode::InvalidArgument, "sigma2_reference: L must be nonnegative");
  if (kind == ReferenceKind::Poisson || L == 0.0) return L;
  auto f = [&](double r) { return (L - r) * y2_reference(kind, r); };
  double acc = 0.0;
  for (double a = 0.0; a < L; a += 0.5) acc += quad::integrate(f, a, std::min(L, a + 0.5), 1e-13, 1e-11).value;
  return L - 2.0 * acc;
}

double power_spectrum_poisson(double tau) {
  double s = std::sin(M_PI * tau);
  return 1.0 / (4.0 * s * s);
}

std::vector<double> power_spectrum_mc(ReferenceKind kind, int n, int realizations, unsigned long long seed) {
  require(kind != ReferenceKind::Poisson, ErrorCode::InvalidArgument,
          "power_spectrum_mc: Poisson has a closed form");
  require(n >= 100, ErrorCode::InvalidArgument, "power_spectrum_mc: n must be at least 100");
  require(realizations >= 2, ErrorCode::InvalidArgument, "power_spectrum_mc: at least 2 realizations required");
  static std::mutex mu;
  static std::map<std::tuple<int, int, int, unsigned long long>, std::vector<double>> cache;
  auto key = std::make_tuple(static_cast<int>(kind), n, realizations, seed);
  {
    std::lock_guard<std::mutex> lk(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  ensembles::EnsembleSpec spec;
  spec.kind = kind == ReferenceKind::GOE ? ensembles::EnsembleKind::GOE : ensembles::EnsembleKind::GUE;
  spec.dim = static_cast<int>(std::ceil(n / 0.6 * 1.15)) + 10;
  spec.master_seed = seed;
  spec.realizations = realizations;
  auto spectra = ensembles::sample_spectra(spec);
  std::vector<unfolding::RawSpectrum> raws;
  for (auto& s : spectra) raws.push_back({std::move(s), unfolding::Source::Matrix, ""});
  Ensemble e = unfolding::unfold_ensemble(raws);
  for (auto& u : e) {
    require(u.epsilons.size() >= static_cast<std::size_t>(n), ErrorCode::Internal,
            "power_spectrum_mc: retained window shorter than n");
    u.epsilons.resize(n);
  }
  auto values = power_spectrum(e).values;
  std::lock_guard<std::mutex> lk(mu);
  cache[key] = values;
  return values;
}

ObservableCurve reference_statistics(ReferenceKind kind, Observable obs, const std::vector<double>& grid) {
  ObservableCurve c;
  c.observable = obs;
  c.grid = grid;
  c.meta["reference"] = reference_name(kind);
  auto each = [&](auto f) {
    for (double x : grid) c.values.push_back(f(x));
  };
  switch (obs) {
    case Observable::NNSD: each([&](double s) { return wigner_surmise(kind, s); }); break;
    case Observable::CumulativeNNSD: each([&](double s) { return wigner_surmise_cdf(kind, s); }); break;
    case Observable::RatioDist: each([&](double r) { return ratio_tilde_density(kind, r); }); break;
    case Observable::CumulativeRatioDist:
      each([&](double r) {
        if (r <= 0.0) return 0.0;
        auto f = [&](double t) { return ratio_tilde_density(kind, t); };
        return quad::integrate(f, 0.0, std::min(r, 1.0), 1e-13, 1e-11).value;
      });
      break;
    case Observable::NumberVariance: each([&](double L) { return sigma2_reference(kind, L); }); break;
    case Observable::Y2: each([&](double r) { return y2_reference(kind, r); }); break;
    case Observable::FormFactor: each([&](double t) { return k_reference(kind, t); }); break;
    case Observable::PowerSpectrum: {
      require(!grid.empty() && grid.front() > 0.0, ErrorCode::InvalidArgument,
              "reference_statistics: power-spectrum grid must start at 1/n");
      if (kind == ReferenceKind::Poisson) {
        each([&](double t) { return power_spectrum_poisson(t); });
        break;
      }
      const int n = static_cast<int>(std::llround(1.0 / grid.front()));
      auto table = power_spectrum_mc(kind, n);
      for (double t : grid) {
        long l = std::lround(t * n);
        require(l >= 1 && l <= n && std::fabs(t * n - l) < 1e-6, ErrorCode::InvalidArgument,
                "reference_statistics: power-spectrum grid must be l/n");
        c.values.push_back(table[l - 1]);
      }
      c.meta["source"] = "monte-carlo";
      break;
    }
    case Observable::LengthSpectrum:
    case Observable::SCorrelation:
    case Observable::AmplitudeDist:
      fail(ErrorCode::NotAvailable,
           std::string("reference_statistics: no reference for ") + observable_name(obs));
  }
  return c;
}

}  // namespace rmtlab::observables
