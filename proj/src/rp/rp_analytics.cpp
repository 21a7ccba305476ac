#include "rp/rp_analytics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>

#include "common/error.hpp"
#include "common/quadrature.hpp"
#include "rp/special.hpp"

namespace rmtlab::rp {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSqrtPi = 1.7724538509055160273;
// exp(-x) < 1e-16 beyond this
constexpr double kGaussCut = 36.84;

void check_scale(double a, const char* what) {
  require(std::isfinite(a) && a > 0.0, ErrorCode::InvalidArgument, std::string(what) + ": scale must be positive");
}

// 8-point Gauss-Legendre on [-1, 1]
constexpr double kGLx[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
                            0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr double kGLw[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
                            0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
constexpr double kGL4x[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
constexpr double kGL4w[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};

// Composite fixed-order rule over [pts[0], pts.back()] with panels
// distributed proportionally to segment length.
template <class F>
double composite_gl(F&& f, const std::vector<double>& pts, int panels) {
  const double total = pts.back() - pts.front();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    double len = pts[i + 1] - pts[i];
    if (len <= 0.0) continue;
    int np = std::max(2, static_cast<int>(std::ceil(panels * len / total)));
    double h = len / np;
    for (int k = 0; k < np; ++k) {
      double mid = pts[i] + (k + 0.5) * h;
      double half = 0.5 * h;
      for (int j = 0; j < 8; ++j) acc += kGLw[j] * half * f(mid + half * kGLx[j]);
    }
  }
  return acc;
}

// Fixed number of panels in every segment.
template <class F>
double composite_gl_segments(F&& f, const std::vector<double>& pts, int panels) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    double h = (pts[i + 1] - pts[i]) / panels;
    if (h <= 0.0) continue;
    for (int k = 0; k < panels; ++k) {
      double mid = pts[i] + (k + 0.5) * h;
      double half = 0.5 * h;
      for (int j = 0; j < 8; ++j) acc += kGLw[j] * half * f(mid + half * kGLx[j]);
    }
  }
  return acc;
}

// ---------------------------------------------------------------- form factor

double form_factor_impl(double tau, double a) {
  const double a2 = a * a;
  const double s = a2 * tau * tau;
  const double g = std::sqrt(2.0 * kPi) * a2 * std::pow(tau, 1.5);
  const double damp = kPi * a2 * tau;

  double first;
  if (g < 1e-6) {
    first = (1.0 + g * g / 8.0) * std::exp(-damp - 0.5 * s);
  } else {
    first = 2.0 / g * std::exp(std::log(special::bessel_i1e(g)) + g - damp - 0.5 * s);
  }

  // Third term, t = 1 + u. Everything in the log domain: at large scale
  // the Bessel growth and the Gaussian cancel to O(1).
  const double log_pref = std::log(tau / (2.0 * kPi) * g) - damp;
  auto integrand = [&](double u) {
    double t = 1.0 + u;
    double w = u * (2.0 + u);
    if (w <= 0.0) return 0.0;
    double x = g * t;
    double li = x < 1e-300 ? std::log(0.5 * x) : std::log(special::bessel_i1e(x)) + x;
    return std::exp(std::log(w) + li - 0.5 * t * t * s + log_pref);
  };

  // The integrand is a Gaussian of width 1/sqrt(s) about the saddle
  // t* = sqrt(2 pi / tau) (or a Gamma-like bump near t = 1 when the
  // saddle lies below it); fixed panels relative to that width.
  const double width = 1.0 / std::sqrt(s);
  const double ucenter = std::max(0.0, std::sqrt(2.0 * kPi / tau) - 1.0);
  const double uhi = ucenter + (std::sqrt(2.0 * kGaussCut) + 3.0) * width;
  std::vector<double> pts;
  for (double k : {-12.0, -8.0, -6.0, -4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0}) {
    double p = ucenter + k * width;
    if (p > 0.0 && p < uhi) pts.push_back(p);
  }
  pts.insert(pts.begin(), 0.0);
  pts.push_back(uhi);
  const double third = composite_gl_segments(integrand, pts, 2);
  const double coarse = composite_gl_segments(integrand, pts, 1);
  if (!std::isfinite(third) || std::fabs(third - coarse) > 1e-7 * std::max(1.0, std::fabs(third)))
    fail(ErrorCode::Numeric, "form_factor: t-integral unresolved at tau=" + std::to_string(tau) +
                                 ", alpha=" + std::to_string(a) + " (panel estimates " + std::to_string(third) +
                                 " vs " + std::to_string(coarse) + ")");
  return 1.0 + first - third;
}

// ----------------------------------------------------------- cluster function

constexpr int kAngularPanels = 96;
constexpr int kRadialPanels = 48;

struct Y2Params {
  double r;
  double c;
  double kappa;
};

double angular_integrand(double phi, double q, double P) {
  const double sp = std::sin(phi);
  const double cp = std::cos(phi);
  const std::complex<double> I(0.0, 1.0);
  const std::complex<double> ep(cp, sp);
  const std::complex<double> em(cp, -sp);

  double re_a = 0.0;
  const double na = 1.0 - q * sp;
  if (na != 0.0) {
    std::complex<double> A = ep * na / (1.0 + I * q * ep / 2.0) * std::exp(-I * P / na);
    if (std::isfinite(A.real())) re_a = A.real();
  }
  const double nb = 1.0 + q * sp;
  std::complex<double> B = em * nb / (1.0 + I * q * em / 2.0) * std::exp(-I * P / nb);
  double re_b = std::isfinite(B.real()) ? B.real() : 0.0;
  return cp * (re_a + re_b);
}

// The A term has an essential oscillation along 1 = q sin(phi) where
// its amplitude vanishes linearly; a fixed panel rule integrates the
// bounded remainder with an error quadratic in the panel width.
double angular_integral(double t, const Y2Params& p) {
  const double q = t / p.kappa;
  const double P = t * t / (2.0 * p.c * p.kappa);
  std::vector<double> pts{0.0, kPi / 2.0, kPi};
  if (q > 1.0) {
    double p1 = std::asin(1.0 / q);
    pts.push_back(p1);
    pts.push_back(kPi - p1);
  }
  std::sort(pts.begin(), pts.end());
  return composite_gl([&](double phi) { return angular_integrand(phi, q, P); }, pts, kAngularPanels);
}

double cluster_function_impl(double r, double a) {
  const double a2 = a * a;
  const double c = 1.0 / (kPi * kPi * a2);
  Y2Params p{r, c, r / (kPi * a2)};

  const double u = 2.0 * r * r / a2;
  const double v = 2.0 * kPi * r;
  const double sv = std::sin(0.5 * v);
  // 1 - e^{-u} cos v without cancellation
  const double bracket = -std::expm1(-u) * std::cos(v) + 2.0 * sv * sv;
  const double lead = bracket / (2.0 * kPi * kPi * r * r) - c;

  const double tmax = std::sqrt(2.0 * c * kGaussCut);
  auto radial = [&](double t) { return t * std::exp(-t * t / (2.0 * c)) * angular_integral(t, p); };
  std::vector<double> pts{0.0};
  for (double b : {p.kappa, 2.0 * p.kappa})
    if (b < tmax) pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  pts.push_back(tmax);
  return lead + composite_gl(radial, pts, kRadialPanels) / kPi;
}

// ----------------------------------------------------- memoised K tables

// K(tau) - 1 on a fixed tau grid per scale, reused by every L and r.
struct KTable {
  double h = 0.0;
  std::vector<double> km1;
};

std::shared_ptr<const KTable> k_table(double a) {
  static std::shared_mutex mu;
  static std::map<double, std::shared_ptr<const KTable>> cache;
  {
    std::shared_lock lk(mu);
    auto it = cache.find(a);
    if (it != cache.end()) return it->second;
  }
  // K - 1 decays like exp(-a^2 tau^2 / 2) times slower factors; the
  // table extends until it is negligible.
  auto t = std::make_shared<KTable>();
  t->h = 0.01;
  const double tau_max = 400.0;
  std::size_t n = static_cast<std::size_t>(tau_max / t->h) + 1;
  t->km1.resize(n);
  t->km1[0] = std::nan("");
  std::size_t quiet = 0;
  for (std::size_t i = 1; i < n; ++i) {
    double v = form_factor_impl(i * t->h, a) - 1.0;
    t->km1[i] = v;
    quiet = std::fabs(v) < 1e-10 ? quiet + 1 : 0;
    if (quiet > 200 && i * t->h > 10.0) {
      t->km1.resize(i + 1);
      break;
    }
  }
  // K(0+) - 1 by quadratic extrapolation
  t->km1[0] = 3.0 * t->km1[1] - 3.0 * t->km1[2] + t->km1[3];
  std::unique_lock lk(mu);
  if (cache.size() > 256) cache.clear();
  return cache.emplace(a, std::move(t)).first->second;
}

template <class W>
double simpson_k(const KTable& t, W&& weight) {
  std::size_t n = t.km1.size();
  if (n % 2 == 0) --n;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double w = (i == 0 || i + 1 == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * t.km1[i] * weight(i * t.h);
  }
  return acc * t.h / 3.0;
}

// -------------------------------------------------------- memoised Y2 tables

// Double-integral Y2 sampled on a uniform grid from r = 0; node 0 is
// the even-function extrapolation of nodes 1 and 2.
struct Y2Table {
  double h = 0.0;
  std::vector<double> y;

  // Catmull-Rom interpolation, reflecting about r = 0.
  double at(double r) const {
    std::size_t i = static_cast<std::size_t>(r / h);
    if (i + 2 >= y.size()) i = y.size() - 3;
    double s = r / h - static_cast<double>(i);
    double ym = i == 0 ? y[1] : y[i - 1];
    double y0 = y[i], y1 = y[i + 1], y2 = y[i + 2];
    return y0 + 0.5 * s * (y1 - ym + s * (2.0 * ym - 5.0 * y0 + 4.0 * y1 - y2 + s * (3.0 * (y0 - y1) + y2 - ym)));
  }
};

constexpr double kY2Step = 0.05;

std::shared_ptr<const Y2Table> y2_table(double a, double rmax) {
  static std::shared_mutex mu;
  static std::map<double, std::shared_ptr<const Y2Table>> cache;
  {
    std::shared_lock lk(mu);
    auto it = cache.find(a);
    if (it != cache.end() && (it->second->y.size() - 3) * it->second->h >= rmax) return it->second;
  }
  auto t = std::make_shared<Y2Table>();
  t->h = kY2Step;
  std::size_t n = static_cast<std::size_t>(std::ceil(rmax / t->h)) + 3;
  t->y.resize(n);
  for (std::size_t i = 1; i < n; ++i) t->y[i] = cluster_function_impl(i * t->h, a);
  t->y[0] = (4.0 * t->y[1] - t->y[2]) / 3.0;
  std::unique_lock lk(mu);
  if (cache.size() > 256) cache.clear();
  cache[a] = t;
  return t;
}

}  // namespace

// ------------------------------------------------------------------- scales

RpScales RpScales::from_lambda(double lambda, ScaleConvention conv) {
  require(std::isfinite(lambda) && lambda >= 0.0, ErrorCode::InvalidArgument, "lambda must be nonnegative");
  RpScales s;
  s.lambda = lambda;
  if (conv == ScaleConvention::Published) {
    s.alpha_tilde = kPublishedAlphaTildePerLambda * lambda;
    s.alpha_L = kPublishedAlphaLPerLambda * lambda;
  } else {
    s.alpha_tilde = kCalibratedAlphaTildePerLambda * lambda;
    s.alpha_L = kCalibratedAlphaLPerLambda * lambda;
  }
  return s;
}

// ------------------------------------------------------------------- curves

double form_factor(double tau, double alpha_tilde) {
  check_scale(alpha_tilde, "form_factor");
  require(tau > 0.0, ErrorCode::InvalidArgument, "form_factor: tau must be positive");
  return form_factor_impl(tau, alpha_tilde);
}

double cluster_function(double r, double alpha_tilde) {
  check_scale(alpha_tilde, "cluster_function");
  require(r > 0.0, ErrorCode::InvalidArgument, "cluster_function: r must be positive");
  return cluster_function_impl(r, alpha_tilde);
}

double cluster_function_from_k(double r, double alpha_tilde) {
  check_scale(alpha_tilde, "cluster_function_from_k");
  require(r >= 0.0, ErrorCode::InvalidArgument, "cluster_function_from_k: r must be nonnegative");
  auto t = k_table(alpha_tilde);
  return -simpson_k(*t, [r](double tau) { return std::cos(r * tau); }) / kPi;
}

double number_variance(double L, double alpha_tilde) {
  check_scale(alpha_tilde, "number_variance");
  require(L >= 0.0, ErrorCode::InvalidArgument, "number_variance: L must be nonnegative");
  if (L == 0.0) return 0.0;
  auto t = k_table(alpha_tilde);
  double corr = simpson_k(*t, [L](double tau) {
    if (tau == 0.0) return 0.25 * L * L;
    double sn = std::sin(0.5 * L * tau);
    return sn * sn / (tau * tau);
  });
  return L + 4.0 / kPi * corr;
}

double number_variance_from_cluster(double L, double alpha_tilde) {
  check_scale(alpha_tilde, "number_variance_from_cluster");
  require(L >= 0.0, ErrorCode::InvalidArgument, "number_variance: L must be nonnegative");
  if (L == 0.0) return 0.0;
  auto t = y2_table(alpha_tilde, std::max(L, 8.0));
  static const double xg[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
  static const double wg[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};
  double acc = 0.0;
  const double h = t->h;
  for (std::size_t i = 0; i * h < L; ++i) {
    double x0 = i * h;
    double x1 = std::min(L, x0 + h);
    double half = 0.5 * (x1 - x0);
    double mid = 0.5 * (x1 + x0);
    for (int k = 0; k < 4; ++k) {
      double r = mid + half * xg[k];
      acc += wg[k] * half * (L - r) * t->at(r);
    }
  }
  return L - 2.0 * acc;
}

// ------------------------------------------------------------------ surmise

double surmise_d_closed_form(double a) {
  check_scale(a, "surmise_d");
  double x = a * a;
  return 1.0 / kSqrtPi + special::erfcx(a) / (2.0 * a) - 0.5 * a * special::expint_ei(x) +
         2.0 * x / kSqrtPi * special::hyp2f2_half(x);
}

// Rewrites Ei and 2F2 through int_0^a (1 - erfcx(y))/y dy; the large
// terms of the closed form cancel analytically.
double surmise_d_stable(double a) {
  check_scale(a, "surmise_d");
  auto f = [](double y) {
    if (y < 1e-6) return 2.0 / kSqrtPi - y;
    return (1.0 - special::erfcx(y)) / y;
  };
  double integral = quad::integrate(f, 0.0, a, 1e-14, 1e-13, 20, "surmise_d").value;
  return 1.0 / kSqrtPi + special::erfcx(a) / (2.0 * a) - 0.5 * a * (special::kEulerGamma + 2.0 * std::log(a)) +
         a * integral;
}

double surmise_d(double a) { return a * a <= 1.0 ? surmise_d_closed_form(a) : surmise_d_stable(a); }

namespace {

struct Surmise {
  double a;
  double D;
  double logC;
};

Surmise make_surmise(double a) {
  Surmise s{a, surmise_d(a), 0.0};
  s.logC = std::log(4.0 / kSqrtPi) + 3.0 * std::log(s.D);
  return s;
}

double spacing_density_impl(double s, const Surmise& m) {
  if (s <= 0.0) return 0.0;
  const double a = m.a;
  const double k = m.D * s / a;
  const double xstar = 2.0 * a * a * (k - 1.0);
  // -x^2/(4a^2) - x + log(sinh(kx)/(kx)) = a^2 (k-1)^2 + h(x)
  auto h = [&](double x) {
    const double z = k * x;
    const double d = x - xstar;
    double tail;
    if (z < 1e-6) tail = -z + z * z / 6.0;
    else tail = std::log(-std::expm1(-2.0 * z) / (2.0 * z));
    return -d * d / (4.0 * a * a) + tail;
  };
  const double xpeak = std::max(0.0, xstar);
  const double hmax = h(xpeak);
  auto f = [&](double x) { return std::exp(h(x) - hmax); };
  const double width = a * std::sqrt(2.0);
  std::vector<double> pts{0.0};
  for (double q : {-12.0, -4.0, 0.0, 2.0, 5.0}) {
    double p = xpeak + q * width;
    if (p > pts.back() + 1e-3 * width) pts.push_back(p);
  }
  pts.push_back(std::max(xpeak + 12.0 * width + 40.0, pts.back() + 1.0));
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    acc += quad::integrate(f, pts[i], pts[i + 1], 1e-13 * width, 1e-12, 30, "spacing_density").value;
  if (acc <= 0.0) return 0.0;
  const double km1 = k - 1.0;
  return std::exp(m.logC + 2.0 * std::log(s) - m.D * m.D * s * s + a * a * km1 * km1 + hmax + std::log(acc));
}

}  // namespace

double spacing_density(double s, double alpha_L) {
  check_scale(alpha_L, "spacing_density");
  require(s >= 0.0, ErrorCode::InvalidArgument, "spacing_density: s must be nonnegative");
  return spacing_density_impl(s, make_surmise(alpha_L));
}

double spacing_cdf(double s, double alpha_L) {
  check_scale(alpha_L, "spacing_cdf");
  require(s >= 0.0, ErrorCode::InvalidArgument, "spacing_cdf: s must be nonnegative");
  if (s == 0.0) return 0.0;
  Surmise m = make_surmise(alpha_L);
  auto f = [&](double x) { return spacing_density_impl(x, m); };
  double acc = 0.0;
  double step = 0.5;
  for (double x0 = 0.0; x0 < s; x0 += step)
    acc += quad::integrate(f, x0, std::min(s, x0 + step), 1e-12, 1e-11, 14, "spacing_cdf").value;
  return std::min(1.0, acc);
}

// ------------------------------------------------------- lambda front ends

double k_rp(double tau, double lambda, ScaleConvention conv) {
  require(lambda > 0.0, ErrorCode::InvalidArgument, "k_rp: lambda must be positive");
  return form_factor(tau, RpScales::from_lambda(lambda, conv).alpha_tilde);
}

double y2_rp(double r, double lambda, ScaleConvention conv) {
  require(lambda > 0.0, ErrorCode::InvalidArgument, "y2_rp: lambda must be positive");
  return cluster_function(r, RpScales::from_lambda(lambda, conv).alpha_tilde);
}

double sigma2_rp(double L, double lambda, ScaleConvention conv) {
  require(L >= 0.0, ErrorCode::InvalidArgument, "sigma2_rp: L must be nonnegative");
  if (L == 0.0) return 0.0;
  if (lambda == 0.0) return L;
  require(lambda > 0.0, ErrorCode::InvalidArgument, "sigma2_rp: lambda must be nonnegative");
  return number_variance(L, RpScales::from_lambda(lambda, conv).alpha_tilde);
}

double nnsd_rp(double s, double lambda, ScaleConvention conv) {
  require(lambda > 0.0, ErrorCode::InvalidArgument, "nnsd_rp: lambda must be positive");
  return spacing_density(s, RpScales::from_lambda(lambda, conv).alpha_L);
}

// ------------------------------------------------------------- windowing

std::vector<std::pair<double, double>> window_nodes(const QuantileWindow& w) {
  require(w.p_lo > 0.0 && w.p_hi < 1.0 && w.p_lo < w.p_hi, ErrorCode::InvalidArgument,
          "window: need 0 < p_lo < p_hi < 1");
  require(w.nodes >= 1 && w.nodes <= 64, ErrorCode::InvalidArgument, "window: node count out of range");
  // Gauss-Legendre on [p_lo, p_hi] by Newton on P_n.
  const int n = w.nodes;
  std::vector<std::pair<double, double>> out;
  for (int i = 1; i <= n; ++i) {
    double x = std::cos(kPi * (i - 0.25) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    double wt = 2.0 / ((1.0 - x * x) * dp * dp);
    double p = 0.5 * (w.p_lo + w.p_hi) + 0.5 * (w.p_hi - w.p_lo) * x;
    double z = special::normal_quantile(p);
    double factor = std::exp(-0.5 * z * z);
    bool merged = false;
    for (auto& node : out)
      if (std::fabs(node.first - factor) < 1e-13) {
        node.second += 0.5 * wt;
        merged = true;
        break;
      }
    if (!merged) out.emplace_back(factor, 0.5 * wt);
  }
  return out;
}

SpacingCdfTable::SpacingCdfTable(const std::vector<std::pair<double, double>>& components, double s_max, double h)
    : h_(h), s_max_(s_max) {
  require(!components.empty(), ErrorCode::InvalidArgument, "SpacingCdfTable: no components");
  require(h > 0.0 && s_max > h, ErrorCode::InvalidArgument, "SpacingCdfTable: invalid grid");
  const std::size_t n = static_cast<std::size_t>(std::ceil(s_max / h));
  s_max_ = n * h;
  cdf_.assign(n + 1, 0.0);
  pdf_.assign(n + 1, 0.0);
  for (auto [alpha_L, weight] : components) {
    if (alpha_L == 0.0) {
      for (std::size_t i = 0; i <= n; ++i) {
        cdf_[i] += weight * -std::expm1(-(i * h));
        pdf_[i] += weight * std::exp(-(i * h));
      }
      continue;
    }
    check_scale(alpha_L, "SpacingCdfTable");
    Surmise m = make_surmise(alpha_L);
    double acc = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      const double s0 = i * h;
      pdf_[i] += weight * spacing_density_impl(s0, m);
      cdf_[i] += weight * acc;
      if (i == n) break;
      double cell = 0.0;
      for (int g = 0; g < 4; ++g) cell += kGL4w[g] * spacing_density_impl(s0 + 0.5 * h * (1.0 + kGL4x[g]), m);
      acc += 0.5 * h * cell;
    }
  }
}

SpacingCdfTable SpacingCdfTable::for_lambda(double lambda, ScaleConvention conv, const QuantileWindow* window,
                                            double s_max, double h) {
  require(lambda >= 0.0, ErrorCode::InvalidArgument, "SpacingCdfTable: lambda must be nonnegative");
  std::vector<std::pair<double, double>> comps;
  auto alpha = [&](double lam) { return lam == 0.0 ? 0.0 : RpScales::from_lambda(lam, conv).alpha_L; };
  if (!window) {
    comps.emplace_back(alpha(lambda), 1.0);
  } else {
    for (auto [factor, weight] : window_nodes(*window)) comps.emplace_back(alpha(lambda * factor), weight);
  }
  return SpacingCdfTable(comps, s_max, h);
}

double SpacingCdfTable::cdf(double s) const {
  if (s <= 0.0) return 0.0;
  if (s >= s_max_) return std::min(1.0, cdf_.back());
  const std::size_t i = std::min(cdf_.size() - 2, static_cast<std::size_t>(s / h_));
  const double t = (s - i * h_) / h_;
  // Cubic Hermite with the density as derivative.
  const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
  const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
  return h00 * cdf_[i] + h10 * h_ * pdf_[i] + h01 * cdf_[i + 1] + h11 * h_ * pdf_[i + 1];
}

double SpacingCdfTable::density(double s) const {
  if (s <= 0.0 || s >= s_max_) return 0.0;
  const std::size_t i = std::min(pdf_.size() - 2, static_cast<std::size_t>(s / h_));
  const double t = (s - i * h_) / h_;
  return (1 - t) * pdf_[i] + t * pdf_[i + 1];
}

double window_average(double lambda, const QuantileWindow& w, const std::function<double(double)>& f) {
  double acc = 0.0;
  for (auto [factor, weight] : window_nodes(w)) acc += weight * f(lambda * factor);
  return acc;
}

std::vector<double> curve(Curve kind, const std::vector<double>& grid, double lambda, ScaleConvention conv,
                          const QuantileWindow* window) {
  require(lambda >= 0.0, ErrorCode::InvalidArgument, "curve: lambda must be nonnegative");
  auto eval = [&](double lam, double x) -> double {
    if (lam == 0.0) {
      switch (kind) {
        case Curve::FormFactor: return 1.0;
        case Curve::ClusterFunction: return 0.0;
        case Curve::NumberVariance: return x;
        case Curve::SpacingDensity: return std::exp(-x);
        case Curve::SpacingCdf: return -std::expm1(-x);
      }
    }
    RpScales sc = RpScales::from_lambda(lam, conv);
    switch (kind) {
      case Curve::FormFactor: return form_factor(x, sc.alpha_tilde);
      case Curve::ClusterFunction: return cluster_function(x, sc.alpha_tilde);
      case Curve::NumberVariance: return number_variance(x, sc.alpha_tilde);
      case Curve::SpacingDensity: return spacing_density(x, sc.alpha_L);
      case Curve::SpacingCdf: return spacing_cdf(x, sc.alpha_L);
    }
    return 0.0;
  };
  std::vector<double> out(grid.size(), 0.0);
  if (!window) {
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = eval(lambda, grid[i]);
    return out;
  }
  for (auto [factor, weight] : window_nodes(*window))
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] += weight * eval(lambda * factor, grid[i]);
  return out;
}

}  // namespace rmtlab::rp
