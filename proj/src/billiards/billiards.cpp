#include "billiards/billiards.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "common/error.hpp"

namespace rmtlab::billiards {

BilliardGeometry BilliardGeometry::circle(double radius_m, double n0) {
  require(std::isfinite(radius_m) && radius_m > 0.0, ErrorCode::InvalidArgument,
          "BilliardGeometry: radius must be positive");
  BilliardGeometry g;
  g.shape = Shape::CircleDirichlet;
  g.radius_m = radius_m;
  g.area_m2 = M_PI * radius_m * radius_m;
  g.perimeter_m = 2.0 * M_PI * radius_m;
  g.n0 = n0;
  return g;
}

void BilliardGeometry::validate() const {
  require(radius_m > 0.0 && area_m2 > 0.0 && perimeter_m > 0.0, ErrorCode::InvalidArgument,
          "BilliardGeometry: nonpositive size");
  bool ok = std::fabs(area_m2 - M_PI * radius_m * radius_m) <= 1e-12 * area_m2 &&
            std::fabs(perimeter_m - 2.0 * M_PI * radius_m) <= 1e-12 * perimeter_m;
  require(ok, ErrorCode::InvalidArgument, "BilliardGeometry: area and perimeter inconsistent with radius");
}

double weyl_count(const BilliardGeometry& g, double f_ghz) {
  const double f = f_ghz * 1e9;
  const double c = kSpeedOfLight;
  return g.area_m2 * M_PI * f * f / (c * c) - g.perimeter_m * f / (2.0 * c) + g.n0;
}

double weyl_density(const BilliardGeometry& g, double f_ghz) {
  const double f = f_ghz * 1e9;
  const double c = kSpeedOfLight;
  return 1e9 * (2.0 * g.area_m2 * M_PI * f / (c * c) - g.perimeter_m / (2.0 * c));
}

namespace {

double bisect_zero(int m, double lo, double hi) {
  double flo = std::cyl_bessel_j(static_cast<double>(m), lo);
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    double fm = std::cyl_bessel_j(static_cast<double>(m), mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::vector<std::vector<double>> bessel_zeros(double x_max) {
  require(std::isfinite(x_max) && x_max > 0.0, ErrorCode::InvalidArgument, "bessel_zeros: x_max must be positive");
  const int m_cap = static_cast<int>(std::ceil(x_max)) + 2;
  // Zeros of J_m are tracked up to top(m); the interlacing brackets for
  // J_{m+1} then reach top(m + 1) + pi.
  auto top = [&](int m) { return x_max + (m_cap - m + 2) * M_PI; };

  std::vector<double> prev;
  {
    const double step = 0.1;
    double x0 = 0.0;
    double f0 = 1.0;
    while (prev.empty() || prev.back() <= top(0)) {
      double x1 = x0 + step;
      double f1 = std::cyl_bessel_j(0.0, x1);
      if ((f0 < 0.0) != (f1 < 0.0)) prev.push_back(bisect_zero(0, x0, x1));
      x0 = x1;
      f0 = f1;
    }
  }
  std::vector<std::vector<double>> out;
  for (int m = 0;; ++m) {
    if (prev.empty() || prev.front() > x_max) break;
    std::vector<double> kept;
    for (double z : prev)
      if (z <= x_max) kept.push_back(z);
    out.push_back(std::move(kept));
    std::vector<double> next;
    for (std::size_t n = 0; n + 1 < prev.size(); ++n) {
      double z = bisect_zero(m + 1, prev[n], prev[n + 1]);
      next.push_back(z);
      if (z > top(m + 1)) break;
    }
    prev = std::move(next);
  }
  return out;
}

std::vector<double> circle_eigenfrequencies(const BilliardGeometry& g, double f_max_ghz) {
  g.validate();
  require(std::isfinite(f_max_ghz) && f_max_ghz > 0.0, ErrorCode::InvalidArgument,
          "circle_eigenfrequencies: f_max must be positive");
  const double scale = kSpeedOfLight / (2.0 * M_PI * g.radius_m) * 1e-9;
  const double x_max = f_max_ghz / scale;
  require(x_max <= 2000.0, ErrorCode::OutOfRange, "circle_eigenfrequencies: f_max too large for zero enumeration");
  std::vector<double> f;
  auto zeros = bessel_zeros(x_max);
  for (std::size_t m = 0; m < zeros.size(); ++m)
    for (double z : zeros[m]) {
      f.push_back(z * scale);
      if (m > 0) f.push_back(z * scale);
    }
  std::sort(f.begin(), f.end());
  return f;
}

std::vector<Orbit> periodic_orbit_lengths(const BilliardGeometry& g, double l_max_m, int n_max) {
  g.validate();
  require(std::isfinite(l_max_m) && l_max_m > 0.0, ErrorCode::InvalidArgument,
          "periodic_orbit_lengths: l_max must be positive");
  require(n_max >= 2, ErrorCode::InvalidArgument, "periodic_orbit_lengths: n_max must be at least 2");
  std::vector<Orbit> all;
  for (int n = 2; n <= n_max; ++n)
    for (int m = 1; 2 * m <= n; ++m) {
      double len = 2.0 * n * g.radius_m * std::sin(M_PI * m / n);
      if (len <= l_max_m) all.push_back({len, m, n});
    }
  std::stable_sort(all.begin(), all.end(), [](const Orbit& a, const Orbit& b) { return a.length_m < b.length_m; });
  std::vector<Orbit> out;
  for (const Orbit& o : all)
    if (out.empty() || o.length_m - out.back().length_m > 1e-12 * o.length_m) out.push_back(o);
  return out;
}

}  // namespace rmtlab::billiards
