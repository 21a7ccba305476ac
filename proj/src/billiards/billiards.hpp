#pragma once

#include <utility>
#include <vector>

namespace rmtlab::billiards {

inline constexpr double kSpeedOfLight = 2.9979e8;  // m/s

enum class Shape { CircleDirichlet };

struct BilliardGeometry {
  Shape shape = Shape::CircleDirichlet;
  double radius_m = 0.25;
  double area_m2 = 0.0;
  double perimeter_m = 0.0;
  double n0 = 0.0;

  static BilliardGeometry circle(double radius_m, double n0 = 0.0);
  void validate() const;
};

// Smooth Weyl staircase A pi f^2/c^2 - P f/(2c) + n0 at f in GHz.
double weyl_count(const BilliardGeometry& g, double f_ghz);
// Its derivative with respect to f in GHz.
double weyl_density(const BilliardGeometry& g, double f_ghz);

// Positive zeros j_{m,1} < j_{m,2} < ... of J_m up to x_max, for all m
// with j_{m,1} <= x_max. Index m of the result holds the zeros of J_m.
std::vector<std::vector<double>> bessel_zeros(double x_max);

std::vector<double> circle_eigenfrequencies(const BilliardGeometry& g, double f_max_ghz);

struct Orbit {
  double length_m;
  int m;  // winding number
  int n;  // number of bounces
};

// Polygonal orbits with 2 <= n <= n_max and 1 <= m <= n/2, lengths up
// to l_max, sorted and deduplicated.
std::vector<Orbit> periodic_orbit_lengths(const BilliardGeometry& g, double l_max_m, int n_max = 64);

}  // namespace rmtlab::billiards
