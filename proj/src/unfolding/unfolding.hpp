#pragma once

#include <functional>
#include <string>
#include <vector>

#include "billiards/billiards.hpp"

namespace rmtlab::unfolding {

enum class Source { Measured, Matrix, Synthetic };

struct RawSpectrum {
  std::vector<double> levels;
  Source source = Source::Measured;
  std::string label;
};

enum class Method { Weyl, Polynomial, Analytic, Ensemble };

const char* method_name(Method m);

struct UnfoldedSpectrum {
  std::vector<double> epsilons;
  Method method = Method::Polynomial;
  int degree = 0;
  // Fitted constant offset for Weyl unfolding.
  double n0 = 0.0;
  std::vector<std::string> warnings;

  double mean_spacing() const;
};

inline constexpr std::size_t kMinLevels = 10;

// Checks ordering and size; equal neighbours are pushed apart by
// 1e-9 mean spacings so the result is strictly increasing.
RawSpectrum prepare(const RawSpectrum& raw);

// Keeps the central fraction of the levels by index.
RawSpectrum retain_central(const RawSpectrum& raw, double fraction = 0.6);

UnfoldedSpectrum unfold_weyl(const RawSpectrum& raw, const billiards::BilliardGeometry& geom);
UnfoldedSpectrum unfold_polynomial(const RawSpectrum& raw, int degree = 2);
UnfoldedSpectrum unfold_analytic(const RawSpectrum& raw, const std::function<double(double)>& staircase);

// Pooled-ensemble unfolding: one smooth staircase is fitted to the
// union of all realizations, then each realization is mapped through
// it. Fitting uses the levels between the fit quantiles of the pooled
// set; the levels kept are those between the keep quantiles.
struct EnsembleUnfoldOptions {
  int degree = 9;
  double fit_lo = 0.12;
  double fit_hi = 0.88;
  double keep_lo = 0.2;
  double keep_hi = 0.8;
};

std::vector<UnfoldedSpectrum> unfold_ensemble(const std::vector<RawSpectrum>& raws,
                                              const EnsembleUnfoldOptions& opt = {});

// Least-squares polynomial in a scaled variable.
class SmoothStaircase {
public:
  SmoothStaircase() = default;
  SmoothStaircase(const std::vector<double>& x, const std::vector<double>& y, int degree);
  double operator()(double x) const;
  double derivative(double x) const;
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  // Lowest derivative over a dense sampling of [lo, hi].
  double min_slope(int samples = 2000) const;

private:
  double center_ = 0.0;
  double half_ = 1.0;
  double lo_ = 0.0;
  double hi_ = 0.0;
  std::vector<double> coef_;  // Legendre coefficients
};

}  // namespace rmtlab::unfolding
