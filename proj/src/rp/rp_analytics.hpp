#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace rmtlab::rp {

// How dimensionless lambda maps onto the scales entering the analytic
// curves. Published keeps alpha_tilde = pi/sqrt(2) lambda and
// alpha_L = sqrt(2) lambda; Calibrated uses constants refitted against
// this library's N = 400 Monte-Carlo.
enum class ScaleConvention { Calibrated, Published };

inline constexpr double kPublishedAlphaTildePerLambda = 2.2214414690791831;  // pi / sqrt(2)
inline constexpr double kPublishedAlphaLPerLambda = 1.4142135623730951;      // sqrt(2)
// Frozen output of inference::calibrate_rp_scales on N = 400 matrices
// (seed 20240601, 1000 realizations, lambda = 0.475, ensemble unfolding,
// quantile window 0.2 - 0.8).
inline constexpr double kCalibratedAlphaTildePerLambda = 3.6725;
inline constexpr double kCalibratedAlphaLPerLambda = 1.8315;

struct RpScales {
  double lambda = 0.0;
  double alpha_tilde = 0.0;
  double alpha_L = 0.0;

  static RpScales from_lambda(double lambda, ScaleConvention conv = ScaleConvention::Calibrated);
};

// Form factor; tau is the physical argument conjugate to the unfolded
// separation (Heisenberg time 2 pi).
double form_factor(double tau, double alpha_tilde);
// Two-point cluster function from the radial/angular double integral.
double cluster_function(double r, double alpha_tilde);
// Y2 from the inverse cosine transform of 1 - K.
double cluster_function_from_k(double r, double alpha_tilde);
// Sigma^2(L) = L - 2 int_0^L (L - r) Y2(r) dr, evaluated in its
// spectral form L + (4/pi) int (K - 1) sin^2(L tau / 2) / tau^2 dtau.
double number_variance(double L, double alpha_tilde);
// Same relation integrated directly over the double-integral Y2
// (tabulated with step 0.05; intended for alpha_tilde >= 0.5).
double number_variance_from_cluster(double L, double alpha_tilde);

double surmise_d(double alpha_L);
double surmise_d_closed_form(double alpha_L);
double surmise_d_stable(double alpha_L);
double spacing_density(double s, double alpha_L);
double spacing_cdf(double s, double alpha_L);

double k_rp(double tau, double lambda, ScaleConvention conv = ScaleConvention::Calibrated);
double y2_rp(double r, double lambda, ScaleConvention conv = ScaleConvention::Calibrated);
double sigma2_rp(double L, double lambda, ScaleConvention conv = ScaleConvention::Calibrated);
double nnsd_rp(double s, double lambda, ScaleConvention conv = ScaleConvention::Calibrated);

// Levels drawn from a diagonal with Gaussian density carry a local
// coupling lambda_loc = lambda * exp(-z^2/2), z the standard-normal
// coordinate of the energy. A central quantile window [p_lo, p_hi]
// therefore mixes a range of local couplings.
struct QuantileWindow {
  double p_lo = 0.2;
  double p_hi = 0.8;
  int nodes = 8;
};

// (lambda_loc / lambda, weight) pairs; weights sum to one.
std::vector<std::pair<double, double>> window_nodes(const QuantileWindow& w);

// Cumulative spacing distribution tabulated on [0, s_max] with step h.
// A table may mix several scales (alpha_L, weight); alpha_L = 0 stands
// for the Poisson law.
class SpacingCdfTable {
public:
  explicit SpacingCdfTable(const std::vector<std::pair<double, double>>& components, double s_max = 12.0,
                           double h = 0.01);
  static SpacingCdfTable for_lambda(double lambda, ScaleConvention conv = ScaleConvention::Calibrated,
                                    const QuantileWindow* window = nullptr, double s_max = 12.0, double h = 0.01);
  double cdf(double s) const;
  double density(double s) const;

private:
  double h_;
  double s_max_;
  std::vector<double> cdf_;
  std::vector<double> pdf_;
};

double window_average(double lambda, const QuantileWindow& w, const std::function<double(double)>& f);

// Evaluates a scale-parametrised curve on a grid for a given lambda,
// optionally averaged over a quantile window.
enum class Curve { FormFactor, ClusterFunction, NumberVariance, SpacingDensity, SpacingCdf };
std::vector<double> curve(Curve kind, const std::vector<double>& grid, double lambda,
                          ScaleConvention conv = ScaleConvention::Calibrated, const QuantileWindow* window = nullptr);

}  // namespace rmtlab::rp
