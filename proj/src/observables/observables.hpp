#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "unfolding/unfolding.hpp"

namespace rmtlab::observables {

enum class Observable {
  NNSD,
  CumulativeNNSD,
  RatioDist,
  CumulativeRatioDist,
  NumberVariance,
  Y2,
  FormFactor,
  PowerSpectrum,
  LengthSpectrum,
  SCorrelation,
  AmplitudeDist,
};

const char* observable_name(Observable o);
Observable parse_observable(const std::string& name);

struct ObservableCurve {
  Observable observable = Observable::NNSD;
  std::vector<double> grid;
  std::vector<double> values;
  std::vector<double> stderr_;  // empty when not estimated
  std::map<std::string, std::string> meta;
  std::vector<std::string> warnings;

  bool has_stderr() const { return !stderr_.empty(); }
  void validate() const;
};

using Ensemble = std::vector<unfolding::UnfoldedSpectrum>;

std::vector<double> spacings(const Ensemble& e);

// sup_x |F_emp(x) - F(x)| over the sorted samples.
double cdf_sup_distance(std::vector<double> samples, const std::function<double(double)>& cdf);

struct HistogramOptions {
  double bin_width = 0.1;
  double max = 0.0;  // 0 selects the smallest multiple of bin_width above the largest sample
};

ObservableCurve nnsd(const Ensemble& e, const HistogramOptions& opt = {});
ObservableCurve cumulative_nnsd(const Ensemble& e, const HistogramOptions& opt = {});

// r_j = s_j / s_{j-1}; with tilde, min(r_j, 1/r_j).
std::vector<double> ratios(const std::vector<double>& levels, bool tilde);
// Histogram of r-tilde on [0, 1] (tilde) or of r on [0, opt.max].
ObservableCurve ratio_distribution(const std::vector<std::vector<double>>& level_sets, bool tilde = true,
                                   const HistogramOptions& opt = {});
ObservableCurve cumulative_ratio_distribution(const std::vector<std::vector<double>>& level_sets, bool tilde = true,
                                              const HistogramOptions& opt = {});
double mean_ratio_tilde(const std::vector<std::vector<double>>& level_sets);

ObservableCurve number_variance(const Ensemble& e, const std::vector<double>& L_grid, double step = 0.25);

ObservableCurve estimate_y2(const Ensemble& e, const std::vector<double>& r_grid, double bin_width = 0.05);

struct FormFactorOptions {
  // Gaussian taper width as a fraction of the spectrum span.
  double window_fraction = 1.0 / 7.0;
  // Half-width of the tau band each output point is averaged over.
  double band = 0.2;
  int band_points = 9;
};

ObservableCurve form_factor(const Ensemble& e, const std::vector<double>& tau_grid, const FormFactorOptions& opt = {});

// Ensemble-averaged power spectrum of delta_q; all spectra are cut to
// the shortest length n so the grid l/n, l = 1..n, is shared.
ObservableCurve power_spectrum(const Ensemble& e);

struct Slope {
  double slope;
  double stderr_;
};
// Least-squares slope of log(value) against log(grid) on [lo, hi].
Slope loglog_slope(const ObservableCurve& c, double lo, double hi);

struct LengthSpectrumOptions {
  // Gaussian edge taper, as a fraction of the k range.
  double taper_fraction = 0.1;
  int smooth_points_per_period = 24;
};

// |sum_i w(k_i) e^{i k_i l} - int rho(k) w(k) e^{i k l} dk| with
// k = 2 pi f / c; density_per_ghz is the smooth dN/df.
ObservableCurve length_spectrum(const std::vector<double>& levels_ghz,
                                const std::function<double(double)>& density_per_ghz,
                                const std::vector<double>& l_grid_m, const LengthSpectrumOptions& opt = {});

struct Peak {
  double position;
  double height;
};
std::vector<Peak> local_maxima(const ObservableCurve& c, double min_position = 0.3);

enum class ReferenceKind { Poisson, GOE, GUE };
ReferenceKind parse_reference(const std::string& name);
const char* reference_name(ReferenceKind k);

// Closed forms where they exist (Poisson everything, Wigner and ratio
// surmises, sine-kernel Y2 / K / Sigma^2); power spectra of GOE and GUE
// come from a Monte-Carlo table built on first use and cached per n.
ObservableCurve reference_statistics(ReferenceKind kind, Observable obs, const std::vector<double>& grid);

// Pieces of the references, exposed for tests.
double wigner_surmise(ReferenceKind kind, double s);
double wigner_surmise_cdf(ReferenceKind kind, double s);
double ratio_tilde_density(ReferenceKind kind, double r);
double sine_integral(double x);
double y2_reference(ReferenceKind kind, double r);
double k_reference(ReferenceKind kind, double tau);
double sigma2_reference(ReferenceKind kind, double L);
double power_spectrum_poisson(double tau);
// Monte-Carlo table: spectra of length n from pooled-unfolded matrices.
std::vector<double> power_spectrum_mc(ReferenceKind kind, int n, int realizations = 100, unsigned long long seed = 7);

}  // namespace rmtlab::observables
