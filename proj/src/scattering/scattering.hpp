#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "ensembles/ensembles.hpp"
#include "observables/observables.hpp"

namespace rmtlab::scattering {

using cplx = std::complex<double>;

inline constexpr int kAntennas = 2;

struct ScatteringConfig {
  int dim = 400;
  int fictitious = 30;
  std::array<double, kAntennas> target_T{0.60, 0.68};
  double tau_abs = 1.6;
  // Explicit couplings for all 2 + fictitious channels; empty means
  // they are obtained from target_T and tau_abs by calibrate_coupling.
  std::vector<double> v;
  int n_freq = 1024;
  double window_spacings = 100.0;

  int channels() const { return kAntennas + fictitious; }
  double fictitious_T() const { return fictitious > 0 ? tau_abs / fictitious : 0.0; }
  void validate() const;
};

// Real n x M coupling matrix whose columns (channels) are mutually
// orthogonal with squared norms n * v_e^2.
Eigen::MatrixXd build_coupling(int n, int channels, const std::vector<double>& v, rng::Stream& stream);
// Orthonormal columns, scaled later by sqrt(n) v_e.
Eigen::MatrixXd orthonormal_channels(int n, int channels, rng::Stream& stream);

// S = 1 - 2 pi i W^T (f - H + i pi W W^T)^{-1} W by a dense LU solve.
Eigen::MatrixXcd s_matrix(const ensembles::HermitianMatrix& h, const Eigen::MatrixXd& w, cplx f);

// Internal Hamiltonian in spectral form with the coupling directions
// projected onto its eigenvectors. Energies are shifted and scaled so
// the central window of `window_spacings` levels has unit mean spacing.
class ResonanceSystem {
public:
  ResonanceSystem(const ensembles::HermitianMatrix& h, const Eigen::MatrixXd& q, double window_spacings);

  int dim() const { return static_cast<int>(energies_.size()); }
  int channels() const { return static_cast<int>(wt_re_.cols()); }
  const std::vector<double>& energies() const { return energies_; }
  double energy_unit() const { return unit_; }
  double energy_origin() const { return origin_; }

  // Khat(f) = Wt^H diag(1/(f - E)) Wt for unit-norm channels.
  Eigen::MatrixXcd khat(cplx f) const;
  // Packed upper triangles of Khat at real frequencies, one row per f.
  void khat_sweep(const std::vector<double>& freqs, Eigen::MatrixXd& re, Eigen::MatrixXd& im) const;
  bool is_real() const { return wt_im_.size() == 0; }

private:
  std::vector<double> energies_;
  double unit_ = 1.0;
  double origin_ = 0.0;
  Eigen::MatrixXd wt_re_;
  Eigen::MatrixXd wt_im_;
};

std::vector<std::pair<int, int>> packed_pairs(int channels);
Eigen::MatrixXcd unpack_khat(const Eigen::MatrixXd& re, const Eigen::MatrixXd& im, int row, int channels);

// S from Khat and channel amplitudes; returns the requested columns.
Eigen::MatrixXcd s_from_khat(const Eigen::MatrixXcd& khat, const std::vector<double>& v, int n,
                             const std::vector<int>& columns);

// Frequency grid in unfolded units, centred on the window.
std::vector<double> frequency_grid(const ScatteringConfig& cfg);

struct Calibration {
  std::vector<double> v;                  // all channels
  std::array<double, kAntennas> T_antenna{};  // achieved
  double T_fictitious = 0.0;
  int iterations = 0;
};

struct CalibrationOptions {
  int realizations = 40;
  int centres = 20;
  double smoothing = 3.0;  // Lorentzian half-width in mean spacings
  double tol = 2e-4;
  std::uint64_t seed = 0x5eed;
};

// Lorentzian-smoothed Khat samples of a calibration ensemble; one set
// can be solved for several (target_T, tau_abs) configurations.
class CalibrationSet {
public:
  CalibrationSet(const ScatteringConfig& cfg, const ensembles::EnsembleSpec& source, const CalibrationOptions& opt = {});
  // cfg must share dim, channel count and window with the constructor's.
  Calibration solve(const ScatteringConfig& cfg) const;
  // T_e = 1 - |<S_ee>|^2 at the given amplitudes, one entry per channel.
  std::vector<double> transmissions(const std::vector<double>& v) const;

private:
  int dim_;
  int channels_;
  double tol_;
  std::vector<Eigen::MatrixXcd> khat_;
};

// Matches T_e = 1 - |<S_ee>|^2 for the antennas and the mean over the
// fictitious channels to tau_abs / fictitious, channel by channel.
Calibration calibrate_coupling(const ScatteringConfig& cfg, const ensembles::EnsembleSpec& source,
                               const CalibrationOptions& opt = {});

struct SeriesSet {
  std::vector<double> freqs;
  // [realization][frequency]
  std::vector<std::vector<cplx>> s_aa, s_ab, s_ba, s_bb;
};

// Antenna S-matrix elements over the frequency grid for
// source.realizations independent draws of the Hamiltonian (dimension
// cfg.dim, seed source.master_seed) and of the coupling directions.
SeriesSet simulate(const ScatteringConfig& cfg, const ensembles::EnsembleSpec& source, const std::vector<double>& v);

// Khat sweeps of every realization held in memory, so the same draws
// can be re-evaluated at different couplings (common random numbers).
struct SweepCache {
  int dim = 0;
  int channels = 0;
  std::vector<double> freqs;
  std::vector<Eigen::MatrixXd> re, im;
};
SweepCache prepare_sweeps(const ScatteringConfig& cfg, const ensembles::EnsembleSpec& source);
SeriesSet simulate(const SweepCache& cache, const std::vector<double>& v);

// Fluctuating part: the mean over each window of `window` points is
// subtracted (window <= 0 uses the whole series).
std::vector<cplx> fluctuating(const std::vector<cplx>& s, int window = 0);

// T_e = 1 - |<S_ee>|^2 over all series.
double transmission(const std::vector<std::vector<cplx>>& see);

observables::ObservableCurve two_point_correlation(const std::vector<std::vector<cplx>>& s, double df,
                                                   const std::vector<double>& eps_grid, int window = 0);
// |C_ab(eps)| / C_ab(0), the normalized modulus used for absorption fits.
observables::ObservableCurve normalized_correlation(const std::vector<std::vector<cplx>>& s, double df,
                                                    const std::vector<double>& eps_grid, int window = 0);
double cross_correlation(const std::vector<std::vector<cplx>>& s_ab, const std::vector<std::vector<cplx>>& s_ba,
                         int window = 0);
struct Estimate {
  double value = 0.0;
  double stderr_ = 0.0;  // jackknife over series; 0 for a single series
};
Estimate cross_correlation_estimate(const std::vector<std::vector<cplx>>& s_ab,
                                    const std::vector<std::vector<cplx>>& s_ba, int window = 0);

struct DetailedBalance {
  std::vector<double> delta;      // pointwise, NaN where both amplitudes vanish
  std::vector<double> sliding;    // means over sliding windows
  double mean = 0.0;
  std::size_t excluded = 0;
};
DetailedBalance detailed_balance_delta(const std::vector<cplx>& s_ab, const std::vector<cplx>& s_ba,
                                       int window = 0);

struct AmplitudeDistribution {
  observables::ObservableCurve histogram;
  double rayleigh_sigma = 0.0;
  double sup_distance = 0.0;  // empirical CDF against the fitted Rayleigh law
};
AmplitudeDistribution amplitude_distribution(const std::vector<double>& amplitudes, double bin_width = 0.0);
std::vector<double> fluctuating_amplitudes(const std::vector<std::vector<cplx>>& s, int window = 0);

struct Bundle {
  Calibration calibration;
  double T_a = 0.0;
  double T_b = 0.0;
  observables::ObservableCurve c_ab;
  observables::ObservableCurve c_ab_normalized;
  Estimate c_cross;
  double delta_mean = 0.0;
  bool has_amplitude = false;
  AmplitudeDistribution amplitude_ab;
  std::vector<std::string> warnings;
  SeriesSet series;  // filled when BundleOptions::keep_series is set
};

struct BundleOptions {
  CalibrationOptions calibration;
  std::vector<double> eps_grid;  // empty: 0, 0.1, ..., 10
  double amplitude_bin = 0.0;
  int secular_window = 0;
  bool keep_series = false;
};

// Statistics of given series (simulated or measured); the frequency
// axis must be uniform and in mean-spacing units.
Bundle analyze(const SeriesSet& s, const BundleOptions& opt = {});

Bundle run_bundle(const ScatteringConfig& cfg, const ensembles::EnsembleSpec& source, const BundleOptions& opt = {});

}  // namespace rmtlab::scattering
