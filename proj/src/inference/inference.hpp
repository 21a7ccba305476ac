#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "observables/observables.hpp"
#include "rp/rp_analytics.hpp"
#include "scattering/scattering.hpp"

namespace rmtlab::inference {

struct FitResult {
  std::string parameter;
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double objective = 0.0;
  std::string curve_used;
  std::map<std::string, std::string> settings;
  std::vector<std::string> warnings;
  // "" for an interior estimate, ">=" or "<=" when it sits on a bound.
  std::string bound;
  std::vector<double> local_minima;
  // Best objective after each iteration.
  std::vector<double> trace;
};

// ------------------------------------------------------------- lambda

struct LambdaFitOptions {
  double L_max = 5.0;
  double lo = 0.0;
  double hi = 3.0;
  double tol = 1e-3;
  rp::ScaleConvention convention = rp::ScaleConvention::Calibrated;
  // Quantile window the data were taken from; the model is averaged
  // over the local couplings it contains. Unset for a fixed coupling.
  std::optional<rp::QuantileWindow> window = rp::QuantileWindow{};
};

double sigma2_model(double L, double lambda, const LambdaFitOptions& opt);

// Golden-section least squares of the model Sigma^2 against the curve
// on 0 < L <= L_max.
FitResult fit_lambda_sigma2(const observables::ObservableCurve& sigma2, const LambdaFitOptions& opt = {});

struct ScaleCalibration {
  double alpha_tilde_per_lambda = 0.0;
  double alpha_L_per_lambda = 0.0;
  double sigma2_rms = 0.0;
  double nnsd_sup = 0.0;
};

// Fits the two proportionality constants between lambda and the scales
// of the analytic curves to Monte-Carlo Sigma^2 and spacing data taken
// from the given window at one lambda.
ScaleCalibration calibrate_rp_scales(const observables::ObservableCurve& sigma2, const std::vector<double>& spacings,
                                     double lambda, const rp::QuantileWindow& window);

// ----------------------------------------------------------------- xi

struct XiTableConfig {
  scattering::ScatteringConfig scattering;
  std::vector<double> xi_grid;  // empty: 0, 0.02, ..., 1
  int realizations = 200;
  std::uint64_t seed = 0x7AB1E;
  scattering::CalibrationOptions calibration;
  int secular_window = 0;
};

struct XiTable {
  double T_a = 0.0;
  double T_b = 0.0;
  double tau_abs = 0.0;
  std::vector<double> xi;
  std::vector<double> c_cross_raw;
  std::vector<double> c_cross;  // monotone (non-increasing) projection
  std::vector<double> stderr_;
  std::vector<double> couplings;
  int realizations = 0;
  int dim = 0;

  bool covers(double T_a, double T_b, double tau_abs, double tol = 1e-6) const;
};

// C^cross(xi) of the GOE to GUE Hamiltonian; every cell reuses the same
// matrix and coupling draws.
XiTable build_xi_table(const XiTableConfig& cfg);

FitResult estimate_xi(double c_cross, const XiTable& table);
// Selects the table matching (T_a, T_b, tau_abs).
FitResult estimate_xi_crosscorr(double c_cross, double T_a, double T_b, double tau_abs,
                                const std::vector<XiTable>& tables);

// ------------------------------------------------------------ tau_abs

struct TauTableConfig {
  scattering::ScatteringConfig scattering;  // tau_abs ignored
  ensembles::EnsembleSpec source;           // interpolating Hamiltonian
  std::vector<double> tau_grid;             // empty: 0.25, 0.5, ..., 6
  std::vector<double> eps_grid;             // empty: 0, 0.25, ..., 10
  int realizations = 40;
  std::uint64_t seed = 0x7A0;
  scattering::CalibrationOptions calibration;
  int secular_window = 0;
};

struct TauTable {
  std::vector<double> tau;
  std::vector<double> eps;
  std::vector<std::vector<double>> curves;  // |C(eps)| / C(0) per tau
  std::map<std::string, std::string> settings;
};

TauTable build_tau_table(const TauTableConfig& cfg);

// Squared distance on the table's eps grid between the normalized
// correlation curve and each tabulated curve; grid minimum refined by a
// parabola through its neighbours.
FitResult fit_tau_abs(const observables::ObservableCurve& normalized, const TauTable& table);

}  // namespace rmtlab::inference
