#include "rmtlab.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <map>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "billiards/billiards.hpp"
#include "common/error.hpp"
#include "common/parallel.hpp"
#include "common/version.hpp"
#include "ensembles/ensembles.hpp"
#include "inference/inference.hpp"
#include "io/io.hpp"
#include "observables/observables.hpp"
#include "rp/rp_analytics.hpp"
#include "scattering/scattering.hpp"
#include "unfolding/unfolding.hpp"

using nlohmann::json;
namespace rl = rmtlab;
namespace ens = rmtlab::ensembles;
namespace obs = rmtlab::observables;
namespace unf = rmtlab::unfolding;
namespace sc = rmtlab::scattering;
namespace inf = rmtlab::inference;

struct rmt_spectra {
  std::vector<unf::RawSpectrum> raws;
  std::vector<std::map<std::string, std::string>> meta;
};

struct rmt_unfolded {
  std::vector<unf::UnfoldedSpectrum> spectra;
  std::vector<std::string> warnings;
};

struct rmt_curve {
  obs::ObservableCurve c;
};

struct rmt_fit {
  inf::FitResult f;
  std::string json;
};

struct rmt_scatter {
  sc::Bundle b;
  bool measured = false;
  std::string json;
};

struct rmt_xi_table {
  inf::XiTable t;
  std::string json;
};

struct rmt_tau_table {
  inf::TauTable t;
};

struct rmt_manifest {
  explicit rmt_manifest(std::string cmd) : m(std::move(cmd)) {}
  rl::io::Manifest m;
};

namespace {

thread_local std::string g_error;

template <class F>
rmt_status guard(F&& f) {
  try {
    f();
    g_error.clear();
    return RMT_OK;
  } catch (const rl::Error& e) {
    g_error = e.what();
    return static_cast<rmt_status>(e.code());
  } catch (const json::exception& e) {
    g_error = std::string("json: ") + e.what();
    return RMT_ERR_PARSE;
  } catch (const std::bad_alloc&) {
    g_error = "out of memory";
    return RMT_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_error = e.what();
    return RMT_ERR_INTERNAL;
  } catch (...) {
    g_error = "unknown exception";
    return RMT_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  rl::require(p != nullptr, rl::ErrorCode::InvalidArgument, std::string(what) + ": null argument");
}

std::vector<double> grid_or(const double* grid, std::size_t n, std::vector<double> fallback) {
  if (grid && n) return std::vector<double>(grid, grid + n);
  return fallback;
}

std::vector<double> arange(double lo, double hi, double step) {
  std::vector<double> g;
  for (int i = 0;; ++i) {
    double x = lo + step * i;
    if (x > hi + 1e-9 * step) break;
    g.push_back(x);
  }
  return g;
}

std::vector<std::string> split_lines(const char* header) {
  std::vector<std::string> out;
  if (!header) return out;
  std::stringstream ss(header);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

ens::EnsembleSpec to_spec(const rmt_ensemble_spec* s) {
  need(s, "ensemble spec");
  need(s->model, "ensemble model");
  ens::EnsembleSpec e;
  e.kind = ens::parse_kind(s->model);
  e.dim = s->dim;
  e.lambda = s->lambda;
  e.xi = s->xi;
  e.master_seed = s->seed;
  e.realizations = s->realizations;
  e.validate();
  return e;
}

sc::ScatteringConfig to_config(const rmt_scatter_config* c) {
  need(c, "scatter config");
  sc::ScatteringConfig s;
  s.dim = c->dim;
  s.fictitious = c->fictitious;
  s.target_T = {c->T_a, c->T_b};
  s.tau_abs = c->tau_abs;
  s.n_freq = c->n_freq;
  s.window_spacings = c->window_spacings;
  s.validate();
  return s;
}

sc::CalibrationOptions to_calibration(const rmt_scatter_config* c) {
  sc::CalibrationOptions o;
  o.realizations = c->calibration_realizations;
  o.seed = rl::rng::mix64(c->seed ^ 0xC0FFEEULL);
  return o;
}

json fit_json(const inf::FitResult& f) {
  json j;
  j["parameter"] = f.parameter;
  j["estimate"] = f.estimate;
  j["search_interval"] = {f.lo, f.hi};
  j["objective"] = f.objective;
  j["curve_used"] = f.curve_used;
  j["settings"] = f.settings;
  j["warnings"] = f.warnings;
  j["bound"] = f.bound;
  j["local_minima"] = f.local_minima;
  j["trace"] = f.trace;
  return j;
}

rmt_fit* make_fit(inf::FitResult f) {
  auto* out = new rmt_fit{std::move(f), {}};
  out->json = fit_json(out->f).dump(2);
  return out;
}

std::string scatter_json(const rmt_scatter& s) {
  json j;
  j["measured"] = s.measured;
  j["T_a"] = s.b.T_a;
  j["T_b"] = s.b.T_b;
  j["c_cross"] = s.b.c_cross.value;
  j["c_cross_stderr"] = s.b.c_cross.stderr_;
  j["delta_mean"] = s.b.delta_mean;
  if (s.b.has_amplitude) {
    j["rayleigh_sigma"] = s.b.amplitude_ab.rayleigh_sigma;
    j["rayleigh_sup_distance"] = s.b.amplitude_ab.sup_distance;
  }
  if (!s.measured) {
    j["couplings"] = s.b.calibration.v;
    j["calibrated_T"] = s.b.calibration.T_antenna;
    j["calibrated_T_fictitious"] = s.b.calibration.T_fictitious;
    j["calibration_iterations"] = s.b.calibration.iterations;
  }
  j["series"] = s.b.series.s_ab.size();
  j["warnings"] = s.b.warnings;
  return j.dump(2);
}

json xi_json(const inf::XiTable& t) {
  return json{{"T_a", t.T_a},
              {"T_b", t.T_b},
              {"tau_abs", t.tau_abs},
              {"xi", t.xi},
              {"c_cross_raw", t.c_cross_raw},
              {"c_cross", t.c_cross},
              {"stderr", t.stderr_},
              {"couplings", t.couplings},
              {"realizations", t.realizations},
              {"dim", t.dim}};
}

json read_json(const char* path) {
  need(path, "path");
  std::ifstream in(path);
  rl::require(static_cast<bool>(in), rl::ErrorCode::Io, std::string("cannot open '") + path + "'");
  return json::parse(in);
}

}  // namespace

extern "C" {

// ------------------------------------------------------------ general

RMT_API const char* rmt_version(void) { return rl::kVersion; }

RMT_API const char* rmt_status_string(rmt_status s) {
  switch (s) {
    case RMT_OK: return "ok";
    case RMT_ERR_INVALID_ARGUMENT: return "invalid argument";
    case RMT_ERR_INSUFFICIENT_DATA: return "insufficient data";
    case RMT_ERR_PARSE: return "parse error";
    case RMT_ERR_NUMERIC: return "numeric failure";
    case RMT_ERR_DEGENERATE: return "degenerate input";
    case RMT_ERR_CALIBRATION: return "calibration failure";
    case RMT_ERR_OUT_OF_RANGE: return "out of range";
    case RMT_ERR_NOT_AVAILABLE: return "not available";
    case RMT_ERR_IO: return "i/o error";
    case RMT_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

RMT_API const char* rmt_last_error(void) { return g_error.c_str(); }

RMT_API int rmt_exit_code(rmt_status s) {
  switch (s) {
    case RMT_OK: return 0;
    case RMT_ERR_INVALID_ARGUMENT: return 2;
    case RMT_ERR_INSUFFICIENT_DATA:
    case RMT_ERR_PARSE:
    case RMT_ERR_DEGENERATE:
    case RMT_ERR_OUT_OF_RANGE:
    case RMT_ERR_NOT_AVAILABLE:
    case RMT_ERR_IO: return 3;
    default: return 4;
  }
}

RMT_API void rmt_set_threads(unsigned n) { rl::thread_override().store(n); }

// ------------------------------------------------------------ spectra

RMT_API rmt_status rmt_spectra_create(rmt_spectra** out) {
  return guard([&] {
    need(out, "rmt_spectra_create");
    *out = new rmt_spectra();
  });
}

RMT_API void rmt_spectra_free(rmt_spectra* s) { delete s; }

RMT_API rmt_status rmt_spectra_add(rmt_spectra* s, const double* levels, size_t n, const char* label) {
  return guard([&] {
    need(s, "rmt_spectra_add");
    rl::require(levels || n == 0, rl::ErrorCode::InvalidArgument, "rmt_spectra_add: null levels");
    unf::RawSpectrum r;
    r.levels.assign(levels, levels + n);
    r.source = unf::Source::Measured;
    r.label = label ? label : "";
    s->raws.push_back(std::move(r));
    s->meta.emplace_back();
  });
}

RMT_API size_t rmt_spectra_count(const rmt_spectra* s) { return s ? s->raws.size() : 0; }

RMT_API rmt_status rmt_spectra_get(const rmt_spectra* s, size_t i, const double** levels, size_t* n) {
  return guard([&] {
    need(s, "rmt_spectra_get");
    need(levels, "rmt_spectra_get");
    need(n, "rmt_spectra_get");
    rl::require(i < s->raws.size(), rl::ErrorCode::OutOfRange, "rmt_spectra_get: index out of range");
    *levels = s->raws[i].levels.data();
    *n = s->raws[i].levels.size();
  });
}

RMT_API const char* rmt_spectra_meta(const rmt_spectra* s, size_t i, const char* key) {
  if (!s || !key || i >= s->meta.size()) return nullptr;
  auto it = s->meta[i].find(key);
  return it == s->meta[i].end() ? nullptr : it->second.c_str();
}

RMT_API rmt_status rmt_spectra_read(rmt_spectra* s, const char* path) {
  return guard([&] {
    need(s, "rmt_spectra_read");
    need(path, "rmt_spectra_read");
    unf::RawSpectrum r = rl::io::read_levels(path);
    auto meta = rl::io::read_header(path);
    s->raws.push_back(std::move(r));
    s->meta.push_back(std::move(meta));
  });
}

RMT_API rmt_status rmt_spectra_split_degeneracies(rmt_spectra* s) {
  return guard([&] {
    need(s, "rmt_spectra_split_degeneracies");
    for (auto& r : s->raws) r = unf::prepare(r);
  });
}

RMT_API rmt_status rmt_spectra_write(const rmt_spectra* s, size_t i, const char* path, const char* header) {
  return guard([&] {
    need(s, "rmt_spectra_write");
    need(path, "rmt_spectra_write");
    rl::require(i < s->raws.size(), rl::ErrorCode::OutOfRange, "rmt_spectra_write: index out of range");
    rl::io::write_levels(path, s->raws[i].levels, split_lines(header));
  });
}

RMT_API void rmt_ensemble_spec_default(rmt_ensemble_spec* spec) {
  if (!spec) return;
  spec->model = "gue";
  spec->dim = 400;
  spec->lambda = 0.0;
  spec->xi = 0.0;
  spec->seed = 0;
  spec->realizations = 1;
}

RMT_API rmt_status rmt_ensemble_validate(const rmt_ensemble_spec* spec) {
  return guard([&] { to_spec(spec); });
}

RMT_API rmt_status rmt_generate(const rmt_ensemble_spec* spec, rmt_spectra** out) {
  return guard([&] {
    need(out, "rmt_generate");
    ens::EnsembleSpec e = to_spec(spec);
    auto levels = ens::sample_spectra(e);
    auto* s = new rmt_spectra();
    for (std::size_t i = 0; i < levels.size(); ++i) {
      s->raws.push_back({std::move(levels[i]), unf::Source::Matrix, std::string(spec->model) + "#" + std::to_string(i)});
      s->meta.emplace_back();
    }
    *out = s;
  });
}

RMT_API rmt_status rmt_sample_matrix(const rmt_ensemble_spec* spec, uint64_t index, double* re, double* im) {
  return guard([&] {
    need(re, "rmt_sample_matrix");
    need(im, "rmt_sample_matrix");
    ens::EnsembleSpec e = to_spec(spec);
    ens::HermitianMatrix h = ens::sample_matrix(e, index);
    const int n = h.dim();
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        re[i + static_cast<std::size_t>(j) * n] = h.re()(i, j);
        im[i + static_cast<std::size_t>(j) * n] = h.is_real() ? 0.0 : h.im()(i, j);
      }
  });
}

RMT_API rmt_status rmt_circle_levels(double radius_m, double f_max_ghz, rmt_spectra** out) {
  return guard([&] {
    need(out, "rmt_circle_levels");
    auto g = rl::billiards::BilliardGeometry::circle(radius_m);
    auto* s = new rmt_spectra();
    s->raws.push_back({rl::billiards::circle_eigenfrequencies(g, f_max_ghz), unf::Source::Synthetic, "circle"});
    s->meta.push_back({{"geometry", "circle"}, {"radius_m", rl::io::format_double(radius_m)}});
    *out = s;
  });
}

// ---------------------------------------------------------- unfolding

RMT_API rmt_status rmt_unfold(const rmt_spectra* s, rmt_unfold_method method, double radius_m,
                              double central_fraction, rmt_unfolded** out) {
  return guard([&] {
    need(s, "rmt_unfold");
    need(out, "rmt_unfold");
    rl::require(!s->raws.empty(), rl::ErrorCode::InsufficientData, "rmt_unfold: no spectra");
    rl::require(central_fraction > 0.0 && central_fraction <= 1.0, rl::ErrorCode::InvalidArgument,
                "rmt_unfold: central fraction must lie in (0, 1]");
    auto u = std::make_unique<rmt_unfolded>();
    if (method == RMT_UNFOLD_ENSEMBLE) {
      u->spectra = unf::unfold_ensemble(s->raws);
    } else {
      for (const auto& raw0 : s->raws) {
        unf::RawSpectrum raw = unf::prepare(raw0);
        if (central_fraction < 1.0) raw = unf::retain_central(raw, central_fraction);
        switch (method) {
          case RMT_UNFOLD_NONE: {
            unf::UnfoldedSpectrum x;
            x.epsilons = raw.levels;
            x.method = unf::Method::Analytic;
            u->spectra.push_back(std::move(x));
            break;
          }
          case RMT_UNFOLD_WEYL:
            u->spectra.push_back(unf::unfold_weyl(raw, rl::billiards::BilliardGeometry::circle(radius_m)));
            break;
          case RMT_UNFOLD_POLY2: u->spectra.push_back(unf::unfold_polynomial(raw, 2)); break;
          case RMT_UNFOLD_POLY3: u->spectra.push_back(unf::unfold_polynomial(raw, 3)); break;
          default: rl::fail(rl::ErrorCode::InvalidArgument, "rmt_unfold: unknown method");
        }
      }
    }
    for (const auto& x : u->spectra)
      for (const auto& w : x.warnings) u->warnings.push_back(w);
    *out = u.release();
  });
}

RMT_API void rmt_unfolded_free(rmt_unfolded* u) { delete u; }
RMT_API size_t rmt_unfolded_count(const rmt_unfolded* u) { return u ? u->spectra.size() : 0; }

RMT_API rmt_status rmt_unfolded_get(const rmt_unfolded* u, size_t i, const double** eps, size_t* n) {
  return guard([&] {
    need(u, "rmt_unfolded_get");
    need(eps, "rmt_unfolded_get");
    need(n, "rmt_unfolded_get");
    rl::require(i < u->spectra.size(), rl::ErrorCode::OutOfRange, "rmt_unfolded_get: index out of range");
    *eps = u->spectra[i].epsilons.data();
    *n = u->spectra[i].epsilons.size();
  });
}

RMT_API size_t rmt_unfolded_warning_count(const rmt_unfolded* u) { return u ? u->warnings.size() : 0; }
RMT_API const char* rmt_unfolded_warning(const rmt_unfolded* u, size_t i) {
  return u && i < u->warnings.size() ? u->warnings[i].c_str() : nullptr;
}

// ------------------------------------------------------------- curves

RMT_API rmt_status rmt_observable(const rmt_unfolded* u, const char* name, const double* grid, size_t n,
                                  rmt_curve** out) {
  return guard([&] {
    need(u, "rmt_observable");
    need(name, "rmt_observable");
    need(out, "rmt_observable");
    const obs::Observable o = obs::parse_observable(name);
    auto c = std::make_unique<rmt_curve>();
    std::vector<std::vector<double>> sets;
    for (const auto& x : u->spectra) sets.push_back(x.epsilons);
    std::size_t shortest = SIZE_MAX;
    for (const auto& x : u->spectra) shortest = std::min(shortest, x.epsilons.size());
    switch (o) {
      case obs::Observable::NNSD: c->c = obs::nnsd(u->spectra); break;
      case obs::Observable::CumulativeNNSD: c->c = obs::cumulative_nnsd(u->spectra); break;
      case obs::Observable::RatioDist: c->c = obs::ratio_distribution(sets); break;
      case obs::Observable::CumulativeRatioDist: c->c = obs::cumulative_ratio_distribution(sets); break;
      case obs::Observable::NumberVariance: {
        double lmax = std::min(8.0, std::floor(4.0 * (shortest / 10.0)) / 4.0);
        c->c = obs::number_variance(u->spectra, grid_or(grid, n, arange(0.25, std::max(0.25, lmax), 0.25)));
        break;
      }
      case obs::Observable::Y2: c->c = obs::estimate_y2(u->spectra, grid_or(grid, n, arange(0.05, 5.0, 0.05))); break;
      case obs::Observable::FormFactor:
        c->c = obs::form_factor(u->spectra, grid_or(grid, n, arange(0.25, 9.0, 0.25)));
        break;
      case obs::Observable::PowerSpectrum: c->c = obs::power_spectrum(u->spectra); break;
      default:
        rl::fail(rl::ErrorCode::InvalidArgument, std::string("rmt_observable: '") + name +
                                                     "' is not a level-statistics observable");
    }
    *out = c.release();
  });
}

RMT_API rmt_status rmt_length_spectrum(const rmt_spectra* s, size_t i, double radius_m, const double* grid_m,
                                       size_t n, rmt_curve** out) {
  return guard([&] {
    need(s, "rmt_length_spectrum");
    need(out, "rmt_length_spectrum");
    rl::require(i < s->raws.size(), rl::ErrorCode::OutOfRange, "rmt_length_spectrum: index out of range");
    auto g = rl::billiards::BilliardGeometry::circle(radius_m);
    auto c = std::make_unique<rmt_curve>();
    c->c = obs::length_spectrum(
        s->raws[i].levels, [&](double f) { return rl::billiards::weyl_density(g, f); },
        grid_or(grid_m, n, arange(0.0, 3.0, 0.001)));
    *out = c.release();
  });
}

RMT_API rmt_status rmt_reference(const char* kind, const char* name, const double* grid, size_t n, rmt_curve** out) {
  return guard([&] {
    need(kind, "rmt_reference");
    need(name, "rmt_reference");
    need(out, "rmt_reference");
    rl::require(grid && n, rl::ErrorCode::InvalidArgument, "rmt_reference: grid required");
    auto c = std::make_unique<rmt_curve>();
    c->c = obs::reference_statistics(obs::parse_reference(kind), obs::parse_observable(name),
                                     std::vector<double>(grid, grid + n));
    *out = c.release();
  });
}

RMT_API rmt_status rmt_rp_curve(const char* name, double lambda, int published, int windowed, const double* grid,
                                size_t n, rmt_curve** out) {
  return guard([&] {
    need(name, "rmt_rp_curve");
    need(out, "rmt_rp_curve");
    rl::require(grid && n, rl::ErrorCode::InvalidArgument, "rmt_rp_curve: grid required");
    const std::string nm = name;
    obs::Observable o = obs::parse_observable(nm);
    rl::rp::Curve kind;
    switch (o) {
      case obs::Observable::FormFactor: kind = rl::rp::Curve::FormFactor; break;
      case obs::Observable::Y2: kind = rl::rp::Curve::ClusterFunction; break;
      case obs::Observable::NumberVariance: kind = rl::rp::Curve::NumberVariance; break;
      case obs::Observable::NNSD: kind = rl::rp::Curve::SpacingDensity; break;
      case obs::Observable::CumulativeNNSD: kind = rl::rp::Curve::SpacingCdf; break;
      default: rl::fail(rl::ErrorCode::InvalidArgument, "rmt_rp_curve: no analytic curve for '" + nm + "'");
    }
    rl::rp::QuantileWindow w;
    auto conv = published ? rl::rp::ScaleConvention::Published : rl::rp::ScaleConvention::Calibrated;
    auto c = std::make_unique<rmt_curve>();
    c->c.observable = o;
    c->c.grid.assign(grid, grid + n);
    c->c.values = rl::rp::curve(kind, c->c.grid, lambda, conv, windowed ? &w : nullptr);
    c->c.meta["model"] = "rp";
    c->c.meta["lambda"] = rl::io::format_double(lambda);
    c->c.meta["convention"] = published ? "published" : "calibrated";
    c->c.meta["window"] = windowed ? "0.2-0.8" : "none";
    *out = c.release();
  });
}

RMT_API rmt_status rmt_mean_ratio(const rmt_spectra* s, double* out) {
  return guard([&] {
    need(s, "rmt_mean_ratio");
    need(out, "rmt_mean_ratio");
    std::vector<std::vector<double>> sets;
    for (const auto& r : s->raws) sets.push_back(r.levels);
    *out = obs::mean_ratio_tilde(sets);
  });
}

RMT_API void rmt_curve_free(rmt_curve* c) { delete c; }
RMT_API const char* rmt_curve_name(const rmt_curve* c) { return c ? obs::observable_name(c->c.observable) : nullptr; }
RMT_API size_t rmt_curve_size(const rmt_curve* c) { return c ? c->c.grid.size() : 0; }
RMT_API const double* rmt_curve_grid(const rmt_curve* c) { return c ? c->c.grid.data() : nullptr; }
RMT_API const double* rmt_curve_values(const rmt_curve* c) { return c ? c->c.values.data() : nullptr; }
RMT_API const double* rmt_curve_stderr(const rmt_curve* c) {
  return c && c->c.has_stderr() ? c->c.stderr_.data() : nullptr;
}
RMT_API const char* rmt_curve_meta(const rmt_curve* c, const char* key) {
  if (!c || !key) return nullptr;
  auto it = c->c.meta.find(key);
  return it == c->c.meta.end() ? nullptr : it->second.c_str();
}
RMT_API size_t rmt_curve_warning_count(const rmt_curve* c) { return c ? c->c.warnings.size() : 0; }
RMT_API const char* rmt_curve_warning(const rmt_curve* c, size_t i) {
  return c && i < c->c.warnings.size() ? c->c.warnings[i].c_str() : nullptr;
}

RMT_API rmt_status rmt_curve_write(const rmt_curve* c, const char* path, const char* header) {
  return guard([&] {
    need(c, "rmt_curve_write");
    need(path, "rmt_curve_write");
    rl::io::write_curve(path, c->c, split_lines(header));
  });
}

RMT_API rmt_status rmt_curve_read(const char* path, rmt_curve** out) {
  return guard([&] {
    need(path, "rmt_curve_read");
    need(out, "rmt_curve_read");
    auto c = std::make_unique<rmt_curve>();
    c->c = rl::io::read_curve(path);
    *out = c.release();
  });
}

RMT_API rmt_status rmt_curve_slope(const rmt_curve* c, double lo, double hi, double* slope, double* stderr_out) {
  return guard([&] {
    need(c, "rmt_curve_slope");
    need(slope, "rmt_curve_slope");
    obs::Slope s = obs::loglog_slope(c->c, lo, hi);
    *slope = s.slope;
    if (stderr_out) *stderr_out = s.stderr_;
  });
}

RMT_API size_t rmt_curve_peaks(const rmt_curve* c, double min_position, double* positions, size_t cap) {
  if (!c) return 0;
  try {
    auto peaks = obs::local_maxima(c->c, min_position);
    for (std::size_t i = 0; i < peaks.size() && i < cap && positions; ++i) positions[i] = peaks[i].position;
    return peaks.size();
  } catch (...) {
    return 0;
  }
}

// --------------------------------------------------------------- fits

RMT_API void rmt_fit_free(rmt_fit* f) { delete f; }
RMT_API double rmt_fit_estimate(const rmt_fit* f) { return f ? f->f.estimate : std::nan(""); }
RMT_API double rmt_fit_objective(const rmt_fit* f) { return f ? f->f.objective : std::nan(""); }
RMT_API const char* rmt_fit_bound(const rmt_fit* f) { return f ? f->f.bound.c_str() : nullptr; }
RMT_API const char* rmt_fit_json(const rmt_fit* f) { return f ? f->json.c_str() : nullptr; }

RMT_API rmt_status rmt_fit_lambda(const rmt_curve* sigma2, double L_max, int windowed, rmt_fit** out) {
  return guard([&] {
    need(sigma2, "rmt_fit_lambda");
    need(out, "rmt_fit_lambda");
    inf::LambdaFitOptions opt;
    opt.L_max = L_max;
    if (!windowed) opt.window.reset();
    *out = make_fit(inf::fit_lambda_sigma2(sigma2->c, opt));
  });
}

// --------------------------------------------------------- scattering

RMT_API void rmt_scatter_config_default(rmt_scatter_config* cfg) {
  if (!cfg) return;
  sc::ScatteringConfig d;
  cfg->dim = d.dim;
  cfg->fictitious = d.fictitious;
  cfg->T_a = d.target_T[0];
  cfg->T_b = d.target_T[1];
  cfg->tau_abs = d.tau_abs;
  cfg->n_freq = d.n_freq;
  cfg->window_spacings = d.window_spacings;
  cfg->realizations = 200;
  cfg->seed = 1;
  cfg->secular_window = 0;
  cfg->calibration_realizations = sc::CalibrationOptions{}.realizations;
}

RMT_API rmt_status rmt_scatter_run(const rmt_scatter_config* cfg, const rmt_ensemble_spec* source, rmt_scatter** out) {
  return guard([&] {
    need(out, "rmt_scatter_run");
    sc::ScatteringConfig c = to_config(cfg);
    ens::EnsembleSpec e = to_spec(source);
    e.dim = c.dim;
    e.master_seed = cfg->seed;
    e.realizations = cfg->realizations;
    sc::BundleOptions opt;
    opt.calibration = to_calibration(cfg);
    opt.secular_window = cfg->secular_window;
    opt.keep_series = true;
    auto s = std::make_unique<rmt_scatter>();
    s->b = sc::run_bundle(c, e, opt);
    s->json = scatter_json(*s);
    *out = s.release();
  });
}

RMT_API rmt_status rmt_scatter_measured(const char* path, double mean_spacing_ghz, int secular_window,
                                        rmt_scatter** out) {
  return guard([&] {
    need(path, "rmt_scatter_measured");
    need(out, "rmt_scatter_measured");
    rl::require(mean_spacing_ghz > 0.0, rl::ErrorCode::InvalidArgument, "rmt_scatter_measured: spacing must be > 0");
    rl::io::SMatrixData d = rl::io::read_smatrix(path);
    sc::SeriesSet set;
    for (double f : d.freq_ghz) set.freqs.push_back((f - d.freq_ghz.front()) / mean_spacing_ghz);
    set.s_aa = {d.s_aa};
    set.s_ab = {d.s_ab};
    set.s_ba = {d.s_ba};
    set.s_bb = {d.s_bb};
    sc::BundleOptions opt;
    opt.secular_window = secular_window;
    opt.keep_series = true;
    auto s = std::make_unique<rmt_scatter>();
    s->measured = true;
    s->b = sc::analyze(set, opt);
    s->b.series.freqs = d.freq_ghz;
    s->json = scatter_json(*s);
    *out = s.release();
  });
}

RMT_API void rmt_scatter_free(rmt_scatter* s) { delete s; }

RMT_API rmt_status rmt_scatter_value(const rmt_scatter* s, const char* key, double* out) {
  return guard([&] {
    need(s, "rmt_scatter_value");
    need(key, "rmt_scatter_value");
    need(out, "rmt_scatter_value");
    const std::string k = key;
    if (k == "T_a") *out = s->b.T_a;
    else if (k == "T_b") *out = s->b.T_b;
    else if (k == "c_cross") *out = s->b.c_cross.value;
    else if (k == "c_cross_stderr") *out = s->b.c_cross.stderr_;
    else if (k == "delta") *out = s->b.delta_mean;
    else if (k == "rayleigh_sup") {
      rl::require(s->b.has_amplitude, rl::ErrorCode::NotAvailable, "rmt_scatter_value: no amplitude distribution");
      *out = s->b.amplitude_ab.sup_distance;
    } else rl::fail(rl::ErrorCode::InvalidArgument, "rmt_scatter_value: unknown key '" + k + "'");
  });
}

RMT_API rmt_status rmt_scatter_curve(const rmt_scatter* s, const char* key, rmt_curve** out) {
  return guard([&] {
    need(s, "rmt_scatter_curve");
    need(key, "rmt_scatter_curve");
    need(out, "rmt_scatter_curve");
    const std::string k = key;
    auto c = std::make_unique<rmt_curve>();
    if (k == "c_ab") c->c = s->b.c_ab;
    else if (k == "c_ab_normalized") c->c = s->b.c_ab_normalized;
    else if (k == "amplitude") {
      rl::require(s->b.has_amplitude, rl::ErrorCode::NotAvailable, "rmt_scatter_curve: no amplitude distribution");
      c->c = s->b.amplitude_ab.histogram;
    } else rl::fail(rl::ErrorCode::InvalidArgument, "rmt_scatter_curve: unknown key '" + k + "'");
    *out = c.release();
  });
}

RMT_API size_t rmt_scatter_series_count(const rmt_scatter* s) { return s ? s->b.series.s_ab.size() : 0; }

RMT_API rmt_status rmt_scatter_write_series(const rmt_scatter* s, size_t i, const char* path) {
  return guard([&] {
    need(s, "rmt_scatter_write_series");
    need(path, "rmt_scatter_write_series");
    const auto& ser = s->b.series;
    rl::require(i < ser.s_ab.size(), rl::ErrorCode::OutOfRange, "rmt_scatter_write_series: index out of range");
    rl::io::SMatrixData d{ser.freqs, ser.s_aa[i], ser.s_ab[i], ser.s_ba[i], ser.s_bb[i]};
    rl::io::write_smatrix(path, d,
                          {s->measured ? "frequency axis: GHz" : "frequency axis: mean level spacings"});
  });
}

RMT_API const char* rmt_scatter_json(const rmt_scatter* s) { return s ? s->json.c_str() : nullptr; }

RMT_API rmt_status rmt_smatrix_check(const rmt_ensemble_spec* source, uint64_t index, const double* v,
                                     size_t channels, double f, double* reciprocity, double* unitarity) {
  return guard([&] {
    need(v, "rmt_smatrix_check");
    need(reciprocity, "rmt_smatrix_check");
    need(unitarity, "rmt_smatrix_check");
    ens::EnsembleSpec e = to_spec(source);
    ens::HermitianMatrix h = ens::sample_matrix(e, index);
    rl::rng::Stream cs(e.master_seed, index, rl::rng::Purpose::Coupling);
    Eigen::MatrixXd w = sc::build_coupling(e.dim, static_cast<int>(channels), std::vector<double>(v, v + channels), cs);
    Eigen::MatrixXcd s = sc::s_matrix(h, w, f);
    *reciprocity = (s - s.transpose()).cwiseAbs().maxCoeff();
    *unitarity = (s.adjoint() * s - Eigen::MatrixXcd::Identity(s.rows(), s.cols())).cwiseAbs().maxCoeff();
  });
}

RMT_API rmt_status rmt_xi_table_build(const rmt_scatter_config* cfg, const double* xi_grid, size_t n,
                                      rmt_xi_table** out) {
  return guard([&] {
    need(out, "rmt_xi_table_build");
    inf::XiTableConfig x;
    x.scattering = to_config(cfg);
    if (xi_grid && n) x.xi_grid.assign(xi_grid, xi_grid + n);
    x.realizations = cfg->realizations;
    x.seed = cfg->seed;
    x.calibration = to_calibration(cfg);
    x.secular_window = cfg->secular_window;
    auto t = std::make_unique<rmt_xi_table>();
    t->t = inf::build_xi_table(x);
    t->json = xi_json(t->t).dump(2);
    *out = t.release();
  });
}

RMT_API rmt_status rmt_xi_table_save(const rmt_xi_table* t, const char* path) {
  return guard([&] {
    need(t, "rmt_xi_table_save");
    need(path, "rmt_xi_table_save");
    rl::io::write_atomic(path, t->json + "\n");
  });
}

RMT_API rmt_status rmt_xi_table_load(const char* path, rmt_xi_table** out) {
  return guard([&] {
    need(out, "rmt_xi_table_load");
    json j = read_json(path);
    auto t = std::make_unique<rmt_xi_table>();
    t->t.T_a = j.at("T_a");
    t->t.T_b = j.at("T_b");
    t->t.tau_abs = j.at("tau_abs");
    t->t.xi = j.at("xi").get<std::vector<double>>();
    t->t.c_cross_raw = j.at("c_cross_raw").get<std::vector<double>>();
    t->t.c_cross = j.at("c_cross").get<std::vector<double>>();
    t->t.stderr_ = j.at("stderr").get<std::vector<double>>();
    t->t.couplings = j.at("couplings").get<std::vector<double>>();
    t->t.realizations = j.at("realizations");
    t->t.dim = j.at("dim");
    rl::require(t->t.xi.size() == t->t.c_cross.size() && !t->t.xi.empty(), rl::ErrorCode::Parse,
                std::string("'") + path + "': inconsistent xi table");
    t->json = xi_json(t->t).dump(2);
    *out = t.release();
  });
}

RMT_API void rmt_xi_table_free(rmt_xi_table* t) { delete t; }
RMT_API const char* rmt_xi_table_json(const rmt_xi_table* t) { return t ? t->json.c_str() : nullptr; }

RMT_API rmt_status rmt_fit_xi(double c_cross, double T_a, double T_b, double tau_abs,
                              const rmt_xi_table* const* tables, size_t n_tables, rmt_fit** out) {
  return guard([&] {
    need(out, "rmt_fit_xi");
    rl::require(tables || n_tables == 0, rl::ErrorCode::InvalidArgument, "rmt_fit_xi: null table list");
    std::vector<inf::XiTable> ts;
    for (std::size_t i = 0; i < n_tables; ++i) {
      need(tables[i], "rmt_fit_xi");
      ts.push_back(tables[i]->t);
    }
    if (ts.empty() && c_cross >= 1.0 - 1e-6 && c_cross <= 1.0 + 1e-9) {
      inf::FitResult f;
      f.parameter = "xi";
      f.estimate = 0.0;
      f.curve_used = "c_cross";
      f.settings["table"] = "none (reciprocity endpoint)";
      *out = make_fit(f);
      return;
    }
    *out = make_fit(inf::estimate_xi_crosscorr(c_cross, T_a, T_b, tau_abs, ts));
  });
}

RMT_API rmt_status rmt_tau_table_build(const rmt_scatter_config* cfg, const rmt_ensemble_spec* source,
                                       const double* tau_grid, size_t n, rmt_tau_table** out) {
  return guard([&] {
    need(out, "rmt_tau_table_build");
    inf::TauTableConfig x;
    x.scattering = to_config(cfg);
    x.source = to_spec(source);
    if (tau_grid && n) x.tau_grid.assign(tau_grid, tau_grid + n);
    x.realizations = cfg->realizations;
    x.seed = cfg->seed;
    x.calibration = to_calibration(cfg);
    x.secular_window = cfg->secular_window;
    auto t = std::make_unique<rmt_tau_table>();
    t->t = inf::build_tau_table(x);
    *out = t.release();
  });
}

RMT_API rmt_status rmt_tau_table_save(const rmt_tau_table* t, const char* path) {
  return guard([&] {
    need(t, "rmt_tau_table_save");
    need(path, "rmt_tau_table_save");
    json j{{"tau", t->t.tau}, {"eps", t->t.eps}, {"curves", t->t.curves}, {"settings", t->t.settings}};
    rl::io::write_atomic(path, j.dump(2) + "\n");
  });
}

RMT_API rmt_status rmt_tau_table_load(const char* path, rmt_tau_table** out) {
  return guard([&] {
    need(out, "rmt_tau_table_load");
    json j = read_json(path);
    auto t = std::make_unique<rmt_tau_table>();
    t->t.tau = j.at("tau").get<std::vector<double>>();
    t->t.eps = j.at("eps").get<std::vector<double>>();
    t->t.curves = j.at("curves").get<std::vector<std::vector<double>>>();
    t->t.settings = j.at("settings").get<std::map<std::string, std::string>>();
    rl::require(t->t.curves.size() == t->t.tau.size(), rl::ErrorCode::Parse,
                std::string("'") + path + "': inconsistent tau table");
    for (const auto& c : t->t.curves)
      rl::require(c.size() == t->t.eps.size(), rl::ErrorCode::Parse,
                  std::string("'") + path + "': inconsistent tau table");
    *out = t.release();
  });
}

RMT_API void rmt_tau_table_free(rmt_tau_table* t) { delete t; }

RMT_API rmt_status rmt_fit_tau(const rmt_curve* normalized, const rmt_tau_table* t, rmt_fit** out) {
  return guard([&] {
    need(normalized, "rmt_fit_tau");
    need(t, "rmt_fit_tau");
    need(out, "rmt_fit_tau");
    *out = make_fit(inf::fit_tau_abs(normalized->c, t->t));
  });
}

// ----------------------------------------------------------- manifest

RMT_API rmt_status rmt_manifest_create(const char* command_line, rmt_manifest** out) {
  return guard([&] {
    need(out, "rmt_manifest_create");
    *out = new rmt_manifest(command_line ? command_line : "");
  });
}

RMT_API void rmt_manifest_free(rmt_manifest* m) { delete m; }

RMT_API rmt_status rmt_manifest_set_json(rmt_manifest* m, const char* key, const char* value) {
  return guard([&] {
    need(m, "rmt_manifest_set_json");
    need(key, "rmt_manifest_set_json");
    need(value, "rmt_manifest_set_json");
    m->m.set(key, json::parse(value));
  });
}

RMT_API rmt_status rmt_manifest_set_string(rmt_manifest* m, const char* key, const char* value) {
  return guard([&] {
    need(m, "rmt_manifest_set_string");
    need(key, "rmt_manifest_set_string");
    m->m.set(key, value ? value : "");
  });
}

RMT_API rmt_status rmt_manifest_set_number(rmt_manifest* m, const char* key, double value) {
  return guard([&] {
    need(m, "rmt_manifest_set_number");
    need(key, "rmt_manifest_set_number");
    m->m.set(key, value);
  });
}

RMT_API rmt_status rmt_manifest_add_input(rmt_manifest* m, const char* path) {
  return guard([&] {
    need(m, "rmt_manifest_add_input");
    need(path, "rmt_manifest_add_input");
    m->m.add_input(path);
  });
}

RMT_API rmt_status rmt_manifest_add_output(rmt_manifest* m, const char* path) {
  return guard([&] {
    need(m, "rmt_manifest_add_output");
    need(path, "rmt_manifest_add_output");
    m->m.add_output(path);
  });
}

RMT_API rmt_status rmt_manifest_write(rmt_manifest* m, const char* path) {
  return guard([&] {
    need(m, "rmt_manifest_write");
    need(path, "rmt_manifest_write");
    m->m.write(path);
  });
}

}  // extern "C"
