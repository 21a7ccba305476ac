#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rmtlab.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Failure {
  rmt_status status;
  std::string message;
};

void check(rmt_status s) {
  if (s != RMT_OK) throw Failure{s, rmt_last_error()};
}

[[noreturn]] void usage(const std::string& msg) { throw Failure{RMT_ERR_INVALID_ARGUMENT, msg}; }

template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& o) noexcept : p(o.p) { o.p = nullptr; }
  ~Handle() { Free(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};

using Spectra = Handle<rmt_spectra, rmt_spectra_free>;
using Unfolded = Handle<rmt_unfolded, rmt_unfolded_free>;
using Curve = Handle<rmt_curve, rmt_curve_free>;
using Fit = Handle<rmt_fit, rmt_fit_free>;
using Scatter = Handle<rmt_scatter, rmt_scatter_free>;
using XiTable = Handle<rmt_xi_table, rmt_xi_table_free>;
using TauTable = Handle<rmt_tau_table, rmt_tau_table_free>;
using Manifest = Handle<rmt_manifest, rmt_manifest_free>;

std::string g_command_line;

Manifest open_manifest() {
  Manifest m;
  check(rmt_manifest_create(g_command_line.c_str(), m.out()));
  return m;
}

void set(Manifest& m, const std::string& key, const json& value) {
  check(rmt_manifest_set_json(m.get(), key.c_str(), value.dump().c_str()));
}

std::string join_header(const std::vector<std::string>& lines) {
  std::string h;
  for (const auto& l : lines) h += l + "\n";
  return h;
}

std::string fmt(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Failure{RMT_ERR_IO, "cannot create directory '" + dir + "': " + ec.message()};
}

void write_curve(Manifest& m, const rmt_curve* c, const std::string& path, const std::vector<std::string>& header) {
  check(rmt_curve_write(c, path.c_str(), join_header(header).c_str()));
  check(rmt_manifest_add_output(m.get(), path.c_str()));
}

void write_text(Manifest& m, const std::string& path, const std::string& text) {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Failure{RMT_ERR_IO, "cannot write '" + path + "'"};
  std::fputs(text.c_str(), f);
  std::fclose(f);
  check(rmt_manifest_add_output(m.get(), path.c_str()));
}

rmt_ensemble_spec make_spec(const std::string& model, int dim, std::optional<double> lambda, std::optional<double> xi,
                            uint64_t seed, int realizations) {
  if (lambda && xi) usage("--lambda and --xi are mutually exclusive");
  if (lambda && model != "rp") usage("--lambda applies to --model rp only, not '" + model + "'");
  if (xi && model != "goe2gue") usage("--xi applies to --model goe2gue only, not '" + model + "'");
  if (dim < 2) usage("--dim must be at least 2, got " + std::to_string(dim));
  rmt_ensemble_spec s;
  rmt_ensemble_spec_default(&s);
  s.model = model.c_str();
  s.dim = dim;
  s.lambda = lambda.value_or(0.0);
  s.xi = xi.value_or(0.0);
  s.seed = seed;
  s.realizations = realizations;
  check(rmt_ensemble_validate(&s));
  return s;
}

json spec_json(const rmt_ensemble_spec& s) {
  return json{{"model", s.model}, {"dim", s.dim},   {"lambda", s.lambda},
              {"xi", s.xi},       {"seed", s.seed}, {"realizations", s.realizations}};
}

Spectra read_levels(Manifest& m, const std::vector<std::string>& files) {
  if (files.empty()) usage("--levels: at least one file required");
  Spectra s;
  check(rmt_spectra_create(s.out()));
  for (const auto& f : files) {
    check(rmt_spectra_read(s.get(), f.c_str()));
    check(rmt_manifest_add_input(m.get(), f.c_str()));
  }
  return s;
}

rmt_unfold_method parse_unfold(const std::string& name) {
  if (name == "none") return RMT_UNFOLD_NONE;
  if (name == "weyl") return RMT_UNFOLD_WEYL;
  if (name == "poly2") return RMT_UNFOLD_POLY2;
  if (name == "poly3") return RMT_UNFOLD_POLY3;
  if (name == "ensemble") return RMT_UNFOLD_ENSEMBLE;
  usage("--unfold: unknown method '" + name + "'");
}

double resolve_radius(const rmt_spectra* s, std::optional<double> radius) {
  if (radius) return *radius;
  if (const char* r = rmt_spectra_meta(s, 0, "radius_m")) return std::strtod(r, nullptr);
  usage("circle radius required: pass --radius or a level file with a '# radius_m:' header");
}

std::vector<std::string> curve_warnings(const rmt_curve* c) {
  std::vector<std::string> w;
  for (size_t i = 0; i < rmt_curve_warning_count(c); ++i) w.push_back(rmt_curve_warning(c, i));
  return w;
}

void print_fit(const rmt_fit* f, const std::string& name) {
  std::cout << name << " = " << fmt(rmt_fit_estimate(f));
  if (*rmt_fit_bound(f)) std::cout << " (bound " << rmt_fit_bound(f) << ")";
  std::cout << "\n";
}

void finish_fit(Manifest& m, const rmt_fit* f, const std::string& out, const std::string& name) {
  json j = json::parse(rmt_fit_json(f));
  set(m, "fit", j);
  if (!out.empty()) {
    fs::path p(out);
    if (p.has_parent_path()) ensure_dir(p.parent_path().string());
    write_text(m, out, j.dump(2) + "\n");
  }
  print_fit(f, name);
}

void write_manifest(Manifest& m, const std::string& path) {
  fs::path p(path);
  if (p.has_parent_path()) ensure_dir(p.parent_path().string());
  check(rmt_manifest_write(m.get(), path.c_str()));
}

std::string default_manifest(const std::string& out) {
  if (out.empty()) return "manifest.json";
  fs::path p(out);
  if (p.has_extension()) return (p.parent_path() / (p.stem().string() + ".manifest.json")).string();
  return (p / "manifest.json").string();
}

// ------------------------------------------------------------------ gen

struct GenArgs {
  std::string model = "gue";
  int dim = 400;
  std::optional<double> lambda, xi;
  int realizations = 1;
  uint64_t seed = 0;
  std::string out = "spectra";
};

int run_gen(const GenArgs& a) {
  rmt_ensemble_spec spec = make_spec(a.model, a.dim, a.lambda, a.xi, a.seed, a.realizations);
  Manifest m = open_manifest();
  set(m, "ensemble", spec_json(spec));
  set(m, "master_seed", a.seed);
  Spectra s;
  check(rmt_generate(&spec, s.out()));
  ensure_dir(a.out);
  const int width = std::max<int>(4, static_cast<int>(std::to_string(a.realizations - 1).size()));
  for (size_t i = 0; i < rmt_spectra_count(s.get()); ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "levels_%0*zu.csv", width, i);
    const std::string path = (fs::path(a.out) / name).string();
    std::vector<std::string> header = {"model: " + a.model, "dim: " + std::to_string(a.dim),
                                       "seed: " + std::to_string(a.seed), "realization: " + std::to_string(i)};
    if (a.model == "rp") header.push_back("lambda: " + fmt(spec.lambda));
    if (a.model == "goe2gue") header.push_back("xi: " + fmt(spec.xi));
    check(rmt_spectra_write(s.get(), i, path.c_str(), join_header(header).c_str()));
    check(rmt_manifest_add_output(m.get(), path.c_str()));
  }
  write_manifest(m, (fs::path(a.out) / "manifest.json").string());
  std::cout << "wrote " << rmt_spectra_count(s.get()) << " spectra to " << a.out << "\n";
  return 0;
}

// -------------------------------------------------------------- analyze

struct AnalyzeArgs {
  std::vector<std::string> levels;
  std::string unfold = "poly2";
  std::vector<std::string> observables = {"nnsd", "sigma2"};
  std::string out = "analysis";
  std::optional<double> radius;
  double central_fraction = 1.0;
};

int run_analyze(const AnalyzeArgs& a) {
  Manifest m = open_manifest();
  set(m, "unfold", a.unfold);
  set(m, "observables", a.observables);
  set(m, "central_fraction", a.central_fraction);
  Spectra s = read_levels(m, a.levels);
  ensure_dir(a.out);
  const rmt_unfold_method method = parse_unfold(a.unfold);
  std::optional<double> radius;
  bool needs_radius = method == RMT_UNFOLD_WEYL ||
                      std::find(a.observables.begin(), a.observables.end(), "length") != a.observables.end();
  if (needs_radius) {
    radius = resolve_radius(s.get(), a.radius);
    set(m, "radius_m", *radius);
  }
  Unfolded u;
  bool unfolded = false;
  json summary;
  for (const auto& name : a.observables) {
    if (name == "length") {
      for (size_t i = 0; i < rmt_spectra_count(s.get()); ++i) {
        Curve c;
        check(rmt_length_spectrum(s.get(), i, *radius, nullptr, 0, c.out()));
        std::string file = rmt_spectra_count(s.get()) == 1 ? "length.csv" : "length_" + std::to_string(i) + ".csv";
        write_curve(m, c.get(), (fs::path(a.out) / file).string(), {"levels: " + a.levels[i]});
        const size_t n = rmt_curve_size(c.get());
        const double* g = rmt_curve_grid(c.get());
        const double* v = rmt_curve_values(c.get());
        std::vector<double> pos(rmt_curve_peaks(c.get(), 0.3, nullptr, 0));
        rmt_curve_peaks(c.get(), 0.3, pos.data(), pos.size());
        std::vector<std::pair<double, double>> peaks;
        for (double p : pos) {
          size_t k = std::lower_bound(g, g + n, p - 1e-12) - g;
          peaks.push_back({k < n ? v[k] : 0.0, p});
        }
        std::sort(peaks.rbegin(), peaks.rend());
        if (peaks.size() > 8) peaks.resize(8);
        json jp = json::array();
        for (auto& [h, p] : peaks) jp.push_back({{"length_m", p}, {"height", h}});
        summary["length_peaks"].push_back(jp);
        std::cout << "length peaks (m):";
        for (auto& [h, p] : peaks) std::cout << " " << fmt(std::round(p * 1e4) / 1e4);
        std::cout << "\n";
      }
      continue;
    }
    if (!unfolded) {
      check(rmt_unfold(s.get(), method, radius.value_or(0.0), a.central_fraction, u.out()));
      for (size_t i = 0; i < rmt_unfolded_warning_count(u.get()); ++i)
        std::cerr << "warning: " << rmt_unfolded_warning(u.get(), i) << "\n";
      unfolded = true;
    }
    Curve c;
    check(rmt_observable(u.get(), name.c_str(), nullptr, 0, c.out()));
    const std::string base = rmt_curve_name(c.get());
    set(m, "warnings_" + base, curve_warnings(c.get()));
    write_curve(m, c.get(), (fs::path(a.out) / (base + ".csv")).string(), {"unfold: " + a.unfold});
    for (const char* kind : {"poisson", "goe", "gue"}) {
      Curve r;
      rmt_status st = rmt_reference(kind, base.c_str(), rmt_curve_grid(c.get()), rmt_curve_size(c.get()), r.out());
      if (st == RMT_ERR_NOT_AVAILABLE || st == RMT_ERR_INVALID_ARGUMENT) {
        std::cerr << "note: no " << kind << " reference for " << base << ": " << rmt_last_error() << "\n";
        continue;
      }
      check(st);
      write_curve(m, r.get(), (fs::path(a.out) / (base + "_" + kind + ".csv")).string(), {});
    }
  }
  double ratio = 0.0;
  if (rmt_mean_ratio(s.get(), &ratio) == RMT_OK) summary["mean_ratio"] = ratio;
  set(m, "summary", summary);
  write_manifest(m, (fs::path(a.out) / "manifest.json").string());
  std::cout << "wrote analysis to " << a.out << "\n";
  return 0;
}

// ----------------------------------------------------------- fit-lambda

struct FitLambdaArgs {
  std::vector<std::string> levels;
  std::string curve;
  std::string unfold = "ensemble";
  double L_max = 5.0;
  bool windowed = true;
  std::string out;
};

int run_fit_lambda(const FitLambdaArgs& a) {
  Manifest m = open_manifest();
  set(m, "L_max", a.L_max);
  set(m, "windowed", a.windowed);
  Curve sigma2;
  if (!a.curve.empty()) {
    if (!a.levels.empty()) usage("--levels and --curve are mutually exclusive");
    check(rmt_curve_read(a.curve.c_str(), sigma2.out()));
    check(rmt_manifest_add_input(m.get(), a.curve.c_str()));
  } else {
    set(m, "unfold", a.unfold);
    Spectra s = read_levels(m, a.levels);
    Unfolded u;
    check(rmt_unfold(s.get(), parse_unfold(a.unfold), 0.0, 1.0, u.out()));
    check(rmt_observable(u.get(), "sigma2", nullptr, 0, sigma2.out()));
  }
  Fit f;
  check(rmt_fit_lambda(sigma2.get(), a.L_max, a.windowed ? 1 : 0, f.out()));
  finish_fit(m, f.get(), a.out, "lambda");
  write_manifest(m, default_manifest(a.out));
  return 0;
}

// -------------------------------------------------------------- scatter

struct ScatterArgs {
  std::string model = "rp";
  std::optional<double> lambda, xi;
  std::string smatrix;
  double spacing_ghz = 0.0;
  rmt_scatter_config cfg{};
  int write_series = 0;
  std::string out = "scatter";
};

void scatter_outputs(Manifest& m, const rmt_scatter* s, const ScatterArgs& a) {
  for (const char* key : {"c_ab", "c_ab_normalized", "amplitude"}) {
    Curve c;
    rmt_status st = rmt_scatter_curve(s, key, c.out());
    if (st == RMT_ERR_NOT_AVAILABLE) {
      std::cerr << "note: " << rmt_last_error() << "\n";
      continue;
    }
    check(st);
    write_curve(m, c.get(), (fs::path(a.out) / (std::string(key) + ".csv")).string(), {});
  }
  const int series = std::min<int>(a.write_series, static_cast<int>(rmt_scatter_series_count(s)));
  for (int i = 0; i < series; ++i) {
    const std::string path = (fs::path(a.out) / ("smatrix_" + std::to_string(i) + ".csv")).string();
    check(rmt_scatter_write_series(s, i, path.c_str()));
    check(rmt_manifest_add_output(m.get(), path.c_str()));
  }
  json summary = json::parse(rmt_scatter_json(s));
  set(m, "result", summary);
  write_text(m, (fs::path(a.out) / "summary.json").string(), summary.dump(2) + "\n");
  for (const char* key : {"T_a", "T_b", "c_cross", "c_cross_stderr", "delta"}) {
    double v = 0.0;
    check(rmt_scatter_value(s, key, &v));
    std::cout << key << " = " << fmt(v) << "\n";
  }
}

int run_scatter(ScatterArgs a) {
  Manifest m = open_manifest();
  ensure_dir(a.out);
  Scatter s;
  if (!a.smatrix.empty()) {
    if (a.spacing_ghz <= 0.0) usage("--spacing-ghz must be positive for measured S-matrix input");
    set(m, "spacing_ghz", a.spacing_ghz);
    set(m, "secular_window", a.cfg.secular_window);
    check(rmt_manifest_add_input(m.get(), a.smatrix.c_str()));
    check(rmt_scatter_measured(a.smatrix.c_str(), a.spacing_ghz, a.cfg.secular_window, s.out()));
  } else {
    rmt_ensemble_spec spec = make_spec(a.model, a.cfg.dim, a.lambda, a.xi, a.cfg.seed, a.cfg.realizations);
    set(m, "ensemble", spec_json(spec));
    set(m, "scattering", json{{"dim", a.cfg.dim},
                              {"fictitious", a.cfg.fictitious},
                              {"T_a", a.cfg.T_a},
                              {"T_b", a.cfg.T_b},
                              {"tau_abs", a.cfg.tau_abs},
                              {"n_freq", a.cfg.n_freq},
                              {"window_spacings", a.cfg.window_spacings},
                              {"realizations", a.cfg.realizations},
                              {"secular_window", a.cfg.secular_window},
                              {"calibration_realizations", a.cfg.calibration_realizations}});
    set(m, "master_seed", a.cfg.seed);
    check(rmt_scatter_run(&a.cfg, &spec, s.out()));
  }
  scatter_outputs(m, s.get(), a);
  write_manifest(m, (fs::path(a.out) / "manifest.json").string());
  return 0;
}

// --------------------------------------------------------------- fit-xi

struct FitXiArgs {
  std::optional<double> c_cross;
  double T_a = 0.60, T_b = 0.68, tau_abs = 1.6;
  std::vector<std::string> tables;
  std::string build_table;
  rmt_scatter_config cfg{};
  std::vector<double> xi_grid;
  std::string out;
};

int run_fit_xi(FitXiArgs a) {
  Manifest m = open_manifest();
  if (!a.build_table.empty()) {
    a.cfg.T_a = a.T_a;
    a.cfg.T_b = a.T_b;
    a.cfg.tau_abs = a.tau_abs;
    set(m, "table_config", json{{"dim", a.cfg.dim},
                                {"T_a", a.T_a},
                                {"T_b", a.T_b},
                                {"tau_abs", a.tau_abs},
                                {"n_freq", a.cfg.n_freq},
                                {"window_spacings", a.cfg.window_spacings},
                                {"realizations", a.cfg.realizations},
                                {"seed", a.cfg.seed},
                                {"xi_grid", a.xi_grid}});
    XiTable t;
    check(rmt_xi_table_build(&a.cfg, a.xi_grid.empty() ? nullptr : a.xi_grid.data(), a.xi_grid.size(), t.out()));
    fs::path p(a.build_table);
    if (p.has_parent_path()) ensure_dir(p.parent_path().string());
    check(rmt_xi_table_save(t.get(), a.build_table.c_str()));
    check(rmt_manifest_add_output(m.get(), a.build_table.c_str()));
    a.tables.push_back(a.build_table);
    std::cout << "wrote xi table " << a.build_table << "\n";
  }
  if (a.c_cross) {
    set(m, "query", json{{"c_cross", *a.c_cross}, {"T_a", a.T_a}, {"T_b", a.T_b}, {"tau_abs", a.tau_abs}});
    std::vector<XiTable> held;
    std::vector<const rmt_xi_table*> ptrs;
    for (const auto& path : a.tables) {
      held.emplace_back();
      check(rmt_xi_table_load(path.c_str(), held.back().out()));
      check(rmt_manifest_add_input(m.get(), path.c_str()));
      ptrs.push_back(held.back().get());
    }
    Fit f;
    check(rmt_fit_xi(*a.c_cross, a.T_a, a.T_b, a.tau_abs, ptrs.data(), ptrs.size(), f.out()));
    finish_fit(m, f.get(), a.out, "xi");
  } else if (a.build_table.empty()) {
    usage("fit-xi: pass --ccross, --build-table, or both");
  }
  write_manifest(m, default_manifest(a.out.empty() ? a.build_table : a.out));
  return 0;
}

// -------------------------------------------------------------- fit-tau

struct FitTauArgs {
  std::string curve;
  std::string table;
  std::string build_table;
  std::string model = "goe";
  std::optional<double> lambda, xi;
  rmt_scatter_config cfg{};
  std::vector<double> tau_grid;
  std::string out;
};

int run_fit_tau(FitTauArgs a) {
  Manifest m = open_manifest();
  TauTable t;
  if (!a.build_table.empty()) {
    rmt_ensemble_spec spec = make_spec(a.model, a.cfg.dim, a.lambda, a.xi, a.cfg.seed, a.cfg.realizations);
    set(m, "ensemble", spec_json(spec));
    set(m, "table_config", json{{"dim", a.cfg.dim},
                                {"T_a", a.cfg.T_a},
                                {"T_b", a.cfg.T_b},
                                {"n_freq", a.cfg.n_freq},
                                {"window_spacings", a.cfg.window_spacings},
                                {"realizations", a.cfg.realizations},
                                {"seed", a.cfg.seed},
                                {"tau_grid", a.tau_grid}});
    check(rmt_tau_table_build(&a.cfg, &spec, a.tau_grid.empty() ? nullptr : a.tau_grid.data(), a.tau_grid.size(),
                              t.out()));
    fs::path p(a.build_table);
    if (p.has_parent_path()) ensure_dir(p.parent_path().string());
    check(rmt_tau_table_save(t.get(), a.build_table.c_str()));
    check(rmt_manifest_add_output(m.get(), a.build_table.c_str()));
    std::cout << "wrote tau table " << a.build_table << "\n";
  } else if (!a.table.empty()) {
    check(rmt_tau_table_load(a.table.c_str(), t.out()));
    check(rmt_manifest_add_input(m.get(), a.table.c_str()));
  } else {
    usage("fit-tau: pass --table or --build-table");
  }
  if (!a.curve.empty()) {
    Curve c;
    check(rmt_curve_read(a.curve.c_str(), c.out()));
    check(rmt_manifest_add_input(m.get(), a.curve.c_str()));
    Fit f;
    check(rmt_fit_tau(c.get(), t.get(), f.out()));
    finish_fit(m, f.get(), a.out, "tau_abs");
  } else if (a.build_table.empty()) {
    usage("fit-tau: --curve required");
  }
  write_manifest(m, default_manifest(a.out.empty() ? a.build_table : a.out));
  return 0;
}

// ------------------------------------------------------------- billiard

struct BilliardArgs {
  double radius = 0.25;
  double f_max = 20.0;
  std::string out = "circle_levels.csv";
};

int run_billiard(const BilliardArgs& a) {
  Manifest m = open_manifest();
  set(m, "geometry", json{{"shape", "circle"}, {"radius_m", a.radius}, {"f_max_ghz", a.f_max}});
  Spectra s;
  check(rmt_circle_levels(a.radius, a.f_max, s.out()));
  check(rmt_spectra_split_degeneracies(s.get()));
  fs::path p(a.out);
  if (p.has_parent_path()) ensure_dir(p.parent_path().string());
  const std::string header = join_header({"geometry: circle", "radius_m: " + fmt(a.radius),
                                          "f_max_ghz: " + fmt(a.f_max), "units: GHz",
                                          "degeneracies: split by 1e-9 mean spacings"});
  check(rmt_spectra_write(s.get(), 0, a.out.c_str(), header.c_str()));
  check(rmt_manifest_add_output(m.get(), a.out.c_str()));
  write_manifest(m, default_manifest(a.out));
  const double* lv = nullptr;
  size_t n = 0;
  check(rmt_spectra_get(s.get(), 0, &lv, &n));
  std::cout << "wrote " << n << " levels to " << a.out << "\n";
  return 0;
}

void add_scatter_options(CLI::App* c, rmt_scatter_config& cfg) {
  c->add_option("--dim", cfg.dim, "Matrix dimension")->capture_default_str();
  c->add_option("--fictitious", cfg.fictitious, "Number of absorption channels")->capture_default_str();
  c->add_option("--Ta", cfg.T_a, "Target transmission of antenna a")->capture_default_str();
  c->add_option("--Tb", cfg.T_b, "Target transmission of antenna b")->capture_default_str();
  c->add_option("--n-freq", cfg.n_freq, "Frequency points per realization")->capture_default_str();
  c->add_option("--window", cfg.window_spacings, "Frequency window in mean spacings")->capture_default_str();
  c->add_option("--realizations", cfg.realizations, "Realizations")->capture_default_str();
  c->add_option("--seed", cfg.seed, "Master seed")->capture_default_str();
  c->add_option("--secular-window", cfg.secular_window, "Points per secular-average window (0 = whole grid)")
      ->capture_default_str();
  c->add_option("--calibration-realizations", cfg.calibration_realizations, "Realizations for coupling calibration")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 0; i < argc; ++i) g_command_line += (i ? " " : "") + std::string(argv[i]);

  CLI::App app{"Random-matrix spectral statistics laboratory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(rmt_version()));
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: RMTLAB_THREADS or all cores)");

  GenArgs gen;
  auto* c_gen = app.add_subcommand("gen", "Sample eigenvalue spectra from an ensemble");
  c_gen->add_option("--model", gen.model, "poisson, goe, gue, rp or goe2gue")->capture_default_str();
  c_gen->add_option("--dim", gen.dim, "Matrix dimension")->capture_default_str();
  c_gen->add_option("--lambda", gen.lambda, "Rosenzweig-Porter coupling");
  c_gen->add_option("--xi", gen.xi, "GOE-GUE crossover parameter");
  c_gen->add_option("--realizations", gen.realizations, "Number of spectra")->capture_default_str();
  c_gen->add_option("--seed", gen.seed, "Master seed")->capture_default_str();
  c_gen->add_option("--out", gen.out, "Output directory")->capture_default_str();

  AnalyzeArgs an;
  auto* c_an = app.add_subcommand("analyze", "Unfold level files and compute spectral observables");
  c_an->add_option("--levels", an.levels, "Level files")->required()->delimiter(',');
  c_an->add_option("--unfold", an.unfold, "weyl, poly2, poly3, ensemble or none")->capture_default_str();
  c_an->add_option("--observables", an.observables,
                   "nnsd, nnsd_cumulative, ratio, ratio_cumulative, sigma2, y2, form_factor, power_spectrum, length")
      ->delimiter(',');
  c_an->add_option("--out", an.out, "Output directory")->capture_default_str();
  c_an->add_option("--radius", an.radius, "Circle radius in m (weyl unfolding and length spectra)");
  c_an->add_option("--central-fraction", an.central_fraction, "Fraction of levels kept around the centre")
      ->capture_default_str();

  FitLambdaArgs fl;
  auto* c_fl = app.add_subcommand("fit-lambda", "Fit the Rosenzweig-Porter coupling to a number variance");
  c_fl->add_option("--levels", fl.levels, "Level files")->delimiter(',');
  c_fl->add_option("--curve", fl.curve, "Number-variance curve CSV instead of level files");
  c_fl->add_option("--unfold", fl.unfold, "Unfolding for level files")->capture_default_str();
  c_fl->add_option("--L-max", fl.L_max, "Largest interval length")->capture_default_str();
  c_fl->add_flag("!--no-window", fl.windowed, "Disable quantile-window averaging of the model");
  c_fl->add_option("--out", fl.out, "Fit result JSON");

  ScatterArgs sa;
  rmt_scatter_config_default(&sa.cfg);
  sa.cfg.tau_abs = 0.75;
  auto* c_sa = app.add_subcommand("scatter", "Simulate or analyse two-antenna S-matrix fluctuations");
  c_sa->add_option("--model", sa.model, "Internal Hamiltonian: rp, goe, gue or goe2gue")->capture_default_str();
  c_sa->add_option("--lambda", sa.lambda, "Rosenzweig-Porter coupling");
  c_sa->add_option("--xi", sa.xi, "GOE-GUE crossover parameter");
  c_sa->add_option("--tau-abs", sa.cfg.tau_abs, "Absorption strength")->capture_default_str();
  add_scatter_options(c_sa, sa.cfg);
  c_sa->add_option("--smatrix", sa.smatrix, "Measured 9-column S-matrix CSV instead of a simulation");
  c_sa->add_option("--spacing-ghz", sa.spacing_ghz, "Mean level spacing of the measured data in GHz");
  c_sa->add_option("--write-series", sa.write_series, "Number of realizations to export as S-matrix CSV")
      ->capture_default_str();
  c_sa->add_option("--out", sa.out, "Output directory")->capture_default_str();

  FitXiArgs fx;
  rmt_scatter_config_default(&fx.cfg);
  auto* c_fx = app.add_subcommand("fit-xi", "Infer the crossover parameter from C_cross");
  c_fx->add_option("--ccross", fx.c_cross, "Measured cross-correlation coefficient");
  c_fx->add_option("--Ta", fx.T_a, "Transmission of antenna a")->capture_default_str();
  c_fx->add_option("--Tb", fx.T_b, "Transmission of antenna b")->capture_default_str();
  c_fx->add_option("--tau-abs", fx.tau_abs, "Absorption strength")->capture_default_str();
  c_fx->add_option("--table", fx.tables, "Precomputed xi table JSON")->delimiter(',');
  c_fx->add_option("--build-table", fx.build_table, "Build a xi table and save it to this path");
  c_fx->add_option("--xi-grid", fx.xi_grid, "xi values of a new table")->delimiter(',');
  c_fx->add_option("--dim", fx.cfg.dim, "Matrix dimension of a new table")->capture_default_str();
  c_fx->add_option("--n-freq", fx.cfg.n_freq, "Frequency points of a new table")->capture_default_str();
  c_fx->add_option("--window", fx.cfg.window_spacings, "Frequency window of a new table in mean spacings")
      ->capture_default_str();
  c_fx->add_option("--realizations", fx.cfg.realizations, "Realizations per xi of a new table")->capture_default_str();
  c_fx->add_option("--seed", fx.cfg.seed, "Master seed of a new table")->capture_default_str();
  c_fx->add_option("--out", fx.out, "Fit result JSON");

  FitTauArgs ft;
  rmt_scatter_config_default(&ft.cfg);
  ft.cfg.realizations = 40;
  auto* c_ft = app.add_subcommand("fit-tau", "Infer the absorption strength from a normalized |C_ab| curve");
  c_ft->add_option("--curve", ft.curve, "c_ab_normalized CSV");
  c_ft->add_option("--table", ft.table, "Precomputed tau table JSON");
  c_ft->add_option("--build-table", ft.build_table, "Build a tau table and save it to this path");
  c_ft->add_option("--tau-grid", ft.tau_grid, "tau_abs values of a new table")->delimiter(',');
  c_ft->add_option("--model", ft.model, "Internal Hamiltonian of a new table")->capture_default_str();
  c_ft->add_option("--lambda", ft.lambda, "Rosenzweig-Porter coupling of a new table");
  c_ft->add_option("--xi", ft.xi, "GOE-GUE crossover parameter of a new table");
  add_scatter_options(c_ft, ft.cfg);
  c_ft->add_option("--out", ft.out, "Fit result JSON");

  BilliardArgs bi;
  auto* c_bi = app.add_subcommand("billiard", "Write the eigenfrequencies of a circular billiard");
  c_bi->add_option("--radius", bi.radius, "Radius in m")->capture_default_str();
  c_bi->add_option("--fmax", bi.f_max, "Largest frequency in GHz")->capture_default_str();
  c_bi->add_option("--out", bi.out, "Output level file")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return rmt_exit_code(RMT_ERR_INVALID_ARGUMENT);
  }

  try {
    rmt_set_threads(threads);
    if (c_gen->parsed()) return run_gen(gen);
    if (c_an->parsed()) return run_analyze(an);
    if (c_fl->parsed()) return run_fit_lambda(fl);
    if (c_sa->parsed()) return run_scatter(sa);
    if (c_fx->parsed()) return run_fit_xi(fx);
    if (c_ft->parsed()) return run_fit_tau(ft);
    if (c_bi->parsed()) return run_billiard(bi);
  } catch (const Failure& f) {
    const char* kind = rmt_exit_code(f.status) == 2 ? "usage error" : "error";
    std::cerr << kind << ": " << f.message << "\n";
    return rmt_exit_code(f.status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return rmt_exit_code(RMT_ERR_INTERNAL);
  }
  return rmt_exit_code(RMT_ERR_INVALID_ARGUMENT);
}
