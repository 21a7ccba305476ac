#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "observables/observables.hpp"
#include "unfolding/unfolding.hpp"

namespace rmtlab::io {

// One level per line; '#' starts a comment; blank lines are skipped.
// Non-numeric rows and non-ascending or repeated levels raise Parse
// errors naming the file and line.
unfolding::RawSpectrum read_levels(const std::string& path);
// "# key: value" comment lines of a file.
std::map<std::string, std::string> read_header(const std::string& path);
void write_levels(const std::string& path, const std::vector<double>& levels,
                  const std::vector<std::string>& header = {});

void write_curve(const std::string& path, const observables::ObservableCurve& c,
                 const std::vector<std::string>& header = {});
observables::ObservableCurve read_curve(const std::string& path);

struct SMatrixData {
  std::vector<double> freq_ghz;
  std::vector<std::complex<double>> s_aa, s_ab, s_ba, s_bb;
};

// Nine columns: freq_GHz, then Re and Im of S_aa, S_ab, S_ba, S_bb.
SMatrixData read_smatrix(const std::string& path);
void write_smatrix(const std::string& path, const SMatrixData& d, const std::vector<std::string>& header = {});

// 64-bit FNV-1a of the file contents, as 16 hex digits.
std::string fnv1a64_file(const std::string& path);
std::uint64_t fnv1a64(const std::string& bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

// Writes to a sibling temporary and renames it into place.
void write_atomic(const std::string& path, const std::string& contents);

class Manifest {
public:
  explicit Manifest(std::string command_line);
  void set(const std::string& key, nlohmann::json value);
  void add_input(const std::string& path);
  void add_output(const std::string& path);
  const nlohmann::json& json() const { return doc_; }
  // Records the wall time since construction and writes atomically.
  void write(const std::string& path);

private:
  nlohmann::json doc_;
  double start_;
};

std::string format_double(double x);

}  // namespace rmtlab::io
