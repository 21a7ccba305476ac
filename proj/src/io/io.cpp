#include "io/io.hpp"

#include <cerrno>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "common/error.hpp"
#include "common/version.hpp"

namespace rmtlab::io {

namespace {

double wall_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void parse_error(const std::string& path, std::size_t line, const std::string& what) {
  fail(ErrorCode::Parse, path + ":" + std::to_string(line) + ": " + what);
}

double parse_number(const std::string& tok, const std::string& path, std::size_t line) {
  const std::string t = trim(tok);
  if (t.empty()) parse_error(path, line, "empty field");
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v))
    parse_error(path, line, "not a finite number: '" + t + "'");
  return v;
}

// Rows of comma-separated numbers, with their 1-based line numbers.
std::vector<std::pair<std::size_t, std::vector<double>>> read_rows(const std::string& path, std::size_t columns) {
  std::istringstream in(slurp(path));
  std::vector<std::pair<std::size_t, std::vector<double>>> rows;
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    std::vector<double> vals;
    std::stringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) vals.push_back(parse_number(tok, path, no));
    if (columns && vals.size() != columns)
      parse_error(path, no, "expected " + std::to_string(columns) + " columns, found " + std::to_string(vals.size()));
    rows.emplace_back(no, std::move(vals));
  }
  return rows;
}

std::string header_block(const std::vector<std::string>& header) {
  std::string out;
  for (const std::string& h : header) out += "# " + h + "\n";
  return out;
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

unfolding::RawSpectrum read_levels(const std::string& path) {
  auto rows = read_rows(path, 1);
  unfolding::RawSpectrum raw;
  raw.label = path;
  raw.source = unfolding::Source::Measured;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double v = rows[i].second[0];
    if (i > 0) {
      double prev = raw.levels.back();
      if (v == prev) parse_error(path, rows[i].first, "duplicate level " + format_double(v));
      if (v < prev) parse_error(path, rows[i].first, "levels not ascending (" + format_double(v) + " after " +
                                                         format_double(prev) + ")");
    }
    raw.levels.push_back(v);
  }
  require(!raw.levels.empty(), ErrorCode::InsufficientData, "'" + path + "' contains no levels");
  return raw;
}

std::map<std::string, std::string> read_header(const std::string& path) {
  std::map<std::string, std::string> out;
  std::istringstream in(slurp(path));
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.size() < 2 || t[0] != '#') continue;
    const std::size_t colon = t.find(':');
    if (colon == std::string::npos) continue;
    const std::string key = trim(t.substr(1, colon - 1));
    if (!key.empty() && key.find(' ') == std::string::npos) out[key] = trim(t.substr(colon + 1));
  }
  return out;
}

void write_levels(const std::string& path, const std::vector<double>& levels, const std::vector<std::string>& header) {
  std::string out = header_block(header);
  for (double x : levels) out += format_double(x) + "\n";
  write_atomic(path, out);
}

void write_curve(const std::string& path, const observables::ObservableCurve& c, const std::vector<std::string>& header) {
  c.validate();
  std::string out = header_block(header);
  out += std::string("# observable: ") + observables::observable_name(c.observable) + "\n";
  for (const auto& [k, v] : c.meta) out += "# " + k + ": " + v + "\n";
  for (const auto& w : c.warnings) out += "# warning: " + w + "\n";
  out += c.has_stderr() ? "# grid,value,stderr\n" : "# grid,value\n";
  for (std::size_t i = 0; i < c.grid.size(); ++i) {
    out += format_double(c.grid[i]) + "," + format_double(c.values[i]);
    if (c.has_stderr()) out += "," + format_double(c.stderr_[i]);
    out += "\n";
  }
  write_atomic(path, out);
}

observables::ObservableCurve read_curve(const std::string& path) {
  observables::ObservableCurve c;
  {
    std::istringstream in(slurp(path));
    std::string line;
    while (std::getline(in, line)) {
      const std::string t = trim(line);
      const std::string tag = "# observable: ";
      if (t.rfind(tag, 0) == 0) c.observable = observables::parse_observable(trim(t.substr(tag.size())));
    }
  }
  auto rows = read_rows(path, 0);
  require(!rows.empty(), ErrorCode::InsufficientData, "'" + path + "' contains no curve points");
  const std::size_t cols = rows.front().second.size();
  for (const auto& [no, vals] : rows) {
    if (vals.size() != cols || cols < 2 || cols > 3) parse_error(path, no, "curve rows need 2 or 3 columns");
    if (!c.grid.empty() && vals[0] <= c.grid.back()) parse_error(path, no, "grid not ascending");
    c.grid.push_back(vals[0]);
    c.values.push_back(vals[1]);
    if (cols == 3) c.stderr_.push_back(vals[2]);
  }
  return c;
}

SMatrixData read_smatrix(const std::string& path) {
  auto rows = read_rows(path, 9);
  SMatrixData d;
  for (const auto& [no, v] : rows) {
    if (!d.freq_ghz.empty() && v[0] <= d.freq_ghz.back()) parse_error(path, no, "frequencies not ascending");
    d.freq_ghz.push_back(v[0]);
    d.s_aa.emplace_back(v[1], v[2]);
    d.s_ab.emplace_back(v[3], v[4]);
    d.s_ba.emplace_back(v[5], v[6]);
    d.s_bb.emplace_back(v[7], v[8]);
  }
  require(d.freq_ghz.size() >= 2, ErrorCode::InsufficientData, "'" + path + "' needs at least two frequency rows");
  return d;
}

void write_smatrix(const std::string& path, const SMatrixData& d, const std::vector<std::string>& header) {
  const std::size_t n = d.freq_ghz.size();
  require(d.s_aa.size() == n && d.s_ab.size() == n && d.s_ba.size() == n && d.s_bb.size() == n,
          ErrorCode::InvalidArgument, "write_smatrix: column lengths differ");
  std::string out = header_block(header);
  out += "# freq_GHz,re_Saa,im_Saa,re_Sab,im_Sab,re_Sba,im_Sba,re_Sbb,im_Sbb\n";
  for (std::size_t i = 0; i < n; ++i) {
    out += format_double(d.freq_ghz[i]);
    for (const auto* s : {&d.s_aa, &d.s_ab, &d.s_ba, &d.s_bb})
      out += "," + format_double((*s)[i].real()) + "," + format_double((*s)[i].imag());
    out += "\n";
  }
  write_atomic(path, out);
}

std::uint64_t fnv1a64(const std::string& bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fnv1a64_file(const std::string& path) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(slurp(path))));
  return buf;
}

void write_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    require(!ec, ErrorCode::Io, "cannot create directory '" + target.parent_path().string() + "': " + ec.message());
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    require(static_cast<bool>(out), ErrorCode::Io, "write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  require(!ec, ErrorCode::Io, "cannot rename '" + tmp.string() + "' to '" + path + "': " + ec.message());
}

Manifest::Manifest(std::string command_line) : start_(wall_seconds()) {
  doc_["command_line"] = std::move(command_line);
  doc_["inputs"] = nlohmann::json::array();
  doc_["outputs"] = nlohmann::json::array();
  doc_["config"] = nlohmann::json::object();
  doc_["library_version"] = kVersion;
  for (const char* m : kModules) doc_["module_versions"][m] = kVersion;
}

void Manifest::set(const std::string& key, nlohmann::json value) { doc_["config"][key] = std::move(value); }

void Manifest::add_input(const std::string& path) {
  doc_["inputs"].push_back({{"path", path}, {"fnv1a64", fnv1a64_file(path)}});
}

void Manifest::add_output(const std::string& path) {
  doc_["outputs"].push_back({{"path", path}, {"fnv1a64", fnv1a64_file(path)}});
}

void Manifest::write(const std::string& path) {
  doc_["wall_time_s"] = wall_seconds() - start_;
  write_atomic(path, doc_.dump(2) + "\n");
}

}  // namespace rmtlab::io
