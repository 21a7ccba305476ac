#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <functional>

#include "common/error.hpp"
#include "io/io.hpp"

using namespace rmtlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  fs::path p = fs::temp_directory_path() / "rmtlab_io_test";
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

ErrorCode code_of(const std::function<void()>& f, std::string* msg = nullptr) {
  try {
    f();
  } catch (const Error& e) {
    if (msg) *msg = e.what();
    return e.code();
  }
  return ErrorCode::Ok;
}

}  // namespace

TEST_CASE("levels round-trip with header comments") {
  fs::path p = scratch() / "levels.csv";
  std::vector<double> x{0.1, 0.30000000000000004, 1.0 / 3.0, 2.5e10};
  io::write_levels(p.string(), x, {"model: test", "radius_m: 0.25"});
  auto r = io::read_levels(p.string());
  CHECK(r.levels == x);
  auto h = io::read_header(p.string());
  CHECK(h.at("radius_m") == "0.25");
  CHECK(h.at("model") == "test");
}

TEST_CASE("level parse errors name file and line") {
  fs::path p = scratch() / "bad.csv";
  std::string msg;
  write_file(p, "# comment\n1.0\n\n2.0\nabc\n");
  CHECK(code_of([&] { io::read_levels(p.string()); }, &msg) == ErrorCode::Parse);
  CHECK(msg.find(p.string() + ":5") != std::string::npos);
  write_file(p, "1.0\n2.0\n2.0\n");
  CHECK(code_of([&] { io::read_levels(p.string()); }, &msg) == ErrorCode::Parse);
  CHECK(msg.find(":3") != std::string::npos);
  write_file(p, "1.0\n3.0\n2.0\n");
  CHECK(code_of([&] { io::read_levels(p.string()); }, &msg) == ErrorCode::Parse);
  CHECK(msg.find(":3") != std::string::npos);
  CHECK(code_of([&] { io::read_levels((scratch() / "missing.csv").string()); }) == ErrorCode::Io);
}

TEST_CASE("curve csv round-trip") {
  observables::ObservableCurve c;
  c.observable = observables::Observable::NumberVariance;
  c.grid = {0.25, 0.5};
  c.values = {0.2, 0.4};
  c.stderr_ = {0.01, 0.02};
  c.meta["unfold"] = "poly2";
  c.warnings = {"short spectrum"};
  fs::path p = scratch() / "curve.csv";
  io::write_curve(p.string(), c, {"note: x"});
  auto r = io::read_curve(p.string());
  CHECK(r.observable == c.observable);
  CHECK(r.grid == c.grid);
  CHECK(r.values == c.values);
  CHECK(r.stderr_ == c.stderr_);
  std::ifstream in(p);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text.find('\r') == std::string::npos);
  CHECK(text.find("# observable: sigma2") != std::string::npos);
  CHECK(text.find("0.25,0.2,0.01\n") != std::string::npos);
}

TEST_CASE("s-matrix csv round-trip and column check") {
  io::SMatrixData d;
  d.freq_ghz = {9.0, 9.001};
  d.s_aa = {{0.1, 0.2}, {0.3, -0.1}};
  d.s_ab = {{0.01, 0.02}, {0.03, 0.04}};
  d.s_ba = {{-0.01, 0.02}, {0.05, 0.06}};
  d.s_bb = {{0.5, 0.5}, {0.4, 0.4}};
  fs::path p = scratch() / "s.csv";
  io::write_smatrix(p.string(), d);
  auto r = io::read_smatrix(p.string());
  CHECK(r.freq_ghz == d.freq_ghz);
  CHECK(r.s_ab == d.s_ab);
  CHECK(r.s_bb == d.s_bb);
  write_file(p, "9.0,1,2,3\n");
  CHECK(code_of([&] { io::read_smatrix(p.string()); }) == ErrorCode::Parse);
}

TEST_CASE("digests and manifest") {
  CHECK(io::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(io::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  fs::path p = scratch() / "digest.txt";
  write_file(p, "a");
  CHECK(io::fnv1a64_file(p.string()) == "af63dc4c8601ec8c");
  io::Manifest m("rmtlab gen --seed 1");
  m.set("master_seed", 1);
  m.add_input(p.string());
  m.add_output(p.string());
  fs::path mp = scratch() / "sub" / "manifest.json";
  m.write(mp.string());
  std::ifstream in(mp);
  auto j = nlohmann::json::parse(in);
  CHECK(j.at("command_line") == "rmtlab gen --seed 1");
  CHECK(j.at("config").at("master_seed") == 1);
  CHECK(j.at("inputs")[0].at("fnv1a64") == "af63dc4c8601ec8c");
  CHECK(j.at("module_versions").size() == 8);
  CHECK(j.contains("wall_time_s"));
  CHECK(!fs::exists(mp.string() + ".tmp"));
}

TEST_CASE("shortest round-trip number formatting") {
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(std::stod(io::format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
