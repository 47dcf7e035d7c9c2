// Runs the tsig executable as a subprocess; TSIG_EXE and TSIG_CONFIG_DIR come
// from the build.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"

namespace {

struct Run {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Run run(const std::string& args) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto out = dir / ("tsig_test_out_" + std::to_string(::getpid()));
  const auto err = dir / ("tsig_test_err_" + std::to_string(::getpid()));
  const std::string cmd = std::string(TSIG_EXE) + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  std::filesystem::remove(out);
  std::filesystem::remove(err);
  return r;
}

std::string config(const char* name) { return std::string(TSIG_CONFIG_DIR) + "/" + name; }

}  // namespace

TEST_SUITE("cli_process") {

TEST_CASE("non-SPD metric exits 1 with a pointer") {
  const Run r = run("betti --config " + config("bad_metric.json"));
  CHECK(r.exit_code == 1);
  const auto e = nlohmann::json::parse(r.err);
  CHECK(e["error"]["code"] == "ConfigInvalid");
  CHECK(e["error"]["pointer"] == "/manifold/metric");
}

TEST_CASE("unknown command and missing file") {
  CHECK(run("frobnicate").exit_code == 1);
  const Run r = run("betti --config /nonexistent/config.json");
  CHECK(r.exit_code == 1);
  CHECK(nlohmann::json::parse(r.err)["error"]["code"] == "ConfigInvalid");
}

TEST_CASE("betti on the sample config") {
  const Run r = run("betti --config " + config("t3_flux.json"));
  REQUIRE(r.exit_code == 0);
  const auto out = nlohmann::json::parse(r.out);
  // the sample line bundle has holonomy (1/3, 0, 0), which kills all cohomology
  CHECK(out["b_even"] == 0);
  CHECK(out["b_odd"] == 0);
}

TEST_CASE("eta with a forced symmetry method fails numerically") {
  const auto dir = std::filesystem::temp_directory_path() / "tsig_eta_cfg.json";
  auto doc = nlohmann::json::parse(slurp(config("t3_flux.json")));
  doc["parameters"]["eta_method"] = "mode-symmetry-exact";
  std::ofstream(dir) << doc.dump();
  const Run r = run("eta --config " + dir.string());
  std::filesystem::remove(dir);
  CHECK(r.exit_code == 2);
  const auto e = nlohmann::json::parse(r.err);
  CHECK(e["error"]["code"] == "SymmetryNotDetected");
  CHECK(e["error"]["module"] == "spectral");
}

TEST_CASE("--out writes the same bytes as stdout") {
  const auto path = std::filesystem::temp_directory_path() / "tsig_out_test.json";
  const Run a = run("aps-index --config " + config("t3_flux.json"));
  const Run b = run("aps-index --config " + config("t3_flux.json") + " --out " + path.string());
  CHECK(a.exit_code == 0);
  CHECK(b.exit_code == 0);
  CHECK(slurp(path) == a.out);
  std::filesystem::remove(path);
}

TEST_CASE("verify exits 0 or 2 and prints every criterion") {
  const Run r = run("verify --threads 2");
  CHECK((r.exit_code == 0 || r.exit_code == 2));
  const auto out = nlohmann::json::parse(r.out);
  CHECK(out["total"] == 13);
  CHECK(out["criteria"].size() == 13);
}

}  // TEST_SUITE
