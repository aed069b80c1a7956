#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "oracles.hpp"
#include "wncs/codesign.hpp"
#include "wncs/model.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;
};

// Runs the installed binary with the given arguments, capturing stdout (and
// stderr too when merge_stderr is set).
RunResult run_cli(const std::string& args, bool merge_stderr = false) {
  const std::string cmd =
      std::string(WNCS_CLI_PATH) + " " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::size_t got = fread(buf, 1, sizeof(buf), pipe)) r.output.append(buf, got);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// Scratch directory holding generated input files, shared by all cases.
class Scratch {
 public:
  Scratch() {
    dir_ = fs::temp_directory_path() / ("wncs_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
    wncs::write_file(path("plant.json"), wncs::to_json(oracle::unstable_benchmark_plant()));
    wncs::write_file(path("topology.json"), wncs::to_json(oracle::single_link(0.2)));
    wncs::DesignConfig design;
    design.h_grid_ms = {20.0, 30.0};
    design.horizon_s = 2.0;
    design.mc_replicates = 40;
    design.seed = 1;
    wncs::write_file(path("design.json"), wncs::to_json(design));
  }
  ~Scratch() { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

 private:
  fs::path dir_;
};

Scratch& scratch() {
  static Scratch s;
  return s;
}

std::string q(const std::string& s) { return "'" + s + "'"; }

}  // namespace

TEST_CASE("version banner") {
  const RunResult r = run_cli("--version");
  CHECK(r.exit_code == 0);
  CHECK(r.output.rfind("wncs 0.1.0", 0) == 0);
}

TEST_CASE("schedule solves the budgeted single-link policy") {
  const RunResult r = run_cli("schedule --topology " + q(scratch().path("topology.json")) +
                              " --deadline-slots 2 --c-req 1.1");
  REQUIRE(r.exit_code == 0);
  const json j = json::parse(r.output);
  CHECK(j["rho_star"].get<double>() == doctest::Approx(0.88).epsilon(1e-12));
  CHECK(j["energy"].get<double>() == doctest::Approx(1.1).epsilon(1e-12));
  const double theta1 = j["theta1"].get<double>();
  const double theta2 = j["theta2"].get<double>();
  CHECK(theta1 + theta2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(theta1 * j["c1"].get<double>() + theta2 * j["c2"].get<double>() ==
        doctest::Approx(1.1).epsilon(1e-9));
  CHECK(j.contains("pi1"));
  CHECK(j.contains("pi2"));
  CHECK(j.contains("delta_star"));
}

TEST_CASE("schedule writes the policy file and prints a digest") {
  const std::string out = scratch().path("policy.json");
  const RunResult r = run_cli("schedule --topology " + q(scratch().path("topology.json")) +
                              " --deadline-slots 2 --unconstrained -o " + q(out));
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("\"rho_star\":0.96") != std::string::npos);

  const json full = json::parse(wncs::read_file(out));
  CHECK(full["rho_star"].get<double>() == doctest::Approx(0.96).epsilon(1e-12));
  CHECK(full["theta1"].get<double>() == 1.0);
  CHECK(full["pi1"].is_array());
}

TEST_CASE("schedule rejects contradictory budget flags") {
  const RunResult r = run_cli("schedule --topology " + q(scratch().path("topology.json")) +
                              " --deadline-slots 2 --c-req 1.1 --unconstrained");
  CHECK(r.exit_code != 0);
}

TEST_CASE("missing input files exit with the file error code and name the path") {
  const RunResult r =
      run_cli("schedule --topology /no/such/file.json --deadline-slots 1", true);
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("/no/such/file.json") != std::string::npos);
}

TEST_CASE("invalid input files exit with the validation error code") {
  const std::string bad = scratch().path("bad_topology.json");
  wncs::NetworkTopology topo = oracle::single_link(0.2);
  std::string text = wncs::to_json(topo);
  const std::string from = "0.2";
  text.replace(text.find(from), from.size(), "1.5");
  wncs::write_file(bad, text);

  const RunResult r = run_cli("schedule --topology " + q(bad) + " --deadline-slots 1", true);
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("error:") != std::string::npos);
}

TEST_CASE("sweep output is byte-stable across runs") {
  const std::string base = "sweep --plant " + q(scratch().path("plant.json")) + " --topology " +
                           q(scratch().path("topology.json")) + " --design " +
                           q(scratch().path("design.json")) +
                           " --simulate --threads 1 --seed 7 -o ";
  const std::string out1 = scratch().path("sweep1.csv");
  const std::string out2 = scratch().path("sweep2.csv");
  REQUIRE(run_cli(base + q(out1)).exit_code == 0);
  REQUIRE(run_cli(base + q(out2)).exit_code == 0);

  const std::string a = wncs::read_file(out1);
  CHECK(a == wncs::read_file(out2));
  CHECK(a.rfind("h_ms,tau_ms,D,C_req,rho_star,theta1,C1,C2,J_min,J_max,J_mc_mean,J_mc_stderr,status\n",
                0) == 0);
  CHECK(a.find("converged") != std::string::npos);
  CHECK(std::count(a.begin(), a.end(), '\n') == 3);
}

TEST_CASE("simulate emits the report and per-replicate table") {
  const std::string report_path = scratch().path("report.json");
  const std::string reps_path = scratch().path("replicates.csv");
  const RunResult r = run_cli(
      "simulate --plant " + q(scratch().path("plant.json")) + " --topology " +
      q(scratch().path("topology.json")) +
      " --h-ms 100 --horizon-s 2 --replicates 30 --seed 3 --mode bernoulli --threads 1 -o " +
      q(report_path) + " --per-replicate " + q(reps_path));
  REQUIRE(r.exit_code == 0);

  const json j = json::parse(wncs::read_file(report_path));
  for (const char* key : {"j_empirical_mean", "j_empirical_stderr", "rho_empirical",
                          "cost_empirical", "replicates", "n_steps", "mode", "seed"}) {
    CAPTURE(key);
    CHECK(j.contains(key));
  }
  CHECK(j["replicates"].get<int>() == 30);
  CHECK(j["n_steps"].get<int>() == 20);
  CHECK(j["seed"].get<int>() == 3);
  CHECK(j["mode"].get<std::string>() == "bernoulli");
  CHECK(j["cost_empirical"].is_null());
  CHECK(j["j_empirical_mean"].get<double>() > 0.0);

  const std::string reps = wncs::read_file(reps_path);
  CHECK(reps.rfind("replicate,j\n", 0) == 0);
  CHECK(std::count(reps.begin(), reps.end(), '\n') == 31);
}

TEST_CASE("simulate slot mode reports the transmission count") {
  const RunResult r = run_cli(
      "simulate --plant " + q(scratch().path("plant.json")) + " --topology " +
      q(scratch().path("topology.json")) +
      " --h-ms 20 --horizon-s 1 --replicates 20 --seed 4 --mode slot --threads 1");
  REQUIRE(r.exit_code == 0);
  const json j = json::parse(r.output);
  CHECK(j["mode"].get<std::string>() == "slot-level");
  CHECK(j["cost_empirical"].is_number());
}

TEST_CASE("simulate refuses a deadline shorter than one slot") {
  const RunResult r = run_cli("simulate --plant " + q(scratch().path("plant.json")) +
                                  " --topology " + q(scratch().path("topology.json")) +
                                  " --h-ms 5 --replicates 5 --threads 1",
                              true);
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("error:") != std::string::npos);
}

TEST_CASE("frontier traces prices into a CSV") {
  const std::string out = scratch().path("frontier.csv");
  const RunResult r = run_cli("frontier --plant " + q(scratch().path("plant.json")) +
                              " --topology " + q(scratch().path("topology.json")) + " --design " +
                              q(scratch().path("design.json")) +
                              " --eps 0.05,0.2 --threads 1 -o " + q(out));
  REQUIRE(r.exit_code == 0);
  const std::string csv = wncs::read_file(out);
  CHECK(csv.rfind("epsilon_per_ms,J_opt,h_opt_ms,rho_opt\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
