#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "rmtgrid/io.hpp"

using Catch::Matchers::ContainsSubstring;
using namespace rmtgrid;
namespace fs = std::filesystem;

namespace {

int run_shell(const std::string& cmd) {
  const int status = std::system((cmd + " > /dev/null 2>&1").c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

int run_cli(const std::string& args) {
  return run_shell(std::string(RMTGRID_CLI_PATH) + " " + args);
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "rmtgrid_cli_tests" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// One shared run of each builtin scenario, simulated on first use.
const fs::path& simple_dir() {
  static const fs::path dir = [] {
    const fs::path d = fresh_dir("simple_default");
    REQUIRE(run_cli("simulate --builtin simple --out " + d.string()) == 0);
    return d;
  }();
  return dir;
}

const fs::path& complex_dir() {
  static const fs::path dir = [] {
    const fs::path d = fresh_dir("complex_default");
    REQUIRE(run_cli("simulate --builtin complex --out " + d.string()) == 0);
    return d;
  }();
  return dir;
}

const fs::path& complex_detect_dir() {
  static const fs::path dir = [] {
    const fs::path d = fresh_dir("complex_detect");
    const fs::path& sim = complex_dir();
    REQUIRE(run_cli("detect --p " + (sim / "P.csv").string() + " --u " +
                    (sim / "U.csv").string() + " --library " +
                    (sim / "library.json").string() +
                    " --dT 4 --jobs 8 --out " + d.string()) == 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("simulate is reproducible for a fixed seed", "[cli]") {
  const fs::path a = fresh_dir("sim_seed7_a");
  const fs::path b = fresh_dir("sim_seed7_b");
  REQUIRE(run_cli("simulate --builtin simple --seed 7 --out " + a.string()) == 0);
  REQUIRE(run_cli("simulate --builtin simple --seed 7 --out " + b.string()) == 0);

  for (const std::string f : {"P.csv", "U.csv", "truth.json", "library.json"})
    CHECK(file_digest_hex((a / f).string()) == file_digest_hex((b / f).string()));
  // Identical inputs and seed give byte-identical manifests.
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));

  const json manifest = load_json_file((a / "manifest.json").string());
  CHECK(manifest.at("schema").get<int>() == 1);
  CHECK(manifest.at("command").get<std::string>() == "simulate");
}

TEST_CASE("the seed environment override matches the flag", "[cli]") {
  const fs::path flag_dir = fresh_dir("sim_seed9_flag");
  const fs::path env_dir = fresh_dir("sim_seed9_env");
  const fs::path other = fresh_dir("sim_seed7_other");
  REQUIRE(run_cli("simulate --builtin simple --seed 9 --out " +
                  flag_dir.string()) == 0);
  REQUIRE(run_shell(std::string("RMT_SEED=9 ") + RMTGRID_CLI_PATH +
                    " simulate --builtin simple --out " + env_dir.string()) == 0);
  REQUIRE(run_cli("simulate --builtin simple --seed 7 --out " + other.string()) ==
          0);

  CHECK(file_digest_hex((flag_dir / "P.csv").string()) ==
        file_digest_hex((env_dir / "P.csv").string()));
  CHECK(file_digest_hex((flag_dir / "P.csv").string()) !=
        file_digest_hex((other / "P.csv").string()));
}

TEST_CASE("simulate rejects a missing scenario file", "[cli]") {
  const fs::path out = fresh_dir("sim_missing");
  CHECK(run_cli("simulate --scenario /nonexistent/scenario.json --out " +
                out.string()) == 2);
}

TEST_CASE("detect with defaults localizes the metering frauds", "[cli]") {
  const fs::path out = fresh_dir("detect_simple_dt1");
  const fs::path& sim = simple_dir();
  REQUIRE(run_cli("detect --p " + (sim / "P.csv").string() + " --u " +
                  (sim / "U.csv").string() + " --jobs 8 --out " +
                  out.string()) == 0);

  const json report = load_json_file((out / "report.json").string());
  CHECK(report.at("window").at("T").get<int>() == 100);
  CHECK(report.at("window").at("dT").get<int>() == 1);

  bool n6 = false, n14 = false;
  for (const json& e : report.at("events")) {
    if (e.at("kind").get<std::string>() != "fraud") continue;
    const std::string node = e.at("node").get<std::string>();
    REQUIRE((node == "n6" || node == "n14"));
    CHECK(std::llabs(e.at("t_start").get<std::int64_t>() - 5600) <= 5);
    CHECK(std::llabs(e.at("t_end").get<std::int64_t>() - 6800) <= 5);
    (node == "n6" ? n6 : n14) = true;
  }
  CHECK(n6);
  CHECK(n14);
  CHECK(fs::exists(out / "state_trace.csv"));
  CHECK(fs::exists(out / "trace_n6.csv"));
  CHECK(fs::exists(out / "manifest.json"));
}

TEST_CASE("a wider band flags fewer state windows", "[cli]") {
  const fs::path& sim = simple_dir();
  const fs::path narrow = fresh_dir("detect_eps_default");
  const fs::path wide = fresh_dir("detect_eps_wide");
  REQUIRE(run_cli("detect --p " + (sim / "P.csv").string() + " --u " +
                  (sim / "U.csv").string() + " --dT 4 --jobs 8 --out " +
                  narrow.string()) == 0);
  REQUIRE(run_cli("detect --p " + (sim / "P.csv").string() + " --u " +
                  (sim / "U.csv").string() + " --dT 4 --epsilon 3.0 --jobs 8 --out " +
                  wide.string()) == 0);

  const auto h1_narrow = load_json_file((narrow / "report.json").string())
                             .at("state_h1_windows")
                             .get<std::int64_t>();
  const auto h1_wide = load_json_file((wide / "report.json").string())
                           .at("state_h1_windows")
                           .get<std::int64_t>();
  CHECK(h1_wide <= h1_narrow);
}

TEST_CASE("the likelihood-ratio statistic rejects square windows", "[cli]") {
  const fs::path out = fresh_dir("detect_lr_domain");
  const fs::path& sim = simple_dir();
  CHECK(run_cli("detect --p " + (sim / "P.csv").string() + " --u " +
                (sim / "U.csv").string() +
                " --phi likelihoodRatio --T 33 --dT 16 --out " +
                out.string()) == 3);
}

TEST_CASE("detect requires its telemetry arguments", "[cli]") {
  CHECK(run_cli("detect --p only_power.csv") == 2);
  CHECK(run_cli("nonsense-subcommand") == 2);
}

TEST_CASE("estimation recovers the declared mixture of node 20", "[cli]") {
  const fs::path out = fresh_dir("estimate_complex");
  const fs::path& sim = complex_dir();
  const fs::path& det = complex_detect_dir();
  REQUIRE(run_cli("estimate --p " + (sim / "P.csv").string() + " --library " +
                  (sim / "library.json").string() + " --report " +
                  (det / "report.json").string() + " --out " + out.string()) == 0);

  const json truth = load_json_file((sim / "truth.json").string());
  const json ests = load_json_file((out / "estimates.json").string());

  const json* n20 = nullptr;
  for (const json& e : ests.at("nodes"))
    if (e.at("node").get<std::string>() == "n20") n20 = &e;
  REQUIRE(n20 != nullptr);
  REQUIRE(n20->at("has_ulp").get<bool>());

  const json& coef = n20->at("with_ulp").at("coefficients");
  const json& truth_row = truth.at("coefficients").at(19);
  for (int i = 0; i < 4; ++i) {
    const std::string id = "p" + std::to_string(i + 1);
    CHECK(std::abs(coef.at(id).get<double>() - truth_row.at(i).get<double>()) <=
          0.05);
  }
  CHECK(std::abs(coef.at("u_n20").get<double>() - truth_row.at(4).get<double>()) <=
        0.05);
  CHECK(n20->at("without_ulp").at("residual_norm").get<double>() >
        n20->at("with_ulp").at("residual_norm").get<double>());
  CHECK(fs::exists(out / "reconstruction.csv"));

  // Without augmentation the step profile is never attached.
  const fs::path plain = fresh_dir("estimate_complex_plain");
  REQUIRE(run_cli("estimate --p " + (sim / "P.csv").string() + " --library " +
                  (sim / "library.json").string() + " --report " +
                  (det / "report.json").string() + " --no-ulp --out " +
                  plain.string()) == 0);
  const json plain_ests = load_json_file((plain / "estimates.json").string());
  for (const json& e : plain_ests.at("nodes"))
    CHECK_FALSE(e.at("has_ulp").get<bool>());
}

TEST_CASE("an empty pattern library is a rank error", "[cli]") {
  const fs::path out = fresh_dir("estimate_empty_lib");
  const fs::path& sim = simple_dir();
  const fs::path lib = out / "empty_library.json";
  const fs::path report = out / "empty_report.json";
  save_json_file(lib.string(), json{{"schema", 1},
                                    {"samples_per_day", 9600},
                                    {"base_load_mw", json::array()},
                                    {"tlps", json::array()}});
  save_json_file(report.string(), json{{"schema", 1}, {"events", json::array()}});
  CHECK(run_cli("estimate --p " + (sim / "P.csv").string() + " --library " +
                lib.string() + " --report " + report.string() + " --out " +
                out.string()) == 3);
}

TEST_CASE("distribution checks pass on synthetic matrices", "[cli]") {
  const fs::path mp = fresh_dir("check_mp");
  REQUIRE(run_cli("rmt-check --gaussian 400 1000 --law mp --seed 1 --out " +
                  mp.string()) == 0);
  const json mp_diag = load_json_file((mp / "diagnostics.json").string());
  CHECK(mp_diag.at("pass").get<bool>());
  CHECK(mp_diag.at("law").get<std::string>() == "mp");

  const fs::path ring = fresh_dir("check_ring");
  REQUIRE(run_cli("rmt-check --gaussian 100 400 --law ring --seed 2 --out " +
                  ring.string()) == 0);
  const json ring_diag = load_json_file((ring / "diagnostics.json").string());
  CHECK(ring_diag.at("pass").get<bool>());
}
