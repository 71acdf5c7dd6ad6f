#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "covren/cli.hpp"

namespace {

struct CliRun {
  int exit_code = 0;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  std::vector<const char*> argv{"covren"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliRun r;
  r.exit_code = covren::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("fisher prints the curvature constant") {
  const CliRun r = cli({"fisher", "--family", "exponential", "--params", "1.0"});
  CHECK(r.exit_code == 0);
  CHECK(r.out == "c = 1.000000\n");

  const CliRun j = cli({"fisher", "--family", "gamma", "--params", "3,1",
                        "--format", "json"});
  CHECK(j.exit_code == 0);
  CHECK(nlohmann::json::parse(j.out)["c"].get<double>() == doctest::Approx(3.0));
}

TEST_CASE("capacity prints nats per second") {
  const CliRun r = cli({"capacity", "--family", "exponential", "--params", "1.0",
                        "--mu", "2.0"});
  CHECK(r.exit_code == 0);
  CHECK(r.out == "0.693147 nats/s\n");
}

TEST_CASE("plan prints the three sizing formulas") {
  const CliRun r = cli({"plan", "--N", "10000", "--epsilon", "0.1", "--zeta",
                        "0.1", "--family", "exponential", "--params", "1.0"});
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("psi = 0.999769") != std::string::npos);
  CHECK(r.out.find("rho_buffer = 0.00100012") != std::string::npos);
  CHECK(r.out.find("rho_insert = 0.0465289") != std::string::npos);
}

TEST_CASE("kl pairs the exact divergence with its expansion") {
  const CliRun r = cli({"kl", "--family", "exponential", "--params", "1",
                        "--rho", "0.1", "--format", "json"});
  CHECK(r.exit_code == 0);
  const nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK(j["kl"].get<double>() == doctest::Approx(0.0053605).epsilon(1e-4));
  CHECK(j["kl_small_rho"].get<double>() == doctest::Approx(0.005).epsilon(1e-12));

  const CliRun two = cli({"kl", "--family", "exponential", "--params", "1",
                          "--family2", "gamma", "--params2", "2,1",
                          "--format", "json"});
  CHECK(two.exit_code == 0);
  CHECK(nlohmann::json::parse(two.out)["kl"].get<double>() > 0.0);
}

TEST_CASE("regcheck reports the support verdict") {
  const CliRun r = cli({"regcheck", "--family", "uniform", "--params", "1,2",
                        "--format", "json"});
  CHECK(r.exit_code == 0);
  const nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK_FALSE(j["support_ok"].get<bool>());
  CHECK_FALSE(j["all_met"].get<bool>());
}

TEST_CASE("insert emits the pinned flat record") {
  const CliRun r = cli({"insert", "--family", "exponential", "--params", "1",
                        "--N", "20000", "--epsilon", "0.5", "--zeta", "0.5",
                        "--seed", "3", "--format", "json"});
  CHECK(r.exit_code == 0);
  const nlohmann::json j = nlohmann::json::parse(r.out);
  const std::vector<std::string> expected = {"N",  "epsilon", "zeta", "psi",
                                             "rho_insert", "seed", "m", "Nc",
                                             "No", "Noc", "K", "failed"};
  CHECK(j.size() == expected.size());
  for (const std::string& k : expected) CHECK(j.contains(k));
  CHECK(j["Noc"].get<std::int64_t>() ==
        j["Nc"].get<std::int64_t>() + j["No"].get<std::int64_t>());
}

TEST_CASE("timing emits its flat record") {
  const CliRun r = cli({"timing", "--family", "exponential", "--params", "1",
                        "--N", "100000", "--epsilon", "0.2", "--zeta", "0.1",
                        "--mu", "2", "--n", "20", "--M", "32", "--seed", "3",
                        "--format", "json"});
  CHECK(r.exit_code == 0);
  const nlohmann::json j = nlohmann::json::parse(r.out);
  for (const char* k : {"N", "mu", "n", "M", "decoded_ok", "failed_buffer",
                        "bits_sent", "psi"}) {
    CHECK(j.contains(k));
  }
}

TEST_CASE("detect names its detector") {
  const CliRun r = cli({"detect", "--family", "exponential", "--params", "1",
                        "--detector", "lrt", "--rho", "0.2", "--n", "200",
                        "--trials", "150", "--seed", "9", "--format", "json"});
  CHECK(r.exit_code == 0);
  const nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK(j["detector"] == "lrt");
  CHECK(j["p_fa"].get<double>() >= 0.0);
  CHECK(j["p_md"].get<double>() <= 1.0);
  CHECK(j["trials"].get<int>() == 150);
}

TEST_CASE("fixed seeds give byte-identical output") {
  const std::vector<std::string> args = {
      "insert", "--family", "exponential", "--params", "1", "--N", "20000",
      "--epsilon", "0.5", "--zeta", "0.5", "--seed", "11"};
  const CliRun a = cli(args);
  const CliRun b = cli(args);
  CHECK(a.exit_code == 0);
  CHECK(a.out == b.out);
  auto different = args;
  different.back() = "12";
  CHECK(cli(different).out != a.out);
}

TEST_CASE("every subcommand honors --format") {
  for (const std::string& fmt : {"text", "json", "csv"}) {
    CHECK(cli({"fisher", "--family", "exponential", "--params", "1",
               "--format", fmt}).exit_code == 0);
    CHECK(cli({"capacity", "--family", "exponential", "--params", "1", "--mu",
               "2", "--format", fmt}).exit_code == 0);
    CHECK(cli({"kl", "--family", "exponential", "--params", "1", "--rho",
               "0.1", "--format", fmt}).exit_code == 0);
    CHECK(cli({"plan", "--N", "100000", "--epsilon", "0.2", "--zeta", "0.1",
               "--format", fmt}).exit_code == 0);
    CHECK(cli({"regcheck", "--family", "gamma", "--params", "2,1", "--format",
               fmt}).exit_code == 0);
    CHECK(cli({"insert", "--N", "20000", "--epsilon", "0.5", "--zeta", "0.5",
               "--format", fmt}).exit_code == 0);
  }
}

TEST_CASE("usage errors exit 1, infeasible parameters exit 2") {
  CHECK(cli({"frobnicate"}).exit_code == 1);
  CHECK(cli({"fisher", "--no-such-flag"}).exit_code == 1);
  CHECK(cli({"fisher", "--family", "cauchy", "--params", "1"}).exit_code == 1);
  CHECK(cli({}).exit_code == 1);

  // Valid syntax, infeasible operating point.
  CHECK(cli({"insert", "--N", "10000", "--epsilon", "0.1", "--zeta", "0.1"})
            .exit_code == 2);
  CHECK(cli({"capacity", "--family", "exponential", "--params", "1", "--mu",
             "0.5"}).exit_code == 2);
  CHECK(cli({"fisher", "--family", "uniform", "--params", "1,2"}).exit_code == 2);
}

TEST_CASE("config files override flags") {
  const std::string path = "cli_config.tmp.json";
  {
    std::ofstream out(path);
    out << R"({"epsilon": 0.5, "zeta": 0.5, "N": 30000})";
  }
  const CliRun r = cli({"insert", "--family", "exponential", "--params", "1",
                        "--N", "20000", "--epsilon", "0.1", "--zeta", "0.1",
                        "--config", path, "--format", "json"});
  std::filesystem::remove(path);
  CHECK(r.exit_code == 0);
  const nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK(j["N"].get<std::int64_t>() == 30000);
  CHECK(j["epsilon"].get<double>() == 0.5);
}

TEST_CASE("sweep runs from a config file") {
  const std::string config_path = "cli_sweep.tmp.json";
  const std::string out_path = "cli_sweep_out.tmp.jsonl";
  {
    std::ofstream out(config_path);
    nlohmann::json j;
    j["scenario"] = "buffer_only";
    j["spec"] = {{"family", "exponential"}, {"params", {1.0}}, {"scale_factor", 1.0}};
    j["grid"] = {{"N", {2000.0}}, {"epsilon", {0.1}}};
    j["trials"] = 4;
    j["base_seed"] = 5;
    j["output_path"] = out_path;
    out << j.dump();
  }
  const CliRun r = cli({"sweep", "--config", config_path});
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("4 records") != std::string::npos);
  CHECK(std::filesystem::exists(out_path));
  std::filesystem::remove(config_path);
  std::filesystem::remove(out_path);
}

}  // TEST_SUITE
