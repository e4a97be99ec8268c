#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

using nlohmann::json;

struct RunResult {
  int exit_code = -1;
  std::string out;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// Run the installed binary with stdout captured and stderr folded in.
RunResult run(const std::string& args) {
  const std::string out_path = "/tmp/subchain_cli_out.txt";
  const std::string cmd =
      std::string(CLI_PATH) + " " + args + " > " + out_path + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_path);
  return r;
}

json parse_report(const RunResult& r) {
  return json::parse(r.out);
}

const char* kPointDir = "/tmp/subchain_cli_fixtures";

void write_fixtures() {
  const int rc = std::system((std::string("mkdir -p ") + kPointDir).c_str());
  REQUIRE(rc == 0);
  spit(std::string(kPointDir) + "/mf_point.json",
       R"({"X": {"rows": 2, "cols": 2, "data": [0.5, -0.2, 0.3, 0.7]},
           "Y": {"rows": 2, "cols": 3, "data": [1.0, 0.2, -0.3, 0.6, -0.1, 0.4]}})");
  spit(std::string(kPointDir) + "/mf_target.json",
       R"({"rows": 2, "cols": 2, "data": [0.003, -0.001, 0.002, 0.0005]})");
  spit(std::string(kPointDir) + "/mf_target_big.json",
       R"({"rows": 2, "cols": 2, "data": [3.0, -1.0, 2.0, 0.5]})");
  spit(std::string(kPointDir) + "/fm_target.json",
       R"({"d0": 3, "pairs": [{"i": 1, "j": 2, "value": 0.004},
                              {"i": 1, "j": 3, "value": -0.002},
                              {"i": 2, "j": 3, "value": 0.0}]})");
  spit(std::string(kPointDir) + "/dataset.jsonl",
       "{\"d0\": 4}\n"
       "{\"y\": 1.0, \"x\": {\"1\": 0.5, \"2\": -1.2}}\n"
       "{\"y\": -0.5, \"x\": {\"2\": 0.8, \"3\": 0.4}}\n");
  spit(std::string(kPointDir) + "/dataset_bad.jsonl",
       "{\"d0\": 4}\n"
       "{\"y\": 1.0, \"x\": {\"1\": 0.5, \"2\": -1.2}}\n"
       "{\"y\": -0.5, \"x\": {\"1\": 0.8, \"2\": 0.4}}\n");
  spit(std::string(kPointDir) + "/params.json",
       R"({"rows": 2, "cols": 4, "data": [0.3, -0.1, 0.4, 0.2, 0.6, 0.5, -0.2, 0.1]})");
}

std::string fixture(const std::string& name) {
  return std::string(kPointDir) + "/" + name;
}

}  // namespace

TEST_CASE("eval reports the full envelope") {
  write_fixtures();
  const RunResult r =
      run("eval --map mf --point " + fixture("mf_point.json") + " --seed 4");
  REQUIRE(r.exit_code == 0);
  const json rep = parse_report(r);
  CHECK(rep.at("version").is_string());
  CHECK(rep.at("command").get<std::string>().find("eval --map mf") !=
        std::string::npos);
  CHECK(rep.at("seed") == 4);
  CHECK(rep.contains("generated_at"));
  CHECK(rep.at("result").at("out_dim") == 6);
  CHECK(rep.at("result").at("output").size() == 6);
}

TEST_CASE("jacobian check passes on catalog maps") {
  write_fixtures();
  const RunResult r = run("jacobian-check --map mf --point " +
                          fixture("mf_point.json") + " --samples 25 --seed 8");
  REQUIRE(r.exit_code == 0);
  const json rep = parse_report(r);
  CHECK(rep.at("result").at("passed").get<bool>());
  CHECK(rep.at("result").at("max_relative_error").get<double>() <= 1e-6);
  CHECK(rep.at("tolerances").at("central_difference_step") == 1e-5);
}

TEST_CASE("preimage strict mode separates exit codes by admissibility") {
  write_fixtures();
  const RunResult ok = run("preimage --map mf --target " +
                           fixture("mf_target.json") + " --d 2");
  REQUIRE(ok.exit_code == 0);
  const json rep = parse_report(ok);
  CHECK(rep.at("result").at("residual").get<double>() <= 1e-10);
  CHECK(rep.at("result").at("guaranteed").get<bool>());

  const RunResult refused = run("preimage --map mf --target " +
                                fixture("mf_target_big.json") + " --d 2");
  CHECK(refused.exit_code == 1);

  const RunResult best =
      run("preimage --map mf --target " + fixture("mf_target_big.json") +
          " --d 2 --mode best-effort");
  REQUIRE(best.exit_code == 0);
  CHECK_FALSE(parse_report(best).at("result").at("guaranteed").get<bool>());
}

TEST_CASE("preimage solves pairwise targets from the origin shape") {
  write_fixtures();
  const RunResult r = run("preimage --map fm --target " +
                          fixture("fm_target.json") + " --d 4");
  REQUIRE(r.exit_code == 0);
  const json rep = parse_report(r);
  CHECK(rep.at("result").at("residual").get<double>() <= 1e-10);
  CHECK(rep.at("result").at("point").at("map") == "fm");
}

TEST_CASE("missing inputs are usage errors, not failures") {
  write_fixtures();
  CHECK(run("preimage --map mf --target " + fixture("mf_target.json"))
            .exit_code == 2);
  CHECK(run("certify").exit_code == 2);
  CHECK(run("eval --map bogus --point " + fixture("mf_point.json"))
            .exit_code == 2);
  CHECK(run("eval --map mf --point /definitely/missing.json").exit_code == 2);
  CHECK(run("nonsense-subcommand").exit_code == 2);
  CHECK(run("--help").exit_code == 0);
}

TEST_CASE("qualify gates its exit code on the overlap condition") {
  write_fixtures();
  const RunResult good = run("qualify --dataset " + fixture("dataset.jsonl"));
  REQUIRE(good.exit_code == 0);
  CHECK(parse_report(good).at("result").at("ok").get<bool>());

  const RunResult bad = run("qualify --dataset " + fixture("dataset_bad.jsonl"));
  REQUIRE(bad.exit_code == 1);
  const json rep = parse_report(bad);
  CHECK_FALSE(rep.at("result").at("ok").get<bool>());
  CHECK(rep.at("result").at("violations").size() == 1);
  // violations cite 1-based sample numbers
  CHECK(rep.at("result").at("violations")[0].at("sample_a") == 1);
  CHECK(rep.at("result").at("violations")[0].at("sample_b") == 2);
}

TEST_CASE("training subdifferential runs end to end") {
  write_fixtures();
  const RunResult r = run("subdiff-fm --dataset " + fixture("dataset.jsonl") +
                          " --params " + fixture("params.json"));
  REQUIRE(r.exit_code == 0);
  const json rep = parse_report(r);
  CHECK(rep.at("result").at("zonotope").at("center").size() == 8);
  CHECK(rep.at("result").at("d0") == 4);

  const RunResult bad = run("subdiff-fm --dataset " +
                            fixture("dataset_bad.jsonl") + " --params " +
                            fixture("params.json"));
  CHECK(bad.exit_code == 1);
}

TEST_CASE("certificates exit zero exactly when confirmed") {
  const RunResult r = run("certify --case ex-negative --samples 500 --seed 6");
  REQUIRE(r.exit_code == 0);
  const json rep = parse_report(r);
  CHECK(rep.at("result").at("verdict") == "confirmed");
  CHECK(rep.at("result").at("statistics").at("support_plus") == 2.0);
}

TEST_CASE("reports reproduce byte-identically apart from the timestamp") {
  const std::string out_a = "/tmp/subchain_cli_rep_a.json";
  const std::string out_b = "/tmp/subchain_cli_rep_b.json";
  const std::string cmd =
      "certify --case neumf-defect --trials 20 --seed 12 --out ";
  REQUIRE(run(cmd + out_a).exit_code == 0);
  REQUIRE(run(cmd + out_b).exit_code == 0);
  json a = json::parse(slurp(out_a));
  json b = json::parse(slurp(out_b));
  CHECK(a.at("generated_at").is_string());
  a["generated_at"] = "";
  b["generated_at"] = "";
  a["command"] = "";
  b["command"] = "";  // differs only in the --out path
  CHECK(a == b);
}

TEST_CASE("phase sweep emits one row per dimension with a threshold flag") {
  const RunResult r = run(
      "phase-sweep --map mf --m 2 --n 2 --d-hi 2 --trials 3 --restarts 25 "
      "--seed 19");
  REQUIRE(r.exit_code == 0);
  const json rep = parse_report(r);
  const json& rows = rep.at("result").at("rows");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].at("d") == 1);
  CHECK_FALSE(rows[0].at("at_or_above_threshold").get<bool>());
  CHECK(rows[1].at("rate") == 1.0);
  CHECK(rep.at("result").at("threshold") == 2);
}
