#include "doctest.h"

#include "srhc/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace srhc;

namespace {

const DriftCertificate* find(const RunResult& r, const std::string& name) {
  for (const auto& c : r.certificates)
    if (c.name == name) return &c;
  return nullptr;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("stage lists") {
  const std::vector<std::string> all = {"synth", "solve", "certify", "simulate", "perf"};
  CHECK(pipeline_stage_names() == all);
  CHECK(parse_stage_list("all") == all);
  CHECK(parse_stage_list("perf,synth,perf") == std::vector<std::string>{"synth", "perf"});
  CHECK_THROWS_AS(parse_stage_list("synth,bogus"), ParseError);
  CHECK(close_stage_list({"certify"}) == std::vector<std::string>{"synth", "solve", "certify"});
  CHECK(close_stage_list({"perf"}) == all);
  CHECK(close_stage_list({"synth"}) == std::vector<std::string>{"synth"});
}

TEST_CASE("indicator certify run: expected failure does not flip the verdict, reruns are identical") {
  RunManifest m;
  m.scenario = "integrator-indicator";
  m.stages = parse_stage_list("certify");
  m.seed = 7;
  const Artifacts a = execute_pipeline(m);
  const Artifacts b = execute_pipeline(m);
  CHECK(a.files == b.files);

  const DriftCertificate* gfc = find(a.result, "geometric_from_costs");
  REQUIRE(gfc != nullptr);
  CHECK_FALSE(gfc->pass);
  CHECK(gfc->reason == "c_s not radially unbounded");
  CHECK(std::find(a.result.expected_failures.begin(), a.result.expected_failures.end(), "geometric_from_costs") !=
        a.result.expected_failures.end());
  const DriftCertificate* a3 = find(a.result, "a3");
  REQUIRE(a3 != nullptr);
  CHECK(a3->pass);
  CHECK(a.result.all_pass);
  CHECK(a.result.exit_code() == 0);
  CHECK(a.files.count("certificates.csv") == 1);
  CHECK(a.files.count("manifest.json") == 1);
}

TEST_CASE("unknown scenario and stage failures") {
  RunManifest m;
  m.scenario = "no-such-scenario";
  m.stages = {"synth"};
  CHECK_THROWS_AS(execute_pipeline(m), NotFoundError);

  m.scenario = "lq";
  m.overrides = {"N=0"};
  try {
    execute_pipeline(m);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(std::string(e.what()).rfind("stage ", 0) == 0);
  }
}

TEST_CASE("artifacts replace the output directory") {
  const auto dir = std::filesystem::temp_directory_path() / "srhc_pipeline_test_out";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "stale.txt") << "old";

  RunManifest m;
  m.scenario = "lq";
  m.stages = parse_stage_list("synth");
  const Artifacts a = execute_pipeline(m);
  write_artifacts(a, dir.string());
  CHECK_FALSE(std::filesystem::exists(dir / "stale.txt"));
  for (const auto& [name, body] : a.files) CHECK(slurp(dir / name) == body);
  const std::string synth = slurp(dir / "synthesis.csv");
  CHECK(synth.rfind("quantity,value\r\n", 0) == 0);
  CHECK(synth.find("lambda_circ") != std::string::npos);
  std::filesystem::remove_all(dir);
}
