#pragma once

#include "srhc/certify.hpp"
#include "srhc/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace srhc {

// Stage names in execution order.
const std::vector<std::string>& pipeline_stage_names();

// Parses "synth,solve,..." or "all"; the result is deduplicated and in
// execution order.
std::vector<std::string> parse_stage_list(const std::string& list);

// Adds the stages each requested stage depends on.
std::vector<std::string> close_stage_list(const std::vector<std::string>& stages);

struct RunManifest {
  std::string scenario;  // builtin name or path to a JSON file
  std::vector<std::string> stages;
  std::string out_dir;
  std::uint64_t seed = 1;
  std::vector<std::string> overrides;  // key=value
  std::size_t paths = 1000;
  int steps = 10000;
  int theorem2_k_max = 50;
  std::size_t theorem2_inner = 100;
};

class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& cause)
      : Error("stage " + stage + ": " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct RunResult {
  std::vector<DriftCertificate> certificates;
  std::vector<std::string> expected_failures;
  std::vector<std::string> stages_run;
  bool all_pass = true;  // expected failures excluded

  int exit_code() const { return all_pass ? 0 : 1; }
};

struct Artifacts {
  std::map<std::string, std::string> files;  // file name -> contents
  RunResult result;
};

// Runs the requested stages; nothing touches the filesystem except reading a
// scenario file. Scenario lookup failures propagate as NotFoundError, stage
// failures as StageError.
Artifacts execute_pipeline(const RunManifest& manifest);

// Writes all artifacts into a fresh sibling directory, then renames it over
// `out_dir`.
void write_artifacts(const Artifacts& artifacts, const std::string& out_dir);

}  // namespace srhc
