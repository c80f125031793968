// srhc: run a scenario through synthesis, value-function solve, drift
// certificates, simulation and performance checks.
//
// Exit status: 0 when every certificate passes (expected failures excepted),
// 1 when some certificate fails, 2 for an unknown scenario, 3 for a stage error.

#include "srhc/pipeline.hpp"
#include "srhc/scenario.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Stochastic receding-horizon control toolkit"};
  app.require_subcommand(1);

  srhc::RunManifest m;
  std::string stages = "all";
  CLI::App* run = app.add_subcommand("run", "Run a scenario pipeline");
  run->add_option("--scenario", m.scenario, "Builtin scenario name or path to a JSON scenario")->required();
  run->add_option("--stages", stages, "Comma list of synth,solve,certify,simulate,perf, or all")
      ->capture_default_str();
  run->add_option("--seed", m.seed, "Base seed for all Monte Carlo estimates")->capture_default_str();
  run->add_option("--out", m.out_dir, "Output directory (replaced)")->required();
  run->add_option("--set", m.overrides, "Scenario override key=value (N, alpha, U_max, grid_points or a dotted path)");
  run->add_option("--paths", m.paths, "Simulated paths")->capture_default_str()->check(CLI::Range(2, 100000000));
  run->add_option("--steps", m.steps, "Simulated steps T")->capture_default_str()->check(CLI::Range(1, 100000000));
  run->add_option("--thm2-k-max", m.theorem2_k_max, "Largest k of the Theorem-2 check")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  run->add_option("--thm2-inner", m.theorem2_inner, "Inner rollouts per outer state in the Theorem-2 check")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  app.add_subcommand("list", "List builtin scenarios")->callback([] {
    for (const auto& n : srhc::builtin_names()) std::cout << n << "\n";
  });

  CLI11_PARSE(app, argc, argv);
  if (!run->parsed()) return 0;

  try {
    m.stages = srhc::parse_stage_list(stages);
  } catch (const srhc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }

  try {
    const srhc::Artifacts a = srhc::execute_pipeline(m);
    srhc::write_artifacts(a, m.out_dir);
    for (const auto& c : a.result.certificates) {
      const bool expected = std::find(a.result.expected_failures.begin(), a.result.expected_failures.end(), c.name) !=
                            a.result.expected_failures.end();
      std::cout << (c.pass ? "PASS " : expected ? "XFAIL " : "FAIL ") << c.name;
      if (!c.pass && !c.reason.empty()) std::cout << " (" << c.reason << ")";
      std::cout << "\n";
    }
    std::cout << "wrote " << a.files.size() << " files to " << m.out_dir << "\n";
    return a.result.exit_code();
  } catch (const srhc::NotFoundError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const srhc::StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: stage output: " << e.what() << "\n";
    return 3;
  }
}
