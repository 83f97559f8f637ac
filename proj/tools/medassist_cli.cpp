#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "medassist/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"medassist: simulated assist-as-needed medication reminders"};
  app.require_subcommand(1);

  std::string scenario, condition, out_dir, dir, questionnaires;
  std::uint64_t seed = 0;
  int seeds = 0, jobs = 1;
  std::uint64_t first_seed = 1;
  std::vector<std::string> conditions;

  auto* run = app.add_subcommand("run", "run one seeded episode");
  run->add_option("--scenario", scenario, "scenario JSON file")->required();
  run->add_option("--condition", condition, "A (verbal only) or B (full guidance)")->required();
  run->add_option("--seed", seed, "random seed")->required();
  run->add_option("--out", out_dir, "output directory")->required();

  auto* batch = app.add_subcommand("batch", "run paired seeds under each condition and aggregate");
  batch->add_option("--scenario", scenario, "scenario JSON file")->required();
  batch->add_option("--seeds", seeds, "number of seeds")->required();
  batch->add_option("--out", out_dir, "output directory")->required();
  batch->add_option("--conditions", conditions, "conditions to run (default A B)")->delimiter(',');
  batch->add_option("--first-seed", first_seed, "first seed value");
  batch->add_option("--questionnaires", questionnaires, "questionnaire CSV to include in the report");
  batch->add_option("--jobs", jobs, "concurrent runs");

  auto* report = app.add_subcommand("report", "regenerate the report from stored logs");
  report->add_option("--dir", dir, "run directory")->required();
  report->add_option("--questionnaires", questionnaires, "questionnaire CSV to include in the report");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return medassist::cli::cmd_run(scenario, condition, seed, out_dir, std::cout);
    if (*batch)
      return medassist::cli::cmd_batch(scenario, seeds, out_dir, conditions, questionnaires, jobs, std::cout,
                                       first_seed);
    if (*report) return medassist::cli::cmd_report(dir, questionnaires, std::cout);
  } catch (const medassist::Error& e) {
    std::cerr << "error [" << medassist::to_string(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
