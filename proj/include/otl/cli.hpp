#pragma once

// Experiment orchestration: configuration, seeding, persistence of runs and
// reports. Configuration comes from a JSON file plus key=value overrides;
// flags win. Each run writes its result files under <out>/<run-id>/ where the
// run id is a hash of the resolved configuration, so identical configurations
// land in the same place and reproduce byte-identical results.

#include <string>
#include <vector>

namespace otl {

struct CliOutcome {
  int exit_code = 0;       // 0 ok, 1 error, 2 bound violations (see findings.json)
  std::string run_dir;     // populated on success
  std::string message;     // error text when exit_code == 1
};

// args excludes the program name: {"gen", "--seed", "7", "d=4", ...}.
CliOutcome run_cli(const std::vector<std::string>& args);

}  // namespace otl
