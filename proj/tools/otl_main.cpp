#include <iostream>
#include <string>
#include <vector>

#include "otl/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  const otl::CliOutcome out = otl::run_cli(args);
  if (out.exit_code == 1) {
    std::cerr << "error: " << out.message << "\n";
  } else {
    std::cout << out.run_dir << "\n";
    if (out.exit_code == 2) std::cout << "findings recorded (exit 2)\n";
  }
  return out.exit_code;
}
