#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "perfpd/report.hpp"

int main(int argc, char** argv) {
  using namespace perfpd;
  RunManifest manifest;
  try {
    std::string help;
    auto parsed = parse_cli(argc, argv, nullptr, &help);
    if (!parsed) {
      std::cout << help;
      return 0;
    }
    manifest = *parsed;
  } catch (const UsageError& e) {
    std::cerr << "perfpd: " << e.what() << "\nRun with --help for usage.\n";
    return 2;
  }

  try {
    const RunManifest done = execute_run(manifest);
    std::cout << done.run_dir << '\n';
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "perfpd: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "perfpd: run failed: " << e.what() << '\n';
    return 1;
  }
}
