#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace advsmooth {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumeric = 3 };

/// Entry point shared by the `advsmooth` executable and the tests.
/// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

}  // namespace advsmooth
