#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace excepta::cli {

enum ExitCode { kOk = 0, kUsage = 1, kValidation = 2, kNumerical = 3 };

// Runs `excepta <command> --config <file> [--out <dir>] [--seed <u64>] [--jobs <n>]`.
// args excludes the program name. Results go to `out`; errors are JSON on `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::vector<std::string> commands();

// Formatting used for every artifact: 12 significant digits, −0 printed as 0.
std::string format_number(double x);

}  // namespace excepta::cli
