#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hwanno::cli {

inline constexpr int kOk = 0;
inline constexpr int kInputError = 2;
inline constexpr int kPhaseError = 3;

// Runs one command line (args excludes the program name) and returns the exit
// code. Normal output goes to out, diagnostics to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hwanno::cli
