#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace galstab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// Runs the command line `args` (without the program name); returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

} // namespace galstab::cli
