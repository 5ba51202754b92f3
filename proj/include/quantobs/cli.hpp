#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace quantobs::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitParse = 2;
inline constexpr int kExitPrecondition = 3;
inline constexpr int kExitInapplicable = 4;

inline constexpr const char* kToolVersion = "0.1.0";

// Runs the command line tool with args (argv without the program name).
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace quantobs::cli
