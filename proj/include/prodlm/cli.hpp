#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace prodlm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvariant = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitMismatch = 4;

/// `args` excludes the program name. `in` feeds the query REPL.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        std::istream& in);
int run(int argc, char** argv);

}  // namespace prodlm::cli
