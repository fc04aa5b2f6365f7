#pragma once

// Command-line front end: fit-prior, posterior, estimate, simulate,
// semisynth, allocate.

#include "ceb/regimes.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace ceb::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// `args` excludes the program name. Results go to --out or `out`,
// diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ceb::cli
