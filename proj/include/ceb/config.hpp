#pragma once

// Key-value config files with [simulation] and [dgp] sections:
//
//   [simulation]
//   replicates = 2000
//   J_grid = 5, 10, 50
//   arms = naive, ceb_mm
//
// `#` and `;` start comments. List values are comma separated and may be
// wrapped in brackets. Unknown sections or keys are rejected.

#include "ceb/semisynth.hpp"
#include "ceb/simharness.hpp"

#include <filesystem>
#include <iosfwd>

namespace ceb::config {

sim::SimConfig read_sim_config(std::istream& in);
sim::SimConfig read_sim_config(const std::filesystem::path& path);

semisynth::DgpConfig read_dgp_config(std::istream& in);
semisynth::DgpConfig read_dgp_config(const std::filesystem::path& path);

}  // namespace ceb::config
