#pragma once

// Command implementations behind the C API: every command reads a RunConfig,
// writes its data files under output.directory and returns a JSON summary.

#include "qptorus/config.hpp"

#include <filesystem>
#include <string>

namespace qpt::runner {

/// 0 quiet, 1 progress (default), 2 detail. Progress goes to stdout.
void set_log_level(int level);
[[nodiscard]] int log_level();

/// n * prod(U_i) + d (+1 for a model parameter).
[[nodiscard]] std::size_t unknown_count(const config::RunConfig& cfg);

/// Branch files: <prefix>.branch.csv, .points.json, .summary.json. A stalled
/// branch is written in full before BranchStall is thrown.
[[nodiscard]] std::string cmd_continue(const config::RunConfig& cfg);

/// Floquet (d = 1) or Lyapunov (d >= 2) verdicts for every point; rewrites
/// the branch files with verdicts and tags and writes <prefix>.stability.csv.
[[nodiscard]] std::string cmd_stability(const config::RunConfig& cfg, const std::filesystem::path& branch);

/// d = 2 seed next to an NS point, written to <prefix>.seed.json.
[[nodiscard]] std::string cmd_ns_init(const config::RunConfig& cfg, const std::filesystem::path& branch,
                                      std::size_t index, double epsilon);

/// Time integration against point `index`; writes <prefix>.compare_<i>.json
/// and the two spectra. `self_compare` compares the run with itself.
[[nodiscard]] std::string cmd_compare(const config::RunConfig& cfg, const std::filesystem::path& branch,
                                      std::size_t index, bool self_compare = false);

/// A branch argument may name the CSV or the points JSON; both resolve to the JSON.
[[nodiscard]] std::filesystem::path points_file(const std::filesystem::path& branch);

}  // namespace qpt::runner
