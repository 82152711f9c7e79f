#pragma once

// Artifact output: atomic file writes and the trajectory log format.

#include <filesystem>
#include <string>
#include <string_view>

#include "mspgd/simulation.hpp"

namespace mspgd::io {

/// Writes `content` to a temporary file next to `path`, then renames it over
/// `path`, so readers never observe a partial file. Creates parent
/// directories. Throws ConfigError when the location is not writable.
void write_atomic(const std::filesystem::path& path, std::string_view content);

/// Throws ConfigError unless `dir` exists (or can be created) and accepts files.
void ensure_writable_directory(const std::filesystem::path& dir);

/// Columns: iteration,time_s,J_plus,J_minus,deltaJ,param_1..param_k,eta,saturated_count.
std::string trajectory_csv(const control::Trajectory& trajectory, std::size_t parameter_count);

}  // namespace mspgd::io
