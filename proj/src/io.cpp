#include "mspgd/io.hpp"

#include <fmt/format.h>

#include <fstream>
#include <system_error>

#include "mspgd/errors.hpp"

namespace mspgd::io {

void ensure_writable_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw ConfigError(fmt::format("output directory '{}' cannot be created", dir.string()));
  }
  const auto probe = dir / ".write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw ConfigError(fmt::format("output directory '{}' is not writable", dir.string()));
  }
  std::filesystem::remove(probe, ec);
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) ensure_writable_directory(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError(fmt::format("cannot write '{}'", tmp.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw ConfigError(fmt::format("write to '{}' failed", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw ConfigError(fmt::format("cannot move output into place at '{}'", path.string()));
  }
}

std::string trajectory_csv(const control::Trajectory& trajectory, std::size_t parameter_count) {
  fmt::memory_buffer out;
  fmt::format_to(std::back_inserter(out), "iteration,time_s,J_plus,J_minus,deltaJ");
  for (std::size_t k = 1; k <= parameter_count; ++k) fmt::format_to(std::back_inserter(out), ",param_{}", k);
  fmt::format_to(std::back_inserter(out), ",eta,saturated_count\n");
  for (const auto& row : trajectory.rows) {
    fmt::format_to(std::back_inserter(out), "{},{:.6f},{:.9g},{:.9g},{:.9g}", row.iteration, row.time_s, row.j_plus,
                   row.j_minus, row.delta_j);
    for (std::size_t k = 0; k < parameter_count; ++k) {
      const double p = k < row.parameters.size() ? row.parameters[k] : 0.0;
      fmt::format_to(std::back_inserter(out), ",{:.9g}", p);
    }
    fmt::format_to(std::back_inserter(out), ",{:.9g},{}\n", row.eta, row.saturated);
  }
  return fmt::to_string(out);
}

}  // namespace mspgd::io
