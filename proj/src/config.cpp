#include "mspgd/config.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "mspgd/errors.hpp"

namespace mspgd::config {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

// Thrown by the value parsers; turned into a line-anchored ConfigError.
struct BadValue {
  std::string why;
};

double to_double(std::string_view s) {
  if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) throw BadValue{fmt::format("'{}' is not a number", s)};
  return v;
}

double positive(std::string_view s) {
  const double v = to_double(s);
  if (!(v > 0.0)) throw BadValue{fmt::format("'{}' must be positive", s)};
  return v;
}

double non_negative(std::string_view s) {
  const double v = to_double(s);
  if (!(v >= 0.0)) throw BadValue{fmt::format("'{}' must be non-negative", s)};
  return v;
}

std::uint64_t to_unsigned(std::string_view s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw BadValue{fmt::format("'{}' is not a non-negative integer", s)};
  }
  return v;
}

std::size_t positive_count(std::string_view s) {
  const auto v = to_unsigned(s);
  if (v == 0) throw BadValue{"count must be positive"};
  return static_cast<std::size_t>(v);
}

bool to_bool(std::string_view s) {
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  throw BadValue{fmt::format("'{}' is not a boolean", s)};
}

std::vector<double> positive_list(std::string_view s) {
  std::vector<double> out;
  for (auto part : split(s, ',')) out.push_back(positive(part));
  return out;
}

std::vector<double> non_negative_list(std::string_view s) {
  std::vector<double> out;
  for (auto part : split(s, ',')) out.push_back(non_negative(part));
  return out;
}

using Setter = std::function<void(std::string_view)>;

std::map<std::string, Setter> key_table(ExperimentConfig& c) {
  auto& s = c.scenario;
  std::map<std::string, Setter> t;
  t["scenario.name"] = [&](auto v) { s.name = std::string(v); };

  t["turbulence.r0_ref"] = [&](auto v) { s.r0_ref = positive(v); };
  t["turbulence.wavelength_ref"] = [&](auto v) { s.wavelength_ref = positive(v); };
  t["turbulence.outer_scale"] = [&](auto v) { s.outer_scale = positive(v); };
  t["turbulence.wind"] = [&](auto v) {
    const auto parts = split(v, ',');
    if (parts.size() != 2) throw BadValue{"wind needs two components: vx, vy"};
    s.wind = {to_double(parts[0]), to_double(parts[1])};
  };
  t["turbulence.screen_pixels"] = [&](auto v) { s.screen_pixels = positive_count(v); };
  t["turbulence.subharmonic_levels"] = [&](auto v) { s.subharmonic_levels = static_cast<int>(to_unsigned(v)); };
  t["turbulence.static"] = [&](auto v) { s.static_screen = to_bool(v); };

  t["geometry.aperture_diameter"] = [&](auto v) { s.sampling.aperture_diameter = positive(v); };
  t["geometry.pupil_pixels"] = [&](auto v) { s.sampling.pupil_pixels = positive_count(v); };
  t["geometry.pad_factor"] = [&](auto v) { s.sampling.pad_factor = positive_count(v); };
  t["geometry.focal_length"] = [&](auto v) { s.fiber.focal_length = positive(v); };
  t["geometry.signal_wavelength"] = [&](auto v) { s.fiber.wavelength = positive(v); };

  t["mirror.actuator_count"] = [&](auto v) { s.mirror.actuator_count = positive_count(v); };
  t["mirror.influence_sigma"] = [&](auto v) { s.mirror.influence_sigma = positive(v); };
  t["mirror.voltage_gain"] = [&](auto v) { s.mirror.voltage_gain = positive(v); };
  t["mirror.voltage_limit"] = [&](auto v) { s.mirror.voltage_limit = positive(v); };

  t["basis.modes"] = [&](auto v) {
    try {
      s.modes = parse_mode_list(v);
    } catch (const ConfigError& e) {
      throw BadValue{e.what()};
    }
  };
  t["basis.map"] = [&](auto v) {
    if (v == "fitted") s.map_kind = control::ModalMapKind::kFitted;
    else if (v == "identity") s.map_kind = control::ModalMapKind::kIdentity;
    else throw BadValue{fmt::format("map '{}' is not 'fitted' or 'identity'", v)};
  };

  t["plant.apt_removes_tilt"] = [&](auto v) { s.apt_removes_tilt = to_bool(v); };
  t["plant.jitter_rms"] = [&](auto v) { s.jitter_rms = non_negative(v); };
  t["plant.jitter_bandwidth"] = [&](auto v) { s.jitter_bandwidth = positive(v); };
  t["plant.metric_noise"] = [&](auto v) { s.metric_noise = non_negative(v); };

  t["timing.iteration_rate"] = [&](auto v) { s.timing.iteration_rate = positive(v); };
  t["timing.readout_latency"] = [&](auto v) { s.timing.readout_latency = positive(v); };

  t["optimizer.mode"] = [&](auto v) {
    if (v == "spgd") s.mode = control::OptimizerMode::kSpgd;
    else if (v == "mspgd") s.mode = control::OptimizerMode::kModalSpgd;
    else throw BadValue{fmt::format("mode '{}' is not 'spgd' or 'mspgd'", v)};
  };
  t["optimizer.gain"] = [&](auto v) {
    if (v == "autotune") c.autotune.enabled = true;
    else s.gain = non_negative(v);
  };
  t["optimizer.amplitude"] = [&](auto v) {
    if (v == "autotune") c.autotune.enabled = true;
    else s.amplitude = positive(v);
  };
  t["optimizer.normalize_delta_j"] = [&](auto v) { s.normalize_delta_j = to_bool(v); };
  t["optimizer.scale_amplitude_by_order"] = [&](auto v) { s.scale_amplitude_by_order = to_bool(v); };

  t["autotune.amplitude_grid"] = [&](auto v) { c.autotune.amplitude_grid = positive_list(v); };
  t["autotune.gain_grid"] = [&](auto v) { c.autotune.gain_grid = non_negative_list(v); };
  t["autotune.trial_duration"] = [&](auto v) { c.autotune.trial_duration = positive(v); };
  t["autotune.trial_seeds"] = [&](auto v) { c.autotune.trial_seeds = positive_count(v); };

  t["run.duration"] = [&](auto v) { s.duration = non_negative(v); };
  t["run.seeds"] = [&](auto v) { c.run.seeds = positive_count(v); };
  t["run.first_seed"] = [&](auto v) { c.run.first_seed = to_unsigned(v); };
  t["run.output"] = [&](auto v) { c.run.output = std::string(v); };
  t["run.histogram_bins"] = [&](auto v) {
    c.run.histogram_bins = positive_count(v);
    if (c.run.histogram_bins < 2) throw BadValue{"at least 2 histogram bins are required"};
  };

  t["race.aberration_rms"] = [&](auto v) { c.race.aberration_rms = positive(v); };
  t["race.aberration_modes"] = [&](auto v) {
    try {
      c.race.aberration_modes = parse_mode_list(v);
    } catch (const ConfigError& e) {
      throw BadValue{e.what()};
    }
  };
  t["race.iterations"] = [&](auto v) { c.race.iterations = positive_count(v); };
  t["race.seeds"] = [&](auto v) { c.race.seeds = positive_count(v); };
  t["race.plateau_fraction"] = [&](auto v) {
    c.race.plateau_fraction = positive(v);
    if (c.race.plateau_fraction >= 1.0) throw BadValue{"plateau fraction must be below 1"};
  };
  t["race.gain_grid"] = [&](auto v) { c.race.gain_grid = positive_list(v); };
  t["race.tuning_seeds"] = [&](auto v) { c.race.tuning_seeds = positive_count(v); };
  t["race.spgd_gain"] = [&](auto v) { c.race.spgd_gain = positive(v); };
  t["race.spgd_amplitude"] = [&](auto v) { c.race.spgd_amplitude = positive(v); };
  t["race.mspgd_gain"] = [&](auto v) { c.race.mspgd_gain = positive(v); };
  t["race.mspgd_amplitude"] = [&](auto v) { c.race.mspgd_amplitude = positive(v); };

  t["estimate.samples"] = [&](auto v) { c.estimate.samples = positive_count(v); };
  t["estimate.sample_rate"] = [&](auto v) { c.estimate.sample_rate = positive(v); };
  t["estimate.aperture_pixels"] = [&](auto v) { c.estimate.aperture_pixels = positive_count(v); };
  t["estimate.screen_pixels"] = [&](auto v) { c.estimate.screen_pixels = positive_count(v); };
  t["estimate.outer_scale"] = [&](auto v) { c.estimate.outer_scale = non_negative(v); };
  return t;
}

}  // namespace

std::vector<int> parse_mode_list(std::string_view text) {
  std::vector<int> modes;
  auto as_index = [](std::string_view s) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || v < 1) {
      throw ConfigError(fmt::format("'{}' is not a Noll index (>= 1)", s));
    }
    return v;
  };
  for (auto part : split(text, ',')) {
    const auto dash = part.find('-');
    if (dash == std::string_view::npos) {
      modes.push_back(as_index(part));
      continue;
    }
    const int first = as_index(trim(part.substr(0, dash)));
    const int last = as_index(trim(part.substr(dash + 1)));
    if (last < first) throw ConfigError(fmt::format("mode range '{}' is reversed", part));
    for (int j = first; j <= last; ++j) modes.push_back(j);
  }
  for (std::size_t i = 0; i < modes.size(); ++i) {
    for (std::size_t k = 0; k < i; ++k) {
      if (modes[i] == modes[k]) throw ConfigError(fmt::format("mode {} listed twice", modes[i]));
    }
  }
  return modes;
}

ExperimentConfig parse(std::string_view text, const std::string& origin) {
  ExperimentConfig cfg;
  const auto table = key_table(cfg);
  std::string section;
  std::map<std::string, std::size_t> seen;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    auto error = [&](const std::string& why) { return ConfigError(fmt::format("{}:{}: {}", origin, line_no, why)); };
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw error("unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      bool known = false;
      for (const auto& [key, setter] : table) known = known || key.starts_with(section + ".");
      if (!known) throw error(fmt::format("unknown section [{}]", section));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw error("expected 'key = value'");
    if (section.empty()) throw error("key outside of any [section]");
    const std::string key = section + "." + std::string(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));
    const auto it = table.find(key);
    if (it == table.end()) throw error(fmt::format("unknown key '{}'", key));
    if (const auto prev = seen.find(key); prev != seen.end()) {
      throw error(fmt::format("'{}' already set on line {}", key, prev->second));
    }
    seen[key] = line_no;
    if (value.empty()) throw error(fmt::format("'{}' has no value", key));
    try {
      it->second(value);
    } catch (const BadValue& bad) {
      throw error(fmt::format("{}: {}", key, bad.why));
    }
  }
  try {
    cfg.scenario.validate();
  } catch (const control::InfeasibleTiming&) {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", origin, e.what()));
  }
  return cfg;
}

ExperimentConfig load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config '{}'", path.string()));
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str(), path.string());
}

}  // namespace mspgd::config
