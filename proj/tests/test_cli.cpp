#include <doctest.h>

#include <fmt/format.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "mspgd/config.hpp"
#include "mspgd/errors.hpp"
#include "mspgd/io.hpp"
#include "mspgd/svg.hpp"

using namespace mspgd;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / fmt::format("mspgd_cli_test_{}", name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const int status = std::system(fmt::format("{} {} > /dev/null 2>&1", MSPGD_CLI_PATH, args).c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Small, fast link condition for end-to-end runs.
constexpr const char* kSmallConfig = R"(
[turbulence]
r0_ref = 0.074
wind = 1.0, 0.0
screen_pixels = 256
[geometry]
pupil_pixels = 32
[basis]
modes = 2-13
[optimizer]
gain = 10
amplitude = 0.08
[run]
duration = 0.4
seeds = 2
)";

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "run.ini";
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("configuration parsing") {
  const auto cfg = config::parse(kSmallConfig);
  CHECK(cfg.scenario.r0_ref == 0.074);
  CHECK(cfg.scenario.wind.vx == 1.0);
  CHECK(cfg.scenario.modes.size() == 12);
  CHECK(cfg.scenario.gain == 10.0);
  CHECK(cfg.run.seeds == 2);
  CHECK_FALSE(cfg.autotune.enabled);

  CHECK(config::parse("[optimizer]\ngain = autotune\n").autotune.enabled);
  CHECK(std::isinf(config::parse("[turbulence]\nouter_scale = inf\n").scenario.outer_scale));
}

TEST_CASE("configuration errors name the line") {
  const auto message = [](const std::string& text) {
    try {
      config::parse(text, "t.ini");
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message("[turbulence]\nr0_ref = 0.1\nbogus = 3\n").find("t.ini:3") != std::string::npos);
  CHECK(message("[turbulence]\nr0_ref = -0.1\n").find("t.ini:2") != std::string::npos);
  CHECK(message("[nowhere]\n").find("t.ini:1") != std::string::npos);
  CHECK(message("[turbulence]\nr0_ref = 0.1\nr0_ref = 0.2\n").find("t.ini:3") != std::string::npos);
  CHECK(message("[run]\nseeds = 0\n") != "no error");
  CHECK(message("[basis]\nmodes = 4-2\n") != "no error");
  CHECK_THROWS_AS(config::load("/nonexistent/file.ini"), ConfigError);
}

TEST_CASE("mode lists") {
  CHECK(config::parse_mode_list("2-5") == std::vector<int>{2, 3, 4, 5});
  CHECK(config::parse_mode_list("4, 6,9") == std::vector<int>{4, 6, 9});
  CHECK(config::parse_mode_list("2-3, 7-8") == std::vector<int>{2, 3, 7, 8});
  CHECK_THROWS_AS(config::parse_mode_list("3,3"), ConfigError);
  CHECK_THROWS_AS(config::parse_mode_list("0-2"), ConfigError);
  CHECK_THROWS_AS(config::parse_mode_list("a"), ConfigError);
}

TEST_CASE("bundled presets load") {
  for (const char* name : {"d_r0_5p4", "d_r0_9p5", "static_race"}) {
    CAPTURE(name);
    CHECK_NOTHROW(config::load(fs::path(MSPGD_PRESET_DIR) / fmt::format("{}.ini", name)));
  }
}

TEST_CASE("atomic writes") {
  const auto dir = scratch("atomic");
  const auto target = dir / "nested" / "file.txt";
  io::write_atomic(target, "first");
  io::write_atomic(target, "second");
  CHECK(slurp(target) == "second");
  CHECK_FALSE(fs::exists(target.string() + ".tmp"));
  CHECK_THROWS_AS(io::ensure_writable_directory("/proc/mspgd_cannot_exist"), ConfigError);
}

TEST_CASE("trajectory log layout") {
  control::Trajectory t;
  control::TrajectoryRow row;
  row.iteration = 3;
  row.time_s = 0.006;
  row.j_plus = 0.5;
  row.j_minus = 0.25;
  row.delta_j = 0.25;
  row.parameters = {1.0, -2.0};
  row.eta = 0.4;
  row.saturated = 1;
  t.rows.push_back(row);
  const auto csv = io::trajectory_csv(t, 2);
  CHECK(csv == "iteration,time_s,J_plus,J_minus,deltaJ,param_1,param_2,eta,saturated_count\n"
               "3,0.006000,0.5,0.25,0.25,1,-2,0.4,1\n");
}

TEST_CASE("plots come with the numbers they draw") {
  const std::vector<double> x{0, 1, 2};
  const std::array<svg::Column, 1> traces{svg::Column{"eta", {0.1, 0.2, 0.3}}};
  const auto plot = svg::trace_plot("t", "time_s", "eta", x, traces);
  CHECK(plot.svg.rfind("<svg", 0) == 0);
  CHECK(plot.csv == "time_s,eta\n0,0.1\n1,0.2\n2,0.3\n");

  const auto a = metrics::histogram(std::vector<double>{0.1, 0.2}, 4, 1.0);
  const auto b = metrics::histogram(std::vector<double>{0.1, 0.2}, 5, 1.0);
  const std::array<svg::NamedHistogram, 2> mismatched{svg::NamedHistogram{"a", a}, svg::NamedHistogram{"b", b}};
  CHECK_THROWS_AS(svg::histogram_plot("h", "eta", mismatched), std::invalid_argument);
}

TEST_CASE("command line exit codes and artifacts") {
  const auto dir = scratch("exit");
  const auto good = write_config(dir, kSmallConfig);

  SUBCASE("success writes every artifact") {
    REQUIRE(run_cli(fmt::format("--config {} --out {} simulate", good.string(), (dir / "ok").string())) == 0);
    for (const char* f : {"open_seed1.csv", "closed_seed2.csv", "summary.txt", "summary.csv", "trace.svg", "trace.csv",
                          "histogram.svg", "histogram.csv", "report.txt"}) {
      CAPTURE(f);
      CHECK(fs::exists(dir / "ok" / f));
    }
  }
  SUBCASE("configuration errors exit 2") {
    const auto bad = dir / "bad.ini";
    std::ofstream(bad) << "[turbulence]\nr0_ref = -1\n";
    CHECK(run_cli(fmt::format("--config {} simulate", bad.string())) == 2);
    CHECK(run_cli("--config /nonexistent.ini simulate") == 2);
    CHECK(run_cli("simulate --no-such-flag") == 2);
  }
  SUBCASE("infeasible timing exits 3") {
    const auto p = dir / "timing.ini";
    std::ofstream(p) << kSmallConfig << "[timing]\niteration_rate = 2000\n";
    CHECK(run_cli(fmt::format("--config {} --out {} simulate", p.string(), (dir / "t").string())) == 3);
  }
  SUBCASE("zero duration exits 3 without artifacts") {
    CHECK(run_cli(fmt::format("--config {} --out {} simulate --duration 0", good.string(), (dir / "z").string())) ==
          3);
    CHECK((!fs::exists(dir / "z") || fs::is_empty(dir / "z")));
  }
  SUBCASE("autotune with only unstable gains exits 3") {
    const auto p = dir / "unstable.ini";
    std::ofstream(p) << kSmallConfig
                     << "[autotune]\namplitude_grid = 0.1\ngain_grid = 1e6\ntrial_duration = 2\ntrial_seeds = 1\n";
    CHECK(run_cli(fmt::format("--config {} --out {} autotune", p.string(), (dir / "u").string())) == 3);
  }
}

TEST_CASE("fixed seeds give byte-identical logs") {
  const auto dir = scratch("determinism");
  const auto cfg = write_config(dir, kSmallConfig);
  for (const char* run : {"a", "b"}) {
    REQUIRE(run_cli(fmt::format("--config {} --seed 4 --out {} simulate", cfg.string(), (dir / run).string())) == 0);
  }
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    if (entry.path().extension() != ".csv") continue;
    CAPTURE(entry.path().filename().string());
    CHECK(slurp(entry.path()) == slurp(dir / "b" / entry.path().filename()));
    ++compared;
  }
  CHECK(compared >= 6);
}
