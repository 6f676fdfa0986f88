#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mfspec/json_io.hpp"
#include "mfspec/potential.hpp"
#include "mfspec/temperature.hpp"

namespace mfspec::app {

inline constexpr int kSchemaVersion = 1;

/// Exit codes of the command line tool.
enum ExitCode : int { kOk = 0, kCheckFailed = 1, kUsageError = 2, kRuntimeError = 3 };

/// Named tolerances; every value can be overridden under "tolerances" in the config.
using Tolerances = std::map<std::string, double>;
Tolerances default_tolerances();

struct QGrid {
  double min = -8.0;
  double max = 8.0;
  double step = 0.1;
};

struct Depths {
  std::size_t gibbs_depth = 12;
  std::size_t endpoint_period = 12;
  std::size_t conformality_depth = 10;
};

struct Sampling {
  std::size_t n = 5000;
  std::size_t N = 2000;
  double epsilon = 0.02;
  std::uint64_t seed = 1;
};

struct IrregularSpec {
  std::optional<Word> orbit_a;  // defaults to the endpoint orbits
  std::optional<Word> orbit_b;
  double growth_factor = 4.0;
  std::size_t horizon = 1000000;
};

struct PressureGrid {
  double t_min = -2.0;
  double t_max = 2.0;
  double t_step = 0.5;
  double q_step = 0.5;
};

struct OrbitDump {
  double q = 0.0;
  std::size_t count = 10;
  std::size_t length = 1000;
};

struct RunConfig {
  std::string name;
  PotentialFamily family;
  QGrid q_grid;
  Depths depths;
  Sampling sampling;
  IrregularSpec irregular;
  PressureGrid pressure_grid;
  OrbitDump orbits;
  std::vector<double> check_q;
  std::filesystem::path outputs;
  std::vector<std::string> checks;
  std::optional<Json> golden;
  std::optional<bool> expect_degenerate;
  Tolerances tolerances;
  Json resolved;  // the config with file references inlined; hashed for provenance
};

/// Parses a config object; relative file references resolve against base_dir.
/// Throws SchemaError naming the offending field.
RunConfig parse_config(const Json& config, const std::filesystem::path& base_dir);
/// Reads and parses a config file; JSON syntax errors report line and column.
RunConfig load_config(const std::filesystem::path& path);

/// FNV-1a 64 of the resolved config without its output directory, as 16 hex digits.
std::string config_hash(const RunConfig& config);

/// Every check the verify command knows, in report order.
const std::vector<std::string>& known_checks();

struct CheckResult {
  std::string name;
  bool pass = false;
  Json measured = Json::object();
  Json tolerances = Json::object();
  std::string detail;
};

CheckResult run_check(const RunConfig& config, const std::string& name, const TemperatureCurve& curve);
Json check_to_json(const CheckResult& result);

/// Writes through a temporary file in the same directory and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Entry point of the mfspec tool; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mfspec::app
