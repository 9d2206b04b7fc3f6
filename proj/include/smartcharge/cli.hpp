#pragma once

// Command-line surface: JSON run configs plus flag overrides, one function
// per command. Relative paths in a config resolve against its directory.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smartcharge/learning.hpp"
#include "smartcharge/thermal.hpp"

namespace smartcharge::cli {

enum ExitCode : int { ok = 0, infeasible = 2, input_error = 3, training_failure = 4 };

struct SyntheticBlock {
  int n_events = 100;
  ThermalPlant plant{};
  SyntheticOptions options{};
};

struct RunConfig {
  std::uint64_t seed = 42;
  std::filesystem::path out = "out";

  std::optional<std::filesystem::path> scenario;
  std::optional<std::filesystem::path> aging;
  std::optional<std::filesystem::path> ecm;
  std::optional<std::filesystem::path> thermal_model; // constant model when absent
  std::optional<std::filesystem::path> events_dir;    // corpus written by gen-synthetic

  // Price source: a market history (characteristic workday/weekend profiles),
  // or explicit profile CSVs. The scenario's own profile applies otherwise.
  std::optional<std::filesystem::path> market_csv;
  std::optional<std::filesystem::path> profile_csv;
  std::optional<std::filesystem::path> weekend_profile_csv;

  SyntheticBlock synthetic;
  ThermalFitOptions fit;
  std::map<std::string, std::filesystem::path> validate_models; // name -> model JSON, constant always added

  std::vector<double> gamma{1.0, 1.7, 1.75, 1.8};
  std::vector<double> v_ev{6080.0, 4470.0, 2770.0};
  bool reoptimize = false;
  std::size_t max_events = 0; // 0: all selected events
  std::string isa = "auto";   // auto, scalar, avx2
};

RunConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

int cmd_gen_synthetic(const RunConfig& cfg, std::ostream& log);
int cmd_fit_thermal(const RunConfig& cfg, std::ostream& log);
int cmd_optimize(const RunConfig& cfg, std::ostream& log);
int cmd_compare_modes(const RunConfig& cfg, std::ostream& log);
int cmd_sweep_gamma(const RunConfig& cfg, std::ostream& log);
int cmd_sweep_vev(const RunConfig& cfg, std::ostream& log);
int cmd_validate(const RunConfig& cfg, std::ostream& log);

/// Parses argv, runs the command, maps exceptions to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace smartcharge::cli
