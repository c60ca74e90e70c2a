#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ldx/cli/table.hpp"
#include "ldx/models.hpp"

namespace ldx::cli {

struct RunConfig {
  std::string command;
  std::string model_path;
  std::vector<double> a_values;
  int order = 4;
  std::vector<long long> N_grid;
  std::string oracle;  // empty: chosen from the model type
  long long samples = 100000;
  std::uint64_t seed = 0;
  std::string format = "csv";
  std::string out;
  std::vector<double> s_grid;
};

struct Report {
  std::vector<Table> tables;
  std::optional<double> gap;
  std::optional<double> max_imag_discarded;
  std::optional<double> continuation_radius;
  std::vector<std::string> warnings;
};

/// "start:stop:count", endpoints included.
std::vector<double> parse_grid(const std::string& spec);
/// Comma list with optional inclusive ranges "lo..hi".
std::vector<long long> parse_N_grid(const std::string& spec);

Report cmd_rate(const RunConfig& cfg, const models::AnyModel& model);
Report cmd_expand(const RunConfig& cfg, const models::AnyModel& model);
Report cmd_firstorder(const RunConfig& cfg, const models::AnyModel& model);
Report cmd_validate(const RunConfig& cfg, const models::AnyModel& model);
Report cmd_diagnose(const RunConfig& cfg, const models::AnyModel& model);

}  // namespace ldx::cli
