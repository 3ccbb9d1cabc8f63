#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "feta/model.h"
#include "feta/theorems.h"
#include "feta/train.h"

namespace feta {

// Flat "key = value" text. Blank lines and lines starting with '#' are
// skipped; duplicate keys and lines without '=' are ConfigErrors that name
// `origin` and the line number.
std::map<std::string, std::string> parse_key_values(const std::string& text, const std::string& origin);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

// Shortest text that parses back to the same double.
std::string format_double(double v);

struct RunConfig {
  FetaConfig model;
  TrainOptions train;
  std::string dataset;  // feta-ds/1 directory
  std::string preset;   // synthetic preset built in memory when dataset is empty
  std::uint64_t data_seed = 0;
  std::uint64_t seed = 0;  // parameter init and batch order
  std::string out = "feta-run";
};

// Unknown keys and malformed values are ConfigErrors.
RunConfig parse_run_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);
// Every key, in a fixed order; parse_run_config(format_run_config(c)) == c.
std::string format_run_config(const RunConfig& cfg);

// Model keys only, as stored inside checkpoints.
FetaConfig parse_model_config(const std::map<std::string, std::string>& kv, const std::string& origin);
std::map<std::string, std::string> model_config_entries(const FetaConfig& cfg);

// Theorem battery settings: the BatteryOptions field names as keys.
BatteryOptions parse_battery_options(const std::string& text, const std::string& origin = "<config>");
std::string format_battery_options(const BatteryOptions& opt);

}  // namespace feta
