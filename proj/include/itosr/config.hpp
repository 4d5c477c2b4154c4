#pragma once

#include <filesystem>
#include <istream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "itosr/pipeline.hpp"

namespace itosr {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every recognised key, in manifest order.
const std::vector<std::string>& config_keys();

// Flat `key = value` lines; '#' starts a comment. Throws ConfigError on a
// malformed line or an unknown key.
std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in,
                                                                  const std::string& source);

void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value);

PipelineConfig load_config_file(const std::filesystem::path& path, PipelineConfig base = {});

// All keys with their resolved values, formatted for a manifest.
std::vector<std::pair<std::string, std::string>> describe(const PipelineConfig& cfg);

}  // namespace itosr
