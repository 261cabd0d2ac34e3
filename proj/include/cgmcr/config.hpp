#pragma once

// Flat `key = value` configuration files, one entry per line, `#` starts a
// comment. Unknown or repeated keys are errors; `k` is required.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cgmcr/trainer.hpp"

namespace cgmcr {

/// Every key accepted by parse_train_config.
const std::vector<std::string>& train_config_keys();

train::TrainConfig parse_train_config(std::istream& in, const std::string& source = "config");
train::TrainConfig load_train_config(const std::filesystem::path& path);

/// Inverse of parse_train_config; every key is written.
std::string format_train_config(const train::TrainConfig& cfg);

}  // namespace cgmcr
