#pragma once

#include <string>
#include <utility>
#include <vector>

#include "larpo/trainer.hpp"
#include "larpo/world.hpp"

namespace larpo {

// Everything one `run` needs, assembled from a flat key=value file. Unset
// keys take the defaults below; unknown or duplicate keys are rejected.
struct RunConfig {
  WorldParams world;
  RewardOracle oracle;
  TrainConfig train;

  // Study plumbing (sweep command only).
  std::size_t study_seeds = 10;
  std::vector<double> temperature_grid = {0.3, 0.7, 1.0, 1.5};
  std::vector<std::size_t> list_sizes = {2, 4, 6, 8, 10};
};

// Parses config text: one `key = value` per line, `#` starts a comment.
// Throws ConfigError on unknown keys, duplicate keys, or malformed values.
// The returned config is finalized (slice/temperature defaults resolved).
RunConfig parse_config(const std::string& text);

// parse_config over a file's contents; unreadable files are ConfigErrors.
RunConfig load_config(const std::string& path);

// The effective configuration as (key, value) pairs in canonical order.
// Feeding the echo back through parse_config reproduces the config exactly.
std::vector<std::pair<std::string, std::string>> config_echo(const RunConfig& config);

}  // namespace larpo
