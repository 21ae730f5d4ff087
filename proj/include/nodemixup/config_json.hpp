#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "nodemixup/trainer.hpp"

namespace nodemixup {

/// Run-config schema identifier written into every config file.
inline constexpr const char* kConfigSchema = "nodemixup.train-config.v1";

/// Pretty-printed JSON with every field materialized.
std::string config_to_json(const TrainConfig& cfg);
/// Parses a config; missing fields keep their defaults, unknown fields are errors.
TrainConfig config_from_json(std::string_view text);
TrainConfig load_config(const std::filesystem::path& file);

/// Parses "a..b" (inclusive) or a comma list "1,4,7" of seeds.
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

}  // namespace nodemixup
