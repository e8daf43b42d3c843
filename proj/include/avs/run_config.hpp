#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "avs/harness.hpp"
#include "avs/model.hpp"
#include "avs/steering.hpp"

namespace avs {

enum class SteeringMode { none, uniform, adaptive };

const char* to_string(SteeringMode mode);
/// Accepts "default" (alias "none"), "uniform", "adaptive".
SteeringMode parse_steering_mode(std::string_view s);

struct ScheduleConfig {
    SteeringMode mode = SteeringMode::adaptive;
    double lambda = kDefaultLambda;
    double beta = kDefaultBeta;
    /// Empty means "auto": default_layer_partition(num_layers).
    std::optional<LayerSet> increase_set;
    bool renormalize = true;
    /// Extract a vector per instance instead of reading a vector file.
    bool per_instance = false;
};

struct RunConfig {
    int version = 1;
    std::uint64_t seed = 0;
    ModelConfig model;
    ScheduleConfig schedule;
    GeneratorSpec generator;
    std::optional<std::filesystem::path> dataset_path;
    std::size_t max_new_tokens = 2;
    std::filesystem::path output_dir = "avs_out";

    /// Steering schedule for `mode` (ignored for none).
    SteeringSchedule build_schedule(SteeringMode mode) const;
};

/// Parses the versioned JSON config. Every field is optional; missing fields
/// take the defaults above and model.rng_seed defaults to the run seed.
/// Unknown keys and invalid values raise ConfigError naming the field.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical JSON rendering (all fields, fixed key order).
std::string dump_run_config(const RunConfig& config);

}  // namespace avs
