#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "avs/analysis.hpp"
#include "avs/harness.hpp"
#include "avs/run_config.hpp"

namespace avs {

/// Files written by a command plus non-fatal warnings for stderr.
struct CommandResult {
    std::vector<std::filesystem::path> written;
    std::vector<std::string> warnings;
};

namespace files {
inline constexpr const char* kDataset = "dataset.jsonl";
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kVector = "steering_vector.txt";
inline constexpr const char* kLayerInfluence = "layer_influence.csv";
inline constexpr const char* kPartition = "partition.json";
}  // namespace files

/// Dataset from config.dataset_path, or generated from the generator spec.
std::vector<QaInstance> resolve_dataset(const RunConfig& config);

/// Writes dataset.jsonl and manifest.json (seed, spec hash, dataset hash).
CommandResult cmd_gen_data(const RunConfig& config);

/// Contrastive vector for one instance (default: the first one) against its
/// silent counterpart. Writes steering_vector.txt, or `output` if given.
CommandResult cmd_extract(const RunConfig& config, const std::optional<std::string>& instance_id,
                          const std::optional<std::filesystem::path>& output = std::nullopt);

/// Evaluates under `mode`; writes metrics_<mode>.csv, summary_<mode>.json,
/// predictions_<mode>.jsonl and traces_<mode>.txt. Steered modes read the
/// vector from `vector_path` (default output_dir/steering_vector.txt) unless
/// the schedule is per-instance.
CommandResult cmd_eval(const RunConfig& config, SteeringMode mode,
                       const std::optional<std::filesystem::path>& vector_path);

/// Writes layer_influence.csv and, when asked, partition.json.
CommandResult cmd_analyze(const RunConfig& config, const std::filesystem::path& traces_path,
                          const std::filesystem::path& vector_path, bool propose_partition);

/// Offline scoring of an external prediction file; writes report_metrics.csv
/// and report_summary.json.
CommandResult cmd_report(const RunConfig& config, const std::filesystem::path& predictions_path);

std::string render_layer_influence_csv(const LayerInfluenceReport& report);

}  // namespace avs
