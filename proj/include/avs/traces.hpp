#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "avs/linalg.hpp"
#include "avs/model.hpp"

namespace avs {

/// One labeled trace as stored on disk: the state matrix at the extraction
/// position and, optionally, the full per-position tensor.
struct TraceRecord {
    std::string instance_id;
    Correctness correctness = Correctness::unknown;
    Matrix states;                            // num_layers x hidden_dim
    std::optional<std::vector<Matrix>> full;  // per layer: positions x hidden_dim

    bool operator==(const TraceRecord&) const = default;
};

struct TraceSet {
    std::string model_id;
    std::size_t num_layers = 0;
    std::size_t hidden_dim = 0;
    int layer_index_base = 1;
    std::string channel = "main";
    std::vector<TraceRecord> records;

    bool is_main_channel() const { return channel == "main"; }

    /// Appends a residual trace; its dimensions must match the header.
    void add(const std::string& instance_id, const ResidualTrace& trace, bool keep_full = false);

    bool operator==(const TraceSet&) const = default;
};

/// Versioned delimited-text trace file. Values are written with at most 17
/// significant digits, so loading restores every double bit for bit.
///
///   avs-traces 1
///   model_id <id>
///   num_layers <L>
///   hidden_dim <d>
///   layer_index_base 1
///   channel <tag>
///   records <N>
///   record <instance_id> <correctness> <positions or 0>
///   <layer> <d values>            (L lines, extraction position)
///   <layer> <position> <d values> (L*positions lines, only if positions > 0)
void save_traces(const TraceSet& traces, const std::filesystem::path& path);
TraceSet load_traces(const std::filesystem::path& path);

/// Versioned text container for a steering vector:
///
///   avs-steering-vector 1
///   model_id <id>
///   num_layers <L>
///   hidden_dim <d>
///   layer_index_base 1
///   <layer> <d values>            (L lines)
void save_steering_vector(const SteeringVector& vector, const std::filesystem::path& path);
SteeringVector load_steering_vector(const std::filesystem::path& path);

/// Shortest text that parses back to the same double (at most 17 digits).
std::string format_double(double v);

}  // namespace avs
