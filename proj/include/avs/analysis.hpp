#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "avs/steering.hpp"
#include "avs/traces.hpp"

namespace avs {

/// <a, b> / (||a|| ||b||). Throws UndefinedError when either vector is zero.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Standardized mean difference (mean_a - mean_b) / pooled_sd, where the
/// pooled SD combines Bessel-corrected sample variances.
/// Throws ArgumentError for groups smaller than 2 and UndefinedError when the
/// pooled variance is zero.
double cohens_d(std::span<const double> group_a, std::span<const double> group_b);

struct LayerInfluenceRow {
    int layer = 0;  // 1-indexed
    std::optional<double> mean_cos_correct;
    std::optional<double> mean_cos_incorrect;
    std::optional<double> cohens_d;  // correct minus incorrect
    std::size_t n_correct = 0;
    std::size_t n_incorrect = 0;

    bool operator==(const LayerInfluenceRow&) const = default;
};

struct LayerInfluenceReport {
    std::vector<LayerInfluenceRow> rows;

    bool operator==(const LayerInfluenceReport&) const = default;
};

/// Per layer: cosine between each trace's extraction-position state and the
/// steering direction, averaged per correctness group, plus Cohen's d
/// between the groups (empty when undefined). Every trace must be labeled.
LayerInfluenceReport layer_influence_report(std::span<const TraceRecord> traces,
                                            const SteeringVector& vector);

inline LayerInfluenceReport layer_influence_report(const TraceSet& traces,
                                                   const SteeringVector& vector) {
    return layer_influence_report(traces.records, vector);
}

struct PartitionProposal {
    LayerPartition partition;
    bool fell_back = false;
    std::string reason;
};

/// Layers whose |d| is strictly above the median |d| go to the increase set,
/// except the final `exclude_last` layers. Falls back to
/// default_layer_partition when some d is undefined or nothing qualifies.
PartitionProposal propose_partition(const LayerInfluenceReport& report,
                                    std::size_t exclude_last = 2);

}  // namespace avs
