#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "avs/linalg.hpp"

namespace avs {

struct Model;
struct ModelInput;
struct ContrastivePair;

/// Per-layer steering directions. Row l-1 holds the direction for layer l
/// (layers are 1-indexed in every public interface).
struct SteeringVector {
    std::string model_id;
    Matrix rows;  // num_layers x hidden_dim

    std::size_t num_layers() const { return rows.rows; }
    std::size_t hidden_dim() const { return rows.cols; }
    bool is_zero() const;

    bool operator==(const SteeringVector&) const = default;
};

/// 1-indexed layer ids.
using LayerSet = std::vector<int>;

struct LayerPartition {
    LayerSet increase;
    LayerSet decrease;

    bool operator==(const LayerPartition&) const = default;
};

struct SteeringSchedule {
    double base_lambda = 0.0;
    double beta = 0.0;
    LayerPartition partition;
    std::vector<double> per_layer;  // indexed by layer - 1

    std::size_t num_layers() const { return per_layer.size(); }
};

struct InterventionPlan {
    SteeringVector vector;
    std::vector<double> per_layer;
    bool renormalize = true;

    std::size_t num_layers() const { return per_layer.size(); }
};

/// Strength defaults used by the reference experiments.
inline constexpr double kDefaultLambda = 0.05;
inline constexpr double kDefaultBeta = 0.5;

/// Contrastive direction: last-token states with the real audio minus the
/// same prompt with silent audio, per layer.
SteeringVector extract_steering_vector(const Model& model, const ContrastivePair& pair);

/// Row-wise last-token state difference F(first) - F(second) for arbitrary
/// inputs; extract_steering_vector is this with a validated silent second.
SteeringVector contrastive_difference(const Model& model, const ModelInput& first,
                                      const ModelInput& second);

/// Same strength on every layer. Represented with beta = 0, all layers in
/// the increase set.
SteeringSchedule uniform_schedule(double lambda, std::size_t num_layers);

/// Layer-adaptive strengths. Increase-set layers get (1 + |dec|/|inc| * beta)
/// * lambda and decrease-set layers (1 - beta) * lambda, which keeps the sum
/// over layers at num_layers * lambda.
SteeringSchedule adaptive_schedule(double lambda, double beta, const LayerPartition& partition,
                                   std::size_t num_layers);

/// Increase set = layers ceil(L/2) - 1 .. L - 2; everything else (early layers
/// and the final two) is decreased. Requires L >= 4.
LayerPartition default_layer_partition(std::size_t num_layers);

/// Checks that `partition` splits {1..L} into two disjoint sets.
void validate_partition(const LayerPartition& partition, std::size_t num_layers);

/// Sum of per-layer strengths, compensated so the result is within one
/// rounding of the exact sum of the stored values.
double schedule_budget(const SteeringSchedule& schedule);

/// h + strength * v, optionally rescaled back to ||h||. A zero pre-norm
/// result is returned unscaled.
std::vector<double> inject(std::span<const double> h, std::span<const double> v,
                           double strength, bool renormalize);

/// In-place variant used on the residual stream.
void inject_in_place(std::span<double> h, std::span<const double> v, double strength,
                     bool renormalize);

InterventionPlan make_intervention(SteeringVector vector, const SteeringSchedule& schedule,
                                   bool renormalize = true);

}  // namespace avs
