#include "avs/steering.hpp"

#include <algorithm>
#include <cmath>

#include "avs/errors.hpp"
#include "avs/model.hpp"

namespace avs {

bool SteeringVector::is_zero() const {
    return std::all_of(rows.data.begin(), rows.data.end(), [](double v) { return v == 0.0; });
}

SteeringVector extract_steering_vector(const Model& model, const ContrastivePair& pair) {
    pair.validate();
    return contrastive_difference(model, pair.positive, pair.negative);
}

SteeringVector contrastive_difference(const Model& model, const ModelInput& first,
                                      const ModelInput& second) {
    const Matrix pos = last_token_states(model, first.audio, first.prompt);
    const Matrix neg = last_token_states(model, second.audio, second.prompt);

    SteeringVector sv{model.model_id(), Matrix(pos.rows, pos.cols)};
    for (std::size_t i = 0; i < pos.data.size(); ++i) sv.rows.data[i] = pos.data[i] - neg.data[i];
    return sv;
}

namespace {

void check_lambda(double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw ArgumentError("lambda must be finite and >= 0");
    }
}

}  // namespace

SteeringSchedule uniform_schedule(double lambda, std::size_t num_layers) {
    check_lambda(lambda);
    if (num_layers < 1) throw ArgumentError("num_layers must be >= 1");

    SteeringSchedule s;
    s.base_lambda = lambda;
    s.beta = 0.0;
    for (std::size_t l = 1; l <= num_layers; ++l) s.partition.increase.push_back(static_cast<int>(l));
    s.per_layer.assign(num_layers, lambda);
    return s;
}

void validate_partition(const LayerPartition& partition, std::size_t num_layers) {
    std::vector<int> seen(num_layers + 1, 0);
    auto mark = [&](const LayerSet& set, const char* name) {
        for (int l : set) {
            if (l < 1 || static_cast<std::size_t>(l) > num_layers) {
                throw PartitionError(std::string(name) + " contains layer " + std::to_string(l) +
                                     " outside 1.." + std::to_string(num_layers));
            }
            if (seen[static_cast<std::size_t>(l)]++) {
                throw PartitionError("layer " + std::to_string(l) + " listed more than once");
            }
        }
    };
    mark(partition.increase, "increase set");
    mark(partition.decrease, "decrease set");
    for (std::size_t l = 1; l <= num_layers; ++l) {
        if (!seen[l]) throw PartitionError("layer " + std::to_string(l) + " is in neither set");
    }
}

SteeringSchedule adaptive_schedule(double lambda, double beta, const LayerPartition& partition,
                                   std::size_t num_layers) {
    check_lambda(lambda);
    if (!(beta >= 0.0 && beta <= 1.0)) throw ArgumentError("beta must lie in [0, 1]");
    if (num_layers < 1) throw ArgumentError("num_layers must be >= 1");
    if (partition.increase.empty()) throw ArgumentError("increase set must be non-empty");
    validate_partition(partition, num_layers);

    const auto n_inc = static_cast<double>(partition.increase.size());
    const auto n_dec = static_cast<double>(partition.decrease.size());
    // Grouped as lambda * ((n_inc + n_dec * beta) / n_inc) so beta = 0 yields
    // exactly lambda.
    const double up = lambda * ((n_inc + n_dec * beta) / n_inc);
    const double down = lambda * (1.0 - beta);

    SteeringSchedule s;
    s.base_lambda = lambda;
    s.beta = beta;
    s.partition = partition;
    std::sort(s.partition.increase.begin(), s.partition.increase.end());
    std::sort(s.partition.decrease.begin(), s.partition.decrease.end());
    s.per_layer.assign(num_layers, down);
    for (int l : partition.increase) s.per_layer[static_cast<std::size_t>(l - 1)] = up;
    return s;
}

LayerPartition default_layer_partition(std::size_t num_layers) {
    if (num_layers < 4) throw ArgumentError("default layer partition needs at least 4 layers");
    const std::size_t first = (num_layers + 1) / 2 - 1;  // ceil(L/2) - 1
    const std::size_t last = num_layers - 2;
    LayerPartition p;
    for (std::size_t l = 1; l <= num_layers; ++l) {
        (l >= first && l <= last ? p.increase : p.decrease).push_back(static_cast<int>(l));
    }
    return p;
}

double schedule_budget(const SteeringSchedule& schedule) {
    // Neumaier summation.
    double sum = 0.0, comp = 0.0;
    for (double v : schedule.per_layer) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) comp += (sum - t) + v;
        else comp += (v - t) + sum;
        sum = t;
    }
    return sum + comp;
}

void inject_in_place(std::span<double> h, std::span<const double> v, double strength,
                     bool renormalize) {
    if (h.size() != v.size()) {
        throw ShapeError("inject: dimension mismatch " + std::to_string(h.size()) + " vs " +
                         std::to_string(v.size()));
    }
    if (strength == 0.0) return;

    const double original = l2_norm(h);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] += strength * v[i];
    if (!renormalize) return;

    const double updated = l2_norm(h);
    if (updated == 0.0) return;
    const double scale = original / updated;
    for (double& x : h) x *= scale;
}

std::vector<double> inject(std::span<const double> h, std::span<const double> v,
                           double strength, bool renormalize) {
    std::vector<double> out(h.begin(), h.end());
    inject_in_place(out, v, strength, renormalize);
    return out;
}

InterventionPlan make_intervention(SteeringVector vector, const SteeringSchedule& schedule,
                                   bool renormalize) {
    if (vector.num_layers() != schedule.num_layers()) {
        throw ShapeError("steering vector has " + std::to_string(vector.num_layers()) +
                         " layers, schedule has " + std::to_string(schedule.num_layers()));
    }
    for (double x : vector.rows.data) {
        if (!std::isfinite(x)) throw ArgumentError("steering vector has non-finite entries");
    }
    return InterventionPlan{std::move(vector), schedule.per_layer, renormalize};
}

}  // namespace avs
