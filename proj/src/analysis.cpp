#include "avs/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "avs/errors.hpp"

namespace avs {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("cosine_similarity: dimension mismatch");
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) throw UndefinedError("cosine similarity of a zero vector");
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

namespace {

struct Moments {
    double mean = 0.0;
    double sum_sq_dev = 0.0;  // sum of squared deviations from the mean
};

Moments moments(std::span<const double> xs) {
    Moments m;
    for (double x : xs) m.mean += x;
    m.mean /= static_cast<double>(xs.size());
    for (double x : xs) m.sum_sq_dev += (x - m.mean) * (x - m.mean);
    return m;
}

std::optional<double> mean_of(const std::vector<double>& xs) {
    if (xs.empty()) return std::nullopt;
    return moments(xs).mean;
}

}  // namespace

double cohens_d(std::span<const double> group_a, std::span<const double> group_b) {
    if (group_a.size() < 2 || group_b.size() < 2) {
        throw ArgumentError("cohens_d: each group needs at least 2 values");
    }
    const Moments a = moments(group_a);
    const Moments b = moments(group_b);
    const double dof = static_cast<double>(group_a.size() + group_b.size() - 2);
    const double pooled_var = (a.sum_sq_dev + b.sum_sq_dev) / dof;
    if (!(pooled_var > 0.0)) throw UndefinedError("cohens_d: pooled variance is zero");
    return (a.mean - b.mean) / std::sqrt(pooled_var);
}

LayerInfluenceReport layer_influence_report(std::span<const TraceRecord> traces,
                                            const SteeringVector& vector) {
    const std::size_t L = vector.num_layers();
    for (const auto& t : traces) {
        if (t.correctness == Correctness::unknown) {
            throw LabelingError("trace '" + t.instance_id + "' has no correctness label");
        }
        if (t.states.rows != L || t.states.cols != vector.hidden_dim()) {
            throw ShapeError("trace '" + t.instance_id + "' is " + std::to_string(t.states.rows) +
                             "x" + std::to_string(t.states.cols) + ", steering vector is " +
                             std::to_string(L) + "x" + std::to_string(vector.hidden_dim()));
        }
    }

    LayerInfluenceReport report;
    report.rows.resize(L);
    std::vector<std::string> errors(L);

    // Layers are independent; each row is filled by exactly one iteration
    // and sums run in trace order, so the result does not depend on threads.
    const auto layers = static_cast<std::int64_t>(L);
#pragma omp parallel for schedule(static)
    for (std::int64_t li = 0; li < layers; ++li) {
        const auto l = static_cast<std::size_t>(li);
        try {
            std::vector<double> correct, incorrect;
            const auto dir = vector.rows.row(l);
            for (const auto& t : traces) {
                const double c = cosine_similarity(t.states.row(l), dir);
                (t.correctness == Correctness::correct ? correct : incorrect).push_back(c);
            }
            LayerInfluenceRow& row = report.rows[l];
            row.layer = static_cast<int>(l + 1);
            row.n_correct = correct.size();
            row.n_incorrect = incorrect.size();
            row.mean_cos_correct = mean_of(correct);
            row.mean_cos_incorrect = mean_of(incorrect);
            if (correct.size() >= 2 && incorrect.size() >= 2) {
                try {
                    row.cohens_d = cohens_d(correct, incorrect);
                } catch (const UndefinedError&) {
                    row.cohens_d.reset();
                }
            }
        } catch (const std::exception& e) {
            errors[l] = "layer " + std::to_string(l + 1) + ": " + e.what();
        }
    }
    for (const auto& e : errors) {
        if (!e.empty()) throw UndefinedError(e);
    }
    return report;
}

PartitionProposal propose_partition(const LayerInfluenceReport& report, std::size_t exclude_last) {
    const std::size_t L = report.rows.size();
    if (L <= exclude_last + 1) {
        throw ArgumentError("propose_partition needs more than exclude_last + 1 layers");
    }

    auto fallback = [&](std::string reason) {
        return PartitionProposal{default_layer_partition(L), true, std::move(reason)};
    };

    std::vector<double> magnitudes;
    magnitudes.reserve(L);
    for (const auto& row : report.rows) {
        if (!row.cohens_d) {
            return fallback("layer " + std::to_string(row.layer) + " has undefined effect size");
        }
        magnitudes.push_back(std::abs(*row.cohens_d));
    }

    std::vector<double> sorted = magnitudes;
    std::sort(sorted.begin(), sorted.end());
    const double median = (L % 2 == 1) ? sorted[L / 2] : 0.5 * (sorted[L / 2 - 1] + sorted[L / 2]);

    PartitionProposal proposal;
    for (std::size_t l = 0; l < L; ++l) {
        const bool eligible = l < L - exclude_last;
        const int layer = static_cast<int>(l + 1);
        (eligible && magnitudes[l] > median ? proposal.partition.increase
                                            : proposal.partition.decrease)
            .push_back(layer);
    }
    if (proposal.partition.increase.empty()) {
        return fallback("no layer has |d| above the median");
    }
    return proposal;
}

}  // namespace avs
