#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "avs/analysis.hpp"
#include "avs/errors.hpp"
#include "test_support.hpp"

using namespace avs;
using namespace avs::testing;

TEST_CASE("cosine similarity") {
    const std::vector<double> a{1, 0}, b{0, 1}, c{1, 1};
    CHECK(cosine_similarity(c, c) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(cosine_similarity(a, b) == 0.0);
    CHECK(cosine_similarity(a, c) == doctest::Approx(0.70710678118654752).epsilon(1e-15));
    CHECK_THROWS_AS(cosine_similarity(a, std::vector<double>{0, 0}), UndefinedError);
    CHECK_THROWS_AS(cosine_similarity(a, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST_CASE("property: cosine is symmetric, scale-invariant and bounded") {
    CounterRng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t d = 1 + rng.below(40);
        const auto a = random_vector(rng, d);
        const auto b = random_vector(rng, d);
        const double c = cosine_similarity(a, b);
        CHECK(c >= -1.0);
        CHECK(c <= 1.0);
        CHECK(c == cosine_similarity(b, a));
        std::vector<double> scaled = a;
        const double alpha = rng.uniform(0.01, 100.0);
        for (double& x : scaled) x *= alpha;
        CHECK(cosine_similarity(scaled, b) == doctest::Approx(c).epsilon(1e-12));
    }
}

TEST_CASE("cohens_d examples") {
    const std::vector<double> a{2, 4, 6}, b{1, 3, 5};
    // Means 4 and 3, both sample variances 4, pooled SD 2.
    CHECK(cohens_d(a, b) == 0.5);
    CHECK(cohens_d(a, a) == 0.0);
    const std::vector<double> flat{0, 0, 0}, flat2{1, 1};
    CHECK_THROWS_AS(cohens_d(flat, flat2), UndefinedError);
    CHECK_THROWS_AS(cohens_d(std::vector<double>{1}, b), ArgumentError);
}

TEST_CASE("property: cohens_d antisymmetry and shift invariance") {
    CounterRng rng(10);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = random_vector(rng, 2 + rng.below(20));
        const auto b = random_vector(rng, 2 + rng.below(20));
        const double d = cohens_d(a, b);
        CHECK(cohens_d(b, a) == -d);
        const double shift = rng.uniform(-5.0, 5.0);
        auto as = a, bs = b;
        for (double& x : as) x += shift;
        for (double& x : bs) x += shift;
        CHECK(cohens_d(as, bs) == doctest::Approx(d).epsilon(1e-9));
    }
}

TEST_CASE("report on identical all-correct traces") {
    auto planted = planted_effect_traces(1, 8, 3, {0, 0, 0, 0});
    for (auto& r : planted.traces.records) {
        r.correctness = Correctness::correct;
        r.states = planted.traces.records.front().states;
    }
    const auto report = layer_influence_report(planted.traces, planted.vector);
    REQUIRE(report.rows.size() == 4);
    for (std::size_t l = 0; l < 4; ++l) {
        const auto& row = report.rows[l];
        CHECK(row.layer == static_cast<int>(l + 1));
        CHECK(row.n_correct == 6);
        CHECK(row.n_incorrect == 0);
        CHECK_FALSE(row.mean_cos_incorrect.has_value());
        CHECK_FALSE(row.cohens_d.has_value());
        const double expected = cosine_similarity(planted.traces.records[0].states.row(l),
                                                  planted.vector.rows.row(l));
        CHECK(*row.mean_cos_correct == doctest::Approx(expected).epsilon(1e-14));
    }
}

TEST_CASE("report errors") {
    auto planted = planted_effect_traces(2, 8, 3, {0, 1, 0});
    planted.traces.records[1].correctness = Correctness::unknown;
    CHECK_THROWS_AS(layer_influence_report(planted.traces, planted.vector), LabelingError);
    planted.traces.records[1].correctness = Correctness::correct;
    planted.traces.records[2].states = Matrix(2, 8);
    CHECK_THROWS_AS(layer_influence_report(planted.traces, planted.vector), ShapeError);
}

TEST_CASE("report recovers a planted layer and matches brute force") {
    const std::vector<double> shifts{0, 0, 0, 0, 0, 0, 0, 2.0};
    const auto planted = planted_effect_traces(3, 16, 30, shifts);
    const auto report = layer_influence_report(planted.traces, planted.vector);
    REQUIRE(report.rows.size() == 8);

    std::size_t best = 0;
    for (std::size_t l = 0; l < 8; ++l) {
        if (std::abs(*report.rows[l].cohens_d) > std::abs(*report.rows[best].cohens_d)) best = l;
    }
    CHECK(best == 7);

    // Brute force for the planted layer.
    std::vector<double> c, ic;
    for (const auto& r : planted.traces.records) {
        const auto h = r.states.row(7);
        const auto v = planted.vector.rows.row(7);
        double hv = 0, hh = 0, vv = 0;
        for (std::size_t i = 0; i < 16; ++i) {
            hv += h[i] * v[i];
            hh += h[i] * h[i];
            vv += v[i] * v[i];
        }
        (r.correctness == Correctness::correct ? c : ic).push_back(hv / std::sqrt(hh * vv));
    }
    auto mean = [](const std::vector<double>& x) {
        double s = 0;
        for (double v : x) s += v;
        return s / static_cast<double>(x.size());
    };
    auto var = [&](const std::vector<double>& x) {
        const double m = mean(x);
        double s = 0;
        for (double v : x) s += (v - m) * (v - m);
        return s / static_cast<double>(x.size() - 1);
    };
    const double pooled = std::sqrt(((c.size() - 1) * var(c) + (ic.size() - 1) * var(ic)) /
                                    static_cast<double>(c.size() + ic.size() - 2));
    CHECK(*report.rows[7].cohens_d == doctest::Approx((mean(c) - mean(ic)) / pooled).epsilon(1e-9));
    CHECK(*report.rows[7].mean_cos_correct == doctest::Approx(mean(c)).epsilon(1e-12));

    const auto proposal = propose_partition(report, 0);
    CHECK_FALSE(proposal.fell_back);
    CHECK(std::find(proposal.partition.increase.begin(), proposal.partition.increase.end(), 8) !=
          proposal.partition.increase.end());
}

TEST_CASE("report is a pure function") {
    const auto planted = planted_effect_traces(4, 8, 10, {0, 1, 2});
    CHECK(layer_influence_report(planted.traces, planted.vector) ==
          layer_influence_report(planted.traces, planted.vector));
}

namespace {

LayerInfluenceReport report_with_d(const std::vector<double>& ds) {
    LayerInfluenceReport r;
    for (std::size_t l = 0; l < ds.size(); ++l) {
        LayerInfluenceRow row;
        row.layer = static_cast<int>(l + 1);
        row.cohens_d = ds[l];
        r.rows.push_back(row);
    }
    return r;
}

}  // namespace

TEST_CASE("propose_partition rule") {
    const auto rising = propose_partition(report_with_d({0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8}));
    CHECK_FALSE(rising.fell_back);
    CHECK(rising.partition.increase == LayerSet{5, 6});
    CHECK(rising.partition.decrease == LayerSet{1, 2, 3, 4, 7, 8});

    // Negative effects count by magnitude.
    const auto signed_d = propose_partition(report_with_d({0.1, -0.9, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8}));
    CHECK(signed_d.partition.increase == LayerSet{2, 6});

    const auto flat = propose_partition(report_with_d(std::vector<double>(8, 0.4)));
    CHECK(flat.fell_back);
    CHECK(flat.partition == default_layer_partition(8));

    auto undefined = report_with_d({0.1, 0.2, 0.3, 0.4, 0.5});
    undefined.rows[2].cohens_d.reset();
    const auto fb = propose_partition(undefined);
    CHECK(fb.fell_back);
    CHECK(fb.partition == default_layer_partition(5));

    CHECK_THROWS_AS(propose_partition(report_with_d({0.1, 0.2, 0.3})), ArgumentError);
}
