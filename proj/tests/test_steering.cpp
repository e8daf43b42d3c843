#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "avs/analysis.hpp"
#include "avs/errors.hpp"
#include "avs/model.hpp"
#include "avs/steering.hpp"
#include "test_support.hpp"

using namespace avs;
using namespace avs::testing;

namespace {

LayerSet range(int first, int last) {
    LayerSet s;
    for (int l = first; l <= last; ++l) s.push_back(l);
    return s;
}

}  // namespace

TEST_CASE("uniform schedule") {
    const auto s = uniform_schedule(0.05, 32);
    CHECK(s.per_layer.size() == 32);
    CHECK(std::all_of(s.per_layer.begin(), s.per_layer.end(), [](double v) { return v == 0.05; }));
    CHECK(schedule_budget(s) == doctest::Approx(1.6).epsilon(1e-15));
    CHECK(s.beta == 0.0);

    const auto zero = uniform_schedule(0.0, 4);
    CHECK(std::all_of(zero.per_layer.begin(), zero.per_layer.end(), [](double v) { return v == 0.0; }));
    CHECK(uniform_schedule(0.3, 1).per_layer == std::vector<double>{0.3});
    CHECK_THROWS_AS(uniform_schedule(-0.1, 4), ArgumentError);
    CHECK_THROWS_AS(uniform_schedule(0.1, 0), ArgumentError);
}

TEST_CASE("adaptive schedule with the reference constants") {
    const LayerPartition p{range(15, 30), [] {
                               LayerSet d = range(1, 14);
                               d.push_back(31);
                               d.push_back(32);
                               return d;
                           }()};
    const auto s = adaptive_schedule(0.05, 0.5, p, 32);
    for (int l = 1; l <= 32; ++l) {
        const double expected = (l >= 15 && l <= 30) ? 0.075 : 0.025;
        CHECK(s.per_layer[static_cast<std::size_t>(l - 1)] == doctest::Approx(expected).epsilon(1e-15));
    }
    CHECK(ulp_distance(schedule_budget(s), 32 * 0.05) <= 8);
}

TEST_CASE("adaptive schedule degenerate cases") {
    const auto p = default_layer_partition(8);
    const auto flat = adaptive_schedule(0.05, 0.0, p, 8);
    CHECK(flat.per_layer == uniform_schedule(0.05, 8).per_layer);

    const auto full = adaptive_schedule(0.05, 1.0, p, 8);
    for (int l : p.decrease) CHECK(full.per_layer[static_cast<std::size_t>(l - 1)] == 0.0);
    for (int l : p.increase) CHECK(full.per_layer[static_cast<std::size_t>(l - 1)] == doctest::Approx(0.1));
}

TEST_CASE("adaptive schedule errors") {
    CHECK_THROWS_AS(adaptive_schedule(0.05, 0.5, {{1, 2}, {2, 3, 4}}, 4), PartitionError);
    CHECK_THROWS_AS(adaptive_schedule(0.05, 0.5, {{1, 2}, {3}}, 4), PartitionError);
    CHECK_THROWS_AS(adaptive_schedule(0.05, 0.5, {{1, 2}, {3, 4, 5}}, 4), PartitionError);
    CHECK_THROWS_AS(adaptive_schedule(0.05, 0.5, {{}, {1, 2, 3, 4}}, 4), ArgumentError);
    CHECK_THROWS_AS(adaptive_schedule(0.05, 1.5, {{1, 2}, {3, 4}}, 4), ArgumentError);
    CHECK_THROWS_AS(adaptive_schedule(-0.05, 0.5, {{1, 2}, {3, 4}}, 4), ArgumentError);
}

TEST_CASE("default layer partition") {
    CHECK(default_layer_partition(32).increase == range(15, 30));
    // 35 layers reproduces the {17..33} setting.
    CHECK(default_layer_partition(35).increase == range(17, 33));
    const auto p8 = default_layer_partition(8);
    CHECK(p8.increase == LayerSet{3, 4, 5, 6});
    CHECK(p8.decrease == LayerSet{1, 2, 7, 8});
    const auto p4 = default_layer_partition(4);
    CHECK(p4.increase == LayerSet{1, 2});
    CHECK(p4.decrease == LayerSet{3, 4});
    CHECK_THROWS_AS(default_layer_partition(3), ArgumentError);
}

TEST_CASE("inject examples") {
    const std::vector<double> h{3, 0}, v{0, 4};
    CHECK(inject(h, v, 0.0, true) == h);
    const auto on = inject(h, v, 1.0, true);
    CHECK(on[0] == doctest::Approx(1.8).epsilon(1e-15));
    CHECK(on[1] == doctest::Approx(2.4).epsilon(1e-15));
    CHECK(inject(h, v, 1.0, false) == std::vector<double>{3, 4});

    // h + v = 0: renormalization is skipped.
    const std::vector<double> a{1, -2}, b{-1, 2};
    CHECK(inject(a, b, 1.0, true) == std::vector<double>{0, 0});
    CHECK_THROWS_AS(inject(a, std::vector<double>{1, 2, 3}, 1.0, true), ShapeError);
}

TEST_CASE("property: injection with renormalization preserves the norm") {
    CounterRng rng(2024);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t d = 1 + rng.below(64);
        const auto h = random_vector(rng, d, rng.uniform(0.1, 10.0));
        const auto v = random_vector(rng, d, rng.uniform(0.1, 10.0));
        const double lambda = rng.uniform(0.0, 1.0);
        const auto out = inject(h, v, lambda, true);
        const double ratio = l2_norm(out) / l2_norm(h);
        CHECK(ratio >= 1.0 - 1e-6);
        CHECK(ratio <= 1.0 + 1e-6);
    }
}

TEST_CASE("property: renormalization does not change the cosine to v") {
    CounterRng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t d = 2 + rng.below(32);
        const auto h = random_vector(rng, d);
        const auto v = random_vector(rng, d);
        const double lambda = rng.uniform(0.0, 1.0);
        const double c_on = cosine_similarity(inject(h, v, lambda, true), v);
        const double c_off = cosine_similarity(inject(h, v, lambda, false), v);
        CHECK(c_on == doctest::Approx(c_off).epsilon(1e-12));
    }
}

TEST_CASE("property: cosine to v increases with strength") {
    CounterRng rng(31);
    const double grid[] = {0.0, 0.025, 0.05, 0.075, 0.1, 0.5, 1.0};
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t d = 2 + rng.below(48);
        const auto h = random_vector(rng, d);
        const auto v = random_vector(rng, d);
        double previous = -2.0;
        for (double lambda : grid) {
            const double c = cosine_similarity(inject(h, v, lambda, true), v);
            CHECK(c > previous);
            previous = c;
        }
    }
}

TEST_CASE("property: budget conservation") {
    CounterRng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t L = 2 + rng.below(63);
        std::vector<int> layers(L);
        std::iota(layers.begin(), layers.end(), 1);
        for (std::size_t i = L - 1; i > 0; --i) std::swap(layers[i], layers[rng.below(i + 1)]);
        const std::size_t n_inc = 1 + rng.below(L);
        LayerPartition p{LayerSet(layers.begin(), layers.begin() + static_cast<long>(n_inc)),
                         LayerSet(layers.begin() + static_cast<long>(n_inc), layers.end())};
        const double lambda = rng.uniform(0.0, 1.0);
        const double beta = rng.uniform(0.0, 1.0);
        const auto s = adaptive_schedule(lambda, beta, p, L);
        CHECK(ulp_distance(schedule_budget(s), static_cast<double>(L) * lambda) <= 8);
    }
}

TEST_CASE("make_intervention") {
    SteeringVector v{"m", Matrix(3, 4, 1.0)};
    CHECK_THROWS_AS(make_intervention(v, uniform_schedule(0.1, 4)), ShapeError);
    const auto plan = make_intervention(v, uniform_schedule(0.1, 3), false);
    CHECK(plan.per_layer == std::vector<double>{0.1, 0.1, 0.1});
    CHECK_FALSE(plan.renormalize);
    v.rows(0, 0) = NAN;
    CHECK_THROWS_AS(make_intervention(v, uniform_schedule(0.1, 3)), ArgumentError);
}

TEST_CASE("extraction on the hand-set model") {
    const Model m = make_hand_model();
    const auto pair = ContrastivePair::from(hand_audio(), hand_prompt());
    const auto sv = extract_steering_vector(m, pair);
    REQUIRE(sv.num_layers() == 1);
    REQUIRE(sv.hidden_dim() == 2);

    const auto pos = reference_forward(m, hand_audio(), hand_prompt());
    const auto neg = reference_forward(m, hand_audio().silent_copy(), hand_prompt());
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(std::abs(sv.rows(0, i) - (pos.states[0][3][i] - neg.states[0][3][i])) < 1e-6);
    }
    // Frozen from the numpy implementation.
    CHECK(std::abs(sv.rows(0, 0) - -0.07438187532354545) < 1e-12);
    CHECK(std::abs(sv.rows(0, 1) - -0.13806414724012606) < 1e-12);

    const auto silent = ContrastivePair::from(hand_audio().silent_copy(), hand_prompt());
    CHECK(extract_steering_vector(m, silent).is_zero());
}

TEST_CASE("extraction is antisymmetric and validates its pair") {
    const Model m = make_hand_model();
    const ModelInput a{hand_audio(), hand_prompt()};
    AudioFeatureSequence other = hand_audio();
    other.frames(0, 1) = 0.9;
    const ModelInput b{other, hand_prompt()};
    const auto ab = contrastive_difference(m, a, b);
    const auto ba = contrastive_difference(m, b, a);
    for (std::size_t i = 0; i < ab.rows.data.size(); ++i) CHECK(ab.rows.data[i] == -ba.rows.data[i]);

    ContrastivePair bad{a, b};
    CHECK_THROWS_AS(extract_steering_vector(m, bad), ArgumentError);
    ContrastivePair mismatch{a, ModelInput{AudioFeatureSequence::silence(3, 2), hand_prompt()}};
    CHECK_THROWS_AS(extract_steering_vector(m, mismatch), ShapeError);
}
