// Serial reference kernels against their OpenMP counterparts, plus a full
// evaluation sweep with instance-level parallelism on and off.

#include <benchmark/benchmark.h>

#include "avs/harness.hpp"
#include "avs/kernels.hpp"
#include "avs/model.hpp"
#include "avs/rng.hpp"

namespace {

avs::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    avs::CounterRng rng(seed);
    avs::Matrix m(rows, cols);
    for (double& v : m.data) v = rng.normal();
    return m;
}

template <void (*Linear)(const avs::Matrix&, const avs::Matrix&, avs::Matrix&)>
void BM_Linear(benchmark::State& state) {
    const auto d = static_cast<std::size_t>(state.range(0));
    const auto w = random_matrix(4 * d, d, 1);
    const auto in = random_matrix(64, d, 2);
    avs::Matrix out(64, 4 * d);
    for (auto _ : state) {
        Linear(w, in, out);
        benchmark::DoNotOptimize(out.data.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(64 * 4 * d * d));
}
BENCHMARK(BM_Linear<avs::kernels::serial::linear>)->Name("linear/serial")->Arg(32)->Arg(128)->Arg(256);
BENCHMARK(BM_Linear<avs::kernels::parallel::linear>)->Name("linear/parallel")->Arg(32)->Arg(128)->Arg(256);

template <void (*Attention)(const avs::Matrix&, const avs::Matrix&, const avs::Matrix&, std::size_t,
                            std::size_t, avs::Matrix&)>
void BM_Attention(benchmark::State& state) {
    const auto T = static_cast<std::size_t>(state.range(0));
    const std::size_t heads = 4, head_dim = 16;
    const auto q = random_matrix(T, heads * head_dim, 3);
    const auto k = random_matrix(T, heads * head_dim, 4);
    const auto v = random_matrix(T, heads * head_dim, 5);
    avs::Matrix out(T, heads * head_dim);
    for (auto _ : state) {
        Attention(q, k, v, heads, head_dim, out);
        benchmark::DoNotOptimize(out.data.data());
    }
}
BENCHMARK(BM_Attention<avs::kernels::serial::causal_attention>)->Name("attention/serial")->Arg(32)->Arg(128);
BENCHMARK(BM_Attention<avs::kernels::parallel::causal_attention>)->Name("attention/parallel")->Arg(32)->Arg(128);

template <void (*Gelu)(avs::Matrix&)>
void BM_Gelu(benchmark::State& state) {
    auto x = random_matrix(64, static_cast<std::size_t>(state.range(0)), 6);
    for (auto _ : state) {
        Gelu(x);
        benchmark::ClobberMemory();
    }
}
BENCHMARK(BM_Gelu<avs::kernels::serial::gelu>)->Name("gelu/serial")->Arg(512);
BENCHMARK(BM_Gelu<avs::kernels::parallel::gelu>)->Name("gelu/parallel")->Arg(512);

void BM_Evaluate(benchmark::State& state) {
    avs::ModelConfig cfg;
    const avs::Model model = avs::init_model(cfg);
    avs::GeneratorSpec spec;
    spec.adversarial = spec.popular = spec.random = 10;
    const auto data = avs::generate_synthetic_dataset(spec, 1);
    avs::EvalOptions opts;
    opts.parallel = state.range(0) != 0;
    for (auto _ : state) {
        auto r = avs::evaluate(model, data, opts);
        benchmark::DoNotOptimize(r.records.data());
    }
}
BENCHMARK(BM_Evaluate)->Name("evaluate")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
