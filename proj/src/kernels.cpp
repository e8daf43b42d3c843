#include "avs/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace avs::kernels {

namespace {

using Index = std::int64_t;

inline void matvec_row(const Matrix& w, std::span<const double> x, std::span<double> y,
                       std::size_t r) {
    const double* wr = w.data.data() + r * w.cols;
    double s = 0.0;
    for (std::size_t c = 0; c < w.cols; ++c) s += wr[c] * x[c];
    y[r] = s;
}

inline void rms_norm_row(const Matrix& in, std::span<const double> gain, double eps,
                         Matrix& out, std::size_t t) {
    const auto src = in.row(t);
    double ss = 0.0;
    for (double v : src) ss += v * v;
    const double inv = 1.0 / std::sqrt(ss / static_cast<double>(src.size()) + eps);
    auto dst = out.row(t);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * inv * gain[i];
}

// One (head, query position) cell of causal attention.
inline void attention_cell(const Matrix& q, const Matrix& k, const Matrix& v,
                           std::size_t head_dim, Matrix& out, std::size_t h,
                           std::size_t t, std::vector<double>& scores) {
    const std::size_t off = h * head_dim;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
    scores.resize(t + 1);
    double max_score = -INFINITY;
    for (std::size_t s = 0; s <= t; ++s) {
        double acc = 0.0;
        for (std::size_t i = 0; i < head_dim; ++i) acc += q(t, off + i) * k(s, off + i);
        scores[s] = acc * scale;
        max_score = std::max(max_score, scores[s]);
    }
    double denom = 0.0;
    for (std::size_t s = 0; s <= t; ++s) {
        scores[s] = std::exp(scores[s] - max_score);
        denom += scores[s];
    }
    for (std::size_t i = 0; i < head_dim; ++i) {
        double acc = 0.0;
        for (std::size_t s = 0; s <= t; ++s) acc += scores[s] * v(s, off + i);
        out(t, off + i) = acc / denom;
    }
}

}  // namespace

double gelu_scalar(double x) {
    constexpr double k = 0.7978845608028654;  // sqrt(2 / pi)
    return 0.5 * x * (1.0 + std::tanh(k * (x + 0.044715 * x * x * x)));
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

bool in_parallel_region() {
#ifdef _OPENMP
    return omp_in_parallel() != 0;
#else
    return false;
#endif
}

namespace serial {

void matvec(const Matrix& w, std::span<const double> x, std::span<double> y) {
    for (std::size_t r = 0; r < w.rows; ++r) matvec_row(w, x, y, r);
}

void linear(const Matrix& w, const Matrix& in, Matrix& out) {
    for (std::size_t t = 0; t < in.rows; ++t) {
        for (std::size_t r = 0; r < w.rows; ++r) matvec_row(w, in.row(t), out.row(t), r);
    }
}

void rms_norm(const Matrix& in, std::span<const double> gain, double eps, Matrix& out) {
    for (std::size_t t = 0; t < in.rows; ++t) rms_norm_row(in, gain, eps, out, t);
}

void gelu(Matrix& x) {
    for (double& v : x.data) v = gelu_scalar(v);
}

void causal_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                      std::size_t num_heads, std::size_t head_dim, Matrix& out) {
    std::vector<double> scores;
    for (std::size_t h = 0; h < num_heads; ++h) {
        for (std::size_t t = 0; t < q.rows; ++t) attention_cell(q, k, v, head_dim, out, h, t, scores);
    }
}

}  // namespace serial

namespace parallel {

void matvec(const Matrix& w, std::span<const double> x, std::span<double> y) {
    const Index rows = static_cast<Index>(w.rows);
#pragma omp parallel for schedule(static)
    for (Index r = 0; r < rows; ++r) matvec_row(w, x, y, static_cast<std::size_t>(r));
}

void linear(const Matrix& w, const Matrix& in, Matrix& out) {
    const Index cells = static_cast<Index>(in.rows * w.rows);
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < cells; ++i) {
        const auto t = static_cast<std::size_t>(i) / w.rows;
        const auto r = static_cast<std::size_t>(i) % w.rows;
        matvec_row(w, in.row(t), out.row(t), r);
    }
}

void rms_norm(const Matrix& in, std::span<const double> gain, double eps, Matrix& out) {
    const Index rows = static_cast<Index>(in.rows);
#pragma omp parallel for schedule(static)
    for (Index t = 0; t < rows; ++t) rms_norm_row(in, gain, eps, out, static_cast<std::size_t>(t));
}

void gelu(Matrix& x) {
    const Index n = static_cast<Index>(x.data.size());
    double* p = x.data.data();
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < n; ++i) p[i] = gelu_scalar(p[i]);
}

void causal_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                      std::size_t num_heads, std::size_t head_dim, Matrix& out) {
    const Index cells = static_cast<Index>(num_heads * q.rows);
#pragma omp parallel
    {
        std::vector<double> scores;
#pragma omp for schedule(dynamic)
        for (Index i = 0; i < cells; ++i) {
            const auto h = static_cast<std::size_t>(i) / q.rows;
            const auto t = static_cast<std::size_t>(i) % q.rows;
            attention_cell(q, k, v, head_dim, out, h, t, scores);
        }
    }
}

}  // namespace parallel

// Below this many multiply-adds the fork/join cost dominates.
constexpr std::size_t kParallelThreshold = 1u << 14;

namespace {
bool use_parallel(std::size_t work) {
    return work >= kParallelThreshold && max_threads() > 1 && !in_parallel_region();
}
}  // namespace

void matvec(const Matrix& w, std::span<const double> x, std::span<double> y) {
    if (use_parallel(w.rows * w.cols)) parallel::matvec(w, x, y);
    else serial::matvec(w, x, y);
}

void linear(const Matrix& w, const Matrix& in, Matrix& out) {
    if (use_parallel(in.rows * w.rows * w.cols)) parallel::linear(w, in, out);
    else serial::linear(w, in, out);
}

void rms_norm(const Matrix& in, std::span<const double> gain, double eps, Matrix& out) {
    if (use_parallel(in.data.size())) parallel::rms_norm(in, gain, eps, out);
    else serial::rms_norm(in, gain, eps, out);
}

void gelu(Matrix& x) {
    if (use_parallel(x.data.size())) parallel::gelu(x);
    else serial::gelu(x);
}

void causal_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                      std::size_t num_heads, std::size_t head_dim, Matrix& out) {
    if (use_parallel(q.rows * q.rows * num_heads * head_dim)) {
        parallel::causal_attention(q, k, v, num_heads, head_dim, out);
    } else {
        serial::causal_attention(q, k, v, num_heads, head_dim, out);
    }
}

}  // namespace avs::kernels
