#pragma once

// Data-parallel inner loops of the transformer forward pass.
//
// Every kernel exists twice: a serial reference in `kernels::serial` and an
// OpenMP version in `kernels::parallel`. Work is split only across
// independent output elements and each element is accumulated in the same
// order as the serial loop, so both versions produce bit-identical results.
// The dispatching wrappers in `kernels` pick the parallel path unless the
// caller is already inside a parallel region.

#include <cstddef>
#include <span>

#include "avs/linalg.hpp"

namespace avs::kernels {

namespace serial {

/// y = W x, W is (out x in).
void matvec(const Matrix& w, std::span<const double> x, std::span<double> y);

/// Row-wise: out.row(t) = W in.row(t). `out` must be (in.rows x w.rows).
void linear(const Matrix& w, const Matrix& in, Matrix& out);

/// Row-wise RMS normalization with per-channel gain.
void rms_norm(const Matrix& in, std::span<const double> gain, double eps, Matrix& out);

/// Tanh-approximated GELU, elementwise in place.
void gelu(Matrix& x);

/// Causal multi-head scaled dot-product attention. q, k, v and out are
/// (T x num_heads*head_dim); position t attends to positions 0..t.
void causal_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                      std::size_t num_heads, std::size_t head_dim, Matrix& out);

}  // namespace serial

namespace parallel {

void matvec(const Matrix& w, std::span<const double> x, std::span<double> y);
void linear(const Matrix& w, const Matrix& in, Matrix& out);
void rms_norm(const Matrix& in, std::span<const double> gain, double eps, Matrix& out);
void gelu(Matrix& x);
void causal_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                      std::size_t num_heads, std::size_t head_dim, Matrix& out);

}  // namespace parallel

void matvec(const Matrix& w, std::span<const double> x, std::span<double> y);
void linear(const Matrix& w, const Matrix& in, Matrix& out);
void rms_norm(const Matrix& in, std::span<const double> gain, double eps, Matrix& out);
void gelu(Matrix& x);
void causal_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                      std::size_t num_heads, std::size_t head_dim, Matrix& out);

/// Scalar helpers shared by both paths and by tests.
double gelu_scalar(double x);

/// Number of OpenMP threads the parallel path will use (1 without OpenMP).
int max_threads();

/// True when called from inside an active OpenMP parallel region.
bool in_parallel_region();

}  // namespace avs::kernels
