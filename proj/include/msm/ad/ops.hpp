#pragma once

#include "msm/ad/tape.hpp"

#include <vector>

namespace msm::ad {

// Elementwise arithmetic. Shapes must agree exactly.
template <typename S> Var<S> add(Var<S> a, Var<S> b);
template <typename S> Var<S> sub(Var<S> a, Var<S> b);
template <typename S> Var<S> mul(Var<S> a, Var<S> b);
template <typename S> Var<S> scale(Var<S> a, S factor);

template <typename S> Var<S> leaky_relu(Var<S> x, S slope);
template <typename S> Var<S> relu(Var<S> x) { return leaky_relu(x, S(0)); }
/// tanh approximation.
template <typename S> Var<S> gelu(Var<S> x);
/// Identity inside [lo, hi]; gradient is zero where the input was clipped.
template <typename S> Var<S> clamp(Var<S> x, S lo, S hi);

// Feature maps, layout (C, H*W).

/// weight: (C_out, C_in*k*k), bias: (C_out, 1). Zero padding.
template <typename S>
Var<S> conv2d(Var<S> x, Var<S> weight, Var<S> bias, int kernel, int stride, int pad);
template <typename S> Var<S> avg_pool(Var<S> x, int factor);
template <typename S> Var<S> upsample_nearest(Var<S> x, int factor);
/// (C, H*W) -> (1, C)
template <typename S> Var<S> global_avg_pool(Var<S> x);
/// Adds a (1, C) row to every pixel of a (C, H*W) map.
template <typename S> Var<S> add_channel_bias(Var<S> x, Var<S> bias_row);
/// x scaled per channel by a (1, C) row.
template <typename S> Var<S> scale_channels(Var<S> x, Var<S> gain_row);
/// Mean of squared horizontal and vertical neighbour differences.
template <typename S> Var<S> total_variation(Var<S> x);

// Row-major token algebra.

template <typename S> Var<S> matmul(Var<S> a, Var<S> b);
/// a * b^T
template <typename S> Var<S> matmul_nt(Var<S> a, Var<S> b);
/// x (n, in) * w (in, out) + b (1, out) broadcast over rows.
template <typename S> Var<S> linear(Var<S> x, Var<S> w, Var<S> b);
/// As linear() without a bias term.
template <typename S> Var<S> linear(Var<S> x, Var<S> w);
template <typename S> Var<S> softmax_rows(Var<S> x);
template <typename S> Var<S> layer_norm_rows(Var<S> x, Var<S> gain, Var<S> bias, S eps = S(1e-5));

// Structural.

/// Stacks vertically; for feature maps this concatenates channels.
template <typename S> Var<S> concat_rows(const std::vector<Var<S>>& parts);
template <typename S> Var<S> concat_cols(const std::vector<Var<S>>& parts);
template <typename S> Var<S> slice_rows(Var<S> x, long start, long count);
template <typename S> Var<S> slice_cols(Var<S> x, long start, long count);
/// Column-major reinterpretation. height/width set the spatial metadata of the result.
template <typename S> Var<S> reshape(Var<S> x, long rows, long cols, int height = 0, int width = 0);
template <typename S> Var<S> transpose(Var<S> x);

// Reductions to 1x1.

template <typename S> Var<S> sum(Var<S> x);
template <typename S> Var<S> mean(Var<S> x);
template <typename S> Var<S> mean_abs(Var<S> x);
template <typename S> Var<S> mean_abs_diff(Var<S> a, Var<S> b) { return mean_abs(sub(a, b)); }
template <typename S> Var<S> squared_norm(Var<S> x);

}  // namespace msm::ad
