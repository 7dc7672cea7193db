// SPDX-License-Identifier: Apache-2.0

#ifndef SLOTFLOW_CONV_HPP
#define SLOTFLOW_CONV_HPP

#include <cstddef>
#include <vector>

#include "slotflow/linalg.hpp"
#include "slotflow/packing.hpp"
#include "slotflow/types.hpp"

namespace slotflow {

// Valid (zero-padding-free) cross-correlation geometry: m input channels of
// r x c, k output kernels of f_h x f_w each spanning all input channels.
struct ConvSpec {
    std::size_t in_channels = 1;
    std::size_t out_kernels = 1;
    std::size_t f_h = 1, f_w = 1;
    std::size_t r = 1, c = 1;
    std::size_t s_h = 1, s_w = 1;

    std::size_t out_h() const { return (r - f_h) / s_h + 1; }
    std::size_t out_w() const { return (c - f_w) / s_w + 1; }
    std::size_t d_in() const { return in_channels * r * c; }
    std::size_t d_out() const { return out_kernels * out_h() * out_w(); }

    void validate() const;
    friend bool operator==(const ConvSpec &, const ConvSpec &) = default;
};

// Convolution lowered to a (m*r*c) x (k*o_h*o_w) matrix T so that
// row_flatten(conv(X)) = row_flatten(X) * T. Column kappa*o_h*o_w + oy*o_w + ox
// holds kernel kappa's weights at the rows of its receptive field.
struct ToeplitzPlan {
    ConvSpec spec;
    Matrix t;
};

// kernels[kappa] is an in_channels x f_h x f_w filter.
ToeplitzPlan toeplitz_from_kernel(const ConvSpec &spec, const std::vector<Tensor3> &kernels);

enum class PoolKind { Sum, Average };

// Pooling as a channel-diagonal convolution with an all-ones (or 1/(w_h*w_w)
// scaled) filter per channel.
ToeplitzPlan pool_plan(PoolKind kind, std::size_t channels, std::size_t r, std::size_t c,
                       std::size_t w_h, std::size_t w_w, std::size_t s_h, std::size_t s_w);

// Diagonals of the lowering matrix, ready for he_matmul.
DiagonalSet conv_diagonals(const ToeplitzPlan &plan, std::size_t n, const HeParams &params,
                           const DiagonalOptions &opts = {});

// One convolution layer on a packed batch; the result's shape is the
// (k, o_h, o_w) output tensor per sample.
PackedBatch conv_layer(HeBackend &backend, const PackedBatch &a, const ToeplitzPlan &plan,
                       const DiagonalSet &diags);

// Reference cross-correlation, used as the oracle for the lowered path.
Tensor3 conv_direct(const ConvSpec &spec, const Tensor3 &x, const std::vector<Tensor3> &kernels);
Tensor3 pool_direct(PoolKind kind, const Tensor3 &x, std::size_t w_h, std::size_t w_w,
                    std::size_t s_h, std::size_t s_w);

}  // namespace slotflow

#endif
