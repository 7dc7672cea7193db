// SPDX-License-Identifier: Apache-2.0

#ifndef SLOTFLOW_MODEL_HPP
#define SLOTFLOW_MODEL_HPP

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "slotflow/approx.hpp"
#include "slotflow/conv.hpp"
#include "slotflow/packing.hpp"
#include "slotflow/types.hpp"

namespace slotflow {

// Fully connected layer; weights are stored input-major (d_in rows, d_out
// columns), so a batch X (n x d_in) maps to X * weights + bias.
struct FcLayer {
    std::size_t d_in = 0;
    std::size_t d_out = 0;
    Matrix weights;
    std::vector<double> bias;  // empty or d_out entries
};

struct ConvLayer {
    ConvSpec spec;
    std::vector<Tensor3> kernels;
    std::vector<double> bias;  // empty or out_kernels entries, one per channel
};

struct PoolLayer {
    PoolKind kind = PoolKind::Sum;
    std::size_t w_h = 1, w_w = 1;
    std::size_t s_h = 1, s_w = 1;
};

// Slot-wise nonlinearity evaluated through its Chebyshev interpolant.
struct ActLayer {
    std::string function;
    int degree = 0;
    double a = -8.0;
    double b = 8.0;
};

using LayerSpec = std::variant<FcLayer, ConvLayer, PoolLayer, ActLayer>;

struct ModelSpec {
    // Per-sample input shape; the batch dimension comes from the data.
    std::size_t in_channels = 1;
    std::size_t in_rows = 1;
    std::size_t in_cols = 1;
    std::vector<LayerSpec> layers;

    std::size_t d_in() const { return in_channels * in_rows * in_cols; }
    std::size_t d_out() const;

    // Checks dimension chaining, weight finiteness and activation names.
    void validate() const;
};

ChebApprox fit_activation(const ActLayer &act);

// Input and output widths of a linear (fc/conv/pool) layer given the
// per-sample shape entering it; activations keep the shape.
struct LayerShape {
    std::size_t channels = 1, rows = 1, cols = 1;
    std::size_t d() const { return channels * rows * cols; }
};

// Shape of the data after the first `count` layers.
LayerShape shape_after(const ModelSpec &model, std::size_t count);

// The pooling window of layer `l` lowered to its convolution form.
ToeplitzPlan pool_to_plan(const PoolLayer &pool, const LayerShape &in);

}  // namespace slotflow

#endif
