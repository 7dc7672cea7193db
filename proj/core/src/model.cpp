// SPDX-License-Identifier: Apache-2.0

#include "slotflow/model.hpp"

#include <cmath>

namespace slotflow {

namespace {

LayerShape apply_layer(const LayerSpec &layer, const LayerShape &in, std::size_t index) {
    if (const auto *fc = std::get_if<FcLayer>(&layer)) {
        if (fc->d_in != in.d()) {
            throw ShapeError("layer " + std::to_string(index) + ": fc expects " +
                             std::to_string(fc->d_in) + " features, gets " +
                             std::to_string(in.d()));
        }
        return LayerShape{1, 1, fc->d_out};
    }
    if (const auto *conv = std::get_if<ConvLayer>(&layer)) {
        const ConvSpec &s = conv->spec;
        if (s.in_channels != in.channels || s.r != in.rows || s.c != in.cols) {
            throw ShapeError("layer " + std::to_string(index) +
                             ": conv input shape disagrees with incoming data");
        }
        return LayerShape{s.out_kernels, s.out_h(), s.out_w()};
    }
    if (const auto *pool = std::get_if<PoolLayer>(&layer)) {
        ToeplitzPlan plan = pool_to_plan(*pool, in);
        return LayerShape{plan.spec.out_kernels, plan.spec.out_h(), plan.spec.out_w()};
    }
    return in;  // activation
}

}  // namespace

std::size_t ModelSpec::d_out() const { return shape_after(*this, layers.size()).d(); }

LayerShape shape_after(const ModelSpec &model, std::size_t count) {
    LayerShape s{model.in_channels, model.in_rows, model.in_cols};
    for (std::size_t i = 0; i < count && i < model.layers.size(); i++) {
        s = apply_layer(model.layers[i], s, i);
    }
    return s;
}

ToeplitzPlan pool_to_plan(const PoolLayer &pool, const LayerShape &in) {
    return pool_plan(pool.kind, in.channels, in.rows, in.cols, pool.w_h, pool.w_w, pool.s_h,
                     pool.s_w);
}

void ModelSpec::validate() const {
    if (in_channels == 0 || in_rows == 0 || in_cols == 0) {
        throw ShapeError("model: zero input dimension");
    }
    if (layers.empty()) {
        throw ShapeError("model: no layers");
    }
    LayerShape shape{in_channels, in_rows, in_cols};
    for (std::size_t i = 0; i < layers.size(); i++) {
        const LayerSpec &layer = layers[i];
        if (const auto *fc = std::get_if<FcLayer>(&layer)) {
            if (fc->weights.rows() != fc->d_in || fc->weights.cols() != fc->d_out) {
                throw ShapeError("layer " + std::to_string(i) + ": weight matrix is " +
                                 std::to_string(fc->weights.rows()) + "x" +
                                 std::to_string(fc->weights.cols()) + ", expected " +
                                 std::to_string(fc->d_in) + "x" + std::to_string(fc->d_out));
            }
            if (!fc->bias.empty() && fc->bias.size() != fc->d_out) {
                throw ShapeError("layer " + std::to_string(i) + ": bias length mismatch");
            }
            for (double w : fc->weights.data()) {
                if (!std::isfinite(w)) {
                    throw ShapeError("layer " + std::to_string(i) + ": non-finite weight");
                }
            }
        } else if (const auto *conv = std::get_if<ConvLayer>(&layer)) {
            conv->spec.validate();
            if (conv->kernels.size() != conv->spec.out_kernels) {
                throw ShapeError("layer " + std::to_string(i) + ": kernel count mismatch");
            }
            if (!conv->bias.empty() && conv->bias.size() != conv->spec.out_kernels) {
                throw ShapeError("layer " + std::to_string(i) + ": bias length mismatch");
            }
            for (const Tensor3 &k : conv->kernels) {
                for (double w : k.data()) {
                    if (!std::isfinite(w)) {
                        throw ShapeError("layer " + std::to_string(i) +
                                         ": non-finite kernel weight");
                    }
                }
            }
        } else if (const auto *act = std::get_if<ActLayer>(&layer)) {
            activation_function(act->function);  // throws on unknown names
            if (act->degree < 0 || !(act->a < act->b)) {
                throw ShapeError("layer " + std::to_string(i) +
                                 ": bad activation degree or interval");
            }
        }
        shape = apply_layer(layer, shape, i);
    }
}

ChebApprox fit_activation(const ActLayer &act) {
    return chebyshev_fit(activation_function(act.function), act.a, act.b, act.degree);
}

}  // namespace slotflow
