// SPDX-License-Identifier: Apache-2.0

#include "slotflow/conv.hpp"

namespace slotflow {

void ConvSpec::validate() const {
    if (in_channels == 0 || out_kernels == 0 || f_h == 0 || f_w == 0 || r == 0 || c == 0 ||
        s_h == 0 || s_w == 0) {
        throw ShapeError("conv: zero dimension");
    }
    if (f_h > r || f_w > c) {
        throw ShapeError("conv: filter larger than input (" + std::to_string(f_h) + "x" +
                         std::to_string(f_w) + " on " + std::to_string(r) + "x" +
                         std::to_string(c) + ")");
    }
}

ToeplitzPlan toeplitz_from_kernel(const ConvSpec &spec, const std::vector<Tensor3> &kernels) {
    spec.validate();
    if (kernels.size() != spec.out_kernels) {
        throw ShapeError("toeplitz: " + std::to_string(kernels.size()) + " kernels for " +
                         std::to_string(spec.out_kernels) + " outputs");
    }
    for (const Tensor3 &k : kernels) {
        if (k.channels() != spec.in_channels || k.rows() != spec.f_h || k.cols() != spec.f_w) {
            throw ShapeError("toeplitz: kernel shape disagrees with spec");
        }
    }
    const std::size_t oh = spec.out_h();
    const std::size_t ow = spec.out_w();
    Matrix t(spec.d_in(), spec.d_out());
    for (std::size_t kappa = 0; kappa < spec.out_kernels; kappa++) {
        for (std::size_t oy = 0; oy < oh; oy++) {
            for (std::size_t ox = 0; ox < ow; ox++) {
                const std::size_t col = (kappa * oh + oy) * ow + ox;
                for (std::size_t ch = 0; ch < spec.in_channels; ch++) {
                    for (std::size_t fy = 0; fy < spec.f_h; fy++) {
                        for (std::size_t fx = 0; fx < spec.f_w; fx++) {
                            const std::size_t iy = oy * spec.s_h + fy;
                            const std::size_t ix = ox * spec.s_w + fx;
                            const std::size_t row = (ch * spec.r + iy) * spec.c + ix;
                            t(row, col) = kernels[kappa](ch, fy, fx);
                        }
                    }
                }
            }
        }
    }
    return ToeplitzPlan{spec, std::move(t)};
}

ToeplitzPlan pool_plan(PoolKind kind, std::size_t channels, std::size_t r, std::size_t c,
                       std::size_t w_h, std::size_t w_w, std::size_t s_h, std::size_t s_w) {
    ConvSpec spec;
    spec.in_channels = channels;
    spec.out_kernels = channels;
    spec.f_h = w_h;
    spec.f_w = w_w;
    spec.r = r;
    spec.c = c;
    spec.s_h = s_h;
    spec.s_w = s_w;
    const double v = kind == PoolKind::Sum ? 1.0 : 1.0 / static_cast<double>(w_h * w_w);
    std::vector<Tensor3> kernels(channels, Tensor3(channels, w_h, w_w));
    for (std::size_t ch = 0; ch < channels; ch++) {
        for (std::size_t fy = 0; fy < w_h; fy++) {
            for (std::size_t fx = 0; fx < w_w; fx++) {
                kernels[ch](ch, fy, fx) = v;
            }
        }
    }
    return toeplitz_from_kernel(spec, kernels);
}

DiagonalSet conv_diagonals(const ToeplitzPlan &plan, std::size_t n, const HeParams &params,
                           const DiagonalOptions &opts) {
    return generalized_diagonals(plan.t, n, params, opts);
}

PackedBatch conv_layer(HeBackend &backend, const PackedBatch &a, const ToeplitzPlan &plan,
                       const DiagonalSet &diags) {
    if (a.shape.d() != plan.spec.d_in()) {
        throw ShapeError("conv_layer: input features " + std::to_string(a.shape.d()) +
                         " vs spec " + std::to_string(plan.spec.d_in()));
    }
    PackedBatch out = he_matmul(backend, a, diags);
    out.shape = BatchShape{a.shape.n, plan.spec.out_kernels, plan.spec.out_h(),
                           plan.spec.out_w()};
    return out;
}

Tensor3 conv_direct(const ConvSpec &spec, const Tensor3 &x, const std::vector<Tensor3> &kernels) {
    spec.validate();
    if (x.channels() != spec.in_channels || x.rows() != spec.r || x.cols() != spec.c) {
        throw ShapeError("conv_direct: input shape disagrees with spec");
    }
    Tensor3 out(spec.out_kernels, spec.out_h(), spec.out_w());
    for (std::size_t kappa = 0; kappa < spec.out_kernels; kappa++) {
        for (std::size_t oy = 0; oy < spec.out_h(); oy++) {
            for (std::size_t ox = 0; ox < spec.out_w(); ox++) {
                double acc = 0.0;
                for (std::size_t ch = 0; ch < spec.in_channels; ch++) {
                    for (std::size_t fy = 0; fy < spec.f_h; fy++) {
                        for (std::size_t fx = 0; fx < spec.f_w; fx++) {
                            acc += x(ch, oy * spec.s_h + fy, ox * spec.s_w + fx) *
                                   kernels[kappa](ch, fy, fx);
                        }
                    }
                }
                out(kappa, oy, ox) = acc;
            }
        }
    }
    return out;
}

Tensor3 pool_direct(PoolKind kind, const Tensor3 &x, std::size_t w_h, std::size_t w_w,
                    std::size_t s_h, std::size_t s_w) {
    const double scale = kind == PoolKind::Sum ? 1.0 : 1.0 / static_cast<double>(w_h * w_w);
    ConvSpec spec;
    spec.in_channels = x.channels();
    spec.out_kernels = x.channels();
    spec.f_h = w_h;
    spec.f_w = w_w;
    spec.r = x.rows();
    spec.c = x.cols();
    spec.s_h = s_h;
    spec.s_w = s_w;
    spec.validate();
    Tensor3 out(x.channels(), spec.out_h(), spec.out_w());
    for (std::size_t ch = 0; ch < x.channels(); ch++) {
        for (std::size_t oy = 0; oy < spec.out_h(); oy++) {
            for (std::size_t ox = 0; ox < spec.out_w(); ox++) {
                double acc = 0.0;
                for (std::size_t fy = 0; fy < w_h; fy++) {
                    for (std::size_t fx = 0; fx < w_w; fx++) {
                        acc += x(ch, oy * s_h + fy, ox * s_w + fx);
                    }
                }
                out(ch, oy, ox) = acc * scale;
            }
        }
    }
    return out;
}

}  // namespace slotflow
