// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "oracles.hpp"

using namespace slotflow;

namespace {

HeParams params_with(std::size_t slots) {
    HeParams p;
    p.slot_count = slots;
    p.max_level = 8;
    p.post_bootstrap_level = 8;
    return p;
}

Tensor3 random_tensor(std::mt19937_64 &rng, std::size_t ch, std::size_t r, std::size_t c) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Tensor3 t(ch, r, c);
    for (std::size_t i = 0; i < ch * r * c; i++) {
        t.data()[i] = u(rng);
    }
    return t;
}

double max_abs_diff(const Tensor3 &a, const Tensor3 &b) {
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); i++) {
        worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    }
    return worst;
}

}  // namespace

TEST_CASE("spec geometry and validation") {
    ConvSpec s;
    s.in_channels = 2;
    s.out_kernels = 3;
    s.f_h = 2;
    s.f_w = 3;
    s.r = 6;
    s.c = 7;
    s.s_h = 2;
    s.s_w = 1;
    CHECK(s.out_h() == 3);
    CHECK(s.out_w() == 5);
    CHECK(s.d_in() == 84);
    CHECK(s.d_out() == 45);
    CHECK_NOTHROW(s.validate());
    s.f_h = 7;  // taller than the input
    CHECK_THROWS_AS(s.validate(), ShapeError);
    s.f_h = 2;
    s.s_w = 0;
    CHECK_THROWS_AS(s.validate(), ShapeError);
}

TEST_CASE("hand-computed 3x3 single-kernel lowering") {
    // X = [[1,2,3],[4,5,6],[7,8,9]], K = [[1,0],[0,-1]], stride 1.
    // Cross-correlation gives [[1*1-5], [2-6], [4-8], [5-9]] = [-4,-4,-4,-4].
    ConvSpec spec;
    spec.r = 3;
    spec.c = 3;
    spec.f_h = 2;
    spec.f_w = 2;
    Tensor3 x(1, 3, 3);
    for (std::size_t i = 0; i < 9; i++) {
        x.data()[i] = double(i + 1);
    }
    Tensor3 k(1, 2, 2);
    k(0, 0, 0) = 1.0;
    k(0, 0, 1) = 0.0;
    k(0, 1, 0) = 0.0;
    k(0, 1, 1) = -1.0;

    Tensor3 direct = conv_direct(spec, x, {k});
    CHECK(direct.channels() == 1);
    CHECK(direct.rows() == 2);
    CHECK(direct.cols() == 2);
    for (std::size_t i = 0; i < 4; i++) {
        CHECK(direct.data()[i] == -4.0);
    }

    ToeplitzPlan plan = toeplitz_from_kernel(spec, {k});
    CHECK(plan.t.rows() == 9);
    CHECK(plan.t.cols() == 4);
    // Column for output (0,0) holds K at the top-left receptive field.
    CHECK(plan.t(0, 0) == 1.0);
    CHECK(plan.t(4, 0) == -1.0);
    CHECK(plan.t(1, 0) == 0.0);
    // Lowered product equals the direct result.
    auto flat = row_flatten(x);
    Matrix rowvec(1, 9);
    for (std::size_t i = 0; i < 9; i++) {
        rowvec(0, i) = flat[i];
    }
    Matrix lowered = matmul(rowvec, plan.t);
    for (std::size_t i = 0; i < 4; i++) {
        CHECK(lowered(0, i) == -4.0);
    }
}

TEST_CASE("direct convolution matches the independent reference") {
    std::mt19937_64 rng(31);
    struct Geo {
        std::size_t ch, k, r, c, fh, fw, sh, sw;
    };
    for (const Geo &g : {Geo{1, 1, 4, 4, 2, 2, 1, 1}, Geo{2, 3, 5, 6, 3, 2, 1, 2},
                         Geo{3, 2, 6, 6, 2, 2, 2, 2}, Geo{1, 4, 7, 5, 3, 3, 2, 1}}) {
        ConvSpec spec;
        spec.in_channels = g.ch;
        spec.out_kernels = g.k;
        spec.r = g.r;
        spec.c = g.c;
        spec.f_h = g.fh;
        spec.f_w = g.fw;
        spec.s_h = g.sh;
        spec.s_w = g.sw;
        Tensor3 x = random_tensor(rng, g.ch, g.r, g.c);
        std::vector<Tensor3> kernels;
        for (std::size_t i = 0; i < g.k; i++) {
            kernels.push_back(random_tensor(rng, g.ch, g.fh, g.fw));
        }
        Tensor3 mine = conv_direct(spec, x, kernels);
        Tensor3 ref = oracles::naive_conv(x, kernels, g.sh, g.sw);
        CHECK(max_abs_diff(mine, ref) == 0.0);
    }
}

TEST_CASE("lowered matrix path equals direct convolution on packed batches") {
    SimBackend be(params_with(1024));
    std::mt19937_64 rng(32);
    struct Geo {
        std::size_t n, ch, k, r, c, fh, fw, sh, sw;
    };
    for (const Geo &g : {Geo{2, 1, 2, 4, 4, 2, 2, 1, 1}, Geo{3, 2, 2, 5, 5, 2, 3, 1, 2},
                         Geo{1, 3, 1, 6, 4, 3, 2, 3, 2}, Geo{4, 1, 3, 5, 5, 3, 3, 2, 2}}) {
        ConvSpec spec;
        spec.in_channels = g.ch;
        spec.out_kernels = g.k;
        spec.r = g.r;
        spec.c = g.c;
        spec.f_h = g.fh;
        spec.f_w = g.fw;
        spec.s_h = g.sh;
        spec.s_w = g.sw;
        std::vector<Tensor3> samples;
        for (std::size_t i = 0; i < g.n; i++) {
            samples.push_back(random_tensor(rng, g.ch, g.r, g.c));
        }
        std::vector<Tensor3> kernels;
        for (std::size_t i = 0; i < g.k; i++) {
            kernels.push_back(random_tensor(rng, g.ch, g.fh, g.fw));
        }
        ToeplitzPlan plan = toeplitz_from_kernel(spec, kernels);
        DiagonalSet diags = conv_diagonals(plan, g.n, be.params());
        PackedBatch pa = pack_batch(be, samples);
        PackedBatch out = conv_layer(be, pa, plan, diags);
        CHECK(out.shape.d() == spec.d_out());
        Matrix got = unpack_batch(out);
        for (std::size_t i = 0; i < g.n; i++) {
            auto expect = row_flatten(conv_direct(spec, samples[i], kernels));
            for (std::size_t j = 0; j < expect.size(); j++) {
                CHECK(std::abs(got(i, j) - expect[j]) < 1e-12);
            }
        }
    }
}

TEST_CASE("kernel list must match the spec") {
    ConvSpec spec;
    spec.r = 4;
    spec.c = 4;
    spec.f_h = 2;
    spec.f_w = 2;
    spec.out_kernels = 2;
    std::mt19937_64 rng(33);
    CHECK_THROWS_AS(toeplitz_from_kernel(spec, {random_tensor(rng, 1, 2, 2)}), ShapeError);
    CHECK_THROWS_AS(toeplitz_from_kernel(spec, {random_tensor(rng, 1, 2, 2),
                                                random_tensor(rng, 2, 2, 2)}),
                    ShapeError);
    CHECK_THROWS_AS(toeplitz_from_kernel(spec, {random_tensor(rng, 1, 3, 2),
                                                random_tensor(rng, 1, 3, 2)}),
                    ShapeError);
}

TEST_CASE("pooling lowers to the channel-diagonal convolution") {
    std::mt19937_64 rng(34);
    for (std::size_t ch : {1, 2, 3}) {
        for (auto [wh, ww, sh, sw] : {std::array<std::size_t, 4>{2, 2, 2, 2},
                                      std::array<std::size_t, 4>{2, 2, 1, 1},
                                      std::array<std::size_t, 4>{3, 2, 1, 2}}) {
            Tensor3 x = random_tensor(rng, ch, 6, 6);
            for (PoolKind kind : {PoolKind::Sum, PoolKind::Average}) {
                ToeplitzPlan plan = pool_plan(kind, ch, 6, 6, wh, ww, sh, sw);
                CHECK(plan.spec.in_channels == ch);
                CHECK(plan.spec.out_kernels == ch);
                auto flat = row_flatten(x);
                Matrix rowvec(1, flat.size());
                for (std::size_t i = 0; i < flat.size(); i++) {
                    rowvec(0, i) = flat[i];
                }
                Matrix lowered = matmul(rowvec, plan.t);
                Tensor3 ref =
                    oracles::naive_pool(kind == PoolKind::Average, x, wh, ww, sh, sw);
                REQUIRE(lowered.cols() == ref.size());
                for (std::size_t i = 0; i < ref.size(); i++) {
                    CHECK(std::abs(lowered(0, i) - ref.data()[i]) < 1e-12);
                }
                Tensor3 direct = pool_direct(kind, x, wh, ww, sh, sw);
                CHECK(max_abs_diff(direct, ref) < 1e-15);
            }
        }
    }
}

TEST_CASE("pool plan keeps channels independent") {
    ToeplitzPlan plan = pool_plan(PoolKind::Sum, 2, 4, 4, 2, 2, 2, 2);
    // An input pixel of channel 0 never contributes to a channel-1 output.
    const std::size_t per_out = plan.spec.out_h() * plan.spec.out_w();
    for (std::size_t row = 0; row < 16; row++) {  // channel 0 inputs
        for (std::size_t col = per_out; col < 2 * per_out; col++) {
            CHECK(plan.t(row, col) == 0.0);
        }
    }
    for (std::size_t row = 16; row < 32; row++) {  // channel 1 inputs
        for (std::size_t col = 0; col < per_out; col++) {
            CHECK(plan.t(row, col) == 0.0);
        }
    }
}
