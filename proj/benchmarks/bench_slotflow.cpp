// SPDX-License-Identifier: Apache-2.0

// Microbenchmarks for the hot paths: the rotation-and-multiply product in
// both mask flavours, interpolant evaluation by degree, and one small
// end-to-end scenario run.

#include <benchmark/benchmark.h>

#include <random>

#include "slotflow/slotflow.hpp"

using namespace slotflow;

namespace {

HeParams bench_params(std::size_t slots) {
    HeParams p;
    p.slot_count = slots;
    p.max_level = 20;
    p.post_bootstrap_level = 19;
    p.bootstrap_depth_cost = 1;
    return p;
}

Matrix random_matrix(std::mt19937_64 &rng, std::size_t r, std::size_t c, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Matrix m(r, c);
    for (double &v : m.data()) {
        v = u(rng);
    }
    return m;
}

void bm_matmul(benchmark::State &state, bool compressed) {
    const std::size_t d = static_cast<std::size_t>(state.range(0));
    const HeParams hp = bench_params(8192);
    SimBackend be(hp);
    std::mt19937_64 rng(1);
    Matrix a = random_matrix(rng, 8, d);
    Matrix w = random_matrix(rng, d, d);
    DiagonalOptions dop;
    dop.compressed = compressed;
    DiagonalSet dw = generalized_diagonals(w, 8, hp, dop);
    PackedBatch pa = compressed ? complex_compress_input(be, a) : pack_matrix(be, a);
    for (auto _ : state) {
        PackedBatch out = compressed ? he_matmul_complex(be, pa, dw) : he_matmul(be, pa, dw);
        benchmark::DoNotOptimize(out.ct.op_log());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(8 * d * d));
}

void BM_MatmulPlain(benchmark::State &state) { bm_matmul(state, false); }
void BM_MatmulCompressed(benchmark::State &state) { bm_matmul(state, true); }

void BM_Chebyshev(benchmark::State &state) {
    const int degree = static_cast<int>(state.range(0));
    const HeParams hp = bench_params(8192);
    SimBackend be(hp);
    ChebApprox ap = chebyshev_fit(activation_function("sigmoid"), -8.0, 8.0, degree);
    std::vector<double> xs(hp.slot_count, 0.37);
    CipherVec ct = be.encrypt(be.encode_real(xs), KeyId::client());
    for (auto _ : state) {
        CipherVec out = eval_cheb_encrypted(be, ap, ct);
        benchmark::DoNotOptimize(out.level());
    }
}

void BM_Scenario(benchmark::State &state) {
    const int scenario = static_cast<int>(state.range(0));
    std::mt19937_64 rng(2);
    ModelSpec model;
    model.in_cols = 16;
    FcLayer fc1;
    fc1.d_in = 16;
    fc1.d_out = 16;
    fc1.weights = random_matrix(rng, 16, 16, 0.2);
    model.layers.emplace_back(std::move(fc1));
    ActLayer act;
    act.function = "relu";
    act.degree = 7;
    model.layers.emplace_back(act);
    FcLayer fc2;
    fc2.d_in = 16;
    fc2.d_out = 4;
    fc2.weights = random_matrix(rng, 16, 4, 0.2);
    model.layers.emplace_back(std::move(fc2));
    model.validate();

    Matrix batch = random_matrix(rng, 8, 16);
    ScenarioConfig cfg;
    cfg.scenario = scenario;
    cfg.params = bench_params(4096);
    for (auto _ : state) {
        RunResult r = run_scenario(cfg, model, batch);
        benchmark::DoNotOptimize(r.predictions.data());
    }
}

}  // namespace

BENCHMARK(BM_MatmulPlain)->Arg(16)->Arg(64)->Arg(256);
BENCHMARK(BM_MatmulCompressed)->Arg(16)->Arg(64)->Arg(256);
BENCHMARK(BM_Chebyshev)->Arg(3)->Arg(7)->Arg(15)->Arg(63);
BENCHMARK(BM_Scenario)->Arg(1)->Arg(2)->Arg(3);

BENCHMARK_MAIN();
