// SPDX-License-Identifier: Apache-2.0

#include "slotflow/pipeline.hpp"

#include <string>
#include <utility>

#include "slotflow/conv.hpp"
#include "slotflow/linalg.hpp"

namespace slotflow {

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

Tensor3 row_to_tensor(const Matrix &x, std::size_t row, const LayerShape &s) {
    Tensor3 t(s.channels, s.rows, s.cols);
    for (std::size_t i = 0; i < t.size(); i++) {
        t.data()[i] = x(row, i);
    }
    return t;
}

// The lowering matrix of a linear layer given its input shape.
Matrix layer_weight_matrix(const LayerSpec &l, const LayerShape &in) {
    if (const auto *fc = std::get_if<FcLayer>(&l)) {
        return fc->weights;
    }
    if (const auto *cv = std::get_if<ConvLayer>(&l)) {
        return toeplitz_from_kernel(cv->spec, cv->kernels).t;
    }
    if (const auto *pl = std::get_if<PoolLayer>(&l)) {
        return pool_to_plan(*pl, in).t;
    }
    throw ShapeError("layer is not linear");
}

// Per-feature bias of a linear layer (channel biases expanded over positions);
// empty when the layer has none.
std::vector<double> layer_bias_vector(const LayerSpec &l, const LayerShape &out) {
    if (const auto *fc = std::get_if<FcLayer>(&l)) {
        return fc->bias;
    }
    if (const auto *cv = std::get_if<ConvLayer>(&l)) {
        if (cv->bias.empty()) {
            return {};
        }
        std::vector<double> b(out.d());
        const std::size_t per = out.rows * out.cols;
        for (std::size_t ch = 0; ch < out.channels; ch++) {
            for (std::size_t i = 0; i < per; i++) {
                b[ch * per + i] = cv->bias[ch];
            }
        }
        return b;
    }
    return {};
}

BlockMatrix add_block_bias(HeBackend &backend, const BlockMatrix &o,
                           const std::vector<double> &bias,
                           const std::optional<KeyId> &key) {
    if (!key) {
        return block_add_bias(backend, o, bias);
    }
    if (bias.size() != o.d) {
        throw ShapeError("bias length " + std::to_string(bias.size()) +
                         " does not match feature count " + std::to_string(o.d));
    }
    BlockMatrix out = o;
    for (std::size_t i = 0; i < o.q; i++) {
        for (std::size_t j = 0; j < o.p; j++) {
            std::vector<double> slice(o.w, 0.0);
            for (std::size_t c = 0; c < o.w; c++) {
                std::size_t gc = j * o.w + c;
                if (gc < o.d) {
                    slice[c] = bias[gc];
                }
            }
            PackedBatch &blk = out.at(i, j);
            CipherVec bct = backend.encrypt(backend.encode(bias_plaintext(blk, slice)), *key);
            blk.ct = backend.add(blk.ct, bct);
        }
    }
    return out;
}

}  // namespace

Matrix infer_plain(const ModelSpec &model, const Matrix &batch, ActMode mode) {
    model.validate();
    if (batch.cols() != model.d_in()) {
        throw ShapeError("batch has " + std::to_string(batch.cols()) +
                         " features, model expects " + std::to_string(model.d_in()));
    }
    Matrix x = batch;
    for (std::size_t t = 0; t < model.layers.size(); t++) {
        const LayerSpec &layer = model.layers[t];
        LayerShape in = shape_after(model, t);
        LayerShape out = shape_after(model, t + 1);
        if (const auto *fc = std::get_if<FcLayer>(&layer)) {
            x = matmul(x, fc->weights);
            if (!fc->bias.empty()) {
                for (std::size_t r = 0; r < x.rows(); r++) {
                    for (std::size_t c = 0; c < x.cols(); c++) {
                        x(r, c) += fc->bias[c];
                    }
                }
            }
        } else if (const auto *act = std::get_if<ActLayer>(&layer)) {
            if (mode == ActMode::Exact) {
                auto f = activation_function(act->function);
                for (std::size_t r = 0; r < x.rows(); r++) {
                    for (std::size_t c = 0; c < x.cols(); c++) {
                        x(r, c) = f(x(r, c));
                    }
                }
            } else {
                ChebApprox fit = fit_activation(*act);
                for (std::size_t r = 0; r < x.rows(); r++) {
                    for (std::size_t c = 0; c < x.cols(); c++) {
                        x(r, c) = eval_cheb_plain(fit, x(r, c));
                    }
                }
            }
        } else {
            Matrix nx(x.rows(), out.d());
            for (std::size_t r = 0; r < x.rows(); r++) {
                Tensor3 sample = row_to_tensor(x, r, in);
                Tensor3 res;
                if (const auto *cv = std::get_if<ConvLayer>(&layer)) {
                    res = conv_direct(cv->spec, sample, cv->kernels);
                    if (!cv->bias.empty()) {
                        for (std::size_t ch = 0; ch < res.channels(); ch++) {
                            for (std::size_t i = 0; i < res.rows(); i++) {
                                for (std::size_t j = 0; j < res.cols(); j++) {
                                    res(ch, i, j) += cv->bias[ch];
                                }
                            }
                        }
                    }
                } else {
                    const auto &pl = std::get<PoolLayer>(layer);
                    res = pool_direct(pl.kind, sample, pl.w_h, pl.w_w, pl.s_h, pl.s_w);
                }
                std::vector<double> flat = row_flatten(res);
                for (std::size_t c = 0; c < flat.size(); c++) {
                    nx(r, c) = flat[c];
                }
            }
            x = std::move(nx);
        }
    }
    return x;
}

InputPacking input_packing(const ModelSpec &model, const BlockPlan &plan) {
    InputPacking ip;
    if (plan.layers.empty()) {
        ip.stride = next_pow2(model.d_in());
        return ip;
    }
    const BlockPlanLayer &row0 = plan.layers[0];
    ip.q = row0.q;
    ip.p = row0.p;
    ip.compressed = row0.compressed;
    std::size_t w = ceil_div(model.d_in(), row0.p);
    ip.stride = next_pow2(row0.compressed ? (w + 1) / 2 : w);
    return ip;
}

BlockMatrix evaluate_encrypted(HeBackend &backend, const ModelSpec &model,
                               const BlockPlan &plan, const BlockMatrix &input,
                               const EvalContext &ctx) {
    const HeParams &params = backend.params();
    if (plan.layers.size() != model.layers.size()) {
        throw ShapeError("evaluate: plan has " + std::to_string(plan.layers.size()) +
                         " rows for " + std::to_string(model.layers.size()) + " layers");
    }
    if (ctx.collective && (ctx.bus == nullptr || ctx.cohort.size() < 2)) {
        throw ProtocolAborted("evaluate: collective refresh needs a cohort and a bus");
    }
    const std::vector<bool> refresh = refresh_schedule(model, params, ctx.collective);

    BlockMatrix cur = input;
    const std::size_t q = plan.layers.empty() ? 1 : plan.layers[0].q;
    if (cur.q != q) {
        throw ShapeError("evaluate: input row grid " + std::to_string(cur.q) +
                         " does not match the plan's " + std::to_string(q));
    }

    auto refresh_all = [&](BlockMatrix &bm) {
        for (auto &b : bm.blocks) {
            b.ct = ctx.collective ? cbootstrap(backend, b.ct, ctx.cohort, *ctx.bus)
                                  : backend.bootstrap_centralized(b.ct);
        }
    };

    for (std::size_t t = 0; t < model.layers.size(); t++) {
        const BlockPlanLayer &row = plan.layers[t];
        if (row.q != q || row.p != cur.p) {
            throw ShapeError("evaluate: plan row " + std::to_string(t) +
                             " does not match the data grid");
        }
        if (refresh[t]) {
            refresh_all(cur);
        }
        if (const auto *act = std::get_if<ActLayer>(&model.layers[t])) {
            ChebApprox fit = fit_activation(*act);
            for (auto &b : cur.blocks) {
                b.ct = eval_cheb_encrypted(backend, fit, b.ct);
            }
        } else {
            LayerShape in_shape = shape_after(model, t);
            LayerShape out_shape = shape_after(model, t + 1);
            LayerGeom g = block_layer_geom(in_shape.d(), out_shape.d(), row, plan.batch);
            Matrix w = layer_weight_matrix(model.layers[t], in_shape);
            WeightPartitionOptions wopts;
            wopts.compressed = row.compressed;
            wopts.in_stride = g.stride_in;
            wopts.out_stride = g.stride_out;
            BlockWeights bw = partition_weights(w, row.p, row.m, g.n_block, params, wopts);
            if (ctx.weight_key) {
                bw = encrypt_block_weights(backend, bw, *ctx.weight_key);
            }
            cur = block_matmul(backend, cur, bw);
            std::vector<double> bias = layer_bias_vector(model.layers[t], out_shape);
            if (!bias.empty()) {
                cur = add_block_bias(backend, cur, bias, ctx.weight_key);
            }
        }
    }
    return cur;
}

void ScenarioConfig::validate() const {
    params.validate();
    if (scenario < 1 || scenario > 3) {
        throw ShapeError("scenario must be 1, 2 or 3, got " + std::to_string(scenario));
    }
    if (collective_bootstrap.value_or(false) && scenario != 3) {
        throw ShapeError("collective refresh is only valid in scenario 3");
    }
    if (scenario == 3 && n_parties < 2) {
        throw ShapeError("scenario 3 needs a cohort of at least two parties");
    }
}

RunResult run_scenario(const ScenarioConfig &cfg, const ModelSpec &model, const Matrix &batch) {
    cfg.validate();
    model.validate();
    if (batch.rows() == 0) {
        throw ShapeError("run: empty batch");
    }
    if (batch.cols() != model.d_in()) {
        throw ShapeError("run: batch has " + std::to_string(batch.cols()) +
                         " features, model expects " + std::to_string(model.d_in()));
    }
    const bool collective = cfg.collective_bootstrap.value_or(cfg.scenario == 3);

    SimBackend backend(cfg.params);
    Bus bus(BusOptions{cfg.seed, cfg.latency_ms, cfg.jitter_ms});

    CostOptions copts;
    copts.weights_encrypted = cfg.scenario != 1;
    copts.collective_bootstrap = collective;
    copts.n_parties = cfg.n_parties;

    BlockPlan plan;
    if (cfg.plan) {
        plan = *cfg.plan;
    } else {
        // Plan for the requested batch when it fits, else let the search pick
        // the amortized-optimal batch and sub-batch over it.
        PlanSearchOptions popts;
        popts.max_split = cfg.max_split;
        popts.cost = copts;
        popts.n_hint = batch.rows();
        try {
            plan = plan_search(model, cfg.params, popts);
        } catch (const Infeasible &) {
            popts.n_hint = 0;
            plan = plan_search(model, cfg.params, popts);
        }
    }
    plan.predicted_cost = cost_of(plan, model, cfg.params, copts);

    const KeyId ckey = KeyId::client();
    const KeyId pkey = KeyId::provider();
    const KeyId collkey = KeyId::collective(cfg.n_parties);

    PartyState client{0, "client", Role::Client, {ckey}};
    PartyState provider{1, "provider", Role::Provider, {pkey}};
    std::vector<PartyState> cohort;
    if (cfg.scenario == 3) {
        cohort.push_back(PartyState{0, "master", Role::Client, {collkey, ckey}});
        for (std::size_t i = 1; i < cfg.n_parties; i++) {
            cohort.push_back(PartyState{i, "p" + std::to_string(i), Role::Peer, {collkey}});
        }
    }

    EvalContext ctx;
    if (cfg.scenario == 2) {
        ctx.weight_key = pkey;
    } else if (cfg.scenario == 3) {
        ctx.weight_key = collkey;
        ctx.collective = collective;
        ctx.cohort = cohort;
        ctx.bus = &bus;
    }

    const std::size_t n = batch.rows();
    RunResult result;
    result.predictions = Matrix(n, model.d_out());
    InputPacking ip = input_packing(model, plan);

    for (auto [off, len] : sub_batch(n, plan)) {
        Matrix chunk(plan.batch, model.d_in());
        for (std::size_t r = 0; r < len; r++) {
            for (std::size_t c = 0; c < chunk.cols(); c++) {
                chunk(r, c) = batch(off + r, c);
            }
        }
        PartitionOptions popts;
        popts.stride = ip.stride;
        popts.compressed = ip.compressed;
        BlockMatrix data = partition(backend, chunk, ip.q, ip.p, popts);
        if (cfg.scenario == 1) {
            data = encrypt_blocks(backend, data, ckey);
        } else if (cfg.scenario == 3) {
            data = encrypt_blocks(backend, data, collkey);
        }

        OpCounters before = backend.counters() + bus.totals();
        BlockMatrix out = evaluate_encrypted(backend, model, plan, data, ctx);
        result.eval_counters += (backend.counters() + bus.totals()) - before;

        if (cfg.scenario == 1) {
            out = decrypt_blocks(backend, out, ckey);
            for (std::size_t b = 0; b < out.blocks.size(); b++) {
                bus.note_access(client.name, "decrypt", ckey.str());
            }
            bus.note_access(client.name, "read", "");
        } else if (cfg.scenario == 2) {
            for (auto &b : out.blocks) {
                b.ct = obvdec(backend, b.ct, client, provider, pkey, bus);
            }
            bus.note_access(client.name, "read", "");
        } else {
            for (auto &b : out.blocks) {
                b.ct = ckeyswitch(backend, b.ct, ckey, cohort, bus);
            }
            out = decrypt_blocks(backend, out, ckey);
            for (std::size_t b = 0; b < out.blocks.size(); b++) {
                bus.note_access(cohort[0].name, "decrypt", ckey.str());
            }
            bus.note_access(cohort[0].name, "read", "");
        }

        Matrix res = assemble(out);
        for (std::size_t r = 0; r < len; r++) {
            for (std::size_t c = 0; c < res.cols(); c++) {
                result.predictions(off + r, c) = res(r, c);
            }
        }
        result.chunks++;
    }

    result.plan = std::move(plan);
    result.counters = backend.counters() + bus.totals();
    result.transcript = bus.transcript();
    result.access_log = bus.access_log();
    result.virtual_time_ms = bus.virtual_time_ms();
    return result;
}

}  // namespace slotflow
