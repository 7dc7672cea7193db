// SPDX-License-Identifier: Apache-2.0

#include "slotflow/blockplan.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <utility>

namespace slotflow {

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

Matrix slice_padded(const Matrix &a, std::size_t r0, std::size_t c0, std::size_t rows,
                    std::size_t cols) {
    Matrix out(rows, cols);
    for (std::size_t r = 0; r < rows && r0 + r < a.rows(); r++) {
        for (std::size_t c = 0; c < cols && c0 + c < a.cols(); c++) {
            out(r, c) = a(r0 + r, c0 + c);
        }
    }
    return out;
}

bool is_act(const LayerSpec &l) { return std::holds_alternative<ActLayer>(l); }

bool has_bias(const LayerSpec &l) {
    if (const auto *fc = std::get_if<FcLayer>(&l)) {
        return !fc->bias.empty();
    }
    if (const auto *cv = std::get_if<ConvLayer>(&l)) {
        return !cv->bias.empty();
    }
    return false;
}

}  // namespace

BlockMatrix partition(HeBackend &backend, const Matrix &a, std::size_t q, std::size_t p,
                      const PartitionOptions &opts) {
    if (q == 0 || p == 0) {
        throw ShapeError("partition: grid splits must be positive");
    }
    if (a.rows() == 0 || a.cols() == 0) {
        throw ShapeError("partition: empty matrix");
    }
    BlockMatrix out;
    out.q = q;
    out.p = p;
    out.n = a.rows();
    out.d = a.cols();
    out.n_block = ceil_div(a.rows(), q);
    out.w = ceil_div(a.cols(), p);
    out.blocks.reserve(q * p);
    for (std::size_t i = 0; i < q; i++) {
        for (std::size_t k = 0; k < p; k++) {
            Matrix blk = slice_padded(a, i * out.n_block, k * out.w, out.n_block, out.w);
            out.blocks.push_back(opts.compressed
                                     ? complex_compress_input(backend, blk, opts.stride)
                                     : pack_matrix(backend, blk, opts.stride));
        }
    }
    return out;
}

BlockMatrix encrypt_blocks(HeBackend &backend, const BlockMatrix &a, const KeyId &key) {
    BlockMatrix out = a;
    for (auto &b : out.blocks) {
        b.ct = backend.encrypt(b.ct, key);
    }
    return out;
}

BlockMatrix decrypt_blocks(HeBackend &backend, const BlockMatrix &a, const KeyId &key) {
    BlockMatrix out = a;
    for (auto &b : out.blocks) {
        b.ct = backend.decrypt(b.ct, key);
    }
    return out;
}

Matrix assemble(const BlockMatrix &a) {
    Matrix out(a.n, a.d);
    for (std::size_t i = 0; i < a.q; i++) {
        for (std::size_t k = 0; k < a.p; k++) {
            Matrix blk = unpack_batch(a.at(i, k));
            for (std::size_t r = 0; r < blk.rows(); r++) {
                std::size_t gr = i * a.n_block + r;
                if (gr >= a.n) {
                    break;
                }
                for (std::size_t c = 0; c < blk.cols(); c++) {
                    std::size_t gc = k * a.w + c;
                    if (gc < a.d) {
                        out(gr, gc) = blk(r, c);
                    }
                }
            }
        }
    }
    return out;
}

BlockWeights partition_weights(const Matrix &w, std::size_t p, std::size_t m,
                               std::size_t n_block, const HeParams &params,
                               const WeightPartitionOptions &opts) {
    if (p == 0 || m == 0) {
        throw ShapeError("partition_weights: grid splits must be positive");
    }
    if (w.rows() == 0 || w.cols() == 0) {
        throw ShapeError("partition_weights: empty matrix");
    }
    BlockWeights bw;
    bw.p = p;
    bw.m = m;
    bw.d = w.rows();
    bw.h = w.cols();
    bw.w_in = ceil_div(w.rows(), p);
    bw.w_out = ceil_div(w.cols(), m);
    DiagonalOptions dopts;
    dopts.compressed = opts.compressed;
    dopts.in_stride = opts.in_stride;
    dopts.out_stride = opts.out_stride;
    bw.sets.reserve(p * m);
    for (std::size_t k = 0; k < p; k++) {
        for (std::size_t j = 0; j < m; j++) {
            Matrix blk = slice_padded(w, k * bw.w_in, j * bw.w_out, bw.w_in, bw.w_out);
            bw.sets.push_back(generalized_diagonals(blk, n_block, params, dopts));
        }
    }
    return bw;
}

BlockWeights encrypt_block_weights(HeBackend &backend, const BlockWeights &w, const KeyId &key) {
    BlockWeights out = w;
    for (auto &s : out.sets) {
        s = encrypt_diagonals(backend, s, key);
    }
    return out;
}

BlockMatrix block_matmul(HeBackend &backend, const BlockMatrix &a, const BlockWeights &w) {
    if (a.p != w.p) {
        throw ShapeError("block_matmul: grid depths disagree (" + std::to_string(a.p) + " vs " +
                         std::to_string(w.p) + ")");
    }
    if (a.w != w.w_in) {
        throw ShapeError("block_matmul: block widths disagree (" + std::to_string(a.w) +
                         " vs " + std::to_string(w.w_in) + ")");
    }
    BlockMatrix out;
    out.q = a.q;
    out.p = w.m;
    out.n = a.n;
    out.d = w.h;
    out.n_block = a.n_block;
    out.w = w.w_out;
    out.blocks.reserve(out.q * out.p);
    for (std::size_t i = 0; i < a.q; i++) {
        for (std::size_t j = 0; j < w.m; j++) {
            PackedBatch acc = he_matmul(backend, a.at(i, 0), w.at(0, j));
            for (std::size_t k = 1; k < a.p; k++) {
                PackedBatch term = he_matmul(backend, a.at(i, k), w.at(k, j));
                acc.ct = backend.add(acc.ct, term.ct);
            }
            out.blocks.push_back(std::move(acc));
        }
    }
    return out;
}

BlockMatrix block_add_bias(HeBackend &backend, const BlockMatrix &o,
                           const std::vector<double> &bias) {
    if (bias.size() != o.d) {
        throw ShapeError("block_add_bias: bias length " + std::to_string(bias.size()) +
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
            out.at(i, j) = add_bias(backend, out.at(i, j), slice);
        }
    }
    return out;
}

LayerGeom block_layer_geom(std::size_t d_in, std::size_t d_out, const BlockPlanLayer &row,
                           std::size_t batch) {
    if (row.q == 0 || row.p == 0 || row.m == 0) {
        throw ShapeError("plan row: zero grid split");
    }
    if (batch == 0 || d_in == 0 || d_out == 0) {
        throw ShapeError("plan row: zero dimension");
    }
    LayerGeom g;
    g.n_block = ceil_div(batch, row.q);
    g.w_in = ceil_div(d_in, row.p);
    g.w_out = ceil_div(d_out, row.m);
    g.lanes_in = row.compressed ? (g.w_in + 1) / 2 : g.w_in;
    g.stride_in = next_pow2(g.lanes_in);
    g.stride_out = next_pow2(g.w_out);
    g.diag_count = g.stride_in;
    return g;
}

std::vector<int> layer_depths(const ModelSpec &model) {
    std::vector<int> out;
    out.reserve(model.layers.size());
    for (const auto &l : model.layers) {
        if (const auto *act = std::get_if<ActLayer>(&l)) {
            out.push_back(cheb_cost(act->degree).depth);
        } else {
            out.push_back(1);
        }
    }
    return out;
}

std::vector<bool> refresh_schedule(const ModelSpec &model, const HeParams &params,
                                   bool collective) {
    params.validate();
    const int target = collective ? params.max_level : params.post_bootstrap_level;
    std::vector<int> depths = layer_depths(model);
    std::vector<bool> out(depths.size(), false);
    int level = params.max_level;
    for (std::size_t t = 0; t < depths.size(); t++) {
        if (level < depths[t]) {
            out[t] = true;
            level = target;
        }
        if (level < depths[t]) {
            throw Infeasible("layer " + std::to_string(t) + " needs depth " +
                             std::to_string(depths[t]) + " but a refresh only restores level " +
                             std::to_string(target));
        }
        level -= depths[t];
    }
    return out;
}

OpCounters cost_of(const BlockPlan &plan, const ModelSpec &model, const HeParams &params,
                   const CostOptions &opts) {
    params.validate();
    if (plan.layers.size() != model.layers.size()) {
        throw ShapeError("cost: plan has " + std::to_string(plan.layers.size()) +
                         " rows for " + std::to_string(model.layers.size()) + " layers");
    }
    if (plan.batch == 0) {
        throw ShapeError("cost: zero batch");
    }
    if (opts.collective_bootstrap && opts.n_parties < 2) {
        throw ShapeError("cost: collective refresh needs at least two parties");
    }

    const std::vector<bool> refresh = refresh_schedule(model, params, opts.collective_bootstrap);
    const std::size_t s = params.slot_count;

    OpCounters c;
    LayerShape shape{model.in_channels, model.in_rows, model.in_cols};
    const std::size_t q = plan.layers.empty() ? 1 : plan.layers[0].q;
    const std::size_t n_block = ceil_div(plan.batch, q);
    if (!is_pow2(n_block)) {
        throw ShapeError("cost: batch/q must give a power-of-two block row count, got " +
                         std::to_string(n_block));
    }
    std::size_t cols = plan.layers.empty() ? 1 : plan.layers[0].p;

    auto refresh_blocks = [&](std::size_t blocks) {
        auto b = static_cast<std::int64_t>(blocks);
        c.bootstraps += b;
        if (opts.collective_bootstrap) {
            c.protocol_rounds += b;
            c.protocol_messages += 2 * static_cast<std::int64_t>(opts.n_parties - 1) * b;
        }
    };

    for (std::size_t t = 0; t < model.layers.size(); t++) {
        const BlockPlanLayer &row = plan.layers[t];
        if (row.q != q) {
            throw ShapeError("cost: row split must stay fixed across layers");
        }
        if (row.p != cols) {
            throw ShapeError("cost: layer " + std::to_string(t) + " expects column split " +
                             std::to_string(cols) + ", plan row has " + std::to_string(row.p));
        }
        if (row.compressed && t != 0) {
            throw ShapeError("cost: compression applies to the first layer only");
        }
        if (const auto *act = std::get_if<ActLayer>(&model.layers[t])) {
            if (row.m != cols || row.diag_count != 0) {
                throw ShapeError("cost: activation rows keep the grid");
            }
            std::size_t stride = next_pow2(ceil_div(shape.d(), cols));
            if (stride * n_block > s) {
                throw Infeasible("cost: activation blocks exceed slot capacity");
            }
            auto blocks = static_cast<std::int64_t>(q * cols);
            if (refresh[t]) {
                refresh_blocks(q * cols);
            }
            ChebCost cc = cheb_cost(act->degree);
            c.ct_mults += cc.ops.ct_mults * blocks;
            c.pt_mults += cc.ops.pt_mults * blocks;
            c.adds += cc.ops.adds * blocks;
            c.rotations += cc.ops.rotations * blocks;
            c.conjugations += cc.ops.conjugations * blocks;
        } else {
            LayerShape next = shape_after(model, t + 1);
            LayerGeom g = block_layer_geom(shape.d(), next.d(), row, plan.batch);
            if (row.diag_count != 0 && row.diag_count != g.diag_count) {
                throw ShapeError("cost: layer " + std::to_string(t) + " expects " +
                                 std::to_string(g.diag_count) + " diagonals, plan row has " +
                                 std::to_string(row.diag_count));
            }
            if (g.stride_in * g.n_block > s || g.stride_out * g.n_block > s) {
                throw Infeasible("cost: layer " + std::to_string(t) +
                                 " blocks exceed slot capacity");
            }
            if (refresh[t]) {
                refresh_blocks(q * row.p);
            }
            auto products = static_cast<std::int64_t>(q * row.p * row.m);
            auto diags = static_cast<std::int64_t>(g.diag_count);
            if (opts.weights_encrypted) {
                c.ct_mults += products * diags;
            } else {
                c.pt_mults += products * diags;
            }
            c.rotations += products * (diags - 1);
            c.adds += products * (diags - 1);
            if (row.compressed) {
                c.conjugations += products;
                c.adds += products;
            }
            c.adds += static_cast<std::int64_t>(q * row.m) *
                      static_cast<std::int64_t>(row.p - 1);
            if (has_bias(model.layers[t])) {
                c.adds += static_cast<std::int64_t>(q * row.m);
            }
            cols = row.m;
            shape = next;
        }
    }
    return c;
}

std::vector<std::size_t> split_candidates(std::size_t dim, std::size_t max_split) {
    std::vector<std::size_t> v;
    std::size_t cap = std::min(max_split, next_pow2(dim));
    for (std::size_t x = 1; x <= cap; x <<= 1) {
        v.push_back(x);
    }
    return v;
}

namespace {

// Ordering key of a DP partial: total (mults, rotations, bootstraps) within
// a fixed batch, ties broken by the lexicographically smallest split vector.
struct DpTriple {
    std::int64_t mults = 0;
    std::int64_t rot = 0;
    std::int64_t boots = 0;

    DpTriple operator+(const DpTriple &o) const {
        return DpTriple{mults + o.mults, rot + o.rot, boots + o.boots};
    }
    friend auto operator<=>(const DpTriple &, const DpTriple &) = default;
};

struct DpEntry {
    bool valid = false;
    DpTriple cost;
    std::vector<std::size_t> splits;  // p of the first layer, then m per linear layer
};

bool entry_better(const DpEntry &a, const DpEntry &b) {
    if (!b.valid) {
        return a.valid;
    }
    if (!a.valid) {
        return false;
    }
    if (a.cost != b.cost) {
        return a.cost < b.cost;
    }
    return a.splits < b.splits;
}

int cmp_amortized(std::int64_t xa, std::size_t ba, std::int64_t xb, std::size_t bb) {
    std::int64_t lhs = xa * static_cast<std::int64_t>(bb);
    std::int64_t rhs = xb * static_cast<std::int64_t>(ba);
    if (lhs != rhs) {
        return lhs < rhs ? -1 : 1;
    }
    return 0;
}

std::vector<std::size_t> plan_key(const BlockPlan &p) {
    std::vector<std::size_t> k;
    k.reserve(p.layers.size() * 4 + 1);
    k.push_back(p.layers.empty() ? 1 : p.layers[0].q);
    for (const auto &r : p.layers) {
        k.push_back(r.p);
        k.push_back(r.m);
        k.push_back(r.compressed ? 1 : 0);
        k.push_back(r.diag_count);
    }
    return k;
}

}  // namespace

bool plan_better(const BlockPlan &a, const BlockPlan &b) {
    int c = cmp_amortized(a.predicted_cost.total_mults(), a.batch,
                          b.predicted_cost.total_mults(), b.batch);
    if (c != 0) {
        return c < 0;
    }
    c = cmp_amortized(a.predicted_cost.rotations, a.batch, b.predicted_cost.rotations, b.batch);
    if (c != 0) {
        return c < 0;
    }
    c = cmp_amortized(a.predicted_cost.bootstraps, a.batch, b.predicted_cost.bootstraps,
                      b.batch);
    if (c != 0) {
        return c < 0;
    }
    if (a.batch != b.batch) {
        return a.batch < b.batch;
    }
    return plan_key(a) < plan_key(b);
}

BlockPlan plan_search(const ModelSpec &model, const HeParams &params,
                      const PlanSearchOptions &opts) {
    params.validate();
    model.validate();
    if (opts.max_split == 0) {
        throw ShapeError("plan search: max_split must be positive");
    }
    if (opts.cost.collective_bootstrap && opts.cost.n_parties < 2) {
        throw ShapeError("plan search: collective refresh needs at least two parties");
    }

    const std::size_t s = params.slot_count;
    const std::vector<bool> refresh =
        refresh_schedule(model, params, opts.cost.collective_bootstrap);

    // Model geometry shared by every candidate.
    const std::size_t nlayers = model.layers.size();
    std::vector<LayerShape> shapes(nlayers + 1);
    for (std::size_t t = 0; t <= nlayers; t++) {
        shapes[t] = shape_after(model, t);
    }
    std::vector<std::size_t> lin;
    for (std::size_t t = 0; t < nlayers; t++) {
        if (!is_act(model.layers[t])) {
            lin.push_back(t);
        }
    }
    // runs[i]: activation layers before lin[i]; runs[lin.size()]: trailing ones.
    std::vector<std::vector<std::size_t>> runs(lin.size() + 1);
    {
        std::size_t li = 0;
        for (std::size_t t = 0; t < nlayers; t++) {
            if (li < lin.size() && t == lin[li]) {
                li++;
            } else {
                runs[li].push_back(t);
            }
        }
    }
    std::vector<ChebCost> act_cost(nlayers);
    for (std::size_t t = 0; t < nlayers; t++) {
        if (const auto *act = std::get_if<ActLayer>(&model.layers[t])) {
            act_cost[t] = cheb_cost(act->degree);
        }
    }

    std::vector<std::size_t> batches;
    if (opts.n_hint > 0) {
        batches.push_back(next_pow2(opts.n_hint));
    } else {
        batches = split_candidates(s, s);
    }

    BlockPlan best;
    bool have_best = false;

    for (std::size_t batch : batches) {
        for (std::size_t q : split_candidates(batch, opts.max_split)) {
            const std::size_t n_block = batch / q;

            // Cost of an activation run on a q x cols grid, or invalid when
            // the packed blocks would not fit the slot ring.
            auto run_cost = [&](const std::vector<std::size_t> &run, std::size_t cols,
                                DpTriple &acc) {
                for (std::size_t t : run) {
                    std::size_t stride = next_pow2(ceil_div(shapes[t].d(), cols));
                    if (stride * n_block > s) {
                        return false;
                    }
                    auto blocks = static_cast<std::int64_t>(q * cols);
                    acc.mults +=
                        (act_cost[t].ops.ct_mults + act_cost[t].ops.pt_mults) * blocks;
                    if (refresh[t]) {
                        acc.boots += blocks;
                    }
                }
                return true;
            };

            for (int comp = 0; comp < 2; comp++) {
                const bool compressed = comp == 1;
                // Compression pairs real input features into complex lanes, so
                // it is only sound when the first layer consumes the raw input.
                if (compressed && (lin.empty() || lin[0] != 0)) {
                    continue;
                }

                std::map<std::size_t, DpEntry> dp;
                if (lin.empty()) {
                    DpEntry e;
                    e.valid = true;
                    e.splits = {1};
                    if (run_cost(runs[0], 1, e.cost)) {
                        dp[1] = e;
                    }
                } else {
                    for (std::size_t p1 : split_candidates(shapes[lin[0]].d(), opts.max_split)) {
                        DpEntry e;
                        e.valid = true;
                        e.splits = {p1};
                        if (run_cost(runs[0], p1, e.cost)) {
                            DpEntry &slot = dp[p1];
                            if (entry_better(e, slot)) {
                                slot = std::move(e);
                            }
                        }
                    }
                }

                bool dead = false;
                for (std::size_t li = 0; li < lin.size() && !dead; li++) {
                    const std::size_t t = lin[li];
                    const std::size_t d_in = shapes[t].d();
                    const std::size_t d_out = shapes[t + 1].d();
                    std::map<std::size_t, DpEntry> ndp;
                    for (const auto &[p, prev] : dp) {
                        for (std::size_t m : split_candidates(d_out, opts.max_split)) {
                            BlockPlanLayer row{q, p, m, 0, compressed && li == 0};
                            LayerGeom g = block_layer_geom(d_in, d_out, row, batch);
                            if (g.stride_in * g.n_block > s || g.stride_out * g.n_block > s) {
                                continue;
                            }
                            DpEntry e = prev;
                            e.splits.push_back(m);
                            auto products = static_cast<std::int64_t>(q * p * m);
                            auto diags = static_cast<std::int64_t>(g.diag_count);
                            e.cost.mults += products * diags;
                            e.cost.rot += products * (diags - 1);
                            if (refresh[t]) {
                                e.cost.boots += static_cast<std::int64_t>(q * p);
                            }
                            if (!run_cost(runs[li + 1], m, e.cost)) {
                                continue;
                            }
                            DpEntry &slot = ndp[m];
                            if (entry_better(e, slot)) {
                                slot = std::move(e);
                            }
                        }
                    }
                    dp = std::move(ndp);
                    dead = dp.empty();
                }
                if (dead || dp.empty()) {
                    continue;
                }

                DpEntry final;
                for (const auto &[m, e] : dp) {
                    if (entry_better(e, final)) {
                        final = e;
                    }
                }
                if (!final.valid) {
                    continue;
                }

                // Materialize the plan rows from the chosen split vector.
                BlockPlan plan;
                plan.batch = batch;
                plan.layers.resize(nlayers);
                std::size_t cols = final.splits[0];
                std::size_t next_split = 1;
                std::size_t li = 0;
                for (std::size_t t = 0; t < nlayers; t++) {
                    if (li < lin.size() && t == lin[li]) {
                        std::size_t m = final.splits[next_split++];
                        BlockPlanLayer row{q, cols, m, 0, compressed && li == 0};
                        row.diag_count =
                            block_layer_geom(shapes[t].d(), shapes[t + 1].d(), row, batch)
                                .diag_count;
                        plan.layers[t] = row;
                        cols = m;
                        li++;
                    } else {
                        plan.layers[t] = BlockPlanLayer{q, cols, cols, 0, false};
                    }
                }
                plan.predicted_cost = cost_of(plan, model, params, opts.cost);
                if (!have_best || plan_better(plan, best)) {
                    best = std::move(plan);
                    have_best = true;
                }
            }
        }
    }

    if (!have_best) {
        throw Infeasible("plan search: no feasible block configuration for these parameters");
    }
    return best;
}

std::vector<std::pair<std::size_t, std::size_t>> sub_batch(std::size_t n,
                                                           const BlockPlan &plan) {
    if (plan.batch == 0) {
        throw ShapeError("sub_batch: zero plan batch");
    }
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t off = 0; off < n; off += plan.batch) {
        out.emplace_back(off, std::min(plan.batch, n - off));
    }
    return out;
}

}  // namespace slotflow
