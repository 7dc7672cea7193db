// SPDX-License-Identifier: Apache-2.0

#ifndef SLOTFLOW_BLOCKPLAN_HPP
#define SLOTFLOW_BLOCKPLAN_HPP

#include <cstddef>
#include <utility>
#include <vector>

#include "slotflow/backend.hpp"
#include "slotflow/linalg.hpp"
#include "slotflow/model.hpp"
#include "slotflow/packing.hpp"
#include "slotflow/types.hpp"

namespace slotflow {

// A batch matrix cut into a q x p grid of packed blocks. Every block is
// padded to the same n_block x w shape (zero rows/columns), so grid cells are
// interchangeable in shape; assemble() crops back to the true n x d.
struct BlockMatrix {
    std::size_t q = 0, p = 0;
    std::size_t n = 0, d = 0;  // true dims
    std::size_t n_block = 0;   // rows per block, ceil(n/q)
    std::size_t w = 0;         // feature columns per block, ceil(d/p)
    std::vector<PackedBatch> blocks;  // row-major q*p

    PackedBatch &at(std::size_t i, std::size_t k) { return blocks[i * p + k]; }
    const PackedBatch &at(std::size_t i, std::size_t k) const { return blocks[i * p + k]; }
};

struct PartitionOptions {
    // Lane stride per block; 0 means the natural lane count.
    std::size_t stride = 0;
    bool compressed = false;
};

BlockMatrix partition(HeBackend &backend, const Matrix &a, std::size_t q, std::size_t p,
                      const PartitionOptions &opts = {});

// Encrypt every block in place (adds one key layer per block).
BlockMatrix encrypt_blocks(HeBackend &backend, const BlockMatrix &a, const KeyId &key);
BlockMatrix decrypt_blocks(HeBackend &backend, const BlockMatrix &a, const KeyId &key);

// Requires readable (layer-free) blocks.
Matrix assemble(const BlockMatrix &a);

// A weight matrix cut into a p x m grid of diagonal sets, each padded to
// w_in x w_out.
struct BlockWeights {
    std::size_t p = 0, m = 0;
    std::size_t d = 0, h = 0;  // true dims
    std::size_t w_in = 0, w_out = 0;
    std::vector<DiagonalSet> sets;  // row-major p*m

    DiagonalSet &at(std::size_t k, std::size_t j) { return sets[k * m + j]; }
    const DiagonalSet &at(std::size_t k, std::size_t j) const { return sets[k * m + j]; }
};

struct WeightPartitionOptions {
    bool compressed = false;
    std::size_t in_stride = 0;
    std::size_t out_stride = 0;
};

BlockWeights partition_weights(const Matrix &w, std::size_t p, std::size_t m,
                               std::size_t n_block, const HeParams &params,
                               const WeightPartitionOptions &opts = {});

BlockWeights encrypt_block_weights(HeBackend &backend, const BlockWeights &w, const KeyId &key);

// Blocked product: out(i,j) = sum_k a(i,k) * w(k,j), each term one he_matmul,
// partial sums folded in ascending k.
BlockMatrix block_matmul(HeBackend &backend, const BlockMatrix &a, const BlockWeights &w);

// bias holds one entry per true output feature; each block receives its
// zero-padded slice in one plaintext addition.
BlockMatrix block_add_bias(HeBackend &backend, const BlockMatrix &o,
                           const std::vector<double> &bias);

// One plan row per model layer. Linear layers carry their grid splits;
// activation rows inherit the current grid (p = m = the data's column split)
// and have diag_count 0.
struct BlockPlanLayer {
    std::size_t q = 1, p = 1, m = 1;
    std::size_t diag_count = 0;
    bool compressed = false;
};

struct BlockPlan {
    std::size_t batch = 1;
    std::vector<BlockPlanLayer> layers;
    OpCounters predicted_cost;
};

// Padded per-block geometry of a linear layer under a plan row. Strides are
// rounded to powers of two so periods divide the slot ring and layer outputs
// chain with no repacking.
struct LayerGeom {
    std::size_t n_block = 0;
    std::size_t w_in = 0, w_out = 0;
    std::size_t lanes_in = 0;
    std::size_t stride_in = 0, stride_out = 0;
    std::size_t diag_count = 0;
};

LayerGeom block_layer_geom(std::size_t d_in, std::size_t d_out, const BlockPlanLayer &row,
                           std::size_t batch);

// Multiplicative depth each layer consumes: 1 for fc/conv/pool, the
// interpolant depth for activations.
std::vector<int> layer_depths(const ModelSpec &model);

// Greedy refresh schedule: entry t tells whether every live block must be
// refreshed before layer t runs. Collective refreshes restore to max_level,
// centralized ones to post_bootstrap_level. Depends only on the level
// budget, never on grid splits. Throws Infeasible when some layer's depth
// exceeds even a fresh level budget.
std::vector<bool> refresh_schedule(const ModelSpec &model, const HeParams &params,
                                   bool collective);

struct CostOptions {
    // Encrypted weights count matmul products as ct_mults instead of pt_mults.
    bool weights_encrypted = false;
    // Collective refreshes restore to max_level and are priced in rounds and
    // messages; centralized ones restore to post_bootstrap_level.
    bool collective_bootstrap = false;
    std::size_t n_parties = 0;
};

// Static prediction of the evaluation-phase counters for running `model`
// under `plan`: block products, bias additions, activation evaluations and
// greedily inserted refreshes. Matches the executed counters exactly.
// Delivery protocols are not included.
OpCounters cost_of(const BlockPlan &plan, const ModelSpec &model, const HeParams &params,
                   const CostOptions &opts = {});

struct PlanSearchOptions {
    std::size_t n_hint = 0;     // 0 = optimize the batch freely
    std::size_t max_split = 64; // grid split search bound
    CostOptions cost;
};

// Grid split candidates for a dimension of size dim: powers of two up to
// min(max_split, next_pow2(dim)). Batch candidates reuse this with
// dim = slot_count; row splits additionally must divide the batch.
std::vector<std::size_t> split_candidates(std::size_t dim, std::size_t max_split);

// Strict-weak order used to pick plans: amortized total multiplications per
// sample, then amortized rotations, then amortized bootstraps, then smaller
// batch, then lexicographically smaller rows. Comparisons are exact
// (cross-multiplied integers, no floating point).
bool plan_better(const BlockPlan &a, const BlockPlan &b);

// Minimizes amortized multiplications per sample (ties: rotations, then
// bootstraps, then smaller batch) over power-of-two batches and grid splits,
// with exact dynamic programming over per-layer splits. Throws Infeasible
// when no plan fits the slot and level budget.
BlockPlan plan_search(const ModelSpec &model, const HeParams &params,
                      const PlanSearchOptions &opts = {});

// Chunks of at most plan.batch samples covering n; the last chunk may be
// short and is zero-padded at execution time.
std::vector<std::pair<std::size_t, std::size_t>> sub_batch(std::size_t n,
                                                           const BlockPlan &plan);

}  // namespace slotflow

#endif
