// SPDX-License-Identifier: Apache-2.0

#ifndef SLOTFLOW_PIPELINE_HPP
#define SLOTFLOW_PIPELINE_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "slotflow/backend.hpp"
#include "slotflow/blockplan.hpp"
#include "slotflow/model.hpp"
#include "slotflow/mpc.hpp"
#include "slotflow/types.hpp"

namespace slotflow {

enum class ActMode { Exact, Chebyshev };

// Plaintext reference inference: batch rows are flattened samples (n x d_in),
// the result is n x d_out. Chebyshev mode runs activations through the same
// interpolants the encrypted path uses.
Matrix infer_plain(const ModelSpec &model, const Matrix &batch, ActMode mode = ActMode::Exact);

// How the executor expects its input partitioned: grid (q x p), per-block
// lane stride and complex pairing of the plan's first row.
struct InputPacking {
    std::size_t q = 1;
    std::size_t p = 1;
    std::size_t stride = 0;
    bool compressed = false;
};
InputPacking input_packing(const ModelSpec &model, const BlockPlan &plan);

struct EvalContext {
    // Set to encrypt per-layer weights and biases under this key; matmul
    // products then count ct_mults. Unset means plaintext masks (pt_mults).
    std::optional<KeyId> weight_key;
    // Refresh via the cohort's collective protocol instead of the
    // centralized procedure; needs cohort and bus.
    bool collective = false;
    std::vector<PartyState> cohort;
    Bus *bus = nullptr;
};

// Blockwise evaluation of model under plan. Weights are partitioned per the
// plan's geometry layer by layer; refreshes follow refresh_schedule, applied
// to every live block. The operations performed equal
// cost_of(plan, model, params, opts) field for field.
BlockMatrix evaluate_encrypted(HeBackend &backend, const ModelSpec &model,
                               const BlockPlan &plan, const BlockMatrix &input,
                               const EvalContext &ctx = {});

// Deployment settings: who holds data and model, and how refreshes run.
// 1: client data encrypted, provider's plaintext weights.
// 2: provider's encrypted weights, client's plaintext data, oblivious delivery.
// 3: data and weights under the cohort's collective key, key-switched back.
struct ScenarioConfig {
    int scenario = 1;
    std::size_t n_parties = 3;  // scenario 3 cohort size
    HeParams params;
    std::optional<BlockPlan> plan;  // unset = plan_search
    // Refresh mode; unset defaults to collective in scenario 3, centralized
    // otherwise. Collective is only valid in scenario 3.
    std::optional<bool> collective_bootstrap;
    std::uint64_t seed = 0;
    double latency_ms = 0.0;
    double jitter_ms = 0.0;
    std::size_t max_split = 64;  // planner bound when plan is unset

    void validate() const;
};

struct RunResult {
    Matrix predictions;  // n x d_out
    BlockPlan plan;
    std::size_t chunks = 0;    // sub-batches executed
    OpCounters counters;       // whole run, delivery protocols included
    OpCounters eval_counters;  // evaluation only; chunks times the plan cost
    std::vector<TranscriptEntry> transcript;
    std::vector<AccessRecord> access_log;
    double virtual_time_ms = 0.0;
};

// End-to-end run of one scenario on a batch of flattened samples, including
// key setup, packing, sub-batching when the batch exceeds the plan's, the
// delivery protocol, and decryption by the entitled party.
RunResult run_scenario(const ScenarioConfig &cfg, const ModelSpec &model, const Matrix &batch);

}  // namespace slotflow

#endif
