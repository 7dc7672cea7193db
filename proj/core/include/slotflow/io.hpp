// SPDX-License-Identifier: Apache-2.0

#ifndef SLOTFLOW_IO_HPP
#define SLOTFLOW_IO_HPP

#include <string>
#include <vector>

#include "slotflow/approx.hpp"
#include "slotflow/backend.hpp"
#include "slotflow/blockplan.hpp"
#include "slotflow/model.hpp"
#include "slotflow/mpc.hpp"
#include "slotflow/packing.hpp"
#include "slotflow/pipeline.hpp"
#include "slotflow/types.hpp"

namespace slotflow {

// File formats are JSON with a "format": 1 version field (model, batch, plan)
// and JSON lines for transcripts. Batches additionally load from CSV whose
// first line is n,channels,rows,cols. Content problems surface as ShapeError,
// unreadable paths as Error.

HeParams load_params(const std::string &path);
std::string params_json(const HeParams &params);

ModelSpec load_model(const std::string &path);
std::string model_json(const ModelSpec &model);
void save_model(const ModelSpec &model, const std::string &path);

struct BatchFile {
    BatchShape shape;
    Matrix data;  // n rows of flattened samples
};

BatchFile load_batch(const std::string &path);  // dispatches on .csv suffix
std::string batch_json(const BatchFile &batch);
void save_batch(const BatchFile &batch, const std::string &path);

BlockPlan load_plan(const std::string &path);
std::string plan_json(const BlockPlan &plan);
void save_plan(const BlockPlan &plan, const std::string &path);

std::string counters_json(const OpCounters &c);
std::string results_json(const RunResult &result, const std::string &transcript_path);
std::string approx_json(const std::string &function, const ChebApprox &fit);

void save_transcript(const std::vector<TranscriptEntry> &entries, const std::string &path);

void save_text(const std::string &text, const std::string &path);

}  // namespace slotflow

#endif
