// SPDX-License-Identifier: Apache-2.0

#ifndef SLOTFLOW_LINALG_HPP
#define SLOTFLOW_LINALG_HPP

#include <cstddef>
#include <vector>

#include "slotflow/backend.hpp"
#include "slotflow/packing.hpp"
#include "slotflow/types.hpp"

namespace slotflow {

// How diagonal masks cover the slot ring.
//
// Tiled masks are defined over every payload copy; they require both the
// input and output periods to divide slot_count and yield outputs that are
// again exactly periodic, so layers chain with no repacking. CopyZero masks
// live in copy 0 only: they work for arbitrary lane counts (the payload's
// ragged replication supplies the wrapped entries) and use exactly d
// multiplications, but the product is valid in copy 0 only.
enum class MaskMode { Auto, Tiled, CopyZero };

struct DiagonalOptions {
    bool compressed = false;
    // Input lane stride; 0 means the natural lane count (d, or ceil(d/2)
    // when compressed). Padded strides must still be >= the lane count.
    std::size_t in_stride = 0;
    std::size_t out_stride = 0;  // 0 means h
    MaskMode mode = MaskMode::Auto;
};

// Weight matrix prepared for rotation-and-multiply evaluation. Summand i
// multiplies the input rotated left by n*i slots (i lanes); the masks realize
// W_{(i+j) mod d, j} replicated n times along each lane.
// With compression, adjacent weight rows are paired as 0.5*(W_{2u} - i*W_{2u+1})
// so one product evaluates two, and the 0.5 pre-scales the final real-part
// extraction (conjugate + add, no constant multiply).
class DiagonalSet {
  public:
    std::size_t d = 0;           // true input features
    std::size_t h = 0;           // true output features
    std::size_t n = 0;           // batch replication
    std::size_t in_stride = 0;   // input lanes per copy (incl. padding)
    std::size_t out_stride = 0;  // output lanes per copy
    bool compressed = false;
    bool tiled = false;
    std::size_t num_diags = 0;  // = in_stride; ceil(d/2) or d with defaults

    bool encrypted() const { return !enc_.empty(); }

    // Full-slot plaintext mask of summand i. Throws on encrypted sets.
    const std::vector<Complex> &mask(std::size_t i) const;
    const CipherVec &mask_ct(std::size_t i) const;

    // Copy-0 view of diagonal i, restricted to the h*n meaningful slots:
    // position j*n + t holds W_{(i+j) mod d, j}.
    std::vector<Complex> diagonal(std::size_t i) const;

  private:
    friend DiagonalSet generalized_diagonals(const Matrix &, std::size_t, const HeParams &,
                                             const DiagonalOptions &);
    friend DiagonalSet encrypt_diagonals(HeBackend &, const DiagonalSet &, const KeyId &);
    std::vector<std::vector<Complex>> masks_;
    std::vector<CipherVec> enc_;
};

// Build the generalized diagonals of w (d x h, rows indexed by input feature)
// for batches of n samples. Mask mode Auto picks Tiled whenever both periods
// divide slot_count, CopyZero otherwise.
DiagonalSet generalized_diagonals(const Matrix &w, std::size_t n, const HeParams &params,
                                  const DiagonalOptions &opts = {});

// Encrypt every mask under `key`; the plaintext masks are dropped from the
// returned set.
DiagonalSet encrypt_diagonals(HeBackend &backend, const DiagonalSet &set, const KeyId &key);

// A (packed n x d) times W (d x h) -> packed n x h, consuming one level.
// Uses num_diags multiplications (plaintext masks count pt_mults, encrypted
// masks ct_mults), num_diags - 1 rotations, and with compression one trailing
// conjugate + add. Summands are accumulated in ascending diagonal order.
PackedBatch he_matmul(HeBackend &backend, const PackedBatch &a, const DiagonalSet &w);

// he_matmul restricted to a compressed set (the factor-2 path).
PackedBatch he_matmul_complex(HeBackend &backend, const PackedBatch &a, const DiagonalSet &w);

// Slot vector carrying bias[j] in every slot of feature lane j, replicated
// into every payload copy of o's layout. Used for both plain and encrypted
// bias addition.
std::vector<Complex> bias_plaintext(const PackedBatch &o, const std::vector<double> &bias);

// Add bias[j] to every slot of feature lane j, at zero level cost.
PackedBatch add_bias(HeBackend &backend, const PackedBatch &o, const std::vector<double> &bias);

}  // namespace slotflow

#endif
