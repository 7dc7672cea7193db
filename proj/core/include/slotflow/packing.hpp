// SPDX-License-Identifier: Apache-2.0

#ifndef SLOTFLOW_PACKING_HPP
#define SLOTFLOW_PACKING_HPP

#include <cstddef>
#include <vector>

#include "slotflow/backend.hpp"
#include "slotflow/types.hpp"

namespace slotflow {

// Logical shape of a batch: n samples of channels x rows x cols each.
struct BatchShape {
    std::size_t n = 0;
    std::size_t h = 1;  // channels
    std::size_t r = 1;  // rows
    std::size_t c = 1;  // cols

    std::size_t d() const { return h * r * c; }
    friend bool operator==(const BatchShape &, const BatchShape &) = default;
};

enum class Layout {
    ColumnMajor,              // slot j*n + k holds feature j of sample k
    ColumnMajorComplexPaired  // lane u holds feature 2u + i * feature 2u+1
};

// A batch laid out in slots. Feature lanes are n slots wide; a full payload
// copy spans stride * n slots and the payload is replicated into every whole
// copy that fits (`copies` of them), so that cyclic rotation by whole lanes
// wraps features correctly. Slots outside the replicated copies are zero.
// Sample k, feature j lives at slot j*n + k of any copy.
struct PackedBatch {
    CipherVec ct;
    BatchShape shape;
    Layout layout = Layout::ColumnMajor;
    // Feature lanes per copy; >= logical lane count when padded.
    std::size_t stride = 0;
    // Whole payload copies present in the slot vector.
    std::size_t copies = 0;

    // Logical feature lanes: d, or ceil(d/2) when complex-paired.
    std::size_t lanes() const {
        return layout == Layout::ColumnMajorComplexPaired ? (shape.d() + 1) / 2 : shape.d();
    }
    // Slots holding meaningful data within copy 0.
    std::size_t valid_len() const { return lanes() * shape.n; }
    // Slot length of one payload copy.
    std::size_t period() const { return stride * shape.n; }
    // True when the copies tile the slot vector exactly; such batches stay
    // periodic through matmul chains.
    bool tiled(std::size_t slot_count) const { return period() * copies == slot_count; }
};

// Flatten one sample channel-major, row-major: (ch, i, j) -> ch*r*c + i*c + j.
std::vector<double> row_flatten(const Tensor3 &t);

// Feature-major slot vector for an n x d sample matrix: the matrix is
// transposed and read row by row, so slot j*n + k = a(k, j). The payload is
// replicated into all whole copies that fit. stride = 0 means stride = d.
// Throws CapacityExceeded when stride * n exceeds the slot count and
// ShapeError when stride < d.
PackedBatch pack_matrix(HeBackend &backend, const Matrix &a, std::size_t stride = 0);

// Same, with each sample first flattened from channels x rows x cols.
PackedBatch pack_batch(HeBackend &backend, const std::vector<Tensor3> &samples,
                       std::size_t stride = 0);

// Inverse of pack_matrix, reading copy 0. The value must have no key layers
// and must not be complex-paired (decompress first).
Matrix unpack_batch(const PackedBatch &pb);

// Pair adjacent feature columns into one complex lane: lane u of sample k is
// a(k, 2u) + i * a(k, 2u+1); an odd feature count pads a zero column. stride
// counts complex lanes (0 means ceil(d/2)).
PackedBatch complex_compress_input(HeBackend &backend, const Matrix &a, std::size_t stride = 0);

// Undo complex pairing on a readable (layer-free) batch.
PackedBatch decompress_input(HeBackend &backend, const PackedBatch &pb);

}  // namespace slotflow

#endif
