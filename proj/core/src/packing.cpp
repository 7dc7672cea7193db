// SPDX-License-Identifier: Apache-2.0

#include "slotflow/packing.hpp"

namespace slotflow {

std::vector<double> row_flatten(const Tensor3 &t) { return t.data(); }

namespace {

// Replicate the first `period` slots into every whole copy that fits.
std::size_t replicate(std::vector<Complex> &slots, std::size_t period, std::size_t slot_count) {
    std::size_t copies = slot_count / period;
    slots.resize(slot_count, Complex(0.0, 0.0));
    for (std::size_t t = 1; t < copies; t++) {
        for (std::size_t i = 0; i < period; i++) {
            slots[t * period + i] = slots[i];
        }
    }
    return copies;
}

PackedBatch pack_lanes(HeBackend &backend, const std::vector<Complex> &lane_values,
                       const BatchShape &shape, Layout layout, std::size_t lane_count,
                       std::size_t stride) {
    if (stride == 0) {
        stride = lane_count;
    }
    if (stride < lane_count) {
        throw ShapeError("pack: stride " + std::to_string(stride) + " below lane count " +
                         std::to_string(lane_count));
    }
    const std::size_t s = backend.params().slot_count;
    const std::size_t period = stride * shape.n;
    if (period > s) {
        throw CapacityExceeded("pack: " + std::to_string(period) + " slots needed, " +
                               std::to_string(s) + " available");
    }
    std::vector<Complex> slots(period, Complex(0.0, 0.0));
    for (std::size_t j = 0; j < lane_count; j++) {
        for (std::size_t k = 0; k < shape.n; k++) {
            slots[j * shape.n + k] = lane_values[j * shape.n + k];
        }
    }
    std::size_t copies = replicate(slots, period, s);

    PackedBatch pb;
    pb.ct = backend.encode(slots);
    pb.shape = shape;
    pb.layout = layout;
    pb.stride = stride;
    pb.copies = copies;
    return pb;
}

}  // namespace

PackedBatch pack_matrix(HeBackend &backend, const Matrix &a, std::size_t stride) {
    BatchShape shape{a.rows(), 1, 1, a.cols()};
    std::vector<Complex> lanes(a.cols() * a.rows());
    for (std::size_t j = 0; j < a.cols(); j++) {
        for (std::size_t k = 0; k < a.rows(); k++) {
            lanes[j * a.rows() + k] = Complex(a(k, j), 0.0);
        }
    }
    return pack_lanes(backend, lanes, shape, Layout::ColumnMajor, a.cols(), stride);
}

PackedBatch pack_batch(HeBackend &backend, const std::vector<Tensor3> &samples,
                       std::size_t stride) {
    if (samples.empty()) {
        throw ShapeError("pack_batch: empty batch");
    }
    BatchShape shape{samples.size(), samples[0].channels(), samples[0].rows(),
                     samples[0].cols()};
    Matrix a(shape.n, shape.d());
    for (std::size_t k = 0; k < samples.size(); k++) {
        const Tensor3 &t = samples[k];
        if (t.channels() != shape.h || t.rows() != shape.r || t.cols() != shape.c) {
            throw ShapeError("pack_batch: sample " + std::to_string(k) +
                             " disagrees with batch shape");
        }
        std::vector<double> flat = row_flatten(t);
        for (std::size_t j = 0; j < flat.size(); j++) {
            a(k, j) = flat[j];
        }
    }
    PackedBatch pb = pack_matrix(backend, a, stride);
    pb.shape = shape;
    return pb;
}

Matrix unpack_batch(const PackedBatch &pb) {
    if (pb.layout != Layout::ColumnMajor) {
        throw ShapeError("unpack_batch: complex-paired batch must be decompressed first");
    }
    const std::vector<Complex> &slots = pb.ct.read_slots();
    Matrix a(pb.shape.n, pb.shape.d());
    for (std::size_t j = 0; j < pb.shape.d(); j++) {
        for (std::size_t k = 0; k < pb.shape.n; k++) {
            a(k, j) = slots[j * pb.shape.n + k].real();
        }
    }
    return a;
}

PackedBatch complex_compress_input(HeBackend &backend, const Matrix &a, std::size_t stride) {
    BatchShape shape{a.rows(), 1, 1, a.cols()};
    const std::size_t lanes = (a.cols() + 1) / 2;
    std::vector<Complex> vals(lanes * a.rows());
    for (std::size_t u = 0; u < lanes; u++) {
        for (std::size_t k = 0; k < a.rows(); k++) {
            double re = a(k, 2 * u);
            double im = (2 * u + 1 < a.cols()) ? a(k, 2 * u + 1) : 0.0;
            vals[u * a.rows() + k] = Complex(re, im);
        }
    }
    return pack_lanes(backend, vals, shape, Layout::ColumnMajorComplexPaired, lanes, stride);
}

PackedBatch decompress_input(HeBackend &backend, const PackedBatch &pb) {
    if (pb.layout != Layout::ColumnMajorComplexPaired) {
        throw ShapeError("decompress_input: batch is not complex-paired");
    }
    const std::vector<Complex> &slots = pb.ct.read_slots();
    const std::size_t d = pb.shape.d();
    const std::size_t n = pb.shape.n;
    Matrix a(n, d);
    for (std::size_t u = 0; u < pb.lanes(); u++) {
        for (std::size_t k = 0; k < n; k++) {
            Complex v = slots[u * n + k];
            a(k, 2 * u) = v.real();
            if (2 * u + 1 < d) {
                a(k, 2 * u + 1) = v.imag();
            }
        }
    }
    return pack_matrix(backend, a);
}

}  // namespace slotflow
