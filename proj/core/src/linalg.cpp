// SPDX-License-Identifier: Apache-2.0

#include "slotflow/linalg.hpp"

namespace slotflow {

const std::vector<Complex> &DiagonalSet::mask(std::size_t i) const {
    if (encrypted()) {
        throw AccessViolation("DiagonalSet: masks are encrypted");
    }
    return masks_.at(i);
}

const CipherVec &DiagonalSet::mask_ct(std::size_t i) const {
    if (!encrypted()) {
        throw ShapeError("DiagonalSet: set is not encrypted");
    }
    return enc_.at(i);
}

std::vector<Complex> DiagonalSet::diagonal(std::size_t i) const {
    const std::vector<Complex> &m = mask(i);
    return std::vector<Complex>(m.begin(), m.begin() + h * n);
}

DiagonalSet generalized_diagonals(const Matrix &w, std::size_t n, const HeParams &params,
                                  const DiagonalOptions &opts) {
    if (w.rows() == 0 || w.cols() == 0 || n == 0) {
        throw ShapeError("generalized_diagonals: empty weight matrix or batch");
    }
    DiagonalSet set;
    set.d = w.rows();
    set.h = w.cols();
    set.n = n;
    set.compressed = opts.compressed;

    const std::size_t in_lanes = opts.compressed ? (set.d + 1) / 2 : set.d;
    set.in_stride = opts.in_stride ? opts.in_stride : in_lanes;
    set.out_stride = opts.out_stride ? opts.out_stride : set.h;
    if (set.in_stride < in_lanes || set.out_stride < set.h) {
        throw ShapeError("generalized_diagonals: stride below lane count");
    }
    set.num_diags = set.in_stride;

    const std::size_t s = params.slot_count;
    const std::size_t period_in = set.in_stride * n;
    const std::size_t period_out = set.out_stride * n;
    if (period_in > s || period_out > s) {
        throw CapacityExceeded("generalized_diagonals: lane period exceeds slot count");
    }
    switch (opts.mode) {
        case MaskMode::Auto:
            set.tiled = (s % period_in == 0) && (s % period_out == 0);
            break;
        case MaskMode::Tiled:
            if (s % period_in != 0 || s % period_out != 0) {
                throw ShapeError("generalized_diagonals: tiled masks need periods dividing "
                                 "slot_count");
            }
            set.tiled = true;
            break;
        case MaskMode::CopyZero:
            set.tiled = false;
            break;
    }

    // Row u of the evaluation matrix; with compression rows 2u and 2u+1 are
    // paired as 0.5*(W_{2u} - i*W_{2u+1}) so that after summation
    // out + conj(out) recovers both real products.
    auto weight = [&](std::size_t u, std::size_t j) -> Complex {
        if (j >= set.h || u >= in_lanes) {
            return Complex(0.0, 0.0);
        }
        if (!opts.compressed) {
            return Complex(w(u, j), 0.0);
        }
        double re = w(2 * u, j);
        double im = (2 * u + 1 < set.d) ? w(2 * u + 1, j) : 0.0;
        return Complex(0.5 * re, -0.5 * im);
    };

    set.masks_.resize(set.num_diags);
    for (std::size_t i = 0; i < set.num_diags; i++) {
        std::vector<Complex> mask(s, Complex(0.0, 0.0));
        const std::size_t limit = set.tiled ? s : period_out;
        for (std::size_t y = 0; y < limit; y++) {
            const std::size_t g = y / n;
            const std::size_t j = g % set.out_stride;
            const std::size_t u = (g + i) % set.in_stride;
            mask[y] = weight(u, j);
        }
        set.masks_[i] = std::move(mask);
    }
    return set;
}

DiagonalSet encrypt_diagonals(HeBackend &backend, const DiagonalSet &set, const KeyId &key) {
    if (set.encrypted()) {
        throw ShapeError("encrypt_diagonals: set already encrypted");
    }
    DiagonalSet out = set;
    out.enc_.reserve(set.masks_.size());
    for (const auto &m : set.masks_) {
        out.enc_.push_back(backend.encrypt(backend.encode(m), key));
    }
    out.masks_.clear();
    return out;
}

namespace {

void check_compatible(const HeParams &params, const PackedBatch &a, const DiagonalSet &w) {
    if (a.shape.n != w.n) {
        throw ShapeError("he_matmul: batch size " + std::to_string(a.shape.n) +
                         " vs diagonal replication " + std::to_string(w.n));
    }
    if (a.shape.d() != w.d) {
        throw ShapeError("he_matmul: input features " + std::to_string(a.shape.d()) +
                         " vs weight rows " + std::to_string(w.d));
    }
    const bool paired = a.layout == Layout::ColumnMajorComplexPaired;
    if (paired != w.compressed) {
        throw ShapeError("he_matmul: input layout does not match weight compression");
    }
    if (a.stride != w.in_stride) {
        throw ShapeError("he_matmul: input stride " + std::to_string(a.stride) +
                         " vs weight input stride " + std::to_string(w.in_stride));
    }
    const std::size_t s = params.slot_count;
    const std::size_t period = a.period();
    if (w.tiled) {
        if (!a.tiled(s)) {
            throw ShapeError("he_matmul: tiled masks need an exactly tiled input");
        }
        return;
    }
    // Copy-0 masks read up to lane out_stride - 1 + num_diags - 1; all those
    // lanes must fall inside whole payload copies. Exactly tiled inputs wrap
    // natively under any rotation and need no reach check.
    const std::size_t reach = (w.out_stride + w.num_diags - 1) * a.shape.n;
    if (!a.tiled(s) && reach > a.copies * period) {
        throw CapacityExceeded("he_matmul: replicated payload too short for diagonal reach");
    }
}

}  // namespace

PackedBatch he_matmul(HeBackend &backend, const PackedBatch &a, const DiagonalSet &w) {
    check_compatible(backend.params(), a, w);

    const std::size_t n = a.shape.n;
    CipherVec acc;
    for (std::size_t i = 0; i < w.num_diags; i++) {
        CipherVec rot = (i == 0) ? a.ct
                                 : backend.rotate(a.ct, static_cast<std::int64_t>(n * i));
        CipherVec prod = w.encrypted() ? backend.mul(w.mask_ct(i), rot)
                                       : backend.mul_plain(rot, w.mask(i));
        acc = (i == 0) ? std::move(prod) : backend.add(acc, prod);
    }
    if (w.compressed) {
        // Masks carry the 0.5 factor, so x + conj(x) is the real part doubled
        // and scaled back in one step.
        acc = backend.add(acc, backend.conjugate(acc));
    }

    PackedBatch out;
    out.ct = std::move(acc);
    out.shape = BatchShape{n, 1, 1, w.h};
    out.layout = Layout::ColumnMajor;
    out.stride = w.out_stride;
    out.copies = w.tiled ? backend.params().slot_count / (w.out_stride * n) : 1;
    return out;
}

PackedBatch he_matmul_complex(HeBackend &backend, const PackedBatch &a, const DiagonalSet &w) {
    if (!w.compressed) {
        throw ShapeError("he_matmul_complex: diagonal set is not compressed");
    }
    return he_matmul(backend, a, w);
}

std::vector<Complex> bias_plaintext(const PackedBatch &o, const std::vector<double> &bias) {
    if (o.layout != Layout::ColumnMajor) {
        throw ShapeError("bias: output must be column-major");
    }
    if (bias.size() != o.shape.d()) {
        throw ShapeError("bias: length " + std::to_string(bias.size()) + " vs features " +
                         std::to_string(o.shape.d()));
    }
    const std::size_t n = o.shape.n;
    const std::size_t period = o.period();
    std::vector<Complex> p(o.copies * period, Complex(0.0, 0.0));
    for (std::size_t t = 0; t < o.copies; t++) {
        for (std::size_t j = 0; j < bias.size(); j++) {
            for (std::size_t k = 0; k < n; k++) {
                p[t * period + j * n + k] = Complex(bias[j], 0.0);
            }
        }
    }
    return p;
}

PackedBatch add_bias(HeBackend &backend, const PackedBatch &o, const std::vector<double> &bias) {
    PackedBatch out = o;
    out.ct = backend.add_plain(o.ct, bias_plaintext(o, bias));
    return out;
}

}  // namespace slotflow
