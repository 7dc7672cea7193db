// SPDX-License-Identifier: Apache-2.0

#include "slotflow/backend.hpp"

#include <algorithm>

namespace slotflow {

Matrix matmul(const Matrix &a, const Matrix &b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions disagree (" + std::to_string(a.cols()) +
                         " vs " + std::to_string(b.rows()) + ")");
    }
    Matrix r(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); i++) {
        for (std::size_t k = 0; k < a.cols(); k++) {
            double aik = a(i, k);
            if (aik == 0.0) {
                continue;
            }
            for (std::size_t j = 0; j < b.cols(); j++) {
                r(i, j) += aik * b(k, j);
            }
        }
    }
    return r;
}

void HeParams::validate() const {
    if (!is_pow2(slot_count)) {
        throw ShapeError("params: slot_count must be a power of two, got " +
                         std::to_string(slot_count));
    }
    if (max_level < 1) {
        throw ShapeError("params: max_level must be >= 1");
    }
    if (post_bootstrap_level < 1 || post_bootstrap_level > max_level) {
        throw ShapeError("params: post_bootstrap_level must lie in [1, max_level]");
    }
    if (bootstrap_depth_cost < 0) {
        throw ShapeError("params: bootstrap_depth_cost must be >= 0");
    }
}

std::string KeyId::str() const {
    switch (kind_) {
        case KeyKind::Client:
            return "client";
        case KeyKind::Provider:
            return "provider";
        case KeyKind::Collective:
            return "collective(" + std::to_string(arg_) + ")";
        case KeyKind::Ephemeral:
            return "ephemeral(" + std::to_string(arg_) + ")";
    }
    return "?";
}

SimBackend::SimBackend(const HeParams &params) : params_(params) { params_.validate(); }

CipherVec SimBackend::encode(const std::vector<Complex> &values) {
    if (values.size() > params_.slot_count) {
        throw CapacityExceeded("encode: " + std::to_string(values.size()) + " values exceed " +
                               std::to_string(params_.slot_count) + " slots");
    }
    CipherVec v;
    v.slots_ = values;
    v.slots_.resize(params_.slot_count, Complex(0.0, 0.0));
    v.level_ = params_.max_level;
    return v;
}

CipherVec SimBackend::encode_real(const std::vector<double> &values) {
    std::vector<Complex> c(values.size());
    for (std::size_t i = 0; i < values.size(); i++) {
        c[i] = Complex(values[i], 0.0);
    }
    return encode(c);
}

CipherVec SimBackend::encode_const(Complex c) {
    return encode(std::vector<Complex>(params_.slot_count, c));
}

CipherVec SimBackend::encrypt(const CipherVec &x, const KeyId &key) {
    CipherVec v = x;
    v.layers_.insert(std::upper_bound(v.layers_.begin(), v.layers_.end(), key), key);
    return v;
}

CipherVec SimBackend::decrypt(const CipherVec &x, const KeyId &key) {
    CipherVec v = x;
    auto it = std::find(v.layers_.begin(), v.layers_.end(), key);
    if (it == v.layers_.end()) {
        throw WrongKey("decrypt: no layer under key " + key.str());
    }
    v.layers_.erase(it);
    return v;
}

SimBackend::BinMeta SimBackend::combine_meta(const CipherVec &a, const CipherVec &b,
                                             const char *op) const {
    if (a.slots_.size() != b.slots_.size()) {
        throw ShapeError(std::string(op) + ": slot counts disagree");
    }
    // Exactly one plaintext-equivalent operand is absorbed by the other's
    // layer set; two distinct nonempty sets cannot interact.
    const std::vector<KeyId> *layers = &a.layers_;
    if (a.layers_.empty()) {
        layers = &b.layers_;
    } else if (!b.layers_.empty() && a.layers_ != b.layers_) {
        throw KeyMismatch(std::string(op) + ": operands carry different key layers");
    }
    return BinMeta{std::min(a.level_, b.level_), *layers};
}

CipherVec SimBackend::add(const CipherVec &a, const CipherVec &b) {
    BinMeta m = combine_meta(a, b, "add");
    CipherVec v;
    v.slots_.resize(a.slots_.size());
    for (std::size_t i = 0; i < v.slots_.size(); i++) {
        v.slots_[i] = a.slots_[i] + b.slots_[i];
    }
    v.level_ = m.level;
    v.layers_ = std::move(m.layers);
    v.log_ = a.log_ + b.log_;
    v.log_.adds += 1;
    sink_.bump_add();
    return v;
}

CipherVec SimBackend::add_plain(const CipherVec &a, const std::vector<Complex> &p) {
    if (p.size() > a.slots_.size()) {
        throw CapacityExceeded("add_plain: plaintext longer than slot vector");
    }
    CipherVec v = a;
    for (std::size_t i = 0; i < p.size(); i++) {
        v.slots_[i] += p[i];
    }
    v.log_.adds += 1;
    sink_.bump_add();
    return v;
}

CipherVec SimBackend::mul(const CipherVec &a, const CipherVec &b) {
    BinMeta m = combine_meta(a, b, "mul");
    if (m.level < 1) {
        throw LevelExhausted("mul: no multiplicative level left");
    }
    CipherVec v;
    v.slots_.resize(a.slots_.size());
    for (std::size_t i = 0; i < v.slots_.size(); i++) {
        v.slots_[i] = a.slots_[i] * b.slots_[i];
    }
    v.level_ = m.level - 1;
    v.layers_ = std::move(m.layers);
    v.log_ = a.log_ + b.log_;
    v.log_.ct_mults += 1;
    sink_.bump_ct_mult();
    return v;
}

CipherVec SimBackend::mul_plain(const CipherVec &a, const std::vector<Complex> &p) {
    if (p.size() > a.slots_.size()) {
        throw CapacityExceeded("mul_plain: plaintext longer than slot vector");
    }
    if (a.level_ < 1) {
        throw LevelExhausted("mul_plain: no multiplicative level left");
    }
    CipherVec v = a;
    for (std::size_t i = 0; i < v.slots_.size(); i++) {
        v.slots_[i] = a.slots_[i] * (i < p.size() ? p[i] : Complex(0.0, 0.0));
    }
    v.level_ = a.level_ - 1;
    v.log_.pt_mults += 1;
    sink_.bump_pt_mult();
    return v;
}

CipherVec SimBackend::rotate(const CipherVec &x, std::int64_t k) {
    const std::int64_t s = static_cast<std::int64_t>(params_.slot_count);
    std::int64_t shift = ((k % s) + s) % s;
    CipherVec v = x;
    if (shift != 0) {
        std::rotate(v.slots_.begin(), v.slots_.begin() + shift, v.slots_.end());
    }
    v.log_.rotations += 1;
    sink_.bump_rotation();
    return v;
}

CipherVec SimBackend::conjugate(const CipherVec &x) {
    CipherVec v = x;
    for (auto &s : v.slots_) {
        s = std::conj(s);
    }
    v.log_.conjugations += 1;
    sink_.bump_conjugation();
    return v;
}

CipherVec SimBackend::bootstrap_centralized(const CipherVec &x) {
    if (x.layers_.empty()) {
        throw NotEncrypted("bootstrap: value carries no key layer");
    }
    CipherVec v = x;
    v.level_ = params_.post_bootstrap_level;
    v.log_.bootstraps += 1;
    sink_.bump_bootstrap();
    return v;
}

CipherVec SimBackend::refresh_to_max(const CipherVec &x) {
    if (x.layers_.empty()) {
        throw NotEncrypted("refresh: value carries no key layer");
    }
    CipherVec v = x;
    v.level_ = params_.max_level;
    v.log_.bootstraps += 1;
    sink_.bump_bootstrap();
    return v;
}

}  // namespace slotflow
