// SPDX-License-Identifier: Apache-2.0

#ifndef SLOTFLOW_TYPES_HPP
#define SLOTFLOW_TYPES_HPP

#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace slotflow {

using Complex = std::complex<double>;

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

// Payload does not fit the available slots.
struct CapacityExceeded : Error {
    using Error::Error;
};

// A level-consuming operation was applied to a ciphertext at level 0,
// or below the depth an operation needs.
struct LevelExhausted : Error {
    using Error::Error;
};

// Binary operation on ciphertexts under two distinct nonempty key layer sets.
struct KeyMismatch : Error {
    using Error::Error;
};

// Decryption attempted with a key that is not among the ciphertext's layers.
struct WrongKey : Error {
    using Error::Error;
};

// Bootstrap requested on a value that carries no encryption layer.
struct NotEncrypted : Error {
    using Error::Error;
};

// Dimension or layout mismatch, malformed model or input description.
struct ShapeError : Error {
    using Error::Error;
};

// Slot read attempted on data the reader is not entitled to see.
struct AccessViolation : Error {
    using Error::Error;
};

// A multi-party protocol could not run to completion.
struct ProtocolAborted : Error {
    using Error::Error;
};

// No evaluation plan satisfies the capacity and level constraints.
struct Infeasible : Error {
    using Error::Error;
};

// Function values outside the representable domain (NaN/Inf during fitting).
struct DomainError : Error {
    using Error::Error;
};

// Totals of primitive operations performed by a backend, plus protocol
// traffic. All fields are monotone over the life of a run.
struct OpCounters {
    std::int64_t ct_mults = 0;
    std::int64_t pt_mults = 0;
    std::int64_t adds = 0;
    std::int64_t rotations = 0;
    std::int64_t conjugations = 0;
    std::int64_t bootstraps = 0;
    std::int64_t protocol_rounds = 0;
    std::int64_t protocol_messages = 0;

    OpCounters &operator+=(const OpCounters &o) {
        ct_mults += o.ct_mults;
        pt_mults += o.pt_mults;
        adds += o.adds;
        rotations += o.rotations;
        conjugations += o.conjugations;
        bootstraps += o.bootstraps;
        protocol_rounds += o.protocol_rounds;
        protocol_messages += o.protocol_messages;
        return *this;
    }
    friend OpCounters operator+(OpCounters a, const OpCounters &b) { return a += b; }
    friend OpCounters operator-(const OpCounters &a, const OpCounters &b) {
        OpCounters r;
        r.ct_mults = a.ct_mults - b.ct_mults;
        r.pt_mults = a.pt_mults - b.pt_mults;
        r.adds = a.adds - b.adds;
        r.rotations = a.rotations - b.rotations;
        r.conjugations = a.conjugations - b.conjugations;
        r.bootstraps = a.bootstraps - b.bootstraps;
        r.protocol_rounds = a.protocol_rounds - b.protocol_rounds;
        r.protocol_messages = a.protocol_messages - b.protocol_messages;
        return r;
    }
    friend bool operator==(const OpCounters &, const OpCounters &) = default;

    std::int64_t total_mults() const { return ct_mults + pt_mults; }
};

// Dense row-major matrix of doubles. Small utility container; heavy linear
// algebra is not its job.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t dim) {
        Matrix m(dim, dim);
        for (std::size_t i = 0; i < dim; i++) {
            m(i, i) = 1.0;
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double &operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<double> &data() const { return data_; }
    std::vector<double> &data() { return data_; }

    Matrix transposed() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; i++) {
            for (std::size_t j = 0; j < cols_; j++) {
                t(j, i) = (*this)(i, j);
            }
        }
        return t;
    }

    friend bool operator==(const Matrix &, const Matrix &) = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Plain triple-loop product, used as the reference everywhere.
Matrix matmul(const Matrix &a, const Matrix &b);

// channels x rows x cols tensor of doubles, dense.
class Tensor3 {
  public:
    Tensor3() = default;
    Tensor3(std::size_t channels, std::size_t rows, std::size_t cols, double fill = 0.0)
        : ch_(channels), rows_(rows), cols_(cols), data_(channels * rows * cols, fill) {}

    std::size_t channels() const { return ch_; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double &operator()(std::size_t ch, std::size_t i, std::size_t j) {
        return data_[(ch * rows_ + i) * cols_ + j];
    }
    double operator()(std::size_t ch, std::size_t i, std::size_t j) const {
        return data_[(ch * rows_ + i) * cols_ + j];
    }

    const std::vector<double> &data() const { return data_; }
    std::vector<double> &data() { return data_; }

  private:
    std::size_t ch_ = 0;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline std::size_t next_pow2(std::size_t v) {
    std::size_t p = 1;
    while (p < v) {
        p <<= 1;
    }
    return p;
}

inline bool is_pow2(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

}  // namespace slotflow

#endif
