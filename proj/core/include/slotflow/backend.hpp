// SPDX-License-Identifier: Apache-2.0

#ifndef SLOTFLOW_BACKEND_HPP
#define SLOTFLOW_BACKEND_HPP

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "slotflow/types.hpp"

namespace slotflow {

// Parameters of a leveled SIMD vector scheme. slot_count is the number of
// usable complex slots per vector (a power of two); max_level bounds the
// multiplicative depth between refreshes.
struct HeParams {
    std::size_t slot_count = 0;
    int max_level = 0;
    // Level a centralized refresh restores to.
    int post_bootstrap_level = 0;
    // Levels a centralized refresh consumes internally; reporting only.
    int bootstrap_depth_cost = 0;

    // Throws ShapeError when the fields are inconsistent.
    void validate() const;
};

enum class KeyKind : std::uint8_t { Client, Provider, Collective, Ephemeral };

// Identity of a secret key. Collective keys carry the cohort size; ephemeral
// keys carry a nonce so that two minted keys never collide.
class KeyId {
  public:
    static KeyId client() { return KeyId(KeyKind::Client, 0); }
    static KeyId provider() { return KeyId(KeyKind::Provider, 0); }
    static KeyId collective(std::size_t n_parties) {
        return KeyId(KeyKind::Collective, n_parties);
    }
    static KeyId ephemeral(std::uint64_t nonce) { return KeyId(KeyKind::Ephemeral, nonce); }

    KeyKind kind() const { return kind_; }
    // Cohort size for collective keys, nonce for ephemeral keys, 0 otherwise.
    std::uint64_t arg() const { return arg_; }

    std::string str() const;

    friend auto operator<=>(const KeyId &, const KeyId &) = default;

  private:
    KeyId(KeyKind kind, std::uint64_t arg) : kind_(kind), arg_(arg) {}
    KeyKind kind_;
    std::uint64_t arg_;
};

class SimBackend;

// Immutable slot vector with level and key-layer bookkeeping. A value with an
// empty layer set is a plaintext-equivalent encoding; anything else is
// opaque to holders without the matching keys. op_log totals the primitive
// operations along this value's derivation tree (shared subtrees are counted
// once per use).
class CipherVec {
  public:
    CipherVec() = default;

    std::size_t slot_count() const { return slots_.size(); }
    int level() const { return level_; }
    // Sorted multiset of encryption layers, outermost irrelevant (layers commute).
    const std::vector<KeyId> &key_layers() const { return layers_; }
    bool encrypted() const { return !layers_.empty(); }
    const OpCounters &op_log() const { return log_; }

    // Slot access for scenario code; only legal once every layer is removed.
    const std::vector<Complex> &read_slots() const {
        if (!layers_.empty()) {
            throw AccessViolation("read_slots: value still carries " +
                                  std::to_string(layers_.size()) + " key layer(s)");
        }
        return slots_;
    }

  private:
    friend class SimBackend;
    std::vector<Complex> slots_;
    int level_ = 0;
    std::vector<KeyId> layers_;  // kept sorted
    OpCounters log_;
};

// Thread-safe sink for operation totals.
class CounterSink {
  public:
    void bump_ct_mult() { ct_mults_.fetch_add(1, std::memory_order_relaxed); }
    void bump_pt_mult() { pt_mults_.fetch_add(1, std::memory_order_relaxed); }
    void bump_add() { adds_.fetch_add(1, std::memory_order_relaxed); }
    void bump_rotation() { rotations_.fetch_add(1, std::memory_order_relaxed); }
    void bump_conjugation() { conjugations_.fetch_add(1, std::memory_order_relaxed); }
    void bump_bootstrap() { bootstraps_.fetch_add(1, std::memory_order_relaxed); }
    void bump_round() { rounds_.fetch_add(1, std::memory_order_relaxed); }
    void bump_messages(std::int64_t n) { messages_.fetch_add(n, std::memory_order_relaxed); }

    OpCounters snapshot() const {
        OpCounters c;
        c.ct_mults = ct_mults_.load(std::memory_order_relaxed);
        c.pt_mults = pt_mults_.load(std::memory_order_relaxed);
        c.adds = adds_.load(std::memory_order_relaxed);
        c.rotations = rotations_.load(std::memory_order_relaxed);
        c.conjugations = conjugations_.load(std::memory_order_relaxed);
        c.bootstraps = bootstraps_.load(std::memory_order_relaxed);
        c.protocol_rounds = rounds_.load(std::memory_order_relaxed);
        c.protocol_messages = messages_.load(std::memory_order_relaxed);
        return c;
    }

  private:
    std::atomic<std::int64_t> ct_mults_{0};
    std::atomic<std::int64_t> pt_mults_{0};
    std::atomic<std::int64_t> adds_{0};
    std::atomic<std::int64_t> rotations_{0};
    std::atomic<std::int64_t> conjugations_{0};
    std::atomic<std::int64_t> bootstraps_{0};
    std::atomic<std::int64_t> rounds_{0};
    std::atomic<std::int64_t> messages_{0};
};

// Leveled SIMD vector engine. The interface is what the rest of the library
// programs against; SimBackend is the exact (noise-free) implementation.
class HeBackend {
  public:
    virtual ~HeBackend() = default;

    virtual const HeParams &params() const = 0;
    virtual OpCounters counters() const = 0;

    // Encode values into slots at max_level with no key layers, zero-padding
    // to slot_count. Throws CapacityExceeded when values.size() > slot_count.
    virtual CipherVec encode(const std::vector<Complex> &values) = 0;
    virtual CipherVec encode_real(const std::vector<double> &values) = 0;
    // All slots equal to c.
    virtual CipherVec encode_const(Complex c) = 0;

    // Add / remove one key layer. decrypt throws WrongKey when no instance of
    // key is present.
    virtual CipherVec encrypt(const CipherVec &x, const KeyId &key) = 0;
    virtual CipherVec decrypt(const CipherVec &x, const KeyId &key) = 0;

    // Slot-wise arithmetic. Operands at different levels are aligned by
    // dropping the higher one to the lower at zero cost. add/mul require equal
    // layer sets, except that one operand may be plaintext-equivalent (empty
    // layers); the result then keeps the other operand's layers.
    virtual CipherVec add(const CipherVec &a, const CipherVec &b) = 0;
    virtual CipherVec add_plain(const CipherVec &a, const std::vector<Complex> &p) = 0;
    virtual CipherVec mul(const CipherVec &a, const CipherVec &b) = 0;
    virtual CipherVec mul_plain(const CipherVec &a, const std::vector<Complex> &p) = 0;

    // Cyclic left shift by k mod slot_count; negative k shifts right.
    virtual CipherVec rotate(const CipherVec &x, std::int64_t k) = 0;
    virtual CipherVec conjugate(const CipherVec &x) = 0;

    // Non-interactive refresh: level becomes post_bootstrap_level, slots and
    // layers unchanged. Throws NotEncrypted on layer-free values.
    virtual CipherVec bootstrap_centralized(const CipherVec &x) = 0;

    // Collective refresh to max_level; the protocol traffic is accounted for
    // by the caller (see the protocols module).
    virtual CipherVec refresh_to_max(const CipherVec &x) = 0;
};

// Exact simulator: slots hold complex doubles, arithmetic is IEEE double, and
// the level / key-layer / counter rules are enforced as in a real leveled
// scheme. There is no noise; results match plaintext evaluation bit-for-bit
// up to floating-point rounding.
class SimBackend final : public HeBackend {
  public:
    explicit SimBackend(const HeParams &params);

    const HeParams &params() const override { return params_; }
    OpCounters counters() const override { return sink_.snapshot(); }
    CounterSink &sink() { return sink_; }

    CipherVec encode(const std::vector<Complex> &values) override;
    CipherVec encode_real(const std::vector<double> &values) override;
    CipherVec encode_const(Complex c) override;

    CipherVec encrypt(const CipherVec &x, const KeyId &key) override;
    CipherVec decrypt(const CipherVec &x, const KeyId &key) override;

    CipherVec add(const CipherVec &a, const CipherVec &b) override;
    CipherVec add_plain(const CipherVec &a, const std::vector<Complex> &p) override;
    CipherVec mul(const CipherVec &a, const CipherVec &b) override;
    CipherVec mul_plain(const CipherVec &a, const std::vector<Complex> &p) override;

    CipherVec rotate(const CipherVec &x, std::int64_t k) override;
    CipherVec conjugate(const CipherVec &x) override;

    CipherVec bootstrap_centralized(const CipherVec &x) override;
    CipherVec refresh_to_max(const CipherVec &x) override;

  private:
    // Level alignment and layer compatibility for a binary op. Returns the
    // result level before consumption and the result layer set.
    struct BinMeta {
        int level;
        std::vector<KeyId> layers;
    };
    BinMeta combine_meta(const CipherVec &a, const CipherVec &b, const char *op) const;

    HeParams params_;
    CounterSink sink_;
};

}  // namespace slotflow

#endif
