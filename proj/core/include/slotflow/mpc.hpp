// SPDX-License-Identifier: Apache-2.0

#ifndef SLOTFLOW_MPC_HPP
#define SLOTFLOW_MPC_HPP

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "slotflow/backend.hpp"
#include "slotflow/types.hpp"

namespace slotflow {

class Bus;

enum class Role { Client, Provider, Peer };

// One party of a protocol cohort: an identity plus the key shares it holds.
struct PartyState {
    std::size_t id = 0;
    std::string name;
    Role role = Role::Peer;
    std::vector<KeyId> held_keys;

    bool holds(const KeyId &key) const;

    // Strip every layer this party holds a key for and read the slots,
    // recording each removal in the bus access log. A collective entry in
    // held_keys is only a share, never usable alone, so collective layers
    // survive and make open throw AccessViolation; only the cohort protocols
    // remove them.
    std::vector<Complex> open(HeBackend &backend, const CipherVec &ct, Bus &bus) const;
};

enum class ProtocolKind { CBootstrap, CKeySwitch, ObvDec };
const char *protocol_name(ProtocolKind kind);

// Slim transcript record, exported as one JSON line per message.
struct TranscriptEntry {
    std::string protocol;
    int round = 0;
    std::string sender;
    std::string recipient;
    std::size_t bytes_estimate = 0;
};

// In-flight protocol message. Ciphertext payloads ride along for the
// simulation; share payloads are opaque tokens. Only the transcript fields
// are persisted.
struct ProtocolMessage {
    ProtocolKind protocol = ProtocolKind::CBootstrap;
    int round = 1;
    std::string sender;
    std::string recipient;
    std::size_t bytes_estimate = 0;
    std::shared_ptr<const CipherVec> payload;
    std::string token;

    TranscriptEntry entry() const {
        return TranscriptEntry{protocol_name(protocol), round, sender, recipient,
                               bytes_estimate};
    }
};

struct AccessRecord {
    std::string party;
    std::string action;  // "decrypt" or "read"
    std::string key;     // layer removed; empty for reads
};

struct BusOptions {
    std::uint64_t seed = 0;
    // Synthetic per-message delivery time, accumulated for reporting only:
    // latency_ms plus a uniform draw from [0, jitter_ms).
    double latency_ms = 0.0;
    double jitter_ms = 0.0;
};

// In-memory star-topology message bus with a seeded scheduler. Share
// responses within a round are delivered in a shuffled but seed-reproducible
// order; protocols commit their transcript all-or-nothing.
class Bus {
  public:
    explicit Bus(const BusOptions &opts = {});

    // Append a completed protocol instance: `rounds` protocol rounds plus
    // one transcript entry per message, in delivery order.
    void commit(std::size_t rounds, const std::vector<ProtocolMessage> &messages);
    void note_access(const std::string &party, const std::string &action,
                     const std::string &key);

    // Seed-reproducible arrival permutation of n responders.
    std::vector<std::size_t> shuffle_order(std::size_t n);
    std::uint64_t draw_nonce();
    // Uniform mask slots in [-1,1) x [-1,1)i.
    std::vector<Complex> draw_mask(std::size_t len);

    const std::vector<TranscriptEntry> &transcript() const { return transcript_; }
    const std::vector<AccessRecord> &access_log() const { return access_log_; }
    // Protocol rounds and messages committed so far; all other fields zero.
    OpCounters totals() const;
    double virtual_time_ms() const { return virtual_time_ms_; }

  private:
    BusOptions opts_;
    std::mt19937_64 rng_;
    std::vector<TranscriptEntry> transcript_;
    std::vector<AccessRecord> access_log_;
    std::int64_t rounds_ = 0;
    std::int64_t messages_ = 0;
    double virtual_time_ms_ = 0.0;
};

// Collective refresh of a ciphertext under the cohort's collective key:
// cohort[0] (the master) sends the ciphertext to each of the other N-1
// parties and joins their share responses; one round, 2(N-1) messages, level
// restored to max_level, slots and layers unchanged. Throws ProtocolAborted
// on a cohort of fewer than two parties, a missing collective layer, or
// missing key shares.
CipherVec cbootstrap(HeBackend &backend, const CipherVec &ct,
                     const std::vector<PartyState> &cohort, Bus &bus);

// Collective key-switch: same traffic pattern as cbootstrap; the result
// carries exactly {target} as its layer set, with slots and level unchanged.
// target must differ from the cohort's collective key.
CipherVec ckeyswitch(HeBackend &backend, const CipherVec &ct, const KeyId &target,
                     const std::vector<PartyState> &cohort, Bus &bus);

// Oblivious removal of `provider_key` from ct: the holder masks the slots and
// wraps them under a fresh ephemeral layer, the provider strips its own layer
// from a value it can never read, and the holder unwraps and unmasks. One
// round trip, two messages. The returned value keeps ct's other layers.
CipherVec obvdec(HeBackend &backend, const CipherVec &ct, const PartyState &holder,
                 const PartyState &provider, const KeyId &provider_key, Bus &bus);

}  // namespace slotflow

#endif
