// SPDX-License-Identifier: Apache-2.0

#include "slotflow/mpc.hpp"

#include <algorithm>
#include <numeric>
#include <utility>

namespace slotflow {

const char *protocol_name(ProtocolKind kind) {
    switch (kind) {
        case ProtocolKind::CBootstrap:
            return "cbootstrap";
        case ProtocolKind::CKeySwitch:
            return "ckeyswitch";
        case ProtocolKind::ObvDec:
            return "obvdec";
    }
    return "?";
}

bool PartyState::holds(const KeyId &key) const {
    return std::find(held_keys.begin(), held_keys.end(), key) != held_keys.end();
}

std::vector<Complex> PartyState::open(HeBackend &backend, const CipherVec &ct, Bus &bus) const {
    CipherVec cur = ct;
    bool progress = true;
    while (progress && !cur.key_layers().empty()) {
        progress = false;
        for (const KeyId &k : cur.key_layers()) {
            // A collective entry in held_keys is only a share; no single
            // party can strip a collective layer outside the protocols.
            if (holds(k) && k.kind() != KeyKind::Collective) {
                cur = backend.decrypt(cur, k);
                bus.note_access(name, "decrypt", k.str());
                progress = true;
                break;
            }
        }
    }
    if (!cur.key_layers().empty()) {
        throw AccessViolation(name + ": cannot open value, missing key for " +
                              cur.key_layers().front().str());
    }
    bus.note_access(name, "read", "");
    return cur.read_slots();
}

Bus::Bus(const BusOptions &opts) : opts_(opts), rng_(opts.seed) {}

void Bus::commit(std::size_t rounds, const std::vector<ProtocolMessage> &messages) {
    rounds_ += static_cast<std::int64_t>(rounds);
    messages_ += static_cast<std::int64_t>(messages.size());
    for (const auto &m : messages) {
        transcript_.push_back(m.entry());
        double d = opts_.latency_ms;
        if (opts_.jitter_ms > 0.0) {
            d += std::uniform_real_distribution<double>(0.0, opts_.jitter_ms)(rng_);
        }
        virtual_time_ms_ += d;
    }
}

void Bus::note_access(const std::string &party, const std::string &action,
                      const std::string &key) {
    access_log_.push_back(AccessRecord{party, action, key});
}

std::vector<std::size_t> Bus::shuffle_order(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), std::size_t{0});
    std::shuffle(v.begin(), v.end(), rng_);
    return v;
}

std::uint64_t Bus::draw_nonce() { return rng_(); }

std::vector<Complex> Bus::draw_mask(std::size_t len) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Complex> m(len);
    for (auto &c : m) {
        double re = u(rng_);
        double im = u(rng_);
        c = Complex(re, im);
    }
    return m;
}

OpCounters Bus::totals() const {
    OpCounters c;
    c.protocol_rounds = rounds_;
    c.protocol_messages = messages_;
    return c;
}

namespace {

std::size_t ct_bytes(const CipherVec &ct) { return ct.slot_count() * sizeof(Complex); }

// Collective-protocol preconditions; returns the cohort's collective key.
KeyId check_cohort(const CipherVec &ct, const std::vector<PartyState> &cohort,
                   const char *proto) {
    if (cohort.size() < 2) {
        throw ProtocolAborted(std::string(proto) + ": cohort needs at least two parties, got " +
                              std::to_string(cohort.size()));
    }
    KeyId ck = KeyId::collective(cohort.size());
    const auto &layers = ct.key_layers();
    if (std::find(layers.begin(), layers.end(), ck) == layers.end()) {
        throw ProtocolAborted(std::string(proto) + ": ciphertext is not under " + ck.str());
    }
    for (const auto &k : layers) {
        if (k.kind() == KeyKind::Collective) {
            // Shares of the collective secret: the whole cohort must be present.
            for (const auto &p : cohort) {
                if (!p.holds(k)) {
                    throw ProtocolAborted(std::string(proto) + ": " + p.name +
                                          " holds no share of " + k.str());
                }
            }
        } else {
            bool covered = false;
            for (const auto &p : cohort) {
                covered = covered || p.holds(k);
            }
            if (!covered) {
                throw ProtocolAborted(std::string(proto) + ": no cohort member holds " +
                                      k.str());
            }
        }
    }
    return ck;
}

// Master broadcast plus one share response per other party; responses land
// in scheduler order and the instance completes on the last one.
std::vector<ProtocolMessage> star_exchange(ProtocolKind kind, const CipherVec &ct,
                                           const std::vector<PartyState> &cohort, Bus &bus) {
    std::vector<ProtocolMessage> msgs;
    msgs.reserve(2 * (cohort.size() - 1));
    const std::string &master = cohort[0].name;
    auto payload = std::make_shared<const CipherVec>(ct);
    for (std::size_t i = 1; i < cohort.size(); i++) {
        msgs.push_back(
            ProtocolMessage{kind, 1, master, cohort[i].name, ct_bytes(ct), payload, {}});
    }
    for (std::size_t idx : bus.shuffle_order(cohort.size() - 1)) {
        msgs.push_back(ProtocolMessage{kind, 1, cohort[1 + idx].name, master, ct_bytes(ct),
                                       nullptr, "share"});
    }
    return msgs;
}

}  // namespace

CipherVec cbootstrap(HeBackend &backend, const CipherVec &ct,
                     const std::vector<PartyState> &cohort, Bus &bus) {
    check_cohort(ct, cohort, "cbootstrap");
    std::vector<ProtocolMessage> msgs = star_exchange(ProtocolKind::CBootstrap, ct, cohort, bus);
    CipherVec out = backend.refresh_to_max(ct);
    bus.commit(1, msgs);
    return out;
}

CipherVec ckeyswitch(HeBackend &backend, const CipherVec &ct, const KeyId &target,
                     const std::vector<PartyState> &cohort, Bus &bus) {
    KeyId ck = check_cohort(ct, cohort, "ckeyswitch");
    if (target == ck) {
        throw ProtocolAborted("ckeyswitch: target must differ from the collective key");
    }
    std::vector<ProtocolMessage> msgs = star_exchange(ProtocolKind::CKeySwitch, ct, cohort, bus);
    CipherVec out = ct;
    while (!out.key_layers().empty()) {
        out = backend.decrypt(out, out.key_layers().front());
    }
    out = backend.encrypt(out, target);
    bus.commit(1, msgs);
    return out;
}

CipherVec obvdec(HeBackend &backend, const CipherVec &ct, const PartyState &holder,
                 const PartyState &provider, const KeyId &provider_key, Bus &bus) {
    const auto &layers = ct.key_layers();
    if (std::find(layers.begin(), layers.end(), provider_key) == layers.end()) {
        throw ProtocolAborted("obvdec: ciphertext carries no " + provider_key.str() +
                              " layer");
    }
    if (!provider.holds(provider_key)) {
        throw ProtocolAborted("obvdec: " + provider.name + " does not hold " +
                              provider_key.str());
    }

    // Holder masks the slots and wraps them under a one-shot ephemeral layer.
    std::vector<Complex> mask = bus.draw_mask(ct.slot_count());
    KeyId eph = KeyId::ephemeral(bus.draw_nonce());
    CipherVec masked = backend.encrypt(backend.add_plain(ct, mask), eph);

    std::vector<ProtocolMessage> msgs;
    msgs.push_back(ProtocolMessage{ProtocolKind::ObvDec, 1, holder.name, provider.name,
                                   ct_bytes(masked),
                                   std::make_shared<const CipherVec>(masked), {}});

    CipherVec stripped = backend.decrypt(masked, provider_key);
    bus.note_access(provider.name, "decrypt", provider_key.str());
    if (stripped.key_layers().empty()) {
        // The ephemeral wrap guarantees the provider never sees bare slots.
        throw AccessViolation("obvdec: provider would hold an unlayered value");
    }
    msgs.push_back(ProtocolMessage{ProtocolKind::ObvDec, 1, provider.name, holder.name,
                                   ct_bytes(stripped),
                                   std::make_shared<const CipherVec>(stripped), {}});

    CipherVec out = backend.decrypt(stripped, eph);
    bus.note_access(holder.name, "decrypt", eph.str());
    for (auto &c : mask) {
        c = -c;
    }
    out = backend.add_plain(out, mask);
    bus.commit(1, msgs);
    return out;
}

}  // namespace slotflow
