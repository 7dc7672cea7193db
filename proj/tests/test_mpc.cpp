// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "oracles.hpp"

using namespace slotflow;

namespace {

HeParams params_with(std::size_t slots, int levels = 6, int post = -1) {
    HeParams p;
    p.slot_count = slots;
    p.max_level = levels;
    p.post_bootstrap_level = post < 0 ? levels : post;
    p.bootstrap_depth_cost = p.max_level - p.post_bootstrap_level;
    return p;
}

std::vector<PartyState> make_cohort(std::size_t n) {
    std::vector<PartyState> cohort;
    cohort.push_back(PartyState{0, "master", Role::Client,
                                {KeyId::collective(n), KeyId::client()}});
    for (std::size_t i = 1; i < n; i++) {
        cohort.push_back(PartyState{i, "p" + std::to_string(i), Role::Peer,
                                    {KeyId::collective(n)}});
    }
    return cohort;
}

}  // namespace

TEST_CASE("party key possession and opening") {
    SimBackend be(params_with(8));
    Bus bus;
    PartyState client{0, "client", Role::Client, {KeyId::client()}};
    CHECK(client.holds(KeyId::client()));
    CHECK(!client.holds(KeyId::provider()));

    CipherVec ct = be.encrypt(be.encode_real({1.0, 2.0}), KeyId::client());
    auto slots = client.open(be, ct, bus);
    CHECK(slots[1] == Complex(2.0, 0.0));
    CHECK(bus.access_log().size() >= 1);

    CipherVec foreign = be.encrypt(be.encode_real({3.0}), KeyId::provider());
    CHECK_THROWS_AS(client.open(be, foreign, bus), AccessViolation);
}

TEST_CASE("a collective share alone cannot open a collective ciphertext") {
    SimBackend be(params_with(8));
    Bus bus;
    auto cohort = make_cohort(3);
    CipherVec ct = be.encrypt(be.encode_real({7.0}), KeyId::collective(3));
    // Every member holds a share; no member can strip the layer by itself.
    for (const auto &p : cohort) {
        CHECK(p.holds(KeyId::collective(3)));
        CHECK_THROWS_AS(p.open(be, ct, bus), AccessViolation);
    }
}

TEST_CASE("collective refresh restores the ceiling in one round") {
    for (std::size_t n : {2, 3, 5, 10}) {
        SimBackend be(params_with(8, 6, 4));
        Bus bus({7});
        auto cohort = make_cohort(n);
        CipherVec ct = be.encrypt(be.encode_real({1.5, -2.5}), KeyId::collective(n));
        ct = be.mul_plain(ct, {Complex(2.0, 0.0), Complex(2.0, 0.0)});
        ct = be.mul_plain(ct, std::vector<Complex>(8, Complex(1.0, 0.0)));
        REQUIRE(ct.level() == 4);

        OpCounters before = be.counters();
        CipherVec fresh = cbootstrap(be, ct, cohort, bus);
        OpCounters delta = be.counters() - before;

        CHECK(fresh.level() == 6);  // max, not post_bootstrap_level
        CHECK(delta.bootstraps == 1);
        auto totals = bus.totals();
        CHECK(totals.protocol_rounds == 1);
        CHECK(totals.protocol_messages == std::int64_t(2 * (n - 1)));
        CHECK(bus.transcript().size() == 2 * (n - 1));

        // Slots and layers survive the refresh.
        CHECK(fresh.key_layers() == ct.key_layers());
        CipherVec open = be.decrypt(fresh, KeyId::collective(n));
        CHECK(open.read_slots()[0] == Complex(3.0, 0.0));
    }
}

TEST_CASE("refresh transcript is a star around the initiator") {
    SimBackend be(params_with(8));
    Bus bus({123});
    auto cohort = make_cohort(4);
    CipherVec ct = be.encrypt(be.encode_real({1.0}), KeyId::collective(4));
    ct = be.mul_plain(ct, {Complex(1.0, 0.0)});
    (void)cbootstrap(be, ct, cohort, bus);
    std::size_t to_peers = 0, from_peers = 0;
    for (const auto &e : bus.transcript()) {
        CHECK(e.protocol == "cbootstrap");
        CHECK(e.round == 1);
        if (e.sender == "master") {
            to_peers++;
        } else {
            CHECK(e.recipient == "master");
            from_peers++;
        }
    }
    CHECK(to_peers == 3);
    CHECK(from_peers == 3);
}

TEST_CASE("protocol failures leave no trace") {
    SimBackend be(params_with(8));
    Bus bus({1});
    auto cohort = make_cohort(3);

    // Wrong key layer on the ciphertext.
    CipherVec wrong = be.encrypt(be.encode_real({1.0}), KeyId::client());
    CHECK_THROWS_AS(cbootstrap(be, wrong, cohort, bus), ProtocolAborted);

    // A member lost its share.
    CipherVec ct = be.encrypt(be.encode_real({1.0}), KeyId::collective(3));
    auto broken = cohort;
    broken[2].held_keys.clear();
    CHECK_THROWS_AS(cbootstrap(be, ct, broken, bus), ProtocolAborted);

    // Cohort of one.
    std::vector<PartyState> solo{cohort[0]};
    CHECK_THROWS_AS(cbootstrap(be, ct, solo, bus), ProtocolAborted);

    CHECK(bus.transcript().empty());
    CHECK(bus.totals() == OpCounters{});
    CHECK(bus.virtual_time_ms() == 0.0);
}

TEST_CASE("key switch rewrites the layer set to the target") {
    SimBackend be(params_with(8));
    Bus bus({9});
    auto cohort = make_cohort(3);
    CipherVec ct = be.encrypt(be.encode_real({4.5}), KeyId::collective(3));
    CipherVec switched = ckeyswitch(be, ct, KeyId::client(), cohort, bus);
    REQUIRE(switched.key_layers().size() == 1);
    CHECK(switched.key_layers()[0] == KeyId::client());
    CHECK(be.decrypt(switched, KeyId::client()).read_slots()[0] == Complex(4.5, 0.0));
    auto totals = bus.totals();
    CHECK(totals.protocol_rounds == 1);
    CHECK(totals.protocol_messages == 4);
    for (const auto &e : bus.transcript()) {
        CHECK(e.protocol == "ckeyswitch");
    }
    CHECK_THROWS_AS(ckeyswitch(be, ct, KeyId::collective(3), cohort, bus), ProtocolAborted);
}

TEST_CASE("key switch preserves levels") {
    SimBackend be(params_with(8, 6));
    Bus bus({2});
    auto cohort = make_cohort(2);
    CipherVec ct = be.encrypt(be.encode_real({1.0}), KeyId::collective(2));
    ct = be.mul_plain(ct, {Complex(1.0, 0.0)});
    CipherVec switched = ckeyswitch(be, ct, KeyId::client(), cohort, bus);
    CHECK(switched.level() == ct.level());
}

TEST_CASE("oblivious decryption delivers without exposing the provider key") {
    SimBackend be(params_with(16));
    Bus bus({77});
    PartyState client{0, "client", Role::Client, {KeyId::client()}};
    PartyState provider{1, "provider", Role::Provider, {KeyId::provider()}};
    std::mt19937_64 rng(71);
    auto vals = oracles::random_vector(rng, 16, -2.0, 2.0);

    CipherVec ct = be.encrypt(be.encode_real(vals), KeyId::provider());
    OpCounters before = be.counters();
    CipherVec out = obvdec(be, ct, client, provider, KeyId::provider(), bus);
    OpCounters delta = be.counters() - before;

    auto slots = out.read_slots();  // the result is open to the holder
    for (std::size_t i = 0; i < 16; i++) {
        CHECK(std::abs(slots[i].real() - vals[i]) < 1e-9);
    }
    auto totals = bus.totals();
    CHECK(totals.protocol_rounds == 1);
    CHECK(totals.protocol_messages == 2);
    CHECK(delta.adds == 2);  // blind and unblind
    CHECK(delta.bootstraps == 0);

    // The access log shows the provider only ever removed its own layer from
    // a masked value, and the read happened at the client.
    bool provider_read = false;
    for (const auto &rec : bus.access_log()) {
        if (rec.party == "provider" && rec.action == "read") {
            provider_read = true;
        }
    }
    CHECK(!provider_read);
}

TEST_CASE("oblivious decryption rejects bad setups") {
    SimBackend be(params_with(8));
    Bus bus({5});
    PartyState client{0, "client", Role::Client, {KeyId::client()}};
    PartyState provider{1, "provider", Role::Provider, {KeyId::provider()}};
    PartyState keyless{2, "keyless", Role::Provider, {}};

    CipherVec plainish = be.encrypt(be.encode_real({1.0}), KeyId::client());
    CHECK_THROWS_AS(obvdec(be, plainish, client, provider, KeyId::provider(), bus),
                    ProtocolAborted);
    CipherVec ct = be.encrypt(be.encode_real({1.0}), KeyId::provider());
    CHECK_THROWS_AS(obvdec(be, ct, client, keyless, KeyId::provider(), bus), ProtocolAborted);
    CHECK(bus.transcript().empty());
}

TEST_CASE("bus schedules deterministically under a seed") {
    auto run_once = [](std::uint64_t seed) {
        SimBackend be(params_with(8));
        Bus bus({seed, 1.0, 0.5});
        auto cohort = make_cohort(5);
        CipherVec ct = be.encrypt(be.encode_real({2.0}), KeyId::collective(5));
        ct = be.mul_plain(ct, {Complex(1.0, 0.0)});
        (void)cbootstrap(be, ct, cohort, bus);
        std::vector<std::string> order;
        for (const auto &e : bus.transcript()) {
            order.push_back(e.sender + ">" + e.recipient);
        }
        return std::pair(order, bus.virtual_time_ms());
    };
    auto [o1, t1] = run_once(31);
    auto [o2, t2] = run_once(31);
    CHECK(o1 == o2);
    CHECK(t1 == t2);
    CHECK(t1 > 0.0);
}

TEST_CASE("virtual time accumulates per message") {
    SimBackend be(params_with(8));
    Bus bus({0, 2.5, 0.0});
    auto cohort = make_cohort(3);
    CipherVec ct = be.encrypt(be.encode_real({1.0}), KeyId::collective(3));
    ct = be.mul_plain(ct, {Complex(1.0, 0.0)});
    (void)cbootstrap(be, ct, cohort, bus);
    CHECK(bus.virtual_time_ms() == doctest::Approx(4 * 2.5));
}
