// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "oracles.hpp"

using namespace slotflow;

namespace {

HeParams tiny_params(std::size_t slots = 8, int max_level = 5, int post = -1) {
    HeParams p;
    p.slot_count = slots;
    p.max_level = max_level;
    p.post_bootstrap_level = post < 0 ? max_level : post;
    p.bootstrap_depth_cost = p.max_level - p.post_bootstrap_level;
    p.validate();
    return p;
}

std::vector<Complex> iota_slots(std::size_t n) {
    std::vector<Complex> v(n);
    for (std::size_t i = 0; i < n; i++) {
        v[i] = Complex(double(i + 1), 0.0);
    }
    return v;
}

}  // namespace

TEST_CASE("params validation") {
    CHECK_THROWS_AS(tiny_params(0), ShapeError);
    CHECK_THROWS_AS(tiny_params(6), ShapeError);  // not a power of two
    CHECK_THROWS_AS(tiny_params(8, 0), ShapeError);
    CHECK_THROWS_AS(tiny_params(8, 3, 5), ShapeError);  // post > max
    CHECK_NOTHROW(tiny_params(8, 3, 2));
}

TEST_CASE("encode pads, caps, starts at max level with no layers") {
    SimBackend be(tiny_params());
    CipherVec v = be.encode({Complex(1, 2), Complex(3, 4)});
    CHECK(v.slot_count() == 8);
    CHECK(v.level() == 5);
    CHECK(v.key_layers().empty());
    CHECK(!v.encrypted());
    auto s = v.read_slots();
    CHECK(s[0] == Complex(1, 2));
    CHECK(s[1] == Complex(3, 4));
    for (std::size_t i = 2; i < 8; i++) {
        CHECK(s[i] == Complex(0, 0));
    }
    CHECK_THROWS_AS(be.encode(std::vector<Complex>(9)), CapacityExceeded);
    CHECK(be.encode_const(Complex(2, -1)).read_slots()[7] == Complex(2, -1));
    CHECK(be.encode_real({1.5}).read_slots()[0] == Complex(1.5, 0));
}

TEST_CASE("encrypt/decrypt layer bookkeeping") {
    SimBackend be(tiny_params());
    CipherVec x = be.encode(iota_slots(4));
    CipherVec c = be.encrypt(x, KeyId::client());
    CHECK(c.encrypted());
    CHECK(c.key_layers().size() == 1);
    CHECK_THROWS_AS(c.read_slots(), AccessViolation);
    CHECK_THROWS_AS(be.decrypt(c, KeyId::provider()), WrongKey);

    // Layering is a multiset: two layers of the same key need two removals.
    CipherVec cc = be.encrypt(c, KeyId::client());
    CHECK(cc.key_layers().size() == 2);
    CipherVec once = be.decrypt(cc, KeyId::client());
    CHECK(once.key_layers().size() == 1);
    CipherVec open = be.decrypt(once, KeyId::client());
    CHECK(open.read_slots()[2] == Complex(3, 0));

    // Nested distinct layers come off in any order.
    CipherVec two = be.encrypt(be.encrypt(x, KeyId::client()), KeyId::provider());
    CipherVec after = be.decrypt(two, KeyId::client());
    CHECK(after.key_layers().size() == 1);
    CHECK(after.key_layers()[0] == KeyId::provider());
}

TEST_CASE("key ids order and print") {
    CHECK(KeyId::client() == KeyId::client());
    CHECK(KeyId::collective(3) != KeyId::collective(5));
    CHECK(KeyId::ephemeral(1) != KeyId::ephemeral(2));
    CHECK(KeyId::client().str() != KeyId::provider().str());
    CHECK(KeyId::collective(3).arg() == 3);
}

TEST_CASE("add and mul slotwise with level alignment") {
    SimBackend be(tiny_params(8, 5));
    CipherVec a = be.encode(iota_slots(8));
    CipherVec b = be.encode_const(Complex(2, 0));
    CipherVec prod = be.mul(a, b);  // both plaintext-equivalent, still counted
    CHECK(prod.level() == 4);
    CHECK(prod.read_slots()[3] == Complex(8, 0));

    CipherVec sum = be.add(prod, a);  // levels 4 and 5 align to 4
    CHECK(sum.level() == 4);
    CHECK(sum.read_slots()[3] == Complex(12, 0));

    OpCounters c = be.counters();
    CHECK(c.ct_mults == 1);
    CHECK(c.adds == 1);
}

TEST_CASE("mul with exactly one encrypted operand keeps its layers") {
    SimBackend be(tiny_params());
    CipherVec a = be.encrypt(be.encode(iota_slots(4)), KeyId::client());
    CipherVec mask = be.encode_const(Complex(3, 0));
    CipherVec out = be.mul(a, mask);
    CHECK(out.key_layers().size() == 1);
    CHECK(out.key_layers()[0] == KeyId::client());
    CHECK(be.decrypt(out, KeyId::client()).read_slots()[1] == Complex(6, 0));

    CipherVec other = be.encrypt(be.encode(iota_slots(4)), KeyId::provider());
    CHECK_THROWS_AS(be.mul(a, other), KeyMismatch);
    CHECK_THROWS_AS(be.add(a, other), KeyMismatch);
}

TEST_CASE("plaintext operand rules for add") {
    SimBackend be(tiny_params());
    CipherVec enc = be.encrypt(be.encode(iota_slots(8)), KeyId::client());
    CipherVec pt = be.encode_const(Complex(10, 0));
    CipherVec s = be.add(enc, pt);
    CHECK(s.key_layers().size() == 1);
    CHECK(be.decrypt(s, KeyId::client()).read_slots()[0] == Complex(11, 0));
}

TEST_CASE("mul_plain and add_plain level and counter rules") {
    SimBackend be(tiny_params(8, 2));
    CipherVec x = be.encrypt(be.encode(iota_slots(8)), KeyId::client());
    CipherVec y = be.mul_plain(x, {Complex(2, 0), Complex(2, 0)});
    CHECK(y.level() == 1);
    CipherVec z = be.add_plain(y, {Complex(1, 0)});
    CHECK(z.level() == 1);  // additions are free in depth
    CipherVec w = be.mul_plain(z, std::vector<Complex>(8, Complex(1, 0)));
    CHECK(w.level() == 0);
    CHECK_THROWS_AS(be.mul_plain(w, {Complex(1, 0)}), LevelExhausted);
    CHECK_THROWS_AS(be.mul(w, w), LevelExhausted);
    OpCounters c = be.counters();
    CHECK(c.pt_mults == 2);
    CHECK(c.adds == 1);
    CHECK(c.ct_mults == 0);

    auto slots = be.decrypt(w, KeyId::client()).read_slots();
    CHECK(slots[0] == Complex(3, 0));  // (1*2+1)*1
    CHECK(slots[1] == Complex(4, 0));  // (2*2+0)*1, short plaintexts pad
    CHECK(slots[2] == Complex(0, 0));  // 3*0, zero-extension in mul_plain
}

TEST_CASE("rotate is cyclic in both directions") {
    SimBackend be(tiny_params(8));
    CipherVec x = be.encode(iota_slots(8));
    auto left2 = be.rotate(x, 2).read_slots();
    for (std::size_t i = 0; i < 8; i++) {
        CHECK(left2[i] == Complex(double((i + 2) % 8 + 1), 0));
    }
    auto right3 = be.rotate(x, -3).read_slots();
    for (std::size_t i = 0; i < 8; i++) {
        CHECK(right3[i] == Complex(double((i + 8 - 3) % 8 + 1), 0));
    }
    // Rotation index wraps mod slot_count.
    auto big = be.rotate(x, 8 * 5 + 2).read_slots();
    CHECK(big == left2);
    CHECK(be.counters().rotations == 3);
    CHECK(be.rotate(x, 3).level() == x.level());
}

TEST_CASE("conjugate flips imaginary parts only") {
    SimBackend be(tiny_params(4));
    CipherVec x = be.encode({Complex(1, 2), Complex(-3, -4)});
    auto s = be.conjugate(x).read_slots();
    CHECK(s[0] == Complex(1, -2));
    CHECK(s[1] == Complex(-3, 4));
    CHECK(be.counters().conjugations == 1);
}

TEST_CASE("centralized refresh restores post level and needs a layer") {
    SimBackend be(tiny_params(8, 5, 3));
    const std::vector<Complex> ones(8, Complex(1, 0));
    CipherVec x = be.encrypt(be.encode(iota_slots(8)), KeyId::client());
    CipherVec low = be.mul_plain(be.mul_plain(x, ones), ones);
    CHECK(low.level() == 3);
    low = be.mul_plain(low, ones);
    CHECK(low.level() == 2);
    CipherVec fresh = be.bootstrap_centralized(low);
    CHECK(fresh.level() == 3);  // post_bootstrap_level, not max
    CHECK(fresh.key_layers().size() == 1);
    CHECK(be.counters().bootstraps == 1);
    auto plain = be.encode(iota_slots(8));
    CHECK_THROWS_AS(be.bootstrap_centralized(plain), NotEncrypted);
    // Slots are untouched by refreshes.
    CHECK(be.decrypt(fresh, KeyId::client()).read_slots()[4] == Complex(5, 0));
}

TEST_CASE("refresh_to_max hits the ceiling") {
    SimBackend be(tiny_params(8, 5, 3));
    CipherVec x = be.encrypt(be.encode(iota_slots(8)), KeyId::client());
    CipherVec low = be.mul_plain(x, {Complex(1, 0)});
    CipherVec fresh = be.refresh_to_max(low);
    CHECK(fresh.level() == 5);
    CHECK(be.counters().bootstraps == 1);
    CHECK_THROWS_AS(be.refresh_to_max(be.encode(iota_slots(8))), NotEncrypted);
}

TEST_CASE("op_log follows the derivation tree") {
    SimBackend be(tiny_params());
    CipherVec a = be.encode(iota_slots(8));
    CipherVec b = be.rotate(a, 1);
    CipherVec c = be.add(a, b);
    CipherVec d = be.mul_plain(c, {Complex(1, 0)});
    CHECK(d.op_log().rotations == 1);
    CHECK(d.op_log().adds == 1);
    CHECK(d.op_log().pt_mults == 1);
    CHECK(d.op_log().ct_mults == 0);
}

TEST_CASE("encode, encrypt and decrypt are not counted") {
    SimBackend be(tiny_params());
    CipherVec x = be.encrypt(be.encode(iota_slots(8)), KeyId::client());
    (void)be.decrypt(x, KeyId::client());
    OpCounters c = be.counters();
    CHECK(c == OpCounters{});
    CHECK(c.total_mults() == 0);
}

TEST_CASE("counter arithmetic") {
    OpCounters a;
    a.ct_mults = 2;
    a.adds = 3;
    OpCounters b;
    b.ct_mults = 1;
    b.rotations = 7;
    OpCounters s = a + b;
    CHECK(s.ct_mults == 3);
    CHECK(s.adds == 3);
    CHECK(s.rotations == 7);
    CHECK((s - b) == a);
    CHECK(s.total_mults() == 3);
    s.pt_mults = 4;
    CHECK(s.total_mults() == 7);
}

TEST_CASE("values are exact under rotation round trips") {
    SimBackend be(tiny_params(16));
    std::mt19937_64 rng(99);
    auto vals = oracles::random_vector(rng, 16, -5.0, 5.0);
    CipherVec x = be.encode_real(vals);
    CipherVec back = be.rotate(be.rotate(x, 7), -7);
    auto s = back.read_slots();
    for (std::size_t i = 0; i < 16; i++) {
        CHECK(s[i] == Complex(vals[i], 0.0));  // bitwise, not approximate
    }
}
