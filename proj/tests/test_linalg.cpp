// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "oracles.hpp"

using namespace slotflow;

namespace {

HeParams params_with(std::size_t slots, int levels = 8) {
    HeParams p;
    p.slot_count = slots;
    p.max_level = levels;
    p.post_bootstrap_level = levels;
    return p;
}

}  // namespace

TEST_CASE("diagonal view matches the generalized-diagonal definition") {
    std::mt19937_64 rng(11);
    HeParams par = params_with(64);
    Matrix w = oracles::random_matrix(rng, 5, 3);
    DiagonalSet set = generalized_diagonals(w, 2, par);
    CHECK(set.num_diags == 5);
    for (std::size_t i = 0; i < set.num_diags; i++) {
        auto diag = set.diagonal(i);
        REQUIRE(diag.size() == set.out_stride * 2);
        for (std::size_t j = 0; j < 3; j++) {
            for (std::size_t t = 0; t < 2; t++) {
                CHECK(diag[j * 2 + t] == Complex(w((i + j) % 5, j), 0.0));
            }
        }
    }
}

TEST_CASE("matmul equals the naive product on a shape grid") {
    SimBackend be(params_with(256));
    std::mt19937_64 rng(12);
    for (std::size_t n : {1, 2, 3, 4}) {
        for (std::size_t d : {1, 2, 3, 5, 8}) {
            for (std::size_t h : {1, 2, 4, 7}) {
                Matrix a = oracles::random_matrix(rng, n, d);
                Matrix w = oracles::random_matrix(rng, d, h);
                PackedBatch pa = pack_matrix(be, a);
                DiagonalSet set = generalized_diagonals(w, n, be.params());
                PackedBatch out = he_matmul(be, pa, set);
                CHECK(out.shape.n == n);
                CHECK(out.shape.d() == h);
                Matrix got = unpack_batch(out);
                CHECK(oracles::max_abs_diff(got, oracles::naive_matmul(a, w)) < 1e-12);
            }
        }
    }
}

TEST_CASE("uncompressed products use exactly d masks and d-1 rotations") {
    SimBackend be(params_with(128));
    std::mt19937_64 rng(13);
    for (std::size_t d : {1, 3, 4, 6, 8}) {
        Matrix a = oracles::random_matrix(rng, 2, d);
        Matrix w = oracles::random_matrix(rng, d, 3);
        PackedBatch pa = pack_matrix(be, a);
        DiagonalSet set = generalized_diagonals(w, 2, be.params());
        OpCounters before = be.counters();
        PackedBatch out = he_matmul(be, pa, set);
        OpCounters delta = be.counters() - before;
        CHECK(delta.pt_mults == std::int64_t(d));
        CHECK(delta.ct_mults == 0);
        CHECK(delta.rotations == std::int64_t(d - 1));
        CHECK(delta.conjugations == 0);
        CHECK(out.ct.level() == pa.ct.level() - 1);
    }
}

TEST_CASE("compressed products use ceil(d/2) masks plus one extraction") {
    SimBackend be(params_with(128));
    std::mt19937_64 rng(14);
    for (std::size_t d : {2, 3, 5, 6, 8}) {
        Matrix a = oracles::random_matrix(rng, 2, d);
        Matrix w = oracles::random_matrix(rng, d, 4);
        PackedBatch pa = complex_compress_input(be, a);
        DiagonalOptions opts;
        opts.compressed = true;
        DiagonalSet set = generalized_diagonals(w, 2, be.params(), opts);
        CHECK(set.num_diags == (d + 1) / 2);
        OpCounters before = be.counters();
        PackedBatch out = he_matmul_complex(be, pa, set);
        OpCounters delta = be.counters() - before;
        CHECK(delta.pt_mults == std::int64_t((d + 1) / 2));
        CHECK(delta.rotations == std::int64_t((d + 1) / 2 - 1));
        CHECK(delta.conjugations == 1);
        Matrix got = unpack_batch(out);
        CHECK(oracles::max_abs_diff(got, oracles::naive_matmul(a, w)) < 1e-12);
    }
}

TEST_CASE("encrypted masks count ciphertext multiplications") {
    SimBackend be(params_with(64));
    std::mt19937_64 rng(15);
    Matrix a = oracles::random_matrix(rng, 2, 4);
    Matrix w = oracles::random_matrix(rng, 4, 2);
    PackedBatch pa = pack_matrix(be, a);
    DiagonalSet plain = generalized_diagonals(w, 2, be.params());
    DiagonalSet enc = encrypt_diagonals(be, plain, KeyId::provider());
    CHECK(enc.encrypted());
    CHECK_THROWS_AS(enc.mask(0), AccessViolation);
    CHECK_THROWS_AS(encrypt_diagonals(be, enc, KeyId::provider()), ShapeError);
    OpCounters before = be.counters();
    PackedBatch out = he_matmul(be, pa, enc);
    OpCounters delta = be.counters() - before;
    CHECK(delta.ct_mults == 4);
    CHECK(delta.pt_mults == 0);
    out.ct = be.decrypt(out.ct, KeyId::provider());
    CHECK(oracles::max_abs_diff(unpack_batch(out), oracles::naive_matmul(a, w)) < 1e-12);
}

TEST_CASE("auto mode tiles power-of-two strides and the output stays periodic") {
    SimBackend be(params_with(64));
    std::mt19937_64 rng(16);
    Matrix a = oracles::random_matrix(rng, 2, 3);
    Matrix w = oracles::random_matrix(rng, 3, 3);
    DiagonalOptions opts;
    opts.in_stride = 4;
    opts.out_stride = 4;
    DiagonalSet set = generalized_diagonals(w, 2, be.params(), opts);
    CHECK(set.tiled);
    CHECK(set.num_diags == 4);  // padded stride drives the diagonal count
    PackedBatch pa = pack_matrix(be, a, 4);
    PackedBatch out = he_matmul(be, pa, set);
    CHECK(out.stride == 4);
    CHECK(out.tiled(64));
    CHECK(out.copies == 8);
    auto s = out.ct.read_slots();
    for (std::size_t i = 0; i < 64; i++) {
        CHECK(std::abs(s[i] - s[i % 8]) < 1e-12);  // exact periodicity
    }
    CHECK(oracles::max_abs_diff(unpack_batch(out), oracles::naive_matmul(a, w)) < 1e-12);
}

TEST_CASE("copy-zero masks handle non-dividing periods") {
    SimBackend be(params_with(64));
    std::mt19937_64 rng(17);
    Matrix a = oracles::random_matrix(rng, 3, 5);  // period 15 does not divide 64
    Matrix w = oracles::random_matrix(rng, 5, 4);
    DiagonalSet set = generalized_diagonals(w, 3, be.params());
    CHECK(!set.tiled);
    PackedBatch pa = pack_matrix(be, a);
    PackedBatch out = he_matmul(be, pa, set);
    CHECK(out.copies == 1);
    CHECK(oracles::max_abs_diff(unpack_batch(out), oracles::naive_matmul(a, w)) < 1e-12);
}

TEST_CASE("tiled masks demand an exactly tiled input") {
    SimBackend be(params_with(64));
    std::mt19937_64 rng(18);
    Matrix a = oracles::random_matrix(rng, 3, 4);  // period 12, not tiled in 64
    Matrix w = oracles::random_matrix(rng, 4, 4);
    DiagonalOptions opts;
    opts.mode = MaskMode::Tiled;
    CHECK_THROWS_AS(generalized_diagonals(w, 3, be.params(), opts), ShapeError);
}

TEST_CASE("chained layers reuse the packed output without repacking") {
    SimBackend be(params_with(64));
    std::mt19937_64 rng(19);
    Matrix a = oracles::random_matrix(rng, 2, 4);
    Matrix w1 = oracles::random_matrix(rng, 4, 4);
    Matrix w2 = oracles::random_matrix(rng, 4, 2);
    PackedBatch pa = pack_matrix(be, a);
    DiagonalOptions o2;
    o2.out_stride = 2;
    PackedBatch h1 = he_matmul(be, pa, generalized_diagonals(w1, 2, be.params()));
    PackedBatch h2 = he_matmul(be, h1, generalized_diagonals(w2, 2, be.params(), o2));
    Matrix expect = oracles::naive_matmul(oracles::naive_matmul(a, w1), w2);
    CHECK(oracles::max_abs_diff(unpack_batch(h2), expect) < 1e-12);
}

TEST_CASE("bias lands on every copy of every lane in one addition") {
    SimBackend be(params_with(32));
    std::mt19937_64 rng(20);
    Matrix a = oracles::random_matrix(rng, 2, 4);
    std::vector<double> bias{0.5, -1.5, 2.0, 0.25};
    PackedBatch pa = pack_matrix(be, a);
    OpCounters before = be.counters();
    PackedBatch out = add_bias(be, pa, bias);
    OpCounters delta = be.counters() - before;
    CHECK(delta.adds == 1);
    CHECK(delta.total_mults() == 0);
    auto s = out.ct.read_slots();
    for (std::size_t copy = 0; copy < pa.copies; copy++) {
        for (std::size_t j = 0; j < 4; j++) {
            for (std::size_t k = 0; k < 2; k++) {
                CHECK(s[copy * 8 + j * 2 + k] == Complex(a(k, j) + bias[j], 0.0));
            }
        }
    }
    CHECK_THROWS_AS(add_bias(be, pa, {1.0}), ShapeError);
}

TEST_CASE("matmul errors: shape, layout and level") {
    SimBackend be(params_with(64, 1));
    std::mt19937_64 rng(21);
    Matrix a = oracles::random_matrix(rng, 2, 4);
    Matrix w = oracles::random_matrix(rng, 4, 2);
    PackedBatch pa = pack_matrix(be, a);
    DiagonalSet set = generalized_diagonals(w, 2, be.params());

    DiagonalSet wrong_n = generalized_diagonals(w, 3, be.params());
    CHECK_THROWS_AS(he_matmul(be, pa, wrong_n), ShapeError);

    DiagonalOptions comp;
    comp.compressed = true;
    DiagonalSet cset = generalized_diagonals(w, 2, be.params(), comp);
    CHECK_THROWS_AS(he_matmul(be, pa, cset), ShapeError);  // layout mismatch
    CHECK_THROWS_AS(he_matmul_complex(be, pa, set), ShapeError);

    PackedBatch drained = he_matmul(be, pa, set);  // burns the only level
    CHECK(drained.ct.level() == 0);
    CHECK_THROWS_AS(he_matmul(be, drained, generalized_diagonals(w.transposed(), 2, be.params())),
                    LevelExhausted);
}

TEST_CASE("single-feature edge cases") {
    SimBackend be(params_with(16));
    std::mt19937_64 rng(22);
    Matrix a = oracles::random_matrix(rng, 4, 1);
    Matrix w = oracles::random_matrix(rng, 1, 3);
    PackedBatch pa = pack_matrix(be, a);
    OpCounters before = be.counters();
    PackedBatch out = he_matmul(be, pa, generalized_diagonals(w, 4, be.params()));
    OpCounters delta = be.counters() - before;
    CHECK(delta.rotations == 0);  // one diagonal, nothing to rotate
    CHECK(delta.pt_mults == 1);
    CHECK(oracles::max_abs_diff(unpack_batch(out), oracles::naive_matmul(a, w)) < 1e-12);
}
