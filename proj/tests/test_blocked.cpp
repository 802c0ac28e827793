// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdlib>
#include <random>

#include "axbxp/blocked.hpp"

using namespace axbxp;

namespace {

// bit-slice oracle, independent of to_blocks
int block_of(int magnitude, int i, int k) {
    return (magnitude >> (i * k)) & ((1 << k) - 1);
}

// reference value of a scalar restricted to a selection mask
int truncated_value(const BxpScalar& s, BlockSelection sel) {
    int magnitude = 0;
    for (int i = 0; i < s.n; ++i)
        if (sel.contains(i))
            magnitude += static_cast<int>(s.blocks[static_cast<std::size_t>(i)]) << (i * s.k);
    return s.sign * magnitude;
}

} // namespace

TEST_CASE("block_count follows ceil(8/k)") {
    CHECK(block_count(2) == 4);
    CHECK(block_count(3) == 3);
    CHECK(block_count(4) == 2);
    CHECK_THROWS_AS(block_count(1), Error);
    CHECK_THROWS_AS(block_count(5), Error);
}

TEST_CASE("to_blocks splits magnitudes LSB first") {
    const BxpScalar s = to_blocks(27, 2);
    CHECK(s.sign == 1);
    CHECK(s.n == 4);
    CHECK(s.blocks[0] == 3);
    CHECK(s.blocks[1] == 2);
    CHECK(s.blocks[2] == 1);
    CHECK(s.blocks[3] == 0);

    const BxpScalar neg = to_blocks(-27, 2);
    CHECK(neg.sign == -1);
    CHECK(neg.blocks == s.blocks);

    const BxpScalar s24 = to_blocks(24, 2);
    CHECK(s24.blocks[0] == 0);
    CHECK(s24.blocks[1] == 2);
    CHECK(s24.blocks[2] == 1);
    CHECK(s24.blocks[3] == 0);

    const BxpScalar zero = to_blocks(0, 3);
    CHECK(zero.sign == 1);
    CHECK(zero.n == 3);
    for (int i = 0; i < 3; ++i)
        CHECK(zero.blocks[static_cast<std::size_t>(i)] == 0);
}

TEST_CASE("to_blocks rejects out-of-range magnitudes") {
    CHECK_THROWS_AS(to_blocks(128, 2), Error);
    CHECK_THROWS_AS(to_blocks(-128, 3), Error);
    try {
        to_blocks(200, 4);
        FAIL("expected a range error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::range_error);
    }
}

TEST_CASE("from_blocks is the place-value sum") {
    BxpScalar s;
    s.k = 2;
    s.n = 4;
    s.sign = 1;
    s.blocks = {3, 2, 1, 0};
    CHECK(from_blocks(s) == 27);

    s.blocks = {0, 0, 0, 0};
    s.sign = -1;
    CHECK(from_blocks(s) == 0);

    BxpScalar t;
    t.k = 3;
    t.n = 3;
    t.sign = -1;
    t.blocks = {1, 3, 0, 0};
    CHECK(from_blocks(t) == -25);
}

TEST_CASE("round-trip over the whole 8-bit range, every K") {
    for (int k = 2; k <= 4; ++k)
        for (int x = -127; x <= 127; ++x) {
            const BxpScalar s = to_blocks(x, k);
            CHECK(from_blocks(s) == x);
            for (int i = 0; i < s.n; ++i)
                CHECK(s.blocks[static_cast<std::size_t>(i)] == block_of(std::abs(x), i, k));
            if (s.n * k > 8) {
                // high magnitude bits beyond bit 7 stay zero
                CHECK((s.blocks[static_cast<std::size_t>(s.n - 1)] >> (8 - (s.n - 1) * k)) == 0);
            }
        }
}

TEST_CASE("exact blocked multiplication examples") {
    CHECK(exact_blocked_mul(to_blocks(27, 2), to_blocks(13, 2)) == 351);
    CHECK(exact_blocked_mul(to_blocks(-27, 2), to_blocks(13, 2)) == -351);
    for (int x : {-127, -5, 1, 99})
        CHECK(exact_blocked_mul(to_blocks(x, 3), to_blocks(0, 3)) == 0);
    CHECK_THROWS_AS(exact_blocked_mul(to_blocks(3, 2), to_blocks(3, 3)), Error);
}

TEST_CASE("exact blocked multiplication equals integer product on random pairs") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 5000; ++trial) {
        const int k = 2 + static_cast<int>(rng() % 3);
        const int x = static_cast<int>(rng() % 255) - 127;
        const int y = static_cast<int>(rng() % 255) - 127;
        CHECK(exact_blocked_mul(to_blocks(x, k), to_blocks(y, k)) == x * y);
    }
}

TEST_CASE("BlockSelection basics") {
    const BlockSelection all = BlockSelection::all(4);
    CHECK(all.count() == 4);
    CHECK(all.contiguous());
    CHECK(all.msb() == 3);

    const BlockSelection top = BlockSelection::range(2, 2);
    CHECK(top.count() == 2);
    CHECK(top.contains(1));
    CHECK(top.contains(2));
    CHECK(!top.contains(0));
    CHECK(top.contiguous());

    const BlockSelection gap{0, 2};
    CHECK(!gap.contiguous());
    CHECK(gap.count() == 2);

    CHECK_THROWS_AS(BlockSelection::range(4, 1), Error);
    CHECK_THROWS_AS(BlockSelection::range(1, 3), Error);
}

TEST_CASE("approximate multiplication examples") {
    const BxpScalar x = to_blocks(27, 2);
    const BxpScalar y = to_blocks(13, 2);
    // truncated operands 24 * 12
    CHECK(approx_blocked_mul(x, BlockSelection{1, 2}, y, BlockSelection{1}) == 288);
    // full selections match the exact product
    CHECK(approx_blocked_mul(x, BlockSelection::all(4), y, BlockSelection::all(4)) == 351);
    // selected block of x is zero
    CHECK(approx_blocked_mul(x, BlockSelection{3}, y, BlockSelection{1}) == 0);

    CHECK_THROWS_AS(approx_blocked_mul(to_blocks(5, 3), BlockSelection{3}, to_blocks(5, 3),
                                       BlockSelection{0}),
                    Error);
}

TEST_CASE("truncation semantics over random operands and selections") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 20000; ++trial) {
        const int k = 2 + static_cast<int>(rng() % 3);
        const int n = block_count(k);
        const BxpScalar x = to_blocks(static_cast<int>(rng() % 255) - 127, k);
        const BxpScalar y = to_blocks(static_cast<int>(rng() % 255) - 127, k);
        const BlockSelection sel_x(static_cast<std::uint8_t>(rng() % (1u << n)));
        const BlockSelection sel_y(static_cast<std::uint8_t>(rng() % (1u << n)));
        const int expected = truncated_value(x, sel_x) * truncated_value(y, sel_y);
        CHECK(approx_blocked_mul(x, sel_x, y, sel_y) == expected);
        CHECK(approx_blocked_mul(x, sel_x, y, sel_y) ==
              from_blocks(truncate_blocks(x, sel_x)) * from_blocks(truncate_blocks(y, sel_y)));
    }
}

TEST_CASE("shift identity: single-block products carry weight 2^((i+j)k)") {
    for (int k = 2; k <= 4; ++k) {
        const int n = block_count(k);
        const BxpScalar x = to_blocks(109, k);
        const BxpScalar y = to_blocks(87, k);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const int p = static_cast<int>(x.blocks[static_cast<std::size_t>(i)]) *
                              static_cast<int>(y.blocks[static_cast<std::size_t>(j)]);
                CHECK(approx_blocked_mul(x, BlockSelection{i}, y, BlockSelection{j}) ==
                      p << ((i + j) * k));
            }
    }
}

TEST_CASE("monotone refinement: widening a contiguous selection never hurts") {
    std::mt19937 rng(13);
    for (int trial = 0; trial < 5000; ++trial) {
        const int k = 2 + static_cast<int>(rng() % 3);
        const int n = block_count(k);
        const int xv = static_cast<int>(rng() % 255) - 127;
        const int yv = static_cast<int>(rng() % 255) - 127;
        const BxpScalar x = to_blocks(xv, k);
        const BxpScalar y = to_blocks(yv, k);
        const int exact = xv * yv;
        const int msb_x = 1 + static_cast<int>(rng() % static_cast<unsigned>(n - 1));
        for (int count = 1; count < msb_x; ++count) {
            const auto narrow = BlockSelection::range(msb_x, count);
            const auto wide = BlockSelection::range(msb_x, count + 1);
            const auto sel_y = BlockSelection::all(n);
            const int err_narrow = std::abs(exact - approx_blocked_mul(x, narrow, y, sel_y));
            const int err_wide = std::abs(exact - approx_blocked_mul(x, wide, y, sel_y));
            CHECK(err_wide <= err_narrow);
        }
    }
}

TEST_CASE("pe_mac accumulates the approximate product") {
    const BxpScalar w = to_blocks(27, 2);
    const BxpScalar a = to_blocks(13, 2);
    const auto all = BlockSelection::all(4);

    MacResult r = pe_mac(0, w, all, a, all);
    CHECK(r.acc == 351);
    CHECK(!r.saturated);

    r = pe_mac(100, to_blocks(0, 2), all, a, all);
    CHECK(r.acc == 100);

    r = pe_mac(0, w, BlockSelection{1, 2}, a, BlockSelection{1});
    CHECK(r.acc == 288);
}

TEST_CASE("pe_mac matches exact and approximate products across operands") {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 5000; ++trial) {
        const int k = 2 + static_cast<int>(rng() % 3);
        const int n = block_count(k);
        const BxpScalar w = to_blocks(static_cast<int>(rng() % 255) - 127, k);
        const BxpScalar a = to_blocks(static_cast<int>(rng() % 255) - 127, k);
        const BlockSelection sw(static_cast<std::uint8_t>(rng() % (1u << n)));
        const BlockSelection sa(static_cast<std::uint8_t>(rng() % (1u << n)));
        const std::int32_t acc = static_cast<std::int32_t>(rng() % 100000) - 50000;
        const MacResult r = pe_mac(acc, w, sw, a, sa);
        CHECK(r.acc == acc + approx_blocked_mul(w, sw, a, sa));
        CHECK(!r.saturated);
    }
}

TEST_CASE("pe_mac saturates at +/-(2^31 - 1) and flags") {
    const BxpScalar w = to_blocks(127, 2);
    const BxpScalar a = to_blocks(127, 2);
    const auto all = BlockSelection::all(4);

    MacResult r = pe_mac(accumulator_max - 100, w, all, a, all);
    CHECK(r.acc == accumulator_max);
    CHECK(r.saturated);

    const BxpScalar neg = to_blocks(-127, 2);
    r = pe_mac(-accumulator_max + 100, neg, all, a, all);
    CHECK(r.acc == -accumulator_max);
    CHECK(r.saturated);

    // exactly at the bound: no flag
    r = pe_mac(accumulator_max - 127 * 127, w, all, a, all);
    CHECK(r.acc == accumulator_max);
    CHECK(!r.saturated);
}
