// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

#include "axbxp/errors.hpp"

namespace axbxp {

// 8-bit sign-magnitude source operands split into N blocks of K bits,
// K in {2,3,4}, N = ceil(8/K). All types here are immutable values and
// every operation is a pure function.

inline constexpr int source_bits = 8;
inline constexpr int max_magnitude = 127;
inline constexpr int max_block_count = 4;
inline constexpr std::int32_t accumulator_max = 0x7fffffff; // saturation bound, +/-(2^31 - 1)

// ceil(8/k); throws config_error unless k is 2, 3 or 4
int block_count(int k);

// A sign-magnitude scalar decomposed into blocks. blocks[0] is the least
// significant block; block i weighs 2^(i*k). Unused high entries are zero.
struct BxpScalar {
    std::array<std::uint8_t, max_block_count> blocks{};
    std::uint8_t k = 2;
    std::uint8_t n = 4;
    std::int8_t sign = 1; // +1 or -1; zero is stored with sign +1
};

BxpScalar to_blocks(int value, int k);
int from_blocks(const BxpScalar& s);

// A set of block indices, at most max_block_count of them. The pruned design
// space only ever produces contiguous runs, but the set form is kept so the
// truncation semantics can be tested on arbitrary subsets.
class BlockSelection {
public:
    BlockSelection() = default;
    explicit BlockSelection(std::uint8_t index_mask) : mask_(index_mask) {}
    BlockSelection(std::initializer_list<int> indices);

    // all indices 0..n-1
    static BlockSelection all(int n);
    // the count consecutive indices ending at msb: [msb-count+1, msb]
    static BlockSelection range(int msb, int count);

    bool contains(int index) const { return (mask_ >> index) & 1u; }
    int count() const;
    bool empty() const { return mask_ == 0; }
    bool contiguous() const;
    int msb() const; // -1 when empty
    std::uint8_t mask() const { return mask_; }

    bool operator==(const BlockSelection&) const = default;

private:
    std::uint8_t mask_ = 0;
};

// Zeroes every block outside sel. The reconstructed value of the result is
// what approximate multiplication effectively computes with.
BxpScalar truncate_blocks(const BxpScalar& s, BlockSelection sel);

// Exact product via all N^2 shifted block products (never via from_blocks).
std::int32_t exact_blocked_mul(const BxpScalar& x, const BxpScalar& y);

// Product restricted to the selected blocks of each operand:
// sign(x)*sign(y) * sum_{i in sel_x, j in sel_y} X_i * Y_j * 2^((i+j)*k).
std::int32_t approx_blocked_mul(const BxpScalar& x, BlockSelection sel_x,
                                const BxpScalar& y, BlockSelection sel_y);

struct MacResult {
    std::int32_t acc = 0;
    bool saturated = false;
};

// One PE multiply-accumulate: each selected block pair is a signed
// (K+1)-bit multiply (operand sign folded into the block), shifted left by
// (i+j)*K and added to acc. Overflow saturates at +/-(2^31 - 1) and flags.
// The configuration layer guarantees |sel_w|*|sel_a| <= N.
MacResult pe_mac(std::int32_t acc, const BxpScalar& w, BlockSelection sel_w,
                 const BxpScalar& a, BlockSelection sel_a);

} // namespace axbxp
