// SPDX-License-Identifier: Apache-2.0
#include "axbxp/blocked.hpp"

#include <bit>
#include <cstdlib>
#include <string>

namespace axbxp {

const char* errc_name(Errc code) {
    switch (code) {
    case Errc::ok: return "ok";
    case Errc::range_error: return "range error";
    case Errc::config_error: return "configuration error";
    case Errc::index_error: return "index error";
    case Errc::shape_error: return "shape error";
    case Errc::input_error: return "input error";
    case Errc::format_error: return "format error";
    case Errc::io_error: return "io error";
    case Errc::train_error: return "training error";
    }
    return "unknown error";
}

int block_count(int k) {
    if (k < 2 || k > 4)
        raise(Errc::config_error, "block width must be 2, 3 or 4, got " + std::to_string(k));
    return (source_bits + k - 1) / k;
}

BxpScalar to_blocks(int value, int k) {
    const int n = block_count(k);
    const int magnitude = std::abs(value);
    if (magnitude > max_magnitude)
        raise(Errc::range_error, "magnitude " + std::to_string(magnitude) + " exceeds 127");

    BxpScalar s;
    s.k = static_cast<std::uint8_t>(k);
    s.n = static_cast<std::uint8_t>(n);
    s.sign = value < 0 ? -1 : 1;
    const unsigned block_mask = (1u << k) - 1u;
    for (int i = 0; i < n; ++i)
        s.blocks[static_cast<std::size_t>(i)] =
            static_cast<std::uint8_t>((static_cast<unsigned>(magnitude) >> (i * k)) & block_mask);
    return s;
}

int from_blocks(const BxpScalar& s) {
    int magnitude = 0;
    for (int i = 0; i < s.n; ++i)
        magnitude += static_cast<int>(s.blocks[static_cast<std::size_t>(i)]) << (i * s.k);
    return s.sign < 0 ? -magnitude : magnitude;
}

BlockSelection::BlockSelection(std::initializer_list<int> indices) {
    for (int i : indices) {
        if (i < 0 || i >= max_block_count)
            raise(Errc::index_error, "block index " + std::to_string(i) + " out of range");
        mask_ = static_cast<std::uint8_t>(mask_ | (1u << i));
    }
}

BlockSelection BlockSelection::all(int n) {
    if (n < 1 || n > max_block_count)
        raise(Errc::config_error, "block count must be 1..4");
    return BlockSelection(static_cast<std::uint8_t>((1u << n) - 1u));
}

BlockSelection BlockSelection::range(int msb, int count) {
    if (count < 1 || msb >= max_block_count || msb - count + 1 < 0)
        raise(Errc::index_error, "selection [" + std::to_string(msb - count + 1) + ", " +
                                     std::to_string(msb) + "] out of range");
    const unsigned mask = ((1u << count) - 1u) << (msb - count + 1);
    return BlockSelection(static_cast<std::uint8_t>(mask));
}

int BlockSelection::count() const {
    return std::popcount(static_cast<unsigned>(mask_));
}

bool BlockSelection::contiguous() const {
    if (mask_ == 0)
        return true;
    const unsigned shifted = static_cast<unsigned>(mask_) >> std::countr_zero(static_cast<unsigned>(mask_));
    return (shifted & (shifted + 1)) == 0;
}

int BlockSelection::msb() const {
    if (mask_ == 0)
        return -1;
    return 31 - std::countl_zero(static_cast<unsigned>(mask_));
}

BxpScalar truncate_blocks(const BxpScalar& s, BlockSelection sel) {
    BxpScalar t = s;
    for (int i = 0; i < s.n; ++i)
        if (!sel.contains(i))
            t.blocks[static_cast<std::size_t>(i)] = 0;
    return t;
}

namespace {

void check_selection(const BxpScalar& s, BlockSelection sel) {
    if (sel.mask() >> s.n)
        raise(Errc::index_error, "selection refers to a block index >= N");
}

void check_same_layout(const BxpScalar& x, const BxpScalar& y) {
    if (x.k != y.k || x.n != y.n)
        raise(Errc::config_error, "operands have mismatched K or N");
}

} // namespace

std::int32_t exact_blocked_mul(const BxpScalar& x, const BxpScalar& y) {
    check_same_layout(x, y);
    std::int32_t sum = 0;
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < y.n; ++j) {
            const std::int32_t p = static_cast<std::int32_t>(x.blocks[static_cast<std::size_t>(i)]) *
                                   static_cast<std::int32_t>(y.blocks[static_cast<std::size_t>(j)]);
            sum += p << ((i + j) * x.k);
        }
    return static_cast<std::int32_t>(x.sign) * static_cast<std::int32_t>(y.sign) * sum;
}

std::int32_t approx_blocked_mul(const BxpScalar& x, BlockSelection sel_x,
                                const BxpScalar& y, BlockSelection sel_y) {
    check_same_layout(x, y);
    check_selection(x, sel_x);
    check_selection(y, sel_y);
    std::int32_t sum = 0;
    for (int i = 0; i < x.n; ++i) {
        if (!sel_x.contains(i))
            continue;
        for (int j = 0; j < y.n; ++j) {
            if (!sel_y.contains(j))
                continue;
            const std::int32_t p = static_cast<std::int32_t>(x.blocks[static_cast<std::size_t>(i)]) *
                                   static_cast<std::int32_t>(y.blocks[static_cast<std::size_t>(j)]);
            sum += p << ((i + j) * x.k);
        }
    }
    return static_cast<std::int32_t>(x.sign) * static_cast<std::int32_t>(y.sign) * sum;
}

MacResult pe_mac(std::int32_t acc, const BxpScalar& w, BlockSelection sel_w,
                 const BxpScalar& a, BlockSelection sel_a) {
    check_same_layout(w, a);
    check_selection(w, sel_w);
    check_selection(a, sel_a);
    std::int64_t wide = acc;
    for (int i = 0; i < w.n; ++i) {
        if (!sel_w.contains(i))
            continue;
        // signed (K+1)-bit block: magnitude < 2^K with the operand sign applied
        const std::int64_t wb = static_cast<std::int64_t>(w.sign) * w.blocks[static_cast<std::size_t>(i)];
        for (int j = 0; j < a.n; ++j) {
            if (!sel_a.contains(j))
                continue;
            const std::int64_t ab = static_cast<std::int64_t>(a.sign) * a.blocks[static_cast<std::size_t>(j)];
            wide += (wb * ab) << ((i + j) * w.k);
        }
    }
    MacResult r;
    if (wide > accumulator_max) {
        r.acc = accumulator_max;
        r.saturated = true;
    } else if (wide < -static_cast<std::int64_t>(accumulator_max)) {
        r.acc = -accumulator_max;
        r.saturated = true;
    } else {
        r.acc = static_cast<std::int32_t>(wide);
    }
    return r;
}

} // namespace axbxp
