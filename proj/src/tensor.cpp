// SPDX-License-Identifier: Apache-2.0
#include "axbxp/tensor.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

namespace axbxp {

int index_bits(int n, int kept) {
    const int choices = n - kept + 1; // offsets 0 .. n-kept
    int bits = 0;
    while ((1 << bits) < choices)
        ++bits;
    return bits;
}

int data_index_bits(int k, int kept, Mode mode) {
    const int n = block_count(k);
    if (kept < 1 || kept > n)
        raise(Errc::config_error, "kept block count must be in 1..N");
    int bits = kept * k;
    if (mode == Mode::Dynamic)
        bits += index_bits(n, kept);
    return bits;
}

int per_element_bits(int k, int kept, Mode mode) {
    return data_index_bits(k, kept, mode) + 1; // explicit sign bit
}

FootprintBits footprint_bits(int k, int kept, Mode mode, std::uint64_t element_count, int rank) {
    FootprintBits f;
    f.element_bits = per_element_bits(k, kept, mode);
    f.payload_bits = element_count * static_cast<std::uint64_t>(f.element_bits);
    // magic + version + mode + K + N + kept + rank + dims + scale (+ shared start)
    f.header_bits = 8ull * (4 + 6 + 4ull * static_cast<std::uint64_t>(rank) + 8 +
                            (mode == Mode::Static ? 1 : 0));
    return f;
}

namespace {

constexpr char axbp_magic[4] = {'A', 'X', 'B', 'P'};
constexpr std::uint8_t axbp_version = 1;
constexpr std::uint64_t max_elements = 1ull << 31; // deserialization safety cap

std::uint64_t shape_elements(const std::vector<std::uint32_t>& shape) {
    std::uint64_t count = 1;
    for (std::uint32_t d : shape) {
        count *= d;
        if (count > max_elements)
            raise(Errc::shape_error, "tensor too large");
    }
    return count;
}

// Packs logical bits LSB-first: the first bit written lands in the least
// significant free bit of the current byte. Multi-bit fields are written
// value-LSB first.
class BitWriter {
public:
    explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}

    void put(unsigned value, int bits) {
        for (int b = 0; b < bits; ++b) {
            if (used_ == 0)
                out_.push_back(0);
            if ((value >> b) & 1u)
                out_.back() = static_cast<std::uint8_t>(out_.back() | (1u << used_));
            used_ = (used_ + 1) % 8;
        }
    }

private:
    std::vector<std::uint8_t>& out_;
    int used_ = 0;
};

class BitReader {
public:
    explicit BitReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    unsigned get(int bits) {
        unsigned value = 0;
        for (int b = 0; b < bits; ++b) {
            const std::size_t byte = pos_ / 8;
            if (byte >= bytes_.size())
                raise(Errc::format_error, "truncated AXBP stream");
            if ((bytes_[byte] >> (pos_ % 8)) & 1u)
                value |= 1u << b;
            ++pos_;
        }
        return value;
    }

    // remaining padding must be zero and fit in the current byte
    void finish() const {
        const std::size_t bytes_used = (pos_ + 7) / 8;
        if (bytes_used != bytes_.size())
            raise(Errc::format_error, "trailing bytes after AXBP payload");
        if (pos_ % 8) {
            const unsigned padding = bytes_.back() >> (pos_ % 8);
            if (padding)
                raise(Errc::format_error, "nonzero padding bits in AXBP payload");
        }
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void append_f64(std::vector<std::uint8_t>& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t u8() {
        if (pos_ >= bytes_.size())
            raise(Errc::format_error, "truncated AXBP header");
        return bytes_[pos_++];
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(u8()) << (8 * i);
        return v;
    }
    double f64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(u8()) << (8 * i);
        return std::bit_cast<double>(v);
    }
    std::span<const std::uint8_t> rest() const { return bytes_.subspan(pos_); }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

int most_significant_nonzero_block(const BxpScalar& s) {
    for (int i = s.n - 1; i >= 0; --i)
        if (s.blocks[static_cast<std::size_t>(i)])
            return i;
    return -1;
}

} // namespace

AxbxpTensor AxbxpTensor::convert(std::span<const std::int8_t> src, std::vector<std::uint32_t> shape,
                                 int k, int kept, Mode mode, double scale) {
    const int n = block_count(k);
    if (kept < 1 || kept > n)
        raise(Errc::config_error, "kept block count " + std::to_string(kept) + " not in 1..N");
    if (!std::isfinite(scale) || scale <= 0.0)
        raise(Errc::input_error, "tensor scale must be finite and positive");
    if (shape_elements(shape) != src.size())
        raise(Errc::shape_error, "shape does not match element count");

    AxbxpTensor t;
    t.shape_ = std::move(shape);
    t.k_ = k;
    t.n_ = n;
    t.kept_ = kept;
    t.mode_ = mode;
    t.scale_ = scale;
    t.signs_.reserve(src.size());
    t.data_.reserve(src.size() * static_cast<std::size_t>(kept));

    std::vector<BxpScalar> scalars;
    scalars.reserve(src.size());
    int max_start = kept - 1; // all-zero tensors keep the lowest valid range
    for (std::int8_t v : src) {
        scalars.push_back(to_blocks(v, k));
        max_start = std::max(max_start, most_significant_nonzero_block(scalars.back()));
    }
    if (mode == Mode::Static)
        t.shared_start_ = static_cast<std::uint8_t>(max_start);
    else
        t.starts_.reserve(src.size());

    for (std::size_t i = 0; i < scalars.size(); ++i) {
        const BxpScalar& s = scalars[i];
        int start = max_start;
        if (mode == Mode::Dynamic) {
            start = std::max(most_significant_nonzero_block(s), kept - 1);
            t.starts_.push_back(static_cast<std::uint8_t>(start));
        }
        t.signs_.push_back(s.sign < 0 ? 1 : 0);
        for (int j = 0; j < kept; ++j)
            t.data_.push_back(s.blocks[static_cast<std::size_t>(start - j)]);
    }
    return t;
}

AxbxpTensor convert_dynamic(std::span<const std::int8_t> src, std::vector<std::uint32_t> shape,
                            int k, int kept, double scale) {
    return AxbxpTensor::convert(src, std::move(shape), k, kept, Mode::Dynamic, scale);
}

AxbxpTensor convert_static(std::span<const std::int8_t> src, std::vector<std::uint32_t> shape,
                           int k, int kept, double scale) {
    return AxbxpTensor::convert(src, std::move(shape), k, kept, Mode::Static, scale);
}

int AxbxpTensor::shared_start() const {
    if (mode_ != Mode::Static)
        raise(Errc::config_error, "shared start index only exists in Static mode");
    return shared_start_;
}

BxpScalar AxbxpTensor::element_scalar(std::size_t i) const {
    BxpScalar s;
    s.k = static_cast<std::uint8_t>(k_);
    s.n = static_cast<std::uint8_t>(n_);
    s.sign = static_cast<std::int8_t>(sign(i));
    const int st = start(i);
    for (int j = 0; j < kept_; ++j)
        s.blocks[static_cast<std::size_t>(st - j)] = block(i, j);
    return s;
}

BlockSelection AxbxpTensor::element_selection(std::size_t i) const {
    return BlockSelection::range(start(i), kept_);
}

int AxbxpTensor::element_value(std::size_t i) const {
    int magnitude = 0;
    const int st = start(i);
    for (int j = 0; j < kept_; ++j)
        magnitude += static_cast<int>(block(i, j)) << ((st - j) * k_);
    return sign(i) * magnitude;
}

std::vector<std::int8_t> AxbxpTensor::reconstruct() const {
    std::vector<std::int8_t> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i)
        out.push_back(static_cast<std::int8_t>(element_value(i)));
    return out;
}

FootprintBits AxbxpTensor::footprint() const {
    return footprint_bits(k_, kept_, mode_, size(), static_cast<int>(shape_.size()));
}

std::vector<std::uint8_t> AxbxpTensor::serialize() const {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), axbp_magic, axbp_magic + 4);
    out.push_back(axbp_version);
    out.push_back(static_cast<std::uint8_t>(mode_));
    out.push_back(static_cast<std::uint8_t>(k_));
    out.push_back(static_cast<std::uint8_t>(n_));
    out.push_back(static_cast<std::uint8_t>(kept_));
    out.push_back(static_cast<std::uint8_t>(shape_.size()));
    for (std::uint32_t d : shape_)
        append_u32(out, d);
    append_f64(out, scale_);
    if (mode_ == Mode::Static)
        out.push_back(shared_start_);

    const int idx_bits = index_bits(n_, kept_);
    BitWriter bits(out);
    for (std::size_t i = 0; i < size(); ++i) {
        if (mode_ == Mode::Dynamic)
            bits.put(static_cast<unsigned>(starts_[i] - (kept_ - 1)), idx_bits);
        bits.put(signs_[i], 1);
        for (int j = 0; j < kept_; ++j)
            bits.put(block(i, j), k_);
    }
    return out;
}

AxbxpTensor AxbxpTensor::deserialize(std::span<const std::uint8_t> bytes) {
    ByteReader in(bytes);
    char magic[4];
    for (char& c : magic)
        c = static_cast<char>(in.u8());
    if (std::memcmp(magic, axbp_magic, 4) != 0)
        raise(Errc::format_error, "not an AXBP stream");
    if (in.u8() != axbp_version)
        raise(Errc::format_error, "unsupported AXBP version");
    const std::uint8_t mode_byte = in.u8();
    if (mode_byte > 1)
        raise(Errc::format_error, "invalid AXBP mode byte");
    const Mode mode = static_cast<Mode>(mode_byte);
    const int k = in.u8();
    if (k < 2 || k > 4)
        raise(Errc::format_error, "invalid AXBP block width");
    const int n = in.u8();
    if (n != block_count(k))
        raise(Errc::format_error, "AXBP block count does not match block width");
    const int kept = in.u8();
    if (kept < 1 || kept > n)
        raise(Errc::format_error, "invalid AXBP kept block count");
    const int rank = in.u8();
    std::vector<std::uint32_t> shape(static_cast<std::size_t>(rank));
    for (auto& d : shape)
        d = in.u32();
    std::uint64_t count = 1;
    for (std::uint32_t d : shape) {
        count *= d;
        if (count > max_elements)
            raise(Errc::format_error, "AXBP element count too large");
    }
    const double scale = in.f64();
    if (!std::isfinite(scale) || scale <= 0.0)
        raise(Errc::format_error, "invalid AXBP scale");

    AxbxpTensor t;
    t.shape_ = std::move(shape);
    t.k_ = k;
    t.n_ = n;
    t.kept_ = kept;
    t.mode_ = mode;
    t.scale_ = scale;
    if (mode == Mode::Static) {
        const int start = in.u8();
        if (start < kept - 1 || start > n - 1)
            raise(Errc::format_error, "AXBP shared start index out of range");
        t.shared_start_ = static_cast<std::uint8_t>(start);
    }

    const int idx_bits = index_bits(n, kept);
    BitReader bits(in.rest());
    t.signs_.reserve(count);
    t.data_.reserve(count * static_cast<std::size_t>(kept));
    for (std::uint64_t i = 0; i < count; ++i) {
        if (mode == Mode::Dynamic) {
            const unsigned offset = bits.get(idx_bits);
            if (offset > static_cast<unsigned>(n - kept))
                raise(Errc::format_error, "AXBP element index offset out of range");
            t.starts_.push_back(static_cast<std::uint8_t>(offset + static_cast<unsigned>(kept - 1)));
        }
        t.signs_.push_back(static_cast<std::uint8_t>(bits.get(1)));
        for (int j = 0; j < kept; ++j)
            t.data_.push_back(static_cast<std::uint8_t>(bits.get(k)));
    }
    bits.finish();
    return t;
}

} // namespace axbxp
