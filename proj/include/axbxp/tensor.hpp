// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "axbxp/config.hpp"

namespace axbxp {

// Index-field width: ceil(log2(N - kept + 1)) bits per element in Dynamic
// mode, 0 when kept == N.
int index_bits(int n, int kept);

// Payload bits per element, excluding the sign bit (the quantity the memory
// model compares against 8-bit fixed point): kept*K data bits plus, in
// Dynamic mode, the index field.
int data_index_bits(int k, int kept, Mode mode);

// Payload bits per element including the explicit sign bit.
int per_element_bits(int k, int kept, Mode mode);

struct FootprintBits {
    std::uint64_t payload_bits = 0; // element_count * per_element_bits
    std::uint64_t header_bits = 0;  // fixed parameter block, amortized per tensor
    int element_bits = 0;

    std::uint64_t total_bits() const { return payload_bits + header_bits; }
};

FootprintBits footprint_bits(int k, int kept, Mode mode, std::uint64_t element_count, int rank);

// A tensor of block-truncated scalars sharing (N, K, kept, mode). Static
// mode keeps one shared kept-range start index; Dynamic mode stores a start
// per element. Stored blocks run in decreasing significance order: block
// j of element e sits at index start(e) - j. Immutable after construction.
class AxbxpTensor {
public:
    static AxbxpTensor convert(std::span<const std::int8_t> src, std::vector<std::uint32_t> shape,
                               int k, int kept, Mode mode, double scale = 1.0);

    const std::vector<std::uint32_t>& shape() const { return shape_; }
    std::size_t size() const { return signs_.size(); }
    int k() const { return k_; }
    int n() const { return n_; }
    int kept() const { return kept_; }
    Mode mode() const { return mode_; }
    double scale() const { return scale_; }
    int shared_start() const; // Static mode only

    int start(std::size_t i) const { return mode_ == Mode::Static ? shared_start_ : starts_[i]; }
    int sign(std::size_t i) const { return signs_[i] ? -1 : 1; }
    // j-th kept block of element i, j = 0 is the most significant
    std::uint8_t block(std::size_t i, int j) const {
        return data_[i * static_cast<std::size_t>(kept_) + static_cast<std::size_t>(j)];
    }

    // element i as a blocked scalar (unkept blocks zero) plus its kept range
    BxpScalar element_scalar(std::size_t i) const;
    BlockSelection element_selection(std::size_t i) const;
    int element_value(std::size_t i) const;

    std::vector<std::int8_t> reconstruct() const;
    FootprintBits footprint() const;

    // AXBP v1 byte stream; see the format notes in the README
    std::vector<std::uint8_t> serialize() const;
    static AxbxpTensor deserialize(std::span<const std::uint8_t> bytes);

private:
    AxbxpTensor() = default;

    std::vector<std::uint32_t> shape_;
    int k_ = 2, n_ = 4, kept_ = 4;
    Mode mode_ = Mode::Dynamic;
    std::uint8_t shared_start_ = 0;     // Static
    std::vector<std::uint8_t> starts_;  // Dynamic, per element
    std::vector<std::uint8_t> signs_;   // 1 = negative
    std::vector<std::uint8_t> data_;    // kept blocks per element, MSB first
    double scale_ = 1.0;
};

// Conversion entry points named after the two selection heuristics: Dynamic
// anchors each element's kept range at its own most significant non-zero
// block; Static anchors every element at the tensor-wide maximum.
AxbxpTensor convert_dynamic(std::span<const std::int8_t> src, std::vector<std::uint32_t> shape,
                            int k, int kept, double scale = 1.0);
AxbxpTensor convert_static(std::span<const std::int8_t> src, std::vector<std::uint32_t> shape,
                           int k, int kept, double scale = 1.0);

} // namespace axbxp
