// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "axbxp/config.hpp"

namespace axbxp {

enum class ConstraintLevel { Unconstrained, Constrained, Pruned };

struct DesignSpace {
    std::vector<AxbxpConfig> configs;
    ConstraintLevel level = ConstraintLevel::Pruned;
};

// Count of all MAC designs for a given operand bit width: every block count
// N in 1..BW, every partial-product count L in 1..N^2, every choice of L of
// the N^2 block products. Exceeds 64 bits already at BW = 8, hence the
// decimal-string result.
std::string size_unconstrained(int bw);

// Same count with BW = 8, K in 2..4, N = ceil(8/K) and L <= N applied. 2655.
std::uint64_t size_constrained();

// Count of (kept_a, kept_w, block-subset) choices with kept_a >= kept_w over
// N in {2,3,4}, before the contiguity and L <= N restrictions. 188.
std::uint64_t size_pruned_eq5();

// The pruned configuration space: K in {2,3,4}, 1 <= kept_w <= kept_a <= N,
// kept_w * kept_a <= N. Ordered ascending by L, ties by ascending kept_a
// then kept_w, so a greedy search visits the cheapest candidates first.
// Configs are emitted with the given mode attached.
DesignSpace enumerate_pruned(std::optional<int> k = std::nullopt,
                             Mode mode = Mode::Dynamic);

} // namespace axbxp
