// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "axbxp/nn.hpp"

namespace axbxp {

// Fxp8: one 8x8 multiplier per PE, 1 MAC/cycle. AxbxpPe: N signed (K+1)-bit
// multipliers per PE, floor(N/L) MACs/cycle. Fusion16: 16 2-bit bricks per
// PE (K = 2 only), floor(16/L) MACs/cycle.
enum class Fabric { Fxp8 = 0, AxbxpPe = 1, Fusion16 = 2 };

struct ArraySpec {
    int rows = 32, cols = 32; // output-stationary systolic array
    Fabric fabric = Fabric::AxbxpPe;
};

// Partial products per MAC: N^2 for exact blocked computation, L under a
// configuration.
std::uint64_t mac_cost_exact(int k);
std::uint64_t mac_cost(const AxbxpConfig& c);

// MACs per PE per cycle. An empty config means exact FxP8 operation.
int pe_throughput(const std::optional<AxbxpConfig>& c, Fabric fabric);

// One layer's GEMM form: [m x r] weights against [r x p] activations.
struct GemmDims {
    std::uint64_t m = 0, r = 0, p = 0;

    std::uint64_t macs() const { return m * r * p; }
};

// ceil(m/rows) * ceil(p/cols) * ceil(r / macs_per_cycle) steady state plus
// rows+cols-2 fill/drain skew. Zero-sized layers cost zero cycles.
std::uint64_t systolic_cycles(const GemmDims& dims, const ArraySpec& spec,
                              const std::optional<AxbxpConfig>& config);

struct LayerCost {
    int layer_index = 0;
    std::string kind;
    std::string config; // "(k,kept_w,kept_a)/mode" or "exact"
    GemmDims dims;
    std::uint64_t macs = 0;
    std::uint64_t partial_products = 0; // macs * L (config) or macs * N^2 (exact blocked)
    std::uint64_t fxp8_multiplies = 0;  // macs on unapproximated layers
    double compute_reduction = 1.0;     // N^2 / L for configured layers
    std::uint64_t weight_bits = 0;      // footprint of the weight tensor
    std::uint64_t act_bits = 0;         // footprint of the input activation map
    std::uint64_t traffic_bytes = 0;    // weights + input activations, one pass
    int macs_per_cycle = 1;             // PE throughput on the report's fabric
    std::uint64_t cycles = 0;
    std::uint64_t baseline_cycles = 0; // same dims on the FxP8 fabric
    double speedup = 1.0;
};

struct CostReport {
    std::vector<LayerCost> layers;
    std::uint64_t total_cycles = 0, total_baseline_cycles = 0;
    std::uint64_t total_weight_bits = 0, total_act_bits = 0, total_traffic_bytes = 0;
    double speedup = 1.0;
};

// Footprint and cycle model over every MAC layer of the model, using each
// layer's attached config (exact where absent).
CostReport model_cost(const QuantModel& model, const ArraySpec& spec);

std::string cost_report_json(const CostReport& report);
std::string cost_report_csv(const CostReport& report);

} // namespace axbxp
