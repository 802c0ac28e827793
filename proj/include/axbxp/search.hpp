// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "axbxp/design_space.hpp"
#include "axbxp/train.hpp"

namespace axbxp {

struct SearchSettings {
    double gamma = 1.0; // accepted accuracy loss, percentage points
    int k_tgt = 2;
    Mode mode = Mode::Dynamic;
    int eval_subset = 0; // samples used per evaluation; 0 = whole test split
    int max_epoch = 0;   // fine-tuning cap after assignment
    unsigned seed = 1;
    bool pin_first_last = true;          // keep first/last MAC layers exact
    bool finetune_per_candidate = false; // 1 recovery epoch inside every candidate trial
};

struct CandidateTrial {
    AxbxpConfig config;
    double accuracy = 0.0;
    double drop = 0.0;
};

struct LayerDecision {
    int layer_index = 0; // index into QuantModel::layers
    std::optional<AxbxpConfig> config;
    std::vector<CandidateTrial> trail;
    bool best_effort = false; // no candidate met gamma; config holds the min-drop one
};

struct LayerAssignment {
    std::vector<LayerDecision> layers; // one per MAC layer
    double baseline_accuracy = 0.0;
    double achieved_accuracy = 0.0;
    bool best_effort = false;
    int finetune_epochs = 0;
};

// Algorithm 2: walk the pruned space in canonical (cheapest-first) order,
// apply each candidate to this layer, evaluate, and return the first one
// whose drop stays within gamma. When none qualifies the minimum-drop
// candidate is returned and the decision is flagged best-effort. The model
// is left with the chosen config applied.
AxbxpConfig get_best_config(QuantModel& model, int layer_index, const Dataset& data,
                            std::span<const int> eval_idx, double baseline_accuracy,
                            const SearchSettings& settings, LayerDecision* decision = nullptr);

struct SearchResult {
    LayerAssignment assignment;
    QuantModel model;       // quantized, configs applied, weights refreshed after fine-tuning
    FloatModel float_model; // fine-tuned copy of the input model
};

// Algorithm 1: quantize, measure the baseline, assign configs greedily layer
// by layer, then fine-tune until the drop is within gamma or max_epoch.
SearchResult design_axbxp_dnn(const FloatModel& model, const Dataset& data,
                              const SearchSettings& settings);

std::string search_report_json(const LayerAssignment& assignment, const SearchSettings& settings);

// --- distribution and error analyses ---

struct BlockHistogram {
    int k = 2, n = 4;
    std::array<std::uint64_t, max_block_count> nonzero_per_block{};
    std::vector<std::uint64_t> value_bins; // histogram of integer values over [-127,127]
    int bin_width = 1;
};

BlockHistogram block_histogram(const QuantTensor& t, int k, int value_bin_count = 16);

struct ErrorStats {
    std::vector<std::uint64_t> histogram; // |x - reconstruct(x)| in [0,127], equal-width bins
    int bin_width = 1;
    double mae = 0.0;
    int max_error = 0;
};

struct ErrorAnalysis {
    ErrorStats static_idx;
    ErrorStats dynamic_idx;
};

// Reconstruction error of both selection heuristics at (k, kept) on the
// same tensor. Dynamic error <= static error holds element-wise.
ErrorAnalysis error_analysis(const QuantTensor& t, int k, int kept, int bin_count = 16);

} // namespace axbxp
