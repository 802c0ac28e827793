// SPDX-License-Identifier: Apache-2.0
#include "axbxp/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

namespace axbxp {

namespace {

std::vector<int> eval_indices(const Dataset& data, int subset) {
    std::vector<int> idx = test_indices(data);
    if (subset > 0 && subset < static_cast<int>(idx.size()))
        idx.resize(static_cast<std::size_t>(subset));
    return idx;
}

// candidate trial used by both search paths; per-candidate fine-tuning
// runs one recovery epoch on a scratch copy of the float model
double try_candidate(QuantModel& model, int layer_index, const AxbxpConfig& candidate,
                     const Dataset& data, std::span<const int> eval_idx,
                     const SearchSettings& settings, const FloatModel* float_model,
                     const std::vector<std::optional<AxbxpConfig>>* assigned) {
    model.layers[static_cast<std::size_t>(layer_index)].config = candidate;
    if (settings.finetune_per_candidate && float_model && assigned) {
        FloatModel scratch = *float_model;
        std::vector<std::optional<AxbxpConfig>> configs = *assigned;
        const std::vector<int> macs = model.mac_layers();
        const auto pos = std::find(macs.begin(), macs.end(), layer_index) - macs.begin();
        configs[static_cast<std::size_t>(pos)] = candidate;
        FinetuneOptions opt;
        opt.max_epochs = 1;
        opt.gamma = -1.0; // always run the single epoch
        opt.seed = settings.seed;
        const FinetuneReport r =
            finetune_axbxp(scratch, configs, data, train_indices(data), eval_idx, opt);
        return r.final_accuracy;
    }
    return evaluate_accuracy(model, data, eval_idx, true);
}

AxbxpConfig pick_config(QuantModel& model, int layer_index, const Dataset& data,
                        std::span<const int> eval_idx, double baseline_accuracy,
                        const SearchSettings& settings, LayerDecision* decision,
                        const FloatModel* float_model,
                        const std::vector<std::optional<AxbxpConfig>>* assigned) {
    if (layer_index < 0 || layer_index >= static_cast<int>(model.layers.size()) ||
        !model.layers[static_cast<std::size_t>(layer_index)].is_mac())
        raise(Errc::config_error, "layer " + std::to_string(layer_index) + " is not a MAC layer");
    const DesignSpace space = enumerate_pruned(settings.k_tgt, settings.mode);
    if (space.configs.empty())
        raise(Errc::config_error, "empty design space");

    LayerDecision local;
    local.layer_index = layer_index;
    std::size_t best = 0;
    double best_drop = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (const AxbxpConfig& candidate : space.configs) {
        const double acc = try_candidate(model, layer_index, candidate, data, eval_idx, settings,
                                         float_model, assigned);
        const double drop = baseline_accuracy - acc;
        local.trail.push_back(CandidateTrial{candidate, acc, drop});
        if (drop < best_drop) {
            best_drop = drop;
            best = local.trail.size() - 1;
        }
        if (drop <= settings.gamma) {
            accepted = true;
            best = local.trail.size() - 1;
            break;
        }
    }
    local.best_effort = !accepted;
    local.config = local.trail[best].config;
    const AxbxpConfig chosen = *local.config;
    model.layers[static_cast<std::size_t>(layer_index)].config = chosen;
    if (decision)
        *decision = std::move(local);
    return chosen;
}

} // namespace

AxbxpConfig get_best_config(QuantModel& model, int layer_index, const Dataset& data,
                            std::span<const int> eval_idx, double baseline_accuracy,
                            const SearchSettings& settings, LayerDecision* decision) {
    return pick_config(model, layer_index, data, eval_idx, baseline_accuracy, settings, decision,
                       nullptr, nullptr);
}

SearchResult design_axbxp_dnn(const FloatModel& model, const Dataset& data,
                              const SearchSettings& settings) {
    if (settings.gamma < 0.0)
        raise(Errc::config_error, "gamma must be >= 0");
    block_count(settings.k_tgt);

    SearchResult result;
    result.float_model = model;
    const std::vector<int> calib = train_indices(data);
    result.model = quantize_model(model, data, calib);
    const std::vector<int> eval_idx = eval_indices(data, settings.eval_subset);

    result.assignment.baseline_accuracy =
        evaluate_accuracy(result.model, data, eval_idx, false);

    const std::vector<int> macs = result.model.mac_layers();
    std::vector<std::optional<AxbxpConfig>> assigned(macs.size());
    for (std::size_t m = 0; m < macs.size(); ++m) {
        const int li = macs[m];
        LayerDecision decision;
        decision.layer_index = li;
        const bool pinned =
            settings.pin_first_last && (m == 0 || m + 1 == macs.size());
        if (pinned) {
            decision.config.reset();
        } else {
            pick_config(result.model, li, data, eval_idx, result.assignment.baseline_accuracy,
                        settings, &decision, &result.float_model, &assigned);
            assigned[m] = decision.config;
        }
        result.assignment.layers.push_back(std::move(decision));
    }

    result.assignment.achieved_accuracy = evaluate_accuracy(result.model, data, eval_idx, true);

    double drop = result.assignment.baseline_accuracy - result.assignment.achieved_accuracy;
    if (settings.max_epoch > 0 && drop > settings.gamma) {
        FinetuneOptions opt;
        opt.max_epochs = settings.max_epoch;
        opt.gamma = settings.gamma;
        opt.seed = settings.seed;
        const FinetuneReport r = finetune_axbxp(result.float_model, assigned, data,
                                                train_indices(data), eval_idx, opt);
        result.assignment.finetune_epochs = r.epochs_run;
        // refresh the quantized model from the fine-tuned weights
        result.model = quantize_model(result.float_model, data, calib);
        for (std::size_t m = 0; m < macs.size(); ++m)
            result.model.layers[static_cast<std::size_t>(macs[m])].config = assigned[m];
        result.assignment.achieved_accuracy =
            evaluate_accuracy(result.model, data, eval_idx, true);
    }

    drop = result.assignment.baseline_accuracy - result.assignment.achieved_accuracy;
    result.assignment.best_effort = drop > settings.gamma;
    return result;
}

std::string search_report_json(const LayerAssignment& assignment, const SearchSettings& settings) {
    nlohmann::json j;
    j["gamma"] = settings.gamma;
    j["k_tgt"] = settings.k_tgt;
    j["mode"] = mode_name(settings.mode);
    j["seed"] = settings.seed;
    j["eval_subset"] = settings.eval_subset;
    j["max_epoch"] = settings.max_epoch;
    j["baseline_accuracy"] = assignment.baseline_accuracy;
    j["achieved_accuracy"] = assignment.achieved_accuracy;
    j["accuracy_drop"] = assignment.baseline_accuracy - assignment.achieved_accuracy;
    j["best_effort"] = assignment.best_effort;
    j["finetune_epochs"] = assignment.finetune_epochs;
    j["layers"] = nlohmann::json::array();
    for (const LayerDecision& d : assignment.layers) {
        nlohmann::json layer;
        layer["layer"] = d.layer_index;
        if (d.config) {
            layer["config"] = d.config->tuple_str();
            layer["k"] = d.config->k;
            layer["kept_w"] = d.config->kept_w;
            layer["kept_a"] = d.config->kept_a;
            layer["mode"] = mode_name(d.config->mode);
        } else {
            layer["config"] = nullptr;
        }
        layer["best_effort"] = d.best_effort;
        layer["trail"] = nlohmann::json::array();
        for (const CandidateTrial& t : d.trail)
            layer["trail"].push_back({{"config", t.config.tuple_str()},
                                      {"accuracy", t.accuracy},
                                      {"drop", t.drop}});
        j["layers"].push_back(std::move(layer));
    }
    return j.dump(2);
}

BlockHistogram block_histogram(const QuantTensor& t, int k, int value_bin_count) {
    if (value_bin_count < 1)
        raise(Errc::config_error, "histogram needs at least one bin");
    BlockHistogram h;
    h.k = k;
    h.n = block_count(k);
    h.bin_width = (255 + value_bin_count - 1) / value_bin_count;
    h.value_bins.assign(static_cast<std::size_t>(value_bin_count), 0);
    for (std::int8_t v : t.values) {
        const BxpScalar s = to_blocks(v, k);
        for (int i = 0; i < h.n; ++i)
            if (s.blocks[static_cast<std::size_t>(i)])
                ++h.nonzero_per_block[static_cast<std::size_t>(i)];
        const int bin = std::min((static_cast<int>(v) + 127) / h.bin_width, value_bin_count - 1);
        ++h.value_bins[static_cast<std::size_t>(bin)];
    }
    return h;
}

namespace {

ErrorStats error_stats(const QuantTensor& t, const AxbxpTensor& approx, int bin_count) {
    ErrorStats s;
    s.bin_width = (128 + bin_count - 1) / bin_count;
    s.histogram.assign(static_cast<std::size_t>(bin_count), 0);
    const std::vector<std::int8_t> recon = approx.reconstruct();
    double total = 0.0;
    for (std::size_t i = 0; i < t.values.size(); ++i) {
        const int err = std::abs(static_cast<int>(t.values[i]) - static_cast<int>(recon[i]));
        total += err;
        s.max_error = std::max(s.max_error, err);
        const int bin = std::min(err / s.bin_width, bin_count - 1);
        ++s.histogram[static_cast<std::size_t>(bin)];
    }
    s.mae = t.values.empty() ? 0.0 : total / static_cast<double>(t.values.size());
    return s;
}

} // namespace

ErrorAnalysis error_analysis(const QuantTensor& t, int k, int kept, int bin_count) {
    if (bin_count < 1)
        raise(Errc::config_error, "histogram needs at least one bin");
    const std::vector<std::uint32_t> shape{static_cast<std::uint32_t>(t.values.size())};
    ErrorAnalysis a;
    a.static_idx = error_stats(t, convert_static(t.values, shape, k, kept), bin_count);
    a.dynamic_idx = error_stats(t, convert_dynamic(t.values, shape, k, kept), bin_count);
    return a;
}

} // namespace axbxp
