// SPDX-License-Identifier: Apache-2.0
#include "axbxp/report.hpp"

#include <sstream>

#include <json.hpp>

namespace axbxp {

namespace {

using nlohmann::json;

struct TensorAnalysis {
    std::string role; // "weights" | "activations"
    int k = 2, kept = 1;
    BlockHistogram hist;
    ErrorAnalysis errors;
};

struct LayerAnalysis {
    int layer_index = 0;
    std::string kind;
    std::vector<TensorAnalysis> tensors;
};

TensorAnalysis analyze(const QuantTensor& t, const std::string& role, int k, int kept, int bins) {
    TensorAnalysis a;
    a.role = role;
    a.k = k;
    a.kept = kept;
    a.hist = block_histogram(t, k, bins);
    a.errors = error_analysis(t, k, kept, bins);
    return a;
}

// analysis parameters for a layer: its config when present, the report
// defaults otherwise
void layer_params(const QuantLayer& layer, const ReportOptions& opt, bool weights_role, int& k,
                  int& kept) {
    if (layer.config) {
        k = layer.config->k;
        kept = weights_role ? layer.config->kept_w : layer.config->kept_a;
    } else {
        k = opt.k;
        kept = opt.kept;
    }
}

std::vector<LayerAnalysis> analyze_model(const QuantModel& model, const Dataset* data,
                                         const ReportOptions& opt) {
    // capture per-layer activation inputs over a small test batch
    LayerTaps taps;
    if (data && opt.activation_samples > 0) {
        std::vector<int> idx = test_indices(*data);
        if (static_cast<int>(idx.size()) > opt.activation_samples)
            idx.resize(static_cast<std::size_t>(opt.activation_samples));
        std::vector<LayerTaps> per_sample(idx.size());
        for (std::size_t s = 0; s < idx.size(); ++s) {
            const QuantTensor in = quantize_input(model, data->sample(idx[s]));
            forward_exact(model, in, nullptr, &per_sample[s]);
        }
        if (!per_sample.empty()) {
            taps.inputs.resize(per_sample[0].inputs.size());
            for (std::size_t m = 0; m < taps.inputs.size(); ++m) {
                QuantTensor merged;
                merged.scale = per_sample[0].inputs[m].scale;
                for (const LayerTaps& one : per_sample)
                    merged.values.insert(merged.values.end(), one.inputs[m].values.begin(),
                                         one.inputs[m].values.end());
                merged.shape = {static_cast<std::uint32_t>(merged.values.size())};
                taps.inputs[m] = std::move(merged);
            }
        }
    }

    std::vector<LayerAnalysis> out;
    std::size_t mac_seen = 0;
    for (int li = 0; li < static_cast<int>(model.layers.size()); ++li) {
        const QuantLayer& layer = model.layers[static_cast<std::size_t>(li)];
        if (!layer.is_mac())
            continue;
        LayerAnalysis la;
        la.layer_index = li;
        la.kind = layer_kind_name(layer.kind);
        int k = 0, kept = 0;
        layer_params(layer, opt, true, k, kept);
        la.tensors.push_back(analyze(layer.weights, "weights", k, kept, opt.bins));
        if (mac_seen < taps.inputs.size() && !taps.inputs[mac_seen].values.empty()) {
            layer_params(layer, opt, false, k, kept);
            la.tensors.push_back(analyze(taps.inputs[mac_seen], "activations", k, kept, opt.bins));
        }
        ++mac_seen;
        out.push_back(std::move(la));
    }
    return out;
}

json analysis_json(const TensorAnalysis& a) {
    json j;
    j["role"] = a.role;
    j["k"] = a.k;
    j["kept"] = a.kept;
    j["nonzero_per_block"] = std::vector<std::uint64_t>(
        a.hist.nonzero_per_block.begin(), a.hist.nonzero_per_block.begin() + a.hist.n);
    j["value_bins"] = a.hist.value_bins;
    j["value_bin_width"] = a.hist.bin_width;
    j["mae_static"] = a.errors.static_idx.mae;
    j["mae_dynamic"] = a.errors.dynamic_idx.mae;
    j["max_error_static"] = a.errors.static_idx.max_error;
    j["max_error_dynamic"] = a.errors.dynamic_idx.max_error;
    j["error_bins_static"] = a.errors.static_idx.histogram;
    j["error_bins_dynamic"] = a.errors.dynamic_idx.histogram;
    j["error_bin_width"] = a.errors.static_idx.bin_width;
    return j;
}

} // namespace

std::string model_report_json(const QuantModel& model, const Dataset* data,
                              const ReportOptions& options) {
    const CostReport cost = model_cost(model, options.array);
    const std::vector<LayerAnalysis> analyses = analyze_model(model, data, options);

    json j;
    j["cost"] = json::parse(cost_report_json(cost));
    j["analysis"] = json::array();
    for (const LayerAnalysis& la : analyses) {
        json layer;
        layer["layer"] = la.layer_index;
        layer["kind"] = la.kind;
        layer["tensors"] = json::array();
        for (const TensorAnalysis& a : la.tensors)
            layer["tensors"].push_back(analysis_json(a));
        j["analysis"].push_back(std::move(layer));
    }
    return j.dump(2);
}

std::string model_report_csv(const QuantModel& model, const Dataset* data,
                             const ReportOptions& options) {
    const CostReport cost = model_cost(model, options.array);
    const std::vector<LayerAnalysis> analyses = analyze_model(model, data, options);

    std::ostringstream out;
    out << "record,layer,tensor,key,bin,value\n";
    for (const LayerAnalysis& la : analyses) {
        for (const TensorAnalysis& a : la.tensors) {
            for (int b = 0; b < a.hist.n; ++b)
                out << "hist_nonzero," << la.layer_index << ',' << a.role << ",block," << b << ','
                    << a.hist.nonzero_per_block[static_cast<std::size_t>(b)] << '\n';
            for (std::size_t b = 0; b < a.hist.value_bins.size(); ++b)
                out << "hist_value," << la.layer_index << ',' << a.role << ",bin," << b << ','
                    << a.hist.value_bins[b] << '\n';
            for (std::size_t b = 0; b < a.errors.static_idx.histogram.size(); ++b)
                out << "error_hist_static," << la.layer_index << ',' << a.role << ",bin," << b
                    << ',' << a.errors.static_idx.histogram[b] << '\n';
            for (std::size_t b = 0; b < a.errors.dynamic_idx.histogram.size(); ++b)
                out << "error_hist_dynamic," << la.layer_index << ',' << a.role << ",bin," << b
                    << ',' << a.errors.dynamic_idx.histogram[b] << '\n';
            out << "error," << la.layer_index << ',' << a.role << ",mae_static,,"
                << a.errors.static_idx.mae << '\n';
            out << "error," << la.layer_index << ',' << a.role << ",mae_dynamic,,"
                << a.errors.dynamic_idx.mae << '\n';
        }
    }
    for (const LayerCost& c : cost.layers) {
        out << "cost," << c.layer_index << ",,config,," << c.config << '\n';
        out << "cost," << c.layer_index << ",,macs,," << c.macs << '\n';
        out << "cost," << c.layer_index << ",,partial_products,," << c.partial_products << '\n';
        out << "cost," << c.layer_index << ",,compute_reduction,," << c.compute_reduction << '\n';
        out << "cost," << c.layer_index << ",,weight_bits,," << c.weight_bits << '\n';
        out << "cost," << c.layer_index << ",,act_bits,," << c.act_bits << '\n';
        out << "cost," << c.layer_index << ",,traffic_bytes,," << c.traffic_bytes << '\n';
        out << "cost," << c.layer_index << ",,macs_per_cycle,," << c.macs_per_cycle << '\n';
        out << "cost," << c.layer_index << ",,cycles,," << c.cycles << '\n';
        out << "cost," << c.layer_index << ",,baseline_cycles,," << c.baseline_cycles << '\n';
        out << "cost," << c.layer_index << ",,speedup,," << c.speedup << '\n';
    }
    out << "total,,,cycles,," << cost.total_cycles << '\n';
    out << "total,,,baseline_cycles,," << cost.total_baseline_cycles << '\n';
    out << "total,,,speedup,," << cost.speedup << '\n';
    out << "total,,,weight_bits,," << cost.total_weight_bits << '\n';
    out << "total,,,act_bits,," << cost.total_act_bits << '\n';
    out << "total,,,traffic_bytes,," << cost.total_traffic_bytes << '\n';
    return out.str();
}

} // namespace axbxp
