// SPDX-License-Identifier: Apache-2.0
#include "axbxp/perf.hpp"

#include <sstream>

#include <json.hpp>

namespace axbxp {

std::uint64_t mac_cost_exact(int k) {
    const std::uint64_t n = static_cast<std::uint64_t>(block_count(k));
    return n * n;
}

std::uint64_t mac_cost(const AxbxpConfig& c) {
    validate_config(c);
    return static_cast<std::uint64_t>(c.l());
}

int pe_throughput(const std::optional<AxbxpConfig>& c, Fabric fabric) {
    if (!c)
        return 1; // FxP8 reference PE
    validate_config(*c);
    const int l = c->l();
    switch (fabric) {
    case Fabric::Fxp8:
        return 1;
    case Fabric::AxbxpPe:
        return c->n() / l; // l <= n holds in the pruned space
    case Fabric::Fusion16:
        if (c->k != 2)
            raise(Errc::config_error, "the 16-brick fabric is built from 2-bit bricks");
        return 16 / l;
    }
    return 1;
}

std::uint64_t systolic_cycles(const GemmDims& dims, const ArraySpec& spec,
                              const std::optional<AxbxpConfig>& config) {
    if (spec.rows < 1 || spec.cols < 1)
        raise(Errc::config_error, "array dimensions must be >= 1");
    if (dims.macs() == 0)
        return 0;
    const std::uint64_t rows = static_cast<std::uint64_t>(spec.rows);
    const std::uint64_t cols = static_cast<std::uint64_t>(spec.cols);
    const std::uint64_t per_cycle = static_cast<std::uint64_t>(pe_throughput(config, spec.fabric));
    const std::uint64_t row_tiles = (dims.m + rows - 1) / rows;
    const std::uint64_t col_tiles = (dims.p + cols - 1) / cols;
    const std::uint64_t reduction = (dims.r + per_cycle - 1) / per_cycle;
    return row_tiles * col_tiles * reduction + rows + cols - 2;
}

namespace {

GemmDims layer_dims(const QuantLayer& layer, const Geometry& in, Geometry& out) {
    if (layer.kind == LayerKind::Dense) {
        out = Geometry{static_cast<int>(layer.weights.shape[0]), 1, 1};
        return GemmDims{layer.weights.shape[0], layer.weights.shape[1], 1};
    }
    const auto& ws = layer.weights.shape;
    const int kh = static_cast<int>(ws[2]), kw = static_cast<int>(ws[3]);
    const int oh = (in.height + 2 * layer.pad - kh) / layer.stride + 1;
    const int ow = (in.width + 2 * layer.pad - kw) / layer.stride + 1;
    out = Geometry{static_cast<int>(ws[0]), oh, ow};
    return GemmDims{ws[0], ws[1] * static_cast<std::uint64_t>(kh) * static_cast<std::uint64_t>(kw),
                    static_cast<std::uint64_t>(oh) * static_cast<std::uint64_t>(ow)};
}

std::uint64_t tensor_bits(std::uint64_t elements, const std::optional<AxbxpConfig>& config,
                          bool weights_role) {
    if (!config)
        return elements * 8; // FxP8
    const int kept = weights_role ? config->kept_w : config->kept_a;
    return elements * static_cast<std::uint64_t>(per_element_bits(config->k, kept, config->mode));
}

} // namespace

CostReport model_cost(const QuantModel& model, const ArraySpec& spec) {
    CostReport report;
    Geometry geom = model.input;
    const ArraySpec baseline{spec.rows, spec.cols, Fabric::Fxp8};
    for (int li = 0; li < static_cast<int>(model.layers.size()); ++li) {
        const QuantLayer& layer = model.layers[static_cast<std::size_t>(li)];
        if (!layer.is_mac()) {
            if (layer.kind == LayerKind::MaxPool2d)
                geom = Geometry{geom.channels, geom.height / layer.pool, geom.width / layer.pool};
            else if (layer.kind == LayerKind::Flatten)
                geom = Geometry{geom.elements(), 1, 1};
            continue;
        }
        LayerCost cost;
        cost.layer_index = li;
        cost.kind = layer_kind_name(layer.kind);
        Geometry out;
        cost.dims = layer_dims(layer, geom, out);
        cost.macs = cost.dims.macs();
        if (layer.config) {
            validate_config(*layer.config);
            cost.config = layer.config->tuple_str() + "/" + mode_name(layer.config->mode);
            cost.partial_products = cost.macs * mac_cost(*layer.config);
            cost.compute_reduction = static_cast<double>(mac_cost_exact(layer.config->k)) /
                                     static_cast<double>(mac_cost(*layer.config));
        } else {
            cost.config = "exact";
            cost.fxp8_multiplies = cost.macs;
        }
        cost.weight_bits = tensor_bits(layer.weights.values.size(), layer.config, true);
        cost.act_bits = tensor_bits(static_cast<std::uint64_t>(geom.elements()), layer.config, false);
        cost.traffic_bytes = (cost.weight_bits + 7) / 8 + (cost.act_bits + 7) / 8;
        cost.macs_per_cycle = pe_throughput(layer.config, spec.fabric);
        cost.cycles = systolic_cycles(cost.dims, spec, layer.config);
        cost.baseline_cycles = systolic_cycles(cost.dims, baseline, std::nullopt);
        cost.speedup = cost.cycles ? static_cast<double>(cost.baseline_cycles) /
                                         static_cast<double>(cost.cycles)
                                   : 1.0;
        report.total_cycles += cost.cycles;
        report.total_baseline_cycles += cost.baseline_cycles;
        report.total_weight_bits += cost.weight_bits;
        report.total_act_bits += cost.act_bits;
        report.total_traffic_bytes += cost.traffic_bytes;
        report.layers.push_back(std::move(cost));
        geom = out;
    }
    report.speedup = report.total_cycles ? static_cast<double>(report.total_baseline_cycles) /
                                               static_cast<double>(report.total_cycles)
                                         : 1.0;
    return report;
}

std::string cost_report_json(const CostReport& report) {
    nlohmann::json j;
    j["layers"] = nlohmann::json::array();
    for (const LayerCost& c : report.layers) {
        j["layers"].push_back({{"layer", c.layer_index},
                               {"kind", c.kind},
                               {"config", c.config},
                               {"m", c.dims.m},
                               {"r", c.dims.r},
                               {"p", c.dims.p},
                               {"macs", c.macs},
                               {"partial_products", c.partial_products},
                               {"fxp8_multiplies", c.fxp8_multiplies},
                               {"compute_reduction", c.compute_reduction},
                               {"weight_bits", c.weight_bits},
                               {"act_bits", c.act_bits},
                               {"traffic_bytes", c.traffic_bytes},
                               {"macs_per_cycle", c.macs_per_cycle},
                               {"cycles", c.cycles},
                               {"baseline_cycles", c.baseline_cycles},
                               {"speedup", c.speedup}});
    }
    j["total_cycles"] = report.total_cycles;
    j["total_baseline_cycles"] = report.total_baseline_cycles;
    j["total_weight_bits"] = report.total_weight_bits;
    j["total_act_bits"] = report.total_act_bits;
    j["total_traffic_bytes"] = report.total_traffic_bytes;
    j["speedup"] = report.speedup;
    return j.dump(2);
}

std::string cost_report_csv(const CostReport& report) {
    std::ostringstream out;
    out << "layer,kind,config,m,r,p,macs,partial_products,fxp8_multiplies,compute_reduction,"
           "weight_bits,act_bits,traffic_bytes,macs_per_cycle,cycles,baseline_cycles,speedup\n";
    for (const LayerCost& c : report.layers)
        out << c.layer_index << ',' << c.kind << ',' << '"' << c.config << '"' << ',' << c.dims.m
            << ',' << c.dims.r << ',' << c.dims.p << ',' << c.macs << ',' << c.partial_products
            << ',' << c.fxp8_multiplies << ',' << c.compute_reduction << ',' << c.weight_bits
            << ',' << c.act_bits << ',' << c.traffic_bytes << ',' << c.macs_per_cycle << ','
            << c.cycles << ',' << c.baseline_cycles << ',' << c.speedup << '\n';
    return out.str();
}

} // namespace axbxp
