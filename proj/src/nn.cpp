// SPDX-License-Identifier: Apache-2.0
#include "axbxp/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>
#include <thread>

namespace axbxp {

std::int32_t round_half_even(double x) {
    const double f = std::floor(x);
    const double diff = x - f;
    auto lo = static_cast<std::int64_t>(f);
    if (diff > 0.5)
        ++lo;
    else if (diff == 0.5 && (lo % 2) != 0)
        ++lo;
    return static_cast<std::int32_t>(lo);
}

namespace {

template <typename T>
QuantTensor quantize_with_scale_impl(std::span<const T> x, std::vector<std::uint32_t> shape,
                                     double scale) {
    QuantTensor t;
    t.shape = std::move(shape);
    t.scale = scale;
    t.values.reserve(x.size());
    for (T v : x) {
        const std::int32_t q = round_half_even(static_cast<double>(v) / scale);
        t.values.push_back(static_cast<std::int8_t>(std::clamp(q, -127, 127)));
    }
    return t;
}

template <typename T>
QuantTensor quantize_impl(std::span<const T> x, std::vector<std::uint32_t> shape) {
    double max_abs = 0.0;
    for (T v : x) {
        if (!std::isfinite(v))
            raise(Errc::input_error, "cannot quantize non-finite values");
        max_abs = std::max(max_abs, std::fabs(static_cast<double>(v)));
    }
    const double scale = max_abs > 0.0 ? max_abs / 127.0 : 1.0;
    return quantize_with_scale_impl(x, std::move(shape), scale);
}

} // namespace

QuantTensor quantize_with_scale(std::span<const float> x, std::vector<std::uint32_t> shape,
                                double scale) {
    return quantize_with_scale_impl(x, std::move(shape), scale);
}

QuantTensor quantize_with_scale(std::span<const double> x, std::vector<std::uint32_t> shape,
                                double scale) {
    return quantize_with_scale_impl(x, std::move(shape), scale);
}

QuantTensor quantize(std::span<const float> x, std::vector<std::uint32_t> shape) {
    return quantize_impl(x, std::move(shape));
}

QuantTensor quantize(std::span<const double> x, std::vector<std::uint32_t> shape) {
    return quantize_impl(x, std::move(shape));
}

std::vector<float> dequantize(const QuantTensor& t) {
    std::vector<float> out;
    out.reserve(t.values.size());
    for (std::int8_t v : t.values)
        out.push_back(static_cast<float>(v * t.scale));
    return out;
}

const char* layer_kind_name(LayerKind kind) {
    switch (kind) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::Relu: return "relu";
    case LayerKind::MaxPool2d: return "maxpool2d";
    case LayerKind::Flatten: return "flatten";
    }
    return "?";
}

LayerKind parse_layer_kind(const std::string& name) {
    if (name == "dense") return LayerKind::Dense;
    if (name == "conv2d") return LayerKind::Conv2d;
    if (name == "relu") return LayerKind::Relu;
    if (name == "maxpool2d") return LayerKind::MaxPool2d;
    if (name == "flatten") return LayerKind::Flatten;
    raise(Errc::format_error, "unknown layer kind '" + name + "'");
}

std::vector<int> QuantModel::mac_layers() const {
    std::vector<int> idx;
    for (int i = 0; i < static_cast<int>(layers.size()); ++i)
        if (layers[static_cast<std::size_t>(i)].is_mac())
            idx.push_back(i);
    return idx;
}

namespace {

std::int8_t saturate_i8(std::int32_t v) {
    return static_cast<std::int8_t>(std::clamp(v, -127, 127));
}

struct IntTensor {
    std::vector<std::int8_t> values;
    Geometry geom;
};

// Per-element blocked view of an operand tensor, either exact (all blocks
// kept) or converted through the Ax-BxP format.
struct BlockedOperand {
    std::vector<BxpScalar> scalars;
    std::vector<BlockSelection> selections;

    static BlockedOperand exact(std::span<const std::int8_t> values, int k) {
        BlockedOperand op;
        op.scalars.reserve(values.size());
        const BlockSelection all = BlockSelection::all(block_count(k));
        op.selections.assign(values.size(), all);
        for (std::int8_t v : values)
            op.scalars.push_back(to_blocks(v, k));
        return op;
    }

    static BlockedOperand from_axbxp(const AxbxpTensor& t) {
        BlockedOperand op;
        op.scalars.reserve(t.size());
        op.selections.reserve(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) {
            op.scalars.push_back(t.element_scalar(i));
            op.selections.push_back(t.element_selection(i));
        }
        return op;
    }
};

class Accumulator {
public:
    explicit Accumulator(std::int32_t bias) : wide_(bias) {}

    void mac_exact(std::int8_t w, std::int8_t a) {
        wide_ += static_cast<std::int64_t>(w) * static_cast<std::int64_t>(a);
    }

    std::int32_t finish(ForwardStats* stats) const {
        if (wide_ > accumulator_max) {
            if (stats)
                ++stats->saturated;
            return accumulator_max;
        }
        if (wide_ < -static_cast<std::int64_t>(accumulator_max)) {
            if (stats)
                ++stats->saturated;
            return -accumulator_max;
        }
        return static_cast<std::int32_t>(wide_);
    }

private:
    std::int64_t wide_;
};

// MAC kernels shared by dense and conv: exact integer or pe_mac over
// blocked operands. The approximate variant carries the saturation flag
// out of every pe_mac step.
struct MacContext {
    const BlockedOperand* w = nullptr;
    const BlockedOperand* a = nullptr;
    ForwardStats* stats = nullptr;
};

std::vector<std::int32_t> dense_int32(const QuantLayer& layer, const IntTensor& in,
                                      const MacContext* approx, ForwardStats* stats) {
    const int in_n = static_cast<int>(layer.weights.shape[1]);
    const int out_n = static_cast<int>(layer.weights.shape[0]);
    if (in_n != in.geom.elements())
        raise(Errc::shape_error, "dense layer expects " + std::to_string(in_n) + " inputs, got " +
                                     std::to_string(in.geom.elements()));
    std::vector<std::int32_t> out(static_cast<std::size_t>(out_n));
    for (int o = 0; o < out_n; ++o) {
        const std::size_t row = static_cast<std::size_t>(o) * static_cast<std::size_t>(in_n);
        if (approx) {
            std::int32_t acc = layer.bias[static_cast<std::size_t>(o)];
            for (int i = 0; i < in_n; ++i) {
                const std::size_t wi = row + static_cast<std::size_t>(i);
                const auto r = pe_mac(acc, approx->w->scalars[wi], approx->w->selections[wi],
                                      approx->a->scalars[static_cast<std::size_t>(i)],
                                      approx->a->selections[static_cast<std::size_t>(i)]);
                acc = r.acc;
                if (r.saturated && stats)
                    ++stats->saturated;
            }
            out[static_cast<std::size_t>(o)] = acc;
        } else {
            Accumulator acc(layer.bias[static_cast<std::size_t>(o)]);
            for (int i = 0; i < in_n; ++i)
                acc.mac_exact(layer.weights.values[row + static_cast<std::size_t>(i)],
                              in.values[static_cast<std::size_t>(i)]);
            out[static_cast<std::size_t>(o)] = acc.finish(stats);
        }
        if (stats)
            stats->macs += static_cast<std::uint64_t>(in_n);
    }
    return out;
}

std::vector<std::int32_t> conv_int32(const QuantLayer& layer, const IntTensor& in, Geometry& out_geom,
                                     const MacContext* approx, ForwardStats* stats) {
    const auto& ws = layer.weights.shape;
    const int oc = static_cast<int>(ws[0]), ic = static_cast<int>(ws[1]);
    const int kh = static_cast<int>(ws[2]), kw = static_cast<int>(ws[3]);
    if (ic != in.geom.channels)
        raise(Errc::shape_error, "conv layer channel mismatch");
    const int oh = (in.geom.height + 2 * layer.pad - kh) / layer.stride + 1;
    const int ow = (in.geom.width + 2 * layer.pad - kw) / layer.stride + 1;
    if (oh <= 0 || ow <= 0)
        raise(Errc::shape_error, "conv output would be empty");
    out_geom = Geometry{oc, oh, ow};

    auto in_at = [&](int c, int y, int x) -> std::size_t {
        return (static_cast<std::size_t>(c) * static_cast<std::size_t>(in.geom.height) +
                static_cast<std::size_t>(y)) * static_cast<std::size_t>(in.geom.width) +
               static_cast<std::size_t>(x);
    };

    std::vector<std::int32_t> out(static_cast<std::size_t>(oc * oh * ow));
    std::size_t out_i = 0;
    for (int o = 0; o < oc; ++o)
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x, ++out_i) {
                std::int32_t acc_i32 = layer.bias[static_cast<std::size_t>(o)];
                Accumulator acc(acc_i32);
                for (int c = 0; c < ic; ++c)
                    for (int dy = 0; dy < kh; ++dy)
                        for (int dx = 0; dx < kw; ++dx) {
                            const int sy = y * layer.stride + dy - layer.pad;
                            const int sx = x * layer.stride + dx - layer.pad;
                            if (sy < 0 || sy >= in.geom.height || sx < 0 || sx >= in.geom.width)
                                continue;
                            const std::size_t wi =
                                ((static_cast<std::size_t>(o) * static_cast<std::size_t>(ic) +
                                  static_cast<std::size_t>(c)) * static_cast<std::size_t>(kh) +
                                 static_cast<std::size_t>(dy)) * static_cast<std::size_t>(kw) +
                                static_cast<std::size_t>(dx);
                            const std::size_t ai = in_at(c, sy, sx);
                            if (approx) {
                                const auto r = pe_mac(acc_i32, approx->w->scalars[wi],
                                                      approx->w->selections[wi],
                                                      approx->a->scalars[ai],
                                                      approx->a->selections[ai]);
                                acc_i32 = r.acc;
                                if (r.saturated && stats)
                                    ++stats->saturated;
                            } else {
                                acc.mac_exact(layer.weights.values[wi], in.values[ai]);
                            }
                            if (stats)
                                ++stats->macs;
                        }
                out[out_i] = approx ? acc_i32 : acc.finish(stats);
            }
    return out;
}

std::vector<float> run_forward(const QuantModel& model, const QuantTensor& input, bool approximate,
                               ForwardStats* stats, LayerTaps* taps) {
    if (input.size() != static_cast<std::size_t>(model.input.elements()))
        raise(Errc::shape_error, "input size does not match model input geometry");
    if (model.layers.empty() || !model.layers.back().is_mac())
        raise(Errc::shape_error, "model must end with a MAC layer");
    IntTensor act{input.values, model.input};
    double act_scale = input.scale;

    const int last_mac = static_cast<int>(model.layers.size()) - 1;

    std::vector<float> logits;
    for (int li = 0; li < static_cast<int>(model.layers.size()); ++li) {
        const QuantLayer& layer = model.layers[static_cast<std::size_t>(li)];
        switch (layer.kind) {
        case LayerKind::Dense:
        case LayerKind::Conv2d: {
            if (taps)
                taps->inputs.push_back(QuantTensor{
                    {static_cast<std::uint32_t>(act.values.size())}, act.values, act_scale});

            const AxbxpConfig* cfg = nullptr;
            if (approximate && layer.config) {
                validate_engine_config(*layer.config);
                cfg = &*layer.config;
            }
            BlockedOperand wop, aop;
            MacContext ctx;
            const MacContext* ctx_ptr = nullptr;
            if (cfg) {
                const AxbxpTensor wt = AxbxpTensor::convert(
                    layer.weights.values, {static_cast<std::uint32_t>(layer.weights.values.size())},
                    cfg->k, cfg->kept_w, cfg->mode, layer.weights.scale);
                const AxbxpTensor at = AxbxpTensor::convert(
                    act.values, {static_cast<std::uint32_t>(act.values.size())}, cfg->k, cfg->kept_a,
                    cfg->mode, act_scale);
                wop = BlockedOperand::from_axbxp(wt);
                aop = BlockedOperand::from_axbxp(at);
                ctx = MacContext{&wop, &aop, stats};
                ctx_ptr = &ctx;
            }

            Geometry out_geom;
            std::vector<std::int32_t> acc;
            if (layer.kind == LayerKind::Dense) {
                acc = dense_int32(layer, act, ctx_ptr, stats);
                out_geom = Geometry{static_cast<int>(layer.weights.shape[0]), 1, 1};
            } else {
                acc = conv_int32(layer, act, out_geom, ctx_ptr, stats);
            }

            const double acc_scale = layer.weights.scale * act_scale;
            if (li == last_mac) {
                logits.reserve(acc.size());
                for (std::int32_t v : acc)
                    logits.push_back(static_cast<float>(v * acc_scale));
            } else {
                if (layer.out_scale <= 0.0)
                    raise(Errc::config_error, "interior MAC layer is missing its output scale");
                act.values.resize(acc.size());
                for (std::size_t i = 0; i < acc.size(); ++i)
                    act.values[i] = saturate_i8(
                        round_half_even(static_cast<double>(acc[i]) * acc_scale / layer.out_scale));
                act_scale = layer.out_scale;
            }
            act.geom = out_geom;
            break;
        }
        case LayerKind::Relu:
            for (auto& v : act.values)
                v = std::max<std::int8_t>(v, 0);
            break;
        case LayerKind::MaxPool2d: {
            const int p = layer.pool;
            const int oh = act.geom.height / p, ow = act.geom.width / p;
            if (oh == 0 || ow == 0)
                raise(Errc::shape_error, "pool window larger than feature map");
            std::vector<std::int8_t> pooled(static_cast<std::size_t>(act.geom.channels * oh * ow));
            std::size_t oi = 0;
            for (int c = 0; c < act.geom.channels; ++c)
                for (int y = 0; y < oh; ++y)
                    for (int x = 0; x < ow; ++x, ++oi) {
                        std::int8_t best = std::numeric_limits<std::int8_t>::min();
                        for (int dy = 0; dy < p; ++dy)
                            for (int dx = 0; dx < p; ++dx) {
                                const std::size_t idx =
                                    (static_cast<std::size_t>(c) * static_cast<std::size_t>(act.geom.height) +
                                     static_cast<std::size_t>(y * p + dy)) *
                                        static_cast<std::size_t>(act.geom.width) +
                                    static_cast<std::size_t>(x * p + dx);
                                best = std::max(best, act.values[idx]);
                            }
                        pooled[oi] = best;
                    }
            act.values = std::move(pooled);
            act.geom = Geometry{act.geom.channels, oh, ow};
            break;
        }
        case LayerKind::Flatten:
            act.geom = Geometry{act.geom.elements(), 1, 1};
            break;
        }
    }
    if (logits.empty())
        raise(Errc::shape_error, "model has no MAC layers");
    if (static_cast<int>(logits.size()) != model.classes)
        raise(Errc::shape_error, "classifier width does not match class count");
    return logits;
}

} // namespace

std::vector<float> forward_exact(const QuantModel& model, const QuantTensor& input,
                                 ForwardStats* stats, LayerTaps* taps) {
    return run_forward(model, input, false, stats, taps);
}

std::vector<float> forward_axbxp(const QuantModel& model, const QuantTensor& input,
                                 ForwardStats* stats) {
    return run_forward(model, input, true, stats, nullptr);
}

QuantTensor quantize_input(const QuantModel& model, std::span<const float> pixels) {
    return quantize_with_scale(pixels, {static_cast<std::uint32_t>(pixels.size())},
                               model.input_scale);
}

int predict(const QuantModel& model, std::span<const float> pixels, bool approximate) {
    const QuantTensor in = quantize_input(model, pixels);
    const std::vector<float> logits =
        approximate ? forward_axbxp(model, in) : forward_exact(model, in);
    int best = 0;
    for (int i = 1; i < static_cast<int>(logits.size()); ++i)
        if (logits[static_cast<std::size_t>(i)] > logits[static_cast<std::size_t>(best)])
            best = i;
    return best;
}

int thread_budget() {
    int budget = static_cast<int>(std::thread::hardware_concurrency());
    if (budget < 1)
        budget = 1;
    if (const char* env = std::getenv("AXBXP_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1)
            budget = std::min(budget, cap);
    }
    return budget;
}

double evaluate_accuracy(const QuantModel& model, const Dataset& data,
                         std::span<const int> indices, bool approximate) {
    if (indices.empty())
        return 0.0;
    const int workers = std::min<int>(thread_budget(), static_cast<int>(indices.size()));
    std::vector<std::int64_t> correct(static_cast<std::size_t>(workers), 0);
    auto run = [&](int worker) {
        for (std::size_t s = static_cast<std::size_t>(worker); s < indices.size();
             s += static_cast<std::size_t>(workers))
            if (predict(model, data.sample(indices[s]), approximate) ==
                data.labels[static_cast<std::size_t>(indices[s])])
                ++correct[static_cast<std::size_t>(worker)];
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t)
            pool.emplace_back(run, t);
        for (auto& t : pool)
            t.join();
    }
    std::int64_t total = 0;
    for (std::int64_t c : correct)
        total += c;
    return 100.0 * static_cast<double>(total) / static_cast<double>(indices.size());
}

} // namespace axbxp
