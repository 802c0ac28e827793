// SPDX-License-Identifier: Apache-2.0
#include "axbxp/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>

namespace axbxp {

std::vector<int> FloatModel::mac_layers() const {
    std::vector<int> idx;
    for (int i = 0; i < static_cast<int>(layers.size()); ++i)
        if (layers[static_cast<std::size_t>(i)].is_mac())
            idx.push_back(i);
    return idx;
}

namespace {

// portable helpers on top of mt19937 so results only depend on the seed
double uniform01(std::mt19937& rng) {
    return (rng() >> 8) * (1.0 / 16777216.0);
}

void fisher_yates(std::vector<int>& v, std::mt19937& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
        std::swap(v[i - 1], v[std::min(j, i - 1)]);
    }
}

struct Trace {
    std::vector<std::vector<double>> inputs; // per layer, as consumed (post fake-quant)
    std::vector<Geometry> in_geoms;
    std::vector<std::vector<int>> pool_src;  // per layer; flat argmax source index
    std::vector<std::vector<double>> eff_w;   // per layer; empty -> model weights
    std::vector<double> logits;
};

struct LayerFq {
    bool enabled = false;
    std::optional<AxbxpConfig> cfg;
    double act_scale = 1.0;
};

// quantize -> (optionally) block-truncate -> reconstruct -> dequantize
std::vector<double> fake_quant(std::span<const double> x, double scale,
                              const std::optional<AxbxpConfig>& cfg, bool weights_role) {
    QuantTensor q = quantize_with_scale(x, {static_cast<std::uint32_t>(x.size())}, scale);
    std::vector<std::int8_t> ints = q.values;
    if (cfg) {
        const int kept = weights_role ? cfg->kept_w : cfg->kept_a;
        const AxbxpTensor t = AxbxpTensor::convert(ints, q.shape, cfg->k, kept, cfg->mode, scale);
        ints = t.reconstruct();
    }
    std::vector<double> out(ints.size());
    for (std::size_t i = 0; i < ints.size(); ++i)
        out[i] = ints[i] * scale;
    return out;
}

double weight_scale(std::span<const double> w) {
    double max_abs = 0.0;
    for (double v : w)
        max_abs = std::max(max_abs, static_cast<double>(std::fabs(v)));
    return max_abs > 0.0 ? max_abs / 127.0 : 1.0;
}

void dense_fwd(const FloatLayer& layer, std::span<const double> w, std::span<const double> x,
               std::vector<double>& out) {
    const int out_n = static_cast<int>(layer.wshape[0]);
    const int in_n = static_cast<int>(layer.wshape[1]);
    if (static_cast<int>(x.size()) != in_n)
        raise(Errc::shape_error, "dense layer input size mismatch");
    out.assign(static_cast<std::size_t>(out_n), 0.0);
    for (int o = 0; o < out_n; ++o) {
        double acc = layer.b[static_cast<std::size_t>(o)];
        const std::size_t row = static_cast<std::size_t>(o) * static_cast<std::size_t>(in_n);
        for (int i = 0; i < in_n; ++i)
            acc += w[row + static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(o)] = acc;
    }
}

void dense_bwd(const FloatLayer& layer, std::span<const double> w, std::span<const double> x,
               std::span<const double> grad_out, std::vector<double>& grad_in,
               std::vector<double>& grad_w, std::vector<double>& grad_b) {
    const int out_n = static_cast<int>(layer.wshape[0]);
    const int in_n = static_cast<int>(layer.wshape[1]);
    grad_in.assign(static_cast<std::size_t>(in_n), 0.0);
    for (int o = 0; o < out_n; ++o) {
        const double g = grad_out[static_cast<std::size_t>(o)];
        grad_b[static_cast<std::size_t>(o)] += g;
        const std::size_t row = static_cast<std::size_t>(o) * static_cast<std::size_t>(in_n);
        for (int i = 0; i < in_n; ++i) {
            grad_w[row + static_cast<std::size_t>(i)] += g * x[static_cast<std::size_t>(i)];
            grad_in[static_cast<std::size_t>(i)] += g * w[row + static_cast<std::size_t>(i)];
        }
    }
}

Geometry conv_out_geom(const FloatLayer& layer, const Geometry& in) {
    const int kh = static_cast<int>(layer.wshape[2]);
    const int kw = static_cast<int>(layer.wshape[3]);
    const int oh = (in.height + 2 * layer.pad - kh) / layer.stride + 1;
    const int ow = (in.width + 2 * layer.pad - kw) / layer.stride + 1;
    if (oh <= 0 || ow <= 0)
        raise(Errc::shape_error, "conv output would be empty");
    return Geometry{static_cast<int>(layer.wshape[0]), oh, ow};
}

void conv_fwd(const FloatLayer& layer, std::span<const double> w, std::span<const double> x,
              const Geometry& in_geom, std::vector<double>& out, Geometry& out_geom) {
    const int oc = static_cast<int>(layer.wshape[0]), ic = static_cast<int>(layer.wshape[1]);
    const int kh = static_cast<int>(layer.wshape[2]), kw = static_cast<int>(layer.wshape[3]);
    if (ic != in_geom.channels)
        raise(Errc::shape_error, "conv layer channel mismatch");
    out_geom = conv_out_geom(layer, in_geom);
    out.assign(static_cast<std::size_t>(out_geom.elements()), 0.0);
    std::size_t oi = 0;
    for (int o = 0; o < oc; ++o)
        for (int y = 0; y < out_geom.height; ++y)
            for (int xx = 0; xx < out_geom.width; ++xx, ++oi) {
                double acc = layer.b[static_cast<std::size_t>(o)];
                for (int c = 0; c < ic; ++c)
                    for (int dy = 0; dy < kh; ++dy)
                        for (int dx = 0; dx < kw; ++dx) {
                            const int sy = y * layer.stride + dy - layer.pad;
                            const int sx = xx * layer.stride + dx - layer.pad;
                            if (sy < 0 || sy >= in_geom.height || sx < 0 || sx >= in_geom.width)
                                continue;
                            const std::size_t wi =
                                ((static_cast<std::size_t>(o) * static_cast<std::size_t>(ic) +
                                  static_cast<std::size_t>(c)) * static_cast<std::size_t>(kh) +
                                 static_cast<std::size_t>(dy)) * static_cast<std::size_t>(kw) +
                                static_cast<std::size_t>(dx);
                            const std::size_t xi =
                                (static_cast<std::size_t>(c) * static_cast<std::size_t>(in_geom.height) +
                                 static_cast<std::size_t>(sy)) * static_cast<std::size_t>(in_geom.width) +
                                static_cast<std::size_t>(sx);
                            acc += w[wi] * x[xi];
                        }
                out[oi] = acc;
            }
}

void conv_bwd(const FloatLayer& layer, std::span<const double> w, std::span<const double> x,
              const Geometry& in_geom, std::span<const double> grad_out,
              std::vector<double>& grad_in, std::vector<double>& grad_w, std::vector<double>& grad_b) {
    const int oc = static_cast<int>(layer.wshape[0]), ic = static_cast<int>(layer.wshape[1]);
    const int kh = static_cast<int>(layer.wshape[2]), kw = static_cast<int>(layer.wshape[3]);
    const Geometry out_geom = conv_out_geom(layer, in_geom);
    grad_in.assign(x.size(), 0.0);
    std::size_t oi = 0;
    for (int o = 0; o < oc; ++o)
        for (int y = 0; y < out_geom.height; ++y)
            for (int xx = 0; xx < out_geom.width; ++xx, ++oi) {
                const double g = grad_out[oi];
                grad_b[static_cast<std::size_t>(o)] += g;
                for (int c = 0; c < ic; ++c)
                    for (int dy = 0; dy < kh; ++dy)
                        for (int dx = 0; dx < kw; ++dx) {
                            const int sy = y * layer.stride + dy - layer.pad;
                            const int sx = xx * layer.stride + dx - layer.pad;
                            if (sy < 0 || sy >= in_geom.height || sx < 0 || sx >= in_geom.width)
                                continue;
                            const std::size_t wi =
                                ((static_cast<std::size_t>(o) * static_cast<std::size_t>(ic) +
                                  static_cast<std::size_t>(c)) * static_cast<std::size_t>(kh) +
                                 static_cast<std::size_t>(dy)) * static_cast<std::size_t>(kw) +
                                static_cast<std::size_t>(dx);
                            const std::size_t xi =
                                (static_cast<std::size_t>(c) * static_cast<std::size_t>(in_geom.height) +
                                 static_cast<std::size_t>(sy)) * static_cast<std::size_t>(in_geom.width) +
                                static_cast<std::size_t>(sx);
                            grad_w[wi] += g * x[xi];
                            grad_in[xi] += g * w[wi];
                        }
            }
}

// Runs the model, recording everything backward() needs. fq may be null.
void forward_trace(const FloatModel& model, std::span<const float> x, const std::vector<LayerFq>* fq,
                   Trace& tr) {
    if (static_cast<int>(x.size()) != model.input.elements())
        raise(Errc::shape_error, "input size does not match model input geometry");
    tr.inputs.assign(model.layers.size(), {});
    tr.in_geoms.assign(model.layers.size(), Geometry{});
    tr.pool_src.assign(model.layers.size(), {});
    tr.eff_w.assign(model.layers.size(), {});

    std::vector<double> act(x.begin(), x.end());
    Geometry geom = model.input;
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        const FloatLayer& layer = model.layers[li];
        if (layer.is_mac() && fq && (*fq)[li].enabled) {
            act = fake_quant(act, (*fq)[li].act_scale, (*fq)[li].cfg, false);
            tr.eff_w[li] = fake_quant(layer.w, weight_scale(layer.w), (*fq)[li].cfg, true);
        }
        tr.inputs[li] = act;
        tr.in_geoms[li] = geom;
        const std::span<const double> w =
            tr.eff_w[li].empty() ? std::span<const double>(layer.w) : std::span<const double>(tr.eff_w[li]);
        switch (layer.kind) {
        case LayerKind::Dense: {
            std::vector<double> out;
            dense_fwd(layer, w, act, out);
            act = std::move(out);
            geom = Geometry{static_cast<int>(layer.wshape[0]), 1, 1};
            break;
        }
        case LayerKind::Conv2d: {
            std::vector<double> out;
            Geometry og;
            conv_fwd(layer, w, act, geom, out, og);
            act = std::move(out);
            geom = og;
            break;
        }
        case LayerKind::Relu:
            for (double& v : act)
                v = std::max(v, 0.0);
            break;
        case LayerKind::MaxPool2d: {
            const int p = layer.pool;
            const int oh = geom.height / p, ow = geom.width / p;
            if (oh == 0 || ow == 0)
                raise(Errc::shape_error, "pool window larger than feature map");
            std::vector<double> pooled(static_cast<std::size_t>(geom.channels * oh * ow));
            std::vector<int> src(pooled.size());
            std::size_t oi = 0;
            for (int c = 0; c < geom.channels; ++c)
                for (int y = 0; y < oh; ++y)
                    for (int xx = 0; xx < ow; ++xx, ++oi) {
                        double best = -std::numeric_limits<double>::infinity();
                        int best_idx = -1;
                        for (int dy = 0; dy < p; ++dy)
                            for (int dx = 0; dx < p; ++dx) {
                                const std::size_t idx =
                                    (static_cast<std::size_t>(c) * static_cast<std::size_t>(geom.height) +
                                     static_cast<std::size_t>(y * p + dy)) *
                                        static_cast<std::size_t>(geom.width) +
                                    static_cast<std::size_t>(xx * p + dx);
                                if (act[idx] > best) {
                                    best = act[idx];
                                    best_idx = static_cast<int>(idx);
                                }
                            }
                        pooled[oi] = best;
                        src[oi] = best_idx;
                    }
            act = std::move(pooled);
            tr.pool_src[li] = std::move(src);
            geom = Geometry{geom.channels, oh, ow};
            break;
        }
        case LayerKind::Flatten:
            geom = Geometry{geom.elements(), 1, 1};
            break;
        }
    }
    if (static_cast<int>(act.size()) != model.classes)
        raise(Errc::shape_error, "classifier width does not match class count");
    tr.logits = std::move(act);
}

double softmax_loss(std::span<const double> logits, int label, std::vector<double>* dlogits) {
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (double z : logits)
        denom += std::exp(static_cast<double>(z - max_logit));
    const double log_denom = std::log(denom);
    const double loss = -(static_cast<double>(logits[static_cast<std::size_t>(label)] - max_logit) - log_denom);
    if (dlogits) {
        dlogits->resize(logits.size());
        for (std::size_t i = 0; i < logits.size(); ++i) {
            const double p = std::exp(static_cast<double>(logits[i] - max_logit)) / denom;
            (*dlogits)[i] = static_cast<double>(p - (static_cast<int>(i) == label ? 1.0 : 0.0));
        }
    }
    return loss;
}

// Backpropagates through the trace; straight-through where fake-quant ran.
void backward(const FloatModel& model, const Trace& tr, std::span<const double> dlogits,
              Gradients& grads) {
    std::vector<double> grad(dlogits.begin(), dlogits.end());
    for (int li = static_cast<int>(model.layers.size()) - 1; li >= 0; --li) {
        const FloatLayer& layer = model.layers[static_cast<std::size_t>(li)];
        const std::size_t ui = static_cast<std::size_t>(li);
        const std::span<const double> x = tr.inputs[ui];
        const std::span<const double> w =
            tr.eff_w[ui].empty() ? std::span<const double>(layer.w) : std::span<const double>(tr.eff_w[ui]);
        std::vector<double> grad_in;
        switch (layer.kind) {
        case LayerKind::Dense:
            dense_bwd(layer, w, x, grad, grad_in, grads.w[ui], grads.b[ui]);
            grad = std::move(grad_in);
            break;
        case LayerKind::Conv2d:
            conv_bwd(layer, w, x, tr.in_geoms[ui], grad, grad_in, grads.w[ui], grads.b[ui]);
            grad = std::move(grad_in);
            break;
        case LayerKind::Relu:
            for (std::size_t i = 0; i < grad.size(); ++i)
                if (x[i] <= 0.0)
                    grad[i] = 0.0;
            break;
        case LayerKind::MaxPool2d: {
            grad_in.assign(x.size(), 0.0);
            for (std::size_t oi = 0; oi < grad.size(); ++oi)
                grad_in[static_cast<std::size_t>(tr.pool_src[ui][oi])] += grad[oi];
            grad = std::move(grad_in);
            break;
        }
        case LayerKind::Flatten:
            break;
        }
    }
}

struct Sgd {
    std::vector<std::vector<double>> vw, vb;
    double lr, momentum;

    Sgd(const FloatModel& model, double lr_, double momentum_) : lr(lr_), momentum(momentum_) {
        for (const auto& layer : model.layers) {
            vw.emplace_back(layer.w.size(), 0.0);
            vb.emplace_back(layer.b.size(), 0.0);
        }
    }

    void step(FloatModel& model, const Gradients& grads) {
        for (std::size_t li = 0; li < model.layers.size(); ++li) {
            auto& layer = model.layers[li];
            for (std::size_t i = 0; i < layer.w.size(); ++i) {
                vw[li][i] = momentum * vw[li][i] + grads.w[li][i];
                layer.w[i] -= lr * vw[li][i];
            }
            for (std::size_t i = 0; i < layer.b.size(); ++i) {
                vb[li][i] = momentum * vb[li][i] + grads.b[li][i];
                layer.b[i] -= lr * vb[li][i];
            }
        }
    }
};

double mean_loss(const FloatModel& model, const Dataset& data, std::span<const int> indices,
                 const std::vector<LayerFq>* fq) {
    double total = 0.0;
    Trace tr;
    for (int i : indices) {
        forward_trace(model, data.sample(i), fq, tr);
        total += softmax_loss(tr.logits, data.labels[static_cast<std::size_t>(i)], nullptr);
    }
    return indices.empty() ? 0.0 : total / static_cast<double>(indices.size());
}

// one SGD epoch over a shuffled index order; fq may be null
void run_epoch(FloatModel& model, const Dataset& data, std::vector<int>& order, std::mt19937& rng,
               Sgd& sgd, int batch, const std::vector<LayerFq>* fq) {
    fisher_yates(order, rng);
    Trace tr;
    std::vector<double> dlogits;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(batch)) {
        const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(batch));
        Gradients grads = Gradients::zeros_like(model);
        for (std::size_t s = begin; s < end; ++s) {
            const int i = order[s];
            forward_trace(model, data.sample(i), fq, tr);
            softmax_loss(tr.logits, data.labels[static_cast<std::size_t>(i)], &dlogits);
            backward(model, tr, dlogits, grads);
        }
        grads.scale(1.0 / static_cast<double>(end - begin));
        sgd.step(model, grads);
    }
}

} // namespace

FloatModel make_mlp(Geometry input, const std::vector<int>& hidden, int classes, unsigned seed) {
    FloatModel model;
    model.input = input;
    model.classes = classes;
    std::mt19937 rng(seed);
    int in_n = input.elements();
    std::vector<int> widths = hidden;
    widths.push_back(classes);
    for (std::size_t h = 0; h < widths.size(); ++h) {
        const int out_n = widths[h];
        FloatLayer layer;
        layer.kind = LayerKind::Dense;
        layer.wshape = {static_cast<std::uint32_t>(out_n), static_cast<std::uint32_t>(in_n)};
        layer.w.resize(static_cast<std::size_t>(out_n) * static_cast<std::size_t>(in_n));
        layer.b.assign(static_cast<std::size_t>(out_n), 0.0);
        const double limit = std::sqrt(6.0 / (in_n + out_n));
        for (double& v : layer.w)
            v = (2.0 * uniform01(rng) - 1.0) * limit;
        model.layers.push_back(std::move(layer));
        if (h + 1 < widths.size())
            model.layers.push_back(FloatLayer{LayerKind::Relu, {}, {}, {}, 1, 0, 2});
        in_n = out_n;
    }
    return model;
}

std::vector<double> float_forward(const FloatModel& model, std::span<const float> x) {
    Trace tr;
    forward_trace(model, x, nullptr, tr);
    return tr.logits;
}

Gradients Gradients::zeros_like(const FloatModel& model) {
    Gradients g;
    for (const auto& layer : model.layers) {
        g.w.emplace_back(layer.w.size(), 0.0);
        g.b.emplace_back(layer.b.size(), 0.0);
    }
    return g;
}

void Gradients::accumulate(const Gradients& other) {
    for (std::size_t li = 0; li < w.size(); ++li) {
        for (std::size_t i = 0; i < w[li].size(); ++i)
            w[li][i] += other.w[li][i];
        for (std::size_t i = 0; i < b[li].size(); ++i)
            b[li][i] += other.b[li][i];
    }
}

void Gradients::scale(double factor) {
    for (auto& lw : w)
        for (double& v : lw)
            v *= factor;
    for (auto& lb : b)
        for (double& v : lb)
            v *= factor;
}

double loss_and_grads(const FloatModel& model, std::span<const float> x, int label,
                      Gradients* grads) {
    Trace tr;
    forward_trace(model, x, nullptr, tr);
    std::vector<double> dlogits;
    const double loss = softmax_loss(tr.logits, label, grads ? &dlogits : nullptr);
    if (grads)
        backward(model, tr, dlogits, *grads);
    return loss;
}

TrainReport train(FloatModel& model, const Dataset& data, std::span<const int> indices,
                  const TrainOptions& opt) {
    TrainReport report;
    std::mt19937 rng(opt.seed);
    std::vector<int> order(indices.begin(), indices.end());
    Sgd sgd(model, opt.lr, opt.momentum);
    report.epoch_loss.push_back(mean_loss(model, data, indices, nullptr));
    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        run_epoch(model, data, order, rng, sgd, opt.batch, nullptr);
        const double loss = mean_loss(model, data, indices, nullptr);
        if (!std::isfinite(loss))
            raise(Errc::train_error, "training diverged (non-finite loss)");
        report.epoch_loss.push_back(loss);
    }
    report.train_accuracy = float_accuracy(model, data, indices);
    return report;
}

FloatModel train_tiny(const Dataset& data, int epochs, unsigned seed, TrainReport* report) {
    FloatModel model = make_mlp(Geometry{1, 8, 8}, {32, 16}, data.classes, seed);
    TrainOptions opt;
    opt.epochs = epochs;
    opt.seed = seed;
    const std::vector<int> idx = train_indices(data);
    TrainReport r = train(model, data, idx, opt);
    if (report)
        *report = r;
    return model;
}

double float_accuracy(const FloatModel& model, const Dataset& data, std::span<const int> indices) {
    if (indices.empty())
        return 0.0f;
    int correct = 0;
    for (int i : indices) {
        const std::vector<double> logits = float_forward(model, data.sample(i));
        const int pred = static_cast<int>(
            std::max_element(logits.begin(), logits.end()) - logits.begin());
        if (pred == data.labels[static_cast<std::size_t>(i)])
            ++correct;
    }
    return 100.0 * static_cast<double>(correct) / static_cast<double>(indices.size());
}

QuantModel quantize_model(const FloatModel& model, const Dataset& data,
                          std::span<const int> calibration) {
    if (calibration.empty())
        raise(Errc::input_error, "calibration set is empty");
    const std::vector<int> macs = model.mac_layers();
    if (macs.empty() || !model.layers.back().is_mac())
        raise(Errc::shape_error, "model must end with a MAC layer");

    // per-MAC-layer input magnitude over the calibration batch
    std::vector<double> max_in(model.layers.size(), 0.0);
    Trace tr;
    for (int i : calibration) {
        forward_trace(model, data.sample(i), nullptr, tr);
        for (int li : macs)
            for (double v : tr.inputs[static_cast<std::size_t>(li)])
                max_in[static_cast<std::size_t>(li)] =
                    std::max(max_in[static_cast<std::size_t>(li)], static_cast<double>(std::fabs(v)));
    }
    auto scale_at = [&](int li) {
        return max_in[static_cast<std::size_t>(li)] > 0.0 ? max_in[static_cast<std::size_t>(li)] / 127.0
                                                          : 1.0;
    };

    QuantModel q;
    q.input = model.input;
    q.classes = model.classes;
    q.input_scale = scale_at(macs.front());
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        const FloatLayer& f = model.layers[li];
        QuantLayer layer;
        layer.kind = f.kind;
        layer.stride = f.stride;
        layer.pad = f.pad;
        layer.pool = f.pool;
        if (f.is_mac()) {
            layer.weights = quantize(f.w, f.wshape);
            layer.in_scale = scale_at(static_cast<int>(li));
            const auto next = std::find_if(macs.begin(), macs.end(),
                                           [&](int m) { return m > static_cast<int>(li); });
            layer.out_scale = next == macs.end() ? 0.0 : scale_at(*next);
            layer.bias.reserve(f.b.size());
            const double bias_scale = layer.weights.scale * layer.in_scale;
            for (double b : f.b)
                layer.bias.push_back(round_half_even(static_cast<double>(b) / bias_scale));
        }
        q.layers.push_back(std::move(layer));
    }
    return q;
}

FinetuneReport finetune_axbxp(FloatModel& model,
                              const std::vector<std::optional<AxbxpConfig>>& configs,
                              const Dataset& data, std::span<const int> train_idx,
                              std::span<const int> eval_idx, const FinetuneOptions& opt) {
    const std::vector<int> macs = model.mac_layers();
    if (configs.size() != macs.size())
        raise(Errc::config_error, "one config entry per MAC layer expected");
    for (const auto& c : configs)
        if (c)
            validate_engine_config(*c);

    // static activation scales, calibrated once up front
    std::vector<LayerFq> fq(model.layers.size());
    {
        const QuantModel q = quantize_model(model, data, train_idx);
        for (std::size_t m = 0; m < macs.size(); ++m) {
            auto& f = fq[static_cast<std::size_t>(macs[m])];
            f.enabled = true;
            f.cfg = configs[m];
            f.act_scale = q.layers[static_cast<std::size_t>(macs[m])].in_scale;
        }
    }

    auto measure = [&](bool approximate) {
        QuantModel q = quantize_model(model, data, train_idx);
        for (std::size_t m = 0; m < macs.size(); ++m)
            q.layers[static_cast<std::size_t>(macs[m])].config = configs[m];
        return evaluate_accuracy(q, data, eval_idx, approximate);
    };

    FinetuneReport report;
    report.baseline_accuracy = measure(false);
    double acc = measure(true);

    std::mt19937 rng(opt.seed);
    std::vector<int> order(train_idx.begin(), train_idx.end());
    Sgd sgd(model, opt.lr, opt.momentum);
    while (report.epochs_run < opt.max_epochs && report.baseline_accuracy - acc > opt.gamma) {
        run_epoch(model, data, order, rng, sgd, opt.batch, &fq);
        ++report.epochs_run;
        acc = measure(true);
        if (!std::isfinite(mean_loss(model, data, train_idx, &fq)))
            raise(Errc::train_error, "fine-tuning diverged (non-finite loss)");
    }
    report.final_accuracy = acc;
    return report;
}

} // namespace axbxp
