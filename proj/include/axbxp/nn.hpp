// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "axbxp/config.hpp"
#include "axbxp/dataset.hpp"
#include "axbxp/tensor.hpp"

namespace axbxp {

// int8 sign-magnitude value range [-127,127]; value ~= integer * scale
struct QuantTensor {
    std::vector<std::uint32_t> shape;
    std::vector<std::int8_t> values;
    double scale = 1.0;

    std::size_t size() const { return values.size(); }
};

// symmetric per-tensor quantization: scale = max|x|/127 (1 when all zero),
// integers round-to-nearest-even and clamp to [-127,127]
QuantTensor quantize(std::span<const float> x, std::vector<std::uint32_t> shape);
QuantTensor quantize(std::span<const double> x, std::vector<std::uint32_t> shape);
QuantTensor quantize_with_scale(std::span<const float> x, std::vector<std::uint32_t> shape, double scale);
QuantTensor quantize_with_scale(std::span<const double> x, std::vector<std::uint32_t> shape, double scale);
std::vector<float> dequantize(const QuantTensor& t);

std::int32_t round_half_even(double x);

enum class LayerKind { Dense, Conv2d, Relu, MaxPool2d, Flatten };

const char* layer_kind_name(LayerKind kind);
LayerKind parse_layer_kind(const std::string& name);

// Activation geometry between layers.
struct Geometry {
    int channels = 1, height = 1, width = 1;
    int elements() const { return channels * height * width; }
};

struct QuantLayer {
    LayerKind kind = LayerKind::Dense;
    QuantTensor weights;            // Dense: [out,in]; Conv2d: [oc,ic,kh,kw]
    std::vector<std::int32_t> bias; // scaled by weights.scale * in_scale
    double in_scale = 1.0;          // activation scale entering a MAC layer
    double out_scale = 0.0;         // requantization scale; 0 on the classifier head
    std::optional<AxbxpConfig> config;
    int stride = 1, pad = 0, pool = 2;

    bool is_mac() const { return kind == LayerKind::Dense || kind == LayerKind::Conv2d; }
};

struct QuantModel {
    std::vector<QuantLayer> layers;
    Geometry input;
    int classes = 10;
    double input_scale = 1.0;

    // indices of Dense/Conv2d layers, in execution order
    std::vector<int> mac_layers() const;
};

struct ForwardStats {
    std::uint64_t macs = 0;
    std::uint64_t saturated = 0;
};

// Per-MAC-layer input tensors, captured for histogram/error analysis.
struct LayerTaps {
    std::vector<QuantTensor> inputs;
};

// Reference integer path: plain 8x8->32-bit MACs per layer.
std::vector<float> forward_exact(const QuantModel& model, const QuantTensor& input,
                                 ForwardStats* stats = nullptr, LayerTaps* taps = nullptr);

// Approximate path: layers with a config convert weights with (K, kept_w)
// and activations with (K, kept_a) under the config's mode, then accumulate
// through pe_mac. Layers without a config run exact.
std::vector<float> forward_axbxp(const QuantModel& model, const QuantTensor& input,
                                 ForwardStats* stats = nullptr);

QuantTensor quantize_input(const QuantModel& model, std::span<const float> pixels);

int predict(const QuantModel& model, std::span<const float> pixels, bool approximate);

// Worker count for internal parallel loops: hardware concurrency, capped by
// the AXBXP_THREADS environment variable when set.
int thread_budget();

// Percent correct over the given sample indices. Samples are evaluated in
// parallel; the result does not depend on the worker count.
double evaluate_accuracy(const QuantModel& model, const Dataset& data,
                         std::span<const int> indices, bool approximate);

} // namespace axbxp
