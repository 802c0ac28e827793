// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "axbxp/dataset.hpp"
#include "axbxp/nn.hpp"

namespace axbxp {

struct FloatLayer {
    LayerKind kind = LayerKind::Dense;
    std::vector<std::uint32_t> wshape; // dense [out,in]; conv2d [oc,ic,kh,kw]
    std::vector<double> w, b;
    int stride = 1, pad = 0, pool = 2;

    bool is_mac() const { return kind == LayerKind::Dense || kind == LayerKind::Conv2d; }
};

struct FloatModel {
    std::vector<FloatLayer> layers;
    Geometry input;
    int classes = 10;

    std::vector<int> mac_layers() const;
};

// Glorot-uniform initialized dense stack: input -> hidden... -> classes with
// ReLU between MAC layers. Deterministic for a given seed.
FloatModel make_mlp(Geometry input, const std::vector<int>& hidden, int classes, unsigned seed);

std::vector<double> float_forward(const FloatModel& model, std::span<const float> x);

struct Gradients {
    std::vector<std::vector<double>> w, b; // parallel to model.layers

    static Gradients zeros_like(const FloatModel& model);
    void accumulate(const Gradients& other);
    void scale(double factor);
};

// Softmax cross-entropy loss for one sample; adds parameter gradients into
// grads when non-null.
double loss_and_grads(const FloatModel& model, std::span<const float> x, int label,
                      Gradients* grads);

struct TrainOptions {
    int epochs = 30;
    unsigned seed = 1;
    double lr = 0.1;
    double momentum = 0.9;
    int batch = 32;
};

struct TrainReport {
    std::vector<double> epoch_loss; // [0] is the pre-training loss
    double train_accuracy = 0.0;    // percent, on the training indices
};

TrainReport train(FloatModel& model, const Dataset& data, std::span<const int> indices,
                  const TrainOptions& opt);

// The bundled-task entry point: builds the default digits MLP (64-32-10)
// and trains it on the 80% train split.
FloatModel train_tiny(const Dataset& data, int epochs, unsigned seed, TrainReport* report = nullptr);

// Post-training quantization with activation-scale calibration over the
// given samples. Weights are symmetric per-tensor int8; activation scales
// are static per layer, measured at each MAC layer input.
QuantModel quantize_model(const FloatModel& model, const Dataset& data,
                          std::span<const int> calibration);

double float_accuracy(const FloatModel& model, const Dataset& data, std::span<const int> indices);

struct FinetuneOptions {
    int max_epochs = 0;
    double gamma = 1.0; // accepted accuracy drop, percentage points
    unsigned seed = 1;
    double lr = 0.01;
    double momentum = 0.9;
    int batch = 32;
};

struct FinetuneReport {
    int epochs_run = 0;
    double baseline_accuracy = 0.0; // exact-path accuracy before fine-tuning
    double final_accuracy = 0.0;    // approximate-path accuracy after
};

// Approximation-aware fine-tuning (straight-through gradients): the forward
// pass quantizes, block-truncates and reconstructs weights and activations
// of every MAC layer (plain int8 fake-quantization where configs[i] is
// empty), the backward pass treats those steps as identity. Stops as soon
// as the measured approximate accuracy is within gamma of baseline, or
// after max_epochs.
FinetuneReport finetune_axbxp(FloatModel& model,
                              const std::vector<std::optional<AxbxpConfig>>& configs,
                              const Dataset& data, std::span<const int> train_idx,
                              std::span<const int> eval_idx, const FinetuneOptions& opt);

} // namespace axbxp
