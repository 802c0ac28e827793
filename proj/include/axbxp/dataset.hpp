// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

namespace axbxp {

// The bundled desk-scale task: 8x8 grayscale digit images, 10 classes,
// pixels normalized to [0,1]. One CSV row per sample, 64 pixels then the
// label; lines starting with '#' are comments.
struct Dataset {
    std::vector<float> pixels; // count * dims, row-major
    std::vector<int> labels;
    int count = 0;
    int dims = 64;
    int classes = 10;

    std::span<const float> sample(int i) const {
        return std::span<const float>(pixels).subspan(
            static_cast<std::size_t>(i) * static_cast<std::size_t>(dims),
            static_cast<std::size_t>(dims));
    }
};

Dataset load_digits_csv(const std::string& path);

// Deterministic 80/20 split: every fifth sample is test.
std::vector<int> train_indices(const Dataset& d);
std::vector<int> test_indices(const Dataset& d);

} // namespace axbxp
