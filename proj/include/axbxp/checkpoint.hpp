// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "axbxp/train.hpp"

namespace axbxp {

// A checkpoint is a directory: manifest.json describing layer kinds,
// shapes, scales and configs, plus one payload file per weight tensor
// (raw int8 for the quantized weights, raw little-endian float32 for the
// trainer's master weights). AXBP files are accepted for int8 payloads.
struct Checkpoint {
    QuantModel model;
    FloatModel float_model;
};

void save_checkpoint(const std::string& dir, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& dir);

} // namespace axbxp
