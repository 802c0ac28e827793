// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace axbxp {

enum class Errc {
    ok = 0,
    range_error = 1,    // operand magnitude outside the representable range
    config_error = 2,   // invalid or mismatched (K, N, kept-block) parameters
    index_error = 3,    // block index outside [0, N-1]
    shape_error = 4,    // tensor/model dimension mismatch
    input_error = 5,    // non-finite or otherwise unusable input data
    format_error = 6,   // malformed serialized stream or checkpoint
    io_error = 7,       // file could not be read or written
    train_error = 8,    // training diverged
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
    throw Error(code, message);
}

} // namespace axbxp
