// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "axbxp/blocked.hpp"

namespace axbxp {

// Block-selection heuristic: Static shares one kept-block range across a
// tensor, Dynamic anchors the range per scalar element.
enum class Mode { Static = 0, Dynamic = 1 };

const char* mode_name(Mode m);
Mode parse_mode(const std::string& name); // "static" | "dynamic"

// An approximation configuration (K, kept_w, kept_a): block width plus the
// number of blocks retained for the weight and activation operands. The
// number of partial products per MAC is l() = kept_w * kept_a.
struct AxbxpConfig {
    int k = 2;
    int kept_w = 4; // blocks retained for weights
    int kept_a = 4; // blocks retained for activations
    Mode mode = Mode::Dynamic;

    int n() const { return block_count(k); }
    int l() const { return kept_w * kept_a; }

    // the (K, kept_w, kept_a) tuple as "(2,1,2)"
    std::string tuple_str() const;

    friend bool operator==(const AxbxpConfig& a, const AxbxpConfig& b) {
        return a.k == b.k && a.kept_w == b.kept_w && a.kept_a == b.kept_a && a.mode == b.mode;
    }
};

bool in_pruned_space(const AxbxpConfig& c);
// kept_w = kept_a = N: every partial product is evaluated
bool is_exact_blocked(const AxbxpConfig& c);
// throws config_error when the tuple is not in the pruned design space
void validate_config(const AxbxpConfig& c);
// as above, but additionally admits the exact-blocked tuple (N, N)
void validate_engine_config(const AxbxpConfig& c);

} // namespace axbxp
