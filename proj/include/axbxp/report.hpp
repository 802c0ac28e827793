// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "axbxp/checkpoint.hpp"
#include "axbxp/perf.hpp"
#include "axbxp/search.hpp"

namespace axbxp {

struct ReportOptions {
    int k = 2;     // analysis block width for layers without a config
    int kept = 1;  // analysis kept-block count for layers without a config
    int bins = 16; // histogram bins
    ArraySpec array;
    int activation_samples = 64; // test samples used to capture activations
};

// Per-layer block/value histograms and static-vs-dynamic reconstruction
// error for weights (and activations when a dataset is supplied), plus the
// analytical cost model rows.
std::string model_report_json(const QuantModel& model, const Dataset* data,
                              const ReportOptions& options);
std::string model_report_csv(const QuantModel& model, const Dataset* data,
                             const ReportOptions& options);

} // namespace axbxp
