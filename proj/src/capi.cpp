// SPDX-License-Identifier: Apache-2.0
#include "axbxp.h"

#include <cstring>
#include <fstream>
#include <new>
#include <string>

#include "axbxp/checkpoint.hpp"
#include "axbxp/design_space.hpp"
#include "axbxp/report.hpp"
#include "axbxp/search.hpp"

using namespace axbxp;

struct axbxp_tensor {
    AxbxpTensor impl;
};

struct axbxp_model {
    Checkpoint impl;
};

namespace {

thread_local std::string g_last_error;

int fail(int status, const std::string& message) {
    g_last_error = message;
    return status;
}

// runs fn, translating exceptions into status codes
template <typename Fn>
int guarded(Fn&& fn) {
    try {
        fn();
        return AXBXP_OK;
    } catch (const Error& e) {
        return fail(static_cast<int>(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(AXBXP_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(AXBXP_ERR_INTERNAL, e.what());
    }
}

int require(bool ok, const char* what) {
    return ok ? AXBXP_OK : fail(AXBXP_ERR_INPUT, std::string("null argument: ") + what);
}

BxpScalar to_cpp(const axbxp_scalar& s) {
    BxpScalar out;
    std::memcpy(out.blocks.data(), s.blocks, 4);
    out.k = s.k;
    out.n = s.n;
    out.sign = s.sign;
    return out;
}

axbxp_scalar to_c(const BxpScalar& s) {
    axbxp_scalar out{};
    std::memcpy(out.blocks, s.blocks.data(), 4);
    out.k = s.k;
    out.n = s.n;
    out.sign = s.sign;
    return out;
}

Mode to_mode(int mode) {
    if (mode != AXBXP_MODE_STATIC && mode != AXBXP_MODE_DYNAMIC)
        raise(Errc::config_error, "mode must be 0 (static) or 1 (dynamic)");
    return static_cast<Mode>(mode);
}

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

std::vector<int> split_indices(const Dataset& data, int split, int subset) {
    std::vector<int> idx;
    if (split == 1) {
        idx = train_indices(data);
    } else if (split == 2) {
        idx.resize(static_cast<std::size_t>(data.count));
        for (int i = 0; i < data.count; ++i)
            idx[static_cast<std::size_t>(i)] = i;
    } else {
        idx = test_indices(data);
    }
    if (subset > 0 && subset < static_cast<int>(idx.size()))
        idx.resize(static_cast<std::size_t>(subset));
    return idx;
}

} // namespace

extern "C" {

const char* axbxp_version(void) {
    return "1.0.0";
}

const char* axbxp_status_name(int status) {
    if (status == AXBXP_ERR_INTERNAL)
        return "internal error";
    return errc_name(static_cast<Errc>(status));
}

const char* axbxp_last_error(void) {
    return g_last_error.c_str();
}

void axbxp_string_free(char* s) {
    delete[] s;
}

int axbxp_to_blocks(int value, int k, axbxp_scalar* out) {
    if (int rc = require(out, "out"))
        return rc;
    return guarded([&] { *out = to_c(to_blocks(value, k)); });
}

int axbxp_from_blocks(const axbxp_scalar* s, int* out) {
    if (int rc = require(s && out, "s/out"))
        return rc;
    return guarded([&] { *out = from_blocks(to_cpp(*s)); });
}

int axbxp_exact_mul(const axbxp_scalar* x, const axbxp_scalar* y, int32_t* out) {
    if (int rc = require(x && y && out, "x/y/out"))
        return rc;
    return guarded([&] { *out = exact_blocked_mul(to_cpp(*x), to_cpp(*y)); });
}

int axbxp_approx_mul(const axbxp_scalar* x, uint8_t sel_x, const axbxp_scalar* y, uint8_t sel_y,
                     int32_t* out) {
    if (int rc = require(x && y && out, "x/y/out"))
        return rc;
    return guarded([&] {
        *out = approx_blocked_mul(to_cpp(*x), BlockSelection(sel_x), to_cpp(*y),
                                  BlockSelection(sel_y));
    });
}

int axbxp_pe_mac(int32_t acc, const axbxp_scalar* w, uint8_t sel_w, const axbxp_scalar* a,
                 uint8_t sel_a, int32_t* acc_out, int* saturated) {
    if (int rc = require(w && a && acc_out, "w/a/acc_out"))
        return rc;
    return guarded([&] {
        const MacResult r =
            pe_mac(acc, to_cpp(*w), BlockSelection(sel_w), to_cpp(*a), BlockSelection(sel_a));
        *acc_out = r.acc;
        if (saturated)
            *saturated = r.saturated ? 1 : 0;
    });
}

int axbxp_pruned_space(int k, int mode, axbxp_config* out, size_t capacity, size_t* count) {
    if (int rc = require(count, "count"))
        return rc;
    return guarded([&] {
        const DesignSpace space =
            enumerate_pruned(k == 0 ? std::nullopt : std::optional<int>(k), to_mode(mode));
        *count = space.configs.size();
        if (out) {
            const std::size_t n = std::min(capacity, space.configs.size());
            for (std::size_t i = 0; i < n; ++i)
                out[i] = axbxp_config{space.configs[i].k, space.configs[i].kept_w,
                                      space.configs[i].kept_a,
                                      static_cast<int>(space.configs[i].mode)};
        }
    });
}

int axbxp_size_constrained(uint64_t* out) {
    if (int rc = require(out, "out"))
        return rc;
    return guarded([&] { *out = size_constrained(); });
}

int axbxp_size_pruned_eq5(uint64_t* out) {
    if (int rc = require(out, "out"))
        return rc;
    return guarded([&] { *out = size_pruned_eq5(); });
}

int axbxp_size_unconstrained(int bw, char** out) {
    if (int rc = require(out, "out"))
        return rc;
    return guarded([&] { *out = dup_string(size_unconstrained(bw)); });
}

int axbxp_data_index_bits(int k, int kept, int mode, int* out) {
    if (int rc = require(out, "out"))
        return rc;
    return guarded([&] { *out = data_index_bits(k, kept, to_mode(mode)); });
}

int axbxp_per_element_bits(int k, int kept, int mode, int* out) {
    if (int rc = require(out, "out"))
        return rc;
    return guarded([&] { *out = per_element_bits(k, kept, to_mode(mode)); });
}

int axbxp_tensor_convert(const int8_t* values, const uint32_t* dims, int rank, int k, int kept,
                         int mode, double scale, axbxp_tensor** out) {
    if (int rc = require(out && (rank == 0 || dims), "dims/out"))
        return rc;
    return guarded([&] {
        std::vector<std::uint32_t> shape(dims, dims + rank);
        std::uint64_t count = 1;
        for (std::uint32_t d : shape)
            count *= d;
        if (count > 0 && !values)
            raise(Errc::input_error, "null values");
        *out = new axbxp_tensor{AxbxpTensor::convert(
            std::span<const std::int8_t>(values, static_cast<std::size_t>(count)),
            std::move(shape), k, kept, to_mode(mode), scale)};
    });
}

int axbxp_tensor_load(const char* path, axbxp_tensor** out) {
    if (int rc = require(path && out, "path/out"))
        return rc;
    return guarded([&] {
        std::ifstream in(path, std::ios::binary | std::ios::ate);
        if (!in)
            raise(Errc::io_error, std::string("cannot read '") + path + "'");
        const std::streamsize size = in.tellg();
        in.seekg(0);
        std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
        in.read(reinterpret_cast<char*>(bytes.data()), size);
        if (!in)
            raise(Errc::io_error, std::string("short read from '") + path + "'");
        *out = new axbxp_tensor{AxbxpTensor::deserialize(bytes)};
    });
}

int axbxp_tensor_save(const axbxp_tensor* t, const char* path) {
    if (int rc = require(t && path, "tensor/path"))
        return rc;
    return guarded([&] {
        const std::vector<std::uint8_t> bytes = t->impl.serialize();
        std::ofstream out(path, std::ios::binary);
        if (!out)
            raise(Errc::io_error, std::string("cannot write '") + path + "'");
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        if (!out)
            raise(Errc::io_error, std::string("short write to '") + path + "'");
    });
}

int axbxp_tensor_info(const axbxp_tensor* t, int* k, int* n, int* kept, int* mode, double* scale,
                      uint64_t* element_count) {
    if (int rc = require(t, "tensor"))
        return rc;
    if (k)
        *k = t->impl.k();
    if (n)
        *n = t->impl.n();
    if (kept)
        *kept = t->impl.kept();
    if (mode)
        *mode = static_cast<int>(t->impl.mode());
    if (scale)
        *scale = t->impl.scale();
    if (element_count)
        *element_count = t->impl.size();
    return AXBXP_OK;
}

int axbxp_tensor_footprint(const axbxp_tensor* t, uint64_t* payload_bits, uint64_t* header_bits,
                           int* element_bits) {
    if (int rc = require(t, "tensor"))
        return rc;
    const FootprintBits f = t->impl.footprint();
    if (payload_bits)
        *payload_bits = f.payload_bits;
    if (header_bits)
        *header_bits = f.header_bits;
    if (element_bits)
        *element_bits = f.element_bits;
    return AXBXP_OK;
}

int axbxp_tensor_reconstruct(const axbxp_tensor* t, int8_t* out, size_t capacity) {
    if (int rc = require(t && out, "tensor/out"))
        return rc;
    return guarded([&] {
        const std::vector<std::int8_t> values = t->impl.reconstruct();
        if (capacity < values.size())
            raise(Errc::input_error, "reconstruct buffer too small");
        std::memcpy(out, values.data(), values.size());
    });
}

void axbxp_tensor_free(axbxp_tensor* t) {
    delete t;
}

int axbxp_train(const char* dataset_csv, int epochs, unsigned seed, axbxp_model** out) {
    if (int rc = require(dataset_csv && out, "dataset/out"))
        return rc;
    return guarded([&] {
        const Dataset data = load_digits_csv(dataset_csv);
        Checkpoint ckpt;
        ckpt.float_model = train_tiny(data, epochs, seed);
        ckpt.model = quantize_model(ckpt.float_model, data, train_indices(data));
        *out = new axbxp_model{std::move(ckpt)};
    });
}

int axbxp_model_load(const char* checkpoint_dir, axbxp_model** out) {
    if (int rc = require(checkpoint_dir && out, "dir/out"))
        return rc;
    return guarded([&] { *out = new axbxp_model{load_checkpoint(checkpoint_dir)}; });
}

int axbxp_model_save(const axbxp_model* m, const char* checkpoint_dir) {
    if (int rc = require(m && checkpoint_dir, "model/dir"))
        return rc;
    return guarded([&] { save_checkpoint(checkpoint_dir, m->impl); });
}

int axbxp_model_evaluate(const axbxp_model* m, const char* dataset_csv, int split, int subset,
                         int approximate, double* accuracy) {
    if (int rc = require(m && dataset_csv && accuracy, "model/dataset/accuracy"))
        return rc;
    return guarded([&] {
        const Dataset data = load_digits_csv(dataset_csv);
        const std::vector<int> idx = split_indices(data, split, subset);
        *accuracy = evaluate_accuracy(m->impl.model, data, idx, approximate != 0);
    });
}

int axbxp_model_mac_layer_count(const axbxp_model* m, int* out) {
    if (int rc = require(m && out, "model/out"))
        return rc;
    *out = static_cast<int>(m->impl.model.mac_layers().size());
    return AXBXP_OK;
}

int axbxp_model_set_config(axbxp_model* m, int mac_index, const axbxp_config* cfg) {
    if (int rc = require(m, "model"))
        return rc;
    return guarded([&] {
        const std::vector<int> macs = m->impl.model.mac_layers();
        if (mac_index < 0 || mac_index >= static_cast<int>(macs.size()))
            raise(Errc::index_error, "MAC layer index out of range");
        auto& layer = m->impl.model.layers[static_cast<std::size_t>(macs[static_cast<std::size_t>(mac_index)])];
        if (!cfg) {
            layer.config.reset();
            return;
        }
        const AxbxpConfig c{cfg->k, cfg->kept_w, cfg->kept_a, to_mode(cfg->mode)};
        validate_engine_config(c);
        layer.config = c;
    });
}

void axbxp_model_free(axbxp_model* m) {
    delete m;
}

int axbxp_search(axbxp_model* m, const char* dataset_csv, const axbxp_search_settings* settings,
                 char** report_json, int* best_effort) {
    if (int rc = require(m && dataset_csv && settings, "model/dataset/settings"))
        return rc;
    return guarded([&] {
        const Dataset data = load_digits_csv(dataset_csv);
        SearchSettings s;
        s.gamma = settings->gamma;
        s.k_tgt = settings->k_tgt;
        s.mode = to_mode(settings->mode);
        s.eval_subset = settings->eval_subset;
        s.max_epoch = settings->max_epoch;
        s.seed = settings->seed;
        s.pin_first_last = settings->pin_first_last != 0;
        s.finetune_per_candidate = settings->finetune_per_candidate != 0;
        SearchResult result = design_axbxp_dnn(m->impl.float_model, data, s);
        m->impl.model = std::move(result.model);
        m->impl.float_model = std::move(result.float_model);
        if (report_json)
            *report_json = dup_string(search_report_json(result.assignment, s));
        if (best_effort)
            *best_effort = result.assignment.best_effort ? 1 : 0;
    });
}

int axbxp_report(const axbxp_model* m, const char* dataset_csv,
                 const axbxp_report_options* options, char** out) {
    if (int rc = require(m && options && out, "model/options/out"))
        return rc;
    return guarded([&] {
        ReportOptions opt;
        if (options->k)
            opt.k = options->k;
        if (options->kept)
            opt.kept = options->kept;
        if (options->bins)
            opt.bins = options->bins;
        if (options->rows)
            opt.array.rows = options->rows;
        if (options->cols)
            opt.array.cols = options->cols;
        switch (options->fabric) {
        case AXBXP_FABRIC_FXP8: opt.array.fabric = Fabric::Fxp8; break;
        case AXBXP_FABRIC_FUSION16: opt.array.fabric = Fabric::Fusion16; break;
        default: opt.array.fabric = Fabric::AxbxpPe; break;
        }
        if (options->activation_samples)
            opt.activation_samples = options->activation_samples;
        Dataset data;
        const Dataset* data_ptr = nullptr;
        if (dataset_csv) {
            data = load_digits_csv(dataset_csv);
            data_ptr = &data;
        }
        const std::string text = options->csv ? model_report_csv(m->impl.model, data_ptr, opt)
                                              : model_report_json(m->impl.model, data_ptr, opt);
        *out = dup_string(text);
    });
}

} // extern "C"
