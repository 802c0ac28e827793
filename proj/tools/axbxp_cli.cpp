// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end for the axbxp shared library. Everything here goes
// through the C API in axbxp.h; exit codes are 0 (ok), 2 (best-effort
// search result) and 1 (error).
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "axbxp.h"

namespace {

int fail(const std::string& context) {
    std::cerr << "error: " << context;
    const char* detail = axbxp_last_error();
    if (detail && *detail)
        std::cerr << ": " << detail;
    std::cerr << "\n";
    return 1;
}

bool write_output(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n')
            std::cout << '\n';
        return true;
    }
    std::ofstream out(out_path);
    if (!out) {
        std::cerr << "error: cannot write '" << out_path << "'\n";
        return false;
    }
    out << text;
    return out.good();
}

int parse_mode_flag(const std::string& mode, int& out) {
    if (mode == "static") {
        out = AXBXP_MODE_STATIC;
        return 0;
    }
    if (mode == "dynamic") {
        out = AXBXP_MODE_DYNAMIC;
        return 0;
    }
    std::cerr << "error: --mode must be 'static' or 'dynamic'\n";
    return 1;
}

std::string config_str(const axbxp_config& c) {
    std::ostringstream s;
    s << '(' << c.k << ',' << c.kept_w << ',' << c.kept_a << ')';
    return s.str();
}

// --- enumerate ----------------------------------------------------------

int cmd_enumerate(int k, bool counts, const std::string& format, const std::string& out_path) {
    std::vector<axbxp_config> configs(32);
    size_t count = 0;
    if (axbxp_pruned_space(k, AXBXP_MODE_DYNAMIC, configs.data(), configs.size(), &count))
        return fail("enumerate");
    configs.resize(count);

    std::ostringstream text;
    if (format == "csv") {
        text << "k,kept_w,kept_a,l\n";
        for (const auto& c : configs)
            text << c.k << ',' << c.kept_w << ',' << c.kept_a << ',' << c.kept_w * c.kept_a << '\n';
        if (counts) {
            uint64_t constrained = 0, eq5 = 0;
            char* unconstrained = nullptr;
            if (axbxp_size_constrained(&constrained) || axbxp_size_pruned_eq5(&eq5) ||
                axbxp_size_unconstrained(8, &unconstrained))
                return fail("counts");
            text << "count,constrained,," << constrained << '\n';
            text << "count,pruned_eq5,," << eq5 << '\n';
            text << "count,unconstrained_bw8,," << unconstrained << '\n';
            text << "count,pruned_table,," << configs.size() << '\n';
            axbxp_string_free(unconstrained);
        }
    } else {
        text << "{\n  \"configs\": [";
        for (size_t i = 0; i < configs.size(); ++i) {
            const auto& c = configs[i];
            text << (i ? "," : "") << "\n    {\"k\": " << c.k << ", \"kept_w\": " << c.kept_w
                 << ", \"kept_a\": " << c.kept_a << ", \"l\": " << c.kept_w * c.kept_a
                 << ", \"tuple\": \"" << config_str(c) << "\"}";
        }
        text << "\n  ]";
        if (counts) {
            uint64_t constrained = 0, eq5 = 0;
            char* unconstrained = nullptr;
            if (axbxp_size_constrained(&constrained) || axbxp_size_pruned_eq5(&eq5) ||
                axbxp_size_unconstrained(8, &unconstrained))
                return fail("counts");
            text << ",\n  \"counts\": {\"constrained\": " << constrained
                 << ", \"pruned_eq5\": " << eq5 << ", \"unconstrained_bw8\": \"" << unconstrained
                 << "\", \"pruned_table\": " << configs.size() << "}";
            axbxp_string_free(unconstrained);
        }
        text << "\n}\n";
    }
    return write_output(text.str(), out_path) ? 0 : 1;
}

// --- convert --------------------------------------------------------------

int read_int8_csv(const std::string& path, std::vector<int8_t>& values) {
    std::ifstream in(path);
    if (!in) {
        std::cerr << "error: cannot open '" << path << "'\n";
        return 1;
    }
    std::string token;
    while (in) {
        const int ch = in.peek();
        if (ch == EOF)
            break;
        if (ch == '#') {
            std::getline(in, token);
            continue;
        }
        if (ch == ',' || ch == '\n' || ch == '\r' || ch == ' ' || ch == '\t') {
            in.get();
            continue;
        }
        int v = 0;
        if (!(in >> v)) {
            std::cerr << "error: '" << path << "' is not a list of integers\n";
            return 1;
        }
        if (v < -127 || v > 127) {
            std::cerr << "error: value " << v << " outside [-127,127]\n";
            return 1;
        }
        values.push_back(static_cast<int8_t>(v));
    }
    if (values.empty()) {
        std::cerr << "error: '" << path << "' holds no values\n";
        return 1;
    }
    return 0;
}

int cmd_convert(const std::string& input, int k, int kept, const std::string& mode_name,
                double scale, const std::string& out_path) {
    int mode = 0;
    if (parse_mode_flag(mode_name, mode))
        return 1;
    std::vector<int8_t> values;
    if (read_int8_csv(input, values))
        return 1;

    const uint32_t dims[1] = {static_cast<uint32_t>(values.size())};
    axbxp_tensor* tensor = nullptr;
    if (axbxp_tensor_convert(values.data(), dims, 1, k, kept, mode, scale, &tensor))
        return fail("convert");
    if (axbxp_tensor_save(tensor, out_path.c_str())) {
        axbxp_tensor_free(tensor);
        return fail("save");
    }

    uint64_t payload = 0, header = 0;
    int element_bits = 0, di_bits = 0;
    axbxp_tensor_footprint(tensor, &payload, &header, &element_bits);
    axbxp_data_index_bits(k, kept, mode, &di_bits);
    const uint64_t fxp8_bits = static_cast<uint64_t>(values.size()) * 8;
    std::cout << "{\n"
              << "  \"elements\": " << values.size() << ",\n"
              << "  \"per_element_bits\": " << element_bits << ",\n"
              << "  \"data_index_bits\": " << di_bits << ",\n"
              << "  \"payload_bits\": " << payload << ",\n"
              << "  \"header_bits\": " << header << ",\n"
              << "  \"fxp8_bits\": " << fxp8_bits << ",\n"
              << "  \"payload_saving\": " << (1.0 - static_cast<double>(payload) /
                                                        static_cast<double>(fxp8_bits))
              << ",\n  \"file\": \"" << out_path << "\"\n}\n";
    axbxp_tensor_free(tensor);
    return 0;
}

// --- train / eval -----------------------------------------------------------

int cmd_train(const std::string& data, int epochs, unsigned seed, const std::string& out_dir) {
    axbxp_model* model = nullptr;
    if (axbxp_train(data.c_str(), epochs, seed, &model))
        return fail("train");
    double train_acc = 0.0, test_acc = 0.0;
    if (axbxp_model_evaluate(model, data.c_str(), 1, 0, 0, &train_acc) ||
        axbxp_model_evaluate(model, data.c_str(), 0, 0, 0, &test_acc)) {
        axbxp_model_free(model);
        return fail("evaluate");
    }
    if (axbxp_model_save(model, out_dir.c_str())) {
        axbxp_model_free(model);
        return fail("save checkpoint");
    }
    std::cout << "{\"checkpoint\": \"" << out_dir << "\", \"train_accuracy\": " << train_acc
              << ", \"test_accuracy\": " << test_acc << "}\n";
    axbxp_model_free(model);
    return 0;
}

int cmd_eval(const std::string& model_dir, const std::string& data, const std::string& split,
             int subset, bool approx) {
    axbxp_model* model = nullptr;
    if (axbxp_model_load(model_dir.c_str(), &model))
        return fail("load checkpoint");
    const int split_id = split == "train" ? 1 : (split == "all" ? 2 : 0);
    double acc = 0.0;
    if (axbxp_model_evaluate(model, data.c_str(), split_id, subset, approx ? 1 : 0, &acc)) {
        axbxp_model_free(model);
        return fail("evaluate");
    }
    std::cout << "{\"split\": \"" << split << "\", \"approximate\": " << (approx ? "true" : "false")
              << ", \"accuracy\": " << acc << "}\n";
    axbxp_model_free(model);
    return 0;
}

// --- search -----------------------------------------------------------------

int cmd_search(const std::string& model_dir, const std::string& data, int k,
               const std::string& mode_name, double gamma, unsigned seed, int eval_subset,
               int max_epoch, bool approx_first_last, bool finetune_per_candidate,
               const std::string& out_path, const std::string& save_dir) {
    int mode = 0;
    if (parse_mode_flag(mode_name, mode))
        return 1;
    axbxp_model* model = nullptr;
    if (axbxp_model_load(model_dir.c_str(), &model))
        return fail("load checkpoint");

    axbxp_search_settings settings{};
    settings.gamma = gamma;
    settings.k_tgt = k;
    settings.mode = mode;
    settings.eval_subset = eval_subset;
    settings.max_epoch = max_epoch;
    settings.seed = seed;
    settings.pin_first_last = approx_first_last ? 0 : 1;
    settings.finetune_per_candidate = finetune_per_candidate ? 1 : 0;

    char* report = nullptr;
    int best_effort = 0;
    if (axbxp_search(model, data.c_str(), &settings, &report, &best_effort)) {
        axbxp_model_free(model);
        return fail("search");
    }
    const bool ok = write_output(report, out_path);
    axbxp_string_free(report);
    if (!save_dir.empty() && axbxp_model_save(model, save_dir.c_str())) {
        axbxp_model_free(model);
        return fail("save checkpoint");
    }
    axbxp_model_free(model);
    if (!ok)
        return 1;
    return best_effort ? 2 : 0;
}

// --- report -----------------------------------------------------------------

int cmd_report(const std::string& model_dir, const std::string& data, int k, int kept, int bins,
               int rows, int cols, const std::string& fabric, const std::string& format,
               const std::string& out_path) {
    axbxp_model* model = nullptr;
    if (axbxp_model_load(model_dir.c_str(), &model))
        return fail("load checkpoint");

    axbxp_report_options opt{};
    opt.k = k;
    opt.kept = kept;
    opt.bins = bins;
    opt.rows = rows;
    opt.cols = cols;
    opt.fabric = fabric == "fxp8"     ? AXBXP_FABRIC_FXP8
                 : fabric == "fusion" ? AXBXP_FABRIC_FUSION16
                                      : AXBXP_FABRIC_AXBXP_PE;
    opt.csv = format == "csv" ? 1 : 0;

    char* text = nullptr;
    if (axbxp_report(model, data.empty() ? nullptr : data.c_str(), &opt, &text)) {
        axbxp_model_free(model);
        return fail("report");
    }
    const bool ok = write_output(text, out_path);
    axbxp_string_free(text);
    axbxp_model_free(model);
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Approximate blocked fixed-point toolkit"};
    app.require_subcommand(1);

    // enumerate
    auto* enumerate = app.add_subcommand("enumerate", "Print the pruned design space");
    int en_k = 0;
    bool en_counts = false;
    std::string en_format = "json", en_out;
    enumerate->add_option("--k", en_k, "Restrict to one block width (2..4)");
    enumerate->add_flag("--counts", en_counts, "Include design-space size counts");
    enumerate->add_option("--format", en_format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    enumerate->add_option("--out", en_out, "Write to file instead of stdout");

    // convert
    auto* convert = app.add_subcommand("convert", "Convert an int8 tensor to an AXBP file");
    std::string cv_input, cv_mode = "dynamic", cv_out = "tensor.axbp";
    int cv_k = 2, cv_nt = 2;
    double cv_scale = 1.0;
    convert->add_option("--input", cv_input, "CSV of integers in [-127,127]")->required();
    convert->add_option("--k", cv_k, "Block width (2..4)");
    convert->add_option("--nt", cv_nt, "Blocks kept per element");
    convert->add_option("--mode", cv_mode, "static or dynamic");
    convert->add_option("--scale", cv_scale, "Dequantization scale");
    convert->add_option("--out", cv_out, "Output AXBP path");

    // train
    auto* train = app.add_subcommand("train", "Train the bundled-task model");
    std::string tr_data = "data/digits_8x8.csv", tr_out = "checkpoint";
    int tr_epochs = 30;
    unsigned tr_seed = 1;
    train->add_option("--data", tr_data, "Dataset CSV");
    train->add_option("--epochs", tr_epochs, "Training epochs");
    train->add_option("--seed", tr_seed, "RNG seed");
    train->add_option("--out", tr_out, "Checkpoint directory")->required();

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
    std::string ev_model, ev_data = "data/digits_8x8.csv", ev_split = "test";
    int ev_subset = 0;
    bool ev_approx = false;
    eval->add_option("--model", ev_model, "Checkpoint directory")->required();
    eval->add_option("--data", ev_data, "Dataset CSV");
    eval->add_option("--split", ev_split, "test, train or all")
        ->check(CLI::IsMember({"test", "train", "all"}));
    eval->add_option("--eval-subset", ev_subset, "Samples to evaluate (0 = all)");
    eval->add_flag("--approx", ev_approx, "Run the approximate path");

    // search
    auto* search = app.add_subcommand("search", "Greedy per-layer configuration search");
    std::string se_model, se_data = "data/digits_8x8.csv", se_mode = "dynamic", se_out, se_save;
    int se_k = 2, se_subset = 0, se_max_epoch = 0;
    unsigned se_seed = 1;
    double se_gamma = 1.0;
    bool se_approx_fl = false, se_ft_candidate = false;
    search->add_option("--model", se_model, "Checkpoint directory")->required();
    search->add_option("--data", se_data, "Dataset CSV");
    search->add_option("--k", se_k, "Target block width (2..4)");
    search->add_option("--mode", se_mode, "static or dynamic");
    search->add_option("--gamma", se_gamma, "Accepted accuracy drop (points)");
    search->add_option("--seed", se_seed, "RNG seed");
    search->add_option("--eval-subset", se_subset, "Evaluation samples (0 = full test split)");
    search->add_option("--max-epoch", se_max_epoch, "Fine-tuning epoch cap");
    search->add_flag("--approx-first-last", se_approx_fl,
                     "Also approximate the first and last MAC layers");
    search->add_flag("--finetune-per-candidate", se_ft_candidate,
                     "Run one recovery epoch inside every candidate trial");
    search->add_option("--out", se_out, "Report path (stdout otherwise)");
    search->add_option("--save", se_save, "Write the searched model to this checkpoint dir");

    // report
    auto* report = app.add_subcommand("report", "Histogram, error and cost report");
    std::string rp_model, rp_data, rp_fabric = "axbxp", rp_format = "json", rp_out;
    int rp_k = 2, rp_nt = 1, rp_bins = 16, rp_rows = 32, rp_cols = 32;
    report->add_option("--model", rp_model, "Checkpoint directory")->required();
    report->add_option("--data", rp_data, "Dataset CSV (enables activation analysis)");
    report->add_option("--k", rp_k, "Analysis block width for exact layers");
    report->add_option("--nt", rp_nt, "Analysis kept-block count for exact layers");
    report->add_option("--bins", rp_bins, "Histogram bins");
    report->add_option("--rows", rp_rows, "Systolic array rows");
    report->add_option("--cols", rp_cols, "Systolic array cols");
    report->add_option("--fabric", rp_fabric, "axbxp, fxp8 or fusion")
        ->check(CLI::IsMember({"axbxp", "fxp8", "fusion"}));
    report->add_option("--format", rp_format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    report->add_option("--out", rp_out, "Write to file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    if (enumerate->parsed())
        return cmd_enumerate(en_k, en_counts, en_format, en_out);
    if (convert->parsed())
        return cmd_convert(cv_input, cv_k, cv_nt, cv_mode, cv_scale, cv_out);
    if (train->parsed())
        return cmd_train(tr_data, tr_epochs, tr_seed, tr_out);
    if (eval->parsed())
        return cmd_eval(ev_model, ev_data, ev_split, ev_subset, ev_approx);
    if (search->parsed())
        return cmd_search(se_model, se_data, se_k, se_mode, se_gamma, se_seed, se_subset,
                          se_max_epoch, se_approx_fl, se_ft_candidate, se_out, se_save);
    if (report->parsed())
        return cmd_report(rp_model, rp_data, rp_k, rp_nt, rp_bins, rp_rows, rp_cols, rp_fabric,
                          rp_format, rp_out);
    return 1;
}
