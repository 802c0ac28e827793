// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: every criterion prints one PASS/FAIL line; the process
// exits nonzero if any criterion fails.
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "axbxp/checkpoint.hpp"
#include "axbxp/design_space.hpp"
#include "axbxp/perf.hpp"
#include "axbxp/search.hpp"

using namespace axbxp;

namespace {

int failures = 0;

void report(int criterion, const char* label, bool ok, const std::string& detail = "") {
    std::printf("%s criterion %d: %s%s%s\n", ok ? "PASS" : "FAIL", criterion, label,
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!ok)
        ++failures;
}

const Dataset& digits() {
    static const Dataset data = load_digits_csv(AXBXP_SOURCE_DIR "/data/digits_8x8.csv");
    return data;
}

// 1. exact_blocked_mul(x,y) = x*y for every K and every signed 8-bit pair
void criterion_1() {
    std::uint64_t checked = 0, wrong = 0;
    for (int k = 2; k <= 4; ++k) {
        std::array<BxpScalar, 255> table;
        for (int x = -127; x <= 127; ++x)
            table[static_cast<std::size_t>(x + 127)] = to_blocks(x, k);
        for (int x = -127; x <= 127; ++x)
            for (int y = -127; y <= 127; ++y) {
                const std::int32_t got = exact_blocked_mul(table[static_cast<std::size_t>(x + 127)],
                                                           table[static_cast<std::size_t>(y + 127)]);
                ++checked;
                if (got != x * y)
                    ++wrong;
            }
    }
    report(1, "exact-multiply oracle, exhaustive over all K", wrong == 0,
           std::to_string(checked) + " pairs, " + std::to_string(wrong) + " mismatches");
}

// 2. approx_blocked_mul equals the product of truncated reconstructions for
//    every pruned config, every 8-bit pair, every valid contiguous window
void criterion_2() {
    std::uint64_t checked = 0, wrong = 0;
    for (const AxbxpConfig& cfg : enumerate_pruned().configs) {
        const int n = cfg.n();
        std::array<BxpScalar, 255> table;
        for (int x = -127; x <= 127; ++x)
            table[static_cast<std::size_t>(x + 127)] = to_blocks(x, cfg.k);
        for (int start_w = cfg.kept_w - 1; start_w < n; ++start_w)
            for (int start_a = cfg.kept_a - 1; start_a < n; ++start_a) {
                const BlockSelection sel_w = BlockSelection::range(start_w, cfg.kept_w);
                const BlockSelection sel_a = BlockSelection::range(start_a, cfg.kept_a);
                for (int x = -127; x <= 127; ++x) {
                    const BxpScalar& w = table[static_cast<std::size_t>(x + 127)];
                    const int wt = from_blocks(truncate_blocks(w, sel_w));
                    for (int y = -127; y <= 127; ++y) {
                        const BxpScalar& a = table[static_cast<std::size_t>(y + 127)];
                        const int at = from_blocks(truncate_blocks(a, sel_a));
                        ++checked;
                        if (approx_blocked_mul(w, sel_w, a, sel_a) != wt * at)
                            ++wrong;
                    }
                }
            }
    }
    report(2, "truncated-product equivalence, exhaustive", wrong == 0,
           std::to_string(checked) + " products, " + std::to_string(wrong) + " mismatches");
}

// 3. design-space counts and the published table
void criterion_3() {
    bool ok = size_constrained() == 2655;
    std::string detail = "|constrained| = " + std::to_string(size_constrained());

    const auto tuple_strings = [](int k) {
        std::vector<std::string> out;
        for (const AxbxpConfig& c : enumerate_pruned(k).configs)
            out.push_back(c.tuple_str());
        return out;
    };
    ok = ok && tuple_strings(2) ==
                   std::vector<std::string>{"(2,1,1)", "(2,1,2)", "(2,1,3)", "(2,2,2)", "(2,1,4)"};
    ok = ok && tuple_strings(3) == std::vector<std::string>{"(3,1,1)", "(3,1,2)", "(3,1,3)"};
    ok = ok && tuple_strings(4) == std::vector<std::string>{"(4,1,1)", "(4,1,2)"};
    ok = ok && enumerate_pruned(2).configs.size() == 5 && enumerate_pruned(3).configs.size() == 3 &&
         enumerate_pruned(4).configs.size() == 2;

    // independent brute force for the Eq. 5 count: enumerate actual block
    // subsets for both operands with |A| >= |W|
    std::uint64_t brute = 0;
    for (int n = 2; n <= 4; ++n)
        for (std::uint32_t a = 1; a < (1u << n); ++a)
            for (std::uint32_t w = 1; w < (1u << n); ++w)
                if (__builtin_popcount(a) >= __builtin_popcount(w))
                    ++brute;
    ok = ok && brute == 188 && size_pruned_eq5() == brute;
    detail += ", per-K 5/3/2, eq5 brute force = " + std::to_string(brute) +
              ", eq5 closed form = " + std::to_string(size_pruned_eq5());
    report(3, "design-space counts and table", ok, detail);
}

// 4. footprint formulas and serialized payload length
void criterion_4() {
    bool ok = data_index_bits(2, 2, Mode::Dynamic) == 6 && data_index_bits(2, 2, Mode::Static) == 4;
    std::mt19937 rng(101);
    std::uint64_t mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int k = 2 + static_cast<int>(rng() % 3);
        const int n = block_count(k);
        const int kept = 1 + static_cast<int>(rng() % static_cast<unsigned>(n));
        const Mode mode = (rng() % 2) ? Mode::Dynamic : Mode::Static;
        const std::size_t count = rng() % 500;
        std::vector<std::int8_t> src(count);
        for (auto& v : src)
            v = static_cast<std::int8_t>(static_cast<int>(rng() % 255) - 127);
        const AxbxpTensor t =
            AxbxpTensor::convert(src, {static_cast<std::uint32_t>(count)}, k, kept, mode);
        const FootprintBits f = t.footprint();
        const std::uint64_t expected_payload =
            count * static_cast<std::uint64_t>(per_element_bits(k, kept, mode));
        const std::uint64_t file_bits = t.serialize().size() * 8;
        if (f.payload_bits != expected_payload ||
            file_bits != f.header_bits + ((f.payload_bits + 7) / 8) * 8)
            ++mismatches;
    }
    ok = ok && mismatches == 0;
    report(4, "footprint formulas (6/4 bits) and payload bit-length", ok,
           "1000 random tensors, " + std::to_string(mismatches) + " mismatches");
}

// 5. dynamic reconstruction error <= static, element-wise
void criterion_5() {
    std::mt19937 rng(103);
    std::uint64_t violations = 0, elements = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t count = 1 + rng() % 64;
        std::vector<std::int8_t> src(count);
        for (auto& v : src)
            v = static_cast<std::int8_t>(static_cast<int>(rng() % 255) - 127);
        for (int k = 2; k <= 4; ++k) {
            const int n = block_count(k);
            for (int kept = 1; kept <= n; ++kept) {
                const auto dyn = convert_dynamic(src, {static_cast<std::uint32_t>(count)}, k, kept)
                                     .reconstruct();
                const auto sta = convert_static(src, {static_cast<std::uint32_t>(count)}, k, kept)
                                     .reconstruct();
                for (std::size_t i = 0; i < count; ++i) {
                    ++elements;
                    if (std::abs(src[i] - dyn[i]) > std::abs(src[i] - sta[i]))
                        ++violations;
                }
            }
        }
    }
    report(5, "dynamic error dominates static, element-wise", violations == 0,
           std::to_string(elements) + " comparisons, " + std::to_string(violations) +
               " violations");
}

// 6. throughput model: 16 MACs/cycle at (2,1,1) on the fusion fabric,
//    Ax-BxP PE speedup bounded by N
void criterion_6() {
    bool ok = pe_throughput(AxbxpConfig{2, 1, 1, Mode::Dynamic}, Fabric::Fusion16) == 16;
    for (const AxbxpConfig& c : enumerate_pruned().configs) {
        const int t = pe_throughput(c, Fabric::AxbxpPe);
        ok = ok && t >= 1 && t <= c.n();
    }
    report(6, "throughput: fusion 16x at L=1, PE speedup <= N", ok);
}

// 7. end-to-end properties on the bundled digits task
void criterion_7() {
    const Dataset& d = digits();
    const auto test_idx = test_indices(d);

    // (a) lossless configs give bit-identical logits
    bool a_ok = true;
    {
        const FloatModel fm = train_tiny(d, 30, 1);
        QuantModel qm = quantize_model(fm, d, train_indices(d));
        std::vector<QuantModel> variants;
        for (int k = 2; k <= 4; ++k) {
            QuantModel v = qm;
            const int n = block_count(k);
            for (int li : v.mac_layers())
                v.layers[static_cast<std::size_t>(li)].config = AxbxpConfig{k, n, n, Mode::Dynamic};
            variants.push_back(std::move(v));
        }
        for (int idx : test_idx) {
            const QuantTensor in = quantize_input(qm, d.sample(idx));
            const auto exact = forward_exact(qm, in);
            for (const QuantModel& v : variants) {
                const auto approx = forward_axbxp(v, in);
                if (approx != exact)
                    a_ok = false;
            }
        }
    }
    report(7, "(a) lossless configs match exact logits bit-for-bit", a_ok);

    // (b) greedy search at K=2, gamma=1.0 meets gamma or is flagged; the CLI
    // returns exit code 2 for a best-effort assignment
    {
        const FloatModel fm = train_tiny(d, 30, 1);
        SearchSettings s;
        s.gamma = 1.0;
        s.k_tgt = 2;
        s.seed = 1;
        const SearchResult r = design_axbxp_dnn(fm, d, s);
        const double drop = r.assignment.baseline_accuracy - r.assignment.achieved_accuracy;
        const bool met = drop <= 1.0 || r.assignment.best_effort;

        // force the best-effort path through the CLI and expect exit code 2
        const std::string dir = "/tmp/axbxp_acceptance_ckpt";
        if (std::system(("rm -rf " + dir).c_str()) != 0)
            std::fprintf(stderr, "cleanup of %s failed\n", dir.c_str());
        const std::string train_cmd = std::string(AXBXP_CLI_PATH) + " train --data " +
                                      AXBXP_SOURCE_DIR "/data/digits_8x8.csv" +
                                      " --epochs 30 --seed 1 --out " + dir + " > /dev/null";
        const std::string search_cmd = std::string(AXBXP_CLI_PATH) + " search --model " + dir +
                                       " --data " + AXBXP_SOURCE_DIR "/data/digits_8x8.csv" +
                                       " --k 2 --gamma 0 --approx-first-last --seed 1 > /dev/null";
        bool exit2_ok = false;
        if (std::system(train_cmd.c_str()) == 0) {
            const int status = std::system(search_cmd.c_str());
            exit2_ok = WIFEXITED(status) && WEXITSTATUS(status) == 2;
        }
        report(7, "(b) greedy search meets gamma=1.0 or flags best-effort (CLI exit 2)",
               met && exit2_ok,
               "drop = " + std::to_string(drop) +
                   (r.assignment.best_effort ? " (best-effort)" : "") +
                   ", forced best-effort exit code 2: " + (exit2_ok ? "yes" : "no"));
    }

    // (c) dynamic (2,1,2) beats-or-ties static (2,1,2) on >= 4 of 5 seeds
    {
        int wins = 0;
        std::string detail;
        for (unsigned seed = 1; seed <= 5; ++seed) {
            const FloatModel fm = train_tiny(d, 30, seed);
            QuantModel qm = quantize_model(fm, d, train_indices(d));
            double acc[2];
            for (int m = 0; m < 2; ++m) {
                const Mode mode = m ? Mode::Dynamic : Mode::Static;
                for (int li : qm.mac_layers())
                    qm.layers[static_cast<std::size_t>(li)].config = AxbxpConfig{2, 1, 2, mode};
                acc[m] = evaluate_accuracy(qm, d, test_idx, true);
            }
            if (acc[1] >= acc[0])
                ++wins;
            detail += "seed " + std::to_string(seed) + ": " + std::to_string(acc[1]) + " vs " +
                      std::to_string(acc[0]) + "; ";
        }
        report(7, "(c) dynamic >= static at (2,1,2) on >= 4 of 5 seeds", wins >= 4,
               detail + std::to_string(wins) + "/5");
    }
}

// 8. analytic gradients vs central finite differences, 2-layer toy model
void criterion_8() {
    Dataset toy;
    toy.dims = 4;
    toy.classes = 3;
    toy.count = 2;
    toy.pixels = {0.1f, -0.7f, 0.4f, 0.9f, 0.5f, 0.2f, -0.3f, -0.8f};
    toy.labels = {0, 2};
    FloatModel model = make_mlp(Geometry{4, 1, 1}, {6}, 3, 21);

    double worst = 0.0;
    for (int sample = 0; sample < toy.count; ++sample) {
        Gradients grads = Gradients::zeros_like(model);
        loss_and_grads(model, toy.sample(sample), toy.labels[static_cast<std::size_t>(sample)],
                       &grads);
        const double eps = 1e-4;
        for (std::size_t li = 0; li < model.layers.size(); ++li)
            for (std::size_t i = 0; i < model.layers[li].w.size(); ++i) {
                const double saved = model.layers[li].w[i];
                model.layers[li].w[i] = saved + eps;
                const double up = loss_and_grads(model, toy.sample(sample),
                                                 toy.labels[static_cast<std::size_t>(sample)], nullptr);
                model.layers[li].w[i] = saved - eps;
                const double down = loss_and_grads(model, toy.sample(sample),
                                                   toy.labels[static_cast<std::size_t>(sample)], nullptr);
                model.layers[li].w[i] = saved;
                const double numeric = (up - down) / (2 * eps);
                const double analytic = grads.w[li][i];
                const double denom = std::max({1e-6, std::fabs(numeric), std::fabs(analytic)});
                worst = std::max(worst, std::fabs(numeric - analytic) / denom);
            }
    }
    report(8, "gradient check vs central differences", worst < 1e-4,
           "worst relative deviation = " + std::to_string(worst));
}

// 9. compute-reduction ratio N^2/L
void criterion_9() {
    bool ok = mac_cost_exact(2) / mac_cost(AxbxpConfig{2, 1, 2, Mode::Dynamic}) == 8;
    for (const AxbxpConfig& c : enumerate_pruned().configs) {
        const double ratio =
            static_cast<double>(mac_cost_exact(c.k)) / static_cast<double>(mac_cost(c));
        const double expected = static_cast<double>(c.n() * c.n()) / static_cast<double>(c.l());
        ok = ok && ratio == expected;
    }
    report(9, "compute reduction N^2/L (8x for (2,1,2) at K=2)", ok);
}

} // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    const auto elapsed =
        std::chrono::duration_cast<std::chrono::seconds>(std::chrono::steady_clock::now() - start);
    std::printf("%d failure(s), %llds total\n", failures,
                static_cast<long long>(elapsed.count()));
    return failures == 0 ? 0 : 1;
}
