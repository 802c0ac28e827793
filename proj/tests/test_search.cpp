// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "axbxp/search.hpp"

using namespace axbxp;

namespace {

const Dataset& digits() {
    static const Dataset data = load_digits_csv(AXBXP_SOURCE_DIR "/data/digits_8x8.csv");
    return data;
}

// Two separable clusters; any sign-preserving approximation keeps them
// apart, so a trained two-class toy model stays measurable.
Dataset two_point_dataset() {
    Dataset d;
    d.dims = 2;
    d.classes = 2;
    d.count = 10;
    for (int i = 0; i < d.count; ++i) {
        const int label = i % 2;
        d.pixels.push_back(label ? 1.0f : -1.0f);
        d.pixels.push_back(label ? -1.0f : 1.0f);
        d.labels.push_back(label);
    }
    return d;
}

} // namespace

TEST_CASE("gamma = 100 accepts the first (cheapest) candidate") {
    const Dataset& d = digits();
    const FloatModel fm = train_tiny(d, 20, 3);
    SearchSettings s;
    s.gamma = 100.0;
    s.k_tgt = 2;
    const SearchResult result = design_axbxp_dnn(fm, d, s);
    // middle layer gets (2,1,1), the cheapest config; first/last stay exact
    REQUIRE(result.assignment.layers.size() == 3);
    CHECK(!result.assignment.layers[0].config.has_value());
    CHECK(!result.assignment.layers[2].config.has_value());
    REQUIRE(result.assignment.layers[1].config.has_value());
    CHECK(result.assignment.layers[1].config->tuple_str() == "(2,1,1)");
    CHECK(result.assignment.layers[1].trail.size() == 1);
    CHECK(!result.assignment.best_effort);
}

TEST_CASE("K=4 search visits at most 2 candidates per layer") {
    const Dataset& d = digits();
    const FloatModel fm = train_tiny(d, 20, 3);
    SearchSettings s;
    s.gamma = 0.0;
    s.k_tgt = 4;
    s.pin_first_last = false;
    const SearchResult result = design_axbxp_dnn(fm, d, s);
    std::size_t total_trials = 0;
    for (const LayerDecision& dec : result.assignment.layers) {
        CHECK(dec.trail.size() <= 2);
        total_trials += dec.trail.size();
    }
    // search cost bound: at most C*n evaluations, C = 2 for K=4
    CHECK(total_trials <= 2 * result.assignment.layers.size());
}

TEST_CASE("search determinism: identical settings give identical reports") {
    const Dataset& d = digits();
    const FloatModel fm = train_tiny(d, 15, 9);
    SearchSettings s;
    s.gamma = 1.0;
    s.k_tgt = 2;
    s.seed = 42;
    const SearchResult a = design_axbxp_dnn(fm, d, s);
    const SearchResult b = design_axbxp_dnn(fm, d, s);
    CHECK(search_report_json(a.assignment, s) == search_report_json(b.assignment, s));
}

TEST_CASE("relaxing gamma never selects a costlier config") {
    const Dataset& d = digits();
    const FloatModel fm = train_tiny(d, 20, 5);
    SearchSettings tight;
    tight.gamma = 0.5;
    tight.k_tgt = 2;
    SearchSettings loose = tight;
    loose.gamma = 5.0;
    const SearchResult rt = design_axbxp_dnn(fm, d, tight);
    const SearchResult rl = design_axbxp_dnn(fm, d, loose);
    REQUIRE(rt.assignment.layers.size() == rl.assignment.layers.size());
    for (std::size_t i = 0; i < rt.assignment.layers.size(); ++i) {
        const auto& ct = rt.assignment.layers[i].config;
        const auto& cl = rl.assignment.layers[i].config;
        if (ct && cl)
            CHECK(cl->l() <= ct->l());
    }
}

TEST_CASE("single-layer model reduces to get_best_config") {
    const Dataset toy = two_point_dataset();
    FloatModel fm = make_mlp(Geometry{2, 1, 1}, {}, 2, 3);
    TrainOptions topt;
    topt.epochs = 40;
    topt.lr = 0.2f;
    std::vector<int> all_idx;
    for (int i = 0; i < toy.count; ++i)
        all_idx.push_back(i);
    train(fm, toy, all_idx, topt);

    SearchSettings s;
    s.gamma = 100.0;
    s.k_tgt = 3;
    s.pin_first_last = false;
    const SearchResult via_design = design_axbxp_dnn(fm, toy, s);

    QuantModel qm = quantize_model(fm, toy, all_idx);
    const auto eval_idx = test_indices(toy);
    const double baseline = evaluate_accuracy(qm, toy, eval_idx, false);
    LayerDecision decision;
    const AxbxpConfig chosen = get_best_config(qm, 0, toy, eval_idx, baseline, s, &decision);
    REQUIRE(via_design.assignment.layers.size() == 1);
    CHECK(via_design.assignment.layers[0].config->tuple_str() == chosen.tuple_str());
}

namespace {

// One dense layer: logit0 = 3*64 (exact under every config), logit1 = 3*65.
// 65 = 0b01000001 reduces to 64 whenever fewer than 4 activation blocks are
// kept, turning the true margin of 3 into a tie that argmax resolves to
// class 0. Only (2,1,4) preserves the prediction.
QuantModel margin_model(std::vector<std::int8_t> class1_row) {
    QuantModel qm;
    qm.input = Geometry{2, 1, 1};
    qm.classes = 2;
    qm.input_scale = 1.0 / 127.0;
    QuantLayer layer;
    layer.kind = LayerKind::Dense;
    layer.weights.shape = {2, 2};
    layer.weights.values = {3, 0, class1_row[0], class1_row[1]};
    layer.weights.scale = 0.01;
    layer.bias = {0, 0};
    layer.in_scale = 1.0 / 127.0;
    layer.out_scale = 0.0;
    qm.layers.push_back(std::move(layer));
    return qm;
}

Dataset margin_dataset() {
    Dataset d;
    d.dims = 2;
    d.classes = 2;
    d.count = 4;
    for (int i = 0; i < d.count; ++i) {
        d.pixels.push_back(64.0f / 127.0f);
        d.pixels.push_back(65.0f / 127.0f);
        d.labels.push_back(1);
    }
    return d;
}

} // namespace

TEST_CASE("gamma 0 on a layer only the highest-L config preserves") {
    const Dataset d = margin_dataset();
    QuantModel qm = margin_model({0, 3});
    const std::vector<int> eval_idx{0, 1, 2, 3};
    const double baseline = evaluate_accuracy(qm, d, eval_idx, false);
    CHECK(baseline == 100.0);

    for (Mode mode : {Mode::Static, Mode::Dynamic}) {
        SearchSettings s;
        s.gamma = 0.0;
        s.k_tgt = 2;
        s.mode = mode;
        LayerDecision decision;
        const AxbxpConfig chosen = get_best_config(qm, 0, d, eval_idx, baseline, s, &decision);
        CHECK(chosen.tuple_str() == "(2,1,4)"); // the highest-L candidate
        CHECK(decision.trail.size() == 5);      // walked the whole space
        CHECK(!decision.best_effort);
        CHECK(decision.trail.back().drop == 0.0);
    }
}

TEST_CASE("when nothing qualifies the min-drop candidate is returned and flagged") {
    // weight rows 85 = 0b01010101 and 86 = 0b01010110 collapse to the same
    // value whenever at most two blocks are kept, and every K=2 config keeps
    // at most two weight blocks; the margin dies under all five candidates
    Dataset d;
    d.dims = 2;
    d.classes = 2;
    d.count = 4;
    for (int i = 0; i < d.count; ++i) {
        d.pixels.push_back(1.0f);
        d.pixels.push_back(0.0f);
        d.labels.push_back(1);
    }
    QuantModel qm;
    qm.input = Geometry{2, 1, 1};
    qm.classes = 2;
    qm.input_scale = 1.0 / 127.0;
    QuantLayer layer;
    layer.kind = LayerKind::Dense;
    layer.weights.shape = {2, 2};
    layer.weights.values = {85, 0, 86, 0};
    layer.weights.scale = 0.01;
    layer.bias = {0, 0};
    layer.in_scale = 1.0 / 127.0;
    layer.out_scale = 0.0;
    qm.layers.push_back(std::move(layer));

    const std::vector<int> eval_idx{0, 1, 2, 3};
    const double baseline = evaluate_accuracy(qm, d, eval_idx, false);
    CHECK(baseline == 100.0);

    for (Mode mode : {Mode::Static, Mode::Dynamic}) {
        SearchSettings s;
        s.gamma = 0.0;
        s.k_tgt = 2;
        s.mode = mode;
        LayerDecision decision;
        const AxbxpConfig chosen = get_best_config(qm, 0, d, eval_idx, baseline, s, &decision);
        CHECK(decision.best_effort);
        CHECK(decision.trail.size() == 5);
        for (const CandidateTrial& t : decision.trail)
            CHECK(t.drop == 100.0);
        // equal drops: the first candidate stays the minimum
        CHECK(chosen.tuple_str() == "(2,1,1)");
    }
}

TEST_CASE("get_best_config rejects non-MAC layers") {
    const Dataset toy = two_point_dataset();
    QuantModel qm;
    qm.input = Geometry{2, 1, 1};
    qm.classes = 2;
    QuantLayer relu;
    relu.kind = LayerKind::Relu;
    qm.layers.push_back(std::move(relu));
    SearchSettings s;
    CHECK_THROWS_AS(get_best_config(qm, 0, toy, std::vector<int>{0}, 100.0, s, nullptr), Error);
}

TEST_CASE("block histograms count non-zero blocks per index") {
    QuantTensor zero{{4}, {0, 0, 0, 0}, 1.0};
    const BlockHistogram hz = block_histogram(zero, 2);
    for (int i = 0; i < hz.n; ++i)
        CHECK(hz.nonzero_per_block[static_cast<std::size_t>(i)] == 0);

    QuantTensor t{{2}, {3, 24}, 1.0};
    const BlockHistogram h = block_histogram(t, 2);
    CHECK(h.nonzero_per_block[0] == 1); // 3
    CHECK(h.nonzero_per_block[1] == 1); // 24 -> block 1 (value 2)
    CHECK(h.nonzero_per_block[2] == 1); // 24 -> block 2 (value 1)
    CHECK(h.nonzero_per_block[3] == 0);

    // sum over blocks is at least the non-zero element count
    std::mt19937 rng(71);
    for (int trial = 0; trial < 50; ++trial) {
        QuantTensor r;
        r.shape = {32};
        for (int i = 0; i < 32; ++i)
            r.values.push_back(static_cast<std::int8_t>(static_cast<int>(rng() % 255) - 127));
        std::uint64_t nonzero = 0;
        for (auto v : r.values)
            if (v != 0)
                ++nonzero;
        for (int k = 2; k <= 4; ++k) {
            const BlockHistogram hist = block_histogram(r, k);
            std::uint64_t total = 0;
            for (int b = 0; b < hist.n; ++b)
                total += hist.nonzero_per_block[static_cast<std::size_t>(b)];
            CHECK(total >= nonzero);
            std::uint64_t binned = 0;
            for (auto c : hist.value_bins)
                binned += c;
            CHECK(binned == r.values.size());
        }
    }
}

TEST_CASE("error analysis reproduces the worked example and the dominance law") {
    QuantTensor t{{2}, {3, 24}, 1.0};
    const ErrorAnalysis a = error_analysis(t, 2, 1);
    CHECK(a.static_idx.mae == doctest::Approx((3 + 8) / 2.0));
    CHECK(a.dynamic_idx.mae == doctest::Approx((0 + 8) / 2.0));
    CHECK(a.static_idx.max_error == 8);
    CHECK(a.dynamic_idx.max_error == 8);

    const ErrorAnalysis lossless = error_analysis(t, 2, 4);
    CHECK(lossless.static_idx.mae == 0.0);
    CHECK(lossless.dynamic_idx.mae == 0.0);
}

TEST_CASE("dynamic MAE never exceeds static MAE on log-normal samples") {
    std::mt19937 rng(73);
    std::lognormal_distribution<double> dist(1.0, 1.2);
    QuantTensor t;
    t.shape = {10000};
    for (int i = 0; i < 10000; ++i) {
        const double v = std::min(dist(rng), 127.0);
        const int sign = (rng() % 2) ? 1 : -1;
        t.values.push_back(static_cast<std::int8_t>(sign * static_cast<int>(v)));
    }
    for (int k = 2; k <= 4; ++k) {
        const int n = block_count(k);
        for (int kept = 1; kept <= n; ++kept) {
            const ErrorAnalysis a = error_analysis(t, k, kept);
            CHECK(a.dynamic_idx.mae <= a.static_idx.mae);
        }
    }
}

TEST_CASE("search report is valid JSON with the expected fields") {
    const Dataset& d = digits();
    const FloatModel fm = train_tiny(d, 10, 2);
    SearchSettings s;
    s.gamma = 2.0;
    s.k_tgt = 3;
    const SearchResult r = design_axbxp_dnn(fm, d, s);
    const std::string json = search_report_json(r.assignment, s);
    CHECK(json.find("\"baseline_accuracy\"") != std::string::npos);
    CHECK(json.find("\"achieved_accuracy\"") != std::string::npos);
    CHECK(json.find("\"layers\"") != std::string::npos);
    CHECK(json.find("\"k_tgt\": 3") != std::string::npos);
}
