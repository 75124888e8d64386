#include <hermes/tuning.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace hermes;

namespace {

/// Loads from thousands of PCs at random 4-byte-aligned addresses; the label
/// is "byte offset within the line is zero".
LabeledTrace planted_byte_offset_trace(std::uint64_t seed, std::size_t n) {
    std::mt19937_64 rng(seed);
    LabeledTrace t;
    t.name = "planted-" + std::to_string(seed);
    for (std::size_t i = 0; i < n; ++i) {
        LoadRecord r{0x400000 + 4 * (rng() % 4000), (rng() % (1u << 24)) * 64 + 4 * (rng() % 16), 4, 0};
        t.records.push_back(r);
        t.off_chip.push_back(r.vaddr % 64 == 0);
    }
    return t;
}

} // namespace

TEST(Replay, CountsMatchLabels) {
    auto t = planted_byte_offset_trace(1, 5000);
    auto s = replay(t, candidate_config({Feature::ByteOffset}));
    EXPECT_EQ(s.tp + s.fp + s.fn + s.tn, 5000u);
    EXPECT_EQ(s.tp + s.fn, static_cast<std::uint64_t>(std::count(t.off_chip.begin(), t.off_chip.end(), true)));
}

TEST(Replay, LabelTraceUsesTheSimulator) {
    auto records = gen_stream(1 << 16, 8, 1, 0);
    auto t = label_trace("s", records);
    ASSERT_EQ(t.off_chip.size(), records.size());
    for (std::size_t i = 0; i < records.size(); ++i)
        EXPECT_EQ(t.off_chip[i], i % 8 == 0);
}

TEST(CandidateConfig, ScalesThresholds) {
    auto c = candidate_config({Feature::Pc, Feature::ByteOffset});
    EXPECT_EQ(c.features.size(), 2u);
    EXPECT_EQ(c.features[1].table_size, 64u);
    EXPECT_NO_THROW(c.params.validate(2));
    EXPECT_EQ(c.params.tau_act, -7);
}

TEST(SelectFeatures, DefaultCandidatesAreEveryFeatureOnce) {
    SelectionOptions opt;
    ASSERT_EQ(opt.candidates.size(), kFeatureCount);
    for (std::size_t i = 0; i < kFeatureCount; ++i)
        EXPECT_EQ(opt.candidates[i], static_cast<Feature>(i));
}

TEST(SelectFeatures, RecoversPlantedFeature) {
    std::vector<LabeledTrace> traces = {planted_byte_offset_trace(1, 20000), planted_byte_offset_trace(2, 20000)};
    SelectionOptions opt;
    opt.threads = 4;
    auto res = select_features(traces, opt);
    ASSERT_FALSE(res.iterations.empty());
    EXPECT_EQ(res.iterations[0].front().features, std::vector<Feature>{Feature::ByteOffset});
    const auto &best = res.best.features;
    EXPECT_NE(std::find(best.begin(), best.end(), Feature::ByteOffset), best.end());
    // Soundness: the result is at least as accurate as the best singleton.
    EXPECT_GE(res.best.accuracy, res.iterations[0].front().accuracy);
}

TEST(SelectFeatures, DeterministicAcrossThreadCounts) {
    std::vector<LabeledTrace> traces = {planted_byte_offset_trace(3, 5000)};
    SelectionOptions a, b;
    a.threads = 1;
    b.threads = 7;
    a.max_features = b.max_features = 2;
    auto ra = select_features(traces, a), rb = select_features(traces, b);
    ASSERT_EQ(ra.iterations.size(), rb.iterations.size());
    for (std::size_t i = 0; i < ra.iterations.size(); ++i)
        for (std::size_t k = 0; k < ra.iterations[i].size(); ++k) {
            EXPECT_EQ(ra.iterations[i][k].features, rb.iterations[i][k].features);
            EXPECT_EQ(ra.iterations[i][k].accuracy, rb.iterations[i][k].accuracy);
        }
}

TEST(SelectFeatures, DedupesPermutationsAndHonorsLimits) {
    std::vector<LabeledTrace> traces = {planted_byte_offset_trace(4, 2000)};
    SelectionOptions opt;
    opt.candidates = {Feature::Pc, Feature::ByteOffset, Feature::VirtualAddress, Feature::WordOffset};
    opt.accuracy_epsilon = -1.0; // never saturate
    opt.max_features = 3;
    auto res = select_features(traces, opt);
    ASSERT_EQ(res.iterations.size(), 3u);
    EXPECT_EQ(res.iterations[1].size(), 6u); // C(4,2)
    EXPECT_EQ(res.iterations[2].size(), 4u); // C(4,3)
    EXPECT_THROW(select_features({}, opt), ValidationError);
}

TEST(GridSearch, UnimodalLandscapeReturnsPeak) {
    for (int peak : {-80, -35, 0, 15, 75}) {
        auto score = [&](int v) { return -static_cast<double>((v - peak) * (v - peak)); };
        auto r = grid_search(-80, 75, 5, {}, score, score);
        EXPECT_EQ(r.best, peak);
        EXPECT_EQ(r.stage2.size(), 32u);
        EXPECT_EQ(r.stage3.size(), 10u);
    }
}

TEST(GridSearch, ConstantLandscapeTiesTowardZero) {
    auto flat = [](int) { return 1.0; };
    EXPECT_EQ(grid_search(-80, 75, 5, {}, flat, flat).best, 0);
    EXPECT_EQ(grid_search(-78, 77, 5, {}, flat, flat).best, 2);
    EXPECT_EQ(grid_search(-5, 5, 10, {}, flat, flat).best, -5);
}

TEST(GridSearch, StageThreeDecidesAmongTopTen) {
    // Test traces favour 30; on all traces the best of the kept ten is 10.
    auto test = [](int v) { return -std::abs(v - 30) * 1.0; };
    auto all = [](int v) { return -std::abs(v - 10) * 1.0 - (v == 10 ? 0 : 0.5); };
    auto r = grid_search(-80, 75, 5, {}, test, all);
    EXPECT_EQ(r.best, 10);
    // -80 scores best on all traces but is not among the kept ten.
    auto all2 = [](int v) { return v == -80 ? 100.0 : -std::abs(v - 30) * 1.0; };
    EXPECT_EQ(grid_search(-80, 75, 5, {}, test, all2).best, 30);
}

TEST(GridSearch, MembershipAndAdmissibility) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 50; ++i) {
        std::vector<double> land(32);
        for (auto &x : land)
            x = static_cast<double>(rng() % 7);
        auto score = [&](int v) { return land[static_cast<std::size_t>((v + 80) / 5)]; };
        auto admissible = [](int v) { return v != 0; };
        auto r = grid_search(-80, 75, 5, admissible, score, score);
        EXPECT_GE(r.best, -80);
        EXPECT_LE(r.best, 75);
        EXPECT_EQ(((r.best + 80) % 5), 0);
        EXPECT_NE(r.best, 0);
    }
    auto none = [](int) { return false; };
    EXPECT_THROW(grid_search(0, 10, 5, none, [](int) { return 0.0; }, [](int) { return 0.0; }), ValidationError);
    EXPECT_THROW(grid_search(0, 10, 0, {}, [](int) { return 0.0; }, [](int) { return 0.0; }), ValidationError);
}

TEST(TuneThresholds, RealRunStaysAdmissible) {
    std::vector<LabeledTrace> traces;
    traces.push_back(label_trace("chase", gen_pointer_chase(8u << 20, 4096, 3, 8, 2)));
    traces.push_back(label_trace("stream", gen_stream(1u << 20, 4, 1, 2)));
    RunConfig base;
    auto r = tune_thresholds(std::span(traces).first(1), traces, base, Threshold::TauAct, 4);
    EXPECT_EQ(((r.best + 80) % 5), 0);
    auto p = base.predictor.popet.params;
    p.tau_act = r.best;
    EXPECT_NO_THROW(p.validate());
    for (const auto &[v, s] : r.stage2) {
        EXPECT_GT(v, p.t_n);
        EXPECT_LT(v, p.t_p);
        EXPECT_GT(s, 0.0);
    }
    EXPECT_THROW(tune_thresholds({}, traces, base, Threshold::TP), ValidationError);
}
