#include <hermes/config.hpp>

#include <gtest/gtest.h>

#include <fstream>
#include <unistd.h>

using namespace hermes;
using nlohmann::json;

TEST(Config, EmptyObjectKeepsDefaults) {
    auto rc = run_config_from_json(json::object());
    EXPECT_EQ(rc.sim.hierarchy.llc.latency, 55u);
    EXPECT_EQ(rc.sim.core.hermes_issue_latency, 6u);
    EXPECT_EQ(rc.sim.hermes, HermesMode::On);
    EXPECT_EQ(rc.predictor.kind, PredictorKind::Popet);
    EXPECT_EQ(rc.predictor.popet.features, default_feature_specs());
}

TEST(Config, JsonRoundTrip) {
    RunConfig rc;
    rc.sim.hierarchy.llc.latency = 65;
    rc.sim.hierarchy.rq_size = 0;
    rc.sim.hierarchy.prefetcher = {PrefetchMode::Stride, 2};
    rc.sim.core.hermes_issue_latency = 18;
    rc.sim.hermes = HermesMode::Ideal;
    rc.predictor.kind = PredictorKind::Hmp;
    rc.predictor.popet.params = {-10, -30, 30};
    rc.predictor.popet.features = {{Feature::PcXorByteOffset, 256}, {Feature::Last4Pcs, 1024}};
    rc.predictor.ttp.tag_bits = 12;
    auto back = run_config_from_json(to_json(rc));
    EXPECT_EQ(to_json(back), to_json(rc));
    EXPECT_EQ(back.predictor.popet.features, rc.predictor.popet.features);
}

TEST(Config, FileRoundTrip) {
    auto p = std::filesystem::temp_directory_path() / ("hermes_cfg_" + std::to_string(::getpid()) + ".json");
    RunConfig rc;
    rc.predictor.kind = PredictorKind::Ttp;
    save_run_config(rc, p);
    EXPECT_EQ(to_json(load_run_config(p)), to_json(rc));
    {
        std::ofstream out(p);
        out << "{ not json";
    }
    EXPECT_THROW(load_run_config(p), ValidationError);
    std::filesystem::remove(p);
}

TEST(Config, Rejections) {
    EXPECT_THROW(run_config_from_json(json{{"predictor", {{"type", "magic"}}}}), ValidationError);
    EXPECT_THROW(run_config_from_json(json{{"hermes", "maybe"}}), ValidationError);
    EXPECT_THROW(run_config_from_json(json{{"predictor", {{"tau_act", -40}}}}), ValidationError);
    EXPECT_THROW(run_config_from_json(json{{"predictor", {{"features", {{{"name", "bogus"}}}}}}}), ValidationError);
    EXPECT_THROW(run_config_from_json(json{{"hierarchy", {{"l2", {{"latency", 100}}}}}}), ValidationError);
    EXPECT_THROW(run_config_from_json(json{{"core", {{"width", "six"}}}}), ValidationError);
    EXPECT_THROW(run_config_from_json(json{{"hierarchy", {{"prefetcher", {{"mode", "psychic"}}}}}}),
                 ValidationError);
}

TEST(Config, FeatureTableSizeDefaults) {
    auto rc = run_config_from_json(json{{"predictor", {{"features", {{{"name", "cl_offset+first"}}}}, {"tau_act", -4}, {"t_n", -7}, {"t_p", 8}}}});
    ASSERT_EQ(rc.predictor.popet.features.size(), 1u);
    EXPECT_EQ(rc.predictor.popet.features[0].table_size, 128u);
}

TEST(Config, MakePredictorNames) {
    for (auto k : {PredictorKind::Popet, PredictorKind::Hmp, PredictorKind::Ttp, PredictorKind::Oracle,
                   PredictorKind::Never, PredictorKind::Always}) {
        PredictorSpec s;
        s.kind = k;
        EXPECT_EQ(make_predictor(s)->name(), to_string(k));
        EXPECT_EQ(predictor_kind_from_string(to_string(k)), k);
    }
}

TEST(Config, RunInIdealModeMatchesIdealHelper) {
    auto trace = gen_pointer_chase(8u << 20, 20000, 5, 2);
    RunConfig rc;
    rc.sim.hermes = HermesMode::Ideal;
    ConstantPredictor never(false);
    auto direct = simulate(trace, ideal_hermes_mode(SimConfig{}), never).metrics;
    auto via_run = run(trace, rc).metrics;
    EXPECT_EQ(via_run.total_cycles, direct.total_cycles);
    EXPECT_EQ(via_run.hermes_dropped, 0u);
}
