#include <hermes/config.hpp>
#include <hermes/core.hpp>

#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <unistd.h>

using namespace hermes;

namespace {

SimResult run_with(std::span<const LoadRecord> trace, SimConfig cfg, OffChipPredictor &p) {
    SimOptions o;
    o.record_loads = true;
    return simulate(trace, cfg, p, o);
}

SimConfig off() {
    SimConfig c;
    c.hermes = HermesMode::Off;
    return c;
}

void expect_stall_identity(const SimResult &r) {
    const auto &m = r.metrics;
    EXPECT_EQ(m.total_cycles, m.cycles_full_retire + m.cycles_rob_drained + m.stall_cycles_total);
    if (!r.loads.empty()) {
        std::uint64_t blocked = 0;
        for (const auto &e : r.loads)
            blocked += e.blocked_cycles;
        EXPECT_EQ(blocked, m.stall_cycles_total);
    }
    EXPECT_EQ(m.tp + m.fp + m.fn + m.tn, m.loads);
    EXPECT_EQ(m.tp + m.fn, m.off_chip_loads);
}

std::vector<LoadRecord> random_trace(std::mt19937_64 &rng, std::size_t n) {
    std::vector<LoadRecord> t;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t pc = 0x400000 + 4 * (rng() % 8);
        const std::uint64_t line = rng() % 2 ? rng() % 512 : rng() % (1 << 18);
        t.push_back({pc, 0x10000000 + line * 64 + 8 * (rng() % 8), 8, static_cast<std::uint16_t>(rng() % 12)});
    }
    return t;
}

} // namespace

TEST(Core, EmptyTrace) {
    ConstantPredictor never(false);
    auto r = simulate({}, SimConfig{}, never);
    EXPECT_EQ(r.metrics.total_cycles, 0u);
    EXPECT_EQ(r.metrics.loads, 0u);
    EXPECT_EQ(r.metrics.instructions_retired, 0u);
}

TEST(Core, SingleOffChipLoadHandCount) {
    // Admitted at cycle 0, data at 5+15+55+110 = 185; cycles 0..184 are
    // blocked on it and it retires in cycle 185.
    std::vector<LoadRecord> t = {{0x400000, 0x1000, 8, 0}};
    ConstantPredictor never(false);
    auto r = run_with(t, off(), never);
    EXPECT_EQ(r.loads[0].completion_cycle, 185u);
    EXPECT_EQ(r.loads[0].retire_cycle, 185u);
    EXPECT_EQ(r.metrics.total_cycles, 186u);
    EXPECT_EQ(r.metrics.stall_cycles_total, 185u);
    EXPECT_EQ(r.metrics.stall_cycles_off_chip, 185u);
    EXPECT_EQ(r.metrics.cycles_rob_drained, 1u);
    expect_stall_identity(r);
}

TEST(Core, WarmL1HitHandCount) {
    // The second load is separated by enough non-memory work that the line
    // has arrived: it hits L1, completes 5 cycles after admission and blocks
    // retirement for at most those 5 cycles.
    std::vector<LoadRecord> t = {{0x400000, 0x1000, 8, 0}, {0x400004, 0x1008, 8, 3000}};
    ConstantPredictor never(false);
    auto r = run_with(t, off(), never);
    const auto &e = r.loads[1];
    EXPECT_EQ(e.hit_level, HitLevel::L1);
    EXPECT_EQ(e.completion_cycle, e.admit_cycle + 5);
    EXPECT_LE(e.blocked_cycles, 5u);
    EXPECT_EQ(r.metrics.instructions_retired, 3002u);
    expect_stall_identity(r);
}

TEST(Core, OracleSavesOnChipLookupsOnOneLoad) {
    std::vector<LoadRecord> t = {{0x400000, 0x1000, 8, 0}};
    ConstantPredictor never(false);
    OraclePredictor oracle;
    SimConfig on;
    on.core.hermes_issue_latency = 0;
    auto a = run_with(t, off(), never);
    auto b = run_with(t, on, oracle);
    EXPECT_EQ(a.loads[0].completion_cycle - b.loads[0].completion_cycle, 15u + 55u);
    EXPECT_EQ(a.metrics.total_cycles - b.metrics.total_cycles, 70u);
}

TEST(Core, IdealModeUsesItsOwnOracle) {
    std::vector<LoadRecord> t = {{0x400000, 0x1000, 8, 0}};
    ConstantPredictor never(false);
    auto base = run_with(t, off(), never);
    auto ideal = run_with(t, ideal_hermes_mode(SimConfig{}), never);
    EXPECT_EQ(base.loads[0].completion_cycle - ideal.loads[0].completion_cycle, 70u);
    EXPECT_EQ(ideal.metrics.tp, 1u);
}

TEST(Core, Deterministic) {
    std::mt19937_64 rng(1);
    auto t = random_trace(rng, 20000);
    Popet a, b;
    auto ra = simulate(t, SimConfig{}, a).metrics;
    auto rb = simulate(t, SimConfig{}, b).metrics;
    EXPECT_EQ(csv_row(ra), csv_row(rb));
}

TEST(Core, StallIdentityAcrossPredictors) {
    std::mt19937_64 rng(2);
    auto t = random_trace(rng, 20000);
    for (auto kind : {PredictorKind::Never, PredictorKind::Always, PredictorKind::Popet, PredictorKind::Hmp,
                      PredictorKind::Ttp, PredictorKind::Oracle}) {
        RunConfig rc;
        rc.predictor.kind = kind;
        SimOptions o;
        o.record_loads = true;
        expect_stall_identity(run(t, rc, o));
    }
}

TEST(Core, IdealBeatsRealBeatsBaseline) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 4; ++trial) {
        auto t = random_trace(rng, 30000);
        ConstantPredictor never(false);
        Popet popet;
        auto base = simulate(t, off(), never).metrics;
        auto real = simulate(t, SimConfig{}, popet).metrics;
        auto ideal = simulate(t, ideal_hermes_mode(SimConfig{}), never).metrics;
        EXPECT_GE(ideal.ipc(), real.ipc());
        EXPECT_GE(real.ipc(), base.ipc());
    }
}

TEST(Core, OracleNeverHurtsAndIsPerfect) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 4; ++trial) {
        auto t = random_trace(rng, 20000);
        ConstantPredictor never(false);
        OraclePredictor oracle;
        auto base = simulate(t, off(), never).metrics;
        auto o = simulate(t, SimConfig{}, oracle).metrics;
        EXPECT_LE(o.total_cycles, base.total_cycles);
        EXPECT_EQ(o.fp, 0u);
        EXPECT_EQ(o.fn, 0u);
    }
}

TEST(Core, LoadQueueBackPressure) {
    // With one LQ entry a load cannot be admitted before its predecessor retires.
    std::vector<LoadRecord> t;
    for (std::uint64_t i = 0; i < 10; ++i)
        t.push_back({0x400000, 0x100000 * (i + 1), 8, 0});
    SimConfig c = off();
    c.core.lq_entries = 1;
    ConstantPredictor never(false);
    auto r = run_with(t, c, never);
    for (std::size_t i = 1; i < r.loads.size(); ++i)
        EXPECT_GT(r.loads[i].admit_cycle, r.loads[i - 1].retire_cycle);
    EXPECT_EQ(r.metrics.total_cycles, 10u * 186u);
}

TEST(Core, ConfigValidation) {
    CoreConfig c;
    c.lq_entries = 1024;
    EXPECT_THROW(c.validate(), ValidationError);
    c = {};
    c.width = 0;
    EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Core, ReadsFromTraceReader) {
    auto t = gen_stream(1 << 16, 8, 1, 1);
    auto path = std::filesystem::temp_directory_path() / ("hermes_core_" + std::to_string(::getpid()) + ".trc");
    write_trace(path, t);
    TraceReader reader(path);
    Popet a, b;
    Simulator sim(SimConfig{}, a);
    auto from_file = sim.run(reader).metrics;
    auto from_mem = simulate(t, SimConfig{}, b).metrics;
    std::filesystem::remove(path);
    EXPECT_EQ(csv_row(from_file), csv_row(from_mem));
}
