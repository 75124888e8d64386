#include <hermes/hierarchy.hpp>
#include <hermes/hmp.hpp>
#include <hermes/ttp.hpp>

#include <gtest/gtest.h>

#include <bit>
#include <map>
#include <random>

using namespace hermes;

TEST(Hmp, MajorityExhaustive) {
    for (int m = 0; m < 8; ++m) {
        const bool a = m & 1, b = m & 2, c = m & 4;
        EXPECT_EQ(majority(a, b, c), a + b + c >= 2);
    }
}

TEST(Hmp, PredictionIsMajorityOfComponentVotes) {
    for (int m = 0; m < 8; ++m) {
        Hmp h;
        const std::uint64_t pc = 0x401230;
        auto ix = h.indices(pc);
        const bool local = m & 1, gshare = m & 2, gskew = m & 4;
        h.local_patterns()[ix.local] = SaturatingCounter2(local ? 3 : 0);
        h.gshare_table()[ix.gshare] = SaturatingCounter2(gshare ? 3 : 0);
        for (int k = 0; k < 3; ++k)
            h.gskew_bank(k)[ix.gskew[k]] = SaturatingCounter2(gskew ? 3 : 0);
        auto v = h.votes(ix);
        EXPECT_EQ(v, (std::array<bool, 3>{local, gshare, gskew}));
        EXPECT_EQ(h.predict(pc), local + gshare + gskew >= 2) << m;
    }
}

TEST(Hmp, GskewVoteIsMajorityOfBanks) {
    for (int m = 0; m < 8; ++m) {
        Hmp h;
        auto ix = h.indices(0x400000);
        for (int k = 0; k < 3; ++k)
            h.gskew_bank(k)[ix.gskew[k]] = SaturatingCounter2((m >> k) & 1 ? 2 : 1);
        EXPECT_EQ(h.votes(ix)[2], std::popcount(static_cast<unsigned>(m)) >= 2);
    }
}

TEST(Hmp, ColdPredictsOnChip) {
    Hmp h;
    std::mt19937_64 rng(4);
    for (int i = 0; i < 100; ++i)
        EXPECT_FALSE(h.predict(rng()));
}

TEST(Hmp, StorageWithinBudget) {
    Hmp h;
    EXPECT_LE(h.storage_bits(), 11u * 1024 * 8);
}

TEST(Hmp, CounterTraces) {
    SaturatingCounter2 c(3);
    c.update(true);
    EXPECT_EQ(c.value(), 3);
    SaturatingCounter2 d;
    EXPECT_EQ(d.value(), 1);
    for (int i = 0; i < 20; ++i) {
        d.update(i % 2 == 0);
        EXPECT_GE(d.value(), 1);
        EXPECT_LE(d.value(), 2);
    }
    SaturatingCounter2 z(0);
    z.update(false);
    EXPECT_EQ(z.value(), 0);
}

TEST(Hmp, GlobalHistoryHoldsLastOutcomesNewestInBitZero) {
    Hmp h;
    const std::vector<bool> outcomes = {true, false, false, true, true, false, true};
    std::uint64_t expect = 0;
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
        auto t = h.predict_load({0x400000 + 4 * k, 0, 8, 0});
        h.train_load(t, outcomes[k]);
        expect = (expect << 1) | outcomes[k];
        EXPECT_EQ(h.global_history(), expect);
        EXPECT_EQ(h.global_history() & 1, outcomes[k] ? 1u : 0u);
    }
}

TEST(Hmp, HotMissingPcLocalComponent) {
    // The local pattern index includes the 8-bit per-PC history, so every
    // training of an always-missing PC lands on a fresh counter until the
    // history saturates at all ones. Counter oracle keyed by history value:
    // the first off-chip local vote appears after nine trainings.
    Hmp h;
    const std::uint64_t pc = 0x4abc00;
    std::map<std::uint32_t, int> oracle; // history -> counter
    std::uint32_t hist = 0;
    int first_off = -1;
    for (int k = 0; k <= 12; ++k) {
        const bool oracle_vote = (oracle.count(hist) ? oracle[hist] : 1) >= 2;
        const bool vote = h.votes(h.indices(pc))[0];
        ASSERT_EQ(vote, oracle_vote) << "after " << k << " trainings";
        if (vote && first_off < 0)
            first_off = k;
        auto t = h.predict_load({pc, 0, 8, 0});
        h.train_load(t, true);
        int &c = oracle.try_emplace(hist, 1).first->second;
        c = std::min(c + 1, 3);
        hist = ((hist << 1) | 1) & 0xFF;
        EXPECT_EQ(h.local_history(pc), hist);
    }
    EXPECT_EQ(first_off, 9);
}

TEST(Hmp, UnknownTokenRejected) {
    Hmp h;
    auto t = h.predict_load({1, 0, 8, 0});
    h.train_load(t, false);
    EXPECT_THROW(h.train_load(t, false), UsageError);
}

TEST(Ttp, DefaultBudget) {
    TtpConfig c;
    EXPECT_EQ(c.storage_bits(), 1536u * 1024 * 8);
}

TEST(Ttp, FillEvictPredict) {
    Ttp t;
    const std::uint64_t x = 0x123456;
    EXPECT_TRUE(t.predict(x * kLineBytes));
    t.on_fill(x);
    EXPECT_FALSE(t.predict(x * kLineBytes));
    t.on_llc_evict(x);
    EXPECT_TRUE(t.predict(x * kLineBytes));
    t.on_llc_evict(x); // absent: no effect
    EXPECT_EQ(t.count(x), 0u);
}

TEST(Ttp, EmptyAlwaysOffChip) {
    Ttp t;
    std::mt19937_64 rng(6);
    for (int i = 0; i < 100; ++i)
        EXPECT_TRUE(t.predict(rng()));
}

TEST(Ttp, AliasingAndMultiset) {
    TtpConfig c;
    Ttp t(c);
    const std::uint64_t a = 777;
    const std::uint64_t b = a + c.sets * (1ull << c.tag_bits); // same set, same 16-bit tag
    ASSERT_EQ(t.set_of(a), t.set_of(b));
    ASSERT_EQ(t.partial_tag(a), t.partial_tag(b));
    t.on_fill(a);
    EXPECT_FALSE(t.predict(b * kLineBytes)) << "aliased absent line looks on-chip";
    t.on_fill(b);
    EXPECT_EQ(t.count(a), 2u);
    t.on_llc_evict(a);
    EXPECT_EQ(t.count(b), 1u);
    EXPECT_FALSE(t.predict(b * kLineBytes));
}

TEST(Ttp, FullSetDropsOldest) {
    TtpConfig c{4, 2, 64};
    Ttp t(c);
    t.on_fill(0);
    t.on_fill(4);
    t.on_fill(8);
    EXPECT_FALSE(t.present(0));
    EXPECT_TRUE(t.present(4));
    EXPECT_TRUE(t.present(8));
}

TEST(Ttp, FullTagsMirrorTheLlc) {
    for (auto mode : {PrefetchMode::Off, PrefetchMode::NextLine}) {
        HierarchyConfig hc;
        hc.l1 = {1024, 2, 5, 4};
        hc.l2 = {4096, 4, 15, 4};
        hc.llc = {16384, 8, 55, 4};
        hc.prefetcher = {mode, 1};
        Hierarchy h(hc);
        Ttp t({hc.llc.sets(), hc.llc.ways, 64});
        h.on_llc_fill = [&](std::uint64_t line, std::uint64_t) { t.on_fill(line); };
        h.on_llc_evict = [&](std::uint64_t line) { t.on_llc_evict(line); };
        std::mt19937_64 rng(13);
        for (std::uint64_t i = 0; i < 10000; ++i) {
            const std::uint64_t addr = (rng() % 1024) * kLineBytes;
            ASSERT_EQ(t.predict(addr), h.would_go_off_chip(addr)) << i;
            h.access(addr, i);
        }
    }
}
