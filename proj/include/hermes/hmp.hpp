#pragma once

// HMP: hit/miss predictor built like a hybrid branch predictor. Three
// components (local two-level, gshare, gskew) each vote off-chip/on-chip and
// the majority wins. Counters are 2-bit; >= 2 means off-chip.

#include "features.hpp"
#include "predictor.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <vector>

namespace hermes {

class SaturatingCounter2 {
public:
    constexpr SaturatingCounter2() = default;
    constexpr explicit SaturatingCounter2(std::uint8_t v) : v_(v > 3 ? 3 : v) {}
    constexpr std::uint8_t value() const { return v_; }
    constexpr bool high() const { return v_ >= 2; }
    constexpr void update(bool up) {
        if (up && v_ < 3)
            ++v_;
        else if (!up && v_ > 0)
            --v_;
    }

private:
    std::uint8_t v_ = 1; // weakly on-chip
};

constexpr bool majority(bool a, bool b, bool c) { return (a && b) || (a && c) || (b && c); }

struct HmpConfig {
    std::uint32_t local_histories = 512;
    std::uint32_t local_history_bits = 8;
    std::uint32_t local_patterns = 2048;
    std::uint32_t gshare_entries = 8192;
    std::uint32_t gskew_entries = 4096; ///< per bank, three banks
};

class Hmp final : public OffChipPredictor {
public:
    struct Indices {
        std::uint32_t history_slot = 0;
        std::uint32_t local = 0;
        std::uint32_t gshare = 0;
        std::array<std::uint32_t, 3> gskew{};
    };

    explicit Hmp(HmpConfig cfg = {})
        : cfg_(cfg), local_hist_(cfg.local_histories), local_pht_(cfg.local_patterns), gshare_(cfg.gshare_entries),
          gskew_{std::vector<SaturatingCounter2>(cfg.gskew_entries), std::vector<SaturatingCounter2>(cfg.gskew_entries),
                 std::vector<SaturatingCounter2>(cfg.gskew_entries)} {
        for (auto n : {cfg.local_histories, cfg.local_patterns, cfg.gshare_entries, cfg.gskew_entries})
            if (n < 2 || !std::has_single_bit(n))
                throw ValidationError("HMP table sizes must be powers of two >= 2");
        if (cfg.local_history_bits == 0 || cfg.local_history_bits > 16 ||
            (1u << cfg.local_history_bits) > cfg.local_patterns)
            throw ValidationError("HMP local history must fit in the pattern table index");
    }

    std::string name() const override { return "hmp"; }

    Indices indices(std::uint64_t pc) const {
        Indices ix;
        const auto pcw = pc >> 2;
        ix.history_slot = fold_bits(pcw, log2(cfg_.local_histories));
        const unsigned hist_bits = cfg_.local_history_bits;
        const unsigned pc_bits = log2(cfg_.local_patterns) - hist_bits;
        const std::uint32_t hist = local_hist_[ix.history_slot];
        ix.local = (pc_bits ? (fold_bits(pcw, pc_bits) << hist_bits) : 0) | hist;
        const unsigned gs_bits = log2(cfg_.gshare_entries);
        ix.gshare = fold_bits(pcw, gs_bits) ^ static_cast<std::uint32_t>(ghist_ & mask(gs_bits));
        const unsigned sk_bits = log2(cfg_.gskew_entries);
        const std::uint64_t h = ghist_ & mask(sk_bits);
        ix.gskew[0] = fold_bits(pcw ^ (h << 1), sk_bits);
        ix.gskew[1] = fold_bits(std::rotl(pcw, 17) ^ (h * 0x9E37u), sk_bits);
        ix.gskew[2] = fold_bits(std::rotl(pcw ^ 0x5bd1e995u, 31) ^ std::rotr(h, 3) ^ (h << 7), sk_bits);
        return ix;
    }

    /// Component votes: local, gshare, gskew (itself a majority of its banks).
    std::array<bool, 3> votes(const Indices &ix) const {
        return {local_pht_[ix.local].high(), gshare_[ix.gshare].high(),
                majority(gskew_[0][ix.gskew[0]].high(), gskew_[1][ix.gskew[1]].high(), gskew_[2][ix.gskew[2]].high())};
    }

    bool predict(std::uint64_t pc) const {
        auto v = votes(indices(pc));
        return majority(v[0], v[1], v[2]);
    }

    PredictionToken predict_load(const LoadRecord &load) override {
        auto ix = indices(load.pc);
        auto v = votes(ix);
        return tokens_.put(majority(v[0], v[1], v[2]), ix);
    }

    void train_load(const PredictionToken &token, bool went_off_chip) override {
        train(tokens_.take(token), went_off_chip);
    }

    void train(const Indices &ix, bool off_chip) {
        local_pht_[ix.local].update(off_chip);
        gshare_[ix.gshare].update(off_chip);
        for (int k = 0; k < 3; ++k)
            gskew_[k][ix.gskew[k]].update(off_chip);
        auto &h = local_hist_[ix.history_slot];
        h = static_cast<std::uint16_t>(((h << 1) | (off_chip ? 1 : 0)) & mask(cfg_.local_history_bits));
        ghist_ = (ghist_ << 1) | (off_chip ? 1 : 0);
    }

    std::uint64_t global_history() const { return ghist_; }
    std::uint16_t local_history(std::uint64_t pc) const { return local_hist_[indices(pc).history_slot]; }

    std::vector<SaturatingCounter2> &local_patterns() { return local_pht_; }
    std::vector<SaturatingCounter2> &gshare_table() { return gshare_; }
    std::vector<SaturatingCounter2> &gskew_bank(int k) { return gskew_.at(static_cast<std::size_t>(k)); }
    const std::vector<SaturatingCounter2> &local_patterns() const { return local_pht_; }
    const std::vector<SaturatingCounter2> &gshare_table() const { return gshare_; }
    const std::vector<SaturatingCounter2> &gskew_bank(int k) const { return gskew_.at(static_cast<std::size_t>(k)); }

    std::uint64_t storage_bits() const {
        return std::uint64_t{cfg_.local_histories} * cfg_.local_history_bits + std::uint64_t{cfg_.local_patterns} * 2 +
               std::uint64_t{cfg_.gshare_entries} * 2 + std::uint64_t{cfg_.gskew_entries} * 2 * 3 + 64;
    }

private:
    static unsigned log2(std::uint32_t n) { return static_cast<unsigned>(std::countr_zero(n)); }
    static std::uint64_t mask(unsigned bits) { return bits >= 64 ? ~0ull : ((1ull << bits) - 1); }

    HmpConfig cfg_;
    std::vector<std::uint16_t> local_hist_;
    std::vector<SaturatingCounter2> local_pht_;
    std::vector<SaturatingCounter2> gshare_;
    std::array<std::vector<SaturatingCounter2>, 3> gskew_;
    std::uint64_t ghist_ = 0;
    TokenStore<Indices> tokens_;
};

} // namespace hermes
