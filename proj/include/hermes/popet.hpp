#pragma once

// POPET: hashed-perceptron off-chip load predictor.
//
// One weight table per feature, 5-bit saturating signed weights. A load is
// predicted to go off chip when the sum of its indexed weights exceeds the
// activation threshold. Training nudges every indexed weight by one toward
// the true outcome, but only while the stored sum lies within [T_N, T_P].

#include "errors.hpp"
#include "features.hpp"
#include "predictor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace hermes {

/// 5-bit saturating signed weight in [-16, +15].
class Weight {
public:
    static constexpr int kMin = -16;
    static constexpr int kMax = 15;

    constexpr Weight() = default;
    constexpr explicit Weight(int v) : v_(static_cast<std::int8_t>(std::clamp(v, kMin, kMax))) {}
    constexpr int value() const { return v_; }
    constexpr void increment() {
        if (v_ < kMax)
            ++v_;
    }
    constexpr void decrement() {
        if (v_ > kMin)
            --v_;
    }
    friend constexpr bool operator==(Weight, Weight) = default;

private:
    std::int8_t v_ = 0;
};

struct WeightTable {
    Feature feature;
    std::vector<Weight> entries;

    WeightTable(Feature f, std::uint32_t size) : feature(f), entries(size) {
        if (size < 2 || !std::has_single_bit(size))
            throw ValidationError("weight table size must be a power of two >= 2");
    }
    std::uint32_t size() const { return static_cast<std::uint32_t>(entries.size()); }
    friend bool operator==(const WeightTable &, const WeightTable &) = default;
};

struct PredictorParams {
    int tau_act = -18;
    int t_n = -35;
    int t_p = 40;

    /// Thresholds must satisfy t_n < tau_act < t_p inside the reachable sum
    /// range [-16n, 15n] of an n-feature perceptron.
    void validate(std::size_t feature_count = 5) const {
        const int lo = Weight::kMin * static_cast<int>(feature_count);
        const int hi = Weight::kMax * static_cast<int>(feature_count);
        if (!(t_n < tau_act && tau_act < t_p))
            throw ValidationError("thresholds must satisfy t_n < tau_act < t_p");
        if (t_n < lo || t_p > hi)
            throw ValidationError("thresholds must lie within [" + std::to_string(lo) + ", " + std::to_string(hi) +
                                  "]");
    }

    /// Rescales five-feature thresholds to an n-feature perceptron.
    PredictorParams scaled_to(std::size_t feature_count) const {
        auto s = [&](int v) { return static_cast<int>(std::lround(v * static_cast<double>(feature_count) / 5.0)); };
        PredictorParams p{s(tau_act), s(t_n), s(t_p)};
        // Rounding can collapse neighbours on tiny feature counts.
        if (p.tau_act <= p.t_n)
            p.t_n = p.tau_act - 1;
        if (p.t_p <= p.tau_act)
            p.t_p = p.tau_act + 1;
        return p;
    }

    friend bool operator==(const PredictorParams &, const PredictorParams &) = default;
};

struct FeatureVector {
    std::vector<std::uint32_t> indices; ///< one per weight table
    bool first_access = false;
    std::uint64_t pc = 0;
    std::uint64_t vaddr = 0;
    std::uint64_t last4_load_pcs = 0;
    friend bool operator==(const FeatureVector &, const FeatureVector &) = default;
};

struct LqMetadata {
    FeatureVector features;
    int w_sigma = 0;
    bool predicted = false;
};

struct PopetConfig {
    std::vector<FeatureSpec> features = default_feature_specs();
    PredictorParams params{};
};

/// Computes table indices for `specs`. Updates the page buffer; the PC
/// histories are left for the caller to commit.
inline FeatureVector extract_features(const std::vector<FeatureSpec> &specs, const LoadRecord &load,
                                      FeatureHistory &history) {
    const FeatureContext ctx = make_context(history, load);
    FeatureVector fv;
    fv.indices.reserve(specs.size());
    for (const auto &s : specs)
        fv.indices.push_back(feature_index(s.feature, ctx, s.table_size));
    fv.first_access = ctx.first_access;
    fv.pc = ctx.pc;
    fv.vaddr = ctx.vaddr;
    fv.last4_load_pcs = ctx.last4_load_pcs;
    return fv;
}

class Popet final : public OffChipPredictor {
public:
    explicit Popet(PopetConfig cfg = {}) : cfg_(std::move(cfg)) {
        if (cfg_.features.empty())
            throw ValidationError("POPET needs at least one feature");
        cfg_.params.validate(cfg_.features.size());
        for (const auto &s : cfg_.features)
            tables_.emplace_back(s.feature, s.table_size);
    }

    std::string name() const override { return "popet"; }
    const PopetConfig &config() const { return cfg_; }
    const PredictorParams &params() const { return cfg_.params; }
    const std::vector<WeightTable> &tables() const { return tables_; }
    std::vector<WeightTable> &tables() { return tables_; }
    FeatureHistory &history() { return history_; }
    const FeatureHistory &history() const { return history_; }

    FeatureVector extract(const LoadRecord &load) { return extract_features(cfg_.features, load, history_); }

    struct Decision {
        bool off_chip;
        int w_sigma;
    };

    Decision predict(const FeatureVector &fv) const {
        int sum = 0;
        for (std::size_t i = 0; i < tables_.size(); ++i)
            sum += tables_[i].entries[fv.indices.at(i)].value();
        return {sum > cfg_.params.tau_act, sum};
    }

    void train(const LqMetadata &meta, bool went_off_chip) {
        if (meta.features.indices.size() != tables_.size())
            throw UsageError("LQ metadata does not match this predictor's tables");
        if (meta.w_sigma < cfg_.params.t_n || meta.w_sigma > cfg_.params.t_p)
            return;
        for (std::size_t i = 0; i < tables_.size(); ++i) {
            auto &w = tables_[i].entries.at(meta.features.indices[i]);
            if (went_off_chip)
                w.increment();
            else
                w.decrement();
        }
    }

    PredictionToken predict_load(const LoadRecord &load) override {
        LqMetadata meta;
        meta.features = extract(load);
        commit(history_, load);
        auto d = predict(meta.features);
        meta.w_sigma = d.w_sigma;
        meta.predicted = d.off_chip;
        return tokens_.put(d.off_chip, std::move(meta));
    }

    void train_load(const PredictionToken &token, bool went_off_chip) override {
        train(tokens_.take(token), went_off_chip);
    }

    std::size_t outstanding() const { return tokens_.outstanding(); }

    // -- state blob ---------------------------------------------------------
    // "POPETST1" | u32 version | i32 tau,t_n,t_p | u32 tables |
    //   per table: u8 feature, u32 size, i8 weights[size] |
    //   u64 load history[4] | u64 instruction history[4] |
    //   u32 page entries | per entry: u64 page, u64 bitmap

    static constexpr std::uint32_t kStateVersion = 1;

    std::string dump_state() const {
        std::string out("POPETST1");
        detail::put_le<std::uint32_t>(out, kStateVersion);
        detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(cfg_.params.tau_act));
        detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(cfg_.params.t_n));
        detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(cfg_.params.t_p));
        detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tables_.size()));
        for (const auto &t : tables_) {
            detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(t.feature));
            detail::put_le<std::uint32_t>(out, t.size());
            for (auto w : t.entries)
                out.push_back(static_cast<char>(static_cast<std::int8_t>(w.value())));
        }
        for (auto pc : history_.loads.pcs())
            detail::put_le<std::uint64_t>(out, pc);
        for (auto pc : history_.instructions.pcs())
            detail::put_le<std::uint64_t>(out, pc);
        detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(history_.pages.entries().size()));
        for (const auto &e : history_.pages.entries()) {
            detail::put_le<std::uint64_t>(out, e.page);
            detail::put_le<std::uint64_t>(out, e.bitmap);
        }
        return out;
    }

    static Popet load_state(const std::string &blob) {
        std::size_t pos = 0;
        auto need = [&](std::size_t n) {
            if (pos + n > blob.size())
                throw IntegrityError("truncated POPET state", blob.size());
        };
        auto p = [&]() { return reinterpret_cast<const unsigned char *>(blob.data() + pos); };
        need(8);
        if (blob.compare(0, 8, "POPETST1") != 0)
            throw FormatError("bad POPET state magic");
        pos = 8;
        need(20);
        if (detail::get_le<std::uint32_t>(p()) != kStateVersion)
            throw FormatError("unsupported POPET state version");
        PopetConfig cfg;
        cfg.params.tau_act = static_cast<std::int32_t>(detail::get_le<std::uint32_t>(p() + 4));
        cfg.params.t_n = static_cast<std::int32_t>(detail::get_le<std::uint32_t>(p() + 8));
        cfg.params.t_p = static_cast<std::int32_t>(detail::get_le<std::uint32_t>(p() + 12));
        auto ntables = detail::get_le<std::uint32_t>(p() + 16);
        pos += 20;
        cfg.features.clear();
        std::vector<std::vector<Weight>> weights;
        for (std::uint32_t i = 0; i < ntables; ++i) {
            need(5);
            auto f = p()[0];
            auto size = detail::get_le<std::uint32_t>(p() + 1);
            pos += 5;
            if (f >= kFeatureCount)
                throw FormatError("unknown feature id in POPET state");
            need(size);
            cfg.features.push_back({static_cast<Feature>(f), size});
            std::vector<Weight> w(size);
            for (std::uint32_t k = 0; k < size; ++k)
                w[k] = Weight(static_cast<std::int8_t>(blob[pos + k]));
            pos += size;
            weights.push_back(std::move(w));
        }
        Popet out(cfg);
        for (std::size_t i = 0; i < weights.size(); ++i)
            out.tables_[i].entries = std::move(weights[i]);
        need(64 + 4);
        LoadHistory loads, instrs;
        std::array<std::uint64_t, 4> a{}, b{};
        for (int i = 0; i < 4; ++i)
            a[i] = detail::get_le<std::uint64_t>(p() + 8 * i);
        for (int i = 0; i < 4; ++i)
            b[i] = detail::get_le<std::uint64_t>(p() + 32 + 8 * i);
        for (int i = 3; i >= 0; --i) {
            loads.push(a[i]);
            instrs.push(b[i]);
        }
        out.history_.loads = loads;
        out.history_.instructions = instrs;
        pos += 64;
        auto npages = detail::get_le<std::uint32_t>(p());
        pos += 4;
        need(std::size_t{npages} * 16);
        std::vector<PageBuffer::Entry> entries;
        for (std::uint32_t i = 0; i < npages; ++i, pos += 16)
            entries.push_back({detail::get_le<std::uint64_t>(p()), detail::get_le<std::uint64_t>(p() + 8)});
        out.history_.pages.restore(std::move(entries));
        if (pos != blob.size())
            throw IntegrityError("trailing bytes in POPET state", pos);
        return out;
    }

    /// Storage in bits: weight tables plus the page buffer (tag + bitmap).
    std::uint64_t storage_bits() const {
        std::uint64_t bits = 0;
        for (const auto &t : tables_)
            bits += std::uint64_t{t.size()} * 5;
        return bits + PageBuffer::kEntries * 80;
    }

private:
    PopetConfig cfg_;
    std::vector<WeightTable> tables_;
    FeatureHistory history_;
    TokenStore<LqMetadata> tokens_;
};

} // namespace hermes
