#pragma once

// TTP: tracks partial tags of lines believed to be on chip. Fills insert a
// tag, LLC evictions remove one instance of it, and a load whose tag is
// absent is predicted to go off chip. Sets are multisets: equal partial tags
// may coexist, and a full set drops its oldest tag.

#include "errors.hpp"
#include "predictor.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

namespace hermes {

struct TtpConfig {
    /// 1536 KB of 16-bit tags in 8-way sets.
    std::uint64_t sets = 98304;
    std::uint32_t ways = 8;
    /// Partial tag width; 64 keeps the full tag.
    std::uint32_t tag_bits = 16;

    std::uint64_t storage_bits() const { return sets * ways * tag_bits; }
};

class Ttp final : public OffChipPredictor {
public:
    explicit Ttp(TtpConfig cfg = {}) : cfg_(cfg), sets_(cfg.sets) {
        if (cfg.sets == 0 || cfg.ways == 0 || cfg.tag_bits == 0 || cfg.tag_bits > 64)
            throw ValidationError("TTP geometry must be non-empty with 1..64 tag bits");
    }

    std::string name() const override { return "ttp"; }
    const TtpConfig &config() const { return cfg_; }

    std::uint64_t set_of(std::uint64_t line) const { return line % cfg_.sets; }
    std::uint64_t partial_tag(std::uint64_t line) const {
        const std::uint64_t tag = line / cfg_.sets;
        return cfg_.tag_bits >= 64 ? tag : tag & ((1ull << cfg_.tag_bits) - 1);
    }

    void on_fill(std::uint64_t line) override {
        auto &set = sets_[set_of(line)];
        if (set.size() == cfg_.ways)
            set.erase(set.begin());
        set.push_back(partial_tag(line));
    }

    void on_llc_evict(std::uint64_t line) override {
        auto &set = sets_[set_of(line)];
        auto it = std::find(set.begin(), set.end(), partial_tag(line));
        if (it != set.end())
            set.erase(it);
    }

    bool present(std::uint64_t line) const {
        const auto &set = sets_[set_of(line)];
        return std::find(set.begin(), set.end(), partial_tag(line)) != set.end();
    }

    /// Pure lookup: off chip iff the partial tag is absent.
    bool predict(std::uint64_t vaddr) const { return !present(line_of(vaddr)); }

    PredictionToken predict_load(const LoadRecord &load) override { return tokens_.put(predict(load.vaddr), {}); }
    // Maintained by fill/evict hooks only.
    void train_load(const PredictionToken &token, bool) override { tokens_.take(token); }

    std::size_t count(std::uint64_t line) const {
        const auto &set = sets_[set_of(line)];
        return static_cast<std::size_t>(std::count(set.begin(), set.end(), partial_tag(line)));
    }

private:
    TtpConfig cfg_;
    std::vector<std::vector<std::uint64_t>> sets_;
    TokenStore<Empty> tokens_;
};

} // namespace hermes
