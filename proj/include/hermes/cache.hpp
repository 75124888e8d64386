#pragma once

#include "errors.hpp"
#include "trace.hpp"

#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hermes {

struct CacheConfig {
    std::uint64_t capacity_bytes = 0;
    std::uint32_t ways = 1;
    std::uint32_t latency = 1; ///< round-trip cycles
    std::uint32_t mshrs = 16;

    std::uint64_t sets() const { return capacity_bytes / (std::uint64_t{ways} * kLineBytes); }

    void validate(const std::string &name) const {
        if (ways == 0 || capacity_bytes == 0 || capacity_bytes % (std::uint64_t{ways} * kLineBytes) != 0)
            throw ValidationError(name + ": capacity must be a positive multiple of ways x 64");
        if (mshrs == 0)
            throw ValidationError(name + ": MSHR count must be positive");
    }
};

/// Set-associative tag array with true LRU. Each set is kept in recency order,
/// most recent first; the set index is the line address modulo the set count.
class CacheLevel {
public:
    explicit CacheLevel(const CacheConfig &cfg)
        : cfg_(cfg), sets_(cfg.sets()), tags_(cfg.sets()) {
        for (auto &s : tags_)
            s.reserve(cfg.ways);
    }

    const CacheConfig &config() const { return cfg_; }
    std::uint64_t set_count() const { return sets_; }
    std::uint64_t set_of(std::uint64_t line) const { return line % sets_; }

    /// Hit test that promotes the line to MRU.
    bool lookup(std::uint64_t line) {
        auto &set = tags_[set_of(line)];
        for (std::size_t i = 0; i < set.size(); ++i) {
            if (set[i] == line) {
                for (std::size_t j = i; j > 0; --j)
                    set[j] = set[j - 1];
                set[0] = line;
                return true;
            }
        }
        return false;
    }

    bool contains(std::uint64_t line) const {
        for (auto t : tags_[set_of(line)])
            if (t == line)
                return true;
        return false;
    }

    /// Inserts `line` as MRU. Returns the evicted line, if the set was full.
    /// Filling a present line only promotes it.
    std::optional<std::uint64_t> fill(std::uint64_t line) {
        if (lookup(line))
            return std::nullopt;
        auto &set = tags_[set_of(line)];
        std::optional<std::uint64_t> victim;
        if (set.size() == cfg_.ways) {
            victim = set.back();
            set.pop_back();
            ++evictions_;
        }
        set.insert(set.begin(), line);
        ++fills_;
        return victim;
    }

    bool invalidate(std::uint64_t line) {
        auto &set = tags_[set_of(line)];
        for (auto it = set.begin(); it != set.end(); ++it) {
            if (*it == line) {
                set.erase(it);
                return true;
            }
        }
        return false;
    }

    std::uint64_t fills() const { return fills_; }
    std::uint64_t evictions() const { return evictions_; }

    /// Tag contents in recency order, one vector per set.
    const std::vector<std::vector<std::uint64_t>> &sets() const { return tags_; }

    /// FNV-1a over every set's tags in recency order.
    std::uint64_t state_hash() const {
        std::uint64_t h = 0xcbf29ce484222325ull;
        auto mix = [&](std::uint64_t v) {
            for (int i = 0; i < 8; ++i) {
                h ^= (v >> (8 * i)) & 0xFF;
                h *= 0x100000001b3ull;
            }
        };
        for (const auto &set : tags_) {
            mix(set.size());
            for (auto t : set)
                mix(t);
        }
        return h;
    }

private:
    CacheConfig cfg_;
    std::uint64_t sets_;
    std::vector<std::vector<std::uint64_t>> tags_;
    std::uint64_t fills_ = 0;
    std::uint64_t evictions_ = 0;
};

} // namespace hermes
