#pragma once

// Three-level inclusive cache hierarchy, main-memory read queue (RQ) and an
// optional LLC prefetcher.
//
// Timing model. Latencies are round-trip and accumulate down the hierarchy,
// so a load that hits level k completes at cycle + sum(latency[0..k]). An LLC
// miss reaches the memory controller at t_miss = cycle + L1 + L2 + LLC and a
// fresh DRAM read returns the data DRAM cycles later. Data fetched by a Hermes
// request is delivered through the L1 fill port, i.e. at ready + L1.
//
// Tag state changes only on regular accesses and prefetch issue, and only as a
// function of access order. A fill that is still in flight is tracked as a
// pending ready cycle; later loads to that line hit the tags but wait for it.

#include "cache.hpp"
#include "errors.hpp"
#include "trace.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace hermes {

enum class HitLevel { L1, L2, LLC, OffChip };

inline const char *to_string(HitLevel h) {
    switch (h) {
    case HitLevel::L1:
        return "L1";
    case HitLevel::L2:
        return "L2";
    case HitLevel::LLC:
        return "LLC";
    case HitLevel::OffChip:
        return "OffChip";
    }
    return "?";
}

enum class RequestKind { Regular, Hermes, Prefetch };

struct MemoryRequest {
    std::uint64_t id = 0;
    std::uint64_t line = 0;
    RequestKind kind = RequestKind::Regular;
    std::uint64_t issue_cycle = 0; ///< cycle the request entered the RQ
    std::uint64_t ready_cycle = 0;
    bool matched = false; ///< Hermes request claimed by a regular miss
};

struct AccessResult {
    HitLevel hit_level = HitLevel::L1;
    std::uint64_t completion_cycle = 0;
    bool off_chip = false;
    bool hermes_matched = false;
};

enum class PrefetchMode { Off, NextLine, Stride };

struct PrefetcherConfig {
    PrefetchMode mode = PrefetchMode::Off;
    std::uint32_t degree = 1;
};

struct HierarchyConfig {
    // Golden Cove-like defaults: 48KB/1.25MB/3MB, 12/20/12-way, 5/15/55 cycles.
    CacheConfig l1{48 * 1024, 12, 5, 16};
    CacheConfig l2{1280 * 1024, 20, 15, 48};
    CacheConfig llc{3 * 1024 * 1024, 12, 55, 64};
    /// DDR4-3200 tRCD + tCAS + one 64B burst = 27.5 ns, at 4 GHz.
    std::uint32_t dram_latency = 110;
    /// Extra DRAM cycles per request already outstanding in the RQ.
    std::uint32_t dram_queue_penalty = 0;
    /// RQ entries; 0 means unbounded. Only Hermes requests are ever dropped.
    std::uint32_t rq_size = 64;
    PrefetcherConfig prefetcher{};

    std::uint32_t on_chip_latency() const { return l1.latency + l2.latency + llc.latency; }

    void validate() const {
        l1.validate("L1");
        l2.validate("L2");
        llc.validate("LLC");
        if (!(l1.latency < l2.latency && l2.latency < llc.latency))
            throw ValidationError("cache latencies must be strictly increasing L1 < L2 < LLC");
        if (prefetcher.mode != PrefetchMode::Off && prefetcher.degree == 0)
            throw ValidationError("prefetch degree must be positive");
    }
};

struct HierarchyStats {
    std::uint64_t l1_hits = 0;
    std::uint64_t l2_hits = 0;
    std::uint64_t llc_hits = 0;
    std::uint64_t off_chip = 0;
    std::uint64_t mem_regular = 0;  ///< DRAM reads issued by regular misses
    std::uint64_t mem_hermes = 0;   ///< DRAM reads issued by Hermes requests
    std::uint64_t mem_prefetch = 0; ///< DRAM reads issued by the prefetcher
    std::uint64_t hermes_issued = 0;
    std::uint64_t hermes_coalesced = 0;
    std::uint64_t hermes_dropped = 0; ///< RQ full at entry
    std::uint64_t hermes_matched = 0;
    std::uint64_t hermes_unmatched = 0; ///< completed with no waiting regular miss

    std::uint64_t mem_total() const { return mem_regular + mem_hermes + mem_prefetch; }
};

/// Next-line or per-PC stride prefetcher trained on accesses that reach the LLC.
class Prefetcher {
public:
    explicit Prefetcher(PrefetcherConfig cfg = {}) : cfg_(cfg) {}

    const PrefetcherConfig &config() const { return cfg_; }

    /// Candidate lines to prefetch after a demand access to `line` by `pc`.
    std::vector<std::uint64_t> step(std::uint64_t pc, std::uint64_t line) {
        std::vector<std::uint64_t> out;
        switch (cfg_.mode) {
        case PrefetchMode::Off:
            break;
        case PrefetchMode::NextLine:
            for (std::uint32_t k = 1; k <= cfg_.degree; ++k)
                out.push_back(line + k);
            break;
        case PrefetchMode::Stride: {
            auto &e = table_[pc];
            auto stride = static_cast<std::int64_t>(line - e.last_line);
            if (e.valid && stride != 0 && stride == e.stride) {
                e.confident = true;
            } else {
                e.confident = false;
                e.stride = stride;
            }
            e.last_line = line;
            e.valid = true;
            if (e.confident)
                for (std::uint32_t k = 1; k <= cfg_.degree; ++k)
                    out.push_back(line + static_cast<std::uint64_t>(e.stride * static_cast<std::int64_t>(k)));
            break;
        }
        }
        return out;
    }

private:
    struct StrideEntry {
        std::uint64_t last_line = 0;
        std::int64_t stride = 0;
        bool valid = false;
        bool confident = false;
    };
    PrefetcherConfig cfg_;
    std::unordered_map<std::uint64_t, StrideEntry> table_;
};

class Hierarchy {
public:
    /// Called when a line becomes resident on chip (LLC fill), with the cycle
    /// its data arrives.
    std::function<void(std::uint64_t line, std::uint64_t ready_cycle)> on_llc_fill;
    std::function<void(std::uint64_t line)> on_llc_evict;
    /// Called after each regular access that filled at least one level.
    std::function<void()> after_regular_fill;

    explicit Hierarchy(const HierarchyConfig &cfg = {})
        : cfg_((cfg.validate(), cfg)), l1_(cfg.l1), l2_(cfg.l2), llc_(cfg.llc), prefetcher_(cfg.prefetcher) {}

    const HierarchyConfig &config() const { return cfg_; }
    const HierarchyStats &stats() const { return stats_; }
    const CacheLevel &level(HitLevel h) const {
        return h == HitLevel::L1 ? l1_ : h == HitLevel::L2 ? l2_ : llc_;
    }
    const std::vector<MemoryRequest> &read_queue() const { return rq_; }

    std::uint64_t tag_state_hash() const {
        return l1_.state_hash() ^ (l2_.state_hash() * 3) ^ (llc_.state_hash() * 7);
    }

    /// Ground truth without side effects: would a load to `addr` go off chip now?
    bool would_go_off_chip(std::uint64_t addr) const { return !llc_.contains(line_of(addr)); }

    /// Plain tag lookup at one level (promotes on hit).
    bool lookup(HitLevel level, std::uint64_t line_addr) {
        if (line_addr % kLineBytes != 0)
            throw UsageError("lookup expects a line-aligned address");
        auto line = line_of(line_addr);
        switch (level) {
        case HitLevel::L1:
            return l1_.lookup(line);
        case HitLevel::L2:
            return l2_.lookup(line);
        case HitLevel::LLC:
            return llc_.lookup(line);
        case HitLevel::OffChip:
            break;
        }
        return false;
    }

    /// Demand load issued at `cycle` (non-decreasing across calls).
    AccessResult access(std::uint64_t addr, std::uint64_t cycle, std::uint64_t pc = 0) {
        if (cycle < last_cycle_)
            throw UsageError("hierarchy accesses must be issued in non-decreasing cycle order");
        last_cycle_ = cycle;
        drain(cycle);

        const auto line = line_of(addr);
        const auto l1 = cfg_.l1.latency, l2 = cfg_.l2.latency, llc = cfg_.llc.latency;
        AccessResult res;

        if (l1_.lookup(line)) {
            ++stats_.l1_hits;
            res.hit_level = HitLevel::L1;
            res.completion_cycle = with_pending(line, cycle + l1);
            return res;
        }
        if (l2_.lookup(line)) {
            ++stats_.l2_hits;
            res.hit_level = HitLevel::L2;
            res.completion_cycle = with_pending(line, cycle + l1 + l2);
            fill_l1(line);
            notify_fill();
            return res;
        }
        if (llc_.lookup(line)) {
            ++stats_.llc_hits;
            res.hit_level = HitLevel::LLC;
            res.completion_cycle = with_pending(line, cycle + l1 + l2 + llc);
            fill_l2(line);
            fill_l1(line);
            notify_fill();
            run_prefetcher(pc, line, cycle);
            return res;
        }

        ++stats_.off_chip;
        res.hit_level = HitLevel::OffChip;
        res.off_chip = true;
        const std::uint64_t t_miss = cycle + l1 + l2 + llc;
        if (auto *h = find_matchable_hermes(line, t_miss)) {
            h->matched = true;
            ++stats_.hermes_matched;
            res.hermes_matched = true;
            res.completion_cycle = h->ready_cycle + l1;
        } else {
            auto &req = enqueue(line, RequestKind::Regular, t_miss);
            ++stats_.mem_regular;
            res.completion_cycle = req.ready_cycle;
        }
        fill_llc(line, res.completion_cycle);
        fill_l2(line);
        fill_l1(line);
        pending_[line] = res.completion_cycle;
        notify_fill();
        run_prefetcher(pc, line, cycle);
        return res;
    }

    /// Sends a Hermes request for the line containing `addr` straight to the
    /// RQ. Returns nothing when the RQ is full (the request is dropped).
    std::optional<MemoryRequest> issue_hermes(std::uint64_t addr, std::uint64_t cycle,
                                              std::uint32_t issue_latency) {
        const auto line = line_of(addr);
        const std::uint64_t entry = cycle + issue_latency;
        for (const auto &r : rq_) {
            if (r.line == line && r.issue_cycle <= entry && entry < r.ready_cycle) {
                ++stats_.hermes_coalesced;
                return r;
            }
        }
        if (cfg_.rq_size != 0 && occupancy(entry) >= cfg_.rq_size) {
            ++stats_.hermes_dropped;
            return std::nullopt;
        }
        ++stats_.hermes_issued;
        ++stats_.mem_hermes;
        return enqueue(line, RequestKind::Hermes, entry);
    }

    /// Removes a completed Hermes request from the RQ. Unmatched requests are
    /// dropped without touching any cache level.
    void retire_hermes(const MemoryRequest &request, std::uint64_t cycle) {
        if (request.ready_cycle > cycle)
            throw UsageError("Hermes request retired before its ready cycle");
        auto it = std::find_if(rq_.begin(), rq_.end(), [&](const auto &r) { return r.id == request.id; });
        if (it == rq_.end() || it->kind != RequestKind::Hermes)
            throw UsageError("unknown Hermes request");
        if (!it->matched)
            ++stats_.hermes_unmatched;
        rq_.erase(it);
    }

    /// Retires every RQ entry whose data has returned by `cycle`.
    void drain(std::uint64_t cycle) {
        for (std::size_t i = 0; i < rq_.size();) {
            if (rq_[i].ready_cycle <= cycle) {
                if (rq_[i].kind == RequestKind::Hermes && !rq_[i].matched)
                    ++stats_.hermes_unmatched;
                rq_[i] = rq_.back();
                rq_.pop_back();
            } else {
                ++i;
            }
        }
        if (pending_.size() > 8192) {
            std::erase_if(pending_, [&](const auto &kv) { return kv.second <= cycle; });
        }
    }

    /// RQ entries present at `cycle`.
    std::size_t occupancy(std::uint64_t cycle) const {
        return static_cast<std::size_t>(std::count_if(rq_.begin(), rq_.end(), [&](const auto &r) {
            return r.issue_cycle <= cycle && cycle < r.ready_cycle;
        }));
    }

private:
    std::uint64_t with_pending(std::uint64_t line, std::uint64_t t) const {
        auto it = pending_.find(line);
        return it == pending_.end() ? t : std::max(t, it->second);
    }

    // A waiting regular miss claims a Hermes request only if it reaches the RQ
    // while the request is still there and the Hermes data would arrive no
    // later than a fresh DRAM read.
    MemoryRequest *find_matchable_hermes(std::uint64_t line, std::uint64_t t_miss) {
        for (auto &r : rq_) {
            if (r.kind != RequestKind::Hermes || r.matched || r.line != line)
                continue;
            if (r.issue_cycle + cfg_.l1.latency <= t_miss && r.ready_cycle >= t_miss &&
                r.ready_cycle + cfg_.l1.latency <= t_miss + dram_latency_at(t_miss))
                return &r;
        }
        return nullptr;
    }

    std::uint64_t dram_latency_at(std::uint64_t entry) const {
        return cfg_.dram_latency + std::uint64_t{cfg_.dram_queue_penalty} * occupancy(entry);
    }

    MemoryRequest &enqueue(std::uint64_t line, RequestKind kind, std::uint64_t entry) {
        MemoryRequest r;
        r.id = next_id_++;
        r.line = line;
        r.kind = kind;
        r.issue_cycle = entry;
        r.ready_cycle = entry + dram_latency_at(entry);
        rq_.push_back(r);
        return rq_.back();
    }

    void fill_l1(std::uint64_t line) { l1_.fill(line); }

    void fill_l2(std::uint64_t line) {
        if (auto v = l2_.fill(line))
            l1_.invalidate(*v);
    }

    void fill_llc(std::uint64_t line, std::uint64_t ready) {
        if (auto v = llc_.fill(line)) {
            l2_.invalidate(*v);
            l1_.invalidate(*v);
            pending_.erase(*v);
            if (on_llc_evict)
                on_llc_evict(*v);
        }
        if (on_llc_fill)
            on_llc_fill(line, ready);
    }

    void notify_fill() {
        if (after_regular_fill)
            after_regular_fill();
    }

    void run_prefetcher(std::uint64_t pc, std::uint64_t line, std::uint64_t cycle) {
        if (cfg_.prefetcher.mode == PrefetchMode::Off)
            return;
        for (auto target : prefetcher_.step(pc, line)) {
            if (llc_.contains(target))
                continue;
            auto &req = enqueue(target, RequestKind::Prefetch, cycle);
            ++stats_.mem_prefetch;
            pending_[target] = req.ready_cycle;
            fill_llc(target, req.ready_cycle);
        }
    }

    HierarchyConfig cfg_;
    CacheLevel l1_, l2_, llc_;
    Prefetcher prefetcher_;
    std::vector<MemoryRequest> rq_;
    std::unordered_map<std::uint64_t, std::uint64_t> pending_;
    HierarchyStats stats_;
    std::uint64_t next_id_ = 1;
    std::uint64_t last_cycle_ = 0;
};

} // namespace hermes
