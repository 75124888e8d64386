#pragma once

// Retirement-window core model.
//
// Each trace record is `gap` non-memory instructions followed by one load.
// Every cycle the core first delivers fill notifications and trains loads
// whose data has returned, then admits up to `width` instructions into the
// ROB (a load also needs an LQ entry), then retires up to `width`
// instructions in order. Non-memory instructions are ready on admission; a
// load is ready at its hierarchy completion cycle. A load is predicted at LQ
// allocation, and a positive prediction sends a Hermes request that reaches
// the RQ `hermes_issue_latency` cycles after admission.
//
// Every cycle is classified exactly once: full-width retirement, ROB drained
// (it was or became empty before reaching full width), or blocked, in which
// case the cycle is charged to the load at the ROB head.

#include "hierarchy.hpp"
#include "metrics.hpp"
#include "predictor.hpp"
#include "trace.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace hermes {

enum class HermesMode { Off, On, Ideal };

inline const char *to_string(HermesMode m) {
    switch (m) {
    case HermesMode::Off:
        return "off";
    case HermesMode::On:
        return "on";
    case HermesMode::Ideal:
        return "ideal";
    }
    return "?";
}

struct CoreConfig {
    std::uint32_t rob_entries = 512;
    std::uint32_t lq_entries = 128;
    std::uint32_t width = 6;
    std::uint32_t hermes_issue_latency = 6; ///< 6 optimistic, 18 pessimistic

    void validate() const {
        if (rob_entries == 0 || lq_entries == 0 || width == 0)
            throw ValidationError("core sizes must be positive");
        if (lq_entries > rob_entries)
            throw ValidationError("lq_entries must not exceed rob_entries");
    }
};

struct SimConfig {
    HierarchyConfig hierarchy{};
    CoreConfig core{};
    HermesMode hermes = HermesMode::On;
};

/// Ideal Hermes: perfect prediction, zero issue latency and an RQ that never
/// drops, so every off-chip load skips the post-L1 on-chip latency.
inline SimConfig ideal_hermes_mode(SimConfig cfg) {
    cfg.hermes = HermesMode::Ideal;
    cfg.core.hermes_issue_latency = 0;
    cfg.hierarchy.rq_size = 0;
    return cfg;
}

struct LoadEvent {
    std::uint64_t admit_cycle = 0;
    std::uint64_t completion_cycle = 0;
    std::uint64_t retire_cycle = 0;
    std::uint64_t blocked_cycles = 0;
    HitLevel hit_level = HitLevel::L1;
    bool off_chip = false;
    bool predicted = false;
    bool hermes_sent = false; ///< request entered the RQ or coalesced
};

struct SimOptions {
    bool record_loads = false;
    std::string trace_label;
    std::string category;
    std::string config_label;
    /// Invoked after every regular access that filled a cache level.
    std::function<void(const Hierarchy &)> after_regular_fill;
};

struct SimResult {
    SimMetrics metrics;
    std::vector<LoadEvent> loads; ///< filled when SimOptions::record_loads
};

class Simulator {
public:
    Simulator(const SimConfig &cfg, OffChipPredictor &predictor, SimOptions opts = {})
        : cfg_(cfg), opts_(std::move(opts)), hier_(cfg.hierarchy), predictor_(&predictor) {
        cfg_.core.validate();
        if (cfg_.hermes == HermesMode::Ideal)
            predictor_ = &ideal_oracle_;
        if (auto *oracle = dynamic_cast<OraclePredictor *>(predictor_))
            oracle->set_probe([this](std::uint64_t vaddr) { return hier_.would_go_off_chip(vaddr); });

        hier_.on_llc_fill = [this](std::uint64_t line, std::uint64_t ready) {
            fills_.push({ready, fill_seq_++, line});
            ++pending_fill_[line];
        };
        hier_.on_llc_evict = [this](std::uint64_t line) {
            // A line evicted before its fill notification was delivered was
            // filled and evicted back to back: cancel the pair.
            if (auto it = pending_fill_.find(line); it != pending_fill_.end() && it->second > 0) {
                --it->second;
                ++cancelled_fill_[line];
            } else {
                predictor_->on_llc_evict(line);
            }
        };
        if (opts_.after_regular_fill)
            hier_.after_regular_fill = [this] { opts_.after_regular_fill(hier_); };
    }

    const Hierarchy &hierarchy() const { return hier_; }

    /// `next` yields records until exhausted (std::nullopt).
    template <typename Next>
    SimResult run(Next &&next) {
        SimResult res;
        auto &m = res.metrics;
        const auto &core = cfg_.core;
        const std::uint32_t width = core.width;

        std::optional<LoadRecord> cur = next();
        std::uint32_t gap_left = cur ? cur->gap : 0;
        std::uint64_t rob_used = 0, lq_used = 0;
        std::uint64_t t = 0;
        std::uint64_t load_seq = 0;

        while (cur || !rob_.empty()) {
            deliver_fills(t);
            train_completed(t);
            hier_.drain(t);

            // Admission.
            bool admission_stalled = false;
            std::uint32_t budget = width;
            while (budget > 0) {
                if (!cur) {
                    admission_stalled = true;
                    break;
                }
                const std::uint64_t rob_free = core.rob_entries - rob_used;
                if (gap_left > 0) {
                    if (rob_free == 0) {
                        admission_stalled = true;
                        break;
                    }
                    auto k = static_cast<std::uint32_t>(std::min<std::uint64_t>({budget, gap_left, rob_free}));
                    if (!rob_.empty() && !rob_.back().is_load)
                        rob_.back().count += k;
                    else
                        rob_.push_back({false, k, 0, 0, false});
                    rob_used += k;
                    gap_left -= k;
                    budget -= k;
                    continue;
                }
                if (rob_free == 0 || lq_used == core.lq_entries) {
                    admission_stalled = true;
                    break;
                }
                admit_load(*cur, t, load_seq, res);
                ++load_seq;
                ++rob_used;
                ++lq_used;
                --budget;
                m.instructions_retired += std::uint64_t{cur->gap} + 1;
                cur = next();
                gap_left = cur ? cur->gap : 0;
            }

            // Retirement.
            std::uint32_t retired = 0;
            bool blocked = false;
            while (retired < width && !rob_.empty()) {
                auto &head = rob_.front();
                if (!head.is_load) {
                    auto k = std::min<std::uint32_t>(head.count, width - retired);
                    head.count -= k;
                    retired += k;
                    rob_used -= k;
                    if (head.count == 0)
                        rob_.pop_front();
                    continue;
                }
                if (head.ready > t) {
                    blocked = true;
                    break;
                }
                if (opts_.record_loads)
                    res.loads[head.seq].retire_cycle = t;
                rob_.pop_front();
                ++retired;
                --rob_used;
                --lq_used;
            }

            if (retired == width) {
                ++m.cycles_full_retire;
            } else if (blocked) {
                charge_block(rob_.front(), 1, res);
            } else {
                ++m.cycles_rob_drained;
            }
            ++t;

            // Nothing can change until the head load completes.
            if (admission_stalled && !rob_.empty() && rob_.front().is_load && rob_.front().ready > t) {
                charge_block(rob_.front(), rob_.front().ready - t, res);
                t = rob_.front().ready;
            }
        }
        deliver_fills(UINT64_MAX);
        train_completed(UINT64_MAX);
        hier_.drain(UINT64_MAX);

        m.total_cycles = t;
        const auto &hs = hier_.stats();
        m.hermes_issued = hs.hermes_issued;
        m.hermes_coalesced = hs.hermes_coalesced;
        m.hermes_matched = hs.hermes_matched;
        m.hermes_dropped = hs.hermes_dropped;
        m.hermes_unmatched = hs.hermes_unmatched;
        m.mem_regular = hs.mem_regular;
        m.mem_hermes = hs.mem_hermes;
        m.mem_prefetch = hs.mem_prefetch;
        m.l1_hits = hs.l1_hits;
        m.l2_hits = hs.l2_hits;
        m.llc_hits = hs.llc_hits;
        m.trace = opts_.trace_label;
        m.category = opts_.category;
        m.config = opts_.config_label;
        m.predictor = predictor_->name();
        m.hermes_mode = to_string(cfg_.hermes);
        m.issue_latency = cfg_.core.hermes_issue_latency;
        return res;
    }

    SimResult run(std::span<const LoadRecord> trace) {
        std::size_t i = 0;
        return run([&]() -> std::optional<LoadRecord> {
            if (i == trace.size())
                return std::nullopt;
            return trace[i++];
        });
    }

    SimResult run(TraceReader &reader) {
        return run([&]() { return reader.next(); });
    }

private:
    struct RobEntry {
        bool is_load;
        std::uint32_t count; ///< non-memory instructions in this chunk
        std::uint64_t ready;
        std::uint64_t seq;
        bool off_chip;
    };

    struct Training {
        std::uint64_t when;
        std::uint64_t seq;
        PredictionToken token;
        bool off_chip;
        bool operator>(const Training &o) const { return when != o.when ? when > o.when : seq > o.seq; }
    };

    struct FillNote {
        std::uint64_t when;
        std::uint64_t seq;
        std::uint64_t line;
        bool operator>(const FillNote &o) const { return when != o.when ? when > o.when : seq > o.seq; }
    };

    void admit_load(const LoadRecord &r, std::uint64_t t, std::uint64_t seq, SimResult &res) {
        auto &m = res.metrics;
        const PredictionToken token = predictor_->predict_load(r);
        bool sent = false;
        if (token.off_chip && cfg_.hermes != HermesMode::Off)
            sent = hier_.issue_hermes(r.vaddr, t, cfg_.core.hermes_issue_latency).has_value();
        const AccessResult a = hier_.access(r.vaddr, t, r.pc);

        ++m.loads;
        if (a.off_chip)
            ++m.off_chip_loads;
        if (token.off_chip && a.off_chip)
            ++m.tp;
        else if (token.off_chip)
            ++m.fp;
        else if (a.off_chip)
            ++m.fn;
        else
            ++m.tn;

        rob_.push_back({true, 0, a.completion_cycle, seq, a.off_chip});
        trainings_.push({a.completion_cycle, seq, token, a.off_chip});
        if (opts_.record_loads) {
            LoadEvent e;
            e.admit_cycle = t;
            e.completion_cycle = a.completion_cycle;
            e.hit_level = a.hit_level;
            e.off_chip = a.off_chip;
            e.predicted = token.off_chip;
            e.hermes_sent = sent;
            res.loads.push_back(e);
        }
    }

    void charge_block(const RobEntry &head, std::uint64_t cycles, SimResult &res) {
        res.metrics.stall_cycles_total += cycles;
        if (head.off_chip)
            res.metrics.stall_cycles_off_chip += cycles;
        if (opts_.record_loads)
            res.loads[head.seq].blocked_cycles += cycles;
    }

    void train_completed(std::uint64_t t) {
        while (!trainings_.empty() && trainings_.top().when <= t) {
            auto tr = trainings_.top();
            trainings_.pop();
            predictor_->train_load(tr.token, tr.off_chip);
        }
    }

    void deliver_fills(std::uint64_t t) {
        while (!fills_.empty() && fills_.top().when <= t) {
            auto f = fills_.top();
            fills_.pop();
            if (auto it = cancelled_fill_.find(f.line); it != cancelled_fill_.end() && it->second > 0) {
                if (--it->second == 0)
                    cancelled_fill_.erase(it);
                continue;
            }
            if (auto it = pending_fill_.find(f.line); it != pending_fill_.end()) {
                if (--it->second == 0)
                    pending_fill_.erase(it);
            }
            predictor_->on_fill(f.line);
        }
    }

    SimConfig cfg_;
    SimOptions opts_;
    Hierarchy hier_;
    OffChipPredictor *predictor_;
    OraclePredictor ideal_oracle_;
    std::deque<RobEntry> rob_;
    std::priority_queue<Training, std::vector<Training>, std::greater<>> trainings_;
    std::priority_queue<FillNote, std::vector<FillNote>, std::greater<>> fills_;
    std::uint64_t fill_seq_ = 0;
    std::unordered_map<std::uint64_t, std::uint32_t> pending_fill_;
    std::unordered_map<std::uint64_t, std::uint32_t> cancelled_fill_;
};

inline SimResult simulate(std::span<const LoadRecord> trace, const SimConfig &cfg, OffChipPredictor &predictor,
                          SimOptions opts = {}) {
    Simulator sim(cfg, predictor, std::move(opts));
    return sim.run(trace);
}

} // namespace hermes
