#pragma once

// Offline design-time tooling: beam search over candidate features, and the
// three-stage grid search for POPET's thresholds.

#include "config.hpp"
#include "core.hpp"
#include "metrics.hpp"
#include "popet.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace hermes {

/// A trace plus the per-load off-chip ground truth of one baseline run.
struct LabeledTrace {
    std::string name;
    std::vector<LoadRecord> records;
    std::vector<bool> off_chip;
};

inline LabeledTrace label_trace(std::string name, std::vector<LoadRecord> records, SimConfig cfg = {}) {
    cfg.hermes = HermesMode::Off;
    ConstantPredictor never(false);
    SimOptions opts;
    opts.record_loads = true;
    auto res = simulate(records, cfg, never, opts);
    LabeledTrace lt{std::move(name), std::move(records), {}};
    lt.off_chip.reserve(res.loads.size());
    for (const auto &e : res.loads)
        lt.off_chip.push_back(e.off_chip);
    return lt;
}

struct ReplayScore {
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
    std::optional<double> accuracy() const {
        return tp + fp == 0 ? std::nullopt : std::optional<double>(double(tp) / double(tp + fp));
    }
    std::optional<double> coverage() const {
        return tp + fn == 0 ? std::nullopt : std::optional<double>(double(tp) / double(tp + fn));
    }
};

/// Prediction-only replay: predict each load, then train it immediately with
/// its recorded outcome. No Hermes datapath, no timing.
inline ReplayScore replay(const LabeledTrace &t, const PopetConfig &cfg) {
    Popet p(cfg);
    ReplayScore s;
    for (std::size_t i = 0; i < t.records.size(); ++i) {
        auto tok = p.predict_load(t.records[i]);
        const bool y = t.off_chip[i];
        if (tok.off_chip && y)
            ++s.tp;
        else if (tok.off_chip)
            ++s.fp;
        else if (y)
            ++s.fn;
        else
            ++s.tn;
        p.train_load(tok, y);
    }
    return s;
}

struct FeatureSet {
    std::vector<Feature> features;
    double accuracy = 0.0;

    std::string label() const {
        std::string out;
        for (auto f : features) {
            if (!out.empty())
                out += ' ';
            out += to_string(f);
        }
        return out;
    }
};

/// Perceptron configuration used to score a candidate set: default table
/// sizes and the five-feature thresholds rescaled to the set's size.
inline PopetConfig candidate_config(const std::vector<Feature> &set, PredictorParams base = {}) {
    PopetConfig cfg;
    cfg.features.clear();
    for (auto f : set)
        cfg.features.push_back({f, default_table_size(f)});
    cfg.params = base.scaled_to(set.size());
    return cfg;
}

/// Mean replay accuracy over traces; a trace with no positive predictions scores 0.
inline double mean_accuracy(std::span<const LabeledTrace> traces, const PopetConfig &cfg) {
    double sum = 0.0;
    for (const auto &t : traces)
        sum += replay(t, cfg).accuracy().value_or(0.0);
    return traces.empty() ? 0.0 : sum / static_cast<double>(traces.size());
}

struct SelectionOptions {
    std::size_t beam_width = 10;
    double accuracy_epsilon = 0.03;
    std::size_t max_features = 6;
    std::size_t threads = 0; ///< 0: hardware concurrency
    PredictorParams base_params{};
    std::vector<Feature> candidates = [] {
        constexpr auto all = all_features();
        return std::vector<Feature>(all.begin(), all.end());
    }();
};

struct SelectionResult {
    FeatureSet best;
    std::vector<std::vector<FeatureSet>> iterations; ///< every set scored, ranked, per iteration
};

namespace detail {

/// Evaluates fn(i) for i in [0, n) across worker threads; results by index.
template <typename Fn>
std::vector<double> parallel_scores(std::size_t n, std::size_t threads, Fn fn) {
    std::vector<double> out(n);
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, std::max<std::size_t>(n, 1));
    std::vector<std::future<void>> workers;
    for (std::size_t w = 0; w < threads; ++w)
        workers.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t i = w; i < n; i += threads)
                out[i] = fn(i);
        }));
    for (auto &f : workers)
        f.get();
    return out;
}

inline bool better(const FeatureSet &a, const FeatureSet &b) {
    if (a.accuracy != b.accuracy)
        return a.accuracy > b.accuracy;
    return a.features < b.features;
}

} // namespace detail

inline SelectionResult select_features(std::span<const LabeledTrace> traces, const SelectionOptions &opt = {}) {
    if (traces.empty())
        throw ValidationError("feature selection needs at least one trace");
    if (opt.beam_width == 0)
        throw ValidationError("beam width must be positive");
    if (opt.candidates.empty())
        throw ValidationError("no candidate features");

    SelectionResult res;
    std::vector<std::vector<Feature>> frontier;
    for (auto f : opt.candidates)
        frontier.push_back({f});

    double prev_best = -1.0;
    while (!frontier.empty()) {
        auto scores = detail::parallel_scores(frontier.size(), opt.threads, [&](std::size_t i) {
            return mean_accuracy(traces, candidate_config(frontier[i], opt.base_params));
        });
        std::vector<FeatureSet> ranked;
        for (std::size_t i = 0; i < frontier.size(); ++i)
            ranked.push_back({frontier[i], scores[i]});
        std::sort(ranked.begin(), ranked.end(), detail::better);
        res.iterations.push_back(ranked);

        const FeatureSet &top = ranked.front();
        if (res.best.features.empty() || detail::better(top, res.best))
            res.best = top;
        const bool saturated = prev_best >= 0.0 && top.accuracy - prev_best < opt.accuracy_epsilon;
        prev_best = std::max(prev_best, top.accuracy);
        if (saturated || top.features.size() >= opt.max_features)
            break;

        // Cross the beam with every candidate; sets are kept sorted so that
        // permutations of the same features are evaluated once.
        std::vector<std::vector<Feature>> next;
        const std::size_t keep = std::min(opt.beam_width, ranked.size());
        for (std::size_t b = 0; b < keep; ++b) {
            for (auto f : opt.candidates) {
                const auto &base = ranked[b].features;
                if (std::find(base.begin(), base.end(), f) != base.end())
                    continue;
                auto s = base;
                s.push_back(f);
                std::sort(s.begin(), s.end());
                if (std::find(next.begin(), next.end(), s) == next.end())
                    next.push_back(std::move(s));
            }
        }
        frontier = std::move(next);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Threshold grid search

struct GridSearchResult {
    int best = 0;
    std::vector<std::pair<int, double>> stage2; ///< every grid point on the test traces
    std::vector<std::pair<int, double>> stage3; ///< the kept points on all traces
};

namespace detail {

/// Higher score first; among equal scores the value closest to zero, then the smaller.
inline bool grid_better(const std::pair<int, double> &a, const std::pair<int, double> &b) {
    if (a.second != b.second)
        return a.second > b.second;
    if (std::abs(a.first) != std::abs(b.first))
        return std::abs(a.first) < std::abs(b.first);
    return a.first < b.first;
}

} // namespace detail

/// Samples [lo, hi] at `step`, keeps the `keep` best points under
/// `score_test`, and returns the best of those under `score_all`.
inline GridSearchResult grid_search(int lo, int hi, int step, const std::function<bool(int)> &admissible,
                                    const std::function<double(int)> &score_test,
                                    const std::function<double(int)> &score_all, std::size_t keep = 10) {
    if (step <= 0 || lo > hi)
        throw ValidationError("grid search needs lo <= hi and a positive step");
    GridSearchResult r;
    for (int v = lo; v <= hi; v += step)
        if (!admissible || admissible(v))
            r.stage2.emplace_back(v, score_test(v));
    if (r.stage2.empty())
        throw ValidationError("grid search has no admissible points");
    std::sort(r.stage2.begin(), r.stage2.end(), detail::grid_better);
    const std::size_t n = std::min(keep, r.stage2.size());
    for (std::size_t i = 0; i < n; ++i)
        r.stage3.emplace_back(r.stage2[i].first, score_all(r.stage2[i].first));
    std::sort(r.stage3.begin(), r.stage3.end(), detail::grid_better);
    r.best = r.stage3.front().first;
    return r;
}

enum class Threshold { TauAct, TN, TP };

inline const char *to_string(Threshold t) {
    switch (t) {
    case Threshold::TauAct:
        return "tau_act";
    case Threshold::TN:
        return "t_n";
    case Threshold::TP:
        return "t_p";
    }
    return "?";
}

inline int &threshold_ref(PredictorParams &p, Threshold t) {
    return t == Threshold::TauAct ? p.tau_act : t == Threshold::TN ? p.t_n : p.t_p;
}

/// Geometric-mean speedup of Hermes with `popet` over the no-Hermes baseline.
class SpeedupEvaluator {
public:
    explicit SpeedupEvaluator(RunConfig base) : base_(std::move(base)) {
        base_.predictor.kind = PredictorKind::Popet;
        base_.sim.hermes = HermesMode::On;
    }

    double geomean_speedup(std::span<const LabeledTrace> traces, const PopetConfig &popet, std::size_t threads = 0) {
        std::vector<std::uint64_t> baseline(traces.size());
        for (std::size_t i = 0; i < traces.size(); ++i)
            baseline[i] = baseline_cycles(traces[i]);
        auto cycles = detail::parallel_scores(traces.size(), threads, [&](std::size_t i) {
            Popet p(popet);
            return static_cast<double>(simulate(traces[i].records, base_.sim, p).metrics.total_cycles);
        });
        std::vector<double> s;
        for (std::size_t i = 0; i < traces.size(); ++i)
            s.push_back(static_cast<double>(baseline[i]) / cycles[i]);
        return geomean(s);
    }

private:
    std::uint64_t baseline_cycles(const LabeledTrace &t) {
        if (auto it = cache_.find(t.name); it != cache_.end())
            return it->second;
        SimConfig cfg = base_.sim;
        cfg.hermes = HermesMode::Off;
        ConstantPredictor never(false);
        auto c = simulate(t.records, cfg, never).metrics.total_cycles;
        cache_[t.name] = c;
        return c;
    }

    RunConfig base_;
    std::map<std::string, std::uint64_t> cache_;
};

/// Tunes one threshold with the others held fixed. Grid points that would
/// break t_n < tau_act < t_p are skipped.
inline GridSearchResult tune_thresholds(std::span<const LabeledTrace> test_traces,
                                        std::span<const LabeledTrace> all_traces, const RunConfig &base,
                                        Threshold which, std::size_t threads = 0) {
    if (test_traces.empty() || all_traces.empty())
        throw ValidationError("threshold tuning needs test and evaluation traces");
    SpeedupEvaluator eval(base);
    const auto &popet = base.predictor.popet;
    const int lo = Weight::kMin * static_cast<int>(popet.features.size());
    const int hi = Weight::kMax * static_cast<int>(popet.features.size());
    auto with = [&](int v) {
        PopetConfig c = popet;
        threshold_ref(c.params, which) = v;
        return c;
    };
    auto admissible = [&](int v) {
        try {
            with(v).params.validate(popet.features.size());
            return true;
        } catch (const ValidationError &) {
            return false;
        }
    };
    return grid_search(
        lo, hi, 5, admissible, [&](int v) { return eval.geomean_speedup(test_traces, with(v), threads); },
        [&](int v) { return eval.geomean_speedup(all_traces, with(v), threads); });
}

/// tau_act, then t_n, then t_p, one pass each.
inline PredictorParams tune_all_thresholds(std::span<const LabeledTrace> test_traces,
                                           std::span<const LabeledTrace> all_traces, RunConfig base,
                                           std::size_t threads = 0) {
    for (auto which : {Threshold::TauAct, Threshold::TN, Threshold::TP}) {
        auto r = tune_thresholds(test_traces, all_traces, base, which, threads);
        threshold_ref(base.predictor.popet.params, which) = r.best;
    }
    return base.predictor.popet.params;
}

} // namespace hermes
