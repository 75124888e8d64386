#pragma once

#include "errors.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace hermes {

struct SimMetrics {
    // labels
    std::string trace;
    std::string category;
    std::string config;
    std::string predictor;
    std::string hermes_mode;
    std::uint32_t issue_latency = 0;

    std::uint64_t total_cycles = 0;
    std::uint64_t instructions_retired = 0;
    std::uint64_t loads = 0;
    std::uint64_t off_chip_loads = 0;
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
    std::uint64_t hermes_issued = 0;
    std::uint64_t hermes_coalesced = 0;
    std::uint64_t hermes_matched = 0;
    std::uint64_t hermes_dropped = 0;
    std::uint64_t hermes_unmatched = 0;
    std::uint64_t mem_regular = 0;
    std::uint64_t mem_hermes = 0;
    std::uint64_t mem_prefetch = 0;
    std::uint64_t l1_hits = 0, l2_hits = 0, llc_hits = 0;
    std::uint64_t stall_cycles_off_chip = 0; ///< retirement blocked by an off-chip load
    std::uint64_t stall_cycles_total = 0;    ///< retirement blocked by any load
    std::uint64_t cycles_full_retire = 0;
    std::uint64_t cycles_rob_drained = 0; ///< ROB empty, or emptied before full width

    std::uint64_t mem_requests() const { return mem_regular + mem_hermes + mem_prefetch; }
    std::uint64_t positive_predictions() const { return tp + fp; }
    double ipc() const {
        return total_cycles == 0 ? 0.0 : static_cast<double>(instructions_retired) / static_cast<double>(total_cycles);
    }
};

/// TP / (TP + FP); absent when nothing was predicted off chip.
inline std::optional<double> accuracy(const SimMetrics &m) {
    if (m.tp + m.fp == 0)
        return std::nullopt;
    return static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
}

/// TP / (TP + FN); absent when no load went off chip.
inline std::optional<double> coverage(const SimMetrics &m) {
    if (m.tp + m.fn == 0)
        return std::nullopt;
    return static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
}

/// IPC_x / IPC_baseline. Both runs must cover the same instructions.
inline double speedup(const SimMetrics &x, const SimMetrics &baseline) {
    if (x.instructions_retired != baseline.instructions_retired)
        throw ValidationError("speedup compares runs with different instruction counts");
    if (x.total_cycles == 0 || baseline.total_cycles == 0)
        throw ValidationError("speedup of a zero-cycle run is undefined");
    return static_cast<double>(baseline.total_cycles) / static_cast<double>(x.total_cycles);
}

/// Percentage increase in main-memory requests over the baseline.
inline std::optional<double> memory_overhead(const SimMetrics &x, const SimMetrics &baseline) {
    if (baseline.mem_requests() == 0)
        return std::nullopt;
    const double b = static_cast<double>(baseline.mem_requests());
    return (static_cast<double>(x.mem_requests()) - b) / b * 100.0;
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr int kCsvSchemaVersion = 1;

inline const std::vector<std::string> &csv_columns() {
    static const std::vector<std::string> cols{
        "schema_version", "trace",          "category",        "config",
        "predictor",      "hermes",         "issue_latency",   "total_cycles",
        "instructions",   "loads",          "off_chip_loads",  "tp",
        "fp",             "fn",             "tn",              "hermes_issued",
        "hermes_coalesced", "hermes_matched", "hermes_dropped", "hermes_unmatched",
        "mem_regular",    "mem_hermes",     "mem_prefetch",    "l1_hits",
        "l2_hits",        "llc_hits",       "stall_cycles_off_chip", "stall_cycles_total",
        "cycles_full_retire", "cycles_rob_drained", "ipc",      "accuracy",
        "coverage",
    };
    return cols;
}

namespace detail {

inline std::string csv_escape(const std::string &s) {
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::vector<std::string> csv_split(const std::string &line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt_opt(std::optional<double> v) { return v ? fmt_double(*v) : std::string{}; }

} // namespace detail

inline std::string csv_row(const SimMetrics &m) {
    using detail::csv_escape;
    std::vector<std::string> f{
        std::to_string(kCsvSchemaVersion),
        csv_escape(m.trace),
        csv_escape(m.category),
        csv_escape(m.config),
        csv_escape(m.predictor),
        csv_escape(m.hermes_mode),
        std::to_string(m.issue_latency),
        std::to_string(m.total_cycles),
        std::to_string(m.instructions_retired),
        std::to_string(m.loads),
        std::to_string(m.off_chip_loads),
        std::to_string(m.tp),
        std::to_string(m.fp),
        std::to_string(m.fn),
        std::to_string(m.tn),
        std::to_string(m.hermes_issued),
        std::to_string(m.hermes_coalesced),
        std::to_string(m.hermes_matched),
        std::to_string(m.hermes_dropped),
        std::to_string(m.hermes_unmatched),
        std::to_string(m.mem_regular),
        std::to_string(m.mem_hermes),
        std::to_string(m.mem_prefetch),
        std::to_string(m.l1_hits),
        std::to_string(m.l2_hits),
        std::to_string(m.llc_hits),
        std::to_string(m.stall_cycles_off_chip),
        std::to_string(m.stall_cycles_total),
        std::to_string(m.cycles_full_retire),
        std::to_string(m.cycles_rob_drained),
        detail::fmt_double(m.ipc()),
        detail::fmt_opt(accuracy(m)),
        detail::fmt_opt(coverage(m)),
    };
    std::string out;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (i)
            out += ',';
        out += f[i];
    }
    return out;
}

inline std::string csv_header() {
    std::string out;
    for (const auto &c : csv_columns()) {
        if (!out.empty())
            out += ',';
        out += c;
    }
    return out;
}

inline void write_report(const std::vector<SimMetrics> &runs, const std::filesystem::path &path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << csv_header() << '\n';
    for (const auto &m : runs)
        out << csv_row(m) << '\n';
    if (!out)
        throw std::runtime_error("write failed for " + path.string());
}

/// Parses a file produced by write_report. Derived columns (ipc, accuracy,
/// coverage) are recomputed from the counters rather than read back.
inline std::vector<SimMetrics> read_report(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != csv_header())
        throw FormatError("unexpected CSV header in " + path.string());
    std::vector<SimMetrics> out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty())
            continue;
        auto f = detail::csv_split(line);
        if (f.size() != csv_columns().size())
            throw FormatError("row " + std::to_string(row) + " has " + std::to_string(f.size()) + " columns");
        if (std::stoi(f[0]) != kCsvSchemaVersion)
            throw FormatError("unsupported CSV schema version " + f[0]);
        auto u = [&](std::size_t i) { return static_cast<std::uint64_t>(std::stoull(f[i])); };
        SimMetrics m;
        m.trace = f[1];
        m.category = f[2];
        m.config = f[3];
        m.predictor = f[4];
        m.hermes_mode = f[5];
        m.issue_latency = static_cast<std::uint32_t>(u(6));
        m.total_cycles = u(7);
        m.instructions_retired = u(8);
        m.loads = u(9);
        m.off_chip_loads = u(10);
        m.tp = u(11);
        m.fp = u(12);
        m.fn = u(13);
        m.tn = u(14);
        m.hermes_issued = u(15);
        m.hermes_coalesced = u(16);
        m.hermes_matched = u(17);
        m.hermes_dropped = u(18);
        m.hermes_unmatched = u(19);
        m.mem_regular = u(20);
        m.mem_hermes = u(21);
        m.mem_prefetch = u(22);
        m.l1_hits = u(23);
        m.l2_hits = u(24);
        m.llc_hits = u(25);
        m.stall_cycles_off_chip = u(26);
        m.stall_cycles_total = u(27);
        m.cycles_full_retire = u(28);
        m.cycles_rob_drained = u(29);
        out.push_back(std::move(m));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Roll-up

struct RollupRow {
    std::string config;
    std::string category;
    std::size_t runs = 0;
    std::optional<double> mean_accuracy;
    std::optional<double> mean_coverage;
    std::optional<double> geomean_speedup;
    std::optional<double> mean_memory_overhead;
};

inline double geomean(const std::vector<double> &xs) {
    if (xs.empty())
        throw ValidationError("geometric mean of an empty set");
    double s = 0.0;
    for (double x : xs) {
        if (!(x > 0.0))
            throw ValidationError("geometric mean needs positive values");
        s += std::log(x);
    }
    return std::exp(s / static_cast<double>(xs.size()));
}

/// Groups runs by (config, category) plus an "all" category per config. Rates
/// are averaged arithmetically; speedups against the run of `baseline_config`
/// on the same trace are averaged geometrically.
inline std::vector<RollupRow> rollup(const std::vector<SimMetrics> &runs, const std::string &baseline_config) {
    std::map<std::string, const SimMetrics *> baseline_by_trace;
    for (const auto &m : runs)
        if (m.config == baseline_config)
            baseline_by_trace[m.trace] = &m;

    struct Acc {
        std::size_t n = 0;
        std::vector<double> acc, cov, spd, ovh;
    };
    std::map<std::pair<std::string, std::string>, Acc> groups;
    for (const auto &m : runs) {
        for (const auto &cat : {m.category, std::string("all")}) {
            auto &g = groups[{m.config, cat}];
            ++g.n;
            if (auto a = accuracy(m))
                g.acc.push_back(*a);
            if (auto c = coverage(m))
                g.cov.push_back(*c);
            if (auto it = baseline_by_trace.find(m.trace); it != baseline_by_trace.end()) {
                g.spd.push_back(speedup(m, *it->second));
                if (auto o = memory_overhead(m, *it->second))
                    g.ovh.push_back(*o);
            }
        }
    }
    auto mean = [](const std::vector<double> &v) -> std::optional<double> {
        if (v.empty())
            return std::nullopt;
        double s = 0;
        for (double x : v)
            s += x;
        return s / static_cast<double>(v.size());
    };
    std::vector<RollupRow> out;
    for (const auto &[key, g] : groups) {
        RollupRow r;
        r.config = key.first;
        r.category = key.second;
        r.runs = g.n;
        r.mean_accuracy = mean(g.acc);
        r.mean_coverage = mean(g.cov);
        if (!g.spd.empty())
            r.geomean_speedup = geomean(g.spd);
        r.mean_memory_overhead = mean(g.ovh);
        out.push_back(r);
    }
    return out;
}

inline void write_rollup(const std::vector<RollupRow> &rows, std::ostream &out) {
    out << "schema_version,config,category,runs,mean_accuracy,mean_coverage,geomean_speedup,mean_memory_overhead_pct\n";
    for (const auto &r : rows) {
        out << kCsvSchemaVersion << ',' << detail::csv_escape(r.config) << ',' << detail::csv_escape(r.category) << ','
            << r.runs << ',' << detail::fmt_opt(r.mean_accuracy) << ',' << detail::fmt_opt(r.mean_coverage) << ','
            << detail::fmt_opt(r.geomean_speedup) << ',' << detail::fmt_opt(r.mean_memory_overhead) << '\n';
    }
}

} // namespace hermes
