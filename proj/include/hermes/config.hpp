#pragma once

// JSON run configuration and predictor construction.
//
// Every key is optional; missing keys keep the built-in defaults. Layout:
//
//   {
//     "hierarchy": {
//       "l1":  {"capacity_bytes": 49152, "ways": 12, "latency": 5,  "mshrs": 16},
//       "l2":  {...}, "llc": {...},
//       "dram_latency": 110, "dram_queue_penalty": 0, "rq_size": 64,
//       "prefetcher": {"mode": "off" | "next-line" | "stride", "degree": 1}
//     },
//     "core": {"rob_entries": 512, "lq_entries": 128, "width": 6, "hermes_issue_latency": 6},
//     "hermes": "off" | "on" | "ideal",
//     "predictor": {
//       "type": "popet" | "hmp" | "ttp" | "oracle" | "never" | "always",
//       "tau_act": -18, "t_n": -35, "t_p": 40,
//       "features": [{"name": "pc^cl_offset", "table_size": 1024}, ...],
//       "hmp": {"local_histories": 512, "local_history_bits": 8, "local_patterns": 2048,
//               "gshare_entries": 8192, "gskew_entries": 4096},
//       "ttp": {"sets": 98304, "ways": 8, "tag_bits": 16}
//     }
//   }

#include "core.hpp"
#include "hmp.hpp"
#include "popet.hpp"
#include "ttp.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

namespace hermes {

enum class PredictorKind { Popet, Hmp, Ttp, Oracle, Never, Always };

inline const char *to_string(PredictorKind k) {
    switch (k) {
    case PredictorKind::Popet:
        return "popet";
    case PredictorKind::Hmp:
        return "hmp";
    case PredictorKind::Ttp:
        return "ttp";
    case PredictorKind::Oracle:
        return "oracle";
    case PredictorKind::Never:
        return "never";
    case PredictorKind::Always:
        return "always";
    }
    return "?";
}

inline PredictorKind predictor_kind_from_string(const std::string &s) {
    for (auto k : {PredictorKind::Popet, PredictorKind::Hmp, PredictorKind::Ttp, PredictorKind::Oracle,
                   PredictorKind::Never, PredictorKind::Always})
        if (s == to_string(k))
            return k;
    throw ValidationError("unknown predictor '" + s + "'");
}

inline HermesMode hermes_mode_from_string(const std::string &s) {
    if (s == "off")
        return HermesMode::Off;
    if (s == "on")
        return HermesMode::On;
    if (s == "ideal")
        return HermesMode::Ideal;
    throw ValidationError("unknown hermes mode '" + s + "'");
}

inline const char *to_string(PrefetchMode m) {
    switch (m) {
    case PrefetchMode::Off:
        return "off";
    case PrefetchMode::NextLine:
        return "next-line";
    case PrefetchMode::Stride:
        return "stride";
    }
    return "?";
}

struct PredictorSpec {
    PredictorKind kind = PredictorKind::Popet;
    PopetConfig popet{};
    HmpConfig hmp{};
    TtpConfig ttp{};
};

struct RunConfig {
    SimConfig sim{};
    PredictorSpec predictor{};
};

inline std::unique_ptr<OffChipPredictor> make_predictor(const PredictorSpec &spec) {
    switch (spec.kind) {
    case PredictorKind::Popet:
        return std::make_unique<Popet>(spec.popet);
    case PredictorKind::Hmp:
        return std::make_unique<Hmp>(spec.hmp);
    case PredictorKind::Ttp:
        return std::make_unique<Ttp>(spec.ttp);
    case PredictorKind::Oracle:
        return std::make_unique<OraclePredictor>();
    case PredictorKind::Never:
        return std::make_unique<ConstantPredictor>(false);
    case PredictorKind::Always:
        return std::make_unique<ConstantPredictor>(true);
    }
    throw ValidationError("unknown predictor kind");
}

namespace detail {

using nlohmann::json;

template <typename T>
void read_opt(const json &j, const char *key, T &out) {
    if (auto it = j.find(key); it != j.end())
        out = it->get<T>();
}

inline void read_cache(const json &j, CacheConfig &c) {
    read_opt(j, "capacity_bytes", c.capacity_bytes);
    read_opt(j, "ways", c.ways);
    read_opt(j, "latency", c.latency);
    read_opt(j, "mshrs", c.mshrs);
}

inline json write_cache(const CacheConfig &c) {
    return {{"capacity_bytes", c.capacity_bytes}, {"ways", c.ways}, {"latency", c.latency}, {"mshrs", c.mshrs}};
}

} // namespace detail

inline RunConfig run_config_from_json(const nlohmann::json &j) {
    using detail::read_opt;
    RunConfig rc;
    try {
        if (auto h = j.find("hierarchy"); h != j.end()) {
            auto &hc = rc.sim.hierarchy;
            if (h->contains("l1"))
                detail::read_cache(h->at("l1"), hc.l1);
            if (h->contains("l2"))
                detail::read_cache(h->at("l2"), hc.l2);
            if (h->contains("llc"))
                detail::read_cache(h->at("llc"), hc.llc);
            read_opt(*h, "dram_latency", hc.dram_latency);
            read_opt(*h, "dram_queue_penalty", hc.dram_queue_penalty);
            read_opt(*h, "rq_size", hc.rq_size);
            if (auto p = h->find("prefetcher"); p != h->end()) {
                std::string mode = "off";
                read_opt(*p, "mode", mode);
                if (mode == "off")
                    hc.prefetcher.mode = PrefetchMode::Off;
                else if (mode == "next-line")
                    hc.prefetcher.mode = PrefetchMode::NextLine;
                else if (mode == "stride")
                    hc.prefetcher.mode = PrefetchMode::Stride;
                else
                    throw ValidationError("unknown prefetcher mode '" + mode + "'");
                read_opt(*p, "degree", hc.prefetcher.degree);
            }
        }
        if (auto c = j.find("core"); c != j.end()) {
            read_opt(*c, "rob_entries", rc.sim.core.rob_entries);
            read_opt(*c, "lq_entries", rc.sim.core.lq_entries);
            read_opt(*c, "width", rc.sim.core.width);
            read_opt(*c, "hermes_issue_latency", rc.sim.core.hermes_issue_latency);
        }
        if (auto m = j.find("hermes"); m != j.end())
            rc.sim.hermes = hermes_mode_from_string(m->get<std::string>());
        if (auto p = j.find("predictor"); p != j.end()) {
            auto &ps = rc.predictor;
            if (auto t = p->find("type"); t != p->end())
                ps.kind = predictor_kind_from_string(t->get<std::string>());
            read_opt(*p, "tau_act", ps.popet.params.tau_act);
            read_opt(*p, "t_n", ps.popet.params.t_n);
            read_opt(*p, "t_p", ps.popet.params.t_p);
            if (auto f = p->find("features"); f != p->end()) {
                ps.popet.features.clear();
                for (const auto &e : *f) {
                    auto name = e.at("name").get<std::string>();
                    auto feat = feature_from_string(name);
                    if (!feat)
                        throw ValidationError("unknown feature '" + name + "'");
                    std::uint32_t size = default_table_size(*feat);
                    read_opt(e, "table_size", size);
                    ps.popet.features.push_back({*feat, size});
                }
            }
            if (auto h = p->find("hmp"); h != p->end()) {
                read_opt(*h, "local_histories", ps.hmp.local_histories);
                read_opt(*h, "local_history_bits", ps.hmp.local_history_bits);
                read_opt(*h, "local_patterns", ps.hmp.local_patterns);
                read_opt(*h, "gshare_entries", ps.hmp.gshare_entries);
                read_opt(*h, "gskew_entries", ps.hmp.gskew_entries);
            }
            if (auto t = p->find("ttp"); t != p->end()) {
                read_opt(*t, "sets", ps.ttp.sets);
                read_opt(*t, "ways", ps.ttp.ways);
                read_opt(*t, "tag_bits", ps.ttp.tag_bits);
            }
        }
    } catch (const nlohmann::json::exception &e) {
        throw ValidationError(std::string("bad config: ") + e.what());
    }
    rc.sim.hierarchy.validate();
    rc.sim.core.validate();
    rc.predictor.popet.params.validate(rc.predictor.popet.features.size());
    return rc;
}

inline nlohmann::json to_json(const RunConfig &rc) {
    const auto &h = rc.sim.hierarchy;
    const auto &p = rc.predictor;
    nlohmann::json features = nlohmann::json::array();
    for (const auto &f : p.popet.features)
        features.push_back({{"name", std::string(to_string(f.feature))}, {"table_size", f.table_size}});
    return {
        {"hierarchy",
         {{"l1", detail::write_cache(h.l1)},
          {"l2", detail::write_cache(h.l2)},
          {"llc", detail::write_cache(h.llc)},
          {"dram_latency", h.dram_latency},
          {"dram_queue_penalty", h.dram_queue_penalty},
          {"rq_size", h.rq_size},
          {"prefetcher", {{"mode", to_string(h.prefetcher.mode)}, {"degree", h.prefetcher.degree}}}}},
        {"core",
         {{"rob_entries", rc.sim.core.rob_entries},
          {"lq_entries", rc.sim.core.lq_entries},
          {"width", rc.sim.core.width},
          {"hermes_issue_latency", rc.sim.core.hermes_issue_latency}}},
        {"hermes", to_string(rc.sim.hermes)},
        {"predictor",
         {{"type", to_string(p.kind)},
          {"tau_act", p.popet.params.tau_act},
          {"t_n", p.popet.params.t_n},
          {"t_p", p.popet.params.t_p},
          {"features", features},
          {"hmp",
           {{"local_histories", p.hmp.local_histories},
            {"local_history_bits", p.hmp.local_history_bits},
            {"local_patterns", p.hmp.local_patterns},
            {"gshare_entries", p.hmp.gshare_entries},
            {"gskew_entries", p.hmp.gskew_entries}}},
          {"ttp", {{"sets", p.ttp.sets}, {"ways", p.ttp.ways}, {"tag_bits", p.ttp.tag_bits}}}}},
    };
}

inline RunConfig load_run_config(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception &e) {
        throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return run_config_from_json(j);
}

inline void save_run_config(const RunConfig &rc, const std::filesystem::path &path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << to_json(rc).dump(2) << '\n';
}

/// Runs `trace` under `rc`, building a fresh predictor. Ideal mode also
/// forces zero issue latency and an unbounded RQ.
inline SimResult run(std::span<const LoadRecord> trace, const RunConfig &rc, SimOptions opts = {}) {
    auto pred = make_predictor(rc.predictor);
    const SimConfig sim = rc.sim.hermes == HermesMode::Ideal ? ideal_hermes_mode(rc.sim) : rc.sim;
    return simulate(trace, sim, *pred, std::move(opts));
}

} // namespace hermes
