// hermes_sim: trace generation, simulation, reporting and tuning.

#include <hermes/hermes.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

using namespace hermes;
namespace fs = std::filesystem;

namespace {

std::vector<LabeledTrace> load_labeled(const std::vector<std::string> &paths, const SimConfig &sim) {
    std::vector<LabeledTrace> out;
    for (const auto &p : paths) {
        std::cerr << "labeling " << p << "\n";
        out.push_back(label_trace(fs::path(p).stem().string(), read_trace(p), sim));
    }
    return out;
}

std::ofstream open_out(const std::string &path) {
    std::ofstream out(path);
    if (!out)
        throw ValidationError("cannot write " + path);
    return out;
}

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
    std::string out;
    std::uint64_t seed = 1;
    std::uint32_t gap = 0;
    std::uint64_t passes = 1;
    std::uint64_t bytes = 1 << 20;
    std::uint32_t element = 4;
    std::uint64_t nodes = 0;
    std::uint64_t records = 1'000'000;
    std::string suite = "mixed";
};

std::uint16_t checked_gap(std::uint32_t g) {
    if (g > 0xFFFF)
        throw ValidationError("gap must fit in 16 bits");
    return static_cast<std::uint16_t>(g);
}

void add_gen(CLI::App &app) {
    auto args = std::make_shared<GenArgs>();
    auto *gen = app.add_subcommand("gen", "Generate synthetic traces");
    gen->require_subcommand(1);

    auto common = [&](CLI::App *c, bool out_dir) {
        c->add_option("--seed", args->seed, "RNG seed");
        if (out_dir)
            c->add_option("--out-dir", args->out, "Directory for the generated traces")->required();
        else
            c->add_option("--out", args->out, "Output trace file")->required();
    };

    auto *stream = gen->add_subcommand("stream", "Sequential sweep over an array");
    common(stream, false);
    stream->add_option("--array-bytes", args->bytes)->capture_default_str();
    stream->add_option("--element-size", args->element)->capture_default_str();
    stream->add_option("--passes", args->passes)->capture_default_str();
    stream->add_option("--gap", args->gap)->capture_default_str();
    stream->callback([args] {
        // Streams are fully determined by their shape; --seed is accepted for uniformity.
        auto t = gen_stream(args->bytes, args->element, args->passes, checked_gap(args->gap));
        write_trace(args->out, t, "stream");
        std::cout << "wrote " << t.size() << " records to " << args->out << "\n";
    });

    auto *chase = gen->add_subcommand("chase", "Pointer chase over a random permutation");
    common(chase, false);
    chase->add_option("--working-set", args->bytes)->capture_default_str();
    chase->add_option("--nodes", args->nodes, "Node count (default: one per line)");
    chase->add_option("--passes", args->passes)->capture_default_str();
    chase->add_option("--gap", args->gap)->capture_default_str();
    chase->callback([args] {
        const auto nodes = args->nodes ? args->nodes : args->bytes / kLineBytes;
        auto t = gen_pointer_chase(args->bytes, nodes, args->seed, checked_gap(args->gap), args->passes);
        write_trace(args->out, t, "chase");
        std::cout << "wrote " << t.size() << " records to " << args->out << "\n";
    });

    auto *random = gen->add_subcommand("random", "Uniform random lines in a working set");
    common(random, false);
    random->add_option("--working-set", args->bytes)->capture_default_str();
    random->add_option("--records", args->records)->capture_default_str();
    random->add_option("--gap", args->gap)->capture_default_str();
    random->callback([args] {
        RandomSource src(RandomParams{args->bytes, args->seed, checked_gap(args->gap)});
        auto t = take(src, args->records);
        write_trace(args->out, t, "random");
        std::cout << "wrote " << t.size() << " records to " << args->out << "\n";
    });

    auto *suite = gen->add_subcommand("suite", "Built-in workload suites");
    common(suite, true);
    suite->add_option("--name", args->suite, "mixed or off-chip")
        ->check(CLI::IsMember({"mixed", "off-chip"}))
        ->capture_default_str();
    suite->add_option("--records", args->records, "Records per mixed trace")->capture_default_str();
    suite->callback([args] {
        auto traces = args->suite == "mixed" ? workloads::mixed_suite(args->records)
                                             : workloads::off_chip_heavy_suite();
        fs::create_directories(args->out);
        for (const auto &t : traces) {
            auto path = fs::path(args->out) / (t.name + ".trc");
            write_trace(path, t.records, t.category + ":" + t.name);
            std::cout << "wrote " << t.records.size() << " records to " << path.string() << "\n";
        }
    });
}

// ---------------------------------------------------------------------------
// run

struct RunArgs {
    std::vector<std::string> traces;
    std::string config, predictor, hermes, out = "metrics.csv", category = "unknown", label;
    std::optional<std::uint32_t> issue_latency;
};

void add_run(CLI::App &app) {
    auto args = std::make_shared<RunArgs>();
    auto *run_cmd = app.add_subcommand("run", "Simulate traces and write per-run metrics");
    run_cmd->add_option("--trace", args->traces, "Trace file(s)")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--config", args->config, "JSON run configuration")->check(CLI::ExistingFile);
    run_cmd->add_option("--predictor", args->predictor, "popet, hmp, ttp, oracle, never or always");
    run_cmd->add_option("--hermes", args->hermes, "Hermes mode")->check(CLI::IsMember({"off", "on", "ideal"}));
    run_cmd->add_option("--issue-latency", args->issue_latency, "Hermes issue latency in cycles");
    run_cmd->add_option("--out", args->out, "Metrics CSV")->capture_default_str();
    run_cmd->add_option("--category", args->category, "Category column")->capture_default_str();
    run_cmd->add_option("--label", args->label, "Config column (default: predictor/hermes mode)");
    run_cmd->callback([args] {
        RunConfig rc = args->config.empty() ? RunConfig{} : load_run_config(args->config);
        if (!args->predictor.empty())
            rc.predictor.kind = predictor_kind_from_string(args->predictor);
        if (!args->hermes.empty())
            rc.sim.hermes = hermes_mode_from_string(args->hermes);
        if (args->issue_latency)
            rc.sim.core.hermes_issue_latency = *args->issue_latency;
        std::vector<SimMetrics> rows;
        for (const auto &path : args->traces) {
            SimOptions opts;
            opts.trace_label = fs::path(path).stem().string();
            opts.category = args->category;
            opts.config_label = args->label.empty()
                                    ? std::string(to_string(rc.predictor.kind)) + "/" + to_string(rc.sim.hermes)
                                    : args->label;
            auto m = run(read_trace(path), rc, opts).metrics;
            std::printf("%-24s ipc %.4f  accuracy %s  coverage %s\n", opts.trace_label.c_str(), m.ipc(),
                        detail::fmt_opt(accuracy(m)).c_str(), detail::fmt_opt(coverage(m)).c_str());
            rows.push_back(std::move(m));
        }
        write_report(rows, args->out);
    });
}

// ---------------------------------------------------------------------------
// report

void add_report(CLI::App &app) {
    struct Args {
        std::vector<std::string> inputs;
        std::string baseline = "never/off", out;
    };
    auto args = std::make_shared<Args>();
    auto *rep = app.add_subcommand("report", "Aggregate metric CSVs per config and category");
    rep->add_option("inputs", args->inputs, "Metric CSV files")->required()->check(CLI::ExistingFile);
    rep->add_option("--baseline", args->baseline, "Config label used as the speedup baseline")
        ->capture_default_str();
    rep->add_option("--out", args->out, "Roll-up CSV (default: stdout)");
    rep->callback([args] {
        std::vector<SimMetrics> runs;
        for (const auto &p : args->inputs) {
            auto r = read_report(p);
            runs.insert(runs.end(), r.begin(), r.end());
        }
        auto rows = rollup(runs, args->baseline);
        if (args->out.empty()) {
            write_rollup(rows, std::cout);
        } else {
            auto out = open_out(args->out);
            write_rollup(rows, out);
        }
    });
}

// ---------------------------------------------------------------------------
// select-features

void add_select(CLI::App &app) {
    struct Args {
        std::vector<std::string> traces;
        std::string config, out = "features.csv", config_out = "selected.json";
        SelectionOptions opt;
    };
    auto args = std::make_shared<Args>();
    auto *sel = app.add_subcommand("select-features", "Beam search over program features");
    sel->add_option("--trace", args->traces, "Trace file(s)")->required()->check(CLI::ExistingFile);
    sel->add_option("--config", args->config, "Base run configuration")->check(CLI::ExistingFile);
    sel->add_option("--beam-width", args->opt.beam_width)->capture_default_str();
    sel->add_option("--epsilon", args->opt.accuracy_epsilon, "Stop when accuracy gains fall below this")
        ->capture_default_str();
    sel->add_option("--max-features", args->opt.max_features)->capture_default_str();
    sel->add_option("--threads", args->opt.threads, "0 uses every hardware thread")->capture_default_str();
    sel->add_option("--out", args->out, "Every scored set, per iteration")->capture_default_str();
    sel->add_option("--config-out", args->config_out, "Winning configuration")->capture_default_str();
    sel->callback([args] {
        RunConfig rc = args->config.empty() ? RunConfig{} : load_run_config(args->config);
        auto traces = load_labeled(args->traces, rc.sim);
        // Candidates rescale five-feature thresholds; other configs fall back to the defaults.
        if (rc.predictor.popet.features.size() == 5)
            args->opt.base_params = rc.predictor.popet.params;
        auto res = select_features(traces, args->opt);

        auto out = open_out(args->out);
        out << "iteration,rank,features,accuracy\n";
        for (std::size_t i = 0; i < res.iterations.size(); ++i)
            for (std::size_t k = 0; k < res.iterations[i].size(); ++k)
                out << i + 1 << ',' << k + 1 << ',' << detail::csv_escape(res.iterations[i][k].label()) << ','
                    << detail::fmt_double(res.iterations[i][k].accuracy) << '\n';

        rc.predictor.kind = PredictorKind::Popet;
        rc.predictor.popet = candidate_config(res.best.features, args->opt.base_params);
        save_run_config(rc, args->config_out);
        std::cout << "best: {" << res.best.label() << "} accuracy " << res.best.accuracy << "\n";
    });
}

// ---------------------------------------------------------------------------
// tune

void add_tune(CLI::App &app) {
    struct Args {
        std::vector<std::string> test, all;
        std::string config, out = "thresholds.csv", config_out = "tuned.json";
        std::size_t threads = 0;
    };
    auto args = std::make_shared<Args>();
    auto *tune = app.add_subcommand("tune", "Grid search over the perceptron thresholds");
    tune->add_option("--test", args->test, "Traces used for the coarse sweep")->required()->check(CLI::ExistingFile);
    tune->add_option("--trace", args->all, "Traces used to pick among the finalists (default: --test)")
        ->check(CLI::ExistingFile);
    tune->add_option("--config", args->config, "Configuration to tune")->check(CLI::ExistingFile);
    tune->add_option("--threads", args->threads)->capture_default_str();
    tune->add_option("--out", args->out, "Every scored grid point")->capture_default_str();
    tune->add_option("--config-out", args->config_out, "Tuned configuration")->capture_default_str();
    tune->callback([args] {
        RunConfig rc = args->config.empty() ? RunConfig{} : load_run_config(args->config);
        auto test = load_labeled(args->test, rc.sim);
        auto all = args->all.empty() ? test : load_labeled(args->all, rc.sim);

        auto out = open_out(args->out);
        out << "threshold,stage,value,geomean_speedup\n";
        for (auto which : {Threshold::TauAct, Threshold::TN, Threshold::TP}) {
            auto r = tune_thresholds(test, all, rc, which, args->threads);
            for (const auto &[v, s] : r.stage2)
                out << to_string(which) << ",test," << v << ',' << detail::fmt_double(s) << '\n';
            for (const auto &[v, s] : r.stage3)
                out << to_string(which) << ",all," << v << ',' << detail::fmt_double(s) << '\n';
            threshold_ref(rc.predictor.popet.params, which) = r.best;
            std::cout << to_string(which) << " = " << r.best << "\n";
        }
        rc.predictor.kind = PredictorKind::Popet;
        save_run_config(rc, args->config_out);
    });
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Trace-driven off-chip load prediction simulator"};
    app.require_subcommand(1);
    add_gen(app);
    add_run(app);
    add_report(app);
    add_select(app);
    add_tune(app);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
