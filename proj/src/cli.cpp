#include "tsentinel/cli.hpp"

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "tsentinel/classifiers.hpp"
#include "tsentinel/detector.hpp"
#include "tsentinel/eval.hpp"
#include "tsentinel/features.hpp"
#include "tsentinel/synth.hpp"
#include "tsentinel/telemetry.hpp"

namespace tsentinel::cli {

namespace {

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << text;
    if (!out) throw Error("write failed for '" + path + "'");
}

std::string percent(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * x);
    return buf;
}

TelemetryTrace read_concatenated(const std::vector<std::string>& paths) {
    TelemetryTrace all;
    for (const auto& p : paths) all = concatenate(all, read_trace_file(p));
    return all;
}

const CLI::Validator kOddPositive = CLI::Validator(
    [](std::string& s) -> std::string {
        try {
            const long v = std::stol(s);
            if (v <= 0 || v % 2 == 0) return "must be a positive odd integer";
        } catch (const std::exception&) {
            return "must be a positive odd integer";
        }
        return {};
    },
    "ODD", "odd");

const CLI::Validator kFraction = CLI::Validator(
    [](std::string& s) -> std::string {
        try {
            const double v = std::stod(s);
            if (!(v > 0.0 && v <= 1.0)) return "must lie in (0, 1]";
        } catch (const std::exception&) {
            return "must lie in (0, 1]";
        }
        return {};
    },
    "(0,1]", "fraction");

struct SynthArgs {
    std::string scenario;
    std::string scenario_file;
    std::string write_scenario;
    std::uint64_t seed = 0;
    std::string out;
};

struct FeaturesArgs {
    std::vector<std::string> traces;
    double threshold = kDefaultVarianceThreshold;
    std::string pca_out;
};

struct EvalArgs {
    std::vector<std::string> train;
    std::string test;
    std::string features;
    std::size_t k = kDefaultK;
    std::size_t max_depth = 12;
    std::size_t min_samples_split = 2;
    double min_gain = 0.0;
    double threshold = kDefaultVarianceThreshold;
    std::string out;
    std::string save_model;
    std::string classifier = "knn";
};

struct DetectArgs {
    std::string model;
    std::string trace;
    std::size_t window = kDefaultWindow;
    std::string out;
    std::string decisions;
};

struct PlotArgs {
    std::string trace_a;
    std::string trace_b;
    std::string out_dir;
};

LoadModel active_load_model(std::ostream& err) {
    if (const char* path = std::getenv(kLoadModelEnv); path && *path) {
        err << "using load model from " << path << "\n";
        return load_model_from_json(read_text(path));
    }
    return default_load_model();
}

int cmd_synth(const SynthArgs& a, std::ostream& out, std::ostream& err) {
    ScenarioSpec spec;
    std::string name = a.scenario;
    if (!a.scenario_file.empty()) {
        spec = parse_scenario_text(read_text(a.scenario_file));
        name = a.scenario_file;
    } else if (a.scenario == "baseline") {
        spec = baseline_scenario();
    } else if (a.scenario == "attack") {
        spec = attack_scenario();
    } else {
        spec = mixed_scenario(a.seed);
    }
    const auto model = active_load_model(err);
    const auto trace = synthesize(spec, model, a.seed);
    if (!a.write_scenario.empty()) write_text(a.write_scenario, write_scenario_text(spec));
    write_trace_file(a.out, trace);

    std::size_t attacks = 0;
    for (const auto& s : trace.samples()) attacks += s.label == Label::Attack ? 1 : 0;
    out << "scenario " << name << " seed " << a.seed << ": " << trace.size() << " samples written to " << a.out
        << "\n";
    out << "labels: attack " << attacks << ", no_attack " << trace.size() - attacks << "\n";
    return 0;
}

int cmd_features(const FeaturesArgs& a, std::ostream& out) {
    const auto trace = read_concatenated(a.traces);
    const std::vector<Metric> all(kAllMetrics.begin(), kAllMetrics.end());
    const auto raw = to_feature_matrix(trace, all);
    const auto z = standardize(fit_standardizer(raw), raw);
    const auto pca = fit_pca(z);
    const auto ratio = explained_variance_ratio(pca);
    const auto ranking = rank_features(pca, a.threshold);

    out << "samples: " << trace.size() << "\n";
    out << "explained variance ratio:\n";
    double cumulative = 0.0;
    char line[128];
    for (std::size_t k = 0; k < ratio.size(); ++k) {
        cumulative += ratio[k];
        std::snprintf(line, sizeof line, "  PC%-2zu %8.4f  (cumulative %.4f)\n", k + 1, ratio[k], cumulative);
        out << line;
    }
    out << "components used at threshold " << a.threshold << ": " << ranking.components_used << "\n";
    out << "feature ranking:\n";
    for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
        const auto& e = ranking.entries[i];
        std::snprintf(line, sizeof line, "  %zu. %-16s %.6f\n", i + 1, std::string(metric_name(e.feature)).c_str(),
                      e.score);
        out << line;
    }
    out << "selected: " << join_metric_names(select_by_ranking(ranking)) << "\n";
    if (!a.pca_out.empty()) write_text(a.pca_out, pca_to_json(pca) + "\n");
    return 0;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    const auto train = read_concatenated(a.train);
    const auto test = read_trace_file(a.test);
    if (!train.labeled() || !test.labeled()) throw Error("evaluation requires labels");

    std::vector<Metric> features;
    std::string selection = "explicit";
    if (!a.features.empty()) {
        features = parse_metric_list(a.features);
        validate_feature_list(features);
    } else {
        const std::vector<Metric> all(kAllMetrics.begin(), kAllMetrics.end());
        const auto raw = to_feature_matrix(train, all);
        const auto ranking = rank_features(fit_pca(standardize(fit_standardizer(raw), raw)), a.threshold);
        features = select_by_ranking(ranking);
        selection = "pca-ranking threshold=" + format_double(a.threshold) + " score>=0.5*top";
    }

    CartParams params;
    params.max_depth = a.max_depth == 0 ? std::nullopt : std::optional<std::size_t>(a.max_depth);
    params.min_samples_split = a.min_samples_split;
    params.min_gain = a.min_gain;

    auto [report, fitted] = run_fitted_experiment(train, test, features, a.k, params);
    report.feature_selection = selection;
    for (const auto& p : a.train) report.train_sources.push_back({p, std::nullopt});
    report.test_sources.push_back({a.test, std::nullopt});

    out << "features: " << join_metric_names(features) << " (" << selection << ")\n";
    out << format_results_table(report);
    if (!a.out.empty()) write_text(a.out, report_to_json(report));
    if (!a.save_model.empty()) write_bundle_file(a.save_model, a.classifier == "cart" ? fitted.cart : fitted.knn);
    return 0;
}

int cmd_detect(const DetectArgs& a, std::ostream& out) {
    DetectorConfig cfg;
    cfg.window = a.window;
    cfg.model = std::make_shared<const ModelBundle>(read_bundle_file(a.model));
    const auto trace = read_trace_file(a.trace);
    const auto report = detect_events(trace, cfg);

    out << "model: " << model_kind(cfg.model->model) << ", window " << cfg.window << ", " << trace.size()
        << " samples\n";
    out << "events: " << report.events.size() << "\n";
    for (const auto& e : report.events) {
        out << "  attack " << format_double(e.start_t) << "s - " << format_double(e.end_t) << "s\n";
    }
    if (trace.labeled()) {
        out << "ground-truth attack onsets: " << report.onsets.size() << ", missed " << report.missed() << "\n";
        if (const auto mean = report.mean_latency()) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.2f", *mean);
            out << "mean detection latency: " << buf << " samples (" << format_double(*mean * trace.interval())
                << " s)\n";
        }
        const auto& m = *report.metrics;
        out << "sample accuracy " << percent(m.accuracy) << ", precision " << percent(m.macro_precision)
            << ", recall " << percent(m.macro_recall) << ", F1 " << percent(m.macro_f1) << "\n";
    }
    if (!a.out.empty()) write_text(a.out, detection_to_json(report));
    if (!a.decisions.empty()) write_text(a.decisions, decisions_to_csv(report));
    return 0;
}

int cmd_plotdata(const PlotArgs& a, std::ostream& err) {
    const auto ta = read_trace_file(a.trace_a);
    const auto tb = read_trace_file(a.trace_b);
    if (ta.interval() != tb.interval()) {
        throw Error("interval mismatch: " + format_double(ta.interval()) + " vs " + format_double(tb.interval()));
    }
    const std::size_t n = std::min(ta.size(), tb.size());
    if (ta.size() != tb.size()) {
        err << "warning: traces have " << ta.size() << " and " << tb.size() << " samples; truncating to " << n
            << "\n";
    }
    std::filesystem::create_directories(a.out_dir);
    for (auto m : kAllMetrics) {
        std::string csv = "t,scenario_a,scenario_b\n";
        for (std::size_t i = 0; i < n; ++i) {
            csv += format_double(ta[i].t) + "," + format_double(ta[i][m]) + "," + format_double(tb[i][m]) + "\n";
        }
        write_text((std::filesystem::path(a.out_dir) / (std::string(metric_name(m)) + ".csv")).string(), csv);
    }
    return 0;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"tsentinel - DoS detection from cloud resource telemetry"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Synthesize a labeled telemetry trace");
    s->add_option("scenario", synth.scenario, "baseline | attack | mixed")
        ->check(CLI::IsMember({"baseline", "attack", "mixed"}));
    s->add_option("--scenario-file", synth.scenario_file, "Read the scenario from a text file instead")
        ->check(CLI::ExistingFile);
    s->add_option("--write-scenario", synth.write_scenario, "Also write the scenario definition here");
    s->add_option("--seed", synth.seed, "Noise seed; also picks the mixed scenario's segments")->capture_default_str();
    s->add_option("-o,--out", synth.out, "Output trace CSV")->required();

    FeaturesArgs feats;
    auto* f = app.add_subcommand("features", "PCA explained variance and feature relevance ranking");
    f->add_option("traces", feats.traces, "Trace CSV files (concatenated in order)")->required();
    f->add_option("--variance-threshold", feats.threshold, "Explained-variance prefix used for scoring")
        ->check(kFraction)
        ->capture_default_str();
    f->add_option("-o,--out", feats.pca_out, "Write the fitted PCA model as JSON");

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Train kNN and CART, evaluate on a test trace");
    e->add_option("--train", ev.train, "Training trace CSV (repeatable, concatenated)")->required();
    e->add_option("--test", ev.test, "Labeled test trace CSV")->required();
    e->add_option("--features", ev.features, "Comma-separated metrics (default: PCA ranking)");
    e->add_option("--k", ev.k, "kNN neighbours (odd)")->check(kOddPositive)->capture_default_str();
    e->add_option("--max-depth", ev.max_depth, "CART depth limit, 0 = unlimited")->capture_default_str();
    e->add_option("--min-samples-split", ev.min_samples_split, "CART minimum rows to split")
        ->check(CLI::Range(std::size_t{1}, std::numeric_limits<std::size_t>::max()))
        ->capture_default_str();
    e->add_option("--min-gain", ev.min_gain, "CART minimum Gini decrease")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    e->add_option("--variance-threshold", ev.threshold, "Used when --features is omitted")
        ->check(kFraction)
        ->capture_default_str();
    e->add_option("-o,--out", ev.out, "Write the JSON experiment report");
    e->add_option("--save-model", ev.save_model, "Write the trained model for `detect`");
    e->add_option("--classifier", ev.classifier, "Which model --save-model writes")
        ->check(CLI::IsMember({"knn", "cart"}))
        ->capture_default_str();

    DetectArgs det;
    auto* d = app.add_subcommand("detect", "Replay a trace through a trained model");
    d->add_option("--model", det.model, "Model JSON from `eval --save-model`")->required();
    d->add_option("trace", det.trace, "Trace CSV")->required();
    d->add_option("--window", det.window, "Majority-vote window (odd)")->check(kOddPositive)->capture_default_str();
    d->add_option("-o,--out", det.out, "Write the JSON detection report");
    d->add_option("--decisions", det.decisions, "Write t,decision CSV");

    PlotArgs plot;
    auto* p = app.add_subcommand("plot-data", "Per-metric CSVs comparing two traces");
    p->add_option("trace_a", plot.trace_a, "First trace (scenario_a column)")->required();
    p->add_option("trace_b", plot.trace_b, "Second trace (scenario_b column)")->required();
    p->add_option("-o,--out", plot.out_dir, "Output directory")->required();

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
        if (s->parsed() && synth.scenario.empty() == synth.scenario_file.empty()) {
            throw CLI::ValidationError("synth", "give exactly one of a scenario name or --scenario-file");
        }
    } catch (const CLI::ParseError& ex) {
        return app.exit(ex, out, err);
    }

    try {
        if (s->parsed()) return cmd_synth(synth, out, err);
        if (f->parsed()) return cmd_features(feats, out);
        if (e->parsed()) return cmd_eval(ev, out);
        if (d->parsed()) return cmd_detect(det, out);
        if (p->parsed()) return cmd_plotdata(plot, err);
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return 1;
    }
    return 1;
}

} // namespace tsentinel::cli
