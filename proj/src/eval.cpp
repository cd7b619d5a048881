#include "tsentinel/eval.hpp"

#include <cstdio>

#include <json.hpp>

#include "tsentinel/features.hpp"

namespace tsentinel {

namespace {

double ratio_or_convention(std::size_t num, std::size_t den, bool vacuous) {
    if (den == 0) return vacuous ? 1.0 : 0.0;
    return static_cast<double>(num) / static_cast<double>(den);
}

ClassMetrics class_metrics(std::size_t tp, std::size_t fp, std::size_t fn) {
    ClassMetrics m;
    const bool no_members = tp + fn == 0;
    const bool no_predictions = tp + fp == 0;
    m.precision = ratio_or_convention(tp, tp + fp, no_members && no_predictions);
    m.recall = ratio_or_convention(tp, tp + fn, no_members && no_predictions);
    const double sum = m.precision + m.recall;
    m.f1 = sum > 0.0 ? 2.0 * m.precision * m.recall / sum : 0.0;
    return m;
}

nlohmann::json class_json(const ClassMetrics& m) {
    return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

ClassMetrics class_from(const nlohmann::json& j) {
    return {j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>()};
}

nlohmann::json metrics_json(const MetricsReport& m) {
    return {
        {"accuracy", m.accuracy},
        {"attack", class_json(m.attack)},
        {"no_attack", class_json(m.benign)},
        {"macro_precision", m.macro_precision},
        {"macro_recall", m.macro_recall},
        {"macro_f1", m.macro_f1},
    };
}

MetricsReport metrics_from(const nlohmann::json& j) {
    MetricsReport m;
    m.accuracy = j.at("accuracy").get<double>();
    m.attack = class_from(j.at("attack"));
    m.benign = class_from(j.at("no_attack"));
    m.macro_precision = j.at("macro_precision").get<double>();
    m.macro_recall = j.at("macro_recall").get<double>();
    m.macro_f1 = j.at("macro_f1").get<double>();
    return m;
}

nlohmann::json sources_json(const std::vector<TraceSource>& sources) {
    auto arr = nlohmann::json::array();
    for (const auto& s : sources) {
        nlohmann::json j{{"source", s.description}};
        j["seed"] = s.seed ? nlohmann::json(*s.seed) : nlohmann::json(nullptr);
        arr.push_back(j);
    }
    return arr;
}

std::vector<TraceSource> sources_from(const nlohmann::json& arr) {
    std::vector<TraceSource> out;
    for (const auto& j : arr) {
        TraceSource s{j.at("source").get<std::string>(), std::nullopt};
        if (!j.at("seed").is_null()) s.seed = j.at("seed").get<std::uint64_t>();
        out.push_back(s);
    }
    return out;
}

nlohmann::json result_json(const ClassifierResult& r) {
    return {
        {"name", r.name},
        {"confusion", {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"fn", r.confusion.fn}, {"tn", r.confusion.tn}}},
        {"metrics", metrics_json(r.metrics)},
    };
}

ClassifierResult result_from(const nlohmann::json& j) {
    ClassifierResult r;
    r.name = j.at("name").get<std::string>();
    const auto& c = j.at("confusion");
    r.confusion = {c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(), c.at("fn").get<std::size_t>(),
                   c.at("tn").get<std::size_t>()};
    r.metrics = metrics_from(j.at("metrics"));
    return r;
}

ClassifierResult evaluate(std::string name, const ModelBundle& bundle, const TelemetryTrace& test,
                          const std::vector<Label>& truth) {
    ClassifierResult r;
    r.name = std::move(name);
    r.confusion = confusion(predict_trace(bundle, test), truth);
    r.metrics = metrics(r.confusion);
    return r;
}

} // namespace

ConfusionMatrix confusion(std::span<const Label> predicted, std::span<const Label> truth) {
    if (predicted.size() != truth.size()) throw Error("confusion: predicted and truth lengths differ");
    if (predicted.empty()) throw Error("confusion: no samples");
    ConfusionMatrix c;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const bool p = predicted[i] == Label::Attack;
        const bool t = truth[i] == Label::Attack;
        if (p && t) ++c.tp;
        else if (p) ++c.fp;
        else if (t) ++c.fn;
        else ++c.tn;
    }
    return c;
}

MetricsReport metrics(const ConfusionMatrix& c) {
    if (c.total() == 0) throw Error("metrics: empty confusion matrix");
    MetricsReport m;
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    m.attack = class_metrics(c.tp, c.fp, c.fn);
    m.benign = class_metrics(c.tn, c.fn, c.fp);
    m.macro_precision = (m.attack.precision + m.benign.precision) / 2.0;
    m.macro_recall = (m.attack.recall + m.benign.recall) / 2.0;
    m.macro_f1 = (m.attack.f1 + m.benign.f1) / 2.0;
    return m;
}

TrainedPipeline train_pipeline(const TelemetryTrace& train, std::span<const Metric> features, std::size_t knn_k,
                               const CartParams& cart_params) {
    if (!train.labeled()) throw Error("training requires labels");
    const auto raw = to_feature_matrix(train, features);
    const auto standardizer = fit_standardizer(raw);
    const auto z = standardize(standardizer, raw);
    std::vector<Metric> names(features.begin(), features.end());
    return {
        ModelBundle{names, standardizer, knn_fit(z, knn_k)},
        ModelBundle{names, standardizer, cart_fit(z, cart_params)},
    };
}

std::vector<Label> predict_trace(const ModelBundle& bundle, const TelemetryTrace& trace) {
    std::vector<Label> out;
    out.reserve(trace.size());
    for (const auto& s : trace.samples()) out.push_back(bundle.classify(s));
    return out;
}

FittedExperiment run_fitted_experiment(const TelemetryTrace& train, const TelemetryTrace& test,
                                       std::span<const Metric> features, std::size_t knn_k,
                                       const CartParams& cart_params) {
    if (!train.labeled() || !test.labeled()) throw Error("evaluation requires labels");
    auto fitted = train_pipeline(train, features, knn_k, cart_params);

    std::vector<Label> truth;
    truth.reserve(test.size());
    for (const auto& s : test.samples()) truth.push_back(*s.label);

    ExperimentReport r;
    r.features.assign(features.begin(), features.end());
    r.knn_k = knn_k;
    r.cart_params = cart_params;
    r.feature_selection = "explicit";
    r.knn = evaluate("kNN", fitted.knn, test, truth);
    r.cart = evaluate("CART", fitted.cart, test, truth);
    return {std::move(r), std::move(fitted)};
}

ExperimentReport run_experiment(const TelemetryTrace& train, const TelemetryTrace& test,
                                std::span<const Metric> features, std::size_t knn_k,
                                const CartParams& cart_params) {
    return run_fitted_experiment(train, test, features, knn_k, cart_params).report;
}

std::string metrics_to_json(const MetricsReport& m) { return metrics_json(m).dump(2); }

std::string report_to_json(const ExperimentReport& r) {
    nlohmann::json j;
    j["feature_names"] = nlohmann::json::array();
    for (auto f : r.features) j["feature_names"].push_back(std::string(metric_name(f)));
    j["feature_selection"] = r.feature_selection;
    j["knn"] = {{"k", r.knn_k}};
    j["cart"] = {
        {"max_depth", r.cart_params.max_depth ? nlohmann::json(*r.cart_params.max_depth) : nlohmann::json(nullptr)},
        {"min_samples_split", r.cart_params.min_samples_split},
        {"min_gain", r.cart_params.min_gain},
    };
    j["provenance"] = {{"train", sources_json(r.train_sources)}, {"test", sources_json(r.test_sources)}};
    j["results"] = {result_json(r.knn), result_json(r.cart)};
    return j.dump(2) + "\n";
}

ExperimentReport report_from_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        ExperimentReport r;
        for (const auto& n : j.at("feature_names")) r.features.push_back(parse_metric(n.get<std::string>()));
        r.feature_selection = j.at("feature_selection").get<std::string>();
        r.knn_k = j.at("knn").at("k").get<std::size_t>();
        const auto& c = j.at("cart");
        r.cart_params.max_depth =
            c.at("max_depth").is_null() ? std::nullopt : std::optional<std::size_t>(c.at("max_depth").get<std::size_t>());
        r.cart_params.min_samples_split = c.at("min_samples_split").get<std::size_t>();
        r.cart_params.min_gain = c.at("min_gain").get<double>();
        r.train_sources = sources_from(j.at("provenance").at("train"));
        r.test_sources = sources_from(j.at("provenance").at("test"));
        const auto& results = j.at("results");
        if (!results.is_array() || results.size() != 2) throw Error("report: expected two results");
        r.knn = result_from(results[0]);
        r.cart = result_from(results[1]);
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("report: ") + e.what());
    }
}

std::string format_results_table(const ExperimentReport& r) {
    std::string out;
    char line[128];
    std::snprintf(line, sizeof line, "%-14s %9s %10s %8s %9s\n", "ML Algorithms", "Accuracy", "Precision", "Recall",
                  "F1-Score");
    out += line;
    for (const auto* res : {&r.knn, &r.cart}) {
        const auto& m = res->metrics;
        std::snprintf(line, sizeof line, "%-14s %9.2f %10.2f %8.2f %9.2f\n", res->name.c_str(), 100.0 * m.accuracy,
                      100.0 * m.macro_precision, 100.0 * m.macro_recall, 100.0 * m.macro_f1);
        out += line;
    }
    return out;
}

ProtocolSeeds protocol_seeds(std::uint64_t seed) { return {seed, seed + 500, seed + 100, seed + 100}; }

} // namespace tsentinel
