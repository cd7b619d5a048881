#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsentinel/classifiers.hpp"
#include "tsentinel/telemetry.hpp"

namespace tsentinel {

/// Attack is the positive class.
struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    std::size_t total() const { return tp + fp + fn + tn; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    friend bool operator==(const ClassMetrics&, const ClassMetrics&) = default;
};

struct MetricsReport {
    double accuracy = 0.0;
    ClassMetrics attack;
    ClassMetrics benign;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

ConfusionMatrix confusion(std::span<const Label> predicted, std::span<const Label> truth);

/// Zero-denominator precision/recall is 1.0 when the class has neither true
/// members nor predictions, 0.0 otherwise. F1 is 0 when P + R is 0.
MetricsReport metrics(const ConfusionMatrix& c);

/// Where a trace came from, enough to regenerate it.
struct TraceSource {
    std::string description; ///< scenario name or file path
    std::optional<std::uint64_t> seed;
    friend bool operator==(const TraceSource&, const TraceSource&) = default;
};

struct ClassifierResult {
    std::string name; ///< "kNN" or "CART"
    ConfusionMatrix confusion;
    MetricsReport metrics;
    friend bool operator==(const ClassifierResult&, const ClassifierResult&) = default;
};

struct ExperimentReport {
    std::vector<Metric> features;
    std::size_t knn_k = kDefaultK;
    CartParams cart_params;
    std::vector<TraceSource> train_sources;
    std::vector<TraceSource> test_sources;
    std::string feature_selection; ///< "explicit" or how the set was derived
    ClassifierResult knn;
    ClassifierResult cart;
    friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

/// Fitted standardizer plus both classifiers, trained on the same rows.
struct TrainedPipeline {
    ModelBundle knn;
    ModelBundle cart;
};

TrainedPipeline train_pipeline(const TelemetryTrace& train, std::span<const Metric> features, std::size_t knn_k,
                               const CartParams& cart_params);

std::vector<Label> predict_trace(const ModelBundle& bundle, const TelemetryTrace& trace);

ExperimentReport run_experiment(const TelemetryTrace& train, const TelemetryTrace& test,
                                std::span<const Metric> features, std::size_t knn_k = kDefaultK,
                                const CartParams& cart_params = {});

struct FittedExperiment {
    ExperimentReport report;
    TrainedPipeline models;
};

/// Same as run_experiment, also handing back the fitted models.
FittedExperiment run_fitted_experiment(const TelemetryTrace& train, const TelemetryTrace& test,
                                       std::span<const Metric> features, std::size_t knn_k,
                                       const CartParams& cart_params);

std::string report_to_json(const ExperimentReport& r);
ExperimentReport report_from_json(std::string_view text);
std::string metrics_to_json(const MetricsReport& m);

/// Accuracy / Precision / Recall / F1-Score per classifier, macro averages,
/// percentages with two decimals.
std::string format_results_table(const ExperimentReport& r);

/// The standard protocol: train on baseline + attack traces, test on a
/// mixed trace.
struct ProtocolSeeds {
    std::uint64_t baseline = 0;
    std::uint64_t attack = 0;
    std::uint64_t mixed_scenario = 0;
    std::uint64_t mixed_noise = 0;
};

/// Seeds used by the reference protocol for run index `seed`: baseline
/// noise `seed`, attack noise `seed + 500`, mixed scenario and noise
/// `seed + 100`.
ProtocolSeeds protocol_seeds(std::uint64_t seed);

} // namespace tsentinel
