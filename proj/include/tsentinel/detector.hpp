#pragma once

#include <cstddef>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tsentinel/classifiers.hpp"
#include "tsentinel/eval.hpp"
#include "tsentinel/telemetry.hpp"

namespace tsentinel {

inline constexpr std::size_t kDefaultWindow = 5;

struct DetectorConfig {
    std::size_t window = kDefaultWindow; ///< odd, >= 1
    std::shared_ptr<const ModelBundle> model;

    void validate() const;
};

struct Decision {
    Label raw;
    Label smoothed;
};

/// Sequential consumer: classifies each sample and votes over the last
/// `window` raw decisions. While fewer than `window` decisions have been
/// seen, the vote runs over those present. Attack wins only a strict
/// majority.
class OnlineDetector {
public:
    explicit OnlineDetector(DetectorConfig cfg);

    Decision step(const MetricSample& sample);
    /// Feeds an already computed raw decision through the vote.
    Label push(Label raw);
    void reset();

    const DetectorConfig& config() const { return cfg_; }

private:
    DetectorConfig cfg_;
    std::deque<Label> recent_;
    std::size_t attacks_ = 0;
};

struct AttackEvent {
    double start_t = 0.0;
    double end_t = 0.0; ///< exclusive: end of the last flagged sample's interval
    friend bool operator==(const AttackEvent&, const AttackEvent&) = default;
};

struct OnsetLatency {
    double onset_t = 0.0;
    std::optional<std::size_t> latency; ///< samples; nullopt = missed
    friend bool operator==(const OnsetLatency&, const OnsetLatency&) = default;
};

struct DetectionReport {
    double interval = TelemetryTrace::kDefaultInterval;
    std::size_t window = kDefaultWindow;
    std::vector<double> t;
    std::vector<Label> raw;
    std::vector<Label> smoothed;
    std::vector<AttackEvent> events;
    std::vector<OnsetLatency> onsets;
    std::optional<ConfusionMatrix> confusion; ///< smoothed decisions vs labels
    std::optional<MetricsReport> metrics;

    std::size_t missed() const;
    /// Mean over detected onsets; nullopt when none was detected.
    std::optional<double> mean_latency() const;

    friend bool operator==(const DetectionReport&, const DetectionReport&) = default;
};

/// Maximal runs of Attack decisions.
std::vector<AttackEvent> events_from_decisions(const std::vector<double>& t, const std::vector<Label>& decisions,
                                               double interval);

DetectionReport detect_events(const TelemetryTrace& trace, const DetectorConfig& cfg);

std::string detection_to_json(const DetectionReport& r);
DetectionReport detection_from_json(const std::string& text);
/// Two columns, `t,decision`, decision tokens `attack` / `no_attack`.
std::string decisions_to_csv(const DetectionReport& r);

} // namespace tsentinel
