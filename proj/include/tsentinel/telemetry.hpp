#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsentinel/error.hpp"

namespace tsentinel {

/// The eight host resource metrics, in canonical order.
enum class Metric : std::size_t {
    CpuUtil = 0,
    MemUsed,
    DiskReadReqs,
    DiskWriteReqs,
    NetBytesIn,
    NetBytesOut,
    NetPktsIn,
    NetPktsOut,
};

inline constexpr std::size_t kMetricCount = 8;

inline constexpr std::array<Metric, kMetricCount> kAllMetrics = {
    Metric::CpuUtil,    Metric::MemUsed,     Metric::DiskReadReqs, Metric::DiskWriteReqs,
    Metric::NetBytesIn, Metric::NetBytesOut, Metric::NetPktsIn,    Metric::NetPktsOut,
};

/// cpu_util, disk_write_reqs, net_bytes_in/out, net_pkts_in/out.
inline constexpr std::array<Metric, 6> kDefaultFeatures = {
    Metric::CpuUtil,    Metric::DiskWriteReqs, Metric::NetBytesIn,
    Metric::NetBytesOut, Metric::NetPktsIn,    Metric::NetPktsOut,
};

std::string_view metric_name(Metric m);
/// Throws Error for anything outside the canonical eight names.
Metric parse_metric(std::string_view name);
std::vector<Metric> parse_metric_list(std::string_view comma_separated);
std::string join_metric_names(std::span<const Metric> metrics, char sep = ',');

constexpr std::size_t index_of(Metric m) { return static_cast<std::size_t>(m); }

enum class Label { Benign, Attack };

/// CSV tokens: `attack` / `no_attack`.
std::string_view label_token(Label l);
Label parse_label(std::string_view token);

struct MetricSample {
    double t = 0.0;
    std::array<double, kMetricCount> values{};
    std::optional<Label> label;

    double& operator[](Metric m) { return values[index_of(m)]; }
    double operator[](Metric m) const { return values[index_of(m)]; }

    friend bool operator==(const MetricSample&, const MetricSample&) = default;
};

/// Returns an empty string when every metric is finite and in range,
/// otherwise a message naming the first offending field.
std::string check_sample_ranges(const MetricSample& s);

/// Uniformly sampled, either fully labeled or fully unlabeled sequence of
/// samples. Validated on construction; immutable afterwards.
class TelemetryTrace {
public:
    static constexpr double kDefaultInterval = 5.0;

    TelemetryTrace() = default;
    /// Throws Error if any trace invariant is violated.
    TelemetryTrace(double interval, std::vector<MetricSample> samples);

    double interval() const { return interval_; }
    const std::vector<MetricSample>& samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }
    bool labeled() const { return !samples_.empty() && samples_.front().label.has_value(); }
    const MetricSample& operator[](std::size_t i) const { return samples_[i]; }

    friend bool operator==(const TelemetryTrace&, const TelemetryTrace&) = default;

private:
    double interval_ = kDefaultInterval;
    std::vector<MetricSample> samples_;
};

/// Appends `rest` after `head`, re-timing rest so spacing stays uniform.
/// Both traces must share an interval and a labeling mode.
TelemetryTrace concatenate(const TelemetryTrace& head, const TelemetryTrace& rest);

TelemetryTrace parse_trace_csv(std::string_view text);
std::string write_trace_csv(const TelemetryTrace& trace);

TelemetryTrace read_trace_file(const std::string& path);
void write_trace_file(const std::string& path, const TelemetryTrace& trace);

/// n x d real matrix over a subset of the canonical metrics, row-major,
/// with optional per-row labels.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::vector<Metric> features, std::size_t rows, std::vector<double> data,
                  std::optional<std::vector<Label>> labels = std::nullopt);

    const std::vector<Metric>& features() const { return features_; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return features_.size(); }
    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * cols(), cols()};
    }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
    const std::vector<double>& data() const { return data_; }
    bool labeled() const { return labels_.has_value(); }
    /// Precondition: labeled().
    const std::vector<Label>& labels() const { return *labels_; }
    const std::optional<std::vector<Label>>& maybe_labels() const { return labels_; }

    friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

private:
    std::vector<Metric> features_;
    std::size_t rows_ = 0;
    std::vector<double> data_;
    std::optional<std::vector<Label>> labels_;
};

/// Throws on an empty list or duplicate names.
void validate_feature_list(std::span<const Metric> features);

FeatureMatrix to_feature_matrix(const TelemetryTrace& trace, std::span<const Metric> features);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

} // namespace tsentinel
