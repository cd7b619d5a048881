#pragma once

// Small fixtures shared by the unit tests.

#include <cstdint>
#include <string>
#include <vector>

#include "tsentinel/rng.hpp"
#include "tsentinel/telemetry.hpp"

namespace testutil {

using namespace tsentinel;

inline MetricSample sample(double t, std::array<double, kMetricCount> values,
                           std::optional<Label> label = std::nullopt) {
    MetricSample s;
    s.t = t;
    s.values = values;
    s.label = label;
    return s;
}

/// Random in-range trace with arbitrary (non-round) values.
inline TelemetryTrace random_trace(std::uint64_t seed, std::size_t n, bool labeled, double interval = 5.0) {
    Rng rng(seed);
    std::vector<MetricSample> out;
    for (std::size_t i = 0; i < n; ++i) {
        MetricSample s;
        s.t = static_cast<double>(i) * interval;
        s.values[0] = 100.0 * rng.uniform01();
        s.values[1] = rng.uniform01();
        for (std::size_t m = 2; m < kMetricCount; ++m) s.values[m] = 1e6 * rng.uniform01() * rng.uniform01();
        if (labeled) s.label = rng.uniform_index(2) ? Label::Attack : Label::Benign;
        out.push_back(s);
    }
    return TelemetryTrace(interval, std::move(out));
}

/// n x d matrix of uniform [lo, hi) draws with random labels.
inline FeatureMatrix random_matrix(Rng& rng, std::size_t n, std::size_t d, double lo = -1.0, double hi = 1.0) {
    std::vector<Metric> names(kAllMetrics.begin(), kAllMetrics.begin() + static_cast<std::ptrdiff_t>(d));
    std::vector<double> data(n * d);
    for (auto& v : data) v = lo + (hi - lo) * rng.uniform01();
    std::vector<Label> labels(n);
    for (auto& l : labels) l = rng.uniform_index(2) ? Label::Attack : Label::Benign;
    return FeatureMatrix(std::move(names), n, std::move(data), std::move(labels));
}

inline std::vector<Label> parse_labels(std::string_view abc) {
    std::vector<Label> out;
    for (char c : abc) {
        if (c == 'A') out.push_back(Label::Attack);
        if (c == 'B') out.push_back(Label::Benign);
    }
    return out;
}

} // namespace testutil
