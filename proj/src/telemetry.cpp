#include "tsentinel/telemetry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tsentinel {

namespace {

constexpr std::array<std::string_view, kMetricCount> kMetricNames = {
    "cpu_util",     "mem_used",      "disk_read_reqs", "disk_write_reqs",
    "net_bytes_in", "net_bytes_out", "net_pkts_in",    "net_pkts_out",
};

std::string row_suffix(std::size_t row) { return " at row " + std::to_string(row); }

bool nearly_equal(double a, double b, double scale) {
    return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(scale));
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

double parse_number(std::string_view field, std::string_view column, std::size_t row) {
    double v = 0.0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (field.empty() || ec != std::errc{} || ptr != last) {
        throw Error("malformed number '" + std::string(field) + "' in column " +
                    std::string(column) + row_suffix(row));
    }
    return v;
}

} // namespace

std::string_view metric_name(Metric m) { return kMetricNames.at(index_of(m)); }

Metric parse_metric(std::string_view name) {
    for (std::size_t i = 0; i < kMetricCount; ++i) {
        if (kMetricNames[i] == name) return static_cast<Metric>(i);
    }
    throw Error("unknown feature name '" + std::string(name) + "'");
}

std::vector<Metric> parse_metric_list(std::string_view comma_separated) {
    std::vector<Metric> out;
    if (comma_separated.empty()) return out;
    for (auto part : split(comma_separated, ',')) {
        while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
        while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
        out.push_back(parse_metric(part));
    }
    return out;
}

std::string join_metric_names(std::span<const Metric> metrics, char sep) {
    std::string out;
    for (std::size_t i = 0; i < metrics.size(); ++i) {
        if (i) out += sep;
        out += metric_name(metrics[i]);
    }
    return out;
}

std::string_view label_token(Label l) { return l == Label::Attack ? "attack" : "no_attack"; }

Label parse_label(std::string_view token) {
    if (token == "attack") return Label::Attack;
    if (token == "no_attack") return Label::Benign;
    throw Error("unknown label '" + std::string(token) + "' (expected attack or no_attack)");
}

std::string check_sample_ranges(const MetricSample& s) {
    if (!std::isfinite(s.t) || s.t < 0.0) return "t must be finite and non-negative";
    for (auto m : kAllMetrics) {
        const double v = s[m];
        const auto name = std::string(metric_name(m));
        if (!std::isfinite(v)) return name + " is not finite";
        if (v < 0.0) return name + " out of range (negative)";
        if (m == Metric::CpuUtil && v > 100.0) return name + " out of range [0, 100]";
        if (m == Metric::MemUsed && v > 1.0) return name + " out of range [0, 1]";
    }
    return {};
}

TelemetryTrace::TelemetryTrace(double interval, std::vector<MetricSample> samples)
    : interval_(interval), samples_(std::move(samples)) {
    if (!std::isfinite(interval_) || interval_ <= 0.0) {
        throw Error("sampling interval must be positive");
    }
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        const auto& s = samples_[i];
        const std::size_t row = i + 1;
        if (auto msg = check_sample_ranges(s); !msg.empty()) throw Error(msg + row_suffix(row));
        if (s.label.has_value() != samples_.front().label.has_value()) {
            throw Error("mixed labeling" + row_suffix(row));
        }
        if (i == 0) {
            const double steps = s.t / interval_;
            if (!nearly_equal(steps, std::round(steps), steps)) {
                throw Error("timestamp is not a multiple of the interval" + row_suffix(row));
            }
        } else if (!nearly_equal(s.t - samples_[i - 1].t, interval_, interval_)) {
            throw Error("non-uniform timestamp spacing" + row_suffix(row));
        }
    }
}

TelemetryTrace concatenate(const TelemetryTrace& head, const TelemetryTrace& rest) {
    if (head.empty()) return rest;
    if (rest.empty()) return head;
    if (head.interval() != rest.interval()) throw Error("cannot concatenate traces with different intervals");
    if (head.labeled() != rest.labeled()) throw Error("cannot concatenate labeled and unlabeled traces");
    std::vector<MetricSample> samples = head.samples();
    samples.reserve(head.size() + rest.size());
    const double first = rest[0].t;
    const double offset = head.samples().back().t + head.interval();
    for (auto s : rest.samples()) {
        s.t = offset + (s.t - first);
        samples.push_back(s);
    }
    return TelemetryTrace(head.interval(), std::move(samples));
}

TelemetryTrace parse_trace_csv(std::string_view text) {
    std::vector<std::string_view> lines = split(text, '\n');
    for (auto& l : lines) {
        if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw Error("missing header row");

    constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
    std::size_t t_col = kUnset;
    std::size_t label_col = kUnset;
    std::array<std::size_t, kMetricCount> metric_col;
    metric_col.fill(kUnset);

    const auto header = split(lines[0], ',');
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto name = header[c];
        std::size_t* slot = nullptr;
        if (name == "t") {
            slot = &t_col;
        } else if (name == "label") {
            slot = &label_col;
        } else {
            const auto it = std::find(kMetricNames.begin(), kMetricNames.end(), name);
            if (it == kMetricNames.end()) throw Error("unknown column '" + std::string(name) + "'");
            slot = &metric_col[static_cast<std::size_t>(it - kMetricNames.begin())];
        }
        if (*slot != kUnset) throw Error("duplicate column '" + std::string(name) + "'");
        *slot = c;
    }
    if (t_col == kUnset) throw Error("missing required column 't'");
    for (std::size_t m = 0; m < kMetricCount; ++m) {
        if (metric_col[m] == kUnset) {
            throw Error("missing required column '" + std::string(kMetricNames[m]) + "'");
        }
    }

    std::vector<MetricSample> samples;
    samples.reserve(lines.size() - 1);
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::size_t row = li;
        const auto fields = split(lines[li], ',');
        if (fields.size() != header.size()) {
            throw Error("expected " + std::to_string(header.size()) + " fields, found " +
                        std::to_string(fields.size()) + row_suffix(row));
        }
        MetricSample s;
        s.t = parse_number(fields[t_col], "t", row);
        for (std::size_t m = 0; m < kMetricCount; ++m) {
            s.values[m] = parse_number(fields[metric_col[m]], kMetricNames[m], row);
        }
        if (label_col != kUnset && !fields[label_col].empty()) {
            try {
                s.label = parse_label(fields[label_col]);
            } catch (const Error& e) {
                throw Error(e.what() + row_suffix(row));
            }
        }
        if (auto msg = check_sample_ranges(s); !msg.empty()) throw Error(msg + row_suffix(row));
        if (!samples.empty() && s.label.has_value() != samples.front().label.has_value()) {
            throw Error("mixed labeling" + row_suffix(row));
        }
        samples.push_back(s);
    }

    double interval = TelemetryTrace::kDefaultInterval;
    if (samples.size() >= 2) {
        interval = samples[1].t - samples[0].t;
        if (!(interval > 0.0)) throw Error("non-increasing timestamps" + row_suffix(2));
    }
    return TelemetryTrace(interval, std::move(samples));
}

std::string format_double(double v) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

std::string write_trace_csv(const TelemetryTrace& trace) {
    const bool labeled = trace.labeled();
    std::string out = "t";
    for (auto name : kMetricNames) {
        out += ',';
        out += name;
    }
    if (labeled) out += ",label";
    out += '\n';
    for (const auto& s : trace.samples()) {
        out += format_double(s.t);
        for (double v : s.values) {
            out += ',';
            out += format_double(v);
        }
        if (labeled) {
            out += ',';
            out += label_token(*s.label);
        }
        out += '\n';
    }
    return out;
}

TelemetryTrace read_trace_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open trace file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_trace_csv(ss.str());
    } catch (const Error& e) {
        throw Error(path + ": " + e.what());
    }
}

void write_trace_file(const std::string& path, const TelemetryTrace& trace) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << write_trace_csv(trace);
    if (!out) throw Error("write failed for '" + path + "'");
}

FeatureMatrix::FeatureMatrix(std::vector<Metric> features, std::size_t rows, std::vector<double> data,
                             std::optional<std::vector<Label>> labels)
    : features_(std::move(features)), rows_(rows), data_(std::move(data)), labels_(std::move(labels)) {
    validate_feature_list(features_);
    if (data_.size() != rows_ * features_.size()) throw Error("feature matrix data size mismatch");
    if (labels_ && labels_->size() != rows_) throw Error("label count does not match row count");
}

void validate_feature_list(std::span<const Metric> features) {
    if (features.empty()) throw Error("feature list is empty");
    std::array<bool, kMetricCount> seen{};
    for (auto m : features) {
        if (index_of(m) >= kMetricCount) throw Error("unknown feature");
        if (seen[index_of(m)]) throw Error("duplicate feature '" + std::string(metric_name(m)) + "'");
        seen[index_of(m)] = true;
    }
}

FeatureMatrix to_feature_matrix(const TelemetryTrace& trace, std::span<const Metric> features) {
    validate_feature_list(features);
    std::vector<double> data;
    data.reserve(trace.size() * features.size());
    for (const auto& s : trace.samples()) {
        for (auto m : features) data.push_back(s[m]);
    }
    std::optional<std::vector<Label>> labels;
    if (trace.labeled()) {
        labels.emplace();
        labels->reserve(trace.size());
        for (const auto& s : trace.samples()) labels->push_back(*s.label);
    }
    return FeatureMatrix({features.begin(), features.end()}, trace.size(), std::move(data),
                         std::move(labels));
}

} // namespace tsentinel
