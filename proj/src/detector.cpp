#include "tsentinel/detector.hpp"

#include <numeric>

#include <json.hpp>

namespace tsentinel {

void DetectorConfig::validate() const {
    if (window == 0 || window % 2 == 0) throw Error("window must be a positive odd integer");
    if (!model) throw Error("detector has no model");
}

OnlineDetector::OnlineDetector(DetectorConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

Label OnlineDetector::push(Label raw) {
    recent_.push_back(raw);
    if (raw == Label::Attack) ++attacks_;
    if (recent_.size() > cfg_.window) {
        if (recent_.front() == Label::Attack) --attacks_;
        recent_.pop_front();
    }
    return 2 * attacks_ > recent_.size() ? Label::Attack : Label::Benign;
}

Decision OnlineDetector::step(const MetricSample& sample) {
    const Label raw = cfg_.model->classify(sample);
    return {raw, push(raw)};
}

void OnlineDetector::reset() {
    recent_.clear();
    attacks_ = 0;
}

std::size_t DetectionReport::missed() const {
    return static_cast<std::size_t>(
        std::ranges::count_if(onsets, [](const OnsetLatency& o) { return !o.latency.has_value(); }));
}

std::optional<double> DetectionReport::mean_latency() const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& o : onsets) {
        if (o.latency) {
            sum += static_cast<double>(*o.latency);
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

std::vector<AttackEvent> events_from_decisions(const std::vector<double>& t, const std::vector<Label>& decisions,
                                               double interval) {
    std::vector<AttackEvent> events;
    std::size_t i = 0;
    while (i < decisions.size()) {
        if (decisions[i] != Label::Attack) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < decisions.size() && decisions[j + 1] == Label::Attack) ++j;
        events.push_back({t[i], t[j] + interval});
        i = j + 1;
    }
    return events;
}

DetectionReport detect_events(const TelemetryTrace& trace, const DetectorConfig& cfg) {
    OnlineDetector detector(cfg);
    DetectionReport r;
    r.interval = trace.interval();
    r.window = cfg.window;
    if (trace.empty()) return r;

    for (const auto& s : trace.samples()) {
        const auto d = detector.step(s);
        r.t.push_back(s.t);
        r.raw.push_back(d.raw);
        r.smoothed.push_back(d.smoothed);
    }
    r.events = events_from_decisions(r.t, r.smoothed, trace.interval());

    if (trace.labeled()) {
        std::vector<Label> truth;
        for (const auto& s : trace.samples()) truth.push_back(*s.label);
        std::size_t i = 0;
        while (i < truth.size()) {
            if (truth[i] != Label::Attack) {
                ++i;
                continue;
            }
            std::size_t end = i;
            while (end < truth.size() && truth[end] == Label::Attack) ++end;
            OnsetLatency o{trace[i].t, std::nullopt};
            for (std::size_t k = i; k < end; ++k) {
                if (r.smoothed[k] == Label::Attack) {
                    o.latency = k - i;
                    break;
                }
            }
            r.onsets.push_back(o);
            i = end;
        }
        r.confusion = confusion(r.smoothed, truth);
        r.metrics = metrics(*r.confusion);
    }
    return r;
}

namespace {

nlohmann::json labels_json(const std::vector<Label>& labels) {
    auto arr = nlohmann::json::array();
    for (auto l : labels) arr.push_back(std::string(label_token(l)));
    return arr;
}

std::vector<Label> labels_from(const nlohmann::json& arr) {
    std::vector<Label> out;
    for (const auto& j : arr) out.push_back(parse_label(j.get<std::string>()));
    return out;
}

} // namespace

std::string detection_to_json(const DetectionReport& r) {
    nlohmann::json j;
    j["interval"] = r.interval;
    j["window"] = r.window;
    j["t"] = r.t;
    j["raw"] = labels_json(r.raw);
    j["smoothed"] = labels_json(r.smoothed);
    j["events"] = nlohmann::json::array();
    for (const auto& e : r.events) j["events"].push_back({{"start_t", e.start_t}, {"end_t", e.end_t}});
    j["onsets"] = nlohmann::json::array();
    for (const auto& o : r.onsets) {
        j["onsets"].push_back({{"onset_t", o.onset_t},
                               {"latency_samples", o.latency ? nlohmann::json(*o.latency) : nlohmann::json("missed")}});
    }
    if (r.confusion) {
        const auto& c = *r.confusion;
        j["confusion"] = {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
    }
    if (r.metrics) j["metrics"] = nlohmann::json::parse(metrics_to_json(*r.metrics));
    return j.dump(2) + "\n";
}

DetectionReport detection_from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        DetectionReport r;
        r.interval = j.at("interval").get<double>();
        r.window = j.at("window").get<std::size_t>();
        r.t = j.at("t").get<std::vector<double>>();
        r.raw = labels_from(j.at("raw"));
        r.smoothed = labels_from(j.at("smoothed"));
        for (const auto& e : j.at("events")) r.events.push_back({e.at("start_t").get<double>(), e.at("end_t").get<double>()});
        for (const auto& o : j.at("onsets")) {
            OnsetLatency ol{o.at("onset_t").get<double>(), std::nullopt};
            if (o.at("latency_samples").is_number()) ol.latency = o.at("latency_samples").get<std::size_t>();
            r.onsets.push_back(ol);
        }
        if (j.contains("confusion")) {
            const auto& c = j.at("confusion");
            r.confusion = ConfusionMatrix{c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(),
                                          c.at("fn").get<std::size_t>(), c.at("tn").get<std::size_t>()};
            r.metrics = metrics(*r.confusion);
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("detection report: ") + e.what());
    }
}

std::string decisions_to_csv(const DetectionReport& r) {
    std::string out = "t,decision\n";
    for (std::size_t i = 0; i < r.t.size(); ++i) {
        out += format_double(r.t[i]);
        out += ',';
        out += label_token(r.smoothed[i]);
        out += '\n';
    }
    return out;
}

} // namespace tsentinel
