#include "tsentinel/synth.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "tsentinel/rng.hpp"

namespace tsentinel {

namespace {

constexpr double kGap = 10.0;
constexpr double kTestDuration = 1800.0;
constexpr double kPhase = 600.0;
constexpr double kMixedDuration = 7200.0;

bool is_multiple(double value, double step) {
    const double q = value / step;
    return std::abs(q - std::round(q)) <= 1e-9 * std::max(1.0, q);
}

double clamp_metric(Metric m, double v) {
    v = std::max(v, 0.0);
    if (m == Metric::CpuUtil) return std::min(v, 100.0);
    if (m == Metric::MemUsed) return std::min(v, 1.0);
    return v;
}

} // namespace

AttackIntensity AttackIntensity::every_ms(double interval_ms) {
    if (!std::isfinite(interval_ms) || interval_ms <= 0.0) {
        throw Error("attack interval must be a positive number of milliseconds");
    }
    return AttackIntensity(Kind::Every, interval_ms);
}

double AttackIntensity::packet_rate(double max_rate) const {
    switch (kind_) {
    case Kind::None: return 0.0;
    case Kind::Every: return 1000.0 / interval_ms_;
    case Kind::Max: return max_rate;
    }
    return 0.0;
}

std::string AttackIntensity::token() const {
    switch (kind_) {
    case Kind::None: return "0";
    case Kind::Every: return format_double(interval_ms_);
    case Kind::Max: return "max";
    }
    return "0";
}

AttackIntensity AttackIntensity::parse(std::string_view token) {
    if (token == "max" || token == "MAX") return max();
    double v = 0.0;
    try {
        std::size_t used = 0;
        v = std::stod(std::string(token), &used);
        if (used != token.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw Error("malformed attack interval '" + std::string(token) + "'");
    }
    if (v == 0.0) return none();
    return every_ms(v);
}

double ScenarioSpec::total_duration() const {
    double total = 0.0;
    for (const auto& s : segments) total += s.duration;
    return total;
}

void ScenarioSpec::validate() const {
    if (!std::isfinite(interval) || interval <= 0.0) throw Error("scenario interval must be positive");
    if (!std::isfinite(noise_scale) || noise_scale < 0.0) throw Error("noise_scale must be non-negative");
    if (segments.empty()) throw Error("scenario needs at least one segment");
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& s = segments[i];
        const auto where = " (segment " + std::to_string(i + 1) + ")";
        if (!std::isfinite(s.duration) || s.duration <= 0.0 || !is_multiple(s.duration, interval)) {
            throw Error("segment duration must be a positive multiple of the interval" + where);
        }
        if (!std::isfinite(s.legit_rate) || s.legit_rate < 0.0) {
            throw Error("legit_rate must be non-negative" + where);
        }
    }
}

std::size_t ScenarioSpec::sample_count() const {
    std::size_t n = 0;
    for (const auto& s : segments) n += static_cast<std::size_t>(std::llround(s.duration / interval));
    return n;
}

void LoadModel::validate() const {
    auto check = [](double v, const char* what) {
        if (!std::isfinite(v) || v < 0.0) throw Error(std::string("load model: ") + what + " must be non-negative");
    };
    for (std::size_t i = 0; i < kMetricCount; ++i) {
        check(baseline[i], "baseline");
        check(legit_cost[i], "legit_cost");
        check(attack_cost[i], "attack_cost");
        check(noise_sd[i], "noise_sd");
    }
    check(backlog_growth, "backlog_growth");
    check(backlog_cap, "backlog_cap");
    check(max_attack_rate, "max_attack_rate");
    if (!std::isfinite(backlog_tau) || backlog_tau <= 0.0) throw Error("load model: backlog_tau must be positive");
}

// Calibrated for the qualitative contrasts between the legitimate-only and
// attack scenarios: the flood drives packets/bytes in, CPU and disk writes
// (kernel SYN-flood log lines) up, answers each SYN with a SYN-ACK, and
// leaves disk reads flat. Absolute magnitudes carry no physical meaning.
LoadModel default_load_model() {
    LoadModel m;
    //             cpu   mem    d_rd  d_wr  b_in    b_out   p_in  p_out
    m.baseline =    {2.0, 0.20,  3.0,  4.0,  2000.0, 1500.0, 15.0, 12.0};
    m.legit_cost =  {1.2, 0.004, 0.05, 1.5,  900.0,  12000.0, 9.0, 10.0};
    m.attack_cost = {16.0, 0.0,  0.0,  0.05, 60.0,   60.0,   1.0,  1.5};
    m.noise_sd =    {10.0, 0.005, 0.8, 6.0,  400.0,  3600.0, 5.0,  5.0};
    m.backlog_growth = 2e-5;
    m.backlog_cap = 0.30;
    m.backlog_tau = 60.0;
    m.max_attack_rate = 10'000.0;
    return m;
}

ScenarioSpec baseline_scenario() {
    ScenarioSpec s;
    s.segments = {
        {kGap, 0.0, AttackIntensity::none()},
        {kTestDuration - 2 * kGap, kDefaultLegitRate, AttackIntensity::none()},
        {kGap, 0.0, AttackIntensity::none()},
    };
    return s;
}

ScenarioSpec attack_scenario() {
    ScenarioSpec s;
    const double active_end = kTestDuration - kGap;
    const std::array<AttackIntensity, 3> phases = {
        AttackIntensity::every_ms(300.0), AttackIntensity::every_ms(250.0), AttackIntensity::max()};
    s.segments.push_back({kGap, 0.0, AttackIntensity::none()});
    double start = kGap;
    for (const auto& phase : phases) {
        const double end = std::min(start + kPhase, active_end);
        s.segments.push_back({end - start, kDefaultLegitRate, phase});
        start = end;
    }
    s.segments.push_back({kGap, 0.0, AttackIntensity::none()});
    return s;
}

ScenarioSpec mixed_scenario(std::uint64_t seed) {
    constexpr std::size_t kSegments = static_cast<std::size_t>(kMixedDuration / kPhase);
    enum Kind : std::uint64_t { LegitOnly = 0, AttackOnly = 1, Both = 2 };

    Rng rng(seed);
    std::array<std::uint64_t, kSegments> kinds{};
    while (true) {
        std::array<int, 3> counts{};
        for (auto& k : kinds) {
            k = rng.uniform_index(3);
            ++counts[k];
        }
        if (std::ranges::all_of(counts, [](int c) { return c >= 2; })) break;
    }

    const std::array<AttackIntensity, 3> intensities = {
        AttackIntensity::every_ms(300.0), AttackIntensity::every_ms(250.0), AttackIntensity::max()};
    ScenarioSpec s;
    for (auto k : kinds) {
        SegmentSpec seg{kPhase, kDefaultLegitRate, AttackIntensity::none()};
        if (k != LegitOnly) seg.attack = intensities[rng.uniform_index(3)];
        if (k == AttackOnly) seg.legit_rate = 0.0;
        s.segments.push_back(seg);
    }
    return s;
}

TelemetryTrace synthesize(const ScenarioSpec& spec, const LoadModel& model, std::uint64_t seed) {
    spec.validate();
    model.validate();

    Rng rng(seed);
    std::vector<MetricSample> samples;
    samples.reserve(spec.sample_count());
    const double decay = std::exp(-spec.interval / model.backlog_tau);
    double backlog = 0.0;
    std::size_t index = 0;

    for (const auto& seg : spec.segments) {
        const auto n = static_cast<std::size_t>(std::llround(seg.duration / spec.interval));
        const double attack_rate = seg.attack.packet_rate(model.max_attack_rate);
        for (std::size_t j = 0; j < n; ++j, ++index) {
            if (seg.attack.active()) {
                backlog = std::min(model.backlog_cap,
                                   backlog + model.backlog_growth * attack_rate * spec.interval);
            } else {
                backlog *= decay;
            }
            MetricSample s;
            s.t = static_cast<double>(index) * spec.interval;
            for (std::size_t m = 0; m < kMetricCount; ++m) {
                double level = model.baseline[m] + seg.legit_rate * model.legit_cost[m] +
                               attack_rate * model.attack_cost[m];
                if (static_cast<Metric>(m) == Metric::MemUsed) level += backlog;
                const double noise = spec.noise_scale * model.noise_sd[m] * rng.normal();
                s.values[m] = clamp_metric(static_cast<Metric>(m), level + noise);
            }
            s.label = seg.attack.active() ? Label::Attack : Label::Benign;
            samples.push_back(s);
        }
    }
    return TelemetryTrace(spec.interval, std::move(samples));
}

std::string write_scenario_text(const ScenarioSpec& spec) {
    std::string out = "# tsentinel scenario\n";
    out += "interval = " + format_double(spec.interval) + "\n";
    out += "noise_scale = " + format_double(spec.noise_scale) + "\n";
    out += "# duration_s legit_rate attack_interval_ms (0 = none, max = flood)\n";
    for (const auto& s : spec.segments) {
        out += format_double(s.duration) + " " + format_double(s.legit_rate) + " " + s.attack.token() + "\n";
    }
    return out;
}

ScenarioSpec parse_scenario_text(std::string_view text) {
    ScenarioSpec spec;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    auto number = [&](const std::string& tok) {
        try {
            std::size_t used = 0;
            const double v = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw Error("scenario line " + std::to_string(lineno) + ": malformed number '" + tok + "'");
        }
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (const auto eq = line.find('='); eq != std::string::npos) {
            std::istringstream kv(line.substr(0, eq) + " " + line.substr(eq + 1));
            std::string key, value, extra;
            kv >> key >> value;
            if (value.empty() || (kv >> extra)) {
                throw Error("scenario line " + std::to_string(lineno) + ": expected 'key = value'");
            }
            if (key == "interval") {
                spec.interval = number(value);
            } else if (key == "noise_scale") {
                spec.noise_scale = number(value);
            } else {
                throw Error("scenario line " + std::to_string(lineno) + ": unknown key '" + key + "'");
            }
            continue;
        }
        std::istringstream fields(line);
        std::vector<std::string> toks;
        for (std::string tok; fields >> tok;) toks.push_back(tok);
        if (toks.empty()) continue;
        if (toks.size() != 3) {
            throw Error("scenario line " + std::to_string(lineno) +
                        ": expected 'duration_s legit_rate attack_interval_ms'");
        }
        try {
            spec.segments.push_back({number(toks[0]), number(toks[1]), AttackIntensity::parse(toks[2])});
        } catch (const Error& e) {
            throw Error("scenario line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    spec.validate();
    return spec;
}

namespace {

nlohmann::json per_metric_json(const LoadModel::PerMetric& v) {
    nlohmann::json j = nlohmann::json::object();
    for (auto m : kAllMetrics) j[std::string(metric_name(m))] = v[index_of(m)];
    return j;
}

LoadModel::PerMetric per_metric_from(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_object()) throw Error(std::string("load model: missing object '") + key + "'");
    LoadModel::PerMetric out{};
    const auto& obj = j.at(key);
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!it.value().is_number()) throw Error(std::string("load model: ") + key + "." + it.key() + " is not a number");
    }
    for (auto m : kAllMetrics) {
        const auto name = std::string(metric_name(m));
        if (!obj.contains(name)) throw Error(std::string("load model: ") + key + " lacks " + name);
        out[index_of(m)] = obj.at(name).get<double>();
    }
    if (obj.size() != kMetricCount) throw Error(std::string("load model: ") + key + " has unknown metric names");
    return out;
}

} // namespace

std::string load_model_to_json(const LoadModel& model) {
    nlohmann::json j;
    j["baseline"] = per_metric_json(model.baseline);
    j["legit_cost"] = per_metric_json(model.legit_cost);
    j["attack_cost"] = per_metric_json(model.attack_cost);
    j["noise_sd"] = per_metric_json(model.noise_sd);
    j["backlog_growth"] = model.backlog_growth;
    j["backlog_cap"] = model.backlog_cap;
    j["backlog_tau"] = model.backlog_tau;
    j["max_attack_rate"] = model.max_attack_rate;
    return j.dump(2) + "\n";
}

LoadModel load_model_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("load model: ") + e.what());
    }
    LoadModel m;
    m.baseline = per_metric_from(j, "baseline");
    m.legit_cost = per_metric_from(j, "legit_cost");
    m.attack_cost = per_metric_from(j, "attack_cost");
    m.noise_sd = per_metric_from(j, "noise_sd");
    auto scalar = [&](const char* key) {
        if (!j.contains(key) || !j.at(key).is_number()) throw Error(std::string("load model: missing number '") + key + "'");
        return j.at(key).get<double>();
    };
    m.backlog_growth = scalar("backlog_growth");
    m.backlog_cap = scalar("backlog_cap");
    m.backlog_tau = scalar("backlog_tau");
    m.max_attack_rate = scalar("max_attack_rate");
    m.validate();
    return m;
}

} // namespace tsentinel
