#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tsentinel/telemetry.hpp"

namespace tsentinel {

/// How often the attacker emits a SYN packet: never, every N ms, or as fast
/// as it can (the MAX sentinel).
class AttackIntensity {
public:
    static AttackIntensity none() { return AttackIntensity(Kind::None, 0.0); }
    static AttackIntensity every_ms(double interval_ms);
    static AttackIntensity max() { return AttackIntensity(Kind::Max, 0.0); }

    bool active() const { return kind_ != Kind::None; }
    bool is_max() const { return kind_ == Kind::Max; }
    /// 0 for none(), the configured interval otherwise; meaningless for max().
    double interval_ms() const { return interval_ms_; }
    /// Packets per second; max() realizes as `max_rate`.
    double packet_rate(double max_rate) const;

    /// File token: `0`, a positive millisecond count, or `max`.
    std::string token() const;
    static AttackIntensity parse(std::string_view token);

    friend bool operator==(const AttackIntensity&, const AttackIntensity&) = default;

private:
    enum class Kind { None, Every, Max };
    AttackIntensity(Kind k, double ms) : kind_(k), interval_ms_(ms) {}
    Kind kind_;
    double interval_ms_;
};

struct SegmentSpec {
    double duration = 0.0;   ///< seconds
    double legit_rate = 0.0; ///< legitimate requests per second
    AttackIntensity attack = AttackIntensity::none();

    friend bool operator==(const SegmentSpec&, const SegmentSpec&) = default;
};

struct ScenarioSpec {
    double interval = 5.0;
    std::vector<SegmentSpec> segments;
    double noise_scale = 1.0;

    double total_duration() const;
    /// Throws Error unless every segment is a positive multiple of the interval.
    void validate() const;
    std::size_t sample_count() const;

    friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

/// Linear resource-cost model. Each metric is
///   baseline + legit_rate * legit_cost + attack_rate * attack_cost + noise
/// and mem_used additionally carries a SYN-backlog term that grows while an
/// attack is active and decays exponentially otherwise.
struct LoadModel {
    using PerMetric = std::array<double, kMetricCount>;

    PerMetric baseline{};
    PerMetric legit_cost{};  ///< per legitimate request/s
    PerMetric attack_cost{}; ///< per attack packet/s
    PerMetric noise_sd{};
    double backlog_growth = 0.0; ///< mem fraction added per attack packet
    double backlog_cap = 0.0;    ///< ceiling on the backlog term
    double backlog_tau = 1.0;    ///< relaxation time constant, seconds
    double max_attack_rate = 10'000.0;

    /// Throws Error on negative or non-finite parameters.
    void validate() const;

    friend bool operator==(const LoadModel&, const LoadModel&) = default;
};

inline constexpr double kDefaultLegitRate = 10.0;

LoadModel default_load_model();

/// 30 minutes: 10 s idle, legitimate load, 10 s idle.
ScenarioSpec baseline_scenario();
/// Baseline plus three 600 s SYN-flood phases (300 ms, 250 ms, MAX) starting
/// with the active window; the last phase is cut short by the trailing gap.
ScenarioSpec attack_scenario();
/// 120 minutes of 10-minute segments drawn from {legit-only, attack-only,
/// legit+attack}, each kind at least twice.
ScenarioSpec mixed_scenario(std::uint64_t seed);

TelemetryTrace synthesize(const ScenarioSpec& spec, const LoadModel& model, std::uint64_t seed);

std::string write_scenario_text(const ScenarioSpec& spec);
ScenarioSpec parse_scenario_text(std::string_view text);

std::string load_model_to_json(const LoadModel& model);
LoadModel load_model_from_json(std::string_view text);

} // namespace tsentinel
