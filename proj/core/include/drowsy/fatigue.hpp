#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drowsy/classifier.hpp"

namespace drowsy {

// The alert unit: a running sum of classifier outputs clamped at zero, two
// thresholds splitting it into fatigue levels, and an alarm/escalation
// state machine driven by those levels.

struct FatigueAccumulator {
    long long r = 0;  // running sum, never negative
    double t = 0.0;   // elapsed seconds

    bool operator==(const FatigueAccumulator&) const = default;
};

struct AlertConfig {
    long long t_low = 5;
    long long t_high = 15;
    double alarm_duration = 10.0;
    double high_persist = 5.0;
    bool water_spray_enabled = false;
    double sample_period = 1.0;
    bool realarm_on_recheck = false;  // emit a fresh AlarmOn at each low-level re-check

    /// Throws InvalidArgument unless 1 <= t_low < t_high and the durations are positive.
    void validate() const;
    bool operator==(const AlertConfig&) const = default;
};

enum class FatigueLevel { None = 0, Low = 1, High = 2 };

enum class AlertMode { Idle, LowAlarm, HighAlert };

struct AlertState {
    AlertMode mode = AlertMode::Idle;
    double remaining = 0.0;        // LowAlarm: seconds until the re-check
    double elapsed_in_high = 0.0;  // HighAlert: seconds since the episode began
    bool stop_issued = false;
    bool alarm_on = false;

    bool operator==(const AlertState&) const = default;
};

enum class ActuatorAction { AlarmOn, AlarmOff, ReduceSpeed, StopVehicle, WaterSpray };

struct ActuatorEvent {
    ActuatorAction action;
    double timestamp = 0.0;

    bool operator==(const ActuatorEvent&) const = default;
};

const char* to_string(FatigueLevel level) noexcept;
const char* to_string(AlertMode mode) noexcept;
const char* to_string(ActuatorAction action) noexcept;

/// r' = max(0, r + label), t' = t + sample_period.
FatigueAccumulator step(FatigueAccumulator acc, ClassLabel label, double sample_period = 1.0);

/// Time passes, r is untouched (used for frames that produced no label).
FatigueAccumulator idle_step(FatigueAccumulator acc, double sample_period = 1.0);

/// High when r >= t_high, Low when t_low <= r < t_high, otherwise None.
FatigueLevel level(const FatigueAccumulator& acc, const AlertConfig& config);

struct AlertStep {
    AlertState state;
    std::vector<ActuatorEvent> events;
};

/// Advances the alarm state machine by one tick of length dt ending at `now`.
///
/// Idle + Low enters LowAlarm(alarm_duration) and switches the alarm on.
/// LowAlarm counts down; at expiry a Low level restarts the countdown and a
/// None level returns to Idle with AlarmOff. A High level from any state
/// enters HighAlert, emitting ReduceSpeed (and WaterSpray when enabled) once.
/// HighAlert counts time from the tick after entry and emits StopVehicle once
/// that time reaches high_persist. Leaving HighAlert turns a sounding alarm
/// off and re-applies the Idle rules on the same tick.
AlertStep alert_step(const AlertState& state, FatigueLevel level, double dt, double now, const AlertConfig& config);

struct TraceTick {
    double t = 0.0;
    long long r = 0;
    FatigueLevel level = FatigueLevel::None;
    AlertMode mode = AlertMode::Idle;

    bool operator==(const TraceTick&) const = default;
};

struct Trace {
    AlertConfig config;
    std::vector<TraceTick> ticks;
    std::vector<ActuatorEvent> events;

    bool operator==(const Trace&) const = default;
};

/// Incremental driver: one call per classifier output.
class AlertUnit {
public:
    explicit AlertUnit(AlertConfig config);

    /// `label` is empty for frames that produced no classification.
    const TraceTick& push(std::optional<ClassLabel> label);

    const Trace& trace() const noexcept { return trace_; }
    const FatigueAccumulator& accumulator() const noexcept { return acc_; }
    const AlertState& state() const noexcept { return state_; }

private:
    FatigueAccumulator acc_;
    AlertState state_;
    Trace trace_;
};

/// Folds step -> level -> alert_step from (r = 0, t = 0, Idle).
Trace simulate(std::span<const ClassLabel> labels, const AlertConfig& config);

/// Line-oriented text: a '#' header with the configuration, then
/// `TICK <t> <r> <level> <mode>` per tick followed by that tick's `EVENT <t> <name>` lines.
std::string format_trace(const Trace& trace);

}  // namespace drowsy
