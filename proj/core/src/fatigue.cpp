#include "drowsy/fatigue.hpp"

#include <algorithm>
#include <sstream>

#include "drowsy/error.hpp"
#include "drowsy/text_format.hpp"

namespace drowsy {

namespace {
// Tolerance for comparing accumulated floating-point durations.
constexpr double kTimeEps = 1e-9;
}  // namespace

void AlertConfig::validate() const {
    if (t_low < 1 || t_high <= t_low) throw Error(ErrorCode::InvalidArgument, "thresholds need 1 <= t_low < t_high");
    if (!(alarm_duration > 0.0)) throw Error(ErrorCode::InvalidArgument, "alarm_duration must be positive");
    if (!(sample_period > 0.0)) throw Error(ErrorCode::InvalidArgument, "sample_period must be positive");
    if (!(high_persist >= 0.0)) throw Error(ErrorCode::InvalidArgument, "high_persist must be non-negative");
}

const char* to_string(FatigueLevel level) noexcept {
    switch (level) {
        case FatigueLevel::None: return "None";
        case FatigueLevel::Low: return "Low";
        case FatigueLevel::High: return "High";
    }
    return "?";
}

const char* to_string(AlertMode mode) noexcept {
    switch (mode) {
        case AlertMode::Idle: return "Idle";
        case AlertMode::LowAlarm: return "LowAlarm";
        case AlertMode::HighAlert: return "HighAlert";
    }
    return "?";
}

const char* to_string(ActuatorAction action) noexcept {
    switch (action) {
        case ActuatorAction::AlarmOn: return "AlarmOn";
        case ActuatorAction::AlarmOff: return "AlarmOff";
        case ActuatorAction::ReduceSpeed: return "ReduceSpeed";
        case ActuatorAction::StopVehicle: return "StopVehicle";
        case ActuatorAction::WaterSpray: return "WaterSpray";
    }
    return "?";
}

FatigueAccumulator step(FatigueAccumulator acc, ClassLabel label, double sample_period) {
    acc.r = std::max(0LL, acc.r + to_int(label));
    acc.t += sample_period;
    return acc;
}

FatigueAccumulator idle_step(FatigueAccumulator acc, double sample_period) {
    acc.t += sample_period;
    return acc;
}

FatigueLevel level(const FatigueAccumulator& acc, const AlertConfig& config) {
    if (acc.r >= config.t_high) return FatigueLevel::High;
    if (acc.r >= config.t_low) return FatigueLevel::Low;
    return FatigueLevel::None;
}

AlertStep alert_step(const AlertState& state, FatigueLevel lvl, double dt, double now, const AlertConfig& config) {
    if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
    AlertStep out{state, {}};
    AlertState& s = out.state;
    auto emit = [&](ActuatorAction a) { out.events.push_back({a, now}); };

    auto enter_high = [&] {
        s.mode = AlertMode::HighAlert;
        s.remaining = 0.0;
        s.elapsed_in_high = 0.0;
        s.stop_issued = false;
        emit(ActuatorAction::ReduceSpeed);
        if (config.water_spray_enabled) emit(ActuatorAction::WaterSpray);
    };
    auto idle_rules = [&] {
        s.mode = AlertMode::Idle;
        s.remaining = 0.0;
        if (lvl == FatigueLevel::Low) {
            s.mode = AlertMode::LowAlarm;
            s.remaining = config.alarm_duration;
            if (!s.alarm_on) {
                emit(ActuatorAction::AlarmOn);
                s.alarm_on = true;
            }
        } else if (lvl == FatigueLevel::High) {
            enter_high();
        }
    };

    switch (state.mode) {
        case AlertMode::Idle:
            idle_rules();
            break;
        case AlertMode::LowAlarm:
            if (lvl == FatigueLevel::High) {
                enter_high();
                break;
            }
            s.remaining -= dt;
            if (s.remaining <= kTimeEps) {
                if (lvl == FatigueLevel::Low) {
                    s.remaining = config.alarm_duration;
                    if (config.realarm_on_recheck) {
                        emit(ActuatorAction::AlarmOff);
                        emit(ActuatorAction::AlarmOn);
                    }
                } else {
                    s.mode = AlertMode::Idle;
                    s.remaining = 0.0;
                    if (s.alarm_on) emit(ActuatorAction::AlarmOff);
                    s.alarm_on = false;
                }
            }
            break;
        case AlertMode::HighAlert:
            if (lvl == FatigueLevel::High) {
                s.elapsed_in_high += dt;
                if (!s.stop_issued && s.elapsed_in_high >= config.high_persist - kTimeEps) {
                    emit(ActuatorAction::StopVehicle);
                    s.stop_issued = true;
                }
                break;
            }
            if (s.alarm_on) emit(ActuatorAction::AlarmOff);
            s.alarm_on = false;
            s.elapsed_in_high = 0.0;
            s.stop_issued = false;
            idle_rules();
            break;
    }
    return out;
}

AlertUnit::AlertUnit(AlertConfig config) {
    config.validate();
    trace_.config = config;
}

const TraceTick& AlertUnit::push(std::optional<ClassLabel> label) {
    const AlertConfig& cfg = trace_.config;
    acc_ = label ? step(acc_, *label, cfg.sample_period) : idle_step(acc_, cfg.sample_period);
    const FatigueLevel lvl = level(acc_, cfg);
    auto result = alert_step(state_, lvl, cfg.sample_period, acc_.t, cfg);
    state_ = result.state;
    trace_.events.insert(trace_.events.end(), result.events.begin(), result.events.end());
    trace_.ticks.push_back({acc_.t, acc_.r, lvl, state_.mode});
    return trace_.ticks.back();
}

Trace simulate(std::span<const ClassLabel> labels, const AlertConfig& config) {
    AlertUnit unit(config);
    for (auto label : labels) unit.push(label);
    return unit.trace();
}

std::string format_trace(const Trace& trace) {
    const AlertConfig& c = trace.config;
    std::ostringstream out;
    out << "# alert t_low=" << c.t_low << " t_high=" << c.t_high << " alarm_duration=" << format_real(c.alarm_duration)
        << " high_persist=" << format_real(c.high_persist) << " water_spray=" << (c.water_spray_enabled ? 1 : 0)
        << " sample_period=" << format_real(c.sample_period) << " realarm_on_recheck=" << (c.realarm_on_recheck ? 1 : 0)
        << '\n';
    std::size_t e = 0;
    for (const auto& tick : trace.ticks) {
        out << "TICK " << format_real(tick.t) << ' ' << tick.r << ' ' << to_string(tick.level) << ' '
            << to_string(tick.mode) << '\n';
        while (e < trace.events.size() && trace.events[e].timestamp <= tick.t + kTimeEps) {
            out << "EVENT " << format_real(trace.events[e].timestamp) << ' ' << to_string(trace.events[e].action) << '\n';
            ++e;
        }
    }
    for (; e < trace.events.size(); ++e)
        out << "EVENT " << format_real(trace.events[e].timestamp) << ' ' << to_string(trace.events[e].action) << '\n';
    return out.str();
}

}  // namespace drowsy
