#include "pbpm/nn/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace pbpm::nn {

double LrSchedule::value(double step) const {
    switch (kind) {
        case ScheduleKind::exponential:
            return initial_lr * std::pow(decay_rate, step / decay_steps);
        case ScheduleKind::inverse_time:
            return initial_lr / (1.0 + decay_rate * step / decay_steps);
        case ScheduleKind::piecewise_constant: {
            for (std::size_t i = 0; i < boundaries.size(); ++i)
                if (step <= boundaries[i]) return values[i];
            return values.empty() ? initial_lr : values.back();
        }
        case ScheduleKind::polynomial: {
            double s = std::min(step, total_steps);
            return (initial_lr - end_lr) * std::pow(1.0 - s / total_steps, power) + end_lr;
        }
    }
    throw std::logic_error("LrSchedule::value: bad kind");
}

std::string schedule_kind_name(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::exponential: return "exponential";
        case ScheduleKind::inverse_time: return "inverse_time";
        case ScheduleKind::piecewise_constant: return "piecewise_constant";
        case ScheduleKind::polynomial: return "polynomial";
    }
    return "exponential";
}

ScheduleKind schedule_kind_from_name(const std::string& name) {
    if (name == "exponential") return ScheduleKind::exponential;
    if (name == "inverse_time") return ScheduleKind::inverse_time;
    if (name == "piecewise_constant") return ScheduleKind::piecewise_constant;
    if (name == "polynomial") return ScheduleKind::polynomial;
    throw std::invalid_argument("unknown schedule kind '" + name + "'");
}

}  // namespace pbpm::nn
