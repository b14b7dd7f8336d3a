#pragma once

#include <string>
#include <vector>

namespace pbpm::nn {

enum class ScheduleKind { exponential, inverse_time, piecewise_constant, polynomial };

/// Learning-rate decay schedules:
///  - exponential:        lr0 * rate^(step / decay_steps)
///  - inverse_time:       lr0 / (1 + rate * step / decay_steps)
///  - piecewise_constant: values[i] on the interval ending at boundaries[i]
///  - polynomial:         (lr0 - end) * (1 - step/total)^power + end, clamped
struct LrSchedule {
    ScheduleKind kind = ScheduleKind::exponential;
    double initial_lr = 1e-3;
    double decay_rate = 0.96;
    double decay_steps = 100.0;
    std::vector<double> boundaries;  // piecewise: strictly increasing step bounds
    std::vector<double> values;      // piecewise: boundaries.size() + 1 rates
    double power = 1.0;
    double end_lr = 1e-5;
    double total_steps = 1000.0;

    double value(double step) const;
};

std::string schedule_kind_name(ScheduleKind kind);
ScheduleKind schedule_kind_from_name(const std::string& name);

}  // namespace pbpm::nn
