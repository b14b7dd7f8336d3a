#pragma once

#include <functional>
#include <span>
#include <string>

#include "pbpm/nn/layers.hpp"

namespace pbpm::nn {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t checked = 0;
};

/// Central-difference gradient verification. `loss_and_grad` must recompute
/// the loss for the current parameter values and leave fresh analytic
/// gradients in each Param's grad tensor (deterministic mode required:
/// dropout off, batch statistics frozen). Elements of frozen embedding rows
/// are skipped. Relative error: |a - n| / max(|a|, |n|, 1e-12).
GradCheckResult gradient_check(std::span<Param> params,
                               const std::function<double()>& loss_and_grad,
                               double epsilon = 1e-5);

}  // namespace pbpm::nn
