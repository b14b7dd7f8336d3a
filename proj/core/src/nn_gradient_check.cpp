#include "pbpm/nn/gradient_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace pbpm::nn {

GradCheckResult gradient_check(std::span<Param> params,
                               const std::function<double()>& loss_and_grad,
                               double epsilon) {
    loss_and_grad();
    std::vector<Tensor> analytic;
    analytic.reserve(params.size());
    for (const Param& p : params) analytic.push_back(*p.grad);

    GradCheckResult result;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Param& p = params[pi];
        for (std::size_t i = 0; i < p.value->size(); ++i) {
            if (p.frozen_rows && p.row_width > 0) {
                std::size_t row = i / p.row_width;
                bool frozen = std::find(p.frozen_rows->begin(), p.frozen_rows->end(),
                                        static_cast<std::int32_t>(row)) != p.frozen_rows->end();
                if (frozen) continue;
            }
            double saved = (*p.value)[i];
            (*p.value)[i] = saved + epsilon;
            double up = loss_and_grad();
            (*p.value)[i] = saved - epsilon;
            double down = loss_and_grad();
            (*p.value)[i] = saved;

            double numeric = (up - down) / (2.0 * epsilon);
            double a = analytic[pi][i];
            double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-12});
            ++result.checked;
            if (err > result.max_rel_error) {
                result.max_rel_error = err;
                result.worst_param = p.name + "[" + std::to_string(i) + "]";
            }
        }
    }
    return result;
}

}  // namespace pbpm::nn
