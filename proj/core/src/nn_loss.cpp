#include "pbpm/nn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pbpm::nn {

Tensor softmax(const Tensor& logits) {
    const std::size_t n = logits.dim(0), k = logits.dim(1);
    Tensor out({n, k});
    for (std::size_t i = 0; i < n; ++i) {
        double mx = logits(i, 0);
        for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, logits(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            out(i, j) = std::exp(logits(i, j) - mx);
            sum += out(i, j);
        }
        for (std::size_t j = 0; j < k; ++j) out(i, j) /= sum;
    }
    return out;
}

double softmax_cross_entropy(const Tensor& logits, std::span<const std::int32_t> labels,
                             std::span<const double> class_weights, Tensor* dlogits) {
    const std::size_t n = logits.dim(0), k = logits.dim(1);
    if (labels.size() != n)
        throw std::invalid_argument("softmax_cross_entropy: label count mismatch");
    if (!class_weights.empty() && class_weights.size() != k)
        throw std::invalid_argument("softmax_cross_entropy: class weight count mismatch");
    if (dlogits) *dlogits = Tensor({n, k});

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::int32_t label = labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= k)
            throw std::out_of_range("softmax_cross_entropy: label out of range");
        double w = class_weights.empty() ? 1.0 : class_weights[static_cast<std::size_t>(label)];

        double mx = logits(i, 0);
        for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, logits(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) sum += std::exp(logits(i, j) - mx);
        double log_z = mx + std::log(sum);
        total += w * (log_z - logits(i, static_cast<std::size_t>(label)));

        if (dlogits) {
            for (std::size_t j = 0; j < k; ++j) {
                double p = std::exp(logits(i, j) - log_z);
                double target = j == static_cast<std::size_t>(label) ? 1.0 : 0.0;
                (*dlogits)(i, j) = w * (p - target) / static_cast<double>(n);
            }
        }
    }
    return total / static_cast<double>(n);
}

}  // namespace pbpm::nn
