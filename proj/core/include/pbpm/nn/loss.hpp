#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pbpm/tensor.hpp"

namespace pbpm::nn {

/// Row-wise softmax with log-sum-exp stabilization.
Tensor softmax(const Tensor& logits);

/// Mean weighted cross-entropy over the batch: loss_i = -w[label_i] *
/// ln softmax(logits_i)[label_i]. Empty `class_weights` means all ones.
/// When `dlogits` is non-null it receives the exact gradient.
double softmax_cross_entropy(const Tensor& logits, std::span<const std::int32_t> labels,
                             std::span<const double> class_weights, Tensor* dlogits);

}  // namespace pbpm::nn
