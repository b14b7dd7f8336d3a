#pragma once

#include <random>

#include "pbpm/tensor.hpp"

namespace pbpm::nn {

/// Glorot-uniform fill: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

/// Orthogonal fill for square-or-tall [rows, cols] matrices via QR of a
/// standard-normal draw, sign-fixed so the factorization is unique.
void orthogonal(Tensor& t, std::size_t rows, std::size_t cols, std::mt19937_64& rng);

void normal(Tensor& t, double mean, double stddev, std::mt19937_64& rng);

}  // namespace pbpm::nn
