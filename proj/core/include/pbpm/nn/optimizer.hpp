#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>

#include "pbpm/nn/layers.hpp"
#include "pbpm/tensor.hpp"

namespace pbpm::nn {

enum class OptimizerKind { adam, sgd, rmsprop };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double sgd_momentum = 0.0;
    double rms_alpha = 0.99;
    double rms_momentum = 0.0;
    double rms_epsilon = 1e-8;
};

/// Adam (bias-corrected), SGD with classical momentum, and RMSprop with a
/// decaying square accumulator and optional momentum. Moment buffers are keyed
/// by parameter name so state survives checkpoint round-trips.
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig config) : config_(config) {}

    void step(std::span<Param> params, double lr);

    std::uint64_t step_count() const { return step_count_; }
    const OptimizerConfig& config() const { return config_; }

    void save(std::ostream& out) const;
    void load(std::istream& in);

private:
    struct Slot {
        Tensor first;   // Adam m / SGD velocity / RMSprop square accumulator
        Tensor second;  // Adam v / RMSprop momentum buffer
    };
    Slot& slot_for(const Param& p);

    OptimizerConfig config_;
    std::uint64_t step_count_ = 0;
    std::map<std::string, Slot> state_;
};

}  // namespace pbpm::nn
