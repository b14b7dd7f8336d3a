#include "pbpm/nn/optimizer.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace pbpm::nn {

Optimizer::Slot& Optimizer::slot_for(const Param& p) {
    auto it = state_.find(p.name);
    if (it == state_.end()) {
        Slot slot;
        slot.first = Tensor(p.value->shape());
        slot.second = Tensor(p.value->shape());
        it = state_.emplace(p.name, std::move(slot)).first;
    }
    return it->second;
}

void Optimizer::step(std::span<Param> params, double lr) {
    ++step_count_;
    const double t = static_cast<double>(step_count_);
    for (Param& p : params) {
        Slot& s = slot_for(p);
        Tensor& theta = *p.value;
        const Tensor& g = *p.grad;
        switch (config_.kind) {
            case OptimizerKind::adam: {
                const double b1 = config_.adam_beta1, b2 = config_.adam_beta2;
                const double bc1 = 1.0 - std::pow(b1, t);
                const double bc2 = 1.0 - std::pow(b2, t);
                for (std::size_t i = 0; i < theta.size(); ++i) {
                    s.first[i] = b1 * s.first[i] + (1.0 - b1) * g[i];
                    s.second[i] = b2 * s.second[i] + (1.0 - b2) * g[i] * g[i];
                    double m_hat = s.first[i] / bc1;
                    double v_hat = s.second[i] / bc2;
                    theta[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.adam_epsilon);
                }
                break;
            }
            case OptimizerKind::sgd: {
                const double mu = config_.sgd_momentum;
                for (std::size_t i = 0; i < theta.size(); ++i) {
                    s.first[i] = mu * s.first[i] + g[i];
                    theta[i] -= lr * s.first[i];
                }
                break;
            }
            case OptimizerKind::rmsprop: {
                const double a = config_.rms_alpha, mu = config_.rms_momentum;
                for (std::size_t i = 0; i < theta.size(); ++i) {
                    s.first[i] = a * s.first[i] + (1.0 - a) * g[i] * g[i];
                    double update = g[i] / (std::sqrt(s.first[i]) + config_.rms_epsilon);
                    if (mu > 0.0) {
                        s.second[i] = mu * s.second[i] + update;
                        update = s.second[i];
                    }
                    theta[i] -= lr * update;
                }
                break;
            }
        }
    }
}

void Optimizer::save(std::ostream& out) const {
    std::uint64_t count = state_.size();
    out.write(reinterpret_cast<const char*>(&step_count_), sizeof(step_count_));
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    for (const auto& [name, slot] : state_) {
        std::uint64_t name_len = name.size(), n = slot.first.size();
        out.write(reinterpret_cast<const char*>(&name_len), sizeof(name_len));
        out.write(name.data(), static_cast<std::streamsize>(name_len));
        out.write(reinterpret_cast<const char*>(&n), sizeof(n));
        out.write(reinterpret_cast<const char*>(slot.first.data()),
                  static_cast<std::streamsize>(n * sizeof(double)));
        out.write(reinterpret_cast<const char*>(slot.second.data()),
                  static_cast<std::streamsize>(n * sizeof(double)));
    }
}

void Optimizer::load(std::istream& in) {
    std::uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&step_count_), sizeof(step_count_));
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    if (!in) throw std::runtime_error("Optimizer::load: truncated stream");
    state_.clear();
    for (std::uint64_t s = 0; s < count; ++s) {
        std::uint64_t name_len = 0, n = 0;
        in.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
        std::string name(name_len, '\0');
        in.read(name.data(), static_cast<std::streamsize>(name_len));
        in.read(reinterpret_cast<char*>(&n), sizeof(n));
        Slot slot;
        slot.first = Tensor({n});
        slot.second = Tensor({n});
        in.read(reinterpret_cast<char*>(slot.first.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
        in.read(reinterpret_cast<char*>(slot.second.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
        if (!in) throw std::runtime_error("Optimizer::load: truncated stream");
        state_.emplace(std::move(name), std::move(slot));
    }
}

}  // namespace pbpm::nn
