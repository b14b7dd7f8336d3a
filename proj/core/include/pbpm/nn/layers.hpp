#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pbpm/tensor.hpp"

namespace pbpm::nn {

enum class Mode {
    train,        // batch statistics, dropout active
    eval,         // running statistics, dropout off
    frozen_stats  // batch statistics without running updates, dropout off (gradient checking)
};

enum class Activation { identity, relu, leaky_relu, tanh, softmax };

/// Trainable parameter handle. `frozen_rows` (with `row_width`) marks embedding
/// rows excluded from training and from numeric gradient checking.
struct Param {
    std::string name;
    Tensor* value = nullptr;
    Tensor* grad = nullptr;
    double l2 = 0.0;
    const std::vector<std::int32_t>* frozen_rows = nullptr;
    std::size_t row_width = 0;
};

/// Standard LSTM cell over padded batches. Masked timesteps pass hidden and
/// cell state through unchanged; their emitted outputs repeat the previous
/// hidden state so the value at the last unmasked step survives to the end.
class Lstm {
public:
    Lstm(std::size_t input_size, std::size_t units, double l2, std::mt19937_64& rng);

    /// x: [B,T,input], mask: [B*T]; returns hidden sequence [B,T,units].
    Tensor forward(const Tensor& x, const std::vector<std::uint8_t>& mask,
                   const Tensor* h0 = nullptr, const Tensor* c0 = nullptr);
    /// dh_seq: [B,T,units]; accumulates parameter gradients, returns dx.
    Tensor backward(const Tensor& dh_seq);

    /// Hidden/cell state after the last step of the most recent forward.
    void final_state(Tensor& h, Tensor& c) const;

    void collect_params(const std::string& prefix, std::vector<Param>& out);
    void zero_grad();
    std::size_t units() const { return units_; }
    std::size_t input_size() const { return input_size_; }

private:
    std::size_t input_size_ = 0, units_ = 0;
    double l2_ = 0.0;
    Tensor w_x_, w_h_, bias_;     // [in,4U], [U,4U], [4U]; gate order i,f,g,o
    Tensor gw_x_, gw_h_, gbias_;

    // forward cache
    Tensor x_, acts_, c_all_, h_all_;  // acts_[T,B,4U] post-activation; *_all_[T+1,B,U]
    std::vector<std::uint8_t> mask_;
    std::size_t batch_ = 0, steps_ = 0;
};

class Dense {
public:
    Dense(std::size_t input_size, std::size_t units, Activation act, double leaky_alpha,
          double l2, std::mt19937_64& rng);

    Tensor forward(const Tensor& x);   // [N,in] -> [N,units]
    Tensor backward(const Tensor& dy); // returns dx, accumulates gradients

    void collect_params(const std::string& prefix, std::vector<Param>& out);
    void zero_grad();
    std::size_t units() const { return units_; }

private:
    std::size_t input_size_ = 0, units_ = 0;
    Activation act_ = Activation::identity;
    double leaky_alpha_ = 0.01, l2_ = 0.0;
    Tensor w_, b_, gw_, gb_;
    Tensor x_, pre_, y_;  // cache
};

/// Per-feature batch normalization. Training mode uses (optionally row-masked)
/// batch statistics with biased variance and updates running statistics as
/// running = running * momentum + batch * (1 - momentum).
class BatchNorm {
public:
    BatchNorm(std::size_t features, double momentum, double epsilon);

    Tensor forward(const Tensor& x, Mode mode,
                   const std::vector<std::uint8_t>* row_mask = nullptr);
    Tensor backward(const Tensor& dy);

    void collect_params(const std::string& prefix, std::vector<Param>& out);
    void zero_grad();
    Tensor& running_mean() { return running_mean_; }
    Tensor& running_var() { return running_var_; }

private:
    std::size_t features_ = 0;
    double momentum_ = 0.99, epsilon_ = 1e-3;
    Tensor gamma_, beta_, ggamma_, gbeta_;
    Tensor running_mean_, running_var_;

    // cache
    Tensor x_hat_, mean_, inv_std_, x_centered_;
    std::vector<std::uint8_t> rows_used_;
    std::size_t m_ = 0;
    bool batch_stats_ = false;
};

/// Inverted dropout: surviving units scaled by 1/(1-rate) at train time so
/// inference is the identity.
class Dropout {
public:
    explicit Dropout(double rate);

    Tensor forward(const Tensor& x, Mode mode, std::mt19937_64& rng);
    Tensor backward(const Tensor& dy);
    double rate() const { return rate_; }

private:
    double rate_ = 0.0;
    Tensor keep_;  // scaled keep mask, empty when inactive
};

/// Index lookup table with frozen rows (padding, <NO_DESC>) that receive zero
/// gradient and stay zero.
class Embedding {
public:
    Embedding(std::size_t rows, std::size_t dim, std::mt19937_64& rng,
              std::vector<std::int32_t> frozen_rows = {0, 1});

    Tensor forward(std::span<const std::int32_t> indices);  // [N,dim]
    void backward(const Tensor& dy);                        // indices have no gradient

    void collect_params(const std::string& prefix, std::vector<Param>& out);
    void zero_grad();
    std::size_t dim() const { return dim_; }
    const Tensor& table() const { return table_; }
    Tensor& table() { return table_; }

private:
    std::size_t rows_ = 0, dim_ = 0;
    Tensor table_, gtable_;
    std::vector<std::int32_t> frozen_rows_;
    std::vector<std::int32_t> last_indices_;
};

/// Elementwise activations shared by Dense and tests.
double apply_activation(Activation act, double pre, double leaky_alpha);

}  // namespace pbpm::nn
