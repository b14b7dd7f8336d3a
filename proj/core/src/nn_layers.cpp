#include "pbpm/nn/layers.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pbpm/nn/init.hpp"

namespace pbpm::nn {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<RowMat>;
using ConstMap = Eigen::Map<const RowMat>;

namespace {

[[noreturn]] void shape_fail(const std::string& where, std::size_t got, std::size_t want) {
    throw std::invalid_argument(where + ": input width " + std::to_string(got) +
                                " does not match layer width " + std::to_string(want));
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-a, a);
    for (auto& v : t.values()) v = dist(rng);
}

void normal(Tensor& t, double mean, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(mean, stddev);
    for (auto& v : t.values()) v = dist(rng);
}

void orthogonal(Tensor& t, std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::size_t n = std::max(rows, cols);
    RowMat a(n, n);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = dist(rng);
    Eigen::HouseholderQR<RowMat> qr(a);
    RowMat q = qr.householderQ();
    RowMat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < q.cols(); ++i)
        if (r(i, i) < 0) q.col(i) = -q.col(i);
    Map out(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    out = q.topLeftCorner(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

double apply_activation(Activation act, double pre, double leaky_alpha) {
    switch (act) {
        case Activation::identity: return pre;
        case Activation::relu: return pre > 0.0 ? pre : 0.0;
        case Activation::leaky_relu: return pre > 0.0 ? pre : leaky_alpha * pre;
        case Activation::tanh: return std::tanh(pre);
        case Activation::softmax: break;  // row-wise, handled by the layer
    }
    throw std::invalid_argument("apply_activation: softmax is not elementwise");
}

// ---------------------------------------------------------------------------
// LSTM

Lstm::Lstm(std::size_t input_size, std::size_t units, double l2, std::mt19937_64& rng)
    : input_size_(input_size),
      units_(units),
      l2_(l2),
      w_x_({input_size, 4 * units}),
      w_h_({units, 4 * units}),
      bias_({4 * units}),
      gw_x_({input_size, 4 * units}),
      gw_h_({units, 4 * units}),
      gbias_({4 * units}) {
    glorot_uniform(w_x_, input_size, 4 * units, rng);
    // Orthogonal recurrent weights, built gate-by-gate.
    Tensor block({units, units});
    for (std::size_t g = 0; g < 4; ++g) {
        orthogonal(block, units, units, rng);
        for (std::size_t i = 0; i < units; ++i)
            for (std::size_t j = 0; j < units; ++j)
                w_h_(i, g * units + j) = block(i, j);
    }
    // Forget-gate bias starts at 1 so early training retains state.
    for (std::size_t j = 0; j < units; ++j) bias_[units + j] = 1.0;
}

Tensor Lstm::forward(const Tensor& x, const std::vector<std::uint8_t>& mask, const Tensor* h0,
                     const Tensor* c0) {
    if (x.rank() != 3 || x.dim(2) != input_size_) shape_fail("Lstm::forward", x.dim(2), input_size_);
    batch_ = x.dim(0);
    steps_ = x.dim(1);
    if (mask.size() != batch_ * steps_)
        throw std::invalid_argument("Lstm::forward: mask length " + std::to_string(mask.size()) +
                                    " != batch*steps " + std::to_string(batch_ * steps_));
    x_ = x;
    mask_ = mask;
    acts_ = Tensor({steps_, batch_, 4 * units_});
    c_all_ = Tensor({steps_ + 1, batch_, units_});
    h_all_ = Tensor({steps_ + 1, batch_, units_});
    if (h0) std::copy(h0->data(), h0->data() + batch_ * units_, h_all_.data());
    if (c0) std::copy(c0->data(), c0->data() + batch_ * units_, c_all_.data());

    Tensor out({batch_, steps_, units_});
    ConstMap wx(w_x_.data(), input_size_, 4 * units_);
    ConstMap wh(w_h_.data(), units_, 4 * units_);
    Eigen::Map<const Eigen::RowVectorXd> b(bias_.data(), 4 * units_);

    RowMat xt(batch_, input_size_);
    RowMat z(batch_, 4 * units_);
    for (std::size_t t = 0; t < steps_; ++t) {
        for (std::size_t bi = 0; bi < batch_; ++bi)
            for (std::size_t k = 0; k < input_size_; ++k) xt(bi, k) = x(bi, t, k);
        Map h_prev(h_all_.data() + t * batch_ * units_, batch_, units_);
        Map c_prev(c_all_.data() + t * batch_ * units_, batch_, units_);
        Map h_cur(h_all_.data() + (t + 1) * batch_ * units_, batch_, units_);
        Map c_cur(c_all_.data() + (t + 1) * batch_ * units_, batch_, units_);
        Map act(acts_.data() + t * batch_ * 4 * units_, batch_, 4 * units_);

        z.noalias() = xt * wx;
        z.noalias() += h_prev * wh;
        z.rowwise() += b;

        for (std::size_t bi = 0; bi < batch_; ++bi) {
            if (!mask_[bi * steps_ + t]) {
                h_cur.row(bi) = h_prev.row(bi);
                c_cur.row(bi) = c_prev.row(bi);
                act.row(bi).setZero();
                continue;
            }
            for (std::size_t j = 0; j < units_; ++j) {
                double zi = z(bi, j);
                double zf = z(bi, units_ + j);
                double zg = z(bi, 2 * units_ + j);
                double zo = z(bi, 3 * units_ + j);
                double i_g = sigmoid(zi);
                double f_g = sigmoid(zf);
                double g_g = std::tanh(zg);
                double o_g = sigmoid(zo);
                double c_new = f_g * c_prev(bi, j) + i_g * g_g;
                act(bi, j) = i_g;
                act(bi, units_ + j) = f_g;
                act(bi, 2 * units_ + j) = g_g;
                act(bi, 3 * units_ + j) = o_g;
                c_cur(bi, j) = c_new;
                h_cur(bi, j) = o_g * std::tanh(c_new);
            }
        }
        for (std::size_t bi = 0; bi < batch_; ++bi)
            for (std::size_t j = 0; j < units_; ++j) out(bi, t, j) = h_cur(bi, j);
    }
    return out;
}

Tensor Lstm::backward(const Tensor& dh_seq) {
    if (dh_seq.dim(0) != batch_ || dh_seq.dim(1) != steps_ || dh_seq.dim(2) != units_)
        throw std::invalid_argument("Lstm::backward: gradient shape mismatch");

    Tensor dx({batch_, steps_, input_size_});
    RowMat dh_next = RowMat::Zero(batch_, units_);
    RowMat dc_next = RowMat::Zero(batch_, units_);
    RowMat dz(batch_, 4 * units_);
    RowMat xt(batch_, input_size_);

    ConstMap wx(w_x_.data(), input_size_, 4 * units_);
    ConstMap wh(w_h_.data(), units_, 4 * units_);
    Map gwx(gw_x_.data(), input_size_, 4 * units_);
    Map gwh(gw_h_.data(), units_, 4 * units_);
    Eigen::Map<Eigen::RowVectorXd> gb(gbias_.data(), 4 * units_);

    for (std::size_t t = steps_; t-- > 0;) {
        ConstMap act(acts_.data() + t * batch_ * 4 * units_, batch_, 4 * units_);
        ConstMap c_prev(c_all_.data() + t * batch_ * units_, batch_, units_);
        ConstMap c_cur(c_all_.data() + (t + 1) * batch_ * units_, batch_, units_);
        ConstMap h_prev(h_all_.data() + t * batch_ * units_, batch_, units_);

        for (std::size_t bi = 0; bi < batch_; ++bi) {
            if (!mask_[bi * steps_ + t]) {
                // pass-through step: upstream gradient joins the carry
                for (std::size_t j = 0; j < units_; ++j) dh_next(bi, j) += dh_seq(bi, t, j);
                dz.row(bi).setZero();
                continue;
            }
            for (std::size_t j = 0; j < units_; ++j) {
                double dh = dh_seq(bi, t, j) + dh_next(bi, j);
                double i_g = act(bi, j);
                double f_g = act(bi, units_ + j);
                double g_g = act(bi, 2 * units_ + j);
                double o_g = act(bi, 3 * units_ + j);
                double tc = std::tanh(c_cur(bi, j));
                double dc = dc_next(bi, j) + dh * o_g * (1.0 - tc * tc);
                double d_o = dh * tc;
                double d_i = dc * g_g;
                double d_g = dc * i_g;
                double d_f = dc * c_prev(bi, j);
                dc_next(bi, j) = dc * f_g;
                dz(bi, j) = d_i * i_g * (1.0 - i_g);
                dz(bi, units_ + j) = d_f * f_g * (1.0 - f_g);
                dz(bi, 2 * units_ + j) = d_g * (1.0 - g_g * g_g);
                dz(bi, 3 * units_ + j) = d_o * o_g * (1.0 - o_g);
            }
        }

        for (std::size_t bi = 0; bi < batch_; ++bi)
            for (std::size_t k = 0; k < input_size_; ++k) xt(bi, k) = x_(bi, t, k);

        gwx.noalias() += xt.transpose() * dz;
        gwh.noalias() += h_prev.transpose() * dz;
        gb += dz.colwise().sum();

        RowMat dxt = dz * wx.transpose();
        RowMat dh_prev = dz * wh.transpose();
        for (std::size_t bi = 0; bi < batch_; ++bi) {
            bool live = mask_[bi * steps_ + t];
            for (std::size_t k = 0; k < input_size_; ++k)
                dx(bi, t, k) = live ? dxt(bi, k) : 0.0;
            if (live) dh_next.row(bi) = dh_prev.row(bi);
        }
    }
    return dx;
}

void Lstm::final_state(Tensor& h, Tensor& c) const {
    h = Tensor({batch_, units_});
    c = Tensor({batch_, units_});
    std::copy(h_all_.data() + steps_ * batch_ * units_,
              h_all_.data() + (steps_ + 1) * batch_ * units_, h.data());
    std::copy(c_all_.data() + steps_ * batch_ * units_,
              c_all_.data() + (steps_ + 1) * batch_ * units_, c.data());
}

void Lstm::collect_params(const std::string& prefix, std::vector<Param>& out) {
    out.push_back({prefix + ".w_x", &w_x_, &gw_x_, l2_, nullptr, 0});
    out.push_back({prefix + ".w_h", &w_h_, &gw_h_, l2_, nullptr, 0});
    out.push_back({prefix + ".bias", &bias_, &gbias_, 0.0, nullptr, 0});
}

void Lstm::zero_grad() {
    gw_x_.fill(0.0);
    gw_h_.fill(0.0);
    gbias_.fill(0.0);
}

// ---------------------------------------------------------------------------
// Dense

Dense::Dense(std::size_t input_size, std::size_t units, Activation act, double leaky_alpha,
             double l2, std::mt19937_64& rng)
    : input_size_(input_size),
      units_(units),
      act_(act),
      leaky_alpha_(leaky_alpha),
      l2_(l2),
      w_({input_size, units}),
      b_({units}),
      gw_({input_size, units}),
      gb_({units}) {
    glorot_uniform(w_, input_size, units, rng);
}

Tensor Dense::forward(const Tensor& x) {
    if (x.rank() != 2 || x.dim(1) != input_size_) shape_fail("Dense::forward", x.dim(1), input_size_);
    x_ = x;
    const std::size_t n = x.dim(0);
    pre_ = Tensor({n, units_});
    ConstMap xm(x.data(), n, input_size_);
    ConstMap wm(w_.data(), input_size_, units_);
    Map pm(pre_.data(), n, units_);
    pm.noalias() = xm * wm;
    pm.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(b_.data(), units_);

    y_ = Tensor({n, units_});
    if (act_ == Activation::softmax) {
        for (std::size_t i = 0; i < n; ++i) {
            double mx = pre_(i, 0);
            for (std::size_t j = 1; j < units_; ++j) mx = std::max(mx, pre_(i, j));
            double sum = 0.0;
            for (std::size_t j = 0; j < units_; ++j) {
                y_(i, j) = std::exp(pre_(i, j) - mx);
                sum += y_(i, j);
            }
            for (std::size_t j = 0; j < units_; ++j) y_(i, j) /= sum;
        }
    } else {
        for (std::size_t i = 0; i < y_.size(); ++i)
            y_[i] = apply_activation(act_, pre_[i], leaky_alpha_);
    }
    return y_;
}

Tensor Dense::backward(const Tensor& dy) {
    const std::size_t n = dy.dim(0);
    Tensor dpre({n, units_});
    if (act_ == Activation::softmax) {
        // dL/dz_j = y_j * (g_j - sum_k g_k y_k)
        for (std::size_t i = 0; i < n; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < units_; ++j) dot += dy(i, j) * y_(i, j);
            for (std::size_t j = 0; j < units_; ++j) dpre(i, j) = y_(i, j) * (dy(i, j) - dot);
        }
    } else {
        for (std::size_t i = 0; i < dpre.size(); ++i) {
            double d = 1.0;
            switch (act_) {
                case Activation::identity: d = 1.0; break;
                case Activation::relu: d = pre_[i] > 0.0 ? 1.0 : 0.0; break;
                case Activation::leaky_relu: d = pre_[i] > 0.0 ? 1.0 : leaky_alpha_; break;
                case Activation::tanh: d = 1.0 - y_[i] * y_[i]; break;
                case Activation::softmax: break;
            }
            dpre[i] = dy[i] * d;
        }
    }
    ConstMap xm(x_.data(), n, input_size_);
    ConstMap dpm(dpre.data(), n, units_);
    Map gwm(gw_.data(), input_size_, units_);
    gwm.noalias() += xm.transpose() * dpm;
    Eigen::Map<Eigen::RowVectorXd>(gb_.data(), units_) += dpm.colwise().sum();

    Tensor dx({n, input_size_});
    Map dxm(dx.data(), n, input_size_);
    ConstMap wm(w_.data(), input_size_, units_);
    dxm.noalias() = dpm * wm.transpose();
    return dx;
}

void Dense::collect_params(const std::string& prefix, std::vector<Param>& out) {
    out.push_back({prefix + ".w", &w_, &gw_, l2_, nullptr, 0});
    out.push_back({prefix + ".b", &b_, &gb_, 0.0, nullptr, 0});
}

void Dense::zero_grad() {
    gw_.fill(0.0);
    gb_.fill(0.0);
}

// ---------------------------------------------------------------------------
// BatchNorm

BatchNorm::BatchNorm(std::size_t features, double momentum, double epsilon)
    : features_(features),
      momentum_(momentum),
      epsilon_(epsilon),
      gamma_({features}),
      beta_({features}),
      ggamma_({features}),
      gbeta_({features}),
      running_mean_({features}),
      running_var_({features}) {
    gamma_.fill(1.0);
    running_var_.fill(1.0);
}

Tensor BatchNorm::forward(const Tensor& x, Mode mode,
                          const std::vector<std::uint8_t>* row_mask) {
    if (x.rank() != 2 || x.dim(1) != features_) shape_fail("BatchNorm::forward", x.dim(1), features_);
    const std::size_t n = x.dim(0);
    batch_stats_ = mode != Mode::eval;
    rows_used_.assign(n, 1);
    if (row_mask) {
        if (row_mask->size() != n)
            throw std::invalid_argument("BatchNorm::forward: row mask size mismatch");
        rows_used_ = *row_mask;
    }
    m_ = 0;
    for (auto r : rows_used_) m_ += r ? 1 : 0;
    if (batch_stats_ && m_ == 0)
        throw std::invalid_argument("BatchNorm::forward: empty batch in training mode");

    mean_ = Tensor({features_});
    Tensor var({features_});
    if (batch_stats_) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!rows_used_[i]) continue;
            for (std::size_t j = 0; j < features_; ++j) mean_[j] += x(i, j);
        }
        for (std::size_t j = 0; j < features_; ++j) mean_[j] /= static_cast<double>(m_);
        for (std::size_t i = 0; i < n; ++i) {
            if (!rows_used_[i]) continue;
            for (std::size_t j = 0; j < features_; ++j) {
                double d = x(i, j) - mean_[j];
                var[j] += d * d;
            }
        }
        for (std::size_t j = 0; j < features_; ++j) var[j] /= static_cast<double>(m_);
        if (mode == Mode::train) {
            for (std::size_t j = 0; j < features_; ++j) {
                running_mean_[j] = running_mean_[j] * momentum_ + mean_[j] * (1.0 - momentum_);
                running_var_[j] = running_var_[j] * momentum_ + var[j] * (1.0 - momentum_);
            }
        }
    } else {
        mean_ = running_mean_;
        var = running_var_;
    }

    inv_std_ = Tensor({features_});
    for (std::size_t j = 0; j < features_; ++j) inv_std_[j] = 1.0 / std::sqrt(var[j] + epsilon_);

    x_centered_ = Tensor({n, features_});
    x_hat_ = Tensor({n, features_});
    Tensor y({n, features_});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < features_; ++j) {
            x_centered_(i, j) = x(i, j) - mean_[j];
            x_hat_(i, j) = x_centered_(i, j) * inv_std_[j];
            y(i, j) = gamma_[j] * x_hat_(i, j) + beta_[j];
        }
    }
    return y;
}

Tensor BatchNorm::backward(const Tensor& dy) {
    const std::size_t n = dy.dim(0);
    Tensor dx({n, features_});
    for (std::size_t j = 0; j < features_; ++j) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!rows_used_[i]) continue;
            sum_dy += dy(i, j);
            sum_dy_xhat += dy(i, j) * x_hat_(i, j);
        }
        ggamma_[j] += sum_dy_xhat;
        gbeta_[j] += sum_dy;

        if (batch_stats_) {
            double inv_m = 1.0 / static_cast<double>(m_);
            for (std::size_t i = 0; i < n; ++i) {
                if (rows_used_[i]) {
                    dx(i, j) = gamma_[j] * inv_std_[j] *
                               (dy(i, j) - inv_m * sum_dy - x_hat_(i, j) * inv_m * sum_dy_xhat);
                } else {
                    // rows outside the statistic set see the stats as constants
                    dx(i, j) = dy(i, j) * gamma_[j] * inv_std_[j];
                }
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) dx(i, j) = dy(i, j) * gamma_[j] * inv_std_[j];
        }
    }
    return dx;
}

void BatchNorm::collect_params(const std::string& prefix, std::vector<Param>& out) {
    out.push_back({prefix + ".gamma", &gamma_, &ggamma_, 0.0, nullptr, 0});
    out.push_back({prefix + ".beta", &beta_, &gbeta_, 0.0, nullptr, 0});
}

void BatchNorm::zero_grad() {
    ggamma_.fill(0.0);
    gbeta_.fill(0.0);
}

// ---------------------------------------------------------------------------
// Dropout

Dropout::Dropout(double rate) : rate_(rate) {
    if (rate < 0.0 || rate >= 1.0)
        throw std::invalid_argument("Dropout: rate must be in [0,1)");
}

Tensor Dropout::forward(const Tensor& x, Mode mode, std::mt19937_64& rng) {
    if (mode != Mode::train || rate_ == 0.0) {
        keep_ = Tensor();
        return x;
    }
    keep_ = Tensor(x.shape());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double scale = 1.0 / (1.0 - rate_);
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        keep_[i] = u(rng) < rate_ ? 0.0 : scale;
        y[i] = x[i] * keep_[i];
    }
    return y;
}

Tensor Dropout::backward(const Tensor& dy) {
    if (keep_.empty()) return dy;
    Tensor dx(dy.shape());
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * keep_[i];
    return dx;
}

// ---------------------------------------------------------------------------
// Embedding

Embedding::Embedding(std::size_t rows, std::size_t dim, std::mt19937_64& rng,
                     std::vector<std::int32_t> frozen_rows)
    : rows_(rows), dim_(dim), table_({rows, dim}), gtable_({rows, dim}),
      frozen_rows_(std::move(frozen_rows)) {
    glorot_uniform(table_, rows, dim, rng);
    for (std::int32_t r : frozen_rows_)
        for (std::size_t j = 0; j < dim_; ++j) table_(static_cast<std::size_t>(r), j) = 0.0;
}

Tensor Embedding::forward(std::span<const std::int32_t> indices) {
    last_indices_.assign(indices.begin(), indices.end());
    Tensor out({indices.size(), dim_});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        std::int32_t idx = indices[i];
        if (idx < 0 || static_cast<std::size_t>(idx) >= rows_)
            throw std::out_of_range("Embedding::forward: index " + std::to_string(idx) +
                                    " out of range [0," + std::to_string(rows_) + ")");
        for (std::size_t j = 0; j < dim_; ++j) out(i, j) = table_(static_cast<std::size_t>(idx), j);
    }
    return out;
}

void Embedding::backward(const Tensor& dy) {
    for (std::size_t i = 0; i < last_indices_.size(); ++i) {
        std::size_t row = static_cast<std::size_t>(last_indices_[i]);
        for (std::size_t j = 0; j < dim_; ++j) gtable_(row, j) += dy(i, j);
    }
    for (std::int32_t r : frozen_rows_)
        for (std::size_t j = 0; j < dim_; ++j) gtable_(static_cast<std::size_t>(r), j) = 0.0;
}

void Embedding::collect_params(const std::string& prefix, std::vector<Param>& out) {
    out.push_back({prefix + ".table", &table_, &gtable_, 0.0, &frozen_rows_, dim_});
}

void Embedding::zero_grad() { gtable_.fill(0.0); }

}  // namespace pbpm::nn
