#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pbpm/nn/gradient_check.hpp"
#include "pbpm/nn/layers.hpp"
#include "pbpm/nn/optimizer.hpp"
#include "pbpm/nn/schedule.hpp"
#include "pbpm/vectorize.hpp"

namespace pbpm {

struct LstmLayerSpec {
    std::size_t units = 32;
    double l2 = 1e-4;
    bool batch_norm = false;
    double bn_momentum = 0.99;
    double bn_epsilon = 1e-3;
    bool dropout = false;
    double dropout_rate = 0.3;
};

struct DenseLayerSpec {
    std::size_t units = 64;
    double l2 = 1e-4;
    bool dropout = false;
    double dropout_rate = 0.3;
    nn::Activation activation = nn::Activation::relu;
    double leaky_alpha = 0.1;
};

/// One sampled point of the tuning space: per-stack LSTM layer lists, the
/// dense head, schedule, optimizer, T-LSTM embedding widths and batch size.
struct HyperParams {
    std::vector<LstmLayerSpec> event_stack;
    std::vector<LstmLayerSpec> bin_stack;
    std::vector<LstmLayerSpec> cor_stack;
    std::vector<LstmLayerSpec> text_stack;
    std::vector<LstmLayerSpec> fusion_stack;
    std::vector<DenseLayerSpec> dense_stack;
    nn::LrSchedule schedule;
    nn::OptimizerConfig optimizer;
    std::size_t verb_embed_dim = 0;
    std::size_t desc_embed_dim = 0;
    std::size_t batch_size = 32;
};

std::string hyperparams_to_json(const HyperParams& hp);
HyperParams hyperparams_from_json(const std::string& text);
std::uint64_t hyperparams_digest(const HyperParams& hp);

/// Everything a model needs to size its layers, captured from a dataset.
struct DatasetMeta {
    Variant variant = Variant::B;
    ChannelLayout layout;
    std::size_t max_steps = 0;
    std::size_t bin_width = 0;
    std::size_t cor_width = 0;
    int n_classes = 0;

    static DatasetMeta from(const EncodedDataset& ds);
    std::size_t event_input_width() const;
    std::size_t seq_input_width() const;
};

std::string dataset_meta_to_json(const DatasetMeta& meta);
DatasetMeta dataset_meta_from_json(const std::string& text);

/// An instantiated variant graph: input stacks, the fusion plan producing the
/// combined per-timestep vector, the dense head and the softmax output.
class HyperModel {
public:
    HyperModel(const HyperParams& hp, const DatasetMeta& meta, std::uint64_t seed);

    Tensor forward(const EncodedDataset& ds, std::span<const std::size_t> batch, nn::Mode mode);
    /// Forward + backward + L2 penalty. Gradients are zeroed first.
    double loss_and_grad(const EncodedDataset& ds, std::span<const std::size_t> batch,
                         std::span<const double> class_weights, nn::Mode mode);

    /// Row-stochastic class probabilities for every case (inference mode).
    Tensor predict_probabilities(const EncodedDataset& ds);
    std::vector<std::int32_t> predict_labels(const EncodedDataset& ds);

    std::vector<nn::Param> params();
    /// Trainable parameters plus batch-norm running statistics; the full
    /// persistent state for checkpoints and best-weight snapshots.
    std::vector<std::pair<std::string, Tensor*>> state_tensors();
    void zero_grad();
    double l2_penalty() const;

    const HyperParams& hyperparams() const { return hp_; }
    const DatasetMeta& meta() const { return meta_; }
    std::size_t z_width() const { return z_width_; }
    std::size_t fusion_output_width() const { return fusion_out_width_; }

    void save_checkpoint(const std::string& path) const;
    static HyperModel load_checkpoint(const std::string& path);
    void write_weights(std::ostream& out) const;
    void read_weights(std::istream& in);
    std::string rng_state() const;
    void set_rng_state(const std::string& state);

private:
    struct LstmBlock {
        std::unique_ptr<nn::Lstm> lstm;
        std::optional<nn::BatchNorm> bn;
        std::optional<nn::Dropout> drop;
        // per-call caches for reshape bookkeeping
        std::size_t batch = 0, steps = 0;
    };
    using Stack = std::vector<LstmBlock>;

    Stack make_stack(const std::vector<LstmLayerSpec>& specs, std::size_t input_width,
                     std::mt19937_64& rng);
    Tensor run_stack(Stack& stack, Tensor x, const std::vector<std::uint8_t>& mask,
                     nn::Mode mode);
    Tensor back_stack(Stack& stack, Tensor dh);
    void collect_stack_params(Stack& stack, const std::string& prefix,
                              std::vector<nn::Param>& out);

    Tensor build_event_input(const EncodedDataset& ds, std::span<const std::size_t> batch) const;
    Tensor build_seq_input(const EncodedDataset& ds, std::span<const std::size_t> batch) const;
    Tensor slice_channel(const std::vector<double>& data, std::size_t width,
                         const EncodedDataset& ds, std::span<const std::size_t> batch) const;
    Tensor build_text_input(const EncodedDataset& ds, std::span<const std::size_t> batch);
    Tensor back_text_input(const Tensor& dx);

    HyperParams hp_;
    DatasetMeta meta_;
    std::uint64_t seed_ = 0;

    Stack event_stack_, bin_stack_, cor_stack_, text_stack_, fusion_stack_;
    std::unique_ptr<nn::Embedding> verb_emb_, desc_emb_;
    struct DenseBlock {
        std::unique_ptr<nn::Dense> dense;
        std::optional<nn::Dropout> drop;
    };
    std::vector<DenseBlock> dense_stack_;
    std::unique_ptr<nn::Dense> output_layer_;

    std::size_t z_width_ = 0;
    std::size_t fusion_out_width_ = 0;
    std::mt19937_64 dropout_rng_;

    // forward cache
    std::vector<std::uint8_t> mask_flat_;
    std::vector<std::size_t> last_step_;
    std::vector<std::size_t> psi_widths_;
    std::size_t cur_batch_ = 0;
    std::size_t steps_used_ = 0;  // batch-local step count (trailing padding skipped)
    bool fused_ = false;
};

enum class Objective { accuracy, weighted_f1 };
std::string objective_name(Objective o);
Objective objective_from_name(const std::string& name);

/// Inverse-frequency weights w_c = N / (K * n_c); zero-support classes get 0.
std::vector<double> inverse_frequency_weights(const std::vector<std::int32_t>& labels,
                                              int n_classes);

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based, cumulative across resumptions
    double train_loss = 0.0;
    double val_objective = 0.0;
    double lr = 0.0;
};

struct TrainRun {
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;  // 1-based; 0 = none yet
    double best_objective = -std::numeric_limits<double>::infinity();
    bool failed = false;           // non-finite loss encountered
    bool early_stopped = false;
};

struct TrainOptions {
    std::size_t max_epochs = 300;
    std::size_t patience = 20;
    Objective objective = Objective::accuracy;
};

/// Owns a model, optimizer and early-stopping state; supports resumed
/// training across budget grants (used by the tuner rungs).
class Trainer {
public:
    Trainer(const HyperParams& hp, const DatasetMeta& meta, const TrainOptions& options,
            std::uint64_t seed);

    /// Trains up to `epochs` more epochs, bounded by options.max_epochs and
    /// early stopping. Returns the cumulative run record.
    const TrainRun& run_epochs(const EncodedDataset& train, const EncodedDataset& val,
                               std::size_t epochs);

    const TrainRun& run() const { return run_; }
    HyperModel& model() { return *model_; }
    const TrainOptions& options() const { return options_; }
    void restore_best_weights();
    double objective_on(const EncodedDataset& ds);

    void save(const std::string& path) const;
    static Trainer load(const std::string& path);

    /// Training-history export: one tab-separated row per epoch.
    void write_history(const std::string& path) const;

private:
    Trainer() = default;

    std::unique_ptr<HyperModel> model_;
    std::unique_ptr<nn::Optimizer> optimizer_;
    TrainOptions options_;
    TrainRun run_;
    std::vector<double> class_weights_;
    std::mt19937_64 shuffle_rng_;
    std::vector<Tensor> best_weights_;
    std::size_t stale_epochs_ = 0;
    std::uint64_t seed_ = 0;
};

/// Convenience wrapper: build, train for `budget_epochs`, return the record.
TrainRun train(const HyperParams& hp, const EncodedDataset& train_set,
               const EncodedDataset& val_set, const TrainOptions& options,
               std::size_t budget_epochs, std::uint64_t seed);

/// Central-difference verification of the full model gradient (loss including
/// the L2 penalty) on one batch. Requires a deterministic mode: passing
/// Mode::train (active dropout, moving batch statistics) is refused.
nn::GradCheckResult gradient_check(HyperModel& model, const EncodedDataset& ds,
                                   std::span<const std::size_t> batch, double epsilon = 1e-5,
                                   nn::Mode mode = nn::Mode::frozen_stats);

}  // namespace pbpm
