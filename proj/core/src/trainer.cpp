#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "pbpm/eval.hpp"
#include "pbpm/hypermodel.hpp"

namespace pbpm {

using json = nlohmann::json;

std::string objective_name(Objective o) {
    return o == Objective::accuracy ? "accuracy" : "weighted_f1";
}

Objective objective_from_name(const std::string& name) {
    if (name == "accuracy") return Objective::accuracy;
    if (name == "weighted_f1" || name == "weighted-f1") return Objective::weighted_f1;
    throw std::invalid_argument("unknown objective '" + name +
                                "' (expected accuracy or weighted_f1)");
}

std::vector<double> inverse_frequency_weights(const std::vector<std::int32_t>& labels,
                                              int n_classes) {
    std::vector<double> counts(static_cast<std::size_t>(n_classes), 0.0);
    for (std::int32_t l : labels) counts[static_cast<std::size_t>(l)] += 1.0;
    std::vector<double> weights(counts.size(), 0.0);
    double n = static_cast<double>(labels.size());
    double k = static_cast<double>(n_classes);
    for (std::size_t c = 0; c < counts.size(); ++c)
        if (counts[c] > 0.0) weights[c] = n / (k * counts[c]);
    return weights;
}

Trainer::Trainer(const HyperParams& hp, const DatasetMeta& meta, const TrainOptions& options,
                 std::uint64_t seed)
    : model_(std::make_unique<HyperModel>(hp, meta, seed)),
      optimizer_(std::make_unique<nn::Optimizer>(hp.optimizer)),
      options_(options),
      shuffle_rng_(seed ^ 0x5851f42d4c957f2dull),
      seed_(seed) {}

double Trainer::objective_on(const EncodedDataset& ds) {
    std::vector<std::int32_t> predicted = model_->predict_labels(ds);
    ConfusionMatrix cm = confusion_matrix(ds.labels, predicted, ds.n_classes);
    ClassificationReport rep = classification_report(cm);
    return options_.objective == Objective::accuracy ? rep.accuracy : rep.weighted_f1;
}

const TrainRun& Trainer::run_epochs(const EncodedDataset& train_set,
                                    const EncodedDataset& val_set, std::size_t epochs) {
    if (run_.failed || run_.early_stopped) return run_;
    if (class_weights_.empty() && options_.objective == Objective::weighted_f1)
        class_weights_ = inverse_frequency_weights(train_set.labels, train_set.n_classes);

    std::vector<std::size_t> order(train_set.n_cases);
    std::iota(order.begin(), order.end(), 0);

    auto params = model_->params();
    const std::size_t batch_size = std::max<std::size_t>(1, model_->hyperparams().batch_size);

    for (std::size_t e = 0; e < epochs && run_.history.size() < options_.max_epochs; ++e) {
        std::shuffle(order.begin(), order.end(), shuffle_rng_);

        double epoch_loss = 0.0;
        double lr = model_->hyperparams().schedule.initial_lr;
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            std::size_t end = std::min(order.size(), start + batch_size);
            std::span<const std::size_t> batch(order.data() + start, end - start);
            double loss = model_->loss_and_grad(train_set, batch, class_weights_,
                                                nn::Mode::train);
            if (!std::isfinite(loss)) {
                run_.failed = true;
                return run_;
            }
            lr = model_->hyperparams().schedule.value(
                static_cast<double>(optimizer_->step_count()));
            optimizer_->step(params, lr);
            epoch_loss += loss * static_cast<double>(end - start);
        }
        epoch_loss /= static_cast<double>(order.size());

        double objective = objective_on(val_set);
        EpochRecord record;
        record.epoch = run_.history.size() + 1;
        record.train_loss = epoch_loss;
        record.val_objective = objective;
        record.lr = lr;
        run_.history.push_back(record);

        if (objective > run_.best_objective + 1e-12) {
            run_.best_objective = objective;
            run_.best_epoch = record.epoch;
            stale_epochs_ = 0;
            best_weights_.clear();
            for (auto& [name, tensor] : model_->state_tensors()) best_weights_.push_back(*tensor);
        } else {
            ++stale_epochs_;
            if (stale_epochs_ >= options_.patience) {
                run_.early_stopped = true;
                break;
            }
        }
    }
    return run_;
}

void Trainer::restore_best_weights() {
    if (best_weights_.empty()) return;
    auto tensors = model_->state_tensors();
    if (tensors.size() != best_weights_.size())
        throw std::logic_error("restore_best_weights: snapshot shape drift");
    for (std::size_t i = 0; i < tensors.size(); ++i) *tensors[i].second = best_weights_[i];
}

void Trainer::write_history(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write history '" + path + "'");
    out << "epoch\ttrain_loss\tval_objective\tlr\n";
    out.precision(10);
    for (const auto& r : run_.history)
        out << r.epoch << '\t' << r.train_loss << '\t' << r.val_objective << '\t' << r.lr
            << '\n';
}

void Trainer::save(const std::string& path) const {
    json header;
    header["format"] = "pbpm-trainer";
    header["version"] = 1;
    header["hyperparams"] = json::parse(hyperparams_to_json(model_->hyperparams()));
    header["meta"] = json::parse(dataset_meta_to_json(model_->meta()));
    header["seed"] = seed_;
    header["model_rng"] = model_->rng_state();
    std::ostringstream shuffle_state;
    shuffle_state << shuffle_rng_;
    header["shuffle_rng"] = shuffle_state.str();
    header["options"] = {{"max_epochs", options_.max_epochs},
                         {"patience", options_.patience},
                         {"objective", objective_name(options_.objective)}};
    json history = json::array();
    for (const auto& r : run_.history)
        history.push_back({{"epoch", r.epoch},
                           {"train_loss", r.train_loss},
                           {"val_objective", r.val_objective},
                           {"lr", r.lr}});
    header["run"] = {{"history", history},
                     {"best_epoch", run_.best_epoch},
                     {"best_objective", run_.best_objective},
                     {"failed", run_.failed},
                     {"early_stopped", run_.early_stopped}};
    header["stale_epochs"] = stale_epochs_;
    header["class_weights"] = class_weights_;
    header["has_best"] = !best_weights_.empty();

    std::string text = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write trainer state '" + path + "'");
    out.write("PBPMTRN1", 8);
    std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    model_->write_weights(out);
    for (const Tensor& t : best_weights_)
        out.write(reinterpret_cast<const char*>(t.data()),
                  static_cast<std::streamsize>(t.size() * sizeof(double)));
    optimizer_->save(out);
}

Trainer Trainer::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open trainer state '" + path + "'");
    char magic[8];
    in.read(magic, 8);
    if (!in || std::string(magic, 8) != "PBPMTRN1")
        throw std::runtime_error("'" + path + "' is not a pbpm trainer state");
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    json header = json::parse(text);

    Trainer trainer;
    HyperParams hp = hyperparams_from_json(header.at("hyperparams").dump());
    DatasetMeta meta = dataset_meta_from_json(header.at("meta").dump());
    trainer.seed_ = header.at("seed").get<std::uint64_t>();
    trainer.model_ = std::make_unique<HyperModel>(hp, meta, trainer.seed_);
    trainer.optimizer_ = std::make_unique<nn::Optimizer>(hp.optimizer);
    trainer.options_.max_epochs = header.at("options").at("max_epochs").get<std::size_t>();
    trainer.options_.patience = header.at("options").at("patience").get<std::size_t>();
    trainer.options_.objective =
        objective_from_name(header.at("options").at("objective").get<std::string>());
    for (const auto& r : header.at("run").at("history")) {
        EpochRecord record;
        record.epoch = r.at("epoch").get<std::size_t>();
        record.train_loss = r.at("train_loss").get<double>();
        record.val_objective = r.at("val_objective").get<double>();
        record.lr = r.at("lr").get<double>();
        trainer.run_.history.push_back(record);
    }
    trainer.run_.best_epoch = header.at("run").at("best_epoch").get<std::size_t>();
    trainer.run_.best_objective = header.at("run").at("best_objective").get<double>();
    trainer.run_.failed = header.at("run").at("failed").get<bool>();
    trainer.run_.early_stopped = header.at("run").at("early_stopped").get<bool>();
    trainer.stale_epochs_ = header.at("stale_epochs").get<std::size_t>();
    trainer.class_weights_ = header.at("class_weights").get<std::vector<double>>();

    trainer.model_->read_weights(in);
    if (header.at("has_best").get<bool>()) {
        for (auto& [name, tensor] : trainer.model_->state_tensors()) {
            Tensor copy(tensor->shape());
            in.read(reinterpret_cast<char*>(copy.data()),
                    static_cast<std::streamsize>(copy.size() * sizeof(double)));
            trainer.best_weights_.push_back(std::move(copy));
        }
    }
    trainer.optimizer_->load(in);
    if (!in) throw std::runtime_error("'" + path + "': truncated trainer state");

    trainer.model_->set_rng_state(header.at("model_rng").get<std::string>());
    std::istringstream shuffle_state(header.at("shuffle_rng").get<std::string>());
    shuffle_state >> trainer.shuffle_rng_;
    return trainer;
}

TrainRun train(const HyperParams& hp, const EncodedDataset& train_set,
               const EncodedDataset& val_set, const TrainOptions& options,
               std::size_t budget_epochs, std::uint64_t seed) {
    if (budget_epochs > options.max_epochs)
        throw std::invalid_argument("train: budget_epochs exceeds max_epochs");
    Trainer trainer(hp, DatasetMeta::from(train_set), options, seed);
    trainer.run_epochs(train_set, val_set, budget_epochs);
    trainer.restore_best_weights();
    return trainer.run();
}

}  // namespace pbpm
