#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "pbpm/hypermodel.hpp"
#include "pbpm/nn/gradient_check.hpp"
#include "test_util.hpp"

using namespace pbpm;

namespace {

/// Toy-width stacks for gradient checking and fast training.
HyperParams toy_hp(Variant variant, std::size_t units = 6, bool with_bn = false,
                   bool with_dropout = false) {
    HyperParams hp;
    LstmLayerSpec lstm;
    lstm.units = units;
    lstm.l2 = 1e-3;
    lstm.batch_norm = with_bn;
    lstm.bn_momentum = 0.9;
    lstm.bn_epsilon = 1e-3;
    lstm.dropout = with_dropout;
    lstm.dropout_rate = 0.3;
    hp.event_stack = {lstm, lstm};
    if (variant_uses_bin(variant)) {
        hp.bin_stack = {lstm};
        hp.fusion_stack = {lstm};
    }
    if (variant_uses_cor(variant)) hp.cor_stack = {lstm};
    if (variant_uses_text(variant)) {
        hp.text_stack = {lstm};
        hp.verb_embed_dim = 4;
        hp.desc_embed_dim = 3;
    }
    DenseLayerSpec dense;
    dense.units = 8;
    dense.l2 = 1e-3;
    dense.activation = nn::Activation::tanh;
    dense.dropout = with_dropout;
    dense.dropout_rate = 0.3;
    hp.dense_stack = {dense};
    hp.schedule.kind = nn::ScheduleKind::exponential;
    hp.schedule.initial_lr = 5e-3;
    hp.schedule.decay_rate = 0.98;
    hp.schedule.decay_steps = 100;
    hp.optimizer.kind = nn::OptimizerKind::adam;
    hp.batch_size = 8;
    return hp;
}

/// Two trivially separable classes: the second activity decides the label.
EventLog separable_log(std::size_t n_cases) {
    EventLog log;
    log.outcome_labels = {"left", "right"};
    log.schema = {
        {"unit", AttrLevel::event, AttrKind::categorical, Universality::universal},
        {"size", AttrLevel::sequence, AttrKind::numerical, Universality::universal},
    };
    for (std::size_t ci = 0; ci < n_cases; ++ci) {
        Case c;
        c.case_id = "s" + std::to_string(ci);
        c.outcome = static_cast<int>(ci % 2);
        c.sequence_numeric["size"] = 1.0;
        std::int64_t t = 1000 * static_cast<std::int64_t>(ci);
        for (std::size_t i = 0; i < 4; ++i) {
            Event e;
            e.activity = (i == 1) ? (c.outcome == 0 ? "alpha" : "beta") : "gamma";
            e.start = t;
            e.end = t + 10;
            t += 60;
            e.universal_values["unit"] = "u1";
            c.events.push_back(std::move(e));
        }
        log.cases.push_back(std::move(c));
    }
    return derive_durations(std::move(log));
}

}  // namespace

TEST_SUITE("hypermodel") {

TEST_CASE("variant channel contracts are enforced") {
    test::ToyEncoding enc = test::make_toy_encoding(Variant::B);
    DatasetMeta meta = DatasetMeta::from(enc.split.train);

    meta.variant = Variant::D;  // claims D but offers no bin channel
    CHECK_THROWS_WITH_AS(HyperModel(toy_hp(Variant::D), meta, 1),
                         doctest::Contains("bin_inputs"), std::runtime_error);
    meta.variant = Variant::DC;
    meta.bin_width = 5;
    CHECK_THROWS_WITH_AS(HyperModel(toy_hp(Variant::DC), meta, 1),
                         doctest::Contains("cor_inputs"), std::runtime_error);
    meta.variant = Variant::T;
    meta.cor_width = 5;
    CHECK_THROWS_WITH_AS(HyperModel(toy_hp(Variant::T), meta, 1),
                         doctest::Contains("text"), std::runtime_error);
}

TEST_CASE("z width = fusion output width + sequence input width") {
    for (Variant v : {Variant::B, Variant::FB, Variant::MB, Variant::D, Variant::FD,
                      Variant::DC, Variant::T}) {
        test::ToyEncoding enc = test::make_toy_encoding(v);
        DatasetMeta meta = DatasetMeta::from(enc.split.train);
        HyperModel model(toy_hp(v), meta, 11);
        CHECK(model.z_width() == model.fusion_output_width() + meta.seq_input_width());
    }
}

TEST_CASE("gradient check passes on every variant at toy widths") {
    for (Variant v : {Variant::B, Variant::FB, Variant::MB, Variant::D, Variant::FD,
                      Variant::DC, Variant::T}) {
        CAPTURE(variant_name(v));
        test::ToyEncoding enc = test::make_toy_encoding(v, 8, 7, 3);
        const EncodedDataset& ds = enc.split.train;
        // non-zero l2 so the penalty gradient is exercised; bn exercised
        // in frozen-stats mode
        HyperParams hp = toy_hp(v, 5, true, false);
        HyperModel model(hp, DatasetMeta::from(ds), 17);
        std::vector<std::size_t> batch = {0, 1, 2};
        std::vector<double> weights;  // unweighted

        auto params = model.params();
        auto loss_and_grad = [&]() {
            return model.loss_and_grad(ds, batch, weights, nn::Mode::frozen_stats);
        };
        nn::GradCheckResult res = nn::gradient_check(params, loss_and_grad, 1e-5);
        CAPTURE(res.worst_param);
        CHECK(res.max_rel_error < 1e-4);
    }
}

TEST_CASE("gradient check refuses training mode (active dropout)") {
    test::ToyEncoding enc = test::make_toy_encoding(Variant::B);
    HyperModel model(toy_hp(Variant::B, 5, false, true), DatasetMeta::from(enc.split.train),
                     13);
    std::vector<std::size_t> batch = {0, 1};
    CHECK_THROWS_AS(gradient_check(model, enc.split.train, batch, 1e-5, nn::Mode::train),
                    std::invalid_argument);
    nn::GradCheckResult res = gradient_check(model, enc.split.train, batch);
    CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("golden-config fixtures: published example architectures build as read") {
    SUBCASE("B variant: batch 32, LSTM 160 -> 48, dense 144 relu, adam + exponential") {
        test::ToyEncoding enc = test::make_toy_encoding(Variant::B);
        HyperParams hp;
        LstmLayerSpec l1, l2;
        l1.units = 160;
        l1.dropout = true;
        l1.dropout_rate = 0.4914;
        l1.batch_norm = true;
        l1.bn_momentum = 0.81;
        l1.bn_epsilon = 3.345e-4;
        l1.l2 = 1.956e-4;
        l2.units = 48;
        l2.dropout = true;
        l2.dropout_rate = 0.3156;
        l2.l2 = 4.433e-3;
        hp.event_stack = {l1, l2};
        DenseLayerSpec d;
        d.units = 144;
        d.dropout = true;
        d.dropout_rate = 0.4581;
        d.l2 = 2.017e-4;
        d.activation = nn::Activation::relu;
        hp.dense_stack = {d};
        hp.optimizer.kind = nn::OptimizerKind::adam;
        hp.optimizer.adam_beta1 = 0.93;
        hp.optimizer.adam_beta2 = 0.992;
        hp.schedule.kind = nn::ScheduleKind::exponential;
        hp.schedule.initial_lr = 2.718e-3;
        hp.batch_size = 32;

        DatasetMeta meta = DatasetMeta::from(enc.split.train);
        HyperModel model(hp, meta, 1);
        CHECK(model.hyperparams().event_stack.size() == 2);  // two event-stack layers
        CHECK(model.fusion_output_width() == 48);            // last event layer feeds Z
        CHECK(model.z_width() == 48 + meta.seq_input_width());
    }
    SUBCASE("T variant: verb embedding dim 10, descriptor dim 40") {
        test::ToyEncoding enc = test::make_toy_encoding(Variant::T);
        HyperParams hp = toy_hp(Variant::T);
        hp.verb_embed_dim = 10;
        hp.desc_embed_dim = 40;
        HyperModel model(hp, DatasetMeta::from(enc.split.train), 1);
        CHECK(model.hyperparams().verb_embed_dim == 10);
        CHECK(model.hyperparams().desc_embed_dim == 40);
        bool saw_verb = false, saw_desc = false;
        for (auto& p : model.params()) {
            if (p.name == "verb_emb.table") {
                saw_verb = true;
                CHECK(p.value->dim(1) == 10);
            }
            if (p.name == "desc_emb.table") {
                saw_desc = true;
                CHECK(p.value->dim(1) == 40);
            }
        }
        CHECK(saw_verb);
        CHECK(saw_desc);
    }
    SUBCASE("DC variant wires three input stacks plus fusion") {
        test::ToyEncoding enc = test::make_toy_encoding(Variant::DC);
        HyperParams hp = toy_hp(Variant::DC);
        HyperModel model(hp, DatasetMeta::from(enc.split.train), 1);
        std::set<std::string> stacks;
        for (auto& p : model.params()) stacks.insert(p.name.substr(0, p.name.find('.')));
        CHECK(stacks.count("event") == 1);
        CHECK(stacks.count("bin") == 1);
        CHECK(stacks.count("cor") == 1);
        CHECK(stacks.count("fusion") == 1);
    }
}

TEST_CASE("masked inputs change no gradient either") {
    test::ToyEncoding enc = test::make_toy_encoding(Variant::D);
    EncodedDataset ds = enc.split.train;
    HyperModel model(toy_hp(Variant::D, 5), DatasetMeta::from(ds), 37);
    std::vector<std::size_t> batch = {0, 1, 2, 3};
    std::vector<double> weights;

    model.loss_and_grad(ds, batch, weights, nn::Mode::frozen_stats);
    std::vector<Tensor> grads;
    for (auto& p : model.params()) grads.push_back(*p.grad);

    EncodedDataset poked = ds;
    const std::size_t num_w = poked.event_num_width();
    for (std::size_t i = 0; i < poked.n_cases; ++i)
        for (std::size_t t = 0; t < poked.max_steps; ++t) {
            if (poked.mask_at(i, t)) continue;
            for (std::size_t k = 0; k < num_w; ++k)
                poked.event_num[(i * poked.max_steps + t) * num_w + k] = 55.0;
            for (std::size_t k = 0; k < poked.bin_width; ++k)
                poked.bin_inputs[(i * poked.max_steps + t) * poked.bin_width + k] = -3.0;
        }
    model.loss_and_grad(poked, batch, weights, nn::Mode::frozen_stats);
    auto params = model.params();
    for (std::size_t pi = 0; pi < params.size(); ++pi)
        for (std::size_t i = 0; i < grads[pi].size(); ++i)
            CHECK((*params[pi].grad)[i] == grads[pi][i]);
}

TEST_CASE("masked timesteps contribute nothing to the forward pass") {
    for (Variant v : {Variant::FB, Variant::DC, Variant::MB, Variant::T}) {
        CAPTURE(variant_name(v));
        test::ToyEncoding enc = test::make_toy_encoding(v);
        EncodedDataset ds = enc.split.train;
        HyperModel model(toy_hp(v, 6, true, false), DatasetMeta::from(ds), 23);
        std::vector<std::size_t> batch(ds.n_cases);
        std::iota(batch.begin(), batch.end(), 0);
        Tensor base = model.forward(ds, batch, nn::Mode::eval);

        // poke every padded cell of every channel
        EncodedDataset poked = ds;
        const std::size_t cat_w = poked.event_cat_width();
        const std::size_t num_w = poked.event_num_width();
        for (std::size_t i = 0; i < poked.n_cases; ++i) {
            for (std::size_t t = 0; t < poked.max_steps; ++t) {
                if (poked.mask_at(i, t)) continue;
                for (std::size_t k = 0; k < cat_w; ++k)
                    poked.event_cat[(i * poked.max_steps + t) * cat_w + k] = 2;
                for (std::size_t k = 0; k < num_w; ++k)
                    poked.event_num[(i * poked.max_steps + t) * num_w + k] = 1234.5;
                for (std::size_t k = 0; k < poked.bin_width; ++k)
                    poked.bin_inputs[(i * poked.max_steps + t) * poked.bin_width + k] = -7.0;
                for (std::size_t k = 0; k < poked.cor_width; ++k)
                    poked.cor_inputs[(i * poked.max_steps + t) * poked.cor_width + k] = 3.3;
                if (!poked.verb_idx.empty()) {
                    poked.verb_idx[i * poked.max_steps + t] = 2;
                    for (std::size_t k = 0; k < poked.layout.desc_slots; ++k)
                        poked.desc_idx[(i * poked.max_steps + t) * poked.layout.desc_slots +
                                       k] = 2;
                }
            }
        }
        Tensor poked_out = model.forward(poked, batch, nn::Mode::eval);
        REQUIRE(poked_out.size() == base.size());
        for (std::size_t i = 0; i < base.size(); ++i)
            CHECK(std::abs(base[i] - poked_out[i]) <= 1e-12);
    }
}

TEST_CASE("zeroed output head yields uniform probabilities") {
    test::ToyEncoding enc = test::make_toy_encoding(Variant::B);
    const EncodedDataset& ds = enc.split.train;
    HyperModel model(toy_hp(Variant::B), DatasetMeta::from(ds), 3);
    for (auto& p : model.params())
        if (p.name.rfind("output.", 0) == 0) p.value->fill(0.0);
    Tensor probs = model.predict_probabilities(ds);
    for (std::size_t i = 0; i < probs.size(); ++i)
        CHECK(probs[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("prediction is deterministic and row-stochastic") {
    test::ToyEncoding enc = test::make_toy_encoding(Variant::DC, 12, 31, 5);
    const EncodedDataset& ds = enc.split.train;
    HyperModel model(toy_hp(Variant::DC, 7, true, true), DatasetMeta::from(ds), 29);
    Tensor p1 = model.predict_probabilities(ds);
    Tensor p2 = model.predict_probabilities(ds);
    REQUIRE(p1.size() == p2.size());
    for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i] == p2[i]);
    for (std::size_t i = 0; i < ds.n_cases; ++i) {
        double sum = 0.0;
        for (int k = 0; k < ds.n_classes; ++k)
            sum += p1(i, static_cast<std::size_t>(k));
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("training: budget of one epoch runs exactly one epoch") {
    EventLog log = separable_log(30);
    SplitDataset split = assemble(Variant::B, log, {}, AssembleConfig{}, 5);
    TrainOptions options;
    options.objective = Objective::accuracy;
    TrainRun run = train(toy_hp(Variant::B), split.train, split.validation, options, 1, 7);
    CHECK(run.history.size() == 1);
    CHECK_FALSE(run.failed);
}

TEST_CASE("training: separable toy data reaches objective 1.0") {
    EventLog log = separable_log(40);
    SplitDataset split = assemble(Variant::B, log, {}, AssembleConfig{}, 5);
    TrainOptions options;
    options.objective = Objective::accuracy;
    options.patience = 50;
    TrainRun run = train(toy_hp(Variant::B, 8), split.train, split.validation, options, 50, 7);
    CHECK_FALSE(run.failed);
    CHECK(run.best_objective == doctest::Approx(1.0));
}

TEST_CASE("training: engineered divergence flags the run as failed") {
    EventLog log = separable_log(30);
    SplitDataset split = assemble(Variant::B, log, {}, AssembleConfig{}, 5);
    HyperParams hp = toy_hp(Variant::B);
    hp.schedule.kind = nn::ScheduleKind::piecewise_constant;
    hp.schedule.boundaries = {};
    hp.schedule.values = {1e10};  // L2 term turns this into geometric blow-up
    hp.optimizer.kind = nn::OptimizerKind::sgd;
    hp.optimizer.sgd_momentum = 0.0;
    hp.batch_size = 4;
    TrainOptions options;
    options.patience = 100;
    TrainRun run = train(hp, split.train, split.validation, options, 40, 7);
    CHECK(run.failed);
}

TEST_CASE("training is bitwise reproducible for a fixed seed") {
    test::ToyEncoding enc = test::make_toy_encoding(Variant::FB, 12, 31, 5);
    TrainOptions options;
    options.objective = Objective::weighted_f1;

    auto run_once = [&](std::uint64_t seed) {
        Trainer trainer(toy_hp(Variant::FB, 6, true, true), DatasetMeta::from(enc.split.train),
                        options, seed);
        trainer.run_epochs(enc.split.train, enc.split.validation, 3);
        std::vector<double> flat;
        for (auto& [name, tensor] : trainer.model().state_tensors())
            flat.insert(flat.end(), tensor->values().begin(), tensor->values().end());
        return std::pair(flat, trainer.run().history);
    };
    auto [w1, h1] = run_once(42);
    auto [w2, h2] = run_once(42);
    REQUIRE(w1.size() == w2.size());
    for (std::size_t i = 0; i < w1.size(); ++i) CHECK(w1[i] == w2[i]);
    REQUIRE(h1.size() == h2.size());
    for (std::size_t i = 0; i < h1.size(); ++i) {
        CHECK(h1[i].train_loss == h2[i].train_loss);
        CHECK(h1[i].val_objective == h2[i].val_objective);
    }
}

TEST_CASE("trainer state save/load resumes identically") {
    test::TempDir dir("trainer");
    test::ToyEncoding enc = test::make_toy_encoding(Variant::D, 12, 31, 5);
    TrainOptions options;
    options.objective = Objective::accuracy;

    Trainer a(toy_hp(Variant::D, 6, true, true), DatasetMeta::from(enc.split.train), options,
              99);
    a.run_epochs(enc.split.train, enc.split.validation, 2);
    a.save(dir.file("t.state"));

    Trainer b = Trainer::load(dir.file("t.state"));
    a.run_epochs(enc.split.train, enc.split.validation, 2);
    b.run_epochs(enc.split.train, enc.split.validation, 2);
    CHECK(a.run().history.size() == b.run().history.size());
    for (std::size_t i = 0; i < a.run().history.size(); ++i)
        CHECK(a.run().history[i].train_loss == b.run().history[i].train_loss);

    auto ta = a.model().state_tensors();
    auto tb = b.model().state_tensors();
    REQUIRE(ta.size() == tb.size());
    for (std::size_t i = 0; i < ta.size(); ++i) {
        REQUIRE(ta[i].second->size() == tb[i].second->size());
        for (std::size_t j = 0; j < ta[i].second->size(); ++j)
            CHECK((*ta[i].second)[j] == (*tb[i].second)[j]);
    }
}

TEST_CASE("checkpoint round-trip preserves predictions") {
    test::TempDir dir("ckpt");
    test::ToyEncoding enc = test::make_toy_encoding(Variant::T, 10, 13, 5);
    const EncodedDataset& ds = enc.split.train;
    HyperModel model(toy_hp(Variant::T, 5), DatasetMeta::from(ds), 31);
    model.save_checkpoint(dir.file("model.ckpt"));
    HyperModel restored = HyperModel::load_checkpoint(dir.file("model.ckpt"));
    Tensor p1 = model.predict_probabilities(ds);
    Tensor p2 = restored.predict_probabilities(ds);
    REQUIRE(p1.size() == p2.size());
    for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i] == p2[i]);
    CHECK(hyperparams_digest(restored.hyperparams()) ==
          hyperparams_digest(model.hyperparams()));
}

TEST_CASE("hyperparams json round-trip preserves the digest") {
    HyperParams hp = toy_hp(Variant::T, 12, true, true);
    hp.schedule.kind = nn::ScheduleKind::piecewise_constant;
    hp.schedule.boundaries = {50, 100};
    hp.schedule.values = {1e-3, 5e-4, 1e-4};
    hp.optimizer.kind = nn::OptimizerKind::rmsprop;
    hp.batch_size = 31;
    HyperParams back = hyperparams_from_json(hyperparams_to_json(hp));
    CHECK(hyperparams_digest(back) == hyperparams_digest(hp));
    CHECK(back.batch_size == 31);
    CHECK(back.schedule.boundaries == hp.schedule.boundaries);
}

TEST_CASE("inverse frequency weights") {
    std::vector<std::int32_t> labels = {0, 0, 0, 1};
    std::vector<double> w = inverse_frequency_weights(labels, 3);
    CHECK(w[0] == doctest::Approx(4.0 / (3.0 * 3.0)));
    CHECK(w[1] == doctest::Approx(4.0 / 3.0));
    CHECK(w[2] == 0.0);  // absent class gets zero weight
}

}  // TEST_SUITE
