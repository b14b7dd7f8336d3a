// Acceptance suite: runs every gate criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exit status is the failure count.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "pbpm/eval.hpp"
#include "pbpm/event_log.hpp"
#include "pbpm/featurize.hpp"
#include "pbpm/hypermodel.hpp"
#include "pbpm/nn/gradient_check.hpp"
#include "pbpm/pseudo_embed.hpp"
#include "pbpm/synthgen.hpp"
#include "pbpm/tuner.hpp"
#include "pbpm/vectorize.hpp"
#include "pbpm_cli.hpp"
#include "test_util.hpp"

using namespace pbpm;

namespace {

int failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void report(int id, const std::string& name, bool ok, const std::string& detail) {
    std::printf("%s  criterion %2d: %s (%s)\n", ok ? "PASS" : "FAIL", id, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

HyperParams toy_hp(Variant variant) {
    HyperParams hp;
    LstmLayerSpec lstm;
    lstm.units = 6;
    lstm.l2 = 1e-3;
    lstm.batch_norm = true;
    lstm.bn_momentum = 0.9;
    lstm.bn_epsilon = 1e-3;
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
    hp.dense_stack = {dense};
    hp.schedule.initial_lr = 5e-3;
    hp.batch_size = 8;
    return hp;
}

// --------------------------------------------------------------------------
// 1. Gradient integrity across all seven variants at toy widths.

void criterion_1() {
    Timer timer;
    double worst = 0.0;
    std::string worst_where;
    for (Variant v : {Variant::B, Variant::FB, Variant::MB, Variant::D, Variant::FD,
                      Variant::DC, Variant::T}) {
        test::ToyEncoding enc = test::make_toy_encoding(v, 8, 7, 3);
        const EncodedDataset& ds = enc.split.train;
        HyperModel model(toy_hp(v), DatasetMeta::from(ds), 17);
        std::vector<std::size_t> batch = {0, 1, 2};
        std::vector<double> weights;
        auto params = model.params();
        auto loss_and_grad = [&]() {
            return model.loss_and_grad(ds, batch, weights, nn::Mode::frozen_stats);
        };
        nn::GradCheckResult res = nn::gradient_check(params, loss_and_grad, 1e-5);
        if (res.max_rel_error > worst) {
            worst = res.max_rel_error;
            worst_where = variant_name(v) + "/" + res.worst_param;
        }
    }
    double elapsed = timer.seconds();
    std::ostringstream detail;
    detail << "max rel error " << worst << " at " << worst_where << ", " << elapsed << " s";
    report(1, "gradient integrity over all seven variants", worst < 1e-4 && elapsed < 60.0,
           detail.str());
}

// --------------------------------------------------------------------------
// 2. tf-idf equivalence against an independent brute-force implementation.

void criterion_2() {
    Timer timer;
    std::mt19937_64 rng(211);
    static const char* kTerms[] = {"t0", "t1", "t2", "t3", "t4", "t5", "t6", "t7"};
    double worst = 0.0;
    for (int round = 0; round < 200; ++round) {
        Corpus corpus;
        std::size_t n_docs = 1 + rng() % 10;
        for (std::size_t d = 0; d < n_docs; ++d) {
            std::vector<std::string> doc;
            std::size_t len = 1 + rng() % 8;
            for (std::size_t i = 0; i < len; ++i) doc.push_back(kTerms[rng() % 8]);
            corpus.documents.push_back(doc);
        }
        TfIdfModel model = tfidf_fit(corpus);
        EmbeddingMatrix matrix = tfidf_matrix(corpus, model);

        // brute force: per (term, doc) literal counting
        std::size_t row = 0;
        for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
            for (const auto& token : corpus.documents[d]) {
                for (std::size_t col = 0; col < matrix.n_cols(); ++col) {
                    const std::string& term = matrix.terms[col];
                    double expected = 0.0;
                    if (term == token) {
                        std::size_t tf = 0, df = 0;
                        for (const auto& t : corpus.documents[d]) tf += t == term ? 1 : 0;
                        for (const auto& doc : corpus.documents) {
                            bool found = false;
                            for (const auto& t : doc) found = found || t == term;
                            df += found ? 1 : 0;
                        }
                        double idf = std::log((1.0 + static_cast<double>(n_docs)) /
                                              (1.0 + static_cast<double>(df))) +
                                     1.0;
                        expected = static_cast<double>(tf) * idf;
                    }
                    worst = std::max(worst, std::abs(matrix.at(row, col) - expected));
                }
                ++row;
            }
        }
    }
    double elapsed = timer.seconds();
    std::ostringstream detail;
    detail << "200 corpora, max |diff| " << worst << ", " << elapsed << " s";
    report(2, "tf-idf matches the brute-force oracle", worst < 1e-9 && elapsed < 10.0,
           detail.str());
}

// --------------------------------------------------------------------------
// 3. Featurization golden tables (all 28 rows).

void criterion_3() {
    struct Row {
        const char* label;
        const char* verb;
        const char* descriptor;  // nullptr = <NO_DESC>
        const char* relabeled;
    };
    static const Row kPatients[] = {
        {"Registration", "register", nullptr, "register"},
        {"Basic Check", "check", "basic", "check_basic"},
        {"Initiate Low Application Check", "check", "low", "check_low"},
        {"Check Insurance History", "check", "insurance", "check_insurance"},
        {"Check Medical History", "check", "medical", "check_medical"},
        {"Send Notification", "note", nullptr, "note"},
        {"Archive", "archive", nullptr, "archive"},
        {"Receive Questionnaire", "question", nullptr, "question"},
        {"Initiate High Application Check", "check", "high", "check_high"},
        {"Check Hospital Records", "check", "hospital", "check_hospital"},
    };
    static const Row kBpic[] = {
        {"ACCEPTED", "accept", nullptr, "accept"},
        {"ACTIVATED", "activate", nullptr, "activate"},
        {"APPROVED", "approve", nullptr, "approve"},
        {"FINALIZED", "finalize", nullptr, "finalize"},
        {"PARTLYSUBMITTED", "submit", "partial", "submit_partial"},
        {"PREACCEPTED", "accept", "pre", "accept_pre"},
        {"REGISTERED", "register", nullptr, "register"},
        {"SUBMITTED", "submit", nullptr, "submit"},
        {"CREATED", "create", nullptr, "create"},
        {"SELECTED", "select", nullptr, "select"},
        {"SENT", "send", nullptr, "send"},
        {"SENT_BACK", "return", nullptr, "return"},
        {"CANCELLED", "cancel", nullptr, "cancel"},
        {"COMPLETE", "complete", nullptr, "complete"},
        {"QUOTE", "quote", nullptr, "quote"},
        {"HANDLE", "handle", nullptr, "handle"},
        {"FOLLOW", "follow", nullptr, "follow"},
        {"ASSESS", "assess", nullptr, "assess"},
    };

    std::size_t checked = 0, ok_rows = 0;
    auto check_table = [&](const FeaturizationTable& table, const Row* rows, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            ++checked;
            const FeaturizedLabel& fl = featurize_label(rows[i].label, table);
            bool row_ok = fl.verb == rows[i].verb && fl.relabeled == rows[i].relabeled;
            std::string expected_desc = rows[i].descriptor ? rows[i].descriptor : kNoDescToken;
            row_ok = row_ok && !fl.descriptors.empty() && fl.descriptors[0] == expected_desc;
            for (std::size_t k = 1; k < fl.descriptors.size(); ++k)
                row_ok = row_ok && fl.descriptors[k] == kNoDescToken;
            if (row_ok) ++ok_rows;
            else std::fprintf(stderr, "  golden mismatch: %s\n", rows[i].label);
        }
    };

    bool loaded = true;
    try {
        FeaturizationTable patients =
            load_featurization_table(std::string(PBPM_DATA_DIR) + "/featurization/patients.csv");
        FeaturizationTable bpic =
            load_featurization_table(std::string(PBPM_DATA_DIR) + "/featurization/bpic12.csv");
        check_table(patients, kPatients, 10);
        check_table(bpic, kBpic, 18);
        // golden files and embedded generator tables agree
        loaded = test::read_file(std::string(PBPM_DATA_DIR) + "/featurization/patients.csv") ==
                     patients_featurization_csv() &&
                 test::read_file(std::string(PBPM_DATA_DIR) + "/featurization/bpic12.csv") ==
                     bpic12_featurization_csv();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "  %s\n", e.what());
        loaded = false;
    }
    std::ostringstream detail;
    detail << ok_rows << "/28 rows exact";
    report(3, "featurization golden tables", loaded && checked == 28 && ok_rows == 28,
           detail.str());
}

// --------------------------------------------------------------------------
// 4. Duration binning: 24-bin configuration and balance-loop behaviour.

void criterion_4() {
    bool ok = true;
    std::ostringstream detail;

    EventLog patients = generate_patients_like({});
    BinningUnit minutes{60.0, true};
    std::vector<double> durations;
    for (const auto& c : patients.cases)
        for (const auto& e : c.events) durations.push_back(minutes.to_units(*e.duration));
    DurationBinning binning = fit_duration_binning(durations, 5.0, 20, 0.2, 16);
    ok = ok && binning.total_bins() == 24;
    for (double u : binning.unique_bins) ok = ok && u < 5.0;
    detail << "patients config: " << binning.unique_bins.size() << " unique + "
           << binning.n_quantile_bins() << " quantile bins";

    std::mt19937_64 rng(41);
    std::size_t balanced_count = 0;
    double worst_ratio = 0.0;
    for (int round = 0; round < 100; ++round) {
        std::vector<double> sample;
        std::size_t n = 200 + rng() % 1000;
        for (std::size_t i = 0; i < n; ++i) {
            if (rng() % 10 < 3)
                sample.push_back(static_cast<double>(rng() % 5));
            else
                sample.push_back(5.0 + static_cast<double>(rng() % 1000000) / 3000.0);
        }
        DurationBinning b = fit_duration_binning(sample, 5.0, 8, 0.2, 16);
        if (!b.balanced) continue;
        ++balanced_count;
        std::size_t nq = b.n_quantile_bins();
        std::size_t fmax = 0, fmin = SIZE_MAX;
        for (std::size_t i = 0; i < nq; ++i) {
            fmax = std::max(fmax, b.frequencies[b.unique_bins.size() + i]);
            fmin = std::min(fmin, b.frequencies[b.unique_bins.size() + i]);
        }
        double ratio = fmin == 0 ? 1e9 : static_cast<double>(fmax) / static_cast<double>(fmin);
        worst_ratio = std::max(worst_ratio, ratio);
    }
    ok = ok && balanced_count == 100 && worst_ratio <= 1.5;
    detail << "; balance loop " << balanced_count << "/100 terminated, worst ratio "
           << worst_ratio;
    report(4, "duration binning (24 bins, balance loop)", ok, detail.str());
}

// --------------------------------------------------------------------------
// 5. Simultaneity semantics + masked-timestep invariance.

void criterion_5() {
    bool ok = true;
    EventLog log = generate_bpic_like({});
    std::size_t checked_cases = 0;
    for (const auto& c : log.cases) {
        ++checked_cases;
        auto groups = detect_simultaneous(c);
        auto dt = time_difference(c);
        std::int64_t prev_group_start = 0;
        for (std::size_t gi = 0; gi < groups.size(); ++gi) {
            const auto& g = groups[gi];
            for (std::size_t k = 1; k < g.size(); ++k) ok = ok && dt[g[k]] == 0;
            std::int64_t expected_gap =
                gi == 0 ? 0 : c.events[g[0]].start - prev_group_start;
            ok = ok && dt[g[0]] == expected_gap;
            prev_group_start = c.events[g[0]].start;
        }
    }

    // masked perturbation on a model wired over this generator's data
    BpicLikeConfig small;
    small.cases_per_class = 25;
    small.seed = 5;
    EventLog toy = relabel_log(generate_bpic_like(small),
                               parse_featurization_table(bpic12_featurization_csv()));
    std::vector<double> durations;
    for (const auto& c : toy.cases)
        for (const auto& e : c.events) durations.push_back(static_cast<double>(*e.duration));
    DurationBinning binning = fit_duration_binning(durations, 1.0, 1, 0.2, 8);
    Corpus bin_corpus = build_duration_corpus(toy, binning, BinningUnit{});
    EmbeddingMatrix bin = tfidf_matrix(bin_corpus, tfidf_fit(bin_corpus));
    minmax_normalize(bin);
    Corpus cor_corpus = build_correlation_corpus(toy);
    EmbeddingMatrix cor = tfidf_matrix(cor_corpus, tfidf_fit(cor_corpus));
    minmax_normalize(cor);
    EmbeddingInputs embeddings{&bin, &cor};
    SplitDataset split = assemble(Variant::FD, toy, embeddings, AssembleConfig{}, 3);
    EncodedDataset ds = split.train;
    HyperModel model(toy_hp(Variant::FD), DatasetMeta::from(ds), 7);
    std::vector<std::size_t> batch(ds.n_cases);
    std::iota(batch.begin(), batch.end(), 0);
    Tensor base = model.forward(ds, batch, nn::Mode::eval);

    EncodedDataset poked = ds;
    const std::size_t cat_w = poked.event_cat_width();
    const std::size_t num_w = poked.event_num_width();
    for (std::size_t i = 0; i < poked.n_cases; ++i)
        for (std::size_t t = 0; t < poked.max_steps; ++t) {
            if (poked.mask_at(i, t)) continue;
            for (std::size_t k = 0; k < cat_w; ++k)
                poked.event_cat[(i * poked.max_steps + t) * cat_w + k] = 2;
            for (std::size_t k = 0; k < num_w; ++k)
                poked.event_num[(i * poked.max_steps + t) * num_w + k] = -42.0;
            for (std::size_t k = 0; k < poked.bin_width; ++k)
                poked.bin_inputs[(i * poked.max_steps + t) * poked.bin_width + k] = 9.0;
        }
    Tensor after = model.forward(poked, batch, nn::Mode::eval);
    double worst = 0.0;
    for (std::size_t i = 0; i < base.size(); ++i)
        worst = std::max(worst, std::abs(base[i] - after[i]));

    std::ostringstream detail;
    detail << checked_cases << " cases delta-t clean, perturbation delta " << worst;
    report(5, "simultaneity semantics and masked invariance", ok && worst <= 1e-12,
           detail.str());
}

// --------------------------------------------------------------------------
// 6. Hyperband schedule.

void criterion_6() {
    std::vector<BracketSpec> schedule = hyperband_schedule(81, 3);
    static const std::pair<std::size_t, std::size_t> kExpected[] = {
        {81, 1}, {27, 3}, {9, 9}, {6, 27}, {5, 81}};
    bool ok = schedule.size() == 5;
    for (std::size_t i = 0; ok && i < 5; ++i)
        ok = schedule[i].n_configs == kExpected[i].first &&
             schedule[i].initial_budget == kExpected[i].second;
    ok = ok && hyperband_s_max(300, 3) == 5;
    std::ostringstream detail;
    detail << "R=81 brackets";
    for (const auto& b : schedule)
        detail << " (" << b.n_configs << "," << b.initial_budget << ")";
    detail << "; s_max(300,3)=" << hyperband_s_max(300, 3);
    report(6, "hyperband schedule", ok, detail.str());
}

// --------------------------------------------------------------------------
// 7. Desk-scale learning on the balanced deterministic log: tuned M-B and
//    F-B variants reach validation accuracy 1.00 with a reduced budget.

double tune_balanced(Variant variant, const EventLog& relabeled, const EmbeddingInputs& emb,
                     const std::string& work, std::size_t* trials_used) {
    SplitDataset split = assemble(variant, relabeled, emb, AssembleConfig{}, 11);
    HyperbandOptions options;
    options.max_resource = 30;
    options.eta = 3;
    options.seed = 2024;
    options.workers = 2;
    options.objective = Objective::accuracy;
    options.max_trials = 30;
    options.work_dir = work;
    HyperbandResult result = hyperband(split.train, split.validation, options);
    if (trials_used) *trials_used = result.trials.size();
    return result.best.objective.value_or(0.0);
}

void criterion_7() {
    Timer timer;
    EventLog log = relabel_log(generate_bpic_like({}),
                               parse_featurization_table(bpic12_featurization_csv()));
    test::TempDir work("accept7");

    std::size_t trials_mb = 0, trials_fb = 0;
    double acc_mb = tune_balanced(Variant::MB, log, {}, work.file("mb"), &trials_mb);
    double acc_fb = tune_balanced(Variant::FB, log, {}, work.file("fb"), &trials_fb);

    double elapsed = timer.seconds();
    bool ok = acc_mb == 1.0 && acc_fb == 1.0 && trials_mb <= 30 && trials_fb <= 30 &&
              elapsed < 1800.0;
    std::ostringstream detail;
    detail << "M-B accuracy " << acc_mb << " (" << trials_mb << " trials), F-B accuracy "
           << acc_fb << " (" << trials_fb << " trials), " << elapsed << " s";
    report(7, "balanced desk-scale tuning reaches accuracy 1.00", ok, detail.str());
}

// --------------------------------------------------------------------------
// 8. Imbalanced desk-scale: duration-aware D beats B by >= 0.02 weighted F1
//    under identical budgets and seeds.

double train_fixed(Variant variant, const EventLog& relabeled, const EmbeddingInputs& emb,
                   std::size_t epochs, std::uint64_t seed) {
    SplitDataset split = assemble(variant, relabeled, emb, AssembleConfig{}, 21);
    HyperParams hp;
    LstmLayerSpec lstm;
    lstm.units = 48;
    lstm.l2 = 1e-4;
    hp.event_stack = {lstm};
    if (variant_uses_bin(variant)) {
        hp.bin_stack = {lstm};
        hp.fusion_stack = {lstm};
    }
    DenseLayerSpec dense;
    dense.units = 64;
    dense.l2 = 1e-4;
    dense.activation = nn::Activation::relu;
    hp.dense_stack = {dense};
    hp.schedule.initial_lr = 4e-3;
    hp.schedule.decay_rate = 0.97;
    hp.schedule.decay_steps = 200;
    hp.batch_size = 64;

    TrainOptions options;
    options.max_epochs = epochs;
    options.patience = epochs;
    options.objective = Objective::weighted_f1;
    TrainRun run = train(hp, split.train, split.validation, options, epochs, seed);
    return run.best_objective;
}

void criterion_8() {
    Timer timer;
    EventLog log = relabel_log(generate_patients_like({}),
                               parse_featurization_table(patients_featurization_csv()));

    BinningUnit minutes{60.0, true};
    std::vector<double> durations;
    for (const auto& c : log.cases)
        for (const auto& e : c.events) durations.push_back(minutes.to_units(*e.duration));
    DurationBinning binning = fit_duration_binning(durations, 5.0, 20, 0.2, 16);
    Corpus bin_corpus = build_duration_corpus(log, binning, minutes);
    EmbeddingMatrix bin = tfidf_matrix(bin_corpus, tfidf_fit(bin_corpus));
    minmax_normalize(bin);

    const std::size_t epochs = 25;
    const std::uint64_t seed = 99;
    double f1_b = train_fixed(Variant::B, log, {}, epochs, seed);
    EmbeddingInputs emb;
    emb.bin = &bin;
    double f1_d = train_fixed(Variant::D, log, emb, epochs, seed);

    double elapsed = timer.seconds();
    bool ok = f1_d >= f1_b + 0.02;
    std::ostringstream detail;
    detail << "weighted F1: D " << f1_d << " vs B " << f1_b << " (gap " << (f1_d - f1_b)
           << "), " << elapsed << " s";
    report(8, "duration channel gives D-LSTM the edge on imbalanced data", ok, detail.str());
}

// --------------------------------------------------------------------------
// 9. Metric identities on random confusion matrices plus worked examples.

void criterion_9() {
    bool ok = true;
    std::mt19937_64 rng(92);
    for (int round = 0; round < 1000; ++round) {
        int k = 2 + static_cast<int>(rng() % 5);
        ConfusionMatrix cm;
        cm.n_classes = static_cast<std::size_t>(k);
        cm.counts.assign(cm.n_classes * cm.n_classes, 0);
        std::size_t total = 0;
        for (auto& c : cm.counts) {
            c = rng() % 25;
            total += c;
        }
        if (total == 0) continue;
        ClassificationReport rep = classification_report(cm);
        std::size_t trace = 0;
        for (int c = 0; c < k; ++c) trace += cm.at(c, c);
        double micro_f1 = static_cast<double>(trace) / static_cast<double>(total);
        ok = ok && std::abs(rep.accuracy - micro_f1) < 1e-12;
        double f1_min = 1.0, f1_max = 0.0;
        for (const auto& m : rep.per_class) {
            if (m.support == 0) continue;
            f1_min = std::min(f1_min, m.f1);
            f1_max = std::max(f1_max, m.f1);
        }
        ok = ok && rep.weighted_f1 >= f1_min - 1e-12 && rep.weighted_f1 <= f1_max + 1e-12;
    }

    // worked examples
    {
        ClassificationReport rep =
            classification_report(confusion_matrix({0, 0, 1}, {0, 1, 1}, 2));
        ok = ok && std::abs(rep.per_class[0].precision - 1.0) < 1e-12;
        ok = ok && std::abs(rep.per_class[0].recall - 0.5) < 1e-12;
        ok = ok && std::abs(rep.per_class[0].f1 - 2.0 / 3.0) < 1e-12;
        ok = ok && std::abs(rep.per_class[1].precision - 0.5) < 1e-12;
        ok = ok && std::abs(rep.accuracy - 2.0 / 3.0) < 1e-12;
        ok = ok && std::abs(rep.weighted_f1 - 2.0 / 3.0) < 1e-12;
    }
    {
        std::vector<std::int32_t> y = {0, 0, 1, 1, 2, 2};
        ClassificationReport rep = classification_report(confusion_matrix(y, y, 3));
        ok = ok && rep.accuracy == 1.0 && std::abs(rep.weighted_f1 - 1.0) < 1e-12;
    }
    {
        ClassificationReport rep =
            classification_report(confusion_matrix({0, 0, 1}, {0, 0, 1}, 3));
        ok = ok && rep.per_class[2].f1 == 0.0 && rep.per_class[2].zero_division;
    }
    report(9, "metric identities on 1000 random matrices", ok, "accuracy == micro-F1 held");
}

// --------------------------------------------------------------------------
// 10. End-to-end tune determinism via the CLI.

void criterion_10() {
    test::TempDir dir("accept10");
    auto pipeline = [&](const std::string& tag) {
        std::string run = dir.file(tag);
        int rc = 0;
        rc |= cli::run_command({"synth", "--profile", "bpic-like", "--seed", "13", "--out",
                                run, "--cases-per-class", "30", "--max-len", "8"});
        rc |= cli::run_command({"featurize", "--run", run});
        rc |= cli::run_command({"embed", "--run", run});
        rc |= cli::run_command({"encode", "--run", run, "--variant", "MB", "--split-seed",
                                "4"});
        rc |= cli::run_command({"tune", "--run", run, "--R", "3", "--eta", "3", "--seed",
                                "31", "--workers", "2", "--objective", "accuracy"});
        return rc;
    };
    int rc1 = pipeline("one");
    int rc2 = pipeline("two");
    bool ok = rc1 == 0 && rc2 == 0;
    std::string log1 = test::read_file(dir.file("one") + "/trials.tsv");
    std::string log2 = test::read_file(dir.file("two") + "/trials.tsv");
    std::string hp1 = test::read_file(dir.file("one") + "/best_hp.json");
    std::string hp2 = test::read_file(dir.file("two") + "/best_hp.json");
    ok = ok && !log1.empty() && log1 == log2 && hp1 == hp2;
    std::ostringstream detail;
    detail << "trial logs " << (log1 == log2 ? "identical" : "DIFFER") << ", best digests "
           << (hp1 == hp2 ? "identical" : "DIFFER");
    report(10, "end-to-end tune determinism", ok, detail.str());
}

}  // namespace

int main() {
    std::printf("pbpm acceptance suite\n");
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    std::printf("%d criterion(s) failed\n", failures);
    return failures;
}
