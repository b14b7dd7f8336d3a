#include <benchmark/benchmark.h>

#include <random>

#include "pbpm/featurize.hpp"
#include "pbpm/hypermodel.hpp"
#include "pbpm/nn/layers.hpp"
#include "pbpm/pseudo_embed.hpp"
#include "pbpm/synthgen.hpp"
#include "pbpm/vectorize.hpp"

using namespace pbpm;

namespace {

Corpus synthetic_corpus(std::size_t docs, std::size_t len, std::size_t vocab) {
    std::mt19937_64 rng(7);
    Corpus corpus;
    for (std::size_t d = 0; d < docs; ++d) {
        std::vector<std::string> doc;
        for (std::size_t i = 0; i < len; ++i)
            doc.push_back("t" + std::to_string(rng() % vocab));
        corpus.documents.push_back(doc);
    }
    return corpus;
}

void BM_TfIdfFitTransform(benchmark::State& state) {
    Corpus corpus = synthetic_corpus(static_cast<std::size_t>(state.range(0)), 8, 64);
    for (auto _ : state) {
        TfIdfModel model = tfidf_fit(corpus);
        EmbeddingMatrix m = tfidf_matrix(corpus, model);
        minmax_normalize(m);
        benchmark::DoNotOptimize(m.values.data());
    }
}
BENCHMARK(BM_TfIdfFitTransform)->Arg(256)->Arg(2048);

void BM_DurationBinningFit(benchmark::State& state) {
    std::mt19937_64 rng(11);
    std::vector<double> durations;
    for (std::int64_t i = 0; i < state.range(0); ++i)
        durations.push_back(static_cast<double>(rng() % 100000) / 250.0);
    for (auto _ : state) {
        DurationBinning b = fit_duration_binning(durations, 5.0, 20, 0.2, 16);
        benchmark::DoNotOptimize(b.frequencies.data());
    }
}
BENCHMARK(BM_DurationBinningFit)->Arg(2000)->Arg(20000);

void BM_LstmForwardBackward(benchmark::State& state) {
    std::mt19937_64 rng(3);
    const std::size_t units = static_cast<std::size_t>(state.range(0));
    nn::Lstm lstm(32, units, 0.0, rng);
    Tensor x({32, 20, 32});
    std::mt19937_64 vals(5);
    std::uniform_real_distribution<double> dist(-1, 1);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = dist(vals);
    std::vector<std::uint8_t> mask(32 * 20, 1);
    Tensor dh({32, 20, units});
    dh.fill(0.1);
    for (auto _ : state) {
        lstm.zero_grad();
        Tensor h = lstm.forward(x, mask);
        Tensor dx = lstm.backward(dh);
        benchmark::DoNotOptimize(dx.data());
    }
    state.SetItemsProcessed(state.iterations() * 32 * 20);
}
BENCHMARK(BM_LstmForwardBackward)->Arg(64)->Arg(256);

void BM_GenerateBpicLike(benchmark::State& state) {
    BpicLikeConfig config;
    config.cases_per_class = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        EventLog log = generate_bpic_like(config);
        benchmark::DoNotOptimize(log.cases.data());
    }
}
BENCHMARK(BM_GenerateBpicLike)->Arg(100)->Arg(802);

void BM_AssembleEncode(benchmark::State& state) {
    BpicLikeConfig config;
    config.cases_per_class = 100;
    EventLog log = relabel_log(generate_bpic_like(config),
                               parse_featurization_table(bpic12_featurization_csv()));
    for (auto _ : state) {
        SplitDataset split = assemble(Variant::MB, log, {}, AssembleConfig{}, 1);
        benchmark::DoNotOptimize(split.train.event_cat.data());
    }
}
BENCHMARK(BM_AssembleEncode);

}  // namespace

BENCHMARK_MAIN();
