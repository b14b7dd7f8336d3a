#include <doctest.h>

#include <algorithm>
#include <set>

#include "pbpm/vectorize.hpp"
#include "test_util.hpp"

using namespace pbpm;

TEST_SUITE("vectorize") {

TEST_CASE("vocab: reserved indices, first-seen order, unk absorption") {
    Vocab v = Vocab::fit({"a", "b", "a"});
    CHECK(v.index.at("a") == 2);
    CHECK(v.index.at("b") == 3);
    CHECK(v.unk_index == 4);
    CHECK(v.size == 5);
    CHECK(encode_categorical({"a", "b", "a"}, v) == std::vector<std::int32_t>{2, 3, 2});
    CHECK(v.encode(kNoDescToken) == Vocab::no_desc_index);
    CHECK(v.encode("z") == v.unk_index);
}

TEST_CASE("impute_median: lower median and stored-median fill") {
    using Col = std::vector<std::optional<double>>;
    {
        auto [filled, median] = impute_median(Col{1.0, std::nullopt, 3.0});
        // present values {1,3}: lower median
        CHECK(median == 1.0);
        CHECK(filled == std::vector<double>{1.0, 1.0, 3.0});
    }
    {
        auto [filled, median] = impute_median(Col{5.0, std::nullopt});
        CHECK(median == 5.0);
        CHECK(filled == std::vector<double>{5.0, 5.0});
    }
    {
        auto [filled, median] = impute_median(Col{4.0, 1.0, std::nullopt, 2.0, 3.0});
        CHECK(median == 2.0);  // lower median of {1,2,3,4}
        CHECK(filled[2] == 2.0);
    }
    CHECK(fill_missing(Col{std::nullopt, 7.0}, 9.0) == std::vector<double>{9.0, 7.0});
    CHECK_THROWS(impute_median(Col{std::nullopt, std::nullopt}));
}

TEST_CASE("time_difference: zero first, gaps after") {
    Case c;
    for (std::int64_t s : {600, 900, 900}) {
        Event e;
        e.start = s;
        e.end = s;
        c.events.push_back(e);
    }
    CHECK(time_difference(c) == std::vector<std::int64_t>{0, 300, 0});

    Case single;
    Event e;
    e.start = 42;
    single.events.push_back(e);
    CHECK(time_difference(single) == std::vector<std::int64_t>{0});
}

TEST_CASE("co_embed: slotting and overflow") {
    CoEmbedConfig config{2, 3};
    std::vector<double> out = co_embed({{1, 2, 3}, {4, 5, 6}}, config);
    CHECK(out == std::vector<double>{1, 2, 3, 4, 5, 6});

    CoEmbedConfig wide{3, 2};
    CHECK(co_embed({{7, 8}}, wide) == std::vector<double>{7, 8, 0, 0, 0, 0});

    CoEmbedConfig narrow{3, 1};
    CHECK_THROWS_WITH_AS(co_embed({{1}, {2}, {3}, {4}}, narrow),
                         doctest::Contains("k_max >= 4"), std::runtime_error);
}

TEST_CASE("stratified split arithmetic") {
    std::vector<std::int32_t> labels;
    labels.insert(labels.end(), 60, 0);
    labels.insert(labels.end(), 40, 1);
    auto [train, val] = stratified_split(labels, 0.8, 123);
    CHECK(train.size() == 80);
    CHECK(val.size() == 20);
    std::size_t t0 = 0, v0 = 0;
    for (std::size_t i : train) t0 += labels[i] == 0 ? 1 : 0;
    for (std::size_t i : val) v0 += labels[i] == 0 ? 1 : 0;
    CHECK(t0 == 48);
    CHECK(v0 == 12);
    CHECK(train.size() - t0 == 32);
    CHECK(val.size() - v0 == 8);

    // union is everything, disjointly
    std::set<std::size_t> all(train.begin(), train.end());
    for (std::size_t i : val) CHECK(all.insert(i).second);
    CHECK(all.size() == 100);

    // deterministic under the same seed, different under another
    auto [train2, val2] = stratified_split(labels, 0.8, 123);
    CHECK(train2 == train);
    auto [train3, val3] = stratified_split(labels, 0.8, 124);
    CHECK(train3 != train);

    // tiny classes keep at least one training case
    std::vector<std::int32_t> tiny = {0, 0, 1};
    auto [t, v] = stratified_split(tiny, 0.8, 1);
    CHECK(t.size() == 2);  // 1 from class 0 (floor(1.6)=1), 1 from class 1
    CHECK(v.size() == 1);
}

TEST_CASE("assemble: B variant channel widths") {
    test::ToyEncoding enc = test::make_toy_encoding(Variant::B);
    const EncodedDataset& train = enc.split.train;
    // activity + schema categorical channels (unit, shift, flag)
    CHECK(train.layout.event_cat_names ==
          std::vector<std::string>{"activity", "unit", "shift", "flag"});
    CHECK(train.layout.event_num_names == std::vector<std::string>{"load", "temp"});
    CHECK(train.layout.seq_cat_names == std::vector<std::string>{"region"});
    CHECK(train.layout.seq_num_names == std::vector<std::string>{"size"});
    CHECK(train.layout.co_slots == 1);
    CHECK(train.bin_width == 0);
    CHECK(train.n_classes == 3);
    CHECK(train.n_cases + enc.split.validation.n_cases == enc.log.cases.size());

    // mask marks exactly the real timesteps
    for (std::size_t i = 0; i < train.n_cases; ++i) {
        std::size_t real = 0;
        for (std::size_t t = 0; t < train.max_steps; ++t) real += train.mask_at(i, t) ? 1 : 0;
        bool found = false;
        for (const auto& c : enc.log.cases)
            if (c.case_id == train.case_ids[i]) {
                CHECK(real == c.events.size());
                found = true;
            }
        CHECK(found);
    }
}

TEST_CASE("assemble: delta-t channel for F variants") {
    test::ToyEncoding enc = test::make_toy_encoding(Variant::FB);
    const EncodedDataset& train = enc.split.train;
    REQUIRE(train.layout.event_num_names.back() == "delta_t");

    // recompute from the source cases: zero within ties, gap across groups,
    // min-max scaled with the training statistics
    const std::size_t n_num = train.layout.event_num_channels();
    const double lo = train.event_num_min.back();
    const double hi = train.event_num_max.back();
    REQUIRE(hi > lo);
    for (std::size_t i = 0; i < train.n_cases; ++i) {
        const Case* src = nullptr;
        for (const auto& c : enc.log.cases)
            if (c.case_id == train.case_ids[i]) src = &c;
        REQUIRE(src != nullptr);
        auto dt = time_difference(*src);
        auto groups = detect_simultaneous(*src);
        for (const auto& g : groups)
            for (std::size_t k = 1; k < g.size(); ++k) CHECK(dt[g[k]] == 0);
        for (std::size_t t = 0; t < src->events.size(); ++t) {
            double stored = train.event_num[(i * train.max_steps + t) * n_num + (n_num - 1)];
            double expected = (static_cast<double>(dt[t]) - lo) / (hi - lo);
            CHECK(stored == doctest::Approx(expected));
        }
    }
}

TEST_CASE("assemble: MB groups the timestep axis") {
    test::ToyEncoding enc = test::make_toy_encoding(Variant::MB);
    const EncodedDataset& train = enc.split.train;
    CHECK(train.layout.co_slots >= 2);  // the toy log has simultaneous pairs
    for (std::size_t i = 0; i < train.n_cases; ++i) {
        const Case* src = nullptr;
        for (const auto& c : enc.log.cases)
            if (c.case_id == train.case_ids[i]) src = &c;
        std::size_t real = 0;
        for (std::size_t t = 0; t < train.max_steps; ++t) real += train.mask_at(i, t) ? 1 : 0;
        CHECK(real == detect_simultaneous(*src).size());
    }
}

TEST_CASE("assemble: missing required channel raises a configuration error") {
    EventLog log = relabel_log(test::make_toy_log(6, 3), test::toy_featurization());
    EmbeddingInputs none;
    CHECK_THROWS_WITH_AS(assemble(Variant::D, log, none, AssembleConfig{}, 1),
                         doctest::Contains("bin_inputs"), std::runtime_error);
    CHECK_THROWS_WITH_AS(assemble(Variant::T, log, none, AssembleConfig{}, 1),
                         doctest::Contains("bin_inputs"), std::runtime_error);
}

TEST_CASE("assemble: no leakage from the validation split") {
    // vocabularies and medians are fitted on train only: a value that occurs
    // only in validation cases must encode as UNK
    test::ToyEncoding enc = test::make_toy_encoding(Variant::B, 9, 7, 3);
    const EncodedDataset& train = enc.split.train;
    const EncodedDataset& val = enc.split.validation;

    // all train activity indices are < unk (every train token is in-vocab)
    const std::size_t n_cat = train.layout.event_cat_channels();
    std::int32_t activity_vocab = train.layout.event_cat_vocab_sizes[0];
    for (std::size_t i = 0; i < train.n_cases; ++i)
        for (std::size_t t = 0; t < train.max_steps; ++t) {
            if (!train.mask_at(i, t)) continue;
            std::int32_t idx = train.event_cat[(i * train.max_steps + t) * n_cat];
            CHECK(idx >= 2);
            CHECK(idx < activity_vocab - 1);  // strictly below unk
        }
    CHECK(val.layout.event_cat_vocab_sizes == train.layout.event_cat_vocab_sizes);
    CHECK(val.event_num_medians == train.event_num_medians);
    CHECK(val.max_steps == train.max_steps);
}

TEST_CASE("dataset container round-trip") {
    test::TempDir dir("ds");
    for (Variant v : {Variant::B, Variant::FD, Variant::T}) {
        test::ToyEncoding enc = test::make_toy_encoding(v);
        const EncodedDataset& ds = enc.split.train;
        std::string path = dir.file("set_" + variant_name(v) + ".ds");
        save_dataset(ds, path);
        EncodedDataset back = load_dataset(path);
        CHECK(back.variant == ds.variant);
        CHECK(back.n_cases == ds.n_cases);
        CHECK(back.max_steps == ds.max_steps);
        CHECK(back.event_cat == ds.event_cat);
        CHECK(back.event_num == ds.event_num);
        CHECK(back.seq_cat == ds.seq_cat);
        CHECK(back.seq_num == ds.seq_num);
        CHECK(back.bin_inputs == ds.bin_inputs);
        CHECK(back.cor_inputs == ds.cor_inputs);
        CHECK(back.verb_idx == ds.verb_idx);
        CHECK(back.desc_idx == ds.desc_idx);
        CHECK(back.mask == ds.mask);
        CHECK(back.labels == ds.labels);
        CHECK(back.case_ids == ds.case_ids);
        CHECK(back.layout.event_cat_tokens == ds.layout.event_cat_tokens);
    }
}

TEST_CASE("variant channel predicates") {
    CHECK_FALSE(variant_uses_bin(Variant::B));
    CHECK(variant_uses_bin(Variant::D));
    CHECK(variant_uses_bin(Variant::FD));
    CHECK(variant_uses_bin(Variant::DC));
    CHECK(variant_uses_bin(Variant::T));
    CHECK(variant_uses_cor(Variant::DC));
    CHECK(variant_uses_cor(Variant::T));
    CHECK_FALSE(variant_uses_cor(Variant::D));
    CHECK(variant_uses_text(Variant::T));
    CHECK(variant_uses_delta_t(Variant::FB));
    CHECK(variant_uses_delta_t(Variant::FD));
    CHECK(variant_uses_co_embed(Variant::MB));
    for (const char* name : {"B", "FB", "MB", "D", "FD", "DC", "T"})
        CHECK(variant_name(variant_from_name(name)) == name);
    CHECK_THROWS(variant_from_name("Q"));
}

}  // TEST_SUITE
