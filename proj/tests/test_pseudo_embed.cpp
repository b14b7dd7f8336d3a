#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "pbpm/featurize.hpp"
#include "pbpm/pseudo_embed.hpp"
#include "test_util.hpp"

using namespace pbpm;

namespace {

/// Independent brute-force tf-idf: literal counting, no shared code with the
/// implementation beyond the formula definition.
std::map<std::string, std::vector<double>> oracle_tfidf(
    const std::vector<std::vector<std::string>>& docs) {
    std::set<std::string> vocab;
    for (const auto& d : docs)
        for (const auto& t : d) vocab.insert(t);
    std::map<std::string, std::vector<double>> cells;  // term -> per-doc tf*idf
    for (const auto& term : vocab) {
        std::size_t df = 0;
        for (const auto& d : docs) {
            bool found = false;
            for (const auto& t : d) found = found || t == term;
            df += found ? 1 : 0;
        }
        double idf =
            std::log((1.0 + static_cast<double>(docs.size())) / (1.0 + static_cast<double>(df))) +
            1.0;
        std::vector<double> per_doc;
        for (const auto& d : docs) {
            std::size_t tf = 0;
            for (const auto& t : d) tf += t == term ? 1 : 0;
            per_doc.push_back(static_cast<double>(tf) * idf);
        }
        cells[term] = per_doc;
    }
    return cells;
}

}  // namespace

TEST_SUITE("pseudo_embed") {

TEST_CASE("correlation corpus tokens") {
    EventLog log;
    log.outcome_labels = {"x"};
    log.schema = {
        {"dest", AttrLevel::event, AttrKind::categorical, Universality::universal},
        {"when", AttrLevel::event, AttrKind::categorical, Universality::universal},
    };
    Case c;
    c.case_id = "c1";
    c.outcome = 0;
    Event e;
    e.activity = "walk";
    e.start = e.end = 0;
    e.universal_values["dest"] = "Home";
    e.universal_values["when"] = "Morning";
    c.events.push_back(e);
    log.cases.push_back(c);

    Corpus corpus = build_correlation_corpus(log);
    REQUIRE(corpus.documents.size() == 1);
    CHECK(corpus.documents[0] == std::vector<std::string>{"walk|Home_Morning"});

    SUBCASE("single universal attribute degenerates to one value") {
        log.schema.pop_back();
        log.cases[0].events[0].universal_values.erase("when");
        Corpus single = build_correlation_corpus(log);
        CHECK(single.documents[0] == std::vector<std::string>{"walk|Home"});
    }
    SUBCASE("dummy attribute joins the product") {
        log.schema.pop_back();
        log.cases[0].events[0].universal_values.erase("when");
        EventLog with_dummy = append_dummy_universal(log);
        Corpus dummy = build_correlation_corpus(with_dummy);
        CHECK(dummy.documents[0] == std::vector<std::string>{"walk|Home_dummy"});
    }
    SUBCASE("one token per event") {
        Event e2 = log.cases[0].events[0], e3 = log.cases[0].events[0];
        e2.start = e2.end = 10;
        e3.start = e3.end = 20;
        log.cases[0].events.push_back(e2);
        log.cases[0].events.push_back(e3);
        CHECK(build_correlation_corpus(log).documents[0].size() == 3);
    }
    SUBCASE("missing universal value errors") {
        log.cases[0].events[0].universal_values.erase("when");
        CHECK_THROWS_WITH_AS(build_correlation_corpus(log), doctest::Contains("when"),
                             std::runtime_error);
    }
}

TEST_CASE("duration binning: derived quantile example") {
    std::vector<double> durations = {1, 1, 2, 7, 8, 9, 10};
    DurationBinning b = fit_duration_binning(durations, 5.0, 2, 0.2, 8);
    CHECK(b.unique_bins == std::vector<double>{1, 2});
    REQUIRE(b.quantile_edges.size() == 3);
    CHECK(b.quantile_edges[0] == doctest::Approx(5.0));
    CHECK(b.quantile_edges[1] == doctest::Approx(8.5));  // sorted-list quantile of {7,8,9,10}
    CHECK(b.quantile_edges[2] == doctest::Approx(10.0));
    CHECK(b.balanced);
    // two quantile bins of two values each
    CHECK(b.frequencies == std::vector<std::size_t>{2, 1, 2, 2});

    // assignment: exact short lookup, half-open long intervals, closed top
    CHECK(assign_bin(1, b).is_quantile == false);
    CHECK(assign_bin(1, b).index == 0);
    CHECK(bin_label(b, assign_bin(7, b)) == "q1");
    // 8 < 8.5 falls in the first quantile interval per the sorted-list oracle
    CHECK(bin_label(b, assign_bin(8, b)) == "q1");
    CHECK(bin_label(b, assign_bin(9, b)) == "q2");
    CHECK(bin_label(b, assign_bin(10, b)) == "q2");  // max closes the last bin
}

TEST_CASE("duration binning: degenerate and error cases") {
    SUBCASE("all identical terminates immediately with one bin") {
        DurationBinning b = fit_duration_binning({4, 4, 4, 4}, 5.0, 3, 0.2, 8);
        CHECK(b.total_bins() == 1);
        CHECK(b.balanced);
    }
    SUBCASE("empty input") {
        CHECK_THROWS(fit_duration_binning({}, 5.0, 2, 0.2, 8));
    }
    SUBCASE("q clamped to distinct long count") {
        DurationBinning b = fit_duration_binning({1, 6, 6, 6, 7}, 5.0, 10, 0.9, 8);
        CHECK(b.n_quantile_bins() <= 2);
    }
    SUBCASE("zero gets its own labeled bin") {
        DurationBinning b = fit_duration_binning({0, 0, 0, 3, 3, 9, 12}, 1.0, 1, 0.5, 8);
        CHECK(bin_label(b, assign_bin(0, b)) == "zero");
        CHECK(assign_bin(9, b).is_quantile);
    }
}

TEST_CASE("bin assignment recomputation equals stored frequencies") {
    std::mt19937_64 rng(5);
    for (int round = 0; round < 20; ++round) {
        std::vector<double> durations;
        std::size_t n = 30 + rng() % 100;
        for (std::size_t i = 0; i < n; ++i)
            durations.push_back(static_cast<double>(rng() % 200) / 2.0);
        DurationBinning b = fit_duration_binning(durations, 10.0, 4, 0.3, 12);

        std::vector<std::size_t> recount(b.total_bins(), 0);
        for (double d : durations) {
            BinId id = assign_bin(d, b);
            ++recount[id.is_quantile ? b.unique_bins.size() + id.index : id.index];
        }
        CHECK(recount == b.frequencies);
    }
}

TEST_CASE("balance loop: frequency ratio bound after success") {
    std::mt19937_64 rng(17);
    for (int round = 0; round < 25; ++round) {
        std::vector<double> durations;
        std::size_t n = 200 + rng() % 200;
        for (std::size_t i = 0; i < n; ++i)
            durations.push_back(5.0 + static_cast<double>(rng() % 100000) / 250.0);
        DurationBinning b = fit_duration_binning(durations, 5.0, 8, 0.2, 16);
        REQUIRE(b.balanced);
        std::size_t nq = b.n_quantile_bins();
        std::size_t fmax = 0, fmin = SIZE_MAX;
        for (std::size_t i = 0; i < nq; ++i) {
            fmax = std::max(fmax, b.frequencies[b.unique_bins.size() + i]);
            fmin = std::min(fmin, b.frequencies[b.unique_bins.size() + i]);
        }
        CHECK(static_cast<double>(fmax) <=
              static_cast<double>(fmin) * (1.0 + b.balance_tol) / (1.0 - b.balance_tol) + 1e-9);
    }
}

TEST_CASE("tfidf: frozen formula examples") {
    Corpus corpus;
    corpus.documents = {{"a", "b"}, {"a"}};
    TfIdfModel model = tfidf_fit(corpus);
    CHECK(model.n_docs == 2);
    CHECK(model.idf(model.vocabulary.at("a")) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(model.idf(model.vocabulary.at("b")) ==
          doctest::Approx(std::log(3.0 / 2.0) + 1.0).epsilon(1e-12));

    SUBCASE("single doc single term") {
        Corpus one;
        one.documents = {{"a"}};
        TfIdfModel m = tfidf_fit(one);
        EmbeddingMatrix mat = tfidf_matrix(one, m);
        CHECK(mat.at(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("repeated term multiplies tf") {
        Corpus rep;
        rep.documents = {{"a", "a"}};
        TfIdfModel m = tfidf_fit(rep);
        EmbeddingMatrix mat = tfidf_matrix(rep, m);
        double idf_a = m.idf(m.vocabulary.at("a"));
        CHECK(mat.at(0, 0) == doctest::Approx(2.0 * idf_a).epsilon(1e-12));
        CHECK(mat.at(1, 0) == doctest::Approx(2.0 * idf_a).epsilon(1e-12));
    }
}

TEST_CASE("tfidf: oracle equivalence on random corpora") {
    std::mt19937_64 rng(101);
    static const char* kTerms[] = {"t0", "t1", "t2", "t3", "t4", "t5", "t6", "t7"};
    for (int round = 0; round < 60; ++round) {
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
        auto oracle = oracle_tfidf(corpus.documents);

        std::size_t row = 0;
        for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
            for (const auto& token : corpus.documents[d]) {
                for (std::size_t col = 0; col < matrix.n_cols(); ++col) {
                    double expected =
                        matrix.terms[col] == token ? oracle.at(token)[d] : 0.0;
                    CHECK(std::abs(matrix.at(row, col) - expected) < 1e-9);
                }
                ++row;
            }
        }
    }
}

TEST_CASE("transform-time unknown terms contribute zero") {
    Corpus fit_corpus;
    fit_corpus.documents = {{"a", "b"}, {"b"}};
    TfIdfModel model = tfidf_fit(fit_corpus);
    Corpus transform_corpus;
    transform_corpus.documents = {{"a", "zz", "b"}};
    EmbeddingMatrix m = tfidf_matrix(transform_corpus, model);
    REQUIRE(m.n_rows == 3);
    // the unknown token's row is all-zero; known rows carry their scores
    for (std::size_t c = 0; c < m.n_cols(); ++c) CHECK(m.at(1, c) == 0.0);
    CHECK(m.at(0, model.vocabulary.at("a")) > 0.0);
    CHECK(m.at(2, model.vocabulary.at("b")) > 0.0);
}

TEST_CASE("unseen short duration maps to the nearest unique bin") {
    DurationBinning b = fit_duration_binning({1, 1, 3, 8, 9, 10, 11}, 5.0, 2, 0.5, 8);
    REQUIRE(b.unique_bins == std::vector<double>{1, 3});
    BinId id = assign_bin(1.4, b);  // unseen at fit time
    CHECK_FALSE(id.is_quantile);
    CHECK(b.unique_bins[id.index] == 1.0);
    BinId id2 = assign_bin(2.9, b);
    CHECK_FALSE(id2.is_quantile);
    CHECK(b.unique_bins[id2.index] == 3.0);
}

TEST_CASE("vocabulary is case-order independent (lexicographic columns)") {
    Corpus corpus;
    corpus.documents = {{"m", "a"}, {"z"}, {"a", "z"}};
    Corpus permuted;
    permuted.documents = {{"a", "z"}, {"m", "a"}, {"z"}};
    TfIdfModel m1 = tfidf_fit(corpus);
    TfIdfModel m2 = tfidf_fit(permuted);
    CHECK(m1.vocabulary == m2.vocabulary);
    std::vector<std::string> terms;
    for (const auto& [t, col] : m1.vocabulary) terms.push_back(t);
    CHECK(std::is_sorted(terms.begin(), terms.end()));
}

TEST_CASE("minmax normalization") {
    EmbeddingMatrix m;
    m.terms = {"x", "y", "z"};
    m.n_rows = 3;
    m.case_offsets = {0, 3};
    m.values = {0, 3, 0,
                2, 0, 0,
                4, 0, 0};
    minmax_normalize(m);
    CHECK(m.at(0, 0) == 0.0);
    CHECK(m.at(1, 0) == doctest::Approx(0.5));
    CHECK(m.at(2, 0) == doctest::Approx(1.0));
    CHECK(m.at(0, 1) == doctest::Approx(1.0));  // single-entry column scales to 1
    for (std::size_t r = 0; r < 3; ++r) CHECK(m.at(r, 2) == 0.0);  // all-zero column unchanged

    // every entry in [0,1], every non-zero column attains 1
    for (std::size_t c = 0; c < 3; ++c) {
        double mx = 0.0;
        for (std::size_t r = 0; r < 3; ++r) {
            CHECK(m.at(r, c) >= 0.0);
            CHECK(m.at(r, c) <= 1.0);
            mx = std::max(mx, m.at(r, c));
        }
        CHECK((mx == 0.0 || mx == doctest::Approx(1.0)));
    }
}

TEST_CASE("embedding matrix text round-trip") {
    test::TempDir dir("emb");
    EventLog log = relabel_log(test::make_toy_log(5, 9), test::toy_featurization());
    Corpus corpus = build_correlation_corpus(log);
    TfIdfModel model = tfidf_fit(corpus);
    EmbeddingMatrix m = tfidf_matrix(corpus, model);
    minmax_normalize(m);
    save_embedding_matrix(m, dir.file("m.txt"));
    EmbeddingMatrix back = load_embedding_matrix(dir.file("m.txt"));
    CHECK(back.terms == m.terms);
    CHECK(back.case_offsets == m.case_offsets);
    REQUIRE(back.values.size() == m.values.size());
    for (std::size_t i = 0; i < m.values.size(); ++i)
        CHECK(back.values[i] == doctest::Approx(m.values[i]).epsilon(1e-12));
}

TEST_CASE("duration corpus tokens") {
    EventLog log = relabel_log(test::make_toy_log(4, 2), test::toy_featurization());
    std::vector<double> durations;
    for (const auto& c : log.cases)
        for (const auto& e : c.events) durations.push_back(static_cast<double>(*e.duration));
    DurationBinning binning = fit_duration_binning(durations, 30.0, 2, 0.5, 8);
    Corpus corpus = build_duration_corpus(log, binning, BinningUnit{});
    REQUIRE(corpus.documents.size() == log.cases.size());
    for (std::size_t ci = 0; ci < log.cases.size(); ++ci) {
        CHECK(corpus.documents[ci].size() == log.cases[ci].events.size());
        for (const auto& token : corpus.documents[ci]) {
            auto bar = token.find('|');
            REQUIRE(bar != std::string::npos);
            std::string bin = token.substr(bar + 1);
            CHECK((bin == "zero" || bin[0] == 'v' || bin[0] == 'q'));
        }
    }
}

TEST_CASE("minutes unit rounds up") {
    BinningUnit minutes{60.0, true};
    CHECK(minutes.to_units(0) == 0.0);
    CHECK(minutes.to_units(1) == 1.0);    // 1 s -> 1 min, rounded up
    CHECK(minutes.to_units(60) == 1.0);
    CHECK(minutes.to_units(61) == 2.0);
    CHECK(minutes.to_units(300) == 5.0);
}

}  // TEST_SUITE
