#include <doctest.h>

#include <set>

#include "pbpm/featurize.hpp"
#include "pbpm/synthgen.hpp"
#include "test_util.hpp"

using namespace pbpm;

TEST_SUITE("featurize") {

TEST_CASE("golden tables load with per-dataset k_max") {
    FeaturizationTable patients = parse_featurization_table(patients_featurization_csv());
    CHECK(patients.entries.size() == 10);
    CHECK(patients.k_max == 1);

    FeaturizationTable bpic = parse_featurization_table(bpic12_featurization_csv());
    CHECK(bpic.entries.size() == 18);
    CHECK(bpic.k_max == 1);

    // two-descriptor entries push k_max to 2 and pad the short rows
    FeaturizationTable extended = parse_featurization_table(
        patients_featurization_csv() +
        "Check Insurance Payment,check,insurance,payment\n");
    CHECK(extended.k_max == 2);
    CHECK(extended.entries.at("Registration").descriptors ==
          std::vector<std::string>{kNoDescToken, kNoDescToken});
}

TEST_CASE("featurize_label: worked examples") {
    // two-descriptor table covering the narrative examples
    FeaturizationTable table = parse_featurization_table(
        "Initiate Low Application Check,check,low\n"
        "Check Insurance History,check,insurance,history\n"
        "Check Insurance Payment,check,insurance,payment\n"
        "PARTLYSUBMITTED,submit,partial\n");
    {
        const FeaturizedLabel& fl = featurize_label("Initiate Low Application Check", table);
        CHECK(fl.verb == "check");
        CHECK(fl.descriptors == std::vector<std::string>{"low", kNoDescToken});
        CHECK(fl.relabeled == "check_low");
    }
    {
        const FeaturizedLabel& fl = featurize_label("Check Insurance History", table);
        CHECK(fl.descriptors == std::vector<std::string>{"insurance", "history"});
        CHECK(fl.relabeled == "check_insurance_history");
    }
    {
        const FeaturizedLabel& fl = featurize_label("PARTLYSUBMITTED", table);
        CHECK(fl.verb == "submit");
        CHECK(fl.relabeled == "submit_partial");
    }
    CHECK_THROWS_WITH_AS(featurize_label("Check Insurnce History", table),
                         doctest::Contains("nearest known labels"), std::runtime_error);
}

TEST_CASE("duplicate and malformed rows") {
    CHECK_THROWS_WITH_AS(
        parse_featurization_table("Archive,archive\nArchive,archive\n"),
        doctest::Contains("duplicate"), std::runtime_error);
    CHECK_THROWS_AS(parse_featurization_table("OnlyLabel\n"), std::runtime_error);
    CHECK_THROWS_WITH_AS(parse_featurization_table("Label,,desc\n"),
                         doctest::Contains("empty verb"), std::runtime_error);
}

TEST_CASE("relabel_log rewrites activities and keeps the original") {
    EventLog log = test::make_toy_log(6, 3);
    EventLog relabeled = relabel_log(log, test::toy_featurization());
    std::set<std::string> tokens;
    for (const auto& c : relabeled.cases) {
        for (const auto& e : c.events) {
            tokens.insert(e.activity);
            CHECK_FALSE(e.raw_activity.empty());
            CHECK_FALSE(e.verb.empty());
            CHECK(e.descriptors.size() == 2);  // k_max of the toy table
        }
    }
    for (const auto& t : tokens)
        CHECK((t == "run_fast" || t == "run_slow" || t == "stop" || t == "hold_long_extra"));

    // unknown label propagates the case id
    log.cases[2].events[0].activity = "zeta";
    CHECK_THROWS_WITH_AS(relabel_log(log, test::toy_featurization()),
                         doctest::Contains("case 'c2'"), std::runtime_error);
}

TEST_CASE("distinct relabeled token counts for the golden datasets") {
    FeaturizationTable patients = parse_featurization_table(patients_featurization_csv());
    std::set<std::string> patient_tokens;
    for (const auto& [label, fl] : patients.entries) patient_tokens.insert(fl.relabeled);
    CHECK(patient_tokens.size() == 10);

    FeaturizationTable bpic = parse_featurization_table(bpic12_featurization_csv());
    std::set<std::string> bpic_tokens;
    for (const auto& [label, fl] : bpic.entries) bpic_tokens.insert(fl.relabeled);
    CHECK(bpic_tokens.size() == 18);
}

TEST_CASE("property: splitting relabeled on '_' recovers verb + descriptors") {
    for (const auto& csv : {patients_featurization_csv(), bpic12_featurization_csv()}) {
        FeaturizationTable table = parse_featurization_table(csv);
        for (const auto& [label, fl] : table.entries) {
            std::vector<std::string> parts;
            std::istringstream in(fl.relabeled);
            std::string tok;
            while (std::getline(in, tok, '_')) parts.push_back(tok);

            std::vector<std::string> expected{fl.verb};
            for (const auto& d : fl.descriptors)
                if (d != kNoDescToken) expected.push_back(d);
            CHECK(parts == expected);
        }
    }
}

}  // TEST_SUITE
