#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pbpm/event_log.hpp"

namespace pbpm {

/// Healthcare-flavoured imbalanced generator: five outcome classes, rich
/// event/sequence attributes, and a duration-carried signal that separates two
/// otherwise identical classes (so duration-aware variants have an edge).
struct PatientsLikeConfig {
    std::size_t n_cases = 2140;
    // class 1 is the 40.74% majority, class 2 the 1.12% rarity (ratio ~36:1)
    std::vector<double> class_priors = {0.2150, 0.4074, 0.0112, 0.1230, 0.2434};
    std::size_t min_length = 4;
    std::size_t max_length = 9;
    std::size_t median_length = 7;
    std::size_t n_wards = 3;
    std::size_t n_priorities = 3;
    std::uint64_t seed = 1;
};

EventLog generate_patients_like(const PatientsLikeConfig& config);

/// Loan-process-flavoured balanced generator: three classes, each decided by a
/// fixed zero-duration simultaneous marker block, plus a simultaneous intake
/// block. Class identity is a function of observable events by construction.
struct BpicLikeConfig {
    std::size_t cases_per_class = 802;
    std::size_t min_length = 4;
    std::size_t max_length = 12;
    std::size_t median_length = 5;
    double middle_sim_rate = 0.15;  // chance a filler event joins its neighbour's start
    std::size_t n_resources = 5;
    std::size_t n_channels = 2;
    std::uint64_t seed = 1;
};

EventLog generate_bpic_like(const BpicLikeConfig& config);

/// Schema + column bindings matching each generator's CSV output.
SchemaConfig patients_like_schema();
SchemaConfig bpic_like_schema();

/// Featurization tables shipped as golden data (verb/descriptor rows for the
/// Patients and BPIC12 label sets). CSV text in the loader's format.
const std::string& patients_featurization_csv();
const std::string& bpic12_featurization_csv();

}  // namespace pbpm
