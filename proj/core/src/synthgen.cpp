#include "pbpm/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace pbpm {

namespace {

double u01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
    return std::min(static_cast<std::size_t>(u01(rng) * static_cast<double>(n)), n - 1);
}

std::int64_t pick_range(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(pick(rng, static_cast<std::size_t>(hi - lo + 1)));
}

// Length sampler with a pinned lower median: cumulative mass reaches 0.5 only
// at the target, split 0.40 / 0.25 / 0.35 around it.
std::size_t sample_length(std::mt19937_64& rng, std::size_t min_len, std::size_t max_len,
                          std::size_t median_len) {
    if (min_len == max_len) return min_len;
    double below = median_len > min_len ? 0.40 : 0.0;
    double at;
    if (median_len > min_len)
        at = median_len < max_len ? 0.25 : 0.60;
    else
        at = median_len < max_len ? 0.65 : 1.0;
    double u = u01(rng);
    if (u < below) return min_len + pick(rng, median_len - min_len);
    if (u < below + at) return median_len;
    return median_len + 1 + pick(rng, max_len - median_len);
}

std::vector<std::size_t> class_counts_from_priors(const std::vector<double>& priors,
                                                  std::size_t n) {
    double sum = 0.0;
    for (double p : priors) sum += p;
    if (std::abs(sum - 1.0) > 1e-6)
        throw std::runtime_error("generator: class priors must sum to 1");
    std::vector<std::size_t> counts(priors.size());
    std::vector<std::pair<double, std::size_t>> remainders;  // largest remainder wins the slack
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < priors.size(); ++c) {
        double exact = priors[c] * static_cast<double>(n);
        counts[c] = static_cast<std::size_t>(std::floor(exact));
        remainders.push_back({exact - static_cast<double>(counts[c]), c});
        assigned += counts[c];
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++counts[remainders[i % remainders.size()].second];
    for (std::size_t c = 0; c < counts.size(); ++c)
        if (priors[c] > 0.0 && counts[c] == 0)
            throw std::runtime_error("generator: class " + std::to_string(c) +
                                     " prior rounds to zero cases (infeasible config)");
    return counts;
}

constexpr std::int64_t kBaseEpoch = 1704067200;  // 2024-01-01T00:00:00Z

}  // namespace

// ---------------------------------------------------------------------------
// Patients-like

namespace {

const char* kPatientsOutcomes[5] = {"routine", "followup", "escalation", "lowrisk", "chronic"};

struct PatientsActivity {
    const char* label;
    bool is_check;
};

// Markers: class 0 Basic Check; classes 1 and 4 share Check Medical History
// and differ only in duration regime; class 2 Initiate High Application
// Check; class 3 Initiate Low Application Check.
const char* kClassMarker[5] = {"Basic Check", "Check Medical History",
                               "Initiate High Application Check",
                               "Initiate Low Application Check", "Check Medical History"};

const char* kNeutralFillers[] = {"Send Notification", "Receive Questionnaire",
                                 "Check Insurance History", "Check Hospital Records"};

bool patients_is_check(const std::string& label) {
    return label.find("Check") != std::string::npos || label.find("check") != std::string::npos;
}

// Duration in whole minutes for one event. Long durations spread over 300
// distinct values so 20-quantile binning stays balanced despite integer ties.
std::int64_t patients_duration_minutes(const std::string& label, int cls, bool is_marker,
                                       std::mt19937_64& rng) {
    if (is_marker) {
        if (cls == 1) return pick_range(rng, 1, 4);     // short regime
        if (cls == 4) return pick_range(rng, 6, 300);   // long regime
        return pick_range(rng, 5, 304);
    }
    if (label == "Registration") return pick_range(rng, 1, 3);
    if (label == "Send Notification") return pick_range(rng, 1, 2);
    return pick_range(rng, 5, 304);  // archive, questionnaires, other checks
}

}  // namespace

EventLog generate_patients_like(const PatientsLikeConfig& config) {
    if (config.n_cases < 2) throw std::runtime_error("generate_patients_like: need >= 2 cases");
    if (config.class_priors.size() != 5)
        throw std::runtime_error("generate_patients_like: expected 5 class priors");
    if (config.min_length < 4)
        throw std::runtime_error("generate_patients_like: min_length must be >= 4 "
                                 "(registration, marker, filler, archive)");

    std::mt19937_64 rng(config.seed);
    EventLog log;
    for (const char* label : kPatientsOutcomes) log.outcome_labels.push_back(label);

    log.schema = {
        {"ward", AttrLevel::event, AttrKind::categorical, Universality::universal},
        {"priority", AttrLevel::event, AttrKind::categorical, Universality::specific},
        {"heart_rate", AttrLevel::event, AttrKind::numerical, Universality::universal},
        {"lab_value", AttrLevel::event, AttrKind::numerical, Universality::universal},
        {"cost", AttrLevel::event, AttrKind::numerical, Universality::universal},
        {"insurance_type", AttrLevel::sequence, AttrKind::categorical, Universality::universal},
        {"age", AttrLevel::sequence, AttrKind::numerical, Universality::universal},
        {"income", AttrLevel::sequence, AttrKind::numerical, Universality::universal},
        {"risk_score", AttrLevel::sequence, AttrKind::numerical, Universality::universal},
    };

    std::vector<std::size_t> counts = class_counts_from_priors(config.class_priors,
                                                               config.n_cases);
    std::vector<int> case_class;
    for (std::size_t c = 0; c < counts.size(); ++c)
        case_class.insert(case_class.end(), counts[c], static_cast<int>(c));

    for (std::size_t ci = 0; ci < case_class.size(); ++ci) {
        int cls = case_class[ci];
        Case kase;
        kase.case_id = "P" + std::to_string(ci + 1);
        kase.outcome = cls;
        kase.sequence_categorical["insurance_type"] = pick(rng, 2) == 0 ? "basic" : "premium";
        kase.sequence_numeric["age"] = static_cast<double>(pick_range(rng, 18, 90));
        kase.sequence_numeric["income"] = static_cast<double>(pick_range(rng, 20, 100)) * 1000.0;
        kase.sequence_numeric["risk_score"] = u01(rng);

        std::size_t length = sample_length(rng, config.min_length, config.max_length,
                                           config.median_length);
        if (ci == 0) length = config.min_length;
        if (ci == 1) length = config.max_length;

        // Registration, marker, fillers, Archive; marker position random
        // among the interior slots.
        std::vector<std::pair<std::string, bool>> labels;  // (label, is_marker)
        labels.push_back({"Registration", false});
        std::size_t interior = length - 2;
        std::size_t marker_pos = pick(rng, interior - 1);  // keep last interior for variety
        for (std::size_t i = 0; i < interior; ++i) {
            if (i == marker_pos)
                labels.push_back({kClassMarker[cls], true});
            else
                labels.push_back({kNeutralFillers[pick(rng, 4)], false});
        }
        labels.push_back({"Archive", false});

        std::int64_t t = kBaseEpoch + static_cast<std::int64_t>(ci) * 43200;
        for (auto& [label, is_marker] : labels) {
            Event e;
            e.activity = label;
            std::int64_t minutes = patients_duration_minutes(label, cls, is_marker, rng);
            e.start = t;
            e.end = t + minutes * 60;
            t = e.end + pick_range(rng, 1, 5) * 60;  // strictly increasing starts

            e.universal_values["ward"] = "W" + std::to_string(1 + pick(rng, config.n_wards));
            if (patients_is_check(label)) {
                static const char* kPriorities[] = {"low", "mid", "high"};
                e.specific_values["priority"] =
                    kPriorities[pick(rng, std::min<std::size_t>(config.n_priorities, 3))];
            }
            e.numeric_values["heart_rate"] = 60.0 + 40.0 * u01(rng);
            e.numeric_values["cost"] = 10.0 + 490.0 * u01(rng);
            if (patients_is_check(label)) e.numeric_values["lab_value"] = u01(rng);
            kase.events.push_back(std::move(e));
        }
        log.cases.push_back(std::move(kase));
    }
    return derive_durations(std::move(log));
}

SchemaConfig patients_like_schema() {
    SchemaConfig config;
    config.columns.case_id = "case_id";
    config.columns.activity = "activity";
    config.columns.start = "start";
    config.columns.end = "end";
    config.columns.outcome = "outcome";
    for (const char* label : kPatientsOutcomes) config.columns.outcome_values.push_back(label);
    config.schema = {
        {"ward", AttrLevel::event, AttrKind::categorical, Universality::universal},
        {"priority", AttrLevel::event, AttrKind::categorical, Universality::specific},
        {"heart_rate", AttrLevel::event, AttrKind::numerical, Universality::universal},
        {"lab_value", AttrLevel::event, AttrKind::numerical, Universality::universal},
        {"cost", AttrLevel::event, AttrKind::numerical, Universality::universal},
        {"insurance_type", AttrLevel::sequence, AttrKind::categorical, Universality::universal},
        {"age", AttrLevel::sequence, AttrKind::numerical, Universality::universal},
        {"income", AttrLevel::sequence, AttrKind::numerical, Universality::universal},
        {"risk_score", AttrLevel::sequence, AttrKind::numerical, Universality::universal},
    };
    for (const auto& spec : config.schema)
        config.columns.attribute_columns[spec.name] = spec.name;
    return config;
}

// ---------------------------------------------------------------------------
// BPIC-like

namespace {

const char* kBpicOutcomes[3] = {"accepted", "declined", "canceled"};

// Disjoint zero-duration marker blocks decide the class.
const char* kBpicMarkers[3][2] = {{"ACCEPTED", "APPROVED"},
                                  {"SENT_BACK", "COMPLETE"},
                                  {"CANCELLED", "FINALIZED"}};

const char* kBpicFillers[] = {"CREATED", "SELECTED", "SENT",  "FOLLOW",
                              "QUOTE",   "HANDLE",   "ASSESS", "PREACCEPTED"};

}  // namespace

EventLog generate_bpic_like(const BpicLikeConfig& config) {
    if (config.cases_per_class < 1)
        throw std::runtime_error("generate_bpic_like: cases_per_class must be >= 1");
    if (config.min_length < 3)
        throw std::runtime_error("generate_bpic_like: min_length must be >= 3 "
                                 "(intake plus a marker block)");

    std::mt19937_64 rng(config.seed);
    EventLog log;
    for (const char* label : kBpicOutcomes) log.outcome_labels.push_back(label);
    log.schema = {
        {"resource", AttrLevel::event, AttrKind::categorical, Universality::universal},
        {"channel", AttrLevel::event, AttrKind::categorical, Universality::universal},
        {"amount", AttrLevel::sequence, AttrKind::numerical, Universality::universal},
    };

    const std::size_t n_cases = 3 * config.cases_per_class;
    for (std::size_t ci = 0; ci < n_cases; ++ci) {
        int cls = static_cast<int>(ci % 3);
        Case kase;
        kase.case_id = "B" + std::to_string(ci + 1);
        kase.outcome = cls;
        kase.sequence_numeric["amount"] = 1000.0 + 49000.0 * u01(rng);

        std::size_t length = sample_length(rng, config.min_length, config.max_length,
                                           config.median_length);
        if (ci == 0) length = config.min_length;
        if (ci == 1) length = config.max_length;

        // intake (simultaneous when 2 events fit), fillers, marker block
        struct Slot {
            std::string label;
            bool sim_with_prev = false;
            bool zero_duration = false;
        };
        std::vector<Slot> slots;
        std::size_t prefix = length >= 4 ? 2 : 1;
        slots.push_back({"SUBMITTED", false, true});
        if (prefix == 2) slots.push_back({"PARTLYSUBMITTED", true, true});
        std::size_t middle = length - prefix - 2;
        for (std::size_t i = 0; i < middle; ++i) {
            bool join = i > 0 && u01(rng) < config.middle_sim_rate;
            slots.push_back({kBpicFillers[pick(rng, 8)], join, join});
        }
        slots.push_back({kBpicMarkers[cls][0], false, true});
        slots.push_back({kBpicMarkers[cls][1], true, true});

        std::int64_t t = kBaseEpoch + static_cast<std::int64_t>(ci) * 7200;
        std::int64_t prev_start = t;
        for (std::size_t i = 0; i < slots.size(); ++i) {
            Event e;
            e.activity = slots[i].label;
            if (i > 0 && slots[i].sim_with_prev) {
                e.start = prev_start;
            } else {
                e.start = i == 0 ? t : prev_start + pick_range(rng, 1, 10);
            }
            e.end = slots[i].zero_duration ? e.start : e.start + pick_range(rng, 1, 10);
            prev_start = e.start;
            e.universal_values["resource"] =
                "r" + std::to_string(1 + pick(rng, config.n_resources));
            e.universal_values["channel"] = pick(rng, config.n_channels) == 0 ? "web" : "phone";
            kase.events.push_back(std::move(e));
        }
        log.cases.push_back(std::move(kase));
    }
    return derive_durations(std::move(log));
}

SchemaConfig bpic_like_schema() {
    SchemaConfig config;
    config.columns.case_id = "case_id";
    config.columns.activity = "activity";
    config.columns.start = "start";
    config.columns.end = "end";
    config.columns.outcome = "outcome";
    for (const char* label : kBpicOutcomes) config.columns.outcome_values.push_back(label);
    config.schema = {
        {"resource", AttrLevel::event, AttrKind::categorical, Universality::universal},
        {"channel", AttrLevel::event, AttrKind::categorical, Universality::universal},
        {"amount", AttrLevel::sequence, AttrKind::numerical, Universality::universal},
    };
    for (const auto& spec : config.schema)
        config.columns.attribute_columns[spec.name] = spec.name;
    return config;
}

// ---------------------------------------------------------------------------
// Golden featurization tables

const std::string& patients_featurization_csv() {
    static const std::string text =
        "# activity label featurization: label,verb,descriptor\n"
        "Registration,register,<NO_DESC>\n"
        "Basic Check,check,basic\n"
        "Initiate Low Application Check,check,low\n"
        "Check Insurance History,check,insurance\n"
        "Check Medical History,check,medical\n"
        "Send Notification,note,<NO_DESC>\n"
        "Archive,archive,<NO_DESC>\n"
        "Receive Questionnaire,question,<NO_DESC>\n"
        "Initiate High Application Check,check,high\n"
        "Check Hospital Records,check,hospital\n";
    return text;
}

const std::string& bpic12_featurization_csv() {
    static const std::string text =
        "# activity label featurization: label,verb,descriptor\n"
        "ACCEPTED,accept,<NO_DESC>\n"
        "ACTIVATED,activate,<NO_DESC>\n"
        "APPROVED,approve,<NO_DESC>\n"
        "FINALIZED,finalize,<NO_DESC>\n"
        "PARTLYSUBMITTED,submit,partial\n"
        "PREACCEPTED,accept,pre\n"
        "REGISTERED,register,<NO_DESC>\n"
        "SUBMITTED,submit,<NO_DESC>\n"
        "CREATED,create,<NO_DESC>\n"
        "SELECTED,select,<NO_DESC>\n"
        "SENT,send,<NO_DESC>\n"
        "SENT_BACK,return,<NO_DESC>\n"
        "CANCELLED,cancel,<NO_DESC>\n"
        "COMPLETE,complete,<NO_DESC>\n"
        "QUOTE,quote,<NO_DESC>\n"
        "HANDLE,handle,<NO_DESC>\n"
        "FOLLOW,follow,<NO_DESC>\n"
        "ASSESS,assess,<NO_DESC>\n";
    return text;
}

}  // namespace pbpm
