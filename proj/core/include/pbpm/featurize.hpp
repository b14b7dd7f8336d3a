#pragma once

#include <map>
#include <string>
#include <vector>

#include "pbpm/event_log.hpp"

namespace pbpm {

/// Placeholder token for an absent descriptor slot.
inline constexpr const char* kNoDescToken = "<NO_DESC>";

struct FeaturizedLabel {
    std::string verb;
    std::vector<std::string> descriptors;  // length k_max, padded with <NO_DESC>
    std::string relabeled;                 // verb + non-absent descriptors joined by '_'
};

/// Manual verb/descriptor decomposition of activity labels, loaded from a CSV
/// of `label,verb[,descriptor...]` rows. All tokens are lowercased; descriptor
/// lists are padded to the maximum descriptor count seen in the file.
struct FeaturizationTable {
    std::map<std::string, FeaturizedLabel> entries;
    std::size_t k_max = 0;
};

FeaturizationTable load_featurization_table(const std::string& path);
FeaturizationTable parse_featurization_table(const std::string& csv_text,
                                             const std::string& origin = "<memory>");

/// Looks `label` up in the table. Unknown labels raise an error that lists the
/// nearest known labels.
const FeaturizedLabel& featurize_label(const std::string& label, const FeaturizationTable& table);

/// Replaces every event's activity with its relabeled token and attaches the
/// verb/descriptor decomposition. The original label is kept in raw_activity.
EventLog relabel_log(EventLog log, const FeaturizationTable& table);

/// Builds the relabeled string for a verb + descriptor list ("check_low").
std::string build_relabeled(const std::string& verb, const std::vector<std::string>& descriptors);

}  // namespace pbpm
