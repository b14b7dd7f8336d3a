#include "pbpm/featurize.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pbpm {

namespace {

std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, delim)) out.push_back(trim(field));
    return out;
}

// Edit distance for the nearest-label suggestion on unknown lookups.
std::size_t levenshtein(const std::string& a, const std::string& b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t prev = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t cur = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1,
                               prev + (a[i - 1] == b[j - 1] ? 0 : 1)});
            prev = cur;
        }
    }
    return row[b.size()];
}

}  // namespace

std::string build_relabeled(const std::string& verb, const std::vector<std::string>& descriptors) {
    std::string out = verb;
    for (const auto& d : descriptors)
        if (d != kNoDescToken) out += "_" + d;
    return out;
}

FeaturizationTable parse_featurization_table(const std::string& csv_text,
                                             const std::string& origin) {
    FeaturizationTable table;
    std::istringstream in(csv_text);
    std::string line;
    std::size_t line_no = 0;

    struct Row {
        std::string label;
        std::string verb;
        std::vector<std::string> descriptors;
    };
    std::vector<Row> rows;

    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::vector<std::string> fields = split(t, ',');
        if (fields.size() < 2)
            throw std::runtime_error(origin + " line " + std::to_string(line_no) +
                                     ": expected 'label,verb[,descriptor...]'");
        Row row;
        row.label = fields[0];
        row.verb = lowercase(fields[1]);
        if (row.verb.empty())
            throw std::runtime_error(origin + " line " + std::to_string(line_no) +
                                     ": empty verb for label '" + row.label + "'");
        for (std::size_t i = 2; i < fields.size(); ++i) {
            if (fields[i].empty()) continue;
            std::string d = fields[i] == kNoDescToken ? std::string(kNoDescToken)
                                                      : lowercase(fields[i]);
            if (d != kNoDescToken) row.descriptors.push_back(d);
        }
        rows.push_back(std::move(row));
    }

    // k_max = minimum descriptor count giving complete coverage of the file.
    for (const auto& row : rows) table.k_max = std::max(table.k_max, row.descriptors.size());
    if (table.k_max == 0) table.k_max = 1;

    for (auto& row : rows) {
        if (table.entries.count(row.label))
            throw std::runtime_error(origin + ": duplicate featurization row for label '" +
                                     row.label + "'");
        FeaturizedLabel fl;
        fl.verb = row.verb;
        fl.descriptors = row.descriptors;
        fl.descriptors.resize(table.k_max, kNoDescToken);
        fl.relabeled = build_relabeled(fl.verb, fl.descriptors);
        table.entries.emplace(row.label, std::move(fl));
    }
    if (table.entries.empty()) throw std::runtime_error(origin + ": empty featurization table");
    return table;
}

FeaturizationTable load_featurization_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open featurization table '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_featurization_table(buf.str(), path);
}

const FeaturizedLabel& featurize_label(const std::string& label,
                                       const FeaturizationTable& table) {
    auto it = table.entries.find(label);
    if (it != table.entries.end()) return it->second;

    std::vector<std::pair<std::size_t, std::string>> by_distance;
    for (const auto& [known, fl] : table.entries)
        by_distance.emplace_back(levenshtein(label, known), known);
    std::sort(by_distance.begin(), by_distance.end());
    std::string nearest;
    for (std::size_t i = 0; i < std::min<std::size_t>(3, by_distance.size()); ++i)
        nearest += (i ? ", " : "") + by_distance[i].second;
    throw std::runtime_error("unknown activity label '" + label +
                             "' (nearest known labels: " + nearest + ")");
}

EventLog relabel_log(EventLog log, const FeaturizationTable& table) {
    for (auto& c : log.cases) {
        for (auto& e : c.events) {
            const std::string& original = e.raw_activity.empty() ? e.activity : e.raw_activity;
            const FeaturizedLabel* fl = nullptr;
            try {
                fl = &featurize_label(original, table);
            } catch (const std::exception& err) {
                throw std::runtime_error(std::string(err.what()) + " in case '" + c.case_id + "'");
            }
            e.raw_activity = original;
            e.activity = fl->relabeled;
            e.verb = fl->verb;
            e.descriptors = fl->descriptors;
        }
    }
    return log;
}

}  // namespace pbpm
