#include "pbpm/event_log.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pbpm {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// RFC-4180-ish row split with quoted fields and "" escapes.
std::vector<std::string> split_csv_row(const std::string& line, char delim, std::size_t line_no) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == delim) {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    if (quoted) fail("csv line " + std::to_string(line_no) + ": unterminated quoted field");
    out.push_back(field);
    return out;
}

// Days since 1970-01-01 for a civil date (proleptic Gregorian).
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2u) / 5u + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

int parse_int(const std::string& s, std::size_t pos, std::size_t len, bool& ok) {
    if (pos + len > s.size()) {
        ok = false;
        return 0;
    }
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) {
            ok = false;
            return 0;
        }
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

}  // namespace

std::size_t EventLog::total_events() const {
    std::size_t n = 0;
    for (const auto& c : cases) n += c.events.size();
    return n;
}

std::vector<AttributeSpec> EventLog::event_attributes(AttrKind kind) const {
    std::vector<AttributeSpec> out;
    for (const auto& a : schema)
        if (a.level == AttrLevel::event && a.kind == kind) out.push_back(a);
    return out;
}

std::vector<AttributeSpec> EventLog::sequence_attributes(AttrKind kind) const {
    std::vector<AttributeSpec> out;
    for (const auto& a : schema)
        if (a.level == AttrLevel::sequence && a.kind == kind) out.push_back(a);
    return out;
}

std::int64_t parse_timestamp(const std::string& raw) {
    std::string s = trim(raw);
    if (s.empty()) fail("empty timestamp");

    bool digits_only = s.find_first_not_of("0123456789-") == std::string::npos &&
                       s.find('-', 1) == std::string::npos;
    if (digits_only) {
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size()) fail("bad epoch timestamp '" + s + "'");
        return v;
    }

    bool ok = true;
    int year = parse_int(s, 0, 4, ok);
    if (!ok || s.size() < 10 || s[4] != '-' || s[7] != '-')
        fail("bad timestamp '" + s + "' (expected ISO-8601 or epoch seconds)");
    int month = parse_int(s, 5, 2, ok);
    int day = parse_int(s, 8, 2, ok);
    int hh = 0, mm = 0, ss = 0;
    std::size_t pos = 10;
    if (pos < s.size() && (s[pos] == 'T' || s[pos] == ' ')) {
        ++pos;
        hh = parse_int(s, pos, 2, ok);
        if (!ok || pos + 5 > s.size() || s[pos + 2] != ':')
            fail("bad timestamp '" + s + "' (truncated time)");
        mm = parse_int(s, pos + 3, 2, ok);
        pos += 5;
        if (pos < s.size() && s[pos] == ':') {
            ss = parse_int(s, pos + 1, 2, ok);
            pos += 3;
        }
        if (pos < s.size() && s[pos] == '.') {  // fractional seconds: truncate
            ++pos;
            while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        }
    }
    if (!ok || month < 1 || month > 12 || day < 1 || day > 31 || hh > 23 || mm > 59 || ss > 60)
        fail("bad timestamp '" + s + "'");

    std::int64_t epoch = days_from_civil(year, month, day) * 86400 + hh * 3600 + mm * 60 + ss;

    if (pos < s.size()) {  // zone designator
        char c = s[pos];
        if (c == 'Z') {
            ++pos;
        } else if (c == '+' || c == '-') {
            int sign = (c == '+') ? 1 : -1;
            int oh = parse_int(s, pos + 1, 2, ok);
            int om = 0;
            std::size_t zp = pos + 3;
            if (zp < s.size() && s[zp] == ':') ++zp;
            if (zp + 2 <= s.size()) om = parse_int(s, zp, 2, ok);
            if (!ok) fail("bad timezone in '" + s + "'");
            epoch -= sign * (oh * 3600 + om * 60);
            pos = zp + 2;
        }
        if (pos != s.size()) fail("trailing characters in timestamp '" + s + "'");
    }
    return epoch;
}

namespace {

struct RawRow {
    std::string case_id;
    Event event;
    std::map<std::string, std::string> seq_cat;
    std::map<std::string, double> seq_num;
    std::string outcome_label;
    std::size_t order = 0;  // original record order, tie-break for equal starts
};

EventLog assemble_log(std::vector<RawRow> rows, const SchemaConfig& config) {
    EventLog log;
    log.schema = config.schema;
    for (const auto& label : config.columns.outcome_values) log.outcome_labels.push_back(label);

    std::map<std::string, std::size_t> case_index;
    std::map<std::string, int> outcome_index;
    for (std::size_t i = 0; i < log.outcome_labels.size(); ++i)
        outcome_index[log.outcome_labels[i]] = static_cast<int>(i);
    const bool pinned = !config.columns.outcome_values.empty();

    for (auto& row : rows) {
        auto it = case_index.find(row.case_id);
        if (it == case_index.end()) {
            it = case_index.emplace(row.case_id, log.cases.size()).first;
            Case c;
            c.case_id = row.case_id;
            c.sequence_categorical = row.seq_cat;
            c.sequence_numeric = row.seq_num;
            log.cases.push_back(std::move(c));
        }
        Case& c = log.cases[it->second];
        for (const auto& [k, v] : row.seq_cat) {
            auto sit = c.sequence_categorical.find(k);
            if (sit != c.sequence_categorical.end() && sit->second != v)
                fail("case '" + row.case_id + "': conflicting values for sequence attribute '" + k +
                     "' ('" + sit->second + "' vs '" + v + "')");
            c.sequence_categorical[k] = v;
        }
        for (const auto& [k, v] : row.seq_num) c.sequence_numeric[k] = v;

        auto oit = outcome_index.find(row.outcome_label);
        if (oit == outcome_index.end()) {
            if (pinned) {
                std::string known;
                for (const auto& l : log.outcome_labels) known += (known.empty() ? "" : ", ") + l;
                fail("unknown outcome label '" + row.outcome_label + "' (known: " + known + ")");
            }
            oit = outcome_index.emplace(row.outcome_label, log.outcome_labels.size()).first;
            log.outcome_labels.push_back(row.outcome_label);
        }
        int outcome = oit->second;
        if (c.outcome >= 0 && c.outcome != outcome)
            fail("case '" + row.case_id + "': conflicting outcome labels");
        c.outcome = outcome;
        c.events.push_back(std::move(row.event));
    }

    for (auto& c : log.cases) {
        std::vector<std::size_t> idx(c.events.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return c.events[a].start < c.events[b].start;
        });
        std::vector<Event> sorted;
        sorted.reserve(c.events.size());
        for (std::size_t i : idx) sorted.push_back(std::move(c.events[i]));
        c.events = std::move(sorted);
    }
    return log;
}

}  // namespace

EventLog load_csv(const std::string& path, const SchemaConfig& config) {
    std::ifstream in(path);
    if (!in) fail("cannot open '" + path + "'");
    const ColumnMap& cm = config.columns;

    std::string header_line;
    if (!std::getline(in, header_line)) fail("'" + path + "': empty file (header row required)");
    std::vector<std::string> header = split_csv_row(header_line, cm.delimiter, 1);

    auto column_of = [&](const std::string& name, const char* role) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            fail("'" + path + "': missing column '" + name + "' (" + role + ")");
        return static_cast<std::size_t>(it - header.begin());
    };

    std::size_t ci_case = column_of(cm.case_id, "case id");
    std::size_t ci_act = column_of(cm.activity, "activity");
    std::size_t ci_start = column_of(cm.start, "start timestamp");
    std::size_t ci_end = column_of(cm.end, "end timestamp");
    std::size_t ci_out = column_of(cm.outcome, "outcome");

    struct AttrCol {
        const AttributeSpec* spec;
        std::size_t col;
    };
    std::vector<AttrCol> attr_cols;
    for (const auto& spec : config.schema) {
        auto it = cm.attribute_columns.find(spec.name);
        if (it == cm.attribute_columns.end())
            fail("schema attribute '" + spec.name + "' has no column binding");
        attr_cols.push_back({&spec, column_of(it->second, "schema attribute")});
    }

    std::vector<RawRow> rows;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<std::string> fields = split_csv_row(line, cm.delimiter, line_no);
        if (fields.size() != header.size())
            fail("'" + path + "' line " + std::to_string(line_no) + ": expected " +
                 std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));

        RawRow row;
        row.order = rows.size();
        row.case_id = fields[ci_case];
        row.event.activity = fields[ci_act];
        try {
            row.event.start = parse_timestamp(fields[ci_start]);
            row.event.end = parse_timestamp(fields[ci_end]);
        } catch (const std::exception& e) {
            fail("'" + path + "' line " + std::to_string(line_no) + ": " + e.what());
        }
        if (row.event.end < row.event.start)
            fail("'" + path + "' line " + std::to_string(line_no) + ": end timestamp before start");
        row.outcome_label = fields[ci_out];

        for (const auto& ac : attr_cols) {
            const std::string& text = fields[ac.col];
            const AttributeSpec& spec = *ac.spec;
            if (spec.kind == AttrKind::numerical) {
                if (trim(text).empty()) continue;  // missing numeric
                double v = 0.0;
                try {
                    v = std::stod(text);
                } catch (...) {
                    fail("'" + path + "' line " + std::to_string(line_no) + ": bad number '" +
                         text + "' for attribute '" + spec.name + "'");
                }
                if (spec.level == AttrLevel::event)
                    row.event.numeric_values[spec.name] = v;
                else
                    row.seq_num[spec.name] = v;
            } else if (spec.level == AttrLevel::sequence) {
                row.seq_cat[spec.name] = text;
            } else if (spec.universality == Universality::universal) {
                if (trim(text).empty())
                    fail("'" + path + "' line " + std::to_string(line_no) +
                         ": universal attribute '" + spec.name + "' has no value");
                row.event.universal_values[spec.name] = text;
            } else {
                if (!trim(text).empty()) row.event.specific_values[spec.name] = text;
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) fail("'" + path + "': no data rows");
    return assemble_log(std::move(rows), config);
}

EventLog derive_durations(EventLog log) {
    for (auto& c : log.cases) {
        for (std::size_t i = 0; i < c.events.size(); ++i) {
            Event& e = c.events[i];
            if (e.end < e.start)
                fail("case '" + c.case_id + "' event " + std::to_string(i) +
                     ": end timestamp before start");
            e.duration = e.end - e.start;
        }
    }
    return log;
}

std::vector<std::vector<std::size_t>> detect_simultaneous(const Case& c) {
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < c.events.size(); ++i) {
        if (!groups.empty() && c.events[groups.back().back()].start == c.events[i].start)
            groups.back().push_back(i);
        else
            groups.push_back({i});
    }
    return groups;
}

LogStats log_stats(const EventLog& log) {
    if (log.cases.empty()) fail("log_stats: empty log");
    LogStats st;
    st.case_count = log.cases.size();
    std::vector<std::size_t> lengths;
    lengths.reserve(log.cases.size());
    st.class_counts.assign(static_cast<std::size_t>(log.n_classes()), 0);
    for (const auto& c : log.cases) {
        lengths.push_back(c.events.size());
        if (c.outcome >= 0 && c.outcome < log.n_classes())
            ++st.class_counts[static_cast<std::size_t>(c.outcome)];
    }
    std::sort(lengths.begin(), lengths.end());
    st.min_length = lengths.front();
    st.max_length = lengths.back();
    st.median_length = lengths[(lengths.size() - 1) / 2];  // lower median
    return st;
}

namespace {

std::string csv_quote(const std::string& s, char delim) {
    if (s.find(delim) == std::string::npos && s.find('"') == std::string::npos &&
        s.find('\n') == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string format_number(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

void write_csv(const EventLog& log, const std::string& path, const SchemaConfig& config) {
    std::ofstream out(path);
    if (!out) fail("cannot write '" + path + "'");
    const ColumnMap& cm = config.columns;
    const char d = cm.delimiter;

    out << cm.case_id << d << cm.activity << d << cm.start << d << cm.end << d << cm.outcome;
    for (const auto& spec : config.schema) {
        auto it = cm.attribute_columns.find(spec.name);
        out << d << (it != cm.attribute_columns.end() ? it->second : spec.name);
    }
    out << "\n";

    for (const auto& c : log.cases) {
        for (const auto& e : c.events) {
            out << csv_quote(c.case_id, d) << d << csv_quote(e.activity, d) << d << e.start << d
                << e.end << d << csv_quote(log.outcome_labels[static_cast<std::size_t>(c.outcome)], d);
            for (const auto& spec : config.schema) {
                out << d;
                if (spec.kind == AttrKind::numerical) {
                    const auto& m = spec.level == AttrLevel::event ? e.numeric_values
                                                                   : c.sequence_numeric;
                    auto it = m.find(spec.name);
                    if (it != m.end()) out << format_number(it->second);
                } else if (spec.level == AttrLevel::sequence) {
                    auto it = c.sequence_categorical.find(spec.name);
                    if (it != c.sequence_categorical.end()) out << csv_quote(it->second, d);
                } else if (spec.universality == Universality::universal) {
                    auto it = e.universal_values.find(spec.name);
                    if (it != e.universal_values.end()) out << csv_quote(it->second, d);
                } else {
                    auto it = e.specific_values.find(spec.name);
                    if (it != e.specific_values.end()) out << csv_quote(it->second, d);
                }
            }
            out << "\n";
        }
    }
}

namespace {

AttrLevel parse_level(const std::string& s) {
    if (s == "event") return AttrLevel::event;
    if (s == "sequence") return AttrLevel::sequence;
    fail("schema config: bad level '" + s + "' (expected event|sequence)");
}

AttrKind parse_kind(const std::string& s) {
    if (s == "categorical") return AttrKind::categorical;
    if (s == "numerical" || s == "numeric") return AttrKind::numerical;
    fail("schema config: bad kind '" + s + "' (expected categorical|numerical)");
}

}  // namespace

SchemaConfig load_schema_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open schema config '" + path + "'");
    SchemaConfig config;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto colon = t.find(':');
        if (colon == std::string::npos)
            fail("schema config line " + std::to_string(line_no) + ": expected 'key: value'");
        std::string key = trim(t.substr(0, colon));
        std::string value = trim(t.substr(colon + 1));

        if (key == "case_id_column") config.columns.case_id = value;
        else if (key == "activity_column") config.columns.activity = value;
        else if (key == "start_column") config.columns.start = value;
        else if (key == "end_column") config.columns.end = value;
        else if (key == "outcome_column") config.columns.outcome = value;
        else if (key == "delimiter") {
            if (value == "tab") config.columns.delimiter = '\t';
            else if (value.size() == 1) config.columns.delimiter = value[0];
            else fail("schema config line " + std::to_string(line_no) + ": bad delimiter");
        } else if (key == "outcomes") {
            std::istringstream os(value);
            std::string label;
            while (std::getline(os, label, ',')) {
                label = trim(label);
                if (!label.empty()) config.columns.outcome_values.push_back(label);
            }
        } else if (key == "attribute") {
            // attribute: <name> <level> <kind> [universal|specific] column=<col>
            std::istringstream as(value);
            std::string name, level, kind, tok;
            as >> name >> level >> kind;
            if (name.empty() || level.empty() || kind.empty())
                fail("schema config line " + std::to_string(line_no) +
                     ": attribute needs '<name> <level> <kind> [universality] column=<col>'");
            AttributeSpec spec;
            spec.name = name;
            spec.level = parse_level(level);
            spec.kind = parse_kind(kind);
            std::string column = name;
            while (as >> tok) {
                if (tok == "universal") spec.universality = Universality::universal;
                else if (tok == "specific") spec.universality = Universality::specific;
                else if (tok.rfind("column=", 0) == 0) column = tok.substr(7);
                else fail("schema config line " + std::to_string(line_no) +
                          ": unknown attribute token '" + tok + "'");
            }
            for (const auto& existing : config.schema)
                if (existing.name == spec.name)
                    fail("schema config: duplicate attribute '" + spec.name + "'");
            config.schema.push_back(spec);
            config.columns.attribute_columns[spec.name] = column;
        } else {
            fail("schema config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    if (config.columns.case_id.empty() || config.columns.activity.empty() ||
        config.columns.start.empty() || config.columns.end.empty() ||
        config.columns.outcome.empty())
        fail("schema config '" + path +
             "': case_id/activity/start/end/outcome column keys are all required");
    return config;
}

void save_schema_config(const SchemaConfig& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("cannot write schema config '" + path + "'");
    const ColumnMap& cm = config.columns;
    out << "case_id_column: " << cm.case_id << "\n";
    out << "activity_column: " << cm.activity << "\n";
    out << "start_column: " << cm.start << "\n";
    out << "end_column: " << cm.end << "\n";
    out << "outcome_column: " << cm.outcome << "\n";
    if (cm.delimiter == '\t') out << "delimiter: tab\n";
    else if (cm.delimiter != ',') out << "delimiter: " << cm.delimiter << "\n";
    if (!cm.outcome_values.empty()) {
        out << "outcomes: ";
        for (std::size_t i = 0; i < cm.outcome_values.size(); ++i)
            out << (i ? ", " : "") << cm.outcome_values[i];
        out << "\n";
    }
    for (const auto& spec : config.schema) {
        out << "attribute: " << spec.name << ' '
            << (spec.level == AttrLevel::event ? "event" : "sequence") << ' '
            << (spec.kind == AttrKind::categorical ? "categorical" : "numerical");
        if (spec.level == AttrLevel::event && spec.kind == AttrKind::categorical)
            out << ' ' << (spec.universality == Universality::universal ? "universal" : "specific");
        auto it = cm.attribute_columns.find(spec.name);
        if (it != cm.attribute_columns.end() && it->second != spec.name)
            out << " column=" << it->second;
        out << "\n";
    }
}

}  // namespace pbpm
