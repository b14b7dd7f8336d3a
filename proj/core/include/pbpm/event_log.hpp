#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pbpm {

enum class AttrLevel { event, sequence };
enum class AttrKind { categorical, numerical };
enum class Universality { universal, specific };

/// Declared attribute of an event log. `universality` is meaningful only for
/// event-level categorical attributes: universal attributes carry a value on
/// every event, specific ones only on some event types.
struct AttributeSpec {
    std::string name;
    AttrLevel level = AttrLevel::event;
    AttrKind kind = AttrKind::categorical;
    Universality universality = Universality::universal;
};

struct Event {
    std::string activity;                  // current label (relabeled token after featurization)
    std::string raw_activity;              // original label, kept for audit once relabeled
    std::string verb;                      // filled by relabel_log
    std::vector<std::string> descriptors;  // filled by relabel_log (padded with <NO_DESC>)
    std::int64_t start = 0;                // seconds since epoch
    std::int64_t end = 0;
    std::optional<std::int64_t> duration;  // set by derive_durations, seconds
    std::map<std::string, std::string> universal_values;
    std::map<std::string, std::string> specific_values;  // absent key = missing value
    std::map<std::string, double> numeric_values;        // absent key = missing value
};

struct Case {
    std::string case_id;
    std::vector<Event> events;  // sorted by (start, original record order)
    std::map<std::string, std::string> sequence_categorical;
    std::map<std::string, double> sequence_numeric;
    int outcome = -1;  // dense class index
};

struct EventLog {
    std::vector<AttributeSpec> schema;
    std::vector<Case> cases;
    std::vector<std::string> outcome_labels;  // class index -> label, first-seen order

    int n_classes() const { return static_cast<int>(outcome_labels.size()); }
    std::size_t total_events() const;

    /// Event-level attribute specs in schema order, filtered by kind.
    std::vector<AttributeSpec> event_attributes(AttrKind kind) const;
    std::vector<AttributeSpec> sequence_attributes(AttrKind kind) const;
};

/// Column bindings and file options shared by the CSV and XES readers. For XES
/// input the "columns" are attribute keys (e.g. "concept:name").
struct ColumnMap {
    std::string case_id;
    std::string activity;
    std::string start;
    std::string end;
    std::string outcome;
    std::map<std::string, std::string> attribute_columns;  // schema attr name -> column/key
    std::vector<std::string> outcome_values;               // optional pinned label set
    char delimiter = ',';
};

struct SchemaConfig {
    std::vector<AttributeSpec> schema;
    ColumnMap columns;
};

/// Parses the declarative key/value schema file (see README for the format).
SchemaConfig load_schema_config(const std::string& path);
void save_schema_config(const SchemaConfig& config, const std::string& path);

EventLog load_csv(const std::string& path, const SchemaConfig& config);

/// Reads the minimal XES subset (trace/event elements with string/date
/// attributes). Produces the same structure load_csv would for equal data.
EventLog xes_to_eventlog(const std::string& path, const SchemaConfig& config);

/// Sets duration = end - start on every event. Throws if end < start,
/// naming the case and event index.
EventLog derive_durations(EventLog log);

/// Maximal groups of consecutive events sharing an identical start timestamp.
/// Groups partition the event indices; singletons for isolated events.
std::vector<std::vector<std::size_t>> detect_simultaneous(const Case& c);

struct LogStats {
    std::size_t case_count = 0;
    std::size_t min_length = 0;
    std::size_t max_length = 0;
    std::size_t median_length = 0;  // lower median for even counts
    std::vector<std::size_t> class_counts;
};

LogStats log_stats(const EventLog& log);

/// Parses ISO-8601 ("2024-01-01T10:05:00", optional fraction/offset) or plain
/// integer epoch seconds. Sub-second digits are truncated toward zero.
std::int64_t parse_timestamp(const std::string& text);

/// Writes a log in the CSV layout load_csv expects for the given config.
void write_csv(const EventLog& log, const std::string& path, const SchemaConfig& config);

}  // namespace pbpm
