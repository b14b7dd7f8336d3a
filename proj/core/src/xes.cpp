#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "pbpm/event_log.hpp"

namespace pbpm {

namespace {

[[noreturn]] void parse_fail(std::size_t offset, const std::string& msg) {
    throw std::runtime_error("xes parse error at byte " + std::to_string(offset) + ": " + msg);
}

// Minimal non-validating XML pull parser: elements, attributes, self-closing
// tags, comments, declarations. Character data is skipped (XES carries all
// payload in attributes).
class XmlReader {
public:
    explicit XmlReader(std::string text) : text_(std::move(text)) {}

    struct Tag {
        enum Kind { open, close, self_closing } kind;
        std::string name;
        std::map<std::string, std::string> attrs;
        std::size_t offset;
    };

    // Returns false at end of input.
    bool next(Tag& tag) {
        for (;;) {
            skip_until('<');
            if (pos_ >= text_.size()) return false;
            std::size_t start = pos_;
            ++pos_;
            if (starts_with("!--")) {
                std::size_t end = text_.find("-->", pos_);
                if (end == std::string::npos) parse_fail(start, "unterminated comment");
                pos_ = end + 3;
                continue;
            }
            if (starts_with("?")) {
                std::size_t end = text_.find("?>", pos_);
                if (end == std::string::npos) parse_fail(start, "unterminated declaration");
                pos_ = end + 2;
                continue;
            }
            if (starts_with("!")) {  // DOCTYPE etc.
                std::size_t end = text_.find('>', pos_);
                if (end == std::string::npos) parse_fail(start, "unterminated markup declaration");
                pos_ = end + 1;
                continue;
            }
            tag = read_tag(start);
            return true;
        }
    }

private:
    bool starts_with(const char* s) const {
        return text_.compare(pos_, std::string::traits_type::length(s), s) == 0;
    }

    void skip_until(char c) {
        while (pos_ < text_.size() && text_[pos_] != c) ++pos_;
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    static bool is_name_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == ':' || c == '-' || c == '_' ||
               c == '.';
    }

    std::string read_name(std::size_t at) {
        std::size_t b = pos_;
        while (pos_ < text_.size() && is_name_char(text_[pos_])) ++pos_;
        if (pos_ == b) parse_fail(at, "expected name");
        return text_.substr(b, pos_ - b);
    }

    static std::string decode_entities(const std::string& s, std::size_t at) {
        if (s.find('&') == std::string::npos) return s;
        std::string out;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] != '&') {
                out += s[i];
                continue;
            }
            std::size_t semi = s.find(';', i);
            if (semi == std::string::npos) parse_fail(at, "unterminated entity reference");
            std::string name = s.substr(i + 1, semi - i - 1);
            if (name == "amp") out += '&';
            else if (name == "lt") out += '<';
            else if (name == "gt") out += '>';
            else if (name == "quot") out += '"';
            else if (name == "apos") out += '\'';
            else parse_fail(at, "unsupported entity '&" + name + ";'");
            i = semi;
        }
        return out;
    }

    Tag read_tag(std::size_t start) {
        Tag tag;
        tag.offset = start;
        if (pos_ < text_.size() && text_[pos_] == '/') {
            ++pos_;
            tag.kind = Tag::close;
            tag.name = read_name(start);
            skip_space();
            if (pos_ >= text_.size() || text_[pos_] != '>')
                parse_fail(start, "malformed closing tag");
            ++pos_;
            return tag;
        }
        tag.kind = Tag::open;
        tag.name = read_name(start);
        for (;;) {
            skip_space();
            if (pos_ >= text_.size()) parse_fail(start, "unterminated tag '" + tag.name + "'");
            if (text_[pos_] == '>') {
                ++pos_;
                return tag;
            }
            if (text_[pos_] == '/') {
                ++pos_;
                if (pos_ >= text_.size() || text_[pos_] != '>')
                    parse_fail(start, "malformed self-closing tag");
                ++pos_;
                tag.kind = Tag::self_closing;
                return tag;
            }
            std::string key = read_name(start);
            skip_space();
            if (pos_ >= text_.size() || text_[pos_] != '=')
                parse_fail(start, "expected '=' after attribute '" + key + "'");
            ++pos_;
            skip_space();
            if (pos_ >= text_.size() || (text_[pos_] != '"' && text_[pos_] != '\''))
                parse_fail(start, "expected quoted attribute value");
            char quote = text_[pos_];
            ++pos_;
            std::size_t b = pos_;
            while (pos_ < text_.size() && text_[pos_] != quote) ++pos_;
            if (pos_ >= text_.size()) parse_fail(start, "unterminated attribute value");
            tag.attrs[key] = decode_entities(text_.substr(b, pos_ - b), start);
            ++pos_;
        }
    }

    std::string text_;
    std::size_t pos_ = 0;
};

}  // namespace

EventLog xes_to_eventlog(const std::string& path, const SchemaConfig& config) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    XmlReader reader(buf.str());

    const ColumnMap& cm = config.columns;

    struct PendingCase {
        std::map<std::string, std::string> seq_values;
        std::vector<std::map<std::string, std::string>> event_values;
    };

    // Collect (key, value) pairs per trace/event and map them through the same
    // column bindings the CSV reader uses. Only immediate children of <trace>
    // and <event> are read; nested containers and unknown elements are skipped.
    std::vector<PendingCase> traces;
    PendingCase* current_trace = nullptr;
    std::vector<std::string> stack;

    XmlReader::Tag tag;
    while (reader.next(tag)) {
        const bool leaf_value = tag.name == "string" || tag.name == "date" ||
                                tag.name == "int" || tag.name == "float" ||
                                tag.name == "boolean" || tag.name == "id";
        if (tag.kind == XmlReader::Tag::open || tag.kind == XmlReader::Tag::self_closing) {
            const std::string parent = stack.empty() ? "" : stack.back();
            if (tag.name == "trace") {
                traces.emplace_back();
                current_trace = &traces.back();
            } else if (tag.name == "event") {
                if (current_trace == nullptr || parent != "trace")
                    parse_fail(tag.offset, "<event> outside of <trace>");
                current_trace->event_values.emplace_back();
            } else if (leaf_value && current_trace != nullptr &&
                       (parent == "trace" || parent == "event")) {
                auto key = tag.attrs.find("key");
                auto value = tag.attrs.find("value");
                if (key != tag.attrs.end() && value != tag.attrs.end()) {
                    auto& target = parent == "event" ? current_trace->event_values.back()
                                                     : current_trace->seq_values;
                    target[key->second] = value->second;
                }
            }
            if (tag.kind == XmlReader::Tag::open) stack.push_back(tag.name);
        } else {  // close
            if (stack.empty() || stack.back() != tag.name)
                parse_fail(tag.offset, "mismatched closing tag </" + tag.name + ">");
            stack.pop_back();
            if (tag.name == "trace") current_trace = nullptr;
        }
    }
    if (!stack.empty())
        parse_fail(buf.str().size(), "unexpected end of input inside <" + stack.back() + ">");

    if (traces.empty())
        throw std::runtime_error("'" + path + "': no <trace> elements found");

    // Reuse the CSV path: serialize the collected values into an in-memory log.
    EventLog log;
    log.schema = config.schema;
    for (const auto& label : cm.outcome_values) log.outcome_labels.push_back(label);
    std::map<std::string, int> outcome_index;
    for (std::size_t i = 0; i < log.outcome_labels.size(); ++i)
        outcome_index[log.outcome_labels[i]] = static_cast<int>(i);
    const bool pinned = !cm.outcome_values.empty();

    for (auto& trace : traces) {
        auto cid = trace.seq_values.find(cm.case_id);
        if (cid == trace.seq_values.end())
            throw std::runtime_error("'" + path + "': trace missing case-id attribute '" +
                                     cm.case_id + "'");
        Case c;
        c.case_id = cid->second;

        auto out_it = trace.seq_values.find(cm.outcome);
        if (out_it == trace.seq_values.end())
            throw std::runtime_error("'" + path + "': trace '" + c.case_id +
                                     "' missing outcome attribute '" + cm.outcome + "'");
        auto oi = outcome_index.find(out_it->second);
        if (oi == outcome_index.end()) {
            if (pinned) {
                std::string known;
                for (const auto& l : log.outcome_labels) known += (known.empty() ? "" : ", ") + l;
                throw std::runtime_error("unknown outcome label '" + out_it->second +
                                         "' (known: " + known + ")");
            }
            oi = outcome_index.emplace(out_it->second, log.outcome_labels.size()).first;
            log.outcome_labels.push_back(out_it->second);
        }
        c.outcome = oi->second;

        for (const auto& spec : config.schema) {
            if (spec.level != AttrLevel::sequence) continue;
            auto key_it = cm.attribute_columns.find(spec.name);
            if (key_it == cm.attribute_columns.end()) continue;
            auto v = trace.seq_values.find(key_it->second);
            if (v == trace.seq_values.end()) continue;
            if (spec.kind == AttrKind::numerical)
                c.sequence_numeric[spec.name] = std::stod(v->second);
            else
                c.sequence_categorical[spec.name] = v->second;
        }

        for (auto& ev_values : trace.event_values) {
            Event e;
            auto act = ev_values.find(cm.activity);
            if (act == ev_values.end())
                throw std::runtime_error("'" + path + "': event missing activity attribute '" +
                                         cm.activity + "' in trace '" + c.case_id + "'");
            e.activity = act->second;
            auto ts = ev_values.find(cm.start);
            auto te = ev_values.find(cm.end);
            if (ts == ev_values.end() || te == ev_values.end())
                throw std::runtime_error("'" + path + "': event missing timestamp in trace '" +
                                         c.case_id + "'");
            e.start = parse_timestamp(ts->second);
            e.end = parse_timestamp(te->second);
            if (e.end < e.start)
                throw std::runtime_error("'" + path + "': end before start in trace '" +
                                         c.case_id + "'");
            for (const auto& spec : config.schema) {
                if (spec.level != AttrLevel::event) continue;
                auto key_it = cm.attribute_columns.find(spec.name);
                if (key_it == cm.attribute_columns.end()) continue;
                auto v = ev_values.find(key_it->second);
                if (v == ev_values.end()) {
                    if (spec.kind == AttrKind::categorical &&
                        spec.universality == Universality::universal)
                        throw std::runtime_error("'" + path + "': universal attribute '" +
                                                 spec.name + "' missing in trace '" + c.case_id +
                                                 "'");
                    continue;
                }
                if (spec.kind == AttrKind::numerical)
                    e.numeric_values[spec.name] = std::stod(v->second);
                else if (spec.universality == Universality::universal)
                    e.universal_values[spec.name] = v->second;
                else
                    e.specific_values[spec.name] = v->second;
            }
            c.events.push_back(std::move(e));
        }
        std::stable_sort(c.events.begin(), c.events.end(),
                         [](const Event& a, const Event& b) { return a.start < b.start; });
        log.cases.push_back(std::move(c));
    }
    return log;
}

}  // namespace pbpm
