#include "pbpm/vectorize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "pbpm/featurize.hpp"

namespace pbpm {

using json = nlohmann::json;

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::B: return "B";
        case Variant::FB: return "FB";
        case Variant::MB: return "MB";
        case Variant::D: return "D";
        case Variant::FD: return "FD";
        case Variant::DC: return "DC";
        case Variant::T: return "T";
    }
    return "B";
}

Variant variant_from_name(const std::string& name) {
    if (name == "B" || name == "B-LSTM") return Variant::B;
    if (name == "FB" || name == "F-B-LSTM") return Variant::FB;
    if (name == "MB" || name == "M-B-LSTM") return Variant::MB;
    if (name == "D" || name == "D-LSTM") return Variant::D;
    if (name == "FD" || name == "F-D-LSTM") return Variant::FD;
    if (name == "DC" || name == "DC-LSTM") return Variant::DC;
    if (name == "T" || name == "T-LSTM") return Variant::T;
    throw std::invalid_argument("unknown variant '" + name +
                                "' (expected B, FB, MB, D, FD, DC or T)");
}

bool variant_uses_bin(Variant v) {
    return v == Variant::D || v == Variant::FD || v == Variant::DC || v == Variant::T;
}
bool variant_uses_cor(Variant v) { return v == Variant::DC || v == Variant::T; }
bool variant_uses_text(Variant v) { return v == Variant::T; }
bool variant_uses_delta_t(Variant v) { return v == Variant::FB || v == Variant::FD; }
bool variant_uses_co_embed(Variant v) { return v == Variant::MB; }

Vocab Vocab::fit(const std::vector<std::string>& values) {
    Vocab v;
    std::int32_t next = 2;
    for (const auto& s : values) {
        if (s == kNoDescToken) continue;
        if (v.index.emplace(s, next).second) {
            v.tokens.push_back(s);
            ++next;
        }
    }
    v.unk_index = next;
    v.size = next + 1;
    return v;
}

std::int32_t Vocab::encode(const std::string& value) const {
    if (value == kNoDescToken) return no_desc_index;
    auto it = index.find(value);
    return it == index.end() ? unk_index : it->second;
}

std::vector<std::int32_t> encode_categorical(const std::vector<std::string>& values,
                                             const Vocab& vocab) {
    std::vector<std::int32_t> out;
    out.reserve(values.size());
    for (const auto& v : values) out.push_back(vocab.encode(v));
    return out;
}

std::pair<std::vector<double>, double> impute_median(
    const std::vector<std::optional<double>>& column) {
    std::vector<double> present;
    for (const auto& v : column)
        if (v) present.push_back(*v);
    if (present.empty())
        throw std::runtime_error("impute_median: column has no present values");
    std::sort(present.begin(), present.end());
    double median = present[(present.size() - 1) / 2];  // lower median
    return {fill_missing(column, median), median};
}

std::vector<double> fill_missing(const std::vector<std::optional<double>>& column,
                                 double median) {
    std::vector<double> out;
    out.reserve(column.size());
    for (const auto& v : column) out.push_back(v ? *v : median);
    return out;
}

std::vector<std::int64_t> time_difference(const Case& c) {
    std::vector<std::int64_t> dt(c.events.size(), 0);
    for (std::size_t i = 1; i < c.events.size(); ++i)
        dt[i] = c.events[i].start - c.events[i - 1].start;
    return dt;
}

std::vector<double> co_embed(const std::vector<std::vector<double>>& group,
                             const CoEmbedConfig& config) {
    if (group.size() > config.k_max)
        throw std::runtime_error("co_embed: group of " + std::to_string(group.size()) +
                                 " events requires k_max >= " + std::to_string(group.size()) +
                                 " (configured " + std::to_string(config.k_max) + ")");
    std::vector<double> out(config.k_max * config.per_event_width, 0.0);
    for (std::size_t s = 0; s < group.size(); ++s) {
        if (group[s].size() != config.per_event_width)
            throw std::runtime_error("co_embed: event vector width " +
                                     std::to_string(group[s].size()) + " != configured " +
                                     std::to_string(config.per_event_width));
        std::copy(group[s].begin(), group[s].end(), out.begin() + s * config.per_event_width);
    }
    return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const std::vector<std::int32_t>& labels, double train_fraction, std::uint64_t seed) {
    std::map<std::int32_t, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> train, val;
    for (auto& [cls, indices] : by_class) {
        std::shuffle(indices.begin(), indices.end(), rng);
        std::size_t n_train = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::floor(train_fraction *
                                                   static_cast<double>(indices.size()))));
        for (std::size_t i = 0; i < indices.size(); ++i)
            (i < n_train ? train : val).push_back(indices[i]);
    }
    std::sort(train.begin(), train.end());
    std::sort(val.begin(), val.end());
    return {train, val};
}

namespace {

struct FittedChannels {
    Vocab activity;
    std::vector<Vocab> event_cat;          // per event categorical spec
    std::vector<Vocab> seq_cat;            // per sequence categorical spec
    std::vector<double> event_num_median;  // per event numerical spec
    std::vector<double> seq_num_median;    // per sequence numerical spec
    Vocab verb;
    Vocab desc;
    std::size_t desc_slots = 0;
};

FittedChannels fit_channels(const EventLog& log, const std::vector<std::size_t>& train_idx,
                            const std::vector<AttributeSpec>& ev_cat,
                            const std::vector<AttributeSpec>& ev_num,
                            const std::vector<AttributeSpec>& sq_cat,
                            const std::vector<AttributeSpec>& sq_num, bool with_text) {
    FittedChannels fc;

    std::vector<std::string> activities;
    for (std::size_t ci : train_idx)
        for (const auto& e : log.cases[ci].events) activities.push_back(e.activity);
    fc.activity = Vocab::fit(activities);

    for (const auto& spec : ev_cat) {
        std::vector<std::string> values;
        for (std::size_t ci : train_idx) {
            for (const auto& e : log.cases[ci].events) {
                const auto& m = spec.universality == Universality::universal
                                    ? e.universal_values
                                    : e.specific_values;
                auto it = m.find(spec.name);
                if (it != m.end()) values.push_back(it->second);
            }
        }
        fc.event_cat.push_back(Vocab::fit(values));
    }

    for (const auto& spec : ev_num) {
        std::vector<std::optional<double>> column;
        for (std::size_t ci : train_idx) {
            for (const auto& e : log.cases[ci].events) {
                auto it = e.numeric_values.find(spec.name);
                column.push_back(it == e.numeric_values.end() ? std::nullopt
                                                              : std::optional<double>(it->second));
            }
        }
        try {
            fc.event_num_median.push_back(impute_median(column).second);
        } catch (const std::exception&) {
            throw std::runtime_error("assemble: event attribute '" + spec.name +
                                     "' has no present value in the training split");
        }
    }

    for (const auto& spec : sq_cat) {
        std::vector<std::string> values;
        for (std::size_t ci : train_idx) {
            auto it = log.cases[ci].sequence_categorical.find(spec.name);
            if (it != log.cases[ci].sequence_categorical.end()) values.push_back(it->second);
        }
        fc.seq_cat.push_back(Vocab::fit(values));
    }

    for (const auto& spec : sq_num) {
        std::vector<std::optional<double>> column;
        for (std::size_t ci : train_idx) {
            auto it = log.cases[ci].sequence_numeric.find(spec.name);
            column.push_back(it == log.cases[ci].sequence_numeric.end()
                                 ? std::nullopt
                                 : std::optional<double>(it->second));
        }
        try {
            fc.seq_num_median.push_back(impute_median(column).second);
        } catch (const std::exception&) {
            throw std::runtime_error("assemble: sequence attribute '" + spec.name +
                                     "' has no present value in the training split");
        }
    }

    if (with_text) {
        std::vector<std::string> verbs, descs;
        for (std::size_t ci : train_idx) {
            for (const auto& e : log.cases[ci].events) {
                if (e.verb.empty())
                    throw std::runtime_error("assemble: variant T requires a relabeled log "
                                             "(case '" + log.cases[ci].case_id + "')");
                verbs.push_back(e.verb);
                fc.desc_slots = std::max(fc.desc_slots, e.descriptors.size());
                for (const auto& d : e.descriptors) descs.push_back(d);
            }
        }
        fc.verb = Vocab::fit(verbs);
        fc.desc = Vocab::fit(descs);
        if (fc.desc_slots == 0) fc.desc_slots = 1;
    }
    return fc;
}

}  // namespace

SplitDataset assemble(Variant variant, const EventLog& log, const EmbeddingInputs& embeddings,
                      const AssembleConfig& config, std::uint64_t split_seed) {
    if (log.cases.empty()) throw std::runtime_error("assemble: empty log");
    if (variant_uses_bin(variant) && embeddings.bin == nullptr)
        throw std::runtime_error("assemble: variant " + variant_name(variant) +
                                 " requires the duration-bin embedding matrix (bin_inputs)");
    if (variant_uses_cor(variant) && embeddings.cor == nullptr)
        throw std::runtime_error("assemble: variant " + variant_name(variant) +
                                 " requires the correlation embedding matrix (cor_inputs)");
    for (const EmbeddingMatrix* m : {embeddings.bin, embeddings.cor}) {
        if (m && m->n_rows != log.total_events())
            throw std::runtime_error("assemble: embedding matrix rows (" +
                                     std::to_string(m->n_rows) +
                                     ") do not match log events (" +
                                     std::to_string(log.total_events()) + ")");
    }
    for (const auto& c : log.cases)
        if (c.outcome < 0 || c.outcome >= log.n_classes())
            throw std::runtime_error("assemble: case '" + c.case_id + "' has no outcome");

    const auto ev_cat = log.event_attributes(AttrKind::categorical);
    const auto ev_num = log.event_attributes(AttrKind::numerical);
    const auto sq_cat = log.sequence_attributes(AttrKind::categorical);
    const auto sq_num = log.sequence_attributes(AttrKind::numerical);

    std::vector<std::int32_t> labels;
    labels.reserve(log.cases.size());
    for (const auto& c : log.cases) labels.push_back(c.outcome);
    auto [train_idx, val_idx] = stratified_split(labels, config.train_fraction, split_seed);

    FittedChannels fc = fit_channels(log, train_idx, ev_cat, ev_num, sq_cat, sq_num,
                                     variant_uses_text(variant));

    // Min-max statistics for numeric channels, training split only. The delta-t
    // channel (when present) is appended after the schema numerics.
    std::vector<double> ev_min(ev_num.size(), std::numeric_limits<double>::infinity());
    std::vector<double> ev_max(ev_num.size(), -std::numeric_limits<double>::infinity());
    double dt_min = std::numeric_limits<double>::infinity();
    double dt_max = -std::numeric_limits<double>::infinity();
    std::vector<double> sq_min(sq_num.size(), std::numeric_limits<double>::infinity());
    std::vector<double> sq_max(sq_num.size(), -std::numeric_limits<double>::infinity());
    for (std::size_t ci : train_idx) {
        const Case& c = log.cases[ci];
        for (const auto& e : c.events) {
            for (std::size_t a = 0; a < ev_num.size(); ++a) {
                auto it = e.numeric_values.find(ev_num[a].name);
                double v = it == e.numeric_values.end() ? fc.event_num_median[a] : it->second;
                ev_min[a] = std::min(ev_min[a], v);
                ev_max[a] = std::max(ev_max[a], v);
            }
        }
        if (variant_uses_delta_t(variant)) {
            for (std::int64_t dt : time_difference(c)) {
                dt_min = std::min(dt_min, static_cast<double>(dt));
                dt_max = std::max(dt_max, static_cast<double>(dt));
            }
        }
        for (std::size_t a = 0; a < sq_num.size(); ++a) {
            auto it = c.sequence_numeric.find(sq_num[a].name);
            double v = it == c.sequence_numeric.end() ? fc.seq_num_median[a] : it->second;
            sq_min[a] = std::min(sq_min[a], v);
            sq_max[a] = std::max(sq_max[a], v);
        }
    }
    if (variant_uses_delta_t(variant)) {
        ev_min.push_back(dt_min);
        ev_max.push_back(dt_max);
    }
    auto rescale = [](double v, double lo, double hi) {
        return hi > lo ? (v - lo) / (hi - lo) : 0.0;
    };

    // Timestep structure: simultaneity groups for M-B, raw events otherwise.
    std::vector<std::vector<std::vector<std::size_t>>> groups(log.cases.size());
    std::size_t max_steps = 0;
    std::size_t co_slots = 1;
    for (std::size_t ci = 0; ci < log.cases.size(); ++ci) {
        if (variant_uses_co_embed(variant)) {
            groups[ci] = detect_simultaneous(log.cases[ci]);
            max_steps = std::max(max_steps, groups[ci].size());
        } else {
            max_steps = std::max(max_steps, log.cases[ci].events.size());
        }
    }
    if (variant_uses_co_embed(variant)) {
        if (config.co_k_max > 0) {
            co_slots = config.co_k_max;
        } else {
            for (std::size_t ci : train_idx)
                for (const auto& g : groups[ci]) co_slots = std::max(co_slots, g.size());
        }
    }

    ChannelLayout layout;
    layout.event_cat_names.push_back("activity");
    layout.event_cat_vocab_sizes.push_back(fc.activity.size);
    layout.event_cat_tokens.push_back(fc.activity.tokens);
    for (std::size_t i = 0; i < ev_cat.size(); ++i) {
        layout.event_cat_names.push_back(ev_cat[i].name);
        layout.event_cat_vocab_sizes.push_back(fc.event_cat[i].size);
        layout.event_cat_tokens.push_back(fc.event_cat[i].tokens);
    }
    for (const auto& spec : ev_num) layout.event_num_names.push_back(spec.name);
    if (variant_uses_delta_t(variant)) layout.event_num_names.push_back("delta_t");
    for (std::size_t i = 0; i < sq_cat.size(); ++i) {
        layout.seq_cat_names.push_back(sq_cat[i].name);
        layout.seq_cat_vocab_sizes.push_back(fc.seq_cat[i].size);
        layout.seq_cat_tokens.push_back(fc.seq_cat[i].tokens);
    }
    for (const auto& spec : sq_num) layout.seq_num_names.push_back(spec.name);
    layout.co_slots = co_slots;
    if (variant_uses_text(variant)) {
        layout.verb_vocab_size = fc.verb.size;
        layout.desc_vocab_size = fc.desc.size;
        layout.verb_tokens = fc.verb.tokens;
        layout.desc_tokens = fc.desc.tokens;
        layout.desc_slots = fc.desc_slots;
    }

    const std::size_t n_cat = layout.event_cat_channels();
    const std::size_t n_num = layout.event_num_channels();

    auto encode_event_cats = [&](const Event& e, std::int32_t* out) {
        out[0] = fc.activity.encode(e.activity);
        for (std::size_t a = 0; a < ev_cat.size(); ++a) {
            const auto& m = ev_cat[a].universality == Universality::universal
                                ? e.universal_values
                                : e.specific_values;
            auto it = m.find(ev_cat[a].name);
            out[1 + a] = it == m.end() ? Vocab::no_desc_index
                                       : fc.event_cat[a].encode(it->second);
        }
    };
    auto encode_event_nums = [&](const Event& e, double* out) {
        for (std::size_t a = 0; a < ev_num.size(); ++a) {
            auto it = e.numeric_values.find(ev_num[a].name);
            double v = it == e.numeric_values.end() ? fc.event_num_median[a] : it->second;
            out[a] = rescale(v, ev_min[a], ev_max[a]);
        }
    };

    auto build = [&](const std::vector<std::size_t>& indices) {
        EncodedDataset ds;
        ds.variant = variant;
        ds.n_cases = indices.size();
        ds.max_steps = max_steps;
        ds.n_classes = log.n_classes();
        ds.layout = layout;
        ds.event_num_medians = fc.event_num_median;
        if (variant_uses_delta_t(variant)) ds.event_num_medians.push_back(0.0);
        ds.seq_num_medians = fc.seq_num_median;
        ds.event_num_min = ev_min;
        ds.event_num_max = ev_max;
        ds.seq_num_min = sq_min;
        ds.seq_num_max = sq_max;

        const std::size_t cat_w = co_slots * n_cat;
        const std::size_t num_w = co_slots * n_num;
        ds.event_cat.assign(ds.n_cases * max_steps * cat_w, Vocab::pad_index);
        ds.event_num.assign(ds.n_cases * max_steps * num_w, 0.0);
        ds.seq_cat.assign(ds.n_cases * layout.seq_cat_names.size(), Vocab::pad_index);
        ds.seq_num.assign(ds.n_cases * layout.seq_num_names.size(), 0.0);
        ds.mask.assign(ds.n_cases * max_steps, 0);
        if (variant_uses_bin(variant)) {
            ds.bin_width = embeddings.bin->n_cols();
            ds.bin_inputs.assign(ds.n_cases * max_steps * ds.bin_width, 0.0);
        }
        if (variant_uses_cor(variant)) {
            ds.cor_width = embeddings.cor->n_cols();
            ds.cor_inputs.assign(ds.n_cases * max_steps * ds.cor_width, 0.0);
        }
        if (variant_uses_text(variant)) {
            ds.verb_idx.assign(ds.n_cases * max_steps, Vocab::pad_index);
            ds.desc_idx.assign(ds.n_cases * max_steps * fc.desc_slots, Vocab::pad_index);
        }

        for (std::size_t row = 0; row < indices.size(); ++row) {
            std::size_t ci = indices[row];
            const Case& c = log.cases[ci];
            ds.labels.push_back(c.outcome);
            ds.case_ids.push_back(c.case_id);

            for (std::size_t s = 0; s < layout.seq_cat_names.size(); ++s) {
                auto it = c.sequence_categorical.find(layout.seq_cat_names[s]);
                ds.seq_cat[row * layout.seq_cat_names.size() + s] =
                    it == c.sequence_categorical.end() ? Vocab::no_desc_index
                                                       : fc.seq_cat[s].encode(it->second);
            }
            for (std::size_t s = 0; s < layout.seq_num_names.size(); ++s) {
                auto it = c.sequence_numeric.find(layout.seq_num_names[s]);
                double v = it == c.sequence_numeric.end() ? fc.seq_num_median[s] : it->second;
                ds.seq_num[row * layout.seq_num_names.size() + s] =
                    rescale(v, sq_min[s], sq_max[s]);
            }

            std::vector<std::int64_t> dt = time_difference(c);

            if (variant_uses_co_embed(variant)) {
                const auto& gs = groups[ci];
                for (std::size_t t = 0; t < gs.size(); ++t) {
                    if (gs[t].size() > co_slots)
                        throw std::runtime_error(
                            "assemble: simultaneity group of " + std::to_string(gs[t].size()) +
                            " events in case '" + c.case_id + "' requires k_max >= " +
                            std::to_string(gs[t].size()) + " (configured " +
                            std::to_string(co_slots) + ")");
                    ds.mask[row * max_steps + t] = 1;
                    for (std::size_t s = 0; s < gs[t].size(); ++s) {
                        const Event& e = c.events[gs[t][s]];
                        encode_event_cats(
                            e, ds.event_cat.data() + (row * max_steps + t) * cat_w + s * n_cat);
                        encode_event_nums(
                            e, ds.event_num.data() + (row * max_steps + t) * num_w + s * n_num);
                    }
                }
            } else {
                for (std::size_t t = 0; t < c.events.size(); ++t) {
                    const Event& e = c.events[t];
                    ds.mask[row * max_steps + t] = 1;
                    encode_event_cats(e,
                                      ds.event_cat.data() + (row * max_steps + t) * cat_w);
                    double* nums = ds.event_num.data() + (row * max_steps + t) * num_w;
                    encode_event_nums(e, nums);
                    if (variant_uses_delta_t(variant))
                        nums[ev_num.size()] = rescale(static_cast<double>(dt[t]),
                                                      ev_min[ev_num.size()],
                                                      ev_max[ev_num.size()]);

                    std::size_t global_row = 0;
                    if (embeddings.bin || embeddings.cor) {
                        const EmbeddingMatrix* any = embeddings.bin ? embeddings.bin
                                                                    : embeddings.cor;
                        global_row = any->case_offsets[ci] + t;
                    }
                    if (variant_uses_bin(variant)) {
                        const double* src = embeddings.bin->row(global_row);
                        std::copy(src, src + ds.bin_width,
                                  ds.bin_inputs.data() + (row * max_steps + t) * ds.bin_width);
                    }
                    if (variant_uses_cor(variant)) {
                        const double* src = embeddings.cor->row(global_row);
                        std::copy(src, src + ds.cor_width,
                                  ds.cor_inputs.data() + (row * max_steps + t) * ds.cor_width);
                    }
                    if (variant_uses_text(variant)) {
                        ds.verb_idx[row * max_steps + t] = fc.verb.encode(e.verb);
                        for (std::size_t k = 0; k < fc.desc_slots; ++k) {
                            std::int32_t idx = Vocab::no_desc_index;
                            if (k < e.descriptors.size()) idx = fc.desc.encode(e.descriptors[k]);
                            ds.desc_idx[(row * max_steps + t) * fc.desc_slots + k] = idx;
                        }
                    }
                }
            }
        }
        return ds;
    };

    SplitDataset out;
    out.train = build(train_idx);
    out.validation = build(val_idx);
    return out;
}

// ---------------------------------------------------------------------------
// Binary container

namespace {

constexpr char kMagic[] = "PBPMDS01";

template <typename T>
void write_block(std::ofstream& out, const std::vector<T>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
void read_block(std::ifstream& in, std::vector<T>& v, std::size_t count) {
    v.resize(count);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(count * sizeof(T)));
    if (!in) throw std::runtime_error("dataset container: truncated payload");
}

}  // namespace

void save_dataset(const EncodedDataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");

    json header;
    header["variant"] = variant_name(ds.variant);
    header["n_cases"] = ds.n_cases;
    header["max_steps"] = ds.max_steps;
    header["n_classes"] = ds.n_classes;
    header["bin_width"] = ds.bin_width;
    header["cor_width"] = ds.cor_width;
    header["labels"] = ds.labels;
    header["case_ids"] = ds.case_ids;
    header["event_num_medians"] = ds.event_num_medians;
    header["seq_num_medians"] = ds.seq_num_medians;
    header["event_num_min"] = ds.event_num_min;
    header["event_num_max"] = ds.event_num_max;
    header["seq_num_min"] = ds.seq_num_min;
    header["seq_num_max"] = ds.seq_num_max;
    json jl;
    jl["event_cat_names"] = ds.layout.event_cat_names;
    jl["event_cat_vocab_sizes"] = ds.layout.event_cat_vocab_sizes;
    jl["event_cat_tokens"] = ds.layout.event_cat_tokens;
    jl["event_num_names"] = ds.layout.event_num_names;
    jl["seq_cat_names"] = ds.layout.seq_cat_names;
    jl["seq_cat_vocab_sizes"] = ds.layout.seq_cat_vocab_sizes;
    jl["seq_cat_tokens"] = ds.layout.seq_cat_tokens;
    jl["seq_num_names"] = ds.layout.seq_num_names;
    jl["co_slots"] = ds.layout.co_slots;
    jl["verb_vocab_size"] = ds.layout.verb_vocab_size;
    jl["desc_vocab_size"] = ds.layout.desc_vocab_size;
    jl["verb_tokens"] = ds.layout.verb_tokens;
    jl["desc_tokens"] = ds.layout.desc_tokens;
    jl["desc_slots"] = ds.layout.desc_slots;
    header["layout"] = jl;

    std::string header_text = header.dump();
    std::uint64_t header_len = header_text.size();
    out.write(kMagic, 8);
    out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));

    write_block(out, ds.event_cat);
    write_block(out, ds.event_num);
    write_block(out, ds.seq_cat);
    write_block(out, ds.seq_num);
    write_block(out, ds.bin_inputs);
    write_block(out, ds.cor_inputs);
    write_block(out, ds.verb_idx);
    write_block(out, ds.desc_idx);
    write_block(out, ds.mask);
}

EncodedDataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    char magic[8];
    in.read(magic, 8);
    if (!in || std::string(magic, 8) != kMagic)
        throw std::runtime_error("'" + path + "' is not a pbpm dataset container");
    std::uint64_t header_len = 0;
    in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw std::runtime_error("'" + path + "': truncated header");
    json header = json::parse(header_text);

    EncodedDataset ds;
    ds.variant = variant_from_name(header.at("variant").get<std::string>());
    ds.n_cases = header.at("n_cases").get<std::size_t>();
    ds.max_steps = header.at("max_steps").get<std::size_t>();
    ds.n_classes = header.at("n_classes").get<int>();
    ds.bin_width = header.at("bin_width").get<std::size_t>();
    ds.cor_width = header.at("cor_width").get<std::size_t>();
    ds.labels = header.at("labels").get<std::vector<std::int32_t>>();
    ds.case_ids = header.at("case_ids").get<std::vector<std::string>>();
    ds.event_num_medians = header.at("event_num_medians").get<std::vector<double>>();
    ds.seq_num_medians = header.at("seq_num_medians").get<std::vector<double>>();
    ds.event_num_min = header.at("event_num_min").get<std::vector<double>>();
    ds.event_num_max = header.at("event_num_max").get<std::vector<double>>();
    ds.seq_num_min = header.at("seq_num_min").get<std::vector<double>>();
    ds.seq_num_max = header.at("seq_num_max").get<std::vector<double>>();
    const json& jl = header.at("layout");
    ds.layout.event_cat_names = jl.at("event_cat_names").get<std::vector<std::string>>();
    ds.layout.event_cat_vocab_sizes =
        jl.at("event_cat_vocab_sizes").get<std::vector<std::int32_t>>();
    ds.layout.event_cat_tokens =
        jl.at("event_cat_tokens").get<std::vector<std::vector<std::string>>>();
    ds.layout.event_num_names = jl.at("event_num_names").get<std::vector<std::string>>();
    ds.layout.seq_cat_names = jl.at("seq_cat_names").get<std::vector<std::string>>();
    ds.layout.seq_cat_vocab_sizes =
        jl.at("seq_cat_vocab_sizes").get<std::vector<std::int32_t>>();
    ds.layout.seq_cat_tokens =
        jl.at("seq_cat_tokens").get<std::vector<std::vector<std::string>>>();
    ds.layout.seq_num_names = jl.at("seq_num_names").get<std::vector<std::string>>();
    ds.layout.co_slots = jl.at("co_slots").get<std::size_t>();
    ds.layout.verb_vocab_size = jl.at("verb_vocab_size").get<std::int32_t>();
    ds.layout.desc_vocab_size = jl.at("desc_vocab_size").get<std::int32_t>();
    ds.layout.verb_tokens = jl.at("verb_tokens").get<std::vector<std::string>>();
    ds.layout.desc_tokens = jl.at("desc_tokens").get<std::vector<std::string>>();
    ds.layout.desc_slots = jl.at("desc_slots").get<std::size_t>();

    const std::size_t cat_w = ds.layout.co_slots * ds.layout.event_cat_channels();
    const std::size_t num_w = ds.layout.co_slots * ds.layout.event_num_channels();
    read_block(in, ds.event_cat, ds.n_cases * ds.max_steps * cat_w);
    read_block(in, ds.event_num, ds.n_cases * ds.max_steps * num_w);
    read_block(in, ds.seq_cat, ds.n_cases * ds.layout.seq_cat_names.size());
    read_block(in, ds.seq_num, ds.n_cases * ds.layout.seq_num_names.size());
    read_block(in, ds.bin_inputs, ds.n_cases * ds.max_steps * ds.bin_width);
    read_block(in, ds.cor_inputs, ds.n_cases * ds.max_steps * ds.cor_width);
    std::size_t text_steps = ds.layout.verb_vocab_size > 0 ? ds.n_cases * ds.max_steps : 0;
    read_block(in, ds.verb_idx, text_steps);
    read_block(in, ds.desc_idx, text_steps * ds.layout.desc_slots);
    read_block(in, ds.mask, ds.n_cases * ds.max_steps);
    return ds;
}

}  // namespace pbpm
