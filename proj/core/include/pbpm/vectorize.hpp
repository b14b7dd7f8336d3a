#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pbpm/event_log.hpp"
#include "pbpm/pseudo_embed.hpp"

namespace pbpm {

enum class Variant { B, FB, MB, D, FD, DC, T };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

bool variant_uses_bin(Variant v);      // D, FD, DC, T
bool variant_uses_cor(Variant v);      // DC, T
bool variant_uses_text(Variant v);     // T
bool variant_uses_delta_t(Variant v);  // FB, FD
bool variant_uses_co_embed(Variant v); // MB

/// Categorical vocabulary with reserved indices: 0 = padding, 1 = <NO_DESC> /
/// missing (embedding row frozen at zero), observed values from 2 in
/// first-seen order, UNK as the final index.
struct Vocab {
    static constexpr std::int32_t pad_index = 0;
    static constexpr std::int32_t no_desc_index = 1;

    std::map<std::string, std::int32_t> index;
    std::vector<std::string> tokens;  // first-seen order, aligned with indices 2..
    std::int32_t unk_index = 2;
    std::int32_t size = 3;

    static Vocab fit(const std::vector<std::string>& values);
    std::int32_t encode(const std::string& value) const;
};

std::vector<std::int32_t> encode_categorical(const std::vector<std::string>& values,
                                             const Vocab& vocab);

/// Fills missing entries with the lower median of the present values and
/// returns (filled column, median). Errors when no value is present.
std::pair<std::vector<double>, double> impute_median(
    const std::vector<std::optional<double>>& column);

/// Test-time variant: fill with a stored training median.
std::vector<double> fill_missing(const std::vector<std::optional<double>>& column, double median);

/// dt[0] = 0; dt[i] = start_i - start_{i-1} (seconds). Zero within
/// simultaneous blocks by construction.
std::vector<std::int64_t> time_difference(const Case& c);

struct CoEmbedConfig {
    std::size_t k_max = 1;
    std::size_t per_event_width = 0;
};

/// Concatenates group vectors in start-tie order and zero-pads to k_max
/// slots. Errors when the group exceeds k_max, reporting the required size.
std::vector<double> co_embed(const std::vector<std::vector<double>>& group,
                             const CoEmbedConfig& config);

struct ChannelLayout {
    std::vector<std::string> event_cat_names;  // activity first, then schema order
    std::vector<std::int32_t> event_cat_vocab_sizes;
    std::vector<std::vector<std::string>> event_cat_tokens;
    std::vector<std::string> event_num_names;  // "delta_t" appended for F variants
    std::vector<std::string> seq_cat_names;
    std::vector<std::int32_t> seq_cat_vocab_sizes;
    std::vector<std::vector<std::string>> seq_cat_tokens;
    std::vector<std::string> seq_num_names;
    std::size_t co_slots = 1;  // k_max for M-B, 1 otherwise
    std::int32_t verb_vocab_size = 0;
    std::int32_t desc_vocab_size = 0;
    std::vector<std::string> verb_tokens, desc_tokens;
    std::size_t desc_slots = 0;

    std::size_t event_cat_channels() const { return event_cat_names.size(); }
    std::size_t event_num_channels() const { return event_num_names.size(); }
    std::size_t event_slot_width() const {
        return event_cat_channels() + event_num_channels();
    }
};

/// Padded, masked, index-encoded tensors for one split, ready for a variant.
struct EncodedDataset {
    Variant variant = Variant::B;
    std::size_t n_cases = 0;
    std::size_t max_steps = 0;
    int n_classes = 0;
    ChannelLayout layout;

    std::vector<std::int32_t> event_cat;  // [n, T, co_slots * cat_channels]
    std::vector<double> event_num;        // [n, T, co_slots * num_channels]
    std::vector<std::int32_t> seq_cat;    // [n, seq_cat_channels]
    std::vector<double> seq_num;          // [n, seq_num_channels]
    std::size_t bin_width = 0;
    std::size_t cor_width = 0;
    std::vector<double> bin_inputs;       // [n, T, bin_width]
    std::vector<double> cor_inputs;       // [n, T, cor_width]
    std::vector<std::int32_t> verb_idx;   // [n, T]
    std::vector<std::int32_t> desc_idx;   // [n, T, desc_slots]
    std::vector<std::int32_t> labels;     // [n]
    std::vector<std::uint8_t> mask;       // [n, T]
    std::vector<double> event_num_medians;
    std::vector<double> seq_num_medians;
    // numeric channels are min-max scaled with training-split statistics
    std::vector<double> event_num_min, event_num_max;
    std::vector<double> seq_num_min, seq_num_max;
    std::vector<std::string> case_ids;

    std::size_t event_cat_width() const { return layout.co_slots * layout.event_cat_channels(); }
    std::size_t event_num_width() const { return layout.co_slots * layout.event_num_channels(); }
    bool mask_at(std::size_t c, std::size_t t) const { return mask[c * max_steps + t] != 0; }
};

struct EmbeddingInputs {
    const EmbeddingMatrix* bin = nullptr;
    const EmbeddingMatrix* cor = nullptr;
};

struct AssembleConfig {
    double train_fraction = 0.8;
    std::size_t co_k_max = 0;  // 0: use the largest group observed in the training split
};

struct SplitDataset {
    EncodedDataset train;
    EncodedDataset validation;
};

/// Stratified-by-outcome split, channel fitting on the training split only,
/// padding to a shared max length, per-variant channel assembly.
SplitDataset assemble(Variant variant, const EventLog& log, const EmbeddingInputs& embeddings,
                      const AssembleConfig& config, std::uint64_t split_seed);

/// Per-class split with train count max(1, floor(train_fraction * n_c)),
/// shuffled by the seed; returns (train indices, validation indices), each
/// sorted ascending.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const std::vector<std::int32_t>& labels, double train_fraction, std::uint64_t seed);

/// Binary container round-trip (dimension header + vocab tables + payload).
void save_dataset(const EncodedDataset& ds, const std::string& path);
EncodedDataset load_dataset(const std::string& path);

}  // namespace pbpm
