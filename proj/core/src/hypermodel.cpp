#include "pbpm/hypermodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "pbpm/nn/loss.hpp"

namespace pbpm {

using json = nlohmann::json;

namespace {

const char* activation_name(nn::Activation a) {
    switch (a) {
        case nn::Activation::identity: return "identity";
        case nn::Activation::relu: return "relu";
        case nn::Activation::leaky_relu: return "leaky_relu";
        case nn::Activation::tanh: return "tanh";
        case nn::Activation::softmax: return "softmax";
    }
    return "identity";
}

nn::Activation activation_from_name(const std::string& s) {
    if (s == "identity") return nn::Activation::identity;
    if (s == "relu") return nn::Activation::relu;
    if (s == "leaky_relu") return nn::Activation::leaky_relu;
    if (s == "tanh") return nn::Activation::tanh;
    if (s == "softmax") return nn::Activation::softmax;
    throw std::invalid_argument("unknown activation '" + s + "'");
}

json lstm_stack_to_json(const std::vector<LstmLayerSpec>& stack) {
    json arr = json::array();
    for (const auto& l : stack)
        arr.push_back({{"units", l.units},
                       {"l2", l.l2},
                       {"batch_norm", l.batch_norm},
                       {"bn_momentum", l.bn_momentum},
                       {"bn_epsilon", l.bn_epsilon},
                       {"dropout", l.dropout},
                       {"dropout_rate", l.dropout_rate}});
    return arr;
}

std::vector<LstmLayerSpec> lstm_stack_from_json(const json& arr) {
    std::vector<LstmLayerSpec> out;
    for (const auto& j : arr) {
        LstmLayerSpec l;
        l.units = j.at("units").get<std::size_t>();
        l.l2 = j.at("l2").get<double>();
        l.batch_norm = j.at("batch_norm").get<bool>();
        l.bn_momentum = j.at("bn_momentum").get<double>();
        l.bn_epsilon = j.at("bn_epsilon").get<double>();
        l.dropout = j.at("dropout").get<bool>();
        l.dropout_rate = j.at("dropout_rate").get<double>();
        out.push_back(l);
    }
    return out;
}

}  // namespace

std::string hyperparams_to_json(const HyperParams& hp) {
    json j;
    j["event_stack"] = lstm_stack_to_json(hp.event_stack);
    j["bin_stack"] = lstm_stack_to_json(hp.bin_stack);
    j["cor_stack"] = lstm_stack_to_json(hp.cor_stack);
    j["text_stack"] = lstm_stack_to_json(hp.text_stack);
    j["fusion_stack"] = lstm_stack_to_json(hp.fusion_stack);
    json dense = json::array();
    for (const auto& d : hp.dense_stack)
        dense.push_back({{"units", d.units},
                         {"l2", d.l2},
                         {"dropout", d.dropout},
                         {"dropout_rate", d.dropout_rate},
                         {"activation", activation_name(d.activation)},
                         {"leaky_alpha", d.leaky_alpha}});
    j["dense_stack"] = dense;
    j["schedule"] = {{"kind", nn::schedule_kind_name(hp.schedule.kind)},
                     {"initial_lr", hp.schedule.initial_lr},
                     {"decay_rate", hp.schedule.decay_rate},
                     {"decay_steps", hp.schedule.decay_steps},
                     {"boundaries", hp.schedule.boundaries},
                     {"values", hp.schedule.values},
                     {"power", hp.schedule.power},
                     {"end_lr", hp.schedule.end_lr},
                     {"total_steps", hp.schedule.total_steps}};
    const auto& o = hp.optimizer;
    j["optimizer"] = {
        {"kind", o.kind == nn::OptimizerKind::adam
                     ? "adam"
                     : (o.kind == nn::OptimizerKind::sgd ? "sgd" : "rmsprop")},
        {"adam_beta1", o.adam_beta1},   {"adam_beta2", o.adam_beta2},
        {"adam_epsilon", o.adam_epsilon}, {"sgd_momentum", o.sgd_momentum},
        {"rms_alpha", o.rms_alpha},     {"rms_momentum", o.rms_momentum},
        {"rms_epsilon", o.rms_epsilon}};
    j["verb_embed_dim"] = hp.verb_embed_dim;
    j["desc_embed_dim"] = hp.desc_embed_dim;
    j["batch_size"] = hp.batch_size;
    return j.dump();
}

HyperParams hyperparams_from_json(const std::string& text) {
    json j = json::parse(text);
    HyperParams hp;
    hp.event_stack = lstm_stack_from_json(j.at("event_stack"));
    hp.bin_stack = lstm_stack_from_json(j.at("bin_stack"));
    hp.cor_stack = lstm_stack_from_json(j.at("cor_stack"));
    hp.text_stack = lstm_stack_from_json(j.at("text_stack"));
    hp.fusion_stack = lstm_stack_from_json(j.at("fusion_stack"));
    for (const auto& d : j.at("dense_stack")) {
        DenseLayerSpec spec;
        spec.units = d.at("units").get<std::size_t>();
        spec.l2 = d.at("l2").get<double>();
        spec.dropout = d.at("dropout").get<bool>();
        spec.dropout_rate = d.at("dropout_rate").get<double>();
        spec.activation = activation_from_name(d.at("activation").get<std::string>());
        spec.leaky_alpha = d.at("leaky_alpha").get<double>();
        hp.dense_stack.push_back(spec);
    }
    const json& s = j.at("schedule");
    hp.schedule.kind = nn::schedule_kind_from_name(s.at("kind").get<std::string>());
    hp.schedule.initial_lr = s.at("initial_lr").get<double>();
    hp.schedule.decay_rate = s.at("decay_rate").get<double>();
    hp.schedule.decay_steps = s.at("decay_steps").get<double>();
    hp.schedule.boundaries = s.at("boundaries").get<std::vector<double>>();
    hp.schedule.values = s.at("values").get<std::vector<double>>();
    hp.schedule.power = s.at("power").get<double>();
    hp.schedule.end_lr = s.at("end_lr").get<double>();
    hp.schedule.total_steps = s.at("total_steps").get<double>();
    const json& o = j.at("optimizer");
    std::string kind = o.at("kind").get<std::string>();
    hp.optimizer.kind = kind == "adam" ? nn::OptimizerKind::adam
                        : kind == "sgd" ? nn::OptimizerKind::sgd
                                        : nn::OptimizerKind::rmsprop;
    hp.optimizer.adam_beta1 = o.at("adam_beta1").get<double>();
    hp.optimizer.adam_beta2 = o.at("adam_beta2").get<double>();
    hp.optimizer.adam_epsilon = o.at("adam_epsilon").get<double>();
    hp.optimizer.sgd_momentum = o.at("sgd_momentum").get<double>();
    hp.optimizer.rms_alpha = o.at("rms_alpha").get<double>();
    hp.optimizer.rms_momentum = o.at("rms_momentum").get<double>();
    hp.optimizer.rms_epsilon = o.at("rms_epsilon").get<double>();
    hp.verb_embed_dim = j.at("verb_embed_dim").get<std::size_t>();
    hp.desc_embed_dim = j.at("desc_embed_dim").get<std::size_t>();
    hp.batch_size = j.at("batch_size").get<std::size_t>();
    return hp;
}

std::uint64_t hyperparams_digest(const HyperParams& hp) {
    std::string text = hyperparams_to_json(hp);
    std::uint64_t h = 14695981039346656037ull;  // FNV-1a 64
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

DatasetMeta DatasetMeta::from(const EncodedDataset& ds) {
    DatasetMeta m;
    m.variant = ds.variant;
    m.layout = ds.layout;
    m.max_steps = ds.max_steps;
    m.bin_width = ds.bin_width;
    m.cor_width = ds.cor_width;
    m.n_classes = ds.n_classes;
    return m;
}

std::size_t DatasetMeta::event_input_width() const {
    std::size_t per_slot = 0;
    for (std::int32_t v : layout.event_cat_vocab_sizes) per_slot += static_cast<std::size_t>(v);
    per_slot += layout.event_num_channels();
    return layout.co_slots * per_slot;
}

std::size_t DatasetMeta::seq_input_width() const {
    std::size_t w = 0;
    for (std::int32_t v : layout.seq_cat_vocab_sizes) w += static_cast<std::size_t>(v);
    return w + layout.seq_num_names.size();
}

std::string dataset_meta_to_json(const DatasetMeta& meta) {
    json j;
    j["variant"] = variant_name(meta.variant);
    j["max_steps"] = meta.max_steps;
    j["bin_width"] = meta.bin_width;
    j["cor_width"] = meta.cor_width;
    j["n_classes"] = meta.n_classes;
    const ChannelLayout& l = meta.layout;
    j["layout"] = {{"event_cat_names", l.event_cat_names},
                   {"event_cat_vocab_sizes", l.event_cat_vocab_sizes},
                   {"event_cat_tokens", l.event_cat_tokens},
                   {"event_num_names", l.event_num_names},
                   {"seq_cat_names", l.seq_cat_names},
                   {"seq_cat_vocab_sizes", l.seq_cat_vocab_sizes},
                   {"seq_cat_tokens", l.seq_cat_tokens},
                   {"seq_num_names", l.seq_num_names},
                   {"co_slots", l.co_slots},
                   {"verb_vocab_size", l.verb_vocab_size},
                   {"desc_vocab_size", l.desc_vocab_size},
                   {"verb_tokens", l.verb_tokens},
                   {"desc_tokens", l.desc_tokens},
                   {"desc_slots", l.desc_slots}};
    return j.dump();
}

DatasetMeta dataset_meta_from_json(const std::string& text) {
    json j = json::parse(text);
    DatasetMeta m;
    m.variant = variant_from_name(j.at("variant").get<std::string>());
    m.max_steps = j.at("max_steps").get<std::size_t>();
    m.bin_width = j.at("bin_width").get<std::size_t>();
    m.cor_width = j.at("cor_width").get<std::size_t>();
    m.n_classes = j.at("n_classes").get<int>();
    const json& l = j.at("layout");
    m.layout.event_cat_names = l.at("event_cat_names").get<std::vector<std::string>>();
    m.layout.event_cat_vocab_sizes =
        l.at("event_cat_vocab_sizes").get<std::vector<std::int32_t>>();
    m.layout.event_cat_tokens =
        l.at("event_cat_tokens").get<std::vector<std::vector<std::string>>>();
    m.layout.event_num_names = l.at("event_num_names").get<std::vector<std::string>>();
    m.layout.seq_cat_names = l.at("seq_cat_names").get<std::vector<std::string>>();
    m.layout.seq_cat_vocab_sizes =
        l.at("seq_cat_vocab_sizes").get<std::vector<std::int32_t>>();
    m.layout.seq_cat_tokens =
        l.at("seq_cat_tokens").get<std::vector<std::vector<std::string>>>();
    m.layout.seq_num_names = l.at("seq_num_names").get<std::vector<std::string>>();
    m.layout.co_slots = l.at("co_slots").get<std::size_t>();
    m.layout.verb_vocab_size = l.at("verb_vocab_size").get<std::int32_t>();
    m.layout.desc_vocab_size = l.at("desc_vocab_size").get<std::int32_t>();
    m.layout.verb_tokens = l.at("verb_tokens").get<std::vector<std::string>>();
    m.layout.desc_tokens = l.at("desc_tokens").get<std::vector<std::string>>();
    m.layout.desc_slots = l.at("desc_slots").get<std::size_t>();
    return m;
}

// ---------------------------------------------------------------------------
// Model graph

HyperModel::HyperModel(const HyperParams& hp, const DatasetMeta& meta, std::uint64_t seed)
    : hp_(hp), meta_(meta), seed_(seed), dropout_rng_(seed ^ 0x9e3779b97f4a7c15ull) {
    const Variant v = meta.variant;
    if (variant_uses_bin(v) && meta.bin_width == 0)
        throw std::runtime_error("variant " + variant_name(v) +
                                 " requires bin_inputs (duration pseudo-embedding)");
    if (variant_uses_cor(v) && meta.cor_width == 0)
        throw std::runtime_error("variant " + variant_name(v) +
                                 " requires cor_inputs (correlation pseudo-embedding)");
    if (variant_uses_text(v) && meta.layout.verb_vocab_size == 0)
        throw std::runtime_error("variant T requires verb/descriptor text inputs");
    if (hp.event_stack.empty()) throw std::runtime_error("event stack must have >= 1 layer");
    fused_ = variant_uses_bin(v);
    if (fused_ && hp.fusion_stack.empty())
        throw std::runtime_error("variant " + variant_name(v) +
                                 " requires a fusion stack (>= 1 layer)");
    if (fused_ && hp.bin_stack.empty())
        throw std::runtime_error("variant " + variant_name(v) + " requires a bin stack");
    if (variant_uses_cor(v) && hp.cor_stack.empty())
        throw std::runtime_error("variant " + variant_name(v) + " requires a cor stack");
    if (variant_uses_text(v) &&
        (hp.text_stack.empty() || hp.verb_embed_dim == 0 || hp.desc_embed_dim == 0))
        throw std::runtime_error("variant T requires a text stack and embedding dims");

    std::mt19937_64 rng(seed);
    event_stack_ = make_stack(hp.event_stack, meta.event_input_width(), rng);
    std::size_t event_out = hp.event_stack.back().units;

    std::size_t fused_in = 0;
    if (variant_uses_text(v)) {
        verb_emb_ = std::make_unique<nn::Embedding>(
            static_cast<std::size_t>(meta.layout.verb_vocab_size), hp.verb_embed_dim, rng);
        desc_emb_ = std::make_unique<nn::Embedding>(
            static_cast<std::size_t>(meta.layout.desc_vocab_size), hp.desc_embed_dim, rng);
        std::size_t text_in = hp.verb_embed_dim + meta.layout.desc_slots * hp.desc_embed_dim;
        text_stack_ = make_stack(hp.text_stack, text_in, rng);
        fused_in += hp.text_stack.back().units;
    }
    if (fused_) {
        fused_in += event_out;
        bin_stack_ = make_stack(hp.bin_stack, meta.bin_width, rng);
        fused_in += hp.bin_stack.back().units;
        if (variant_uses_cor(v)) {
            cor_stack_ = make_stack(hp.cor_stack, meta.cor_width, rng);
            fused_in += hp.cor_stack.back().units;
        }
        fusion_stack_ = make_stack(hp.fusion_stack, fused_in, rng);
        fusion_out_width_ = hp.fusion_stack.back().units;
    } else {
        fusion_out_width_ = event_out;
    }

    z_width_ = fusion_out_width_ + meta.seq_input_width();
    std::size_t in = z_width_;
    for (const auto& spec : hp.dense_stack) {
        DenseBlock block;
        block.dense = std::make_unique<nn::Dense>(in, spec.units, spec.activation,
                                                  spec.leaky_alpha, spec.l2, rng);
        if (spec.dropout) block.drop.emplace(spec.dropout_rate);
        in = spec.units;
        dense_stack_.push_back(std::move(block));
    }
    output_layer_ = std::make_unique<nn::Dense>(in, static_cast<std::size_t>(meta.n_classes),
                                                nn::Activation::identity, 0.0, 0.0, rng);
}

HyperModel::Stack HyperModel::make_stack(const std::vector<LstmLayerSpec>& specs,
                                         std::size_t input_width, std::mt19937_64& rng) {
    Stack stack;
    std::size_t in = input_width;
    for (const auto& spec : specs) {
        LstmBlock block;
        block.lstm = std::make_unique<nn::Lstm>(in, spec.units, spec.l2, rng);
        if (spec.batch_norm) block.bn.emplace(spec.units, spec.bn_momentum, spec.bn_epsilon);
        if (spec.dropout) block.drop.emplace(spec.dropout_rate);
        in = spec.units;
        stack.push_back(std::move(block));
    }
    return stack;
}

Tensor HyperModel::run_stack(Stack& stack, Tensor x, const std::vector<std::uint8_t>& mask,
                             nn::Mode mode) {
    for (auto& block : stack) {
        Tensor h = block.lstm->forward(x, mask);
        block.batch = h.dim(0);
        block.steps = h.dim(1);
        const std::size_t units = h.dim(2);
        if (block.bn) {
            h.reshape({block.batch * block.steps, units});
            h = block.bn->forward(h, mode, &mask);
        }
        if (block.drop) {
            if (h.rank() == 3) h.reshape({block.batch * block.steps, units});
            h = block.drop->forward(h, mode, dropout_rng_);
        }
        h.reshape({block.batch, block.steps, units});
        x = std::move(h);
    }
    return x;
}

Tensor HyperModel::back_stack(Stack& stack, Tensor dh) {
    for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
        LstmBlock& block = *it;
        const std::size_t units = dh.dim(2);
        if (block.drop) {
            dh.reshape({block.batch * block.steps, units});
            dh = block.drop->backward(dh);
        }
        if (block.bn) {
            if (dh.rank() == 3) dh.reshape({block.batch * block.steps, units});
            dh = block.bn->backward(dh);
        }
        dh.reshape({block.batch, block.steps, units});
        dh = block.lstm->backward(dh);
    }
    return dh;
}

void HyperModel::collect_stack_params(Stack& stack, const std::string& prefix,
                                      std::vector<nn::Param>& out) {
    for (std::size_t i = 0; i < stack.size(); ++i) {
        std::string name = prefix + "." + std::to_string(i);
        stack[i].lstm->collect_params(name, out);
        if (stack[i].bn) stack[i].bn->collect_params(name + ".bn", out);
    }
}

Tensor HyperModel::build_event_input(const EncodedDataset& ds,
                                     std::span<const std::size_t> batch) const {
    const ChannelLayout& l = ds.layout;
    const std::size_t T = steps_used_;
    const std::size_t stride = ds.max_steps;
    const std::size_t n_cat = l.event_cat_channels();
    const std::size_t n_num = l.event_num_channels();
    std::size_t per_slot = 0;
    for (std::int32_t v : l.event_cat_vocab_sizes) per_slot += static_cast<std::size_t>(v);
    per_slot += n_num;
    const std::size_t width = l.co_slots * per_slot;

    Tensor x({batch.size(), T, width});
    for (std::size_t b = 0; b < batch.size(); ++b) {
        std::size_t row = batch[b];
        for (std::size_t t = 0; t < T; ++t) {
            double* dst = x.data() + (b * T + t) * width;
            const std::int32_t* cats =
                ds.event_cat.data() + (row * stride + t) * l.co_slots * n_cat;
            const double* nums = ds.event_num.data() + (row * stride + t) * l.co_slots * n_num;
            for (std::size_t s = 0; s < l.co_slots; ++s) {
                double* slot = dst + s * per_slot;
                std::size_t off = 0;
                for (std::size_t c = 0; c < n_cat; ++c) {
                    std::int32_t idx = cats[s * n_cat + c];
                    // reserved rows 0 (padding) and 1 (<NO_DESC>) stay all-zero
                    if (idx >= 2) slot[off + static_cast<std::size_t>(idx)] = 1.0;
                    off += static_cast<std::size_t>(l.event_cat_vocab_sizes[c]);
                }
                for (std::size_t c = 0; c < n_num; ++c) slot[off + c] = nums[s * n_num + c];
            }
        }
    }
    return x;
}

Tensor HyperModel::build_seq_input(const EncodedDataset& ds,
                                   std::span<const std::size_t> batch) const {
    const ChannelLayout& l = ds.layout;
    const std::size_t n_cat = l.seq_cat_names.size();
    const std::size_t n_num = l.seq_num_names.size();
    std::size_t width = n_num;
    for (std::int32_t v : l.seq_cat_vocab_sizes) width += static_cast<std::size_t>(v);

    Tensor x({batch.size(), width});
    for (std::size_t b = 0; b < batch.size(); ++b) {
        std::size_t row = batch[b];
        double* dst = x.data() + b * width;
        std::size_t off = 0;
        for (std::size_t c = 0; c < n_cat; ++c) {
            std::int32_t idx = ds.seq_cat[row * n_cat + c];
            if (idx >= 2) dst[off + static_cast<std::size_t>(idx)] = 1.0;
            off += static_cast<std::size_t>(l.seq_cat_vocab_sizes[c]);
        }
        for (std::size_t c = 0; c < n_num; ++c) dst[off + c] = ds.seq_num[row * n_num + c];
    }
    return x;
}

Tensor HyperModel::slice_channel(const std::vector<double>& data, std::size_t width,
                                 const EncodedDataset& ds,
                                 std::span<const std::size_t> batch) const {
    const std::size_t T = steps_used_;
    Tensor x({batch.size(), T, width});
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const double* src = data.data() + batch[b] * ds.max_steps * width;
        std::copy(src, src + T * width, x.data() + b * T * width);
    }
    return x;
}

Tensor HyperModel::build_text_input(const EncodedDataset& ds,
                                    std::span<const std::size_t> batch) {
    const std::size_t T = steps_used_;
    const std::size_t stride = ds.max_steps;
    const std::size_t k = ds.layout.desc_slots;
    std::vector<std::int32_t> verb_flat(batch.size() * T);
    std::vector<std::int32_t> desc_flat(batch.size() * T * k);
    for (std::size_t b = 0; b < batch.size(); ++b) {
        std::size_t row = batch[b];
        std::copy(ds.verb_idx.begin() + static_cast<std::ptrdiff_t>(row * stride),
                  ds.verb_idx.begin() + static_cast<std::ptrdiff_t>(row * stride + T),
                  verb_flat.begin() + static_cast<std::ptrdiff_t>(b * T));
        std::copy(ds.desc_idx.begin() + static_cast<std::ptrdiff_t>(row * stride * k),
                  ds.desc_idx.begin() + static_cast<std::ptrdiff_t>((row * stride + T) * k),
                  desc_flat.begin() + static_cast<std::ptrdiff_t>(b * T * k));
    }
    Tensor verb_vecs = verb_emb_->forward(verb_flat);               // [B*T, dv]
    Tensor desc_vecs = desc_emb_->forward(desc_flat);               // [B*T*k, dd]
    const std::size_t dv = verb_emb_->dim(), dd = desc_emb_->dim();
    const std::size_t width = dv + k * dd;
    Tensor x({batch.size(), T, width});
    for (std::size_t n = 0; n < batch.size() * T; ++n) {
        double* dst = x.data() + n * width;
        std::copy(verb_vecs.data() + n * dv, verb_vecs.data() + (n + 1) * dv, dst);
        for (std::size_t s = 0; s < k; ++s)
            std::copy(desc_vecs.data() + (n * k + s) * dd,
                      desc_vecs.data() + (n * k + s + 1) * dd, dst + dv + s * dd);
    }
    return x;
}

Tensor HyperModel::back_text_input(const Tensor& dx) {
    const std::size_t dv = verb_emb_->dim(), dd = desc_emb_->dim();
    const std::size_t k = meta_.layout.desc_slots;
    const std::size_t width = dv + k * dd;
    const std::size_t n_rows = dx.size() / width;
    Tensor dverb({n_rows, dv});
    Tensor ddesc({n_rows * k, dd});
    for (std::size_t n = 0; n < n_rows; ++n) {
        const double* src = dx.data() + n * width;
        std::copy(src, src + dv, dverb.data() + n * dv);
        for (std::size_t s = 0; s < k; ++s)
            std::copy(src + dv + s * dd, src + dv + (s + 1) * dd,
                      ddesc.data() + (n * k + s) * dd);
    }
    verb_emb_->backward(dverb);
    desc_emb_->backward(ddesc);
    return {};
}

namespace {

Tensor concat_time(const std::vector<const Tensor*>& parts, std::vector<std::size_t>& widths) {
    widths.clear();
    const std::size_t b = parts.front()->dim(0), t = parts.front()->dim(1);
    std::size_t total = 0;
    for (const Tensor* p : parts) {
        widths.push_back(p->dim(2));
        total += p->dim(2);
    }
    Tensor out({b, t, total});
    for (std::size_t n = 0; n < b * t; ++n) {
        double* dst = out.data() + n * total;
        for (std::size_t pi = 0; pi < parts.size(); ++pi) {
            const Tensor& p = *parts[pi];
            const std::size_t w = widths[pi];
            std::copy(p.data() + n * w, p.data() + (n + 1) * w, dst);
            dst += w;
        }
    }
    return out;
}

std::vector<Tensor> split_time(const Tensor& d, const std::vector<std::size_t>& widths) {
    const std::size_t b = d.dim(0), t = d.dim(1);
    std::vector<Tensor> parts;
    std::size_t total = d.dim(2);
    for (std::size_t w : widths) parts.emplace_back(std::vector<std::size_t>{b, t, w});
    for (std::size_t n = 0; n < b * t; ++n) {
        const double* src = d.data() + n * total;
        for (std::size_t pi = 0; pi < widths.size(); ++pi) {
            std::copy(src, src + widths[pi], parts[pi].data() + n * widths[pi]);
            src += widths[pi];
        }
    }
    return parts;
}

}  // namespace

Tensor HyperModel::forward(const EncodedDataset& ds, std::span<const std::size_t> batch,
                           nn::Mode mode) {
    const std::size_t T = ds.max_steps;
    cur_batch_ = batch.size();
    last_step_.assign(batch.size(), 0);
    for (std::size_t b = 0; b < batch.size(); ++b) {
        bool any = false;
        for (std::size_t t = 0; t < T; ++t) {
            if (ds.mask[batch[b] * T + t]) {
                last_step_[b] = t;
                any = true;
            }
        }
        if (!any)
            throw std::runtime_error("forward: case '" + ds.case_ids[batch[b]] +
                                     "' has no unmasked timestep");
    }
    // trailing all-padding steps are pure pass-through; skip them
    steps_used_ = 0;
    for (std::size_t b = 0; b < batch.size(); ++b)
        steps_used_ = std::max(steps_used_, last_step_[b] + 1);
    mask_flat_.assign(batch.size() * steps_used_, 0);
    for (std::size_t b = 0; b < batch.size(); ++b)
        for (std::size_t t = 0; t < steps_used_; ++t)
            mask_flat_[b * steps_used_ + t] = ds.mask[batch[b] * T + t];

    Tensor h_event = run_stack(event_stack_, build_event_input(ds, batch), mask_flat_, mode);

    Tensor h_final;  // [B,T,U_final]
    if (fused_) {
        Tensor h_text, h_bin, h_cor;
        std::vector<const Tensor*> parts;
        if (variant_uses_text(meta_.variant)) {
            h_text = run_stack(text_stack_, build_text_input(ds, batch), mask_flat_, mode);
            parts.push_back(&h_text);
        }
        parts.push_back(&h_event);
        h_bin = run_stack(bin_stack_, slice_channel(ds.bin_inputs, ds.bin_width, ds, batch),
                          mask_flat_, mode);
        parts.push_back(&h_bin);
        if (variant_uses_cor(meta_.variant)) {
            h_cor = run_stack(cor_stack_, slice_channel(ds.cor_inputs, ds.cor_width, ds, batch),
                              mask_flat_, mode);
            parts.push_back(&h_cor);
        }
        Tensor psi = concat_time(parts, psi_widths_);
        h_final = run_stack(fusion_stack_, std::move(psi), mask_flat_, mode);
    } else {
        h_final = std::move(h_event);
    }

    // v_S'_j: hidden vector at the last unmasked step.
    const std::size_t u = h_final.dim(2);
    Tensor v_seq({batch.size(), u});
    for (std::size_t b = 0; b < batch.size(); ++b)
        for (std::size_t j = 0; j < u; ++j) v_seq(b, j) = h_final(b, last_step_[b], j);

    Tensor seq_in = build_seq_input(ds, batch);
    Tensor z({batch.size(), z_width_});
    for (std::size_t b = 0; b < batch.size(); ++b) {
        std::copy(v_seq.data() + b * u, v_seq.data() + (b + 1) * u, z.data() + b * z_width_);
        std::copy(seq_in.data() + b * seq_in.dim(1), seq_in.data() + (b + 1) * seq_in.dim(1),
                  z.data() + b * z_width_ + u);
    }

    Tensor h = std::move(z);
    for (auto& block : dense_stack_) {
        h = block.dense->forward(h);
        if (block.drop) h = block.drop->forward(h, mode, dropout_rng_);
    }
    return output_layer_->forward(h);
}

double HyperModel::loss_and_grad(const EncodedDataset& ds, std::span<const std::size_t> batch,
                                 std::span<const double> class_weights, nn::Mode mode) {
    zero_grad();
    Tensor logits = forward(ds, batch, mode);

    std::vector<std::int32_t> labels(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) labels[b] = ds.labels[batch[b]];

    Tensor dlogits;
    double loss = nn::softmax_cross_entropy(logits, labels, class_weights, &dlogits);
    loss += l2_penalty();

    Tensor d = output_layer_->backward(dlogits);
    for (auto it = dense_stack_.rbegin(); it != dense_stack_.rend(); ++it) {
        if (it->drop) d = it->drop->backward(d);
        d = it->dense->backward(d);
    }

    // split dZ: fusion part scattered to last steps, sequence-input part ends here
    const std::size_t u = fusion_out_width_;
    const std::size_t T = steps_used_;
    Tensor dh_final({cur_batch_, T, u});
    for (std::size_t b = 0; b < cur_batch_; ++b)
        for (std::size_t j = 0; j < u; ++j) dh_final(b, last_step_[b], j) = d(b, j);

    if (fused_) {
        Tensor dpsi = back_stack(fusion_stack_, std::move(dh_final));
        std::vector<Tensor> parts = split_time(dpsi, psi_widths_);
        std::size_t pi = 0;
        if (variant_uses_text(meta_.variant)) {
            Tensor dxt = back_stack(text_stack_, std::move(parts[pi++]));
            back_text_input(dxt);
        }
        back_stack(event_stack_, std::move(parts[pi++]));
        back_stack(bin_stack_, std::move(parts[pi++]));
        if (variant_uses_cor(meta_.variant)) back_stack(cor_stack_, std::move(parts[pi++]));
    } else {
        back_stack(event_stack_, std::move(dh_final));
    }

    // exact L2 gradient 2*lambda*theta per declared group
    for (nn::Param& p : params()) {
        if (p.l2 == 0.0) continue;
        for (std::size_t i = 0; i < p.value->size(); ++i)
            (*p.grad)[i] += 2.0 * p.l2 * (*p.value)[i];
    }
    return loss;
}

double HyperModel::l2_penalty() const {
    double penalty = 0.0;
    auto* self = const_cast<HyperModel*>(this);
    for (nn::Param& p : self->params()) {
        if (p.l2 == 0.0) continue;
        double sq = 0.0;
        for (std::size_t i = 0; i < p.value->size(); ++i) sq += (*p.value)[i] * (*p.value)[i];
        penalty += p.l2 * sq;
    }
    return penalty;
}

std::vector<nn::Param> HyperModel::params() {
    std::vector<nn::Param> out;
    collect_stack_params(event_stack_, "event", out);
    collect_stack_params(bin_stack_, "bin", out);
    collect_stack_params(cor_stack_, "cor", out);
    collect_stack_params(text_stack_, "text", out);
    collect_stack_params(fusion_stack_, "fusion", out);
    if (verb_emb_) verb_emb_->collect_params("verb_emb", out);
    if (desc_emb_) desc_emb_->collect_params("desc_emb", out);
    for (std::size_t i = 0; i < dense_stack_.size(); ++i)
        dense_stack_[i].dense->collect_params("dense." + std::to_string(i), out);
    output_layer_->collect_params("output", out);
    return out;
}

std::vector<std::pair<std::string, Tensor*>> HyperModel::state_tensors() {
    std::vector<std::pair<std::string, Tensor*>> out;
    for (nn::Param& p : params()) out.emplace_back(p.name, p.value);
    auto add_bn = [&](Stack& stack, const std::string& prefix) {
        for (std::size_t i = 0; i < stack.size(); ++i) {
            if (!stack[i].bn) continue;
            std::string name = prefix + "." + std::to_string(i) + ".bn";
            out.emplace_back(name + ".running_mean", &stack[i].bn->running_mean());
            out.emplace_back(name + ".running_var", &stack[i].bn->running_var());
        }
    };
    add_bn(event_stack_, "event");
    add_bn(bin_stack_, "bin");
    add_bn(cor_stack_, "cor");
    add_bn(text_stack_, "text");
    add_bn(fusion_stack_, "fusion");
    return out;
}

void HyperModel::zero_grad() {
    auto zero_stack = [](Stack& stack) {
        for (auto& b : stack) {
            b.lstm->zero_grad();
            if (b.bn) b.bn->zero_grad();
        }
    };
    zero_stack(event_stack_);
    zero_stack(bin_stack_);
    zero_stack(cor_stack_);
    zero_stack(text_stack_);
    zero_stack(fusion_stack_);
    if (verb_emb_) verb_emb_->zero_grad();
    if (desc_emb_) desc_emb_->zero_grad();
    for (auto& b : dense_stack_) b.dense->zero_grad();
    output_layer_->zero_grad();
}

Tensor HyperModel::predict_probabilities(const EncodedDataset& ds) {
    const std::size_t chunk = 256;
    Tensor probs({ds.n_cases, static_cast<std::size_t>(meta_.n_classes)});
    std::vector<std::size_t> batch;
    for (std::size_t start = 0; start < ds.n_cases; start += chunk) {
        batch.clear();
        for (std::size_t i = start; i < std::min(ds.n_cases, start + chunk); ++i)
            batch.push_back(i);
        Tensor logits = forward(ds, batch, nn::Mode::eval);
        Tensor p = nn::softmax(logits);
        std::copy(p.data(), p.data() + p.size(),
                  probs.data() + start * static_cast<std::size_t>(meta_.n_classes));
    }
    return probs;
}

std::vector<std::int32_t> HyperModel::predict_labels(const EncodedDataset& ds) {
    Tensor probs = predict_probabilities(ds);
    std::vector<std::int32_t> labels(ds.n_cases);
    const std::size_t k = static_cast<std::size_t>(meta_.n_classes);
    for (std::size_t i = 0; i < ds.n_cases; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < k; ++j)
            if (probs(i, j) > probs(i, best)) best = j;
        labels[i] = static_cast<std::int32_t>(best);
    }
    return labels;
}

std::string HyperModel::rng_state() const {
    std::ostringstream os;
    os << dropout_rng_;
    return os.str();
}

void HyperModel::set_rng_state(const std::string& state) {
    std::istringstream is(state);
    is >> dropout_rng_;
}

void HyperModel::write_weights(std::ostream& out) const {
    auto* self = const_cast<HyperModel*>(this);
    for (auto& [name, tensor] : self->state_tensors())
        out.write(reinterpret_cast<const char*>(tensor->data()),
                  static_cast<std::streamsize>(tensor->size() * sizeof(double)));
}

void HyperModel::read_weights(std::istream& in) {
    for (auto& [name, tensor] : state_tensors()) {
        in.read(reinterpret_cast<char*>(tensor->data()),
                static_cast<std::streamsize>(tensor->size() * sizeof(double)));
        if (!in) throw std::runtime_error("checkpoint payload truncated at '" + name + "'");
    }
}

void HyperModel::save_checkpoint(const std::string& path) const {
    auto* self = const_cast<HyperModel*>(this);
    json manifest = json::array();
    for (auto& [name, tensor] : self->state_tensors())
        manifest.push_back({{"name", name}, {"size", tensor->size()}});
    json header;
    header["format"] = "pbpm-checkpoint";
    header["version"] = 1;
    header["hyperparams"] = json::parse(hyperparams_to_json(hp_));
    header["meta"] = json::parse(dataset_meta_to_json(meta_));
    header["seed"] = seed_;
    header["rng"] = rng_state();
    header["tensors"] = manifest;
    std::string text = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
    out.write("PBPMCKP1", 8);
    std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    write_weights(out);
}

HyperModel HyperModel::load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
    char magic[8];
    in.read(magic, 8);
    if (!in || std::string(magic, 8) != "PBPMCKP1")
        throw std::runtime_error("'" + path + "' is not a pbpm checkpoint");
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    json header = json::parse(text);

    HyperParams hp = hyperparams_from_json(header.at("hyperparams").dump());
    DatasetMeta meta = dataset_meta_from_json(header.at("meta").dump());
    HyperModel model(hp, meta, header.at("seed").get<std::uint64_t>());
    model.read_weights(in);
    model.set_rng_state(header.at("rng").get<std::string>());
    return model;
}

nn::GradCheckResult gradient_check(HyperModel& model, const EncodedDataset& ds,
                                   std::span<const std::size_t> batch, double epsilon,
                                   nn::Mode mode) {
    if (mode == nn::Mode::train)
        throw std::invalid_argument(
            "gradient_check: deterministic mode required (dropout off, batch statistics "
            "frozen); Mode::train is refused");
    auto params = model.params();
    std::vector<double> weights;
    auto loss_and_grad = [&]() { return model.loss_and_grad(ds, batch, weights, mode); };
    return nn::gradient_check(params, loss_and_grad, epsilon);
}

}  // namespace pbpm
