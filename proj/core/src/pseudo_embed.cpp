#include "pbpm/pseudo_embed.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace pbpm {

namespace {

std::string format_value(double v) {
    if (v == std::floor(v) && std::abs(v) < 1e15) {
        std::ostringstream os;
        os << static_cast<long long>(v);
        return os.str();
    }
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

}  // namespace

EventLog append_dummy_universal(EventLog log, const std::string& name, const std::string& value) {
    for (const auto& spec : log.schema)
        if (spec.name == name)
            throw std::runtime_error("append_dummy_universal: attribute '" + name +
                                     "' already exists");
    AttributeSpec spec;
    spec.name = name;
    spec.level = AttrLevel::event;
    spec.kind = AttrKind::categorical;
    spec.universality = Universality::universal;
    log.schema.push_back(spec);
    for (auto& c : log.cases)
        for (auto& e : c.events) e.universal_values[name] = value;
    return log;
}

Corpus build_correlation_corpus(const EventLog& log) {
    std::vector<std::string> universal_names;
    for (const auto& spec : log.schema)
        if (spec.level == AttrLevel::event && spec.kind == AttrKind::categorical &&
            spec.universality == Universality::universal)
            universal_names.push_back(spec.name);
    if (universal_names.empty())
        throw std::runtime_error(
            "build_correlation_corpus: schema has no universal categorical attribute");

    Corpus corpus;
    corpus.documents.reserve(log.cases.size());
    for (const auto& c : log.cases) {
        std::vector<std::string> doc;
        doc.reserve(c.events.size());
        for (const auto& e : c.events) {
            std::string combo;
            for (const auto& name : universal_names) {
                auto it = e.universal_values.find(name);
                if (it == e.universal_values.end())
                    throw std::runtime_error("case '" + c.case_id +
                                             "': universal attribute '" + name +
                                             "' has no value and no sentinel is configured");
                if (!combo.empty()) combo += "_";
                combo += it->second;
            }
            doc.push_back(e.activity + "|" + combo);
        }
        corpus.documents.push_back(std::move(doc));
    }
    return corpus;
}

double BinningUnit::to_units(std::int64_t duration_seconds) const {
    double v = static_cast<double>(duration_seconds) / unit_seconds;
    if (ceil_to_int) v = std::ceil(v);
    return v;
}

namespace {

// Linear-interpolation quantile over a sorted sample, rank p * (n - 1).
double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw std::runtime_error("quantile of empty sample");
    if (sorted.size() == 1) return sorted[0];
    double rank = p * static_cast<double>(sorted.size() - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(rank));
    std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    double frac = rank - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

struct FitAttempt {
    DurationBinning binning;
};

FitAttempt fit_once(const std::vector<double>& durations, double t_cut, std::size_t q,
                    double balance_tol, bool warn_on_clamp) {
    FitAttempt attempt;
    DurationBinning& b = attempt.binning;
    b.t_cut = t_cut;
    b.balance_tol = balance_tol;

    std::vector<double> shorts, longs;
    for (double d : durations)
        (d < t_cut ? shorts : longs).push_back(d);

    std::set<double> short_values(shorts.begin(), shorts.end());
    b.unique_bins.assign(short_values.begin(), short_values.end());

    if (!longs.empty()) {
        std::sort(longs.begin(), longs.end());
        std::size_t distinct_longs = 1;
        for (std::size_t i = 1; i < longs.size(); ++i)
            if (longs[i] != longs[i - 1]) ++distinct_longs;
        std::size_t q_eff = q;
        if (q_eff > distinct_longs) {
            if (warn_on_clamp)
                std::cerr << "[pbpm] fit_duration_binning: q=" << q << " exceeds "
                          << distinct_longs << " distinct long durations; clamping\n";
            q_eff = distinct_longs;
        }
        if (q_eff == 0) q_eff = 1;
        b.requested_q = q_eff;

        std::vector<double> edges;
        edges.push_back(std::min(t_cut, longs.front()));
        for (std::size_t k = 1; k < q_eff; ++k)
            edges.push_back(quantile_sorted(longs, static_cast<double>(k) / q_eff));
        edges.push_back(longs.back());
        // Full range coverage with duplicate boundaries removed.
        std::vector<double> dedup;
        for (double e : edges)
            if (dedup.empty() || e > dedup.back()) dedup.push_back(e);
        if (dedup.size() < 2) dedup = {edges.front(), edges.front() + 1.0};
        b.quantile_edges = std::move(dedup);
    } else {
        b.requested_q = 0;
    }

    // Frequencies from assignment.
    b.frequencies.assign(b.total_bins(), 0);
    for (double d : durations) {
        BinId id = assign_bin(d, b);
        std::size_t idx = id.is_quantile ? b.unique_bins.size() + id.index : id.index;
        ++b.frequencies[idx];
    }

    std::size_t nq = b.n_quantile_bins();
    if (nq <= 1) {
        b.balanced = true;
        b.imbalance = 0.0;
    } else {
        double mean = 0.0;
        for (std::size_t i = 0; i < nq; ++i)
            mean += static_cast<double>(b.frequencies[b.unique_bins.size() + i]);
        mean /= static_cast<double>(nq);
        double worst = 0.0;
        for (std::size_t i = 0; i < nq; ++i) {
            double f = static_cast<double>(b.frequencies[b.unique_bins.size() + i]);
            worst = std::max(worst, std::abs(f - mean) / mean);
        }
        b.imbalance = worst;
        b.balanced = worst <= balance_tol;
    }
    return attempt;
}

}  // namespace

DurationBinning fit_duration_binning(const std::vector<double>& durations, double t_cut,
                                     std::size_t q, double balance_tol, std::size_t max_iter) {
    if (durations.empty())
        throw std::runtime_error("fit_duration_binning: empty duration list");
    for (double d : durations)
        if (d < 0.0) throw std::runtime_error("fit_duration_binning: negative duration");
    if (q < 1) throw std::runtime_error("fit_duration_binning: q must be >= 1");

    double cur_cut = t_cut;
    std::size_t cur_q = q;
    FitAttempt best = fit_once(durations, cur_cut, cur_q, balance_tol, true);
    best.binning.max_iter = max_iter;
    if (best.binning.balanced) return best.binning;

    // Greedy neighbourhood descent: q +/- 1 first, then t_cut +/- 1 unit.
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        FitAttempt current = fit_once(durations, cur_cut, cur_q, balance_tol, false);
        if (current.binning.imbalance < best.binning.imbalance) best = current;
        if (current.binning.balanced) break;

        struct Candidate {
            double t_cut;
            std::size_t q;
        };
        std::vector<Candidate> candidates;
        candidates.push_back({cur_cut, cur_q + 1});
        if (cur_q > 1) candidates.push_back({cur_cut, cur_q - 1});
        candidates.push_back({cur_cut + 1.0, cur_q});
        if (cur_cut > 1.0) candidates.push_back({cur_cut - 1.0, cur_q});

        double best_score = std::numeric_limits<double>::infinity();
        Candidate chosen = candidates.front();
        for (const auto& cand : candidates) {
            FitAttempt a = fit_once(durations, cand.t_cut, cand.q, balance_tol, false);
            if (a.binning.imbalance < best_score) {
                best_score = a.binning.imbalance;
                chosen = cand;
            }
        }
        cur_cut = chosen.t_cut;
        cur_q = chosen.q;
    }

    FitAttempt last = fit_once(durations, cur_cut, cur_q, balance_tol, false);
    if (last.binning.imbalance < best.binning.imbalance) best = last;
    best.binning.max_iter = max_iter;
    if (!best.binning.balanced)
        std::cerr << "[pbpm] fit_duration_binning: balance loop exhausted " << max_iter
                  << " iterations; best imbalance " << best.binning.imbalance << "\n";
    return best.binning;
}

BinId assign_bin(double duration, const DurationBinning& binning) {
    if (duration < binning.t_cut || binning.quantile_edges.empty()) {
        auto it = std::lower_bound(binning.unique_bins.begin(), binning.unique_bins.end(),
                                   duration);
        if (it != binning.unique_bins.end() && *it == duration)
            return {false, static_cast<std::size_t>(it - binning.unique_bins.begin())};
        if (binning.unique_bins.empty()) {
            // No short-range bins at all: fall through to quantile range.
            if (binning.quantile_edges.empty())
                throw std::runtime_error("assign_bin: binning has no bins");
        } else {
            // Unseen short value: nearest unique bin.
            std::size_t best = 0;
            double best_gap = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < binning.unique_bins.size(); ++i) {
                double gap = std::abs(binning.unique_bins[i] - duration);
                if (gap < best_gap) {
                    best_gap = gap;
                    best = i;
                }
            }
            std::cerr << "[pbpm] assign_bin: short duration " << duration
                      << " unseen at fit time; using nearest unique bin\n";
            return {false, best};
        }
    }
    const auto& e = binning.quantile_edges;
    // Half-open [e_i, e_{i+1}); the last interval is closed on the right.
    if (duration >= e.back()) return {true, e.size() - 2};
    auto it = std::upper_bound(e.begin(), e.end(), duration);
    std::size_t idx = it == e.begin() ? 0 : static_cast<std::size_t>(it - e.begin()) - 1;
    if (idx >= e.size() - 1) idx = e.size() - 2;
    return {true, idx};
}

std::string bin_label(const DurationBinning& binning, BinId id) {
    if (id.is_quantile) return "q" + std::to_string(id.index + 1);
    double v = binning.unique_bins.at(id.index);
    if (v == 0.0) return "zero";
    return "v" + format_value(v);
}

Corpus build_duration_corpus(const EventLog& log, const DurationBinning& binning,
                             const BinningUnit& unit) {
    Corpus corpus;
    corpus.documents.reserve(log.cases.size());
    for (const auto& c : log.cases) {
        std::vector<std::string> doc;
        doc.reserve(c.events.size());
        for (const auto& e : c.events) {
            if (!e.duration)
                throw std::runtime_error("build_duration_corpus: case '" + c.case_id +
                                         "' has underived durations");
            double units = unit.to_units(*e.duration);
            doc.push_back(e.activity + "|" + bin_label(binning, assign_bin(units, binning)));
        }
        corpus.documents.push_back(std::move(doc));
    }
    return corpus;
}

double TfIdfModel::idf(std::size_t column) const {
    return std::log((1.0 + static_cast<double>(n_docs)) /
                    (1.0 + static_cast<double>(doc_freq[column]))) +
           1.0;
}

TfIdfModel tfidf_fit(const Corpus& corpus) {
    if (corpus.documents.empty()) throw std::runtime_error("tfidf_fit: empty corpus");
    TfIdfModel model;
    model.n_docs = corpus.documents.size();
    std::set<std::string> terms;
    for (const auto& doc : corpus.documents)
        for (const auto& t : doc) terms.insert(t);
    std::size_t col = 0;
    for (const auto& t : terms) model.vocabulary.emplace(t, col++);
    model.doc_freq.assign(model.vocabulary.size(), 0);
    for (const auto& doc : corpus.documents) {
        std::set<std::string> seen(doc.begin(), doc.end());
        for (const auto& t : seen) ++model.doc_freq[model.vocabulary.at(t)];
    }
    return model;
}

EmbeddingMatrix tfidf_matrix(const Corpus& corpus, const TfIdfModel& model) {
    EmbeddingMatrix m;
    m.terms.resize(model.vocabulary.size());
    for (const auto& [term, col] : model.vocabulary) m.terms[col] = term;

    m.case_offsets.push_back(0);
    for (const auto& doc : corpus.documents) {
        m.n_rows += doc.size();
        m.case_offsets.push_back(m.n_rows);
    }
    m.values.assign(m.n_rows * m.terms.size(), 0.0);

    std::set<std::string> warned;
    std::size_t row = 0;
    for (const auto& doc : corpus.documents) {
        std::map<std::string, std::size_t> counts;
        for (const auto& t : doc) ++counts[t];
        for (const auto& t : doc) {
            auto it = model.vocabulary.find(t);
            if (it == model.vocabulary.end()) {
                if (warned.insert(t).second)
                    std::cerr << "[pbpm] tfidf_matrix: term '" << t
                              << "' missing from vocabulary; contributing zero\n";
            } else {
                double tf = static_cast<double>(counts[t]);
                m.values[row * m.terms.size() + it->second] = tf * model.idf(it->second);
            }
            ++row;
        }
    }
    return m;
}

void minmax_normalize(EmbeddingMatrix& matrix) {
    const std::size_t cols = matrix.n_cols();
    for (std::size_t c = 0; c < cols; ++c) {
        double max = 0.0;
        for (std::size_t r = 0; r < matrix.n_rows; ++r)
            max = std::max(max, matrix.values[r * cols + c]);
        if (max <= 0.0) continue;
        for (std::size_t r = 0; r < matrix.n_rows; ++r) matrix.values[r * cols + c] /= max;
    }
}

void save_embedding_matrix(const EmbeddingMatrix& matrix, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "pbpm-embedding-matrix 1\n";
    out << "rows " << matrix.n_rows << "\n";
    out << "cols " << matrix.n_cols() << "\n";
    out << "cases " << (matrix.case_offsets.size() - 1) << "\n";
    out << "offsets";
    for (std::size_t o : matrix.case_offsets) out << ' ' << o;
    out << "\n";
    for (const auto& t : matrix.terms) out << "term " << t << "\n";
    out.precision(17);
    for (std::size_t r = 0; r < matrix.n_rows; ++r) {
        for (std::size_t c = 0; c < matrix.n_cols(); ++c)
            out << (c ? " " : "") << matrix.at(r, c);
        out << "\n";
    }
}

EmbeddingMatrix load_embedding_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "pbpm-embedding-matrix" || version != 1)
        throw std::runtime_error("'" + path + "' is not an embedding matrix file");
    EmbeddingMatrix m;
    std::string key;
    std::size_t cols = 0, cases = 0;
    in >> key >> m.n_rows >> key >> cols >> key >> cases >> key;
    m.case_offsets.resize(cases + 1);
    for (auto& o : m.case_offsets) in >> o;
    std::string line;
    std::getline(in, line);
    while (static_cast<std::size_t>(m.terms.size()) < cols && std::getline(in, line)) {
        if (line.rfind("term ", 0) != 0)
            throw std::runtime_error("'" + path + "': malformed term list");
        m.terms.push_back(line.substr(5));
    }
    m.values.resize(m.n_rows * cols);
    for (auto& v : m.values)
        if (!(in >> v)) throw std::runtime_error("'" + path + "': truncated value payload");
    return m;
}

}  // namespace pbpm
