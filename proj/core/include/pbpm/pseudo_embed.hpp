#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pbpm/event_log.hpp"

namespace pbpm {

/// One document per case, one token per event, in log order.
struct Corpus {
    std::vector<std::vector<std::string>> documents;
};

/// Appends a constant-valued universal attribute. Used when a log carries a
/// single universal attribute so that attribute-combination tokens still
/// reflect a product of at least two attributes.
EventLog append_dummy_universal(EventLog log, const std::string& name = "dummy",
                                const std::string& value = "dummy");

/// Correlation tokens: "<relabeled>|<u1>_<u2>_..." with universal attribute
/// values joined in schema order. Requires a relabeled log with at least one
/// universal categorical attribute.
Corpus build_correlation_corpus(const EventLog& log);

/// Conversion from stored event duration (seconds) to binning units.
/// With unit_seconds > 1 values are divided and rounded up to whole units.
struct BinningUnit {
    double unit_seconds = 1.0;
    bool ceil_to_int = false;

    double to_units(std::int64_t duration_seconds) const;
};

struct DurationBinning {
    double t_cut = 0.0;                   // threshold, in binning units
    std::size_t requested_q = 0;          // quantile bin count before dedup
    std::vector<double> unique_bins;      // sorted distinct values below t_cut
    std::vector<double> quantile_edges;   // e_0..e_q, strictly increasing, covers [t_cut, max]
    std::vector<std::size_t> frequencies; // unique bins first, then quantile bins
    double balance_tol = 0.2;
    std::size_t max_iter = 16;
    bool balanced = false;                // balance report
    double imbalance = 0.0;               // max |f - mean| / mean over quantile bins

    std::size_t n_quantile_bins() const {
        return quantile_edges.size() >= 2 ? quantile_edges.size() - 1 : 0;
    }
    std::size_t total_bins() const { return unique_bins.size() + n_quantile_bins(); }
};

/// Bin handle: an index into unique_bins or a 0-based quantile bin number.
struct BinId {
    bool is_quantile = false;
    std::size_t index = 0;
};

/// Fits the dynamic binning of Algorithm-2 style: unique-value bins below
/// t_cut, q-quantile bins above, with a balance loop that adjusts q (±1) then
/// t_cut (±1 unit) until quantile-bin frequencies lie within balance_tol of
/// their mean or max_iter is exhausted (best attempt returned, flagged).
DurationBinning fit_duration_binning(const std::vector<double>& durations, double t_cut,
                                     std::size_t q, double balance_tol = 0.2,
                                     std::size_t max_iter = 16);

/// Total assignment over the fitted range. Short-range values unseen at fit
/// time map to the nearest unique bin (with a warning).
BinId assign_bin(double duration, const DurationBinning& binning);

/// "zero" for a unique zero bin, "v<value>" for other unique bins, "q<k>"
/// (1-based) for quantile bins.
std::string bin_label(const DurationBinning& binning, BinId id);

/// Duration tokens: "<relabeled>|<bin label>". Requires derived durations.
Corpus build_duration_corpus(const EventLog& log, const DurationBinning& binning,
                             const BinningUnit& unit);

struct TfIdfModel {
    std::map<std::string, std::size_t> vocabulary;  // term -> column, lexicographic
    std::vector<std::size_t> doc_freq;              // per column
    std::size_t n_docs = 0;

    /// Smoothed idf: ln((1+N)/(1+df)) + 1.
    double idf(std::size_t column) const;
};

TfIdfModel tfidf_fit(const Corpus& corpus);

/// Per-event-occurrence embedding rows over the model vocabulary. Row r holds
/// tf(term_r, doc(r)) * idf(term_r) in the column of the event's own token and
/// zero elsewhere.
struct EmbeddingMatrix {
    std::vector<std::string> terms;          // column labels
    std::size_t n_rows = 0;
    std::vector<std::size_t> case_offsets;   // per case: first row index; size cases+1
    std::vector<double> values;              // row-major [n_rows x terms.size()]

    std::size_t n_cols() const { return terms.size(); }
    double at(std::size_t row, std::size_t col) const { return values[row * terms.size() + col]; }
    const double* row(std::size_t r) const { return values.data() + r * terms.size(); }
};

EmbeddingMatrix tfidf_matrix(const Corpus& corpus, const TfIdfModel& model);

/// Divides each column by its maximum (column minimum is zero by
/// construction); all-zero columns are left unchanged.
void minmax_normalize(EmbeddingMatrix& matrix);

/// Columnar text format: term list header + row-major values.
void save_embedding_matrix(const EmbeddingMatrix& matrix, const std::string& path);
EmbeddingMatrix load_embedding_matrix(const std::string& path);

}  // namespace pbpm
