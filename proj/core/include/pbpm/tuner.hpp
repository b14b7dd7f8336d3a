#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pbpm/hypermodel.hpp"

namespace pbpm {

/// Tuning-range sampler. Bounds are fixed (units 16-512 step 16, dense units
/// 16-256 step 16, L2 and learning rate log-uniform over 1e-5..1e-2 and
/// 1e-4..1e-2, dropout 0.2-0.7, batch in {16, 31, 64, 128}, embedding dims
/// 10-250 step 10); the seed fixes the draw sequence.
struct SearchSpace {
    std::uint64_t seed = 0;
};

HyperParams sample_config(const SearchSpace& space, Variant variant, std::mt19937_64& rng);

struct BracketSpec {
    int s = 0;
    std::size_t n_configs = 0;
    std::size_t initial_budget = 0;            // epochs at the first rung
    std::vector<std::size_t> rung_budgets;     // cumulative epochs per rung
};

std::size_t hyperband_s_max(std::size_t max_resource, std::size_t eta);

/// Bracket plan for (R, eta): s = s_max..0 with n = floor((s_max+1)/(s+1)) *
/// eta^s configs starting at r = R * eta^-s epochs (rounded up to >= 1).
std::vector<BracketSpec> hyperband_schedule(std::size_t max_resource, std::size_t eta);

enum class TrialStatus { completed, failed, pruned };
std::string trial_status_name(TrialStatus s);

struct Trial {
    std::size_t id = 0;
    int bracket = 0;
    HyperParams hp;
    std::size_t budget = 0;  // cumulative epochs granted
    std::optional<double> objective;  // present iff completed
    TrialStatus status = TrialStatus::completed;
};

/// Trains every listed trial id to the cumulative budget and returns their
/// objectives in input order (-inf marks a failed trial).
using RungRunner =
    std::function<std::vector<double>(const std::vector<std::size_t>& trial_ids,
                                      std::size_t cumulative_budget)>;

struct ShRung {
    std::size_t cumulative_budget = 0;
    std::vector<std::size_t> entrants;
    std::vector<double> objectives;  // aligned with entrants
    std::vector<std::size_t> survivors;
};

/// Generic successive halving over pre-assigned trial ids: each rung trains
/// the survivors at its budget and keeps the top floor(n/eta) by objective,
/// ties resolved toward the lower trial id. Failed trials (-inf) never
/// survive; when everything fails the survivor list is empty.
std::vector<ShRung> successive_halving(const std::vector<std::size_t>& trial_ids,
                                       const std::vector<std::size_t>& rung_budgets,
                                       std::size_t eta, const RungRunner& runner);

struct HyperbandOptions {
    std::size_t max_resource = 300;  // R, epochs
    std::size_t eta = 3;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    Objective objective = Objective::accuracy;
    std::size_t max_trials = 0;  // 0 = run the full schedule
    std::size_t patience = 20;
    std::string work_dir;         // trial-state directory; a temp dir when empty
    std::string trial_log_path;   // optional append-only TSV log
};

struct HyperbandResult {
    Trial best;
    std::vector<Trial> trials;           // ordered by trial id
    std::vector<BracketSpec> schedule;   // as executed (after any trial cap)
    std::string best_state_path;         // trainer state of the best trial
};

/// Hyperband over the Table-like space: brackets from hyperband_schedule,
/// successive halving inside each, surviving trials resumed from their saved
/// trainer state rather than retrained. Deterministic for a fixed seed
/// regardless of worker count.
HyperbandResult hyperband(const EncodedDataset& train_set, const EncodedDataset& val_set,
                          const HyperbandOptions& options);

}  // namespace pbpm
