#include "pbpm/tuner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace pbpm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double u01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    std::size_t i = static_cast<std::size_t>(u01(rng) * static_cast<double>(n));
    return std::min(i, n - 1);
}

std::size_t uniform_step(std::mt19937_64& rng, std::size_t lo, std::size_t hi,
                         std::size_t step) {
    std::size_t n = (hi - lo) / step + 1;
    return lo + uniform_index(rng, n) * step;
}

double uniform_real(std::mt19937_64& rng, double lo, double hi) {
    return lo + u01(rng) * (hi - lo);
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::exp(uniform_real(rng, std::log(lo), std::log(hi)));
}

LstmLayerSpec sample_lstm_layer(std::mt19937_64& rng) {
    LstmLayerSpec l;
    l.units = uniform_step(rng, 16, 512, 16);
    l.l2 = log_uniform(rng, 1e-5, 1e-2);
    l.batch_norm = u01(rng) < 0.5;
    l.bn_momentum = uniform_real(rng, 0.01, 0.999);
    l.bn_epsilon = log_uniform(rng, 1e-5, 1e-2);
    l.dropout = u01(rng) < 0.5;
    l.dropout_rate = uniform_real(rng, 0.2, 0.7);
    return l;
}

std::vector<LstmLayerSpec> sample_lstm_stack(std::mt19937_64& rng) {
    std::size_t layers = 1 + uniform_index(rng, 3);
    std::vector<LstmLayerSpec> out;
    for (std::size_t i = 0; i < layers; ++i) out.push_back(sample_lstm_layer(rng));
    return out;
}

}  // namespace

HyperParams sample_config(const SearchSpace& space, Variant variant, std::mt19937_64& rng) {
    (void)space;
    HyperParams hp;
    hp.event_stack = sample_lstm_stack(rng);
    if (variant_uses_bin(variant)) {
        hp.bin_stack = sample_lstm_stack(rng);
        hp.fusion_stack = sample_lstm_stack(rng);
    }
    if (variant_uses_cor(variant)) hp.cor_stack = sample_lstm_stack(rng);
    if (variant_uses_text(variant)) {
        hp.text_stack = sample_lstm_stack(rng);
        hp.verb_embed_dim = uniform_step(rng, 10, 250, 10);
        hp.desc_embed_dim = uniform_step(rng, 10, 250, 10);
    }

    std::size_t dense_layers = 1 + uniform_index(rng, 3);
    for (std::size_t i = 0; i < dense_layers; ++i) {
        DenseLayerSpec d;
        d.units = uniform_step(rng, 16, 256, 16);
        d.l2 = log_uniform(rng, 1e-5, 1e-2);
        d.dropout = u01(rng) < 0.5;
        d.dropout_rate = uniform_real(rng, 0.2, 0.7);
        switch (uniform_index(rng, 4)) {
            case 0: d.activation = nn::Activation::relu; break;
            case 1: d.activation = nn::Activation::tanh; break;
            case 2: d.activation = nn::Activation::softmax; break;
            default: d.activation = nn::Activation::leaky_relu; break;
        }
        d.leaky_alpha = uniform_real(rng, 0.01, 0.3);
        hp.dense_stack.push_back(d);
    }

    double lr0 = log_uniform(rng, 1e-4, 1e-2);
    hp.schedule.initial_lr = lr0;
    switch (uniform_index(rng, 4)) {
        case 0:
            hp.schedule.kind = nn::ScheduleKind::exponential;
            hp.schedule.decay_rate = 0.96;
            hp.schedule.decay_steps = 100.0;
            break;
        case 1:
            hp.schedule.kind = nn::ScheduleKind::inverse_time;
            hp.schedule.decay_rate = 1.0;
            hp.schedule.decay_steps = 100.0;
            break;
        case 2:
            hp.schedule.kind = nn::ScheduleKind::piecewise_constant;
            hp.schedule.boundaries = {200.0, 500.0};
            hp.schedule.values = {lr0, lr0 * 0.3, lr0 * 0.1};
            break;
        default:
            hp.schedule.kind = nn::ScheduleKind::polynomial;
            hp.schedule.power = 1.0;
            hp.schedule.end_lr = lr0 * 0.01;
            hp.schedule.total_steps = 1000.0;
            break;
    }

    switch (uniform_index(rng, 3)) {
        case 0:
            hp.optimizer.kind = nn::OptimizerKind::adam;
            hp.optimizer.adam_beta1 = uniform_real(rng, 0.85, 0.99);
            hp.optimizer.adam_beta2 = uniform_real(rng, 0.99, 0.999);
            break;
        case 1:
            hp.optimizer.kind = nn::OptimizerKind::sgd;
            hp.optimizer.sgd_momentum = uniform_real(rng, 0.0, 0.9);
            break;
        default:
            hp.optimizer.kind = nn::OptimizerKind::rmsprop;
            hp.optimizer.rms_alpha = uniform_real(rng, 0.9, 0.999);
            hp.optimizer.rms_momentum = uniform_real(rng, 0.01, 0.9);
            hp.optimizer.rms_epsilon = log_uniform(rng, 1e-10, 1e-6);
            break;
    }

    static constexpr std::size_t kBatchChoices[] = {16, 31, 64, 128};
    hp.batch_size = kBatchChoices[uniform_index(rng, 4)];
    return hp;
}

std::size_t hyperband_s_max(std::size_t max_resource, std::size_t eta) {
    std::size_t s = 0;
    std::size_t power = 1;
    while (power * eta <= max_resource) {
        power *= eta;
        ++s;
    }
    return s;
}

std::vector<BracketSpec> hyperband_schedule(std::size_t max_resource, std::size_t eta) {
    if (max_resource < 1) throw std::invalid_argument("hyperband: R must be >= 1");
    if (eta < 2) throw std::invalid_argument("hyperband: eta must be >= 2");
    const std::size_t s_max = hyperband_s_max(max_resource, eta);

    std::vector<BracketSpec> schedule;
    for (std::size_t s = s_max + 1; s-- > 0;) {
        BracketSpec bracket;
        bracket.s = static_cast<int>(s);
        std::size_t eta_s = 1;
        for (std::size_t i = 0; i < s; ++i) eta_s *= eta;
        bracket.n_configs = ((s_max + 1) / (s + 1)) * eta_s;
        double r0 = static_cast<double>(max_resource) / static_cast<double>(eta_s);
        for (std::size_t i = 0; i <= s; ++i) {
            double budget = r0;
            for (std::size_t k = 0; k < i; ++k) budget *= static_cast<double>(eta);
            std::size_t epochs = static_cast<std::size_t>(std::ceil(budget - 1e-9));
            epochs = std::max<std::size_t>(1, std::min(epochs, max_resource));
            bracket.rung_budgets.push_back(epochs);
        }
        bracket.initial_budget = bracket.rung_budgets.front();
        schedule.push_back(bracket);
    }
    return schedule;
}

std::string trial_status_name(TrialStatus s) {
    switch (s) {
        case TrialStatus::completed: return "completed";
        case TrialStatus::failed: return "failed";
        case TrialStatus::pruned: return "pruned";
    }
    return "completed";
}

namespace {

/// Top-k selection by objective with deterministic tie-break toward the lower
/// trial id; failed (-inf) entries never survive.
std::vector<std::size_t> select_top(const std::vector<std::size_t>& ids,
                                    const std::vector<double>& objectives, std::size_t keep) {
    std::vector<std::size_t> order(ids.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (objectives[a] != objectives[b]) return objectives[a] > objectives[b];
        return ids[a] < ids[b];
    });
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < order.size() && out.size() < keep; ++i) {
        if (objectives[order[i]] == kNegInf) break;  // sorted: rest are failed too
        out.push_back(ids[order[i]]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::vector<ShRung> successive_halving(const std::vector<std::size_t>& trial_ids,
                                       const std::vector<std::size_t>& rung_budgets,
                                       std::size_t eta, const RungRunner& runner) {
    if (trial_ids.empty()) throw std::invalid_argument("successive_halving: no configs");
    std::vector<ShRung> rungs;
    std::vector<std::size_t> alive = trial_ids;
    for (std::size_t i = 0; i < rung_budgets.size(); ++i) {
        if (alive.empty()) break;
        ShRung rung;
        rung.cumulative_budget = rung_budgets[i];
        rung.entrants = alive;
        rung.objectives = runner(alive, rung_budgets[i]);
        if (rung.objectives.size() != alive.size())
            throw std::logic_error("successive_halving: runner returned wrong count");
        if (i + 1 < rung_budgets.size()) {
            std::size_t keep = alive.size() / eta;
            rung.survivors = select_top(alive, rung.objectives, keep);
        } else {
            rung.survivors = select_top(alive, rung.objectives, alive.size());
        }
        alive = rung.survivors;
        rungs.push_back(std::move(rung));
    }
    return rungs;
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t trial_id) {
    std::uint64_t h = seed ^ 0xcbf29ce484222325ull;
    h ^= trial_id + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h *= 1099511628211ull;
    return h;
}

struct TrialState {
    Trial record;
    std::string state_path;
    bool started = false;
};

}  // namespace

HyperbandResult hyperband(const EncodedDataset& train_set, const EncodedDataset& val_set,
                          const HyperbandOptions& options) {
    if (train_set.variant != val_set.variant)
        throw std::runtime_error("hyperband: train/validation variants differ");
    if (options.objective == Objective::weighted_f1 && train_set.n_classes < 2)
        throw std::runtime_error("hyperband: weighted F1 objective needs >= 2 classes");

    namespace fs = std::filesystem;
    fs::path work_dir = options.work_dir.empty()
                            ? fs::temp_directory_path() /
                                  ("pbpm-tune-" + std::to_string(options.seed))
                            : fs::path(options.work_dir);
    fs::create_directories(work_dir);

    std::ofstream log_stream;
    if (!options.trial_log_path.empty()) {
        log_stream.open(options.trial_log_path, std::ios::trunc);
        if (!log_stream)
            throw std::runtime_error("cannot write trial log '" + options.trial_log_path + "'");
        log_stream << "trial\tbracket\trung\tbudget\thp_digest\tobjective\tstatus\n";
    }

    const DatasetMeta meta = DatasetMeta::from(train_set);
    std::vector<BracketSpec> schedule = hyperband_schedule(options.max_resource, options.eta);

    // Apply the optional trial cap bracket by bracket.
    if (options.max_trials > 0) {
        std::size_t remaining = options.max_trials;
        for (auto& bracket : schedule) {
            bracket.n_configs = std::min(bracket.n_configs, remaining);
            remaining -= bracket.n_configs;
        }
        std::erase_if(schedule, [](const BracketSpec& b) { return b.n_configs == 0; });
    }

    std::mt19937_64 sample_rng(options.seed);
    SearchSpace space{options.seed};
    std::vector<TrialState> trials;
    for (const auto& bracket : schedule) {
        for (std::size_t i = 0; i < bracket.n_configs; ++i) {
            TrialState t;
            t.record.id = trials.size();
            t.record.bracket = bracket.s;
            t.record.hp = sample_config(space, meta.variant, sample_rng);
            t.state_path =
                (work_dir / ("trial_" + std::to_string(t.record.id) + ".state")).string();
            trials.push_back(std::move(t));
        }
    }

    TrainOptions train_options;
    train_options.max_epochs = options.max_resource;
    train_options.patience = options.patience;
    train_options.objective = options.objective;

    // Trains the listed trials to the cumulative budget (resuming from saved
    // state), in parallel when workers > 1; objectives returned in id order.
    auto run_rung = [&](const std::vector<std::size_t>& ids, std::size_t budget) {
        std::vector<double> objectives(ids.size(), kNegInf);
        std::atomic<std::size_t> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;

        auto worker = [&]() {
            for (;;) {
                std::size_t slot = next.fetch_add(1);
                if (slot >= ids.size()) return;
                TrialState& t = trials[ids[slot]];
                try {
                    std::unique_ptr<Trainer> trainer;
                    if (t.started) {
                        trainer = std::make_unique<Trainer>(Trainer::load(t.state_path));
                    } else {
                        trainer = std::make_unique<Trainer>(
                            t.record.hp, meta, train_options,
                            mix_seed(options.seed, t.record.id));
                    }
                    std::size_t done = trainer->run().history.size();
                    if (budget > done)
                        trainer->run_epochs(train_set, val_set, budget - done);
                    t.record.budget = std::max(t.record.budget, budget);
                    if (trainer->run().failed) {
                        t.record.status = TrialStatus::failed;
                        objectives[slot] = kNegInf;
                    } else {
                        t.record.status = TrialStatus::completed;
                        objectives[slot] = trainer->run().best_objective;
                    }
                    trainer->save(t.state_path);
                    t.started = true;
                } catch (...) {
                    std::scoped_lock lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        };

        std::size_t n_workers = std::max<std::size_t>(1, options.workers);
        if (n_workers == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }
        if (first_error) std::rethrow_exception(first_error);
        return objectives;
    };

    auto log_rows = [&](const std::vector<std::size_t>& ids,
                        const std::vector<double>& objectives, int rung, std::size_t budget) {
        if (!log_stream) return;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const TrialState& t = trials[ids[i]];
            log_stream << t.record.id << '\t' << t.record.bracket << '\t' << rung << '\t'
                       << budget << '\t' << std::hex << hyperparams_digest(t.record.hp)
                       << std::dec << '\t';
            if (objectives[i] == kNegInf)
                log_stream << '-';
            else
                log_stream << std::fixed << std::setprecision(10) << objectives[i];
            log_stream << '\t'
                       << (objectives[i] == kNegInf ? "failed" : "completed") << '\n';
        }
        log_stream.flush();
    };

    std::size_t id_base = 0;
    std::vector<double> final_objective(trials.size(), kNegInf);
    for (const auto& bracket : schedule) {
        std::vector<std::size_t> alive(bracket.n_configs);
        for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = id_base + i;
        id_base += bracket.n_configs;

        for (std::size_t rung = 0; rung < bracket.rung_budgets.size() && !alive.empty();
             ++rung) {
            std::size_t budget = bracket.rung_budgets[rung];
            std::vector<double> objectives = run_rung(alive, budget);
            log_rows(alive, objectives, static_cast<int>(rung), budget);
            for (std::size_t i = 0; i < alive.size(); ++i)
                final_objective[alive[i]] = objectives[i];

            std::vector<std::size_t> survivors;
            if (rung + 1 < bracket.rung_budgets.size()) {
                survivors = select_top(alive, objectives, alive.size() / options.eta);
                for (std::size_t id : alive) {
                    bool kept = std::find(survivors.begin(), survivors.end(), id) !=
                                survivors.end();
                    if (!kept && trials[id].record.status != TrialStatus::failed) {
                        trials[id].record.status = TrialStatus::pruned;
                        if (log_stream)
                            log_stream << id << '\t' << trials[id].record.bracket << '\t'
                                       << rung << '\t' << budget << '\t' << std::hex
                                       << hyperparams_digest(trials[id].record.hp) << std::dec
                                       << "\t-\tpruned\n";
                    }
                }
            } else {
                survivors = alive;
            }
            alive = std::move(survivors);
        }
    }

    HyperbandResult result;
    result.schedule = schedule;
    bool any = false;
    std::size_t best_id = 0;
    for (const TrialState& t : trials) {
        Trial record = t.record;
        if (record.status == TrialStatus::completed)
            record.objective = final_objective[record.id];
        result.trials.push_back(record);
        if (record.status == TrialStatus::completed &&
            (!any || final_objective[record.id] > *result.best.objective ||
             (final_objective[record.id] == *result.best.objective &&
              record.id < result.best.id))) {
            result.best = record;
            best_id = record.id;
            any = true;
        }
    }
    if (!any) throw std::runtime_error("hyperband: every trial failed");
    result.best_state_path = trials[best_id].state_path;
    return result;
}

}  // namespace pbpm
