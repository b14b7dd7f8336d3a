#include "pbpm_cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pbpm/eval.hpp"
#include "pbpm/event_log.hpp"
#include "pbpm/featurize.hpp"
#include "pbpm/hypermodel.hpp"
#include "pbpm/pseudo_embed.hpp"
#include "pbpm/synthgen.hpp"
#include "pbpm/tuner.hpp"
#include "pbpm/vectorize.hpp"

namespace pbpm::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Artifact manifest: content digests per stage for stale-input detection.

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for digesting");
    std::uint64_t h = 14695981039346656037ull;
    char buffer[65536];
    while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buffer[i]);
            h *= 1099511628211ull;
        }
        if (!in) break;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

json load_manifest(const fs::path& run) {
    fs::path path = run / "manifest.json";
    if (!fs::exists(path)) return json{{"stages", json::object()}};
    std::ifstream in(path);
    return json::parse(in);
}

void save_manifest(const fs::path& run, const json& manifest) {
    std::ofstream out(run / "manifest.json");
    out << manifest.dump(2) << "\n";
}

/// Verifies inputs against earlier stages' recorded outputs, then records this
/// stage's own inputs and outputs.
void record_stage(const fs::path& run, const std::string& stage,
                  const std::vector<std::string>& inputs,
                  const std::vector<std::string>& outputs) {
    json manifest = load_manifest(run);
    json in_digests = json::object();
    for (const auto& f : inputs) {
        std::string digest = file_digest(f);
        std::string name = fs::path(f).filename().string();
        for (auto& [other_stage, record] : manifest["stages"].items()) {
            if (!record.contains("outputs")) continue;
            auto it = record["outputs"].find(name);
            if (it != record["outputs"].end() && it->get<std::string>() != digest)
                throw std::runtime_error("stale artifact '" + name + "': changed since stage '" +
                                         other_stage + "' produced it; re-run that stage");
        }
        in_digests[name] = digest;
    }
    json out_digests = json::object();
    for (const auto& f : outputs) out_digests[fs::path(f).filename().string()] = file_digest(f);
    manifest["stages"][stage] = {{"inputs", in_digests}, {"outputs", out_digests}};
    save_manifest(run, manifest);
}

fs::path resolve_run_dir(std::string dir) {
    if (dir.empty()) {
        const char* env = std::getenv("PBPM_OUT");
        if (env != nullptr && *env != '\0') dir = env;
    }
    if (dir.empty())
        throw std::runtime_error("no run directory: pass --run/--out or set PBPM_OUT");
    fs::create_directories(dir);
    return fs::path(dir);
}

EventLog load_run_log(const fs::path& run) {
    SchemaConfig schema = load_schema_config((run / "schema.cfg").string());
    return derive_durations(load_csv((run / "log.csv").string(), schema));
}

FeaturizationTable load_run_table(const fs::path& run) {
    return load_featurization_table((run / "featurization.csv").string());
}

Objective resolve_objective(const std::string& name, const std::vector<std::int32_t>& labels,
                            int n_classes) {
    if (name != "auto") return objective_from_name(name);
    std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
    for (auto l : labels) ++counts[static_cast<std::size_t>(l)];
    std::size_t lo = SIZE_MAX, hi = 0;
    for (std::size_t c : counts) {
        if (c == 0) continue;
        lo = std::min(lo, c);
        hi = std::max(hi, c);
    }
    bool imbalanced = lo == 0 || static_cast<double>(hi) > 1.5 * static_cast<double>(lo);
    return imbalanced ? Objective::weighted_f1 : Objective::accuracy;
}

struct StopWatch {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

// ---------------------------------------------------------------------------
// Subcommand state

struct SynthArgs {
    std::string out;
    std::string profile = "bpic-like";
    std::uint64_t seed = 1;
    std::size_t cases = 0;           // patients-like total
    std::size_t cases_per_class = 0; // bpic-like per class
    std::size_t min_len = 0, max_len = 0, median_len = 0;
};

struct IngestArgs {
    std::string out;
    std::string log_path;
    std::string schema_path;
};

struct FeaturizeArgs {
    std::string run;
    std::string table_path;
};

struct EmbedArgs {
    std::string run;
    std::string unit = "seconds";
    double t_cut = 1.0;
    std::size_t q = 1;
    double balance_tol = 0.2;
    std::size_t max_iter = 16;
    std::string dummy = "auto";
};

struct EncodeArgs {
    std::string run;
    std::string variant = "B";
    std::uint64_t split_seed = 1;
    double train_fraction = 0.8;
};

struct TrainArgs {
    std::string run;
    std::string variant;  // optional; must match the encoded dataset
    std::string hp_path;
    std::size_t epochs = 50;
    std::uint64_t seed = 1;
    std::string objective = "auto";
    std::size_t patience = 20;
};

struct TuneArgs {
    std::string run;
    std::string variant;  // optional; must match the encoded dataset
    std::size_t max_resource = 300;
    std::size_t eta = 3;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    std::string objective = "auto";
    std::size_t max_trials = 0;
    std::size_t patience = 20;
};

struct EvaluateArgs {
    std::string run;
    std::string checkpoint;
    std::string split = "val";
    std::string model_name;
};

struct ReportArgs {
    std::vector<std::string> runs;
};

// ---------------------------------------------------------------------------
// Stages

int cmd_synth(const SynthArgs& args) {
    fs::path run = resolve_run_dir(args.out);
    EventLog log;
    SchemaConfig schema;
    std::string table_csv;
    if (args.profile == "patients-like") {
        PatientsLikeConfig config;
        config.seed = args.seed;
        if (args.cases > 0) config.n_cases = args.cases;
        if (args.min_len > 0) config.min_length = args.min_len;
        if (args.max_len > 0) config.max_length = args.max_len;
        if (args.median_len > 0) config.median_length = args.median_len;
        log = generate_patients_like(config);
        schema = patients_like_schema();
        table_csv = patients_featurization_csv();
    } else if (args.profile == "bpic-like") {
        BpicLikeConfig config;
        config.seed = args.seed;
        if (args.cases_per_class > 0) config.cases_per_class = args.cases_per_class;
        if (args.min_len > 0) config.min_length = args.min_len;
        if (args.max_len > 0) config.max_length = args.max_len;
        if (args.median_len > 0) config.median_length = args.median_len;
        log = generate_bpic_like(config);
        schema = bpic_like_schema();
        table_csv = bpic12_featurization_csv();
    } else {
        throw std::runtime_error("unknown profile '" + args.profile +
                                 "' (expected patients-like or bpic-like)");
    }
    write_csv(log, (run / "log.csv").string(), schema);
    save_schema_config(schema, (run / "schema.cfg").string());
    {
        std::ofstream out(run / "featurization.csv");
        out << table_csv;
    }
    record_stage(run, "synth", {},
                 {(run / "log.csv").string(), (run / "schema.cfg").string(),
                  (run / "featurization.csv").string()});
    LogStats stats = log_stats(log);
    std::cout << "synth: " << stats.case_count << " cases, lengths " << stats.min_length << ".."
              << stats.max_length << " (median " << stats.median_length << "), "
              << log.n_classes() << " classes -> " << run << "\n";
    return 0;
}

int cmd_ingest(const IngestArgs& args) {
    fs::path run = resolve_run_dir(args.out);
    SchemaConfig schema = load_schema_config(args.schema_path);
    bool is_xes = fs::path(args.log_path).extension() == ".xes";
    EventLog log = is_xes ? xes_to_eventlog(args.log_path, schema)
                          : load_csv(args.log_path, schema);
    log = derive_durations(std::move(log));

    // pin the outcome label order so later stages agree with this ingest
    if (schema.columns.outcome_values.empty())
        schema.columns.outcome_values = log.outcome_labels;

    write_csv(log, (run / "log.csv").string(), schema);
    save_schema_config(schema, (run / "schema.cfg").string());

    LogStats stats = log_stats(log);
    json stats_json = {{"cases", stats.case_count},
                       {"events", log.total_events()},
                       {"min_length", stats.min_length},
                       {"max_length", stats.max_length},
                       {"median_length", stats.median_length},
                       {"classes", log.n_classes()},
                       {"class_counts", stats.class_counts},
                       {"outcome_labels", log.outcome_labels}};
    {
        std::ofstream out(run / "stats.json");
        out << stats_json.dump(2) << "\n";
    }
    record_stage(run, "ingest", {args.log_path},
                 {(run / "log.csv").string(), (run / "schema.cfg").string(),
                  (run / "stats.json").string()});
    std::cout << "ingest: " << stats.case_count << " cases, " << log.total_events()
              << " events, lengths " << stats.min_length << ".." << stats.max_length
              << " (median " << stats.median_length << ")\n";
    return 0;
}

int cmd_featurize(const FeaturizeArgs& args) {
    fs::path run = resolve_run_dir(args.run);
    if (!args.table_path.empty() &&
        (!fs::exists(run / "featurization.csv") ||
         !fs::equivalent(args.table_path, run / "featurization.csv")))
        fs::copy_file(args.table_path, run / "featurization.csv",
                      fs::copy_options::overwrite_existing);
    FeaturizationTable table = load_run_table(run);
    EventLog log = load_run_log(run);
    EventLog relabeled = relabel_log(std::move(log), table);

    SchemaConfig schema = load_schema_config((run / "schema.cfg").string());
    write_csv(relabeled, (run / "relabeled.csv").string(), schema);
    record_stage(run, "featurize",
                 {(run / "log.csv").string(), (run / "featurization.csv").string()},
                 {(run / "relabeled.csv").string()});

    std::set<std::string> tokens;
    for (const auto& c : relabeled.cases)
        for (const auto& e : c.events) tokens.insert(e.activity);
    std::cout << "featurize: " << table.entries.size() << " table rows, " << tokens.size()
              << " distinct relabeled tokens, k_max " << table.k_max << "\n";
    return 0;
}

int cmd_embed(const EmbedArgs& args) {
    fs::path run = resolve_run_dir(args.run);
    EventLog log = relabel_log(load_run_log(run), load_run_table(run));

    std::size_t universal_count = 0;
    for (const auto& spec : log.schema)
        if (spec.level == AttrLevel::event && spec.kind == AttrKind::categorical &&
            spec.universality == Universality::universal)
            ++universal_count;
    bool add_dummy = args.dummy == "on" || (args.dummy == "auto" && universal_count == 1);
    if (add_dummy) log = append_dummy_universal(std::move(log));

    BinningUnit unit;
    if (args.unit == "minutes") {
        unit.unit_seconds = 60.0;
        unit.ceil_to_int = true;
    } else if (args.unit != "seconds") {
        throw std::runtime_error("unknown duration unit '" + args.unit +
                                 "' (expected seconds or minutes)");
    }
    std::vector<double> durations;
    for (const auto& c : log.cases)
        for (const auto& e : c.events) durations.push_back(unit.to_units(*e.duration));
    DurationBinning binning =
        fit_duration_binning(durations, args.t_cut, args.q, args.balance_tol, args.max_iter);

    Corpus bin_corpus = build_duration_corpus(log, binning, unit);
    EmbeddingMatrix bin_matrix = tfidf_matrix(bin_corpus, tfidf_fit(bin_corpus));
    minmax_normalize(bin_matrix);
    save_embedding_matrix(bin_matrix, (run / "bin_matrix.txt").string());

    Corpus cor_corpus = build_correlation_corpus(log);
    EmbeddingMatrix cor_matrix = tfidf_matrix(cor_corpus, tfidf_fit(cor_corpus));
    minmax_normalize(cor_matrix);
    save_embedding_matrix(cor_matrix, (run / "cor_matrix.txt").string());

    json binning_json = {{"unit", args.unit},
                         {"t_cut", binning.t_cut},
                         {"unique_bins", binning.unique_bins},
                         {"quantile_edges", binning.quantile_edges},
                         {"frequencies", binning.frequencies},
                         {"total_bins", binning.total_bins()},
                         {"balanced", binning.balanced},
                         {"imbalance", binning.imbalance},
                         {"dummy_universal", add_dummy}};
    {
        std::ofstream out(run / "binning.json");
        out << binning_json.dump(2) << "\n";
    }
    record_stage(run, "embed",
                 {(run / "log.csv").string(), (run / "featurization.csv").string()},
                 {(run / "bin_matrix.txt").string(), (run / "cor_matrix.txt").string(),
                  (run / "binning.json").string()});
    std::cout << "embed: " << binning.total_bins() << " duration bins ("
              << binning.unique_bins.size() << " unique + " << binning.n_quantile_bins()
              << " quantile, " << (binning.balanced ? "balanced" : "NOT balanced")
              << "), bin vocab " << bin_matrix.n_cols() << ", cor vocab "
              << cor_matrix.n_cols() << "\n";
    return 0;
}

int cmd_encode(const EncodeArgs& args) {
    fs::path run = resolve_run_dir(args.run);
    Variant variant = variant_from_name(args.variant);
    EventLog log = relabel_log(load_run_log(run), load_run_table(run));

    EmbeddingMatrix bin_matrix, cor_matrix;
    EmbeddingInputs embeddings;
    std::vector<std::string> inputs = {(run / "log.csv").string(),
                                       (run / "featurization.csv").string()};
    if (variant_uses_bin(variant)) {
        if (!fs::exists(run / "bin_matrix.txt"))
            throw std::runtime_error("variant " + args.variant +
                                     " needs bin_matrix.txt; run `pbpm embed` first");
        bin_matrix = load_embedding_matrix((run / "bin_matrix.txt").string());
        embeddings.bin = &bin_matrix;
        inputs.push_back((run / "bin_matrix.txt").string());
    }
    if (variant_uses_cor(variant)) {
        cor_matrix = load_embedding_matrix((run / "cor_matrix.txt").string());
        embeddings.cor = &cor_matrix;
        inputs.push_back((run / "cor_matrix.txt").string());
    }

    AssembleConfig config;
    config.train_fraction = args.train_fraction;
    SplitDataset split = assemble(variant, log, embeddings, config, args.split_seed);
    save_dataset(split.train, (run / "train.ds").string());
    save_dataset(split.validation, (run / "val.ds").string());
    record_stage(run, "encode", inputs,
                 {(run / "train.ds").string(), (run / "val.ds").string()});
    std::cout << "encode: variant " << args.variant << ", train " << split.train.n_cases
              << " / val " << split.validation.n_cases << " cases, T_max "
              << split.train.max_steps << "\n";
    return 0;
}

void require_variant_match(const std::string& requested, const EncodedDataset& ds) {
    if (requested.empty()) return;
    Variant v = variant_from_name(requested);
    if (v == ds.variant) return;
    std::string message = "dataset is encoded for variant " + variant_name(ds.variant) +
                          ", not " + requested;
    if (variant_uses_bin(v) && ds.bin_width == 0)
        message += " (no duration-bin channel; run `pbpm embed` and `pbpm encode --variant " +
                   requested + "`)";
    else
        message += "; re-run `pbpm encode --variant " + requested + "`";
    throw std::runtime_error(message);
}

int cmd_train(const TrainArgs& args) {
    fs::path run = resolve_run_dir(args.run);
    EncodedDataset train_set = load_dataset((run / "train.ds").string());
    EncodedDataset val_set = load_dataset((run / "val.ds").string());
    require_variant_match(args.variant, train_set);

    HyperParams hp;
    if (!args.hp_path.empty()) {
        std::ifstream in(args.hp_path);
        if (!in) throw std::runtime_error("cannot open hyperparameters '" + args.hp_path + "'");
        std::ostringstream buf;
        buf << in.rdbuf();
        hp = hyperparams_from_json(buf.str());
    } else {
        std::mt19937_64 rng(args.seed);
        hp = sample_config(SearchSpace{args.seed}, train_set.variant, rng);
    }

    TrainOptions options;
    options.max_epochs = args.epochs;
    options.patience = args.patience;
    options.objective = resolve_objective(args.objective, train_set.labels,
                                          train_set.n_classes);

    StopWatch watch;
    Trainer trainer(hp, DatasetMeta::from(train_set), options, args.seed);
    trainer.run_epochs(train_set, val_set, args.epochs);
    if (trainer.run().failed) {
        std::cerr << "train: run diverged (non-finite loss)\n";
        return 1;
    }
    trainer.restore_best_weights();
    trainer.model().save_checkpoint((run / "checkpoint.bin").string());
    trainer.write_history((run / "history.tsv").string());
    record_stage(run, "train", {(run / "train.ds").string(), (run / "val.ds").string()},
                 {(run / "checkpoint.bin").string(), (run / "history.tsv").string()});
    std::cerr << "train: wall clock " << std::fixed << std::setprecision(1) << watch.seconds()
              << " s\n";
    std::cout << "train: " << trainer.run().history.size() << " epochs, best "
              << objective_name(options.objective) << " " << std::setprecision(4)
              << trainer.run().best_objective << " at epoch " << trainer.run().best_epoch
              << "\n";
    return 0;
}

int cmd_tune(const TuneArgs& args) {
    fs::path run = resolve_run_dir(args.run);
    EncodedDataset train_set = load_dataset((run / "train.ds").string());
    EncodedDataset val_set = load_dataset((run / "val.ds").string());
    require_variant_match(args.variant, train_set);

    HyperbandOptions options;
    options.max_resource = args.max_resource;
    options.eta = args.eta;
    options.seed = args.seed;
    options.workers = args.workers;
    options.max_trials = args.max_trials;
    options.patience = args.patience;
    options.objective = resolve_objective(args.objective, train_set.labels,
                                          train_set.n_classes);
    options.work_dir = (run / "trials").string();
    options.trial_log_path = (run / "trials.tsv").string();

    StopWatch watch;
    HyperbandResult result = hyperband(train_set, val_set, options);

    Trainer best = Trainer::load(result.best_state_path);
    best.restore_best_weights();
    best.model().save_checkpoint((run / "best_checkpoint.bin").string());
    {
        std::ofstream out(run / "best_hp.json");
        out << hyperparams_to_json(result.best.hp) << "\n";
    }
    record_stage(run, "tune", {(run / "train.ds").string(), (run / "val.ds").string()},
                 {(run / "trials.tsv").string(), (run / "best_checkpoint.bin").string(),
                  (run / "best_hp.json").string()});
    std::cerr << "tune: wall clock " << std::fixed << std::setprecision(1) << watch.seconds()
              << " s\n";
    std::cout << "tune: " << result.trials.size() << " trials, best trial " << result.best.id
              << " (" << objective_name(options.objective) << " " << std::setprecision(4)
              << *result.best.objective << ", budget " << result.best.budget << " epochs)\n";
    return 0;
}

int cmd_evaluate(const EvaluateArgs& args) {
    fs::path run = resolve_run_dir(args.run);
    std::string ckpt = args.checkpoint.empty()
                           ? (fs::exists(run / "best_checkpoint.bin")
                                  ? (run / "best_checkpoint.bin").string()
                                  : (run / "checkpoint.bin").string())
                           : args.checkpoint;
    HyperModel model = HyperModel::load_checkpoint(ckpt);

    std::string split_file = args.split == "train" ? "train.ds" : "val.ds";
    if (args.split != "train" && args.split != "val")
        throw std::runtime_error("unknown split '" + args.split + "' (expected train or val)");
    EncodedDataset ds = load_dataset((run / split_file).string());
    if (ds.variant != model.meta().variant)
        throw std::runtime_error("checkpoint variant " + variant_name(model.meta().variant) +
                                 " does not match dataset variant " + variant_name(ds.variant));

    std::vector<std::int32_t> predicted = model.predict_labels(ds);
    ConfusionMatrix cm = confusion_matrix(ds.labels, predicted, ds.n_classes);
    ClassificationReport report = classification_report(cm);

    std::string name = args.model_name.empty() ? variant_name(ds.variant) : args.model_name;
    std::vector<std::string> class_labels;
    for (int c = 0; c < ds.n_classes; ++c) class_labels.push_back(std::to_string(c));
    save_report(report, (run / ("report_" + name + ".json")).string(), class_labels, name);
    std::string text = render_report(report, class_labels);
    {
        std::ofstream out(run / ("report_" + name + ".txt"));
        out << text;
    }
    record_stage(run, "evaluate-" + name, {ckpt, (run / split_file).string()},
                 {(run / ("report_" + name + ".json")).string()});
    std::cout << "evaluate: model " << name << " on " << args.split << "\n" << text;
    return 0;
}

int cmd_report(const ReportArgs& args) {
    std::vector<std::string> dirs = args.runs;
    if (dirs.empty()) dirs.push_back("");  // fall back to $PBPM_OUT
    std::vector<std::pair<std::string, ClassificationReport>> reports;
    std::vector<std::vector<std::string>> label_sets;
    fs::path first_run;
    for (const auto& dir : dirs) {
        fs::path run = resolve_run_dir(dir);
        if (first_run.empty()) first_run = run;
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(run)) {
            std::string name = entry.path().filename().string();
            if (name.rfind("report_", 0) == 0 && entry.path().extension() == ".json")
                files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            std::vector<std::string> labels;
            std::string model;
            ClassificationReport rep = load_report(f.string(), &labels, &model);
            if (model.empty()) model = f.stem().string().substr(7);
            reports.push_back({model, rep});
            label_sets.push_back(labels);
        }
    }
    if (reports.empty()) throw std::runtime_error("no report_*.json artifacts found");

    std::ostringstream out;
    out << "Classification report by model\n";
    out << std::left << std::setw(8) << "class";
    for (const auto& [model, rep] : reports)
        out << std::right << std::setw(10) << (model + ":P") << std::setw(10) << (model + ":R")
            << std::setw(10) << (model + ":F1");
    out << std::right << std::setw(10) << "support\n";
    out << std::fixed << std::setprecision(4);
    std::size_t n_classes = reports.front().second.per_class.size();
    for (std::size_t c = 0; c < n_classes; ++c) {
        std::string label = c < label_sets.front().size() ? label_sets.front()[c]
                                                          : std::to_string(c);
        out << std::left << std::setw(8) << label;
        for (const auto& [model, rep] : reports) {
            const ClassMetrics& m = rep.per_class[c];
            out << std::right << std::setw(10) << m.precision << std::setw(10) << m.recall
                << std::setw(10) << m.f1;
        }
        out << std::right << std::setw(10) << reports.front().second.per_class[c].support
            << "\n";
    }
    out << "\n";
    out << std::left << std::setw(8) << "A";
    for (const auto& [model, rep] : reports)
        out << std::right << std::setw(30) << rep.accuracy;
    out << "\n" << std::left << std::setw(8) << "M";
    for (const auto& [model, rep] : reports)
        out << std::right << std::setw(10) << rep.macro_precision << std::setw(10)
            << rep.macro_recall << std::setw(10) << rep.macro_f1;
    out << "\n" << std::left << std::setw(8) << "W";
    for (const auto& [model, rep] : reports)
        out << std::right << std::setw(10) << rep.weighted_precision << std::setw(10)
            << rep.weighted_recall << std::setw(10) << rep.weighted_f1;
    out << "\n\nAccuracy scores by model\n";
    for (const auto& [model, rep] : reports)
        out << std::left << std::setw(12) << model << std::right << std::setw(8)
            << rep.accuracy << "\n";

    std::string text = out.str();
    {
        std::ofstream file(first_run / "tables.txt");
        file << text;
    }
    std::cout << text;
    return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
    CLI::App app{"Outcome-oriented predictive process monitoring pipeline"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a seeded synthetic event log");
    synth_cmd->add_option("--out", synth.out, "run directory (or $PBPM_OUT)");
    synth_cmd->add_option("--profile", synth.profile, "patients-like | bpic-like");
    synth_cmd->add_option("--seed", synth.seed, "generator seed");
    synth_cmd->add_option("--cases", synth.cases, "total cases (patients-like)");
    synth_cmd->add_option("--cases-per-class", synth.cases_per_class,
                          "cases per class (bpic-like)");
    synth_cmd->add_option("--min-len", synth.min_len, "minimum case length");
    synth_cmd->add_option("--max-len", synth.max_len, "maximum case length");
    synth_cmd->add_option("--median-len", synth.median_len, "target median case length");

    IngestArgs ingest;
    auto* ingest_cmd = app.add_subcommand("ingest", "Validate and normalize an event log");
    ingest_cmd->add_option("--log", ingest.log_path, "CSV or XES input")->required();
    ingest_cmd->add_option("--schema", ingest.schema_path, "schema config file")->required();
    ingest_cmd->add_option("--out", ingest.out, "run directory (or $PBPM_OUT)");

    FeaturizeArgs feat;
    auto* feat_cmd = app.add_subcommand("featurize", "Relabel activities via the table");
    feat_cmd->add_option("--run", feat.run, "run directory (or $PBPM_OUT)");
    feat_cmd->add_option("--table", feat.table_path, "featurization table (copied into run)");

    EmbedArgs embed;
    auto* embed_cmd = app.add_subcommand("embed", "Build duration/correlation pseudo-embeddings");
    embed_cmd->add_option("--run", embed.run, "run directory (or $PBPM_OUT)");
    embed_cmd->add_option("--unit", embed.unit, "duration unit: seconds | minutes");
    embed_cmd->add_option("--t-cut", embed.t_cut, "short/long duration threshold (in units)");
    embed_cmd->add_option("--q", embed.q, "quantile bin count");
    embed_cmd->add_option("--balance-tol", embed.balance_tol, "relative balance tolerance");
    embed_cmd->add_option("--max-iter", embed.max_iter, "balance loop iteration cap");
    embed_cmd->add_option("--dummy", embed.dummy,
                          "dummy universal attribute: auto | on | off");

    EncodeArgs encode;
    auto* encode_cmd = app.add_subcommand("encode", "Assemble padded tensors for a variant");
    encode_cmd->add_option("--run", encode.run, "run directory (or $PBPM_OUT)");
    encode_cmd->add_option("--variant", encode.variant, "B|FB|MB|D|FD|DC|T")->required();
    encode_cmd->add_option("--split-seed", encode.split_seed, "stratified split seed");
    encode_cmd->add_option("--train-fraction", encode.train_fraction, "train share (0..1)");

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Train one configuration");
    train_cmd->add_option("--run", train_args.run, "run directory (or $PBPM_OUT)");
    train_cmd->add_option("--variant", train_args.variant,
                          "expected variant (verified against the encoded dataset)");
    train_cmd->add_option("--hp", train_args.hp_path, "hyperparameters json (else sampled)");
    train_cmd->add_option("--epochs", train_args.epochs, "epoch budget");
    train_cmd->add_option("--seed", train_args.seed, "training seed");
    train_cmd->add_option("--objective", train_args.objective,
                          "auto | accuracy | weighted-f1");
    train_cmd->add_option("--patience", train_args.patience, "early stopping patience");

    TuneArgs tune_args;
    auto* tune_cmd = app.add_subcommand("tune", "Hyperband search");
    tune_cmd->add_option("--run", tune_args.run, "run directory (or $PBPM_OUT)");
    tune_cmd->add_option("--variant", tune_args.variant,
                          "expected variant (verified against the encoded dataset)");
    tune_cmd->add_option("--R", tune_args.max_resource, "maximum epochs per trial");
    tune_cmd->add_option("--eta", tune_args.eta, "reduction factor");
    tune_cmd->add_option("--seed", tune_args.seed, "search seed");
    tune_cmd->add_option("--workers", tune_args.workers, "parallel trial workers");
    tune_cmd->add_option("--objective", tune_args.objective, "auto | accuracy | weighted-f1");
    tune_cmd->add_option("--max-trials", tune_args.max_trials,
                         "cap on sampled configurations (0 = full schedule)");
    tune_cmd->add_option("--patience", tune_args.patience, "early stopping patience");

    EvaluateArgs eval_args;
    auto* eval_cmd = app.add_subcommand("evaluate", "Classification report for a checkpoint");
    eval_cmd->add_option("--run", eval_args.run, "run directory (or $PBPM_OUT)");
    eval_cmd->add_option("--checkpoint", eval_args.checkpoint,
                         "model checkpoint (default: best_checkpoint.bin or checkpoint.bin)");
    eval_cmd->add_option("--split", eval_args.split, "train | val");
    eval_cmd->add_option("--model-name", eval_args.model_name, "name used in report files");

    ReportArgs report_args;
    auto* report_cmd = app.add_subcommand("report", "Render combined result tables");
    report_cmd->add_option("--run", report_args.runs, "run directories (repeatable)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help();
        return 2;
    }

    try {
        if (synth_cmd->parsed()) return cmd_synth(synth);
        if (ingest_cmd->parsed()) return cmd_ingest(ingest);
        if (feat_cmd->parsed()) return cmd_featurize(feat);
        if (embed_cmd->parsed()) return cmd_embed(embed);
        if (encode_cmd->parsed()) return cmd_encode(encode);
        if (train_cmd->parsed()) return cmd_train(train_args);
        if (tune_cmd->parsed()) return cmd_tune(tune_args);
        if (eval_cmd->parsed()) return cmd_evaluate(eval_args);
        if (report_cmd->parsed()) return cmd_report(report_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace pbpm::cli
