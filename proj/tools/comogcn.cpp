#include <comogcn/config.hpp>
#include <comogcn/errors.hpp>
#include <comogcn/selftest.hpp>
#include <comogcn/synthetic.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace comogcn;

namespace {

struct Flags {
    std::string config;
    std::string data_dir;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> datasets;
    std::string test_set;
    std::optional<int> epochs;
    std::optional<double> lr;
    std::optional<int> batch;
    std::optional<double> beta;
    std::optional<int> variety;
    std::optional<int> samples;
    std::string checkpoint;
    bool mean_mode = false;
    bool include_test = false;
    int synthetic = 0;
    int max_windows = 0;
    bool full = false;
};

RunConfig resolve(const Flags& f) {
    RunConfig c = f.config.empty() ? RunConfig::defaults() : RunConfig::load(f.config);
    if (!f.data_dir.empty()) c.data_dir = f.data_dir;
    if (!f.out.empty()) c.output_dir = f.out;
    if (f.seed) c.train.seed = c.eval.seed = *f.seed;
    if (f.epochs) c.train.epochs = *f.epochs;
    if (f.lr) c.train.adam.lr = *f.lr;
    if (f.batch) c.train.batch_size = *f.batch;
    if (f.beta) c.train.beta = *f.beta;
    if (f.variety) c.train.variety_k = *f.variety;
    if (f.samples) c.eval.samples = *f.samples;
    if (f.mean_mode) c.eval.mean_mode = true;
    return c;
}

fs::path windows_path(const RunConfig& c, Dataset d) { return c.output_dir / "windows" / (std::string(to_string(d)) + ".txt"); }
fs::path labels_path(const RunConfig& c, Dataset d) { return c.output_dir / "labels" / (std::string(to_string(d)) + ".txt"); }
fs::path checkpoint_path(const RunConfig& c, Dataset d) {
    return c.output_dir / "checkpoints" / (std::string(to_string(d)) + ".ckpt");
}

const Dataset kAllDatasets[] = {Dataset::ETH, Dataset::HOTEL, Dataset::UNIV, Dataset::ZARA1, Dataset::ZARA2, Dataset::SYNTH};

std::vector<Dataset> requested(const Flags& f) {
    std::vector<Dataset> out;
    for (const auto& name : f.datasets) out.push_back(dataset_from_string(name));
    return out;
}

// Datasets named on the command line, or every dataset with an existing artifact.
template <typename PathFn>
std::vector<Dataset> select(const Flags& f, const RunConfig& c, PathFn path, const char* what) {
    auto chosen = requested(f);
    if (chosen.empty()) {
        for (Dataset d : kAllDatasets)
            if (fs::exists(path(c, d))) chosen.push_back(d);
        if (chosen.empty())
            throw ConfigError(std::string("no ") + what + " found under " + c.output_dir.string() +
                              "; run the earlier pipeline stage first");
    }
    for (Dataset d : chosen)
        if (!fs::exists(path(c, d))) throw ConfigError(std::string("missing ") + what + " " + path(c, d).string());
    return chosen;
}

const fs::path& ensure_parent(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    return path;
}

void write_text(const fs::path& path, const std::string& text) {
    ensure_parent(path);
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
}

std::vector<LabeledWindow> labeled(const RunConfig& c, Dataset d) {
    const auto windows = load_windows(windows_path(c, d));
    if (!fs::exists(labels_path(c, d)))
        throw ConfigError("missing labels " + labels_path(c, d).string() + "; run `comogcn label` first");
    const auto labels = load_labels(labels_path(c, d));
    return attach_labels(windows, labels);
}

int cmd_ingest(const Flags& f) {
    const RunConfig c = resolve(f);
    const ColumnOrder order = ColumnOrder::parse(c.column_order);

    if (f.synthetic > 0) {
        // Scenes are written as a raw annotation file and read back through
        // the regular parser so the synthetic path exercises ingestion too.
        const auto scenes = make_constant_velocity_scenes(c.train.seed, f.synthetic);
        std::ostringstream raw;
        raw << std::setprecision(17);
        for (std::size_t k = 0; k < scenes.size(); ++k) {
            auto w = scenes[k].window;
            for (auto& id : w.ped_ids) id += static_cast<PedId>(k) * 100;
            for (const auto& det : to_detections(w, static_cast<FrameId>(k) * 1000, c.windowing.frame_step))
                raw << det.frame_id << '\t' << det.ped_id << '\t' << det.x << '\t' << det.y << '\n';
        }
        const fs::path raw_path = c.output_dir / "raw" / "synth.txt";
        write_text(raw_path, raw.str());
        const auto windows = build_windows(parse_dataset(raw_path), Dataset::SYNTH, c.windowing);
        save_windows(ensure_parent(windows_path(c, Dataset::SYNTH)), windows);
        std::cout << "SYNTH: " << windows.size() << " windows -> " << windows_path(c, Dataset::SYNTH).string() << '\n';
        return 0;
    }

    auto chosen = requested(f);
    const bool explicit_choice = !chosen.empty();
    if (!explicit_choice) chosen.assign(std::begin(kBenchmarkDatasets), std::end(kBenchmarkDatasets));
    int written = 0;
    for (Dataset d : chosen) {
        const auto files = c.files_for(d);
        bool present = !files.empty();
        for (const auto& p : files) present = present && fs::exists(p);
        if (!present) {
            if (explicit_choice) {
                throw ConfigError("missing input for " + std::string(to_string(d)) + ": " +
                                  (files.empty() ? std::string("no files configured") : files.front().string()));
            }
            continue;
        }
        std::vector<TrajectoryWindow> windows;
        for (const auto& p : files) {
            auto part = build_windows(parse_dataset(p, order), d, c.windowing);
            const auto offset = static_cast<std::int64_t>(windows.size());
            for (auto& w : part) {
                w.window_id += offset;
                windows.push_back(std::move(w));
            }
        }
        save_windows(ensure_parent(windows_path(c, d)), windows);
        std::cout << to_string(d) << ": " << windows.size() << " windows -> " << windows_path(c, d).string() << '\n';
        ++written;
    }
    if (written == 0) {
        throw ConfigError("no dataset files found under " + c.data_dir.string() + " (set --data-dir or " +
                          kDataDirEnv + ")");
    }
    return 0;
}

int cmd_label(const Flags& f) {
    const RunConfig c = resolve(f);
    for (Dataset d : select(f, c, windows_path, "windows")) {
        const auto windows = load_windows(windows_path(c, d));
        std::vector<GroupLabeling> labels;
        labels.reserve(windows.size());
        for (const auto& w : windows) labels.push_back(hybrid_label(w, c.cf_params(d), c.dbscan_params(d)));
        save_labels(ensure_parent(labels_path(c, d)), labels);
        if (labels.empty()) {
            std::cout << to_string(d) << ": no windows\n";
            continue;
        }
        const auto rates = labeling_stats(labels);
        std::cout << to_string(d) << ": " << std::fixed << std::setprecision(1) << 100.0 * rates.hybrid_rate()
                  << "% labeled (" << 100.0 * rates.cf_rate() << "% by coherent filter) -> "
                  << labels_path(c, d).string() << '\n';
    }
    return 0;
}

int cmd_label_stats(const Flags& f) {
    const RunConfig c = resolve(f);
    std::vector<LabelRateRow> rows;
    for (Dataset d : select(f, c, labels_path, "labels")) {
        const auto labels = load_labels(labels_path(c, d));
        if (labels.empty()) throw ConfigError("labels for " + std::string(to_string(d)) + " are empty");
        rows.push_back({d, labeling_stats(labels)});
    }
    std::ostringstream table;
    write_label_rate_table(table, rows);
    write_text(c.output_dir / "reports" / "label_rates.txt", table.str());
    std::cout << table.str();
    return 0;
}

int cmd_train(const Flags& f) {
    const RunConfig c = resolve(f);
    const Dataset test = dataset_from_string(f.test_set);
    std::map<Dataset, std::vector<TrajectoryWindow>> all;
    std::map<Dataset, std::vector<GroupLabeling>> labels;
    for (Dataset d : kAllDatasets) {
        if (!fs::exists(windows_path(c, d))) continue;
        all[d] = load_windows(windows_path(c, d));
        if (!fs::exists(labels_path(c, d)))
            throw ConfigError("missing labels " + labels_path(c, d).string() + "; run `comogcn label` first");
        labels[d] = load_labels(labels_path(c, d));
    }
    const auto split = leave_one_out_split(all, test);
    for (const auto& w : split.warnings) std::cerr << "comogcn: warning: " << w << '\n';

    // Window ids restart per dataset, so labels are attached dataset by dataset.
    std::vector<LabeledWindow> data;
    for (const auto& [d, windows] : all) {
        if (d == test && !f.include_test) continue;
        auto part = attach_labels(windows, labels.at(d));
        data.insert(data.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    if (data.empty()) throw ConfigError("training set is empty; pass --include-test for single-dataset smoke runs");

    std::ostringstream curve;
    curve << "epoch\tloss\n" << std::setprecision(17);
    const auto result = nn::train(data, c.train, [&](int epoch, double loss) {
        curve << epoch << '\t' << loss << '\n';
        if (epoch % 10 == 0 || epoch + 1 == c.train.epochs)
            std::cerr << "epoch " << epoch << " loss " << std::setprecision(6) << loss << '\n';
    });

    const fs::path ckpt = f.checkpoint.empty() ? checkpoint_path(c, test) : fs::path(f.checkpoint);
    nn::save_checkpoint(ensure_parent(ckpt), result.params);
    fs::path curve_path = ckpt;
    curve_path.replace_extension(".loss.tsv");
    write_text(curve_path, curve.str());
    std::cout << "trained on " << data.size() << " windows; checkpoint -> " << ckpt.string() << "; loss curve -> "
              << curve_path.string() << '\n';
    return 0;
}

nn::ParameterSet checkpoint_for(const Flags& f, const RunConfig& c, Dataset d) {
    const fs::path p = f.checkpoint.empty() ? checkpoint_path(c, d) : fs::path(f.checkpoint);
    if (!fs::exists(p)) throw ConfigError("missing checkpoint " + p.string() + "; run `comogcn train` first");
    return nn::load_checkpoint(p);
}

int cmd_eval(const Flags& f) {
    const RunConfig c = resolve(f);
    std::vector<Dataset> sets;
    if (!f.test_set.empty()) {
        sets.push_back(dataset_from_string(f.test_set));
    } else {
        sets = select(f, c, checkpoint_path, "checkpoints");
    }
    std::vector<EvalReport> reports;
    for (Dataset d : sets) {
        const auto params = checkpoint_for(f, c, d);
        reports.push_back(best_of_n(params, labeled(c, d), c.eval));
        reports.back().dataset = d;
    }
    std::ostringstream table;
    write_eval_table(table, reports);
    write_text(c.output_dir / "reports" / "eval.txt", table.str());
    std::cout << table.str();
    return 0;
}

int cmd_frechet(const Flags& f) {
    const RunConfig c = resolve(f);
    std::vector<SimilarityRow> rows;
    for (Dataset d : select(f, c, labels_path, "labels")) {
        const auto hybrid = labeled(c, d);
        std::vector<LabeledWindow> cf = hybrid;
        for (auto& lw : cf) lw.labels = lw.labels.cf_only();
        rows.push_back({d, group_similarity_report(cf), group_similarity_report(hybrid)});
    }
    std::ostringstream table;
    write_similarity_table(table, rows);
    write_text(c.output_dir / "reports" / "frechet.txt", table.str());
    std::cout << table.str();
    return 0;
}

int cmd_plot_data(const Flags& f) {
    const RunConfig c = resolve(f);
    const Dataset d = dataset_from_string(f.test_set);
    const auto params = checkpoint_for(f, c, d);
    const auto data = labeled(c, d);
    std::ostringstream tsv;
    tsv << "window_id\tped_id\tkind\tstep\tx\ty\n" << std::setprecision(17);
    auto emit = [&](const EgoPrediction& p, const char* kind, const Trajectory& t, int first_step) {
        for (Eigen::Index k = 0; k < t.rows(); ++k)
            tsv << p.window_id << '\t' << p.ped_id << '\t' << kind << '\t' << first_step + k << '\t' << t(k, 0)
                << '\t' << t(k, 1) << '\n';
    };
    const std::size_t limit = f.max_windows > 0 ? std::min(data.size(), std::size_t(f.max_windows)) : data.size();
    for (std::size_t k = 0; k < limit; ++k) {
        for (const auto& p : predict_window(params, data[k], k, c.eval)) {
            const int obs = static_cast<int>(p.observed.rows());
            emit(p, "observed", p.observed, 0);
            emit(p, "truth", p.truth, obs);
            emit(p, "best", p.best, obs);
            emit(p, "mean", p.mean_mode, obs);
        }
    }
    const fs::path path = c.output_dir / "plots" / (std::string(to_string(d)) + ".tsv");
    write_text(path, tsv.str());
    std::cout << limit << " windows -> " << path.string() << '\n';
    return 0;
}

int cmd_selftest(const Flags& f) {
    selftest::SelftestOptions o;
    if (f.seed) o.seed = *f.seed;
    o.quick = !f.full;
    const auto results = selftest::run_all(o, std::cout);
    int failed = 0;
    for (const auto& r : results) failed += r.passed ? 0 : 1;
    std::cout << (failed ? "selftest FAILED (" + std::to_string(failed) + " checks)" : std::string("selftest passed"))
              << '\n';
    return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coherent-motion group-aware trajectory forecasting pipeline"};
    app.require_subcommand(1);
    app.fallthrough();
    Flags f;

    app.add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--data-dir", f.data_dir, std::string("Raw annotation directory (default $") + kDataDirEnv + ")");
    app.add_option("--out", f.out, "Output directory (default comogcn_out)");
    app.add_option("--seed", f.seed, "Seed for training, sampling and synthetic scenes");

    auto* ingest = app.add_subcommand("ingest", "Parse raw annotations into cached windows");
    ingest->add_option("--dataset", f.datasets, "Datasets to ingest (default: every one whose files exist)");
    ingest->add_option("--synthetic", f.synthetic, "Generate N constant-velocity scenes as dataset SYNTH instead");

    auto* label = app.add_subcommand("label", "Hybrid coherent-motion labeling of cached windows");
    label->add_option("--dataset", f.datasets, "Datasets to label");

    auto* stats = app.add_subcommand("label-stats", "Labeling-rate table");
    stats->add_option("--dataset", f.datasets, "Datasets to report");

    auto* train = app.add_subcommand("train", "Leave-one-out training");
    train->add_option("--test-set", f.test_set, "Held-out dataset")->required();
    train->add_option("--epochs", f.epochs);
    train->add_option("--lr", f.lr);
    train->add_option("--batch", f.batch);
    train->add_option("--beta", f.beta, "KL weight");
    train->add_option("--variety", f.variety, "Best-of-k training");
    train->add_option("--checkpoint", f.checkpoint, "Checkpoint path (default <out>/checkpoints/<TEST>.ckpt)");
    train->add_flag("--include-test", f.include_test, "Also train on the held-out windows (smoke runs)");

    auto* eval = app.add_subcommand("eval", "Best-of-n ADE/FDE report");
    eval->add_option("--test-set", f.test_set, "Dataset to evaluate (default: every one with a checkpoint)");
    eval->add_option("--samples", f.samples);
    eval->add_option("--checkpoint", f.checkpoint);
    eval->add_flag("--mean-mode", f.mean_mode, "Decode from the latent mean only");

    auto* frechet = app.add_subcommand("frechet-report", "Intra/inter-group Frechet similarity table");
    frechet->add_option("--dataset", f.datasets, "Datasets to report");

    auto* plot = app.add_subcommand("plot-data", "Observed/true/predicted trajectories as TSV");
    plot->add_option("--test-set", f.test_set, "Dataset")->required();
    plot->add_option("--samples", f.samples);
    plot->add_option("--checkpoint", f.checkpoint);
    plot->add_option("--max-windows", f.max_windows, "Limit the number of windows");

    auto* self = app.add_subcommand("selftest", "Gradient and oracle property checks");
    self->add_flag("--full", f.full, "Full trial counts (about two minutes)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "comogcn: error: " << e.what() << "\nRun with --help for more information.\n";
        return e.get_exit_code();
    }

    try {
        if (*ingest) return cmd_ingest(f);
        if (*label) return cmd_label(f);
        if (*stats) return cmd_label_stats(f);
        if (*train) return cmd_train(f);
        if (*eval) return cmd_eval(f);
        if (*frechet) return cmd_frechet(f);
        if (*plot) return cmd_plot_data(f);
        if (*self) return cmd_selftest(f);
    } catch (const std::exception& e) {
        std::cerr << "comogcn: error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
