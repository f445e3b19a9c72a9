// Acceptance run: one PASS/FAIL/SKIP line per criterion. Exits nonzero when
// any criterion fails.
#include <comogcn/config.hpp>
#include <comogcn/eval.hpp>
#include <comogcn/selftest.hpp>
#include <comogcn/synthetic.hpp>

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace comogcn;

namespace {

enum class Verdict { PASS, FAIL, SKIP };

int failures = 0;

void report(int id, const std::string& name, Verdict v, const std::string& detail) {
    const char* tag = v == Verdict::PASS ? "PASS" : v == Verdict::FAIL ? "FAIL" : "SKIP";
    if (v == Verdict::FAIL) ++failures;
    std::cout << tag << " [" << id << "] " << name << ": " << detail << std::endl;
}

void report(int id, const selftest::CheckResult& r, double budget_seconds = 0.0) {
    std::ostringstream d;
    d << r.detail << " (" << std::fixed << std::setprecision(1) << r.seconds << " s";
    bool ok = r.passed;
    if (budget_seconds > 0) {
        d << ", budget " << budget_seconds << " s";
        ok = ok && r.seconds < budget_seconds;
    }
    d << ")";
    report(id, r.name, ok ? Verdict::PASS : Verdict::FAIL, d.str());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void training_smoke() {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<LabeledWindow> data;
    for (auto& s : make_constant_velocity_scenes(2024, 100)) {
        GroupLabeling l = hybrid_label(s.window, {}, {});
        data.push_back({std::move(s.window), std::move(l)});
    }
    nn::TrainConfig cfg;  // lr 1e-4, batch 64, 200 epochs
    cfg.seed = 1;
    const auto trained = nn::train(data, cfg);
    EvalOptions eo;
    eo.samples = 20;
    eo.seed = 1;
    const auto r = best_of_n(trained.params, data, eo);
    const double secs = seconds_since(t0);

    std::ostringstream d;
    d << std::setprecision(4) << "best-of-20 ADE " << r.ade << " m (target < 0.1), FDE " << r.fde << " over "
      << r.n_pairs << " pairs; loss " << trained.epoch_loss.front() << " -> " << trained.epoch_loss.back() << " ("
      << std::setprecision(3) << trained.epoch_loss.front() / trained.epoch_loss.back() << "x); " << std::fixed
      << std::setprecision(1) << secs << " s (budget 900 s)";
    report(5, "training_smoke", r.ade < 0.1 && secs < 900.0 ? Verdict::PASS : Verdict::FAIL, d.str());
}

void real_data_rates() {
    const auto cfg = RunConfig::defaults();
    const char* env = std::getenv(kDataDirEnv);
    for (Dataset d : kBenchmarkDatasets) {
        for (const auto& p : cfg.files_for(d)) {
            if (!env || !std::filesystem::exists(p)) {
                report(7, "labeling_rates", Verdict::SKIP,
                       std::string("benchmark files not found (set ") + kDataDirEnv + "; looked for " + p.string() +
                           ")");
                return;
            }
        }
    }

    const auto order = ColumnOrder::parse(cfg.column_order);
    bool ok = true;
    std::ostringstream d;
    d << std::fixed << std::setprecision(1);
    double cf_intra_sum = 0.0, hy_intra_sum = 0.0;
    int intra_count = 0;
    for (Dataset ds : kBenchmarkDatasets) {
        std::vector<LabeledWindow> data;
        for (const auto& p : cfg.files_for(ds)) {
            for (auto& w : build_windows(parse_dataset(p, order), ds, cfg.windowing)) {
                w.window_id = static_cast<std::int64_t>(data.size());
                GroupLabeling l = hybrid_label(w, cfg.cf_params(ds), cfg.dbscan_params(ds));
                data.push_back({std::move(w), std::move(l)});
            }
        }
        std::vector<GroupLabeling> labels;
        std::vector<LabeledWindow> cf_data;
        for (const auto& lw : data) {
            labels.push_back(lw.labels);
            cf_data.push_back({lw.window, lw.labels.cf_only()});
        }
        const auto rates = labeling_stats(labels);
        const auto ref = *published_reference(ds);
        const double hybrid = 100.0 * rates.hybrid_rate();
        const double cf = 100.0 * rates.cf_rate();
        const bool rate_ok = std::abs(hybrid - ref.hybrid_rate) <= 10.0 && hybrid > cf;

        const auto hy_sim = group_similarity_report(data);
        const auto cf_sim = group_similarity_report(cf_data);
        const bool order_ok = hy_sim.intra_avg && hy_sim.inter_avg && *hy_sim.intra_avg < *hy_sim.inter_avg;
        if (hy_sim.intra_avg && cf_sim.intra_avg) {
            hy_intra_sum += *hy_sim.intra_avg;
            cf_intra_sum += *cf_sim.intra_avg;
            ++intra_count;
        }
        ok = ok && rate_ok && order_ok;
        d << to_string(ds) << " cf " << cf << "% hybrid " << hybrid << "% (ref " << ref.hybrid_rate << ")"
          << (rate_ok ? "" : " OUT") << std::setprecision(2) << " intra/inter "
          << hy_sim.intra_avg.value_or(NAN) << "/" << hy_sim.inter_avg.value_or(NAN) << (order_ok ? "" : " BAD")
          << std::setprecision(1) << "; ";
    }
    const bool avg_ok = intra_count > 0 && hy_intra_sum <= cf_intra_sum;
    d << std::setprecision(2) << "mean intra hybrid " << hy_intra_sum / std::max(intra_count, 1) << " vs cf "
      << cf_intra_sum / std::max(intra_count, 1);
    report(7, "labeling_rates", ok && avg_ok ? Verdict::PASS : Verdict::FAIL, d.str());
}

}  // namespace

int main(int argc, char** argv) {
    std::uint64_t seed = 7;
    bool skip_training = false;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--seed") == 0 && i + 1 < argc) seed = std::stoull(argv[++i]);
        else if (std::strcmp(argv[i], "--skip-training") == 0) skip_training = true;
    }

    selftest::GradientOptions grad;
    grad.seed = seed;
    report(1, selftest::check_gradients(grad), 120.0);
    report(2, selftest::check_clustering_oracle(1000, 6, seed));
    report(3, selftest::check_graph_invariants(1000, 8, seed));
    report(4, selftest::check_ego_invariance(50, seed));
    if (skip_training) report(5, "training_smoke", Verdict::SKIP, "--skip-training given");
    else training_smoke();
    report(6, selftest::check_metrics(500, 6, seed));
    real_data_rates();
    report(8, "published_benchmark", Verdict::SKIP,
           "informational only; the eval subcommand prints the published ADE/FDE next to measured values");
    std::cout << (failures ? "acceptance: " + std::to_string(failures) + " criterion(s) failed" : "acceptance: all "
                                                                                                "criteria met")
              << std::endl;
    return failures ? 1 : 0;
}
