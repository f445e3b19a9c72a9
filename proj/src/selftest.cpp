#include <comogcn/selftest.hpp>

#include <comogcn/eval.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

namespace comogcn::selftest {

namespace {

using Clock = std::chrono::steady_clock;

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int pick(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

std::vector<int> random_permutation(std::mt19937_64& rng, int n) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    return perm;
}

nn::ParameterSet random_parameters(std::mt19937_64& rng) {
    auto params = nn::ParameterSet::initialize(rng());
    for (nn::Tensor* t : params.tensors()) {
        if (!t->name.ends_with(".bias")) continue;
        for (Eigen::Index k = 0; k < t->value.size(); ++k) t->value.data()[k] = uniform(rng, -0.1, 0.1);
    }
    return params;
}

TrajectoryWindow permuted_window(const TrajectoryWindow& w, const std::vector<int>& perm) {
    std::vector<PedId> ids;
    std::vector<Trajectory> abs;
    for (int k : perm) {
        ids.push_back(w.ped_ids[static_cast<std::size_t>(k)]);
        abs.push_back(w.abs[static_cast<std::size_t>(k)]);
    }
    return make_window(w.window_id, w.dataset, std::move(ids), std::move(abs), w.obs_len, w.pred_len);
}

CheckResult finish(CheckResult r, Clock::time_point start) {
    r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return r;
}

}  // namespace

TrajectoryWindow random_scene(std::mt19937_64& rng, int n, std::int64_t window_id, int obs_len, int pred_len) {
    const int len = obs_len + pred_len;
    std::vector<PedId> ids;
    std::vector<Trajectory> abs;
    Eigen::Vector2d shared(uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5));
    for (int i = 0; i < n; ++i) {
        Eigen::Vector2d v = (i % 2 == 0) ? shared : Eigen::Vector2d(uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5));
        Trajectory t(len, 2);
        Eigen::RowVector2d pos(uniform(rng, -4.0, 4.0), uniform(rng, -4.0, 4.0));
        for (int k = 0; k < len; ++k) {
            t.row(k) = pos;
            pos += v.transpose() + Eigen::RowVector2d(uniform(rng, -0.05, 0.05), uniform(rng, -0.05, 0.05));
        }
        ids.push_back(10 + 3 * i);
        abs.push_back(std::move(t));
    }
    return make_window(window_id, Dataset::SYNTH, std::move(ids), std::move(abs), obs_len, pred_len);
}

std::vector<Trajectory> random_clustering_tracks(std::mt19937_64& rng, int n, int frames) {
    std::vector<Trajectory> tracks;
    while (static_cast<int>(tracks.size()) < n) {
        const int kind = pick(rng, 0, 3);
        const int members = kind == 0 ? std::min(pick(rng, 2, 3), n - static_cast<int>(tracks.size())) : 1;
        const double heading = uniform(rng, -M_PI, M_PI);
        const double speed = kind == 2 ? 0.0 : uniform(rng, 0.1, 0.7);
        const Eigen::RowVector2d base(uniform(rng, -5.0, 5.0), uniform(rng, -5.0, 5.0));
        const double jitter = kind == 0 ? uniform(rng, 0.0, 0.12) : 0.0;
        for (int m = 0; m < members; ++m) {
            Trajectory t(frames, 2);
            Eigen::RowVector2d pos = base + Eigen::RowVector2d(uniform(rng, -1.5, 1.5), uniform(rng, -1.5, 1.5));
            for (int f = 0; f < frames; ++f) {
                t.row(f) = pos;
                Eigen::RowVector2d step(speed * std::cos(heading), speed * std::sin(heading));
                if (kind == 0) step += Eigen::RowVector2d(uniform(rng, -jitter, jitter), uniform(rng, -jitter, jitter));
                if (kind == 3) step = Eigen::RowVector2d(uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5));
                pos += step;
            }
            tracks.push_back(std::move(t));
        }
    }
    return tracks;
}

std::vector<int> random_groups(std::mt19937_64& rng, int n) {
    const int max_group = pick(rng, 0, std::max(0, n - 1));
    std::vector<int> groups(static_cast<std::size_t>(n));
    for (auto& g : groups) g = pick(rng, -1, max_group);
    return groups;
}

CheckResult check_gradients(const GradientOptions& options) {
    const auto start = Clock::now();
    CheckResult r{"gradient oracle", true, {}, 0.0};
    std::mt19937_64 rng(options.seed);
    double worst = 0.0;
    std::string worst_where;
    std::size_t checked = 0;
    for (int s = 0; s < options.scenes; ++s) {
        const int n = pick(rng, options.min_n, options.max_n);
        const auto window = random_scene(rng, n, s);
        const auto params = random_parameters(rng);
        const int ego = pick(rng, 0, n - 1);
        const auto adj = build_masked_adjacency(random_groups(rng, n), ego);
        const Eigen::VectorXd eps = nn::draw_standard_normal(rng);
        const Trajectory gt = window.rel[static_cast<std::size_t>(ego)].bottomRows(window.pred_len);
        const auto g = oracle::finite_difference_check(params, window, adj, eps, gt, options.beta, options.step);
        checked += g.checked;
        if (g.max_rel_error > worst) {
            worst = g.max_rel_error;
            std::ostringstream w;
            w << g.worst_tensor << "[" << g.worst_index << "] analytic " << g.worst_analytic << " numeric "
              << g.worst_numeric << " (scene " << s << ", N=" << n << ")";
            worst_where = w.str();
        }
    }
    r.passed = worst <= options.tolerance;
    std::ostringstream d;
    d << options.scenes << " scenes, " << checked << " partials, max rel err " << worst << " at " << worst_where;
    r.detail = d.str();
    return finish(r, start);
}

CheckResult check_clustering_oracle(int windows, int max_n, std::uint64_t seed) {
    const auto start = Clock::now();
    CheckResult r{"clustering oracle", true, {}, 0.0};
    std::mt19937_64 rng(seed);
    int cf_groups = 0, db_groups = 0, mismatches = 0;
    std::string first_failure;
    for (int w = 0; w < windows; ++w) {
        const int n = pick(rng, 1, max_n);
        const int frames = pick(rng, 0, 3) == 0 ? 8 : 5;
        const auto tracks = random_clustering_tracks(rng, n, frames);

        CoherentFilterParams cf;
        DbscanParams db;
        if (w % 2 == 1) {
            cf.k_max = pick(rng, 1, 5);
            cf.lambda = uniform(rng, 0.3, 0.95);
            db.theta = uniform(rng, 0.1, 1.2);
            db.s_lateral = uniform(rng, 0.5, 3.0);
            db.s_longitudinal = uniform(rng, 1.0, 6.0);
            db.min_pts = pick(rng, 1, 3);
        }

        const auto got_nn = invariant_neighbors(tracks, cf.k_max);
        const auto want_nn = oracle::invariant_neighbors(tracks, cf.k_max);
        const auto got_cf = coherent_filter(tracks, cf);
        const auto want_cf = oracle::coherent_filter(tracks, cf);
        const auto got_db = dbscan_refine(tracks, db);
        const auto want_db = oracle::dbscan(tracks, db);

        // Hybrid: compose the two oracle stages by hand.
        std::vector<Trajectory> padded;
        for (const auto& t : tracks) {
            Trajectory p(frames + 1, 2);
            p.topRows(frames) = t;
            p.row(frames) = t.row(frames - 1);
            padded.push_back(std::move(p));
        }
        std::vector<PedId> ids(static_cast<std::size_t>(n));
        std::iota(ids.begin(), ids.end(), 100);
        const auto window = make_window(w, Dataset::SYNTH, ids, padded, frames, 1);
        cf.window_frames = frames;
        const auto hybrid = hybrid_label(window, cf, db);
        std::vector<int> want_hybrid = want_cf;
        std::vector<Trajectory> rest;
        std::vector<std::size_t> rest_idx;
        for (std::size_t i = 0; i < tracks.size(); ++i) {
            if (want_cf[i] == kNoise) {
                rest.push_back(tracks[i]);
                rest_idx.push_back(i);
            }
        }
        const int offset = want_cf.empty() ? 0 : *std::max_element(want_cf.begin(), want_cf.end()) + 1;
        const auto rest_db = oracle::dbscan(rest, db);
        for (std::size_t k = 0; k < rest.size(); ++k)
            if (rest_db[k] != kNoise) want_hybrid[rest_idx[k]] = offset + rest_db[k];

        const bool ok = got_nn == want_nn && got_cf == want_cf && got_db == want_db &&
                        hybrid.groups_in_order(ids) == want_hybrid;
        if (!ok) {
            ++mismatches;
            if (first_failure.empty()) first_failure = " first mismatch at window " + std::to_string(w);
        }
        cf_groups += offset;
        db_groups += want_db.empty() ? 0 : *std::max_element(want_db.begin(), want_db.end()) + 1;
    }
    r.passed = mismatches == 0;
    r.detail = std::to_string(windows) + " windows, " + std::to_string(mismatches) + " mismatches, " +
               std::to_string(cf_groups) + " CF groups, " + std::to_string(db_groups) + " DBSCAN clusters" +
               first_failure;
    return finish(r, start);
}

CheckResult check_graph_invariants(int labelings, int max_n, std::uint64_t seed) {
    const auto start = Clock::now();
    CheckResult r{"graph invariants", true, {}, 0.0};
    std::mt19937_64 rng(seed);
    double worst_row = 0.0, worst_perm = 0.0;
    int failures = 0;
    for (int k = 0; k < labelings; ++k) {
        const int n = pick(rng, 1, max_n);
        const auto groups = random_groups(rng, n);
        const int ego = pick(rng, 0, n - 1);
        MaskOptions opts;
        opts.inter_self_loop = k % 4 != 3;  // exercises the zero-row fallback
        const auto adj = build_masked_adjacency(groups, ego, opts);
        for (const Eigen::MatrixXd* m : {&adj.intra, &adj.inter}) {
            if (!m->allFinite() || (m->array() < 0.0).any()) ++failures;
            worst_row = std::max(worst_row, (m->rowwise().sum().array() - 1.0).abs().maxCoeff());
        }
        if (adj.intra(ego, ego) <= 0.0) ++failures;

        const auto [intra_mask, inter_mask] = coherence_masks(groups, ego, opts);
        for (int j = 0; j < n; ++j) {
            if (j == ego) continue;
            if (intra_mask(0, j) + inter_mask(0, j) != 1.0) ++failures;
        }

        const auto perm = random_permutation(rng, n);
        std::vector<int> pgroups(static_cast<std::size_t>(n));
        int pego = -1;
        for (int i = 0; i < n; ++i) {
            pgroups[static_cast<std::size_t>(i)] = groups[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
            if (perm[static_cast<std::size_t>(i)] == ego) pego = i;
        }
        const auto padj = build_masked_adjacency(pgroups, pego, opts);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const auto pi = perm[static_cast<std::size_t>(i)], pj = perm[static_cast<std::size_t>(j)];
                worst_perm = std::max({worst_perm, std::abs(padj.intra(i, j) - adj.intra(pi, pj)),
                                       std::abs(padj.inter(i, j) - adj.inter(pi, pj))});
            }
        }
    }
    r.passed = failures == 0 && worst_row <= 1e-12 && worst_perm <= 1e-10;
    std::ostringstream d;
    d << labelings << " labelings, max |row sum - 1| " << worst_row << ", max permutation deviation " << worst_perm
      << ", " << failures << " structural failures";
    r.detail = d.str();
    return finish(r, start);
}

CheckResult check_ego_invariance(int scenes, std::uint64_t seed, double tolerance) {
    const auto start = Clock::now();
    CheckResult r{"ego invariance", true, {}, 0.0};
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (int s = 0; s < scenes; ++s) {
        const int n = pick(rng, 2, 6);
        const auto window = random_scene(rng, n, s);
        const auto params = random_parameters(rng);
        const auto groups = random_groups(rng, n);
        const int ego = pick(rng, 0, n - 1);

        auto evaluate = [&](const TrajectoryWindow& w, const std::vector<int>& g, int e) {
            const auto adj = build_masked_adjacency(g, e);
            const auto enc = nn::encode_scene(w, params);
            const auto v = nn::aggregate_interactions(enc.e, enc.p.row(e).transpose(), adj, params);
            const auto q = nn::latent_mean(v, params);
            return std::make_tuple(v.intra, v.inter, nn::predict_positions(params, w, e, q.z));
        };
        const auto [intra, inter, pred] = evaluate(window, groups, ego);

        const auto perm = random_permutation(rng, n);
        std::vector<int> pgroups;
        int pego = -1;
        for (int i = 0; i < n; ++i) {
            pgroups.push_back(groups[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]);
            if (perm[static_cast<std::size_t>(i)] == ego) pego = i;
        }
        const auto [pintra, pinter, ppred] = evaluate(permuted_window(window, perm), pgroups, pego);
        worst = std::max({worst, (intra - pintra).cwiseAbs().maxCoeff(), (inter - pinter).cwiseAbs().maxCoeff(),
                          (pred - ppred).cwiseAbs().maxCoeff()});
    }
    r.passed = worst <= tolerance;
    std::ostringstream d;
    d << scenes << " scenes, max deviation " << worst;
    r.detail = d.str();
    return finish(r, start);
}

CheckResult check_metrics(int frechet_trials, int max_points, std::uint64_t seed) {
    const auto start = Clock::now();
    CheckResult r{"metrics", true, {}, 0.0};
    std::vector<std::string> failures;

    Trajectory gt(12, 2);
    for (int t = 0; t < 12; ++t) gt.row(t) << 0.4 * t, -0.1 * t;
    const auto same = displacement_errors(gt, gt);
    if (same.ade != 0.0 || same.fde != 0.0) failures.push_back("identical trajectories");
    Trajectory shifted = gt;
    shifted.col(0).array() += 1.0;
    const auto off = displacement_errors(shifted, gt);
    if (std::abs(off.ade - 1.0) > 1e-12 || std::abs(off.fde - 1.0) > 1e-12) failures.push_back("unit offset");
    Trajectory drift = gt;
    for (int t = 0; t < 12; ++t) drift(t, 1) += 0.1 * (t + 1);
    const auto lin = displacement_errors(drift, gt);
    if (std::abs(lin.ade - oracle::mean_distance(drift, gt)) > 1e-12 || std::abs(lin.ade - 0.65) > 1e-12 ||
        std::abs(lin.fde - 1.2) > 1e-12)
        failures.push_back("linear drift");

    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (int k = 0; k < frechet_trials; ++k) {
        Trajectory a(pick(rng, 1, max_points), 2), b(pick(rng, 1, max_points), 2);
        for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = uniform(rng, -3.0, 3.0);
        for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = uniform(rng, -3.0, 3.0);
        const double got = discrete_frechet(a, b);
        worst = std::max(worst, std::abs(got - oracle::frechet_by_enumeration(a, b)));
        if (std::abs(got - discrete_frechet(b, a)) > 1e-12) failures.push_back("asymmetric Frechet");
        if (discrete_frechet(a, a) != 0.0) failures.push_back("nonzero self distance");
        if (a.rows() == b.rows()) {
            const double lower = std::max((a.row(0) - b.row(0)).norm(), (a.bottomRows(1) - b.bottomRows(1)).norm());
            const double upper = (a - b).rowwise().norm().maxCoeff();
            if (got < lower - 1e-12 || got > upper + 1e-12) failures.push_back("Frechet outside pointwise bounds");
        }
    }
    if (worst > 1e-12) failures.push_back("Frechet differs from enumeration");

    r.passed = failures.empty();
    std::ostringstream d;
    d << "ADE/FDE cases ok=" << (failures.empty() ? "yes" : "no") << ", " << frechet_trials
      << " Frechet trials, max |dp - enumeration| " << worst;
    for (const auto& f : failures) d << "; " << f;
    r.detail = d.str();
    return finish(r, start);
}

CheckResult check_round_trips(int trials, std::uint64_t seed) {
    const auto start = Clock::now();
    CheckResult r{"round trips", true, {}, 0.0};
    std::mt19937_64 rng(seed);
    int failures = 0;
    double worst = 0.0;
    for (int k = 0; k < trials; ++k) {
        // Coordinates on a dyadic grid make every sum exact.
        Trajectory grid(5, 2), any(5, 2);
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            grid.data()[i] = std::ldexp(static_cast<double>(pick(rng, -4096, 4096)), -8);
            any.data()[i] = uniform(rng, -50.0, 50.0);
        }
        if (to_absolute(to_relative(grid), grid.row(0).transpose()) != grid) ++failures;
        const Trajectory back = to_absolute(to_relative(any), any.row(0).transpose());
        worst = std::max(worst, (back - any).cwiseAbs().maxCoeff());
        if (!to_relative(any).row(0).isZero(0.0)) ++failures;
    }

    std::vector<TrajectoryWindow> windows;
    for (int k = 0; k < 5; ++k) windows.push_back(random_scene(rng, pick(rng, 1, 6), k));
    std::ostringstream first;
    write_windows(first, windows);
    std::istringstream in(first.str());
    const auto loaded = read_windows(in);
    std::ostringstream second;
    write_windows(second, loaded);
    if (first.str() != second.str()) ++failures;
    for (std::size_t k = 0; k < windows.size(); ++k) {
        for (std::size_t i = 0; i < windows[k].size(); ++i)
            if (windows[k].abs[i] != loaded[k].abs[i]) ++failures;
    }

    r.passed = failures == 0 && worst <= 1e-12;
    std::ostringstream d;
    d << trials << " trajectories, " << failures << " failures, max float round-trip error " << worst;
    r.detail = d.str();
    return finish(r, start);
}

std::vector<CheckResult> run_all(const SelftestOptions& options, std::ostream& log) {
    const bool q = options.quick;
    GradientOptions grad;
    grad.seed = options.seed;
    grad.scenes = q ? 2 : 20;
    grad.max_n = q ? 4 : 6;

    std::vector<CheckResult> results;
    auto run = [&](CheckResult r) {
        log << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << " (" << r.seconds << " s)\n";
        results.push_back(std::move(r));
    };
    run(check_round_trips(q ? 50 : 500, options.seed));
    run(check_clustering_oracle(q ? 200 : 1000, 6, options.seed));
    run(check_graph_invariants(q ? 200 : 1000, 8, options.seed));
    run(check_metrics(q ? 100 : 500, 6, options.seed));
    run(check_ego_invariance(q ? 10 : 50, options.seed));
    run(check_gradients(grad));
    return results;
}

}  // namespace comogcn::selftest
