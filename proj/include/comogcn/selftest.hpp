#pragma once

#include <comogcn/oracles.hpp>
#include <comogcn/synthetic.hpp>

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace comogcn::selftest {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

/// Random scene of n walkers with jittered velocities, long enough for an
/// obs_len + pred_len window. Some walkers share a velocity so groups form.
TrajectoryWindow random_scene(std::mt19937_64& rng, int n, std::int64_t window_id = 0, int obs_len = 8,
                              int pred_len = 12);

/// Random clustering input: n tracks over `frames` frames in a small arena,
/// mixing coherent groups, stationary pedestrians and random walkers.
std::vector<Trajectory> random_clustering_tracks(std::mt19937_64& rng, int n, int frames);

/// Random group ids (kNoise allowed) for n nodes.
std::vector<int> random_groups(std::mt19937_64& rng, int n);

struct GradientOptions {
    int scenes = 20;
    int min_n = 2;
    int max_n = 6;
    double step = 1e-5;
    double tolerance = 1e-4;
    double beta = 1.0;
    std::uint64_t seed = 11;
};
CheckResult check_gradients(const GradientOptions& options);

/// coherent_filter, dbscan_refine and hybrid_label against the brute-force
/// definitions on random windows.
CheckResult check_clustering_oracle(int windows, int max_n, std::uint64_t seed);

/// Row-stochasticity, permutation equivariance, complementarity and NaN safety.
CheckResult check_graph_invariants(int labelings, int max_n, std::uint64_t seed);

/// Ego features and mean-mode prediction unchanged when non-ego pedestrians
/// are permuted.
CheckResult check_ego_invariance(int scenes, std::uint64_t seed, double tolerance = 1e-10);

/// ADE/FDE trivial cases and discrete Frechet vs. exhaustive couplings.
CheckResult check_metrics(int frechet_trials, int max_points, std::uint64_t seed);

/// Window round trip: absolute -> relative -> absolute and cache write/read.
CheckResult check_round_trips(int trials, std::uint64_t seed);

struct SelftestOptions {
    std::uint64_t seed = 7;
    bool quick = true;  ///< reduced trial counts, suitable for a fresh checkout
};

/// Runs every check, logging one line per check to `log`.
std::vector<CheckResult> run_all(const SelftestOptions& options, std::ostream& log);

}  // namespace comogcn::selftest
