#pragma once

// Brute-force reference implementations used by the self-test and the test
// suites. They follow the textbook definitions directly and share no code with
// the production paths they are compared against.

#include <comogcn/coherence.hpp>
#include <comogcn/neuralcore.hpp>

#include <set>
#include <span>
#include <string>
#include <vector>

namespace comogcn::oracle {

/// K-NN by rank counting: j is among i's K nearest at a frame iff fewer than K
/// candidates are strictly closer (ties ranked by index).
std::vector<std::set<int>> invariant_neighbors(std::span<const Trajectory> tracks, int k_max);

/// Coherent pairs, then transitive closure (Warshall) of the pair relation.
std::vector<int> coherent_filter(std::span<const Trajectory> tracks, const CoherentFilterParams& params);

/// DBSCAN from its definition: core points, core-core reachability closure,
/// clusters numbered by lowest core index, border points to the lowest
/// adjacent cluster.
std::vector<int> dbscan(std::span<const Trajectory> tracks, const DbscanParams& params);

/// Minimum over every monotone coupling of the maximum matched distance.
double frechet_by_enumeration(const Trajectory& a, const Trajectory& b);

/// Mean of the 12 per-step distances, computed term by term.
double mean_distance(const Trajectory& a, const Trajectory& b);

struct GradientCheck {
    std::size_t checked = 0;
    double max_rel_error = 0.0;
    std::string worst_tensor;
    Eigen::Index worst_index = -1;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

/// Compares backward() against central differences of forward().total for
/// every parameter entry. Relative error is |a - n| / max(|a|, |n|, floor).
GradientCheck finite_difference_check(const nn::ParameterSet& params, const TrajectoryWindow& window,
                                      const MaskedAdjacency& adj, const Eigen::VectorXd& eps,
                                      const Trajectory& gt_rel, double beta, double step = 1e-5,
                                      double floor = 1e-6);

}  // namespace comogcn::oracle
