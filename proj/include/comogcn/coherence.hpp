#pragma once

#include <comogcn/trajdata.hpp>

#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <vector>

namespace comogcn {

/// Coherent-filtering parameters. `window_frames` is the d+2 frame window.
struct CoherentFilterParams {
    int window_frames = 5;
    int k_max = 5;
    double lambda = 0.8;

    void validate() const;
    /// Tuned defaults per scene (UNIV uses an 8-frame window).
    static CoherentFilterParams for_dataset(Dataset d);
};

struct DbscanParams {
    double theta = 0.5;           ///< radians
    double s_lateral = 2.0;       ///< meters
    double s_longitudinal = 5.0;  ///< meters
    int min_pts = 2;

    void validate() const;
    static DbscanParams for_dataset(Dataset d);
};

inline constexpr int kNoise = -1;

enum class Provenance { CF, DBSCAN, NOISE };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

/// Per-window group assignment keyed by ped_id. Group ids are 0..G-1 with
/// coherent-filter groups numbered before DBSCAN groups.
struct GroupLabeling {
    std::int64_t window_id = 0;
    std::map<PedId, int> label;
    std::map<PedId, Provenance> provenance;

    int group_of(PedId ped) const;
    std::size_t size() const { return label.size(); }
    std::size_t labeled_count() const;
    std::size_t cf_labeled_count() const;
    int group_count() const;

    /// The labeling as it stood after the coherent-filter stage alone.
    GroupLabeling cf_only() const;

    /// Group ids in the order of `ped_order`, kNoise for unlabeled.
    std::vector<int> groups_in_order(std::span<const PedId> ped_order) const;
};

/// Invariant K-nearest neighbours: for each pedestrian, the intersection over
/// all frames of its K nearest neighbours, K = min(k_max, N-1). Distance ties
/// break toward the lower index.
std::vector<std::set<int>> invariant_neighbors(std::span<const Trajectory> positions, int k_max);

/// Mean over steps of the cosine between the two velocity vectors; a step in
/// which either pedestrian does not move contributes 0.
double velocity_correlation(const Trajectory& traj_i, const Trajectory& traj_j);

/// Mean over steps of the angle between the two velocity vectors, using the
/// same per-step cosine as velocity_correlation.
double mean_heading_difference(const Trajectory& traj_i, const Trajectory& traj_j);

/// Coherent filtering over index-ordered tracks. Returns one group id per
/// track (kNoise for singletons); groups are numbered by their lowest member.
std::vector<int> coherent_filter(std::span<const Trajectory> positions, const CoherentFilterParams& params);

/// The DBSCAN neighbourhood predicate between two tracks (symmetric).
bool dbscan_neighbors(const Trajectory& a, const Trajectory& b, const DbscanParams& params);

/// DBSCAN with the angular/lateral/longitudinal predicate. Points are visited
/// in index order; returns cluster ids (kNoise for unclustered).
std::vector<int> dbscan_refine(std::span<const Trajectory> positions, const DbscanParams& params);

/// Coherent filter followed by DBSCAN on the leftovers, using only the last
/// `cf.window_frames` observed frames of the window.
GroupLabeling hybrid_label(const TrajectoryWindow& window, const CoherentFilterParams& cf,
                           const DbscanParams& db);

/// Tracks actually fed to the clustering stages for this window.
std::vector<Trajectory> labeling_segment(const TrajectoryWindow& window, int window_frames);

struct LabelingRates {
    std::size_t pedestrians = 0;
    std::size_t cf_labeled = 0;
    std::size_t hybrid_labeled = 0;

    double cf_rate() const { return pedestrians ? double(cf_labeled) / double(pedestrians) : 0.0; }
    double hybrid_rate() const { return pedestrians ? double(hybrid_labeled) / double(pedestrians) : 0.0; }
};

/// Throws ConfigError on an empty list.
LabelingRates labeling_stats(std::span<const GroupLabeling> labelings);

// Label export ("comogcn-labels v1"), one record per (window, pedestrian):
//
//   comogcn-labels 1
//   <window_id> <ped_id> <group_id> <CF|DBSCAN|NOISE>
//
// group_id is -1 for NOISE. Records are ordered by window, then ped_id.
void write_labels(std::ostream& out, std::span<const GroupLabeling> labelings);
std::vector<GroupLabeling> read_labels(std::istream& in);
void save_labels(const std::filesystem::path& path, std::span<const GroupLabeling> labelings);
std::vector<GroupLabeling> load_labels(const std::filesystem::path& path);

}  // namespace comogcn
