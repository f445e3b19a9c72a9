#include <comogcn/coherence.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

namespace comogcn {

namespace {

void check_tracks(std::span<const Trajectory> positions, Eigen::Index min_frames) {
    if (positions.empty()) return;
    const auto frames = positions.front().rows();
    if (frames < min_frames)
        throw ContractViolation("clustering needs at least " + std::to_string(min_frames) + " frames");
    for (const auto& t : positions) {
        if (t.rows() != frames) throw ContractViolation("all tracks must span the same frames");
        if (!t.allFinite()) throw ContractViolation("non-finite coordinate in track");
    }
}

// Per-step cosine between velocities; 0 when either velocity vanishes.
double step_cosine(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

struct DisjointSet {
    std::vector<int> parent;
    explicit DisjointSet(int n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    }
};

Eigen::Vector2d heading(const Trajectory& t) {
    const Eigen::Vector2d mean_velocity = (t.row(t.rows() - 1) - t.row(0)).transpose();
    const double n = mean_velocity.norm();
    if (n == 0.0) return Eigen::Vector2d::UnitX();
    return mean_velocity / n;
}

// Offsets of `other` measured in the heading frame of `ego` at the final frame.
bool within_offsets(const Trajectory& ego, const Trajectory& other, const DbscanParams& p) {
    const Eigen::Vector2d h = heading(ego);
    const Eigen::Vector2d d = (other.row(other.rows() - 1) - ego.row(ego.rows() - 1)).transpose();
    const double longitudinal = d.dot(h);
    const double lateral = h.x() * d.y() - h.y() * d.x();
    return std::abs(lateral) <= p.s_lateral && std::abs(longitudinal) <= p.s_longitudinal;
}

}  // namespace

void CoherentFilterParams::validate() const {
    if (window_frames < 3) throw ConfigError("coherent filter window must span at least 3 frames");
    if (k_max < 1) throw ConfigError("k_max must be at least 1");
    if (!(lambda >= -1.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [-1, 1]");
}

CoherentFilterParams CoherentFilterParams::for_dataset(Dataset d) {
    CoherentFilterParams p;
    if (d == Dataset::UNIV) p.window_frames = 8;
    return p;
}

void DbscanParams::validate() const {
    if (!(theta >= 0.0)) throw ConfigError("theta must be nonnegative");
    if (!(s_lateral >= 0.0) || !(s_longitudinal >= 0.0)) throw ConfigError("distance bounds must be nonnegative");
    if (min_pts < 1) throw ConfigError("min_pts must be at least 1");
}

DbscanParams DbscanParams::for_dataset(Dataset d) {
    DbscanParams p;
    if (d == Dataset::UNIV) p.theta = 0.2;
    return p;
}

std::string_view to_string(Provenance p) {
    switch (p) {
        case Provenance::CF: return "CF";
        case Provenance::DBSCAN: return "DBSCAN";
        case Provenance::NOISE: return "NOISE";
    }
    return "?";
}

Provenance provenance_from_string(std::string_view s) {
    if (s == "CF") return Provenance::CF;
    if (s == "DBSCAN") return Provenance::DBSCAN;
    if (s == "NOISE") return Provenance::NOISE;
    throw FormatError("unknown provenance '" + std::string(s) + "'");
}

int GroupLabeling::group_of(PedId ped) const {
    auto it = label.find(ped);
    if (it == label.end()) throw ContractViolation("pedestrian " + std::to_string(ped) + " not in labeling");
    return it->second;
}

std::size_t GroupLabeling::labeled_count() const {
    return static_cast<std::size_t>(
        std::count_if(label.begin(), label.end(), [](const auto& kv) { return kv.second != kNoise; }));
}

std::size_t GroupLabeling::cf_labeled_count() const {
    return static_cast<std::size_t>(std::count_if(provenance.begin(), provenance.end(),
                                                  [](const auto& kv) { return kv.second == Provenance::CF; }));
}

int GroupLabeling::group_count() const {
    int g = 0;
    for (const auto& [_, id] : label) g = std::max(g, id + 1);
    return g;
}

GroupLabeling GroupLabeling::cf_only() const {
    GroupLabeling out;
    out.window_id = window_id;
    for (const auto& [ped, id] : label) {
        const bool cf = provenance.at(ped) == Provenance::CF;
        out.label[ped] = cf ? id : kNoise;
        out.provenance[ped] = cf ? Provenance::CF : Provenance::NOISE;
    }
    return out;
}

std::vector<int> GroupLabeling::groups_in_order(std::span<const PedId> ped_order) const {
    std::vector<int> out;
    out.reserve(ped_order.size());
    for (PedId p : ped_order) out.push_back(group_of(p));
    return out;
}

std::vector<std::set<int>> invariant_neighbors(std::span<const Trajectory> positions, int k_max) {
    if (k_max < 1) throw ConfigError("k_max must be at least 1");
    check_tracks(positions, 1);
    const int n = static_cast<int>(positions.size());
    std::vector<std::set<int>> result(static_cast<std::size_t>(n));
    const int k = std::min(k_max, n - 1);
    if (k <= 0) return result;

    const auto frames = positions.front().rows();
    std::vector<int> order;
    for (Eigen::Index f = 0; f < frames; ++f) {
        for (int i = 0; i < n; ++i) {
            const Eigen::RowVector2d pi = positions[static_cast<std::size_t>(i)].row(f);
            order.clear();
            for (int j = 0; j < n; ++j)
                if (j != i) order.push_back(j);
            auto dist2 = [&](int j) { return (positions[static_cast<std::size_t>(j)].row(f) - pi).squaredNorm(); };
            std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dist2(a) < dist2(b); });
            std::set<int> knn(order.begin(), order.begin() + k);
            auto& acc = result[static_cast<std::size_t>(i)];
            if (f == 0) {
                acc = std::move(knn);
            } else {
                std::set<int> kept;
                std::set_intersection(acc.begin(), acc.end(), knn.begin(), knn.end(),
                                      std::inserter(kept, kept.end()));
                acc = std::move(kept);
            }
        }
    }
    return result;
}

double velocity_correlation(const Trajectory& traj_i, const Trajectory& traj_j) {
    if (traj_i.rows() != traj_j.rows() || traj_i.rows() < 2)
        throw ContractViolation("velocity_correlation needs two equal-length tracks of >= 2 frames");
    const auto steps = traj_i.rows() - 1;
    double sum = 0.0;
    for (Eigen::Index t = 1; t <= steps; ++t) {
        sum += step_cosine((traj_i.row(t) - traj_i.row(t - 1)).transpose(),
                           (traj_j.row(t) - traj_j.row(t - 1)).transpose());
    }
    return sum / static_cast<double>(steps);
}

double mean_heading_difference(const Trajectory& traj_i, const Trajectory& traj_j) {
    if (traj_i.rows() != traj_j.rows() || traj_i.rows() < 2)
        throw ContractViolation("mean_heading_difference needs two equal-length tracks of >= 2 frames");
    const auto steps = traj_i.rows() - 1;
    double sum = 0.0;
    for (Eigen::Index t = 1; t <= steps; ++t) {
        sum += std::acos(step_cosine((traj_i.row(t) - traj_i.row(t - 1)).transpose(),
                                     (traj_j.row(t) - traj_j.row(t - 1)).transpose()));
    }
    return sum / static_cast<double>(steps);
}

std::vector<int> coherent_filter(std::span<const Trajectory> positions, const CoherentFilterParams& params) {
    params.validate();
    check_tracks(positions, 2);
    const int n = static_cast<int>(positions.size());
    const auto neighbors = invariant_neighbors(positions, params.k_max);

    DisjointSet sets(n);
    std::vector<int> degree(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const bool linked = neighbors[static_cast<std::size_t>(i)].count(j) ||
                                neighbors[static_cast<std::size_t>(j)].count(i);
            if (!linked) continue;
            if (velocity_correlation(positions[static_cast<std::size_t>(i)],
                                     positions[static_cast<std::size_t>(j)]) > params.lambda) {
                sets.unite(i, j);
                ++degree[static_cast<std::size_t>(i)];
                ++degree[static_cast<std::size_t>(j)];
            }
        }
    }

    std::vector<int> groups(static_cast<std::size_t>(n), kNoise);
    std::map<int, int> root_to_group;
    for (int i = 0; i < n; ++i) {
        if (degree[static_cast<std::size_t>(i)] == 0) continue;
        const int root = sets.find(i);
        auto [it, inserted] = root_to_group.emplace(root, static_cast<int>(root_to_group.size()));
        groups[static_cast<std::size_t>(i)] = it->second;
    }
    return groups;
}

bool dbscan_neighbors(const Trajectory& a, const Trajectory& b, const DbscanParams& params) {
    return mean_heading_difference(a, b) <= params.theta && within_offsets(a, b, params) &&
           within_offsets(b, a, params);
}

std::vector<int> dbscan_refine(std::span<const Trajectory> positions, const DbscanParams& params) {
    params.validate();
    check_tracks(positions, 2);
    const int n = static_cast<int>(positions.size());

    std::vector<std::vector<int>> hood(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j || dbscan_neighbors(positions[static_cast<std::size_t>(i)],
                                           positions[static_cast<std::size_t>(j)], params)) {
                hood[static_cast<std::size_t>(i)].push_back(j);
            }
        }
    }
    auto is_core = [&](int i) { return static_cast<int>(hood[static_cast<std::size_t>(i)].size()) >= params.min_pts; };

    constexpr int kUnvisited = -2;
    std::vector<int> cluster(static_cast<std::size_t>(n), kUnvisited);
    int next_cluster = 0;
    for (int p = 0; p < n; ++p) {
        if (cluster[static_cast<std::size_t>(p)] != kUnvisited) continue;
        if (!is_core(p)) {
            cluster[static_cast<std::size_t>(p)] = kNoise;
            continue;
        }
        const int c = next_cluster++;
        cluster[static_cast<std::size_t>(p)] = c;
        std::deque<int> seeds(hood[static_cast<std::size_t>(p)].begin(), hood[static_cast<std::size_t>(p)].end());
        while (!seeds.empty()) {
            const int q = seeds.front();
            seeds.pop_front();
            auto& cq = cluster[static_cast<std::size_t>(q)];
            if (cq == kNoise) cq = c;  // border point
            if (cq != kUnvisited) continue;
            cq = c;
            if (is_core(q)) {
                for (int r : hood[static_cast<std::size_t>(q)]) seeds.push_back(r);
            }
        }
    }
    for (auto& c : cluster)
        if (c == kUnvisited) c = kNoise;
    return cluster;
}

std::vector<Trajectory> labeling_segment(const TrajectoryWindow& window, int window_frames) {
    if (window.obs_len < window_frames)
        throw ConfigError("window has " + std::to_string(window.obs_len) + " observed frames, clustering needs " +
                          std::to_string(window_frames));
    std::vector<Trajectory> seg;
    seg.reserve(window.size());
    for (const auto& t : window.abs) seg.emplace_back(t.middleRows(window.obs_len - window_frames, window_frames));
    return seg;
}

GroupLabeling hybrid_label(const TrajectoryWindow& window, const CoherentFilterParams& cf, const DbscanParams& db) {
    cf.validate();
    db.validate();
    const auto seg = labeling_segment(window, cf.window_frames);
    const auto cf_groups = coherent_filter(seg, cf);
    const int cf_count = cf_groups.empty() ? 0 : *std::max_element(cf_groups.begin(), cf_groups.end()) + 1;

    std::vector<int> leftover;
    std::vector<Trajectory> leftover_tracks;
    for (std::size_t i = 0; i < seg.size(); ++i) {
        if (cf_groups[i] == kNoise) {
            leftover.push_back(static_cast<int>(i));
            leftover_tracks.push_back(seg[i]);
        }
    }
    const auto db_groups = dbscan_refine(leftover_tracks, db);

    GroupLabeling out;
    out.window_id = window.window_id;
    for (std::size_t i = 0; i < seg.size(); ++i) {
        out.label[window.ped_ids[i]] = cf_groups[i];
        out.provenance[window.ped_ids[i]] = cf_groups[i] == kNoise ? Provenance::NOISE : Provenance::CF;
    }
    for (std::size_t k = 0; k < leftover.size(); ++k) {
        if (db_groups[k] == kNoise) continue;
        const PedId ped = window.ped_ids[static_cast<std::size_t>(leftover[k])];
        out.label[ped] = cf_count + db_groups[k];
        out.provenance[ped] = Provenance::DBSCAN;
    }
    return out;
}

LabelingRates labeling_stats(std::span<const GroupLabeling> labelings) {
    if (labelings.empty()) throw ConfigError("labeling_stats needs at least one labeling");
    LabelingRates r;
    for (const auto& l : labelings) {
        r.pedestrians += l.size();
        r.cf_labeled += l.cf_labeled_count();
        r.hybrid_labeled += l.labeled_count();
    }
    return r;
}

void write_labels(std::ostream& out, std::span<const GroupLabeling> labelings) {
    out << "comogcn-labels 1\n";
    for (const auto& l : labelings) {
        for (const auto& [ped, id] : l.label) {
            out << l.window_id << ' ' << ped << ' ' << id << ' ' << to_string(l.provenance.at(ped)) << '\n';
        }
    }
}

std::vector<GroupLabeling> read_labels(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    std::vector<GroupLabeling> out;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) continue;
        if (!header) {
            std::string version;
            if (first != "comogcn-labels" || !(ls >> version) || version != "1")
                throw FormatError("labels: missing 'comogcn-labels 1' header");
            header = true;
            continue;
        }
        std::int64_t window_id = 0;
        PedId ped = 0;
        int group = 0;
        std::string prov;
        try {
            window_id = std::stoll(first);
        } catch (const std::exception&) {
            throw FormatError("labels line " + std::to_string(line_no) + ": bad window id");
        }
        if (!(ls >> ped >> group >> prov) || group < kNoise)
            throw FormatError("labels line " + std::to_string(line_no) + ": malformed record");
        const Provenance p = provenance_from_string(prov);
        if ((p == Provenance::NOISE) != (group == kNoise))
            throw FormatError("labels line " + std::to_string(line_no) + ": provenance disagrees with group id");
        if (out.empty() || out.back().window_id != window_id) {
            out.emplace_back();
            out.back().window_id = window_id;
        }
        out.back().label[ped] = group;
        out.back().provenance[ped] = p;
    }
    if (!header) throw FormatError("labels: missing 'comogcn-labels 1' header");
    return out;
}

void save_labels(const std::filesystem::path& path, std::span<const GroupLabeling> labelings) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    write_labels(out, labelings);
}

std::vector<GroupLabeling> load_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open label file " + path.string());
    return read_labels(in);
}

}  // namespace comogcn
