#include <comogcn/synthetic.hpp>

#include <cmath>
#include <numbers>

namespace comogcn {

SyntheticScene make_constant_velocity_scene(std::mt19937_64& rng, std::int64_t window_id,
                                            const SyntheticSceneOptions& options) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

    const int len = options.obs_len + options.pred_len;
    const int n_groups = pick(options.min_groups, options.max_groups);

    SyntheticScene scene;
    std::vector<PedId> ids;
    std::vector<Trajectory> tracks;
    auto add_walker = [&](const Eigen::Vector2d& start, const Eigen::Vector2d& velocity, int group) {
        Trajectory t(len, 2);
        for (int k = 0; k < len; ++k) t.row(k) = (start + k * velocity).transpose();
        ids.push_back(static_cast<PedId>(ids.size()));
        tracks.push_back(std::move(t));
        scene.planted_groups.push_back(group);
    };

    const double half = options.arena / 2.0;
    for (int g = 0; g < n_groups; ++g) {
        const double heading = uniform(-std::numbers::pi, std::numbers::pi);
        const double speed = uniform(options.min_speed, options.max_speed);
        const Eigen::Vector2d dir(std::cos(heading), std::sin(heading));
        const Eigen::Vector2d side(-dir.y(), dir.x());
        const Eigen::Vector2d origin(uniform(-half, half), uniform(-half, half));
        const int size = pick(options.min_group_size, options.max_group_size);
        for (int m = 0; m < size; ++m) {
            const double offset = (m - 0.5 * (size - 1)) * options.member_spacing;
            add_walker(origin + offset * side, speed * dir, g);
        }
    }
    for (int l = 0; l < options.loners; ++l) {
        const double heading = uniform(-std::numbers::pi, std::numbers::pi);
        const double speed = uniform(options.min_speed, options.max_speed);
        add_walker(Eigen::Vector2d(uniform(-half, half), uniform(-half, half)),
                   speed * Eigen::Vector2d(std::cos(heading), std::sin(heading)), -1);
    }

    scene.window = make_window(window_id, Dataset::SYNTH, std::move(ids), std::move(tracks), options.obs_len,
                               options.pred_len);
    return scene;
}

std::vector<SyntheticScene> make_constant_velocity_scenes(std::uint64_t seed, int count,
                                                          const SyntheticSceneOptions& options) {
    std::mt19937_64 rng(seed);
    std::vector<SyntheticScene> scenes;
    scenes.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) scenes.push_back(make_constant_velocity_scene(rng, k, options));
    return scenes;
}

std::vector<RawDetection> to_detections(const TrajectoryWindow& window, FrameId first_frame, FrameId frame_step) {
    std::vector<RawDetection> out;
    for (int k = 0; k < window.total_len(); ++k) {
        for (std::size_t i = 0; i < window.size(); ++i) {
            out.push_back(RawDetection{first_frame + k * frame_step, window.ped_ids[i], window.abs[i](k, 0),
                                       window.abs[i](k, 1)});
        }
    }
    return out;
}

}  // namespace comogcn
