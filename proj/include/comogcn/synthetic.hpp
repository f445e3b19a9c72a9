#pragma once

#include <comogcn/trajdata.hpp>

#include <random>
#include <vector>

namespace comogcn {

/// Scene generator for smoke tests and demos: groups walk side by side at a
/// shared constant velocity, loners walk on their own.
struct SyntheticSceneOptions {
    int min_groups = 2;
    int max_groups = 3;
    int min_group_size = 2;
    int max_group_size = 3;
    int loners = 0;
    double min_speed = 0.3;  ///< meters per annotated step
    double max_speed = 0.6;
    double member_spacing = 0.8;  ///< lateral spacing inside a group
    double arena = 30.0;          ///< group origins drawn from [-arena/2, arena/2]^2
    int obs_len = 8;
    int pred_len = 12;
};

struct SyntheticScene {
    TrajectoryWindow window;
    std::vector<int> planted_groups;  ///< per pedestrian, -1 for loners
};

SyntheticScene make_constant_velocity_scene(std::mt19937_64& rng, std::int64_t window_id,
                                            const SyntheticSceneOptions& options = {});

std::vector<SyntheticScene> make_constant_velocity_scenes(std::uint64_t seed, int count,
                                                          const SyntheticSceneOptions& options = {});

/// Detections (frame_id, ped_id, x, y) reproducing the window, frame ids
/// spaced by frame_step; useful to exercise the ingestion path.
std::vector<RawDetection> to_detections(const TrajectoryWindow& window, FrameId first_frame, FrameId frame_step);

}  // namespace comogcn
