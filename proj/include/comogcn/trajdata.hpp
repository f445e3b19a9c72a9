#pragma once

#include <comogcn/errors.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace comogcn {

enum class Dataset { ETH, HOTEL, UNIV, ZARA1, ZARA2, SYNTH };

/// The five benchmark scenes used by the leave-one-out protocol.
inline constexpr Dataset kBenchmarkDatasets[] = {Dataset::ETH, Dataset::HOTEL, Dataset::UNIV,
                                                 Dataset::ZARA1, Dataset::ZARA2};

std::string_view to_string(Dataset d);
/// Case-insensitive. Throws ConfigError on unknown names.
Dataset dataset_from_string(std::string_view name);

using PedId = std::int64_t;
using FrameId = std::int64_t;

/// T x 2 sequence of planar points (meters).
using Trajectory = Eigen::Matrix<double, Eigen::Dynamic, 2>;

struct RawDetection {
    FrameId frame_id = 0;
    PedId ped_id = 0;
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const RawDetection&, const RawDetection&) = default;
};

/// Column positions of the four fields in an annotation line.
struct ColumnOrder {
    int frame = 0;
    int ped = 1;
    int x = 2;
    int y = 3;

    /// Parses a layout such as "frame ped x y" or "frame ped y x".
    static ColumnOrder parse(std::string_view layout);
};

struct TrajectoryWindow {
    std::int64_t window_id = 0;
    Dataset dataset = Dataset::SYNTH;
    std::vector<PedId> ped_ids;
    std::vector<Trajectory> abs;
    std::vector<Trajectory> rel;
    int obs_len = 8;
    int pred_len = 12;

    std::size_t size() const { return ped_ids.size(); }
    int total_len() const { return obs_len + pred_len; }

    /// Index of ped_id in this window, or -1.
    int index_of(PedId ped) const;

    /// Observation-segment views, one per pedestrian.
    std::vector<Trajectory> observed_abs() const;
    std::vector<Trajectory> observed_rel() const;
};

/// Builds a window from absolute tracks, filling `rel`. Validates shapes.
TrajectoryWindow make_window(std::int64_t window_id, Dataset dataset, std::vector<PedId> ped_ids,
                             std::vector<Trajectory> abs, int obs_len = 8, int pred_len = 12);

struct DatasetSplit {
    Dataset test_set = Dataset::ETH;
    std::vector<TrajectoryWindow> train_windows;
    std::vector<TrajectoryWindow> test_windows;
    std::vector<std::string> warnings;
};

std::vector<RawDetection> parse_dataset(std::istream& in, const ColumnOrder& order = {});
std::vector<RawDetection> parse_dataset(const std::filesystem::path& path,
                                        const ColumnOrder& order = {});

struct WindowingOptions {
    int obs_len = 8;
    int pred_len = 12;
    FrameId frame_step = 10;
    int stride = 1;
};

/// Slices sorted detections into fixed-length windows. A window covers
/// obs_len + pred_len consecutive annotated frames spaced exactly frame_step
/// apart; only pedestrians present at every one of those frames are kept.
std::vector<TrajectoryWindow> build_windows(std::span<const RawDetection> detections,
                                            Dataset dataset = Dataset::SYNTH,
                                            const WindowingOptions& options = {});

Trajectory to_relative(const Trajectory& abs);
Trajectory to_absolute(const Trajectory& rel, const Eigen::Vector2d& origin);

std::vector<Trajectory> to_relative(std::span<const Trajectory> abs);
std::vector<Trajectory> to_absolute(std::span<const Trajectory> rel,
                                    std::span<const Eigen::Vector2d> origins);

DatasetSplit leave_one_out_split(const std::map<Dataset, std::vector<TrajectoryWindow>>& all_windows,
                                 Dataset test_set);

// Window cache ("comogcn-windows v1"):
//
//   comogcn-windows 1
//   window <window_id> <dataset> <num_peds> <obs_len> <pred_len>
//   ped <ped_id> <x_0> <y_0> ... <x_{T-1}> <y_{T-1}>      (num_peds lines)
//   ...
//
// Coordinates are printed with 17 significant digits so a load reproduces
// the stored doubles exactly. Relative coordinates are recomputed on load.
void write_windows(std::ostream& out, std::span<const TrajectoryWindow> windows);
std::vector<TrajectoryWindow> read_windows(std::istream& in);
void save_windows(const std::filesystem::path& path, std::span<const TrajectoryWindow> windows);
std::vector<TrajectoryWindow> load_windows(const std::filesystem::path& path);

}  // namespace comogcn
