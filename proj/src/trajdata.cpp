#include <comogcn/trajdata.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <unordered_map>

namespace comogcn {

namespace {

std::string upper(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) fields.push_back(line.substr(i, j - i));
        i = j;
    }
    return fields;
}

bool parse_double(std::string_view s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

std::int64_t integral_field(std::string_view s, std::size_t line, const char* name) {
    double v = 0.0;
    if (!parse_double(s, v) || !std::isfinite(v))
        throw ParseError(line, std::string("non-numeric ") + name + " field '" + std::string(s) + "'");
    if (v != std::floor(v))
        throw ParseError(line, std::string(name) + " must be integral, got '" + std::string(s) + "'");
    return static_cast<std::int64_t>(v);
}

double coordinate_field(std::string_view s, std::size_t line) {
    double v = 0.0;
    if (!parse_double(s, v)) throw ParseError(line, "non-numeric coordinate '" + std::string(s) + "'");
    if (!std::isfinite(v)) throw ParseError(line, "non-finite coordinate '" + std::string(s) + "'");
    return v;
}

}  // namespace

std::string_view to_string(Dataset d) {
    switch (d) {
        case Dataset::ETH: return "ETH";
        case Dataset::HOTEL: return "HOTEL";
        case Dataset::UNIV: return "UNIV";
        case Dataset::ZARA1: return "ZARA1";
        case Dataset::ZARA2: return "ZARA2";
        case Dataset::SYNTH: return "SYNTH";
    }
    return "?";
}

Dataset dataset_from_string(std::string_view name) {
    const std::string u = upper(name);
    for (Dataset d : {Dataset::ETH, Dataset::HOTEL, Dataset::UNIV, Dataset::ZARA1, Dataset::ZARA2,
                      Dataset::SYNTH}) {
        if (u == to_string(d)) return d;
    }
    throw ConfigError("unknown dataset '" + std::string(name) + "'");
}

ColumnOrder ColumnOrder::parse(std::string_view layout) {
    const auto fields = split_ws(layout);
    if (fields.size() != 4) throw ConfigError("column order needs 4 names, got '" + std::string(layout) + "'");
    std::array<int, 4> pos{-1, -1, -1, -1};  // frame, ped, x, y
    for (int i = 0; i < 4; ++i) {
        const std::string f = upper(fields[static_cast<std::size_t>(i)]);
        int slot = -1;
        if (f == "FRAME") slot = 0;
        else if (f == "PED") slot = 1;
        else if (f == "X") slot = 2;
        else if (f == "Y") slot = 3;
        if (slot < 0 || pos[static_cast<std::size_t>(slot)] >= 0)
            throw ConfigError("bad column order '" + std::string(layout) + "'");
        pos[static_cast<std::size_t>(slot)] = i;
    }
    return ColumnOrder{pos[0], pos[1], pos[2], pos[3]};
}

int TrajectoryWindow::index_of(PedId ped) const {
    auto it = std::find(ped_ids.begin(), ped_ids.end(), ped);
    return it == ped_ids.end() ? -1 : static_cast<int>(it - ped_ids.begin());
}

std::vector<Trajectory> TrajectoryWindow::observed_abs() const {
    std::vector<Trajectory> out;
    out.reserve(abs.size());
    for (const auto& t : abs) out.emplace_back(t.topRows(obs_len));
    return out;
}

std::vector<Trajectory> TrajectoryWindow::observed_rel() const {
    std::vector<Trajectory> out;
    out.reserve(rel.size());
    for (const auto& t : rel) out.emplace_back(t.topRows(obs_len));
    return out;
}

TrajectoryWindow make_window(std::int64_t window_id, Dataset dataset, std::vector<PedId> ped_ids,
                             std::vector<Trajectory> abs, int obs_len, int pred_len) {
    if (ped_ids.empty()) throw ContractViolation("window needs at least one pedestrian");
    if (ped_ids.size() != abs.size()) throw ContractViolation("ped_ids and tracks differ in length");
    if (obs_len < 1 || pred_len < 1) throw ContractViolation("obs_len and pred_len must be positive");
    for (const auto& t : abs) {
        if (t.rows() != obs_len + pred_len)
            throw ContractViolation("track length does not match obs_len + pred_len");
        if (!t.allFinite()) throw ContractViolation("non-finite coordinate in window");
    }
    TrajectoryWindow w;
    w.window_id = window_id;
    w.dataset = dataset;
    w.ped_ids = std::move(ped_ids);
    w.abs = std::move(abs);
    w.rel = to_relative(w.abs);
    w.obs_len = obs_len;
    w.pred_len = pred_len;
    return w;
}

std::vector<RawDetection> parse_dataset(std::istream& in, const ColumnOrder& order) {
    std::vector<RawDetection> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto fields = split_ws(line);
        if (fields.empty()) continue;
        if (fields.size() != 4)
            throw ParseError(line_no, "expected 4 fields, got " + std::to_string(fields.size()));
        RawDetection d;
        d.frame_id = integral_field(fields[static_cast<std::size_t>(order.frame)], line_no, "frame");
        d.ped_id = integral_field(fields[static_cast<std::size_t>(order.ped)], line_no, "ped");
        d.x = coordinate_field(fields[static_cast<std::size_t>(order.x)], line_no);
        d.y = coordinate_field(fields[static_cast<std::size_t>(order.y)], line_no);
        out.push_back(d);
    }
    std::stable_sort(out.begin(), out.end(), [](const RawDetection& a, const RawDetection& b) {
        return a.frame_id != b.frame_id ? a.frame_id < b.frame_id : a.ped_id < b.ped_id;
    });
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (out[i].frame_id == out[i - 1].frame_id && out[i].ped_id == out[i - 1].ped_id) {
            throw DuplicateRecordError("duplicate record for frame " + std::to_string(out[i].frame_id) +
                                       ", ped " + std::to_string(out[i].ped_id));
        }
    }
    return out;
}

std::vector<RawDetection> parse_dataset(const std::filesystem::path& path, const ColumnOrder& order) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open annotation file " + path.string());
    return parse_dataset(in, order);
}

std::vector<TrajectoryWindow> build_windows(std::span<const RawDetection> detections, Dataset dataset,
                                            const WindowingOptions& options) {
    std::vector<TrajectoryWindow> windows;
    const int len = options.obs_len + options.pred_len;
    if (detections.empty() || options.obs_len < 1 || options.pred_len < 1 || options.stride < 1) {
        return windows;
    }

    // frame -> (ped -> position), frames in ascending order.
    std::vector<FrameId> frames;
    std::vector<std::unordered_map<PedId, Eigen::Vector2d>> at_frame;
    for (const auto& d : detections) {
        if (frames.empty() || frames.back() != d.frame_id) {
            frames.push_back(d.frame_id);
            at_frame.emplace_back();
        }
        at_frame.back().emplace(d.ped_id, Eigen::Vector2d(d.x, d.y));
    }

    const auto n_frames = static_cast<std::ptrdiff_t>(frames.size());
    std::int64_t next_id = 0;
    for (std::ptrdiff_t start = 0; start + len <= n_frames; start += options.stride) {
        bool contiguous = true;
        for (int k = 1; k < len && contiguous; ++k) {
            contiguous = frames[static_cast<std::size_t>(start + k)] ==
                         frames[static_cast<std::size_t>(start)] + k * options.frame_step;
        }
        if (!contiguous) continue;

        std::vector<PedId> peds;
        for (const auto& [ped, _] : at_frame[static_cast<std::size_t>(start)]) {
            bool present = true;
            for (int k = 1; k < len && present; ++k) {
                present = at_frame[static_cast<std::size_t>(start + k)].count(ped) > 0;
            }
            if (present) peds.push_back(ped);
        }
        if (peds.empty()) continue;
        std::sort(peds.begin(), peds.end());

        std::vector<Trajectory> abs;
        abs.reserve(peds.size());
        for (PedId ped : peds) {
            Trajectory t(len, 2);
            for (int k = 0; k < len; ++k) {
                t.row(k) = at_frame[static_cast<std::size_t>(start + k)].at(ped).transpose();
            }
            abs.push_back(std::move(t));
        }
        windows.push_back(
            make_window(next_id++, dataset, std::move(peds), std::move(abs), options.obs_len, options.pred_len));
    }
    return windows;
}

Trajectory to_relative(const Trajectory& abs) {
    Trajectory rel = Trajectory::Zero(abs.rows(), 2);
    for (Eigen::Index t = 1; t < abs.rows(); ++t) rel.row(t) = abs.row(t) - abs.row(t - 1);
    return rel;
}

Trajectory to_absolute(const Trajectory& rel, const Eigen::Vector2d& origin) {
    Trajectory abs(rel.rows(), 2);
    if (rel.rows() == 0) return abs;
    abs.row(0) = origin.transpose();
    for (Eigen::Index t = 1; t < rel.rows(); ++t) abs.row(t) = abs.row(t - 1) + rel.row(t);
    return abs;
}

std::vector<Trajectory> to_relative(std::span<const Trajectory> abs) {
    std::vector<Trajectory> out;
    out.reserve(abs.size());
    for (const auto& t : abs) out.push_back(to_relative(t));
    return out;
}

std::vector<Trajectory> to_absolute(std::span<const Trajectory> rel, std::span<const Eigen::Vector2d> origins) {
    if (rel.size() != origins.size()) throw ContractViolation("one origin per trajectory required");
    std::vector<Trajectory> out;
    out.reserve(rel.size());
    for (std::size_t i = 0; i < rel.size(); ++i) out.push_back(to_absolute(rel[i], origins[i]));
    return out;
}

DatasetSplit leave_one_out_split(const std::map<Dataset, std::vector<TrajectoryWindow>>& all_windows,
                                 Dataset test_set) {
    auto it = all_windows.find(test_set);
    if (it == all_windows.end())
        throw ConfigError("test set " + std::string(to_string(test_set)) + " has no windows loaded");
    DatasetSplit split;
    split.test_set = test_set;
    split.test_windows = it->second;
    for (const auto& [dataset, windows] : all_windows) {
        if (dataset == test_set) continue;
        split.train_windows.insert(split.train_windows.end(), windows.begin(), windows.end());
    }
    if (split.train_windows.empty()) {
        split.warnings.push_back("training set is empty: only " + std::string(to_string(test_set)) +
                                 " has windows");
    }
    return split;
}

void write_windows(std::ostream& out, std::span<const TrajectoryWindow> windows) {
    out << "comogcn-windows 1\n";
    out << std::setprecision(17);
    for (const auto& w : windows) {
        out << "window " << w.window_id << ' ' << to_string(w.dataset) << ' ' << w.size() << ' '
            << w.obs_len << ' ' << w.pred_len << '\n';
        for (std::size_t i = 0; i < w.size(); ++i) {
            out << "ped " << w.ped_ids[i];
            for (Eigen::Index t = 0; t < w.abs[i].rows(); ++t) {
                out << ' ' << w.abs[i](t, 0) << ' ' << w.abs[i](t, 1);
            }
            out << '\n';
        }
    }
}

std::vector<TrajectoryWindow> read_windows(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    auto next = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            if (!split_ws(line).empty()) return true;
        }
        return false;
    };
    if (!next() || split_ws(line) != std::vector<std::string_view>{"comogcn-windows", "1"})
        throw FormatError("window cache: missing 'comogcn-windows 1' header");

    std::vector<TrajectoryWindow> windows;
    while (next()) {
        std::istringstream hs(line);
        std::string tag, ds;
        std::int64_t id = 0;
        std::size_t n = 0;
        int obs = 0, pred = 0;
        if (!(hs >> tag >> id >> ds >> n >> obs >> pred) || tag != "window" || obs < 1 || pred < 1)
            throw FormatError("window cache line " + std::to_string(line_no) + ": bad window header");
        std::vector<PedId> peds;
        std::vector<Trajectory> abs;
        for (std::size_t i = 0; i < n; ++i) {
            if (!next()) throw FormatError("window cache: truncated window " + std::to_string(id));
            const auto f = split_ws(line);
            const auto len = static_cast<std::size_t>(obs + pred);
            if (f.size() != 2 + 2 * len || f[0] != "ped")
                throw FormatError("window cache line " + std::to_string(line_no) + ": bad ped record");
            peds.push_back(integral_field(f[1], line_no, "ped"));
            Trajectory t(obs + pred, 2);
            for (std::size_t k = 0; k < len; ++k) {
                t(static_cast<Eigen::Index>(k), 0) = coordinate_field(f[2 + 2 * k], line_no);
                t(static_cast<Eigen::Index>(k), 1) = coordinate_field(f[3 + 2 * k], line_no);
            }
            abs.push_back(std::move(t));
        }
        try {
            windows.push_back(make_window(id, dataset_from_string(ds), std::move(peds), std::move(abs), obs, pred));
        } catch (const std::exception& e) {
            throw FormatError("window cache: window " + std::to_string(id) + ": " + e.what());
        }
    }
    return windows;
}

void save_windows(const std::filesystem::path& path, std::span<const TrajectoryWindow> windows) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    write_windows(out, windows);
}

std::vector<TrajectoryWindow> load_windows(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open window cache " + path.string());
    return read_windows(in);
}

}  // namespace comogcn
