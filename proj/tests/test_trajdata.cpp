#include <comogcn/trajdata.hpp>

#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

using namespace comogcn;

namespace {

std::vector<RawDetection> parse(const std::string& text, const ColumnOrder& order = {}) {
    std::istringstream in(text);
    return parse_dataset(in, order);
}

std::string track_lines(PedId ped, int first, int count, double x0 = 0.0) {
    std::ostringstream s;
    for (int k = 0; k < count; ++k) s << (first + k) * 10 << ' ' << ped << ' ' << x0 + 0.4 * k << " 0\n";
    return s.str();
}

}  // namespace

TEST_CASE("parse_dataset echoes detections sorted by frame then ped") {
    const auto dets = parse("10 1 0.4 0.0\n0 1 0.0 0.0\n");
    REQUIRE(dets.size() == 2);
    CHECK(dets[0] == RawDetection{0, 1, 0.0, 0.0});
    CHECK(dets[1] == RawDetection{10, 1, 0.4, 0.0});

    const auto mixed = parse("5 9 1 1\n5 2 0 0\n\n1 7 3 3\n");
    REQUIRE(mixed.size() == 3);
    CHECK(mixed[0].frame_id == 1);
    CHECK(mixed[1].ped_id == 2);
    CHECK(mixed[2].ped_id == 9);
}

TEST_CASE("parse_dataset on empty input") {
    CHECK(parse("").empty());
    CHECK(parse("\n   \n").empty());
}

TEST_CASE("parse_dataset reports the offending line") {
    try {
        parse("0 1 abc 0.0\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 1);
    }
    try {
        parse("0 1 0 0\n10 1 0.4\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(parse("0.5 1 0 0\n"), ParseError);
    CHECK_THROWS_AS(parse("0 1 nan 0\n"), ParseError);
    CHECK_THROWS_AS(parse("0 1 0 0\n0 1 2 2\n"), DuplicateRecordError);
}

TEST_CASE("column order is configurable") {
    const auto dets = parse("3.5 7.25 10 4\n", ColumnOrder::parse("x y frame ped"));
    REQUIRE(dets.size() == 1);
    CHECK(dets[0] == RawDetection{10, 4, 3.5, 7.25});
    CHECK(parse("0 1 2 3\n", ColumnOrder::parse("frame ped y x"))[0].x == 3.0);
    CHECK_THROWS_AS(ColumnOrder::parse("frame ped x"), ConfigError);
    CHECK_THROWS_AS(ColumnOrder::parse("frame frame x y"), ConfigError);
}

TEST_CASE("build_windows presence requirement") {
    const auto w20 = build_windows(parse(track_lines(1, 0, 20)));
    REQUIRE(w20.size() == 1);
    CHECK(w20[0].size() == 1);
    CHECK(w20[0].abs[0].rows() == 20);
    CHECK(w20[0].abs[0](19, 0) == doctest::Approx(0.4 * 19));

    CHECK(build_windows(parse(track_lines(1, 0, 19))).empty());
    CHECK(build_windows({}).empty());
}

TEST_CASE("build_windows skips gaps in the annotated frames") {
    // Frames 0..90 then 110..200: no 20 consecutive frames spaced by 10.
    const auto dets = parse(track_lines(1, 0, 10) + track_lines(1, 11, 10));
    CHECK(build_windows(dets).empty());
}

TEST_CASE("build_windows matches a direct enumeration of window origins") {
    // Three pedestrians over 25 annotated frames with staggered presence.
    std::mt19937_64 rng(5);
    std::ostringstream text;
    text.precision(17);
    std::map<PedId, std::pair<int, int>> span{{1, {0, 24}}, {2, {2, 24}}, {3, {0, 21}}};
    std::map<std::pair<int, PedId>, std::pair<double, double>> pos;
    std::uniform_real_distribution<double> u(-5, 5);
    for (const auto& [ped, range] : span) {
        for (int f = range.first; f <= range.second; ++f) {
            pos[{f, ped}] = {u(rng), u(rng)};
            text << f * 10 << ' ' << ped << ' ' << pos[{f, ped}].first << ' ' << pos[{f, ped}].second << '\n';
        }
    }
    const auto dets = parse(text.str());
    const auto windows = build_windows(dets);

    std::vector<std::vector<PedId>> expected;
    for (int origin = 0; origin + 20 <= 25; ++origin) {
        std::vector<PedId> present;
        for (const auto& [ped, range] : span)
            if (range.first <= origin && origin + 19 <= range.second) present.push_back(ped);
        if (!present.empty()) expected.push_back(present);
    }
    REQUIRE(expected.size() == 6);
    REQUIRE(windows.size() == expected.size());
    for (std::size_t k = 0; k < windows.size(); ++k) {
        CHECK(windows[k].window_id == static_cast<std::int64_t>(k));
        CHECK(windows[k].ped_ids == expected[k]);
        for (std::size_t i = 0; i < windows[k].size(); ++i) {
            for (int t = 0; t < 20; ++t) {
                const auto& p = pos.at({static_cast<int>(k) + t, windows[k].ped_ids[i]});
                CHECK(windows[k].abs[i](t, 0) == p.first);
                CHECK(windows[k].abs[i](t, 1) == p.second);
            }
        }
    }
}

TEST_CASE("build_windows stride") {
    WindowingOptions o;
    o.stride = 2;
    CHECK(build_windows(parse(track_lines(1, 0, 25)), Dataset::SYNTH, o).size() == 3);
}

TEST_CASE("relative coordinates") {
    Trajectory abs(3, 2);
    abs << 0, 0, 1, 0, 2, 0;
    Trajectory expected(3, 2);
    expected << 0, 0, 1, 0, 1, 0;
    CHECK(to_relative(abs) == expected);

    Trajectory still = Trajectory::Constant(6, 2, 3.25);
    CHECK(to_relative(still).isZero(0.0));

    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> grid(-4096, 4096);
    for (int trial = 0; trial < 100; ++trial) {
        Trajectory t(5, 2);
        for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = grid(rng) / 256.0;
        const Trajectory rel = to_relative(t);
        CHECK(rel.row(0).isZero(0.0));
        CHECK(to_absolute(rel, t.row(0).transpose()) == t);
    }
}

TEST_CASE("window invariants") {
    Trajectory a(20, 2);
    for (int t = 0; t < 20; ++t) a.row(t) << t * 0.5, 1.0;
    const auto w = make_window(3, Dataset::HOTEL, {4}, {a});
    CHECK(w.rel[0].row(0).isZero(0.0));
    CHECK(w.rel[0](5, 0) == 0.5);
    CHECK(w.observed_rel()[0].rows() == 8);
    CHECK(w.index_of(4) == 0);
    CHECK(w.index_of(5) == -1);
    CHECK_THROWS_AS(make_window(0, Dataset::SYNTH, {}, {}), ContractViolation);
    CHECK_THROWS_AS(make_window(0, Dataset::SYNTH, {1}, {Trajectory::Zero(19, 2)}), ContractViolation);
}

TEST_CASE("leave_one_out_split") {
    std::map<Dataset, std::vector<TrajectoryWindow>> all;
    Trajectory t = Trajectory::Zero(20, 2);
    int id = 0;
    for (Dataset d : kBenchmarkDatasets)
        for (int k = 0; k <= static_cast<int>(d); ++k) all[d].push_back(make_window(id++, d, {1}, {t}));

    const auto split = leave_one_out_split(all, Dataset::ETH);
    CHECK(split.test_windows.size() == 1);
    CHECK(split.train_windows.size() == 2 + 3 + 4 + 5);
    CHECK(split.warnings.empty());
    std::set<Dataset> train_sets;
    for (const auto& w : split.train_windows) train_sets.insert(w.dataset);
    CHECK(train_sets == std::set<Dataset>{Dataset::HOTEL, Dataset::UNIV, Dataset::ZARA1, Dataset::ZARA2});

    std::size_t total = 0;
    for (const auto& [d, ws] : all) total += ws.size();
    for (Dataset d : kBenchmarkDatasets) {
        const auto s = leave_one_out_split(all, d);
        CHECK(s.train_windows.size() + s.test_windows.size() == total);
        for (const auto& w : s.train_windows) CHECK(w.dataset != d);
    }

    std::map<Dataset, std::vector<TrajectoryWindow>> only_eth{{Dataset::ETH, all[Dataset::ETH]}};
    const auto lonely = leave_one_out_split(only_eth, Dataset::ETH);
    CHECK(lonely.train_windows.empty());
    CHECK(lonely.warnings.size() == 1);

    CHECK_THROWS_AS(leave_one_out_split(only_eth, Dataset::HOTEL), ConfigError);
    CHECK_THROWS_AS(dataset_from_string("NOPE"), ConfigError);
    CHECK(dataset_from_string("zara1") == Dataset::ZARA1);
}

TEST_CASE("window cache round trip is byte-identical") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-20, 20);
    std::vector<TrajectoryWindow> windows;
    for (int k = 0; k < 4; ++k) {
        std::vector<PedId> ids;
        std::vector<Trajectory> tracks;
        for (int i = 0; i <= k; ++i) {
            Trajectory t(20, 2);
            for (Eigen::Index j = 0; j < t.size(); ++j) t.data()[j] = u(rng);
            ids.push_back(100 + i);
            tracks.push_back(t);
        }
        windows.push_back(make_window(k, Dataset::UNIV, ids, tracks));
    }
    std::ostringstream a;
    write_windows(a, windows);
    std::istringstream in(a.str());
    const auto back = read_windows(in);
    std::ostringstream b;
    write_windows(b, back);
    CHECK(a.str() == b.str());
    REQUIRE(back.size() == windows.size());
    for (std::size_t k = 0; k < back.size(); ++k) {
        CHECK(back[k].ped_ids == windows[k].ped_ids);
        CHECK(back[k].dataset == Dataset::UNIV);
        for (std::size_t i = 0; i < back[k].size(); ++i) CHECK(back[k].abs[i] == windows[k].abs[i]);
    }

    std::istringstream bad("comogcn-windows 2\n");
    CHECK_THROWS_AS(read_windows(bad), FormatError);
    std::istringstream truncated("comogcn-windows 1\nwindow 0 ETH 2 8 12\nped 1" + std::string(40, ' ') + "\n");
    CHECK_THROWS_AS(read_windows(truncated), FormatError);
}
