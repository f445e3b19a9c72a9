#include "helpers.hpp"

#include <comogcn/coherence.hpp>
#include <comogcn/eval.hpp>
#include <comogcn/oracles.hpp>
#include <comogcn/selftest.hpp>

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

using namespace comogcn;
using testutil::straight;
using testutil::walk;

TEST_CASE("velocity_correlation") {
    const auto east = straight(0, 0, 1, 0, 5);
    CHECK(velocity_correlation(east, straight(0, 3, 1, 0, 5)) == doctest::Approx(1.0));
    CHECK(velocity_correlation(east, straight(9, 0, -1, 0, 5)) == doctest::Approx(-1.0));
    CHECK(velocity_correlation(east, straight(0, 0, 0, 1, 5)) == doctest::Approx(0.0));
    CHECK(velocity_correlation(east, straight(2, 2, 0, 0, 5)) == 0.0);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 200; ++trial) {
        Trajectory a(6, 2), b(6, 2);
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            a.data()[i] = u(rng);
            b.data()[i] = u(rng);
        }
        const double c = velocity_correlation(a, b);
        CHECK(c >= -1.0);
        CHECK(c <= 1.0);
        CHECK(c == doctest::Approx(velocity_correlation(b, a)).epsilon(1e-14));

        const double angle = u(rng) * 3.0;
        Eigen::Matrix2d rot;
        rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
        const Eigen::RowVector2d shift(u(rng) * 10, u(rng) * 10);
        const Trajectory ra = (a * rot.transpose()).rowwise() + shift;
        const Trajectory rb = (b * rot.transpose()).rowwise() + shift;
        CHECK(velocity_correlation(ra, rb) == doctest::Approx(c).epsilon(1e-9));
    }
}

TEST_CASE("invariant_neighbors") {
    const auto solo = invariant_neighbors(std::vector<Trajectory>{straight(0, 0, 1, 0, 5)}, 5);
    REQUIRE(solo.size() == 1);
    CHECK(solo[0].empty());

    const std::vector<Trajectory> pair{straight(0, 0, 1, 0, 5), straight(40, -3, 0, 2, 5)};
    const auto p = invariant_neighbors(pair, 3);
    CHECK(p[0] == std::set<int>{1});
    CHECK(p[1] == std::set<int>{0});

    // Ped 1 is ped 0's nearest neighbour until it walks away in the last frame.
    const std::vector<Trajectory> leave{
        straight(0, 0, 0, 0, 5),
        walk(1, 0, {{0, 0}, {0, 0}, {0, 0}, {4, 0}}),
        straight(3, 0, 0, 0, 5),
    };
    const auto nb = invariant_neighbors(leave, 1);
    CHECK(nb[0].empty());

    std::mt19937_64 rng(17);
    std::normal_distribution<double> step(0.0, 0.5);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Trajectory> tracks;
        for (int i = 0; i < 6; ++i) {
            Trajectory t(5, 2);
            t.row(0) << step(rng) * 4, step(rng) * 4;
            for (int f = 1; f < 5; ++f) t.row(f) = t.row(f - 1) + Eigen::RowVector2d(step(rng), step(rng));
            tracks.push_back(t);
        }
        CHECK(invariant_neighbors(tracks, 2) == oracle::invariant_neighbors(tracks, 2));
    }
}

TEST_CASE("coherent_filter") {
    const CoherentFilterParams cf;
    const std::vector<Trajectory> parallel{straight(0, 0, 0.5, 0, 5), straight(0, 0.5, 0.5, 0, 5)};
    CHECK(coherent_filter(parallel, cf) == std::vector<int>{0, 0});
    CHECK(oracle::coherent_filter(parallel, cf) == std::vector<int>{0, 0});

    CHECK(coherent_filter(std::vector<Trajectory>{straight(0, 0, 0.5, 0, 5)}, cf) == std::vector<int>{kNoise});
    CHECK(coherent_filter(std::vector<Trajectory>{}, cf).empty());

    const std::vector<Trajectory> opposite{straight(0, 0, 0.5, 0, 5), straight(2, 0.5, -0.5, 0, 5)};
    CHECK(coherent_filter(opposite, cf) == std::vector<int>{kNoise, kNoise});

    // Relabeling pedestrians permutes the grouping.
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        auto tracks = selftest::random_clustering_tracks(rng, 6, 5);
        const auto groups = coherent_filter(tracks, cf);
        std::vector<int> perm(tracks.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<Trajectory> shuffled;
        for (int k : perm) shuffled.push_back(tracks[static_cast<std::size_t>(k)]);
        const auto g2 = coherent_filter(shuffled, cf);
        for (std::size_t a = 0; a < perm.size(); ++a) {
            for (std::size_t b = 0; b < perm.size(); ++b) {
                const int ga = groups[static_cast<std::size_t>(perm[a])];
                const int gb = groups[static_cast<std::size_t>(perm[b])];
                CHECK((ga != kNoise && ga == gb) == (g2[a] != kNoise && g2[a] == g2[b]));
            }
        }
    }
}

TEST_CASE("dbscan_refine") {
    const DbscanParams db;
    CHECK(dbscan_refine(std::vector<Trajectory>{}, db).empty());

    const std::vector<Trajectory> side_by_side{straight(0, 0, 0.5, 0, 5), straight(0, 1, 0.5, 0, 5)};
    CHECK(dbscan_neighbors(side_by_side[0], side_by_side[1], db));
    CHECK(dbscan_refine(side_by_side, db) == std::vector<int>{0, 0});

    const std::vector<Trajectory> diverging{straight(0, 0, 0.5, 0, 5),
                                            straight(0, 1, 0.5 * std::cos(1.0), 0.5 * std::sin(1.0), 5)};
    CHECK(mean_heading_difference(diverging[0], diverging[1]) == doctest::Approx(1.0));
    CHECK(dbscan_refine(diverging, db) == std::vector<int>{kNoise, kNoise});

    // Too far apart laterally, or longitudinally.
    CHECK(dbscan_refine(std::vector<Trajectory>{straight(0, 0, 0.5, 0, 5), straight(0, 2.5, 0.5, 0, 5)}, db) ==
          std::vector<int>{kNoise, kNoise});
    CHECK(dbscan_refine(std::vector<Trajectory>{straight(0, 0, 0.5, 0, 5), straight(6, 0, 0.5, 0, 5)}, db) ==
          std::vector<int>{kNoise, kNoise});
    CHECK(dbscan_refine(std::vector<Trajectory>{straight(0, 0, 0.5, 0, 5), straight(4, 0, 0.5, 0, 5)}, db) ==
          std::vector<int>{0, 0});

    // A chain of walkers 1.5 m apart is density-connected through its middle.
    const std::vector<Trajectory> chain{straight(0, 0, 0.5, 0, 5), straight(0, 1.5, 0.5, 0, 5),
                                        straight(0, 3.0, 0.5, 0, 5), straight(0, 10, -0.5, 0, 5)};
    CHECK(dbscan_refine(chain, db) == std::vector<int>{0, 0, 0, kNoise});
    CHECK(dbscan_refine(chain, DbscanParams{0.5, 2.0, 5.0, 4}) == std::vector<int>{kNoise, kNoise, kNoise, kNoise});

    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 200; ++trial) {
        const auto tracks = selftest::random_clustering_tracks(rng, 6, 5);
        CHECK(dbscan_refine(tracks, db) == oracle::dbscan(tracks, db));
    }
}

namespace {

TrajectoryWindow window_from(const std::vector<Trajectory>& tracks) {
    std::vector<PedId> ids;
    for (std::size_t i = 0; i < tracks.size(); ++i) ids.push_back(static_cast<PedId>(i + 1));
    return make_window(0, Dataset::SYNTH, ids, tracks);
}

}  // namespace

TEST_CASE("hybrid_label composes the two stages") {
    // Peds 1 and 2 walk south together. Peds 3 and 4 walk east, but ped 4
    // swerves on the last observed step: correlation 0.69 fails the coherent
    // filter while the mean heading difference 0.45 rad passes DBSCAN.
    std::vector<Eigen::Vector2d> swerve(19, Eigen::Vector2d(0.5, 0));
    swerve[6] = testutil::heading_step(1.8, 0.5);
    const std::vector<Trajectory> tracks{
        straight(20, 10, 0, -0.5, 20),
        straight(20.6, 10, 0, -0.5, 20),
        straight(0, 0, 0.5, 0, 20),
        walk(0, 1, swerve),
    };
    const auto w = window_from(tracks);
    const CoherentFilterParams cf;
    const DbscanParams db;

    const auto seg = labeling_segment(w, cf.window_frames);
    CHECK(velocity_correlation(seg[2], seg[3]) == doctest::Approx((3.0 + std::cos(1.8)) / 4.0));
    CHECK(mean_heading_difference(seg[2], seg[3]) == doctest::Approx(0.45));

    const auto labels = hybrid_label(w, cf, db);
    CHECK(labels.group_of(1) == 0);
    CHECK(labels.group_of(2) == 0);
    CHECK(labels.group_of(3) == 1);
    CHECK(labels.group_of(4) == 1);
    CHECK(labels.provenance.at(1) == Provenance::CF);
    CHECK(labels.provenance.at(3) == Provenance::DBSCAN);
    CHECK(labels.group_count() == 2);

    // Same result from the stage oracles.
    const auto cf_groups = oracle::coherent_filter(seg, cf);
    CHECK(cf_groups == std::vector<int>{0, 0, kNoise, kNoise});
    CHECK(oracle::dbscan(std::vector<Trajectory>{seg[2], seg[3]}, db) == std::vector<int>{0, 0});

    const auto only_cf = labels.cf_only();
    CHECK(only_cf.group_of(3) == kNoise);
    CHECK(only_cf.provenance.at(4) == Provenance::NOISE);
    CHECK(only_cf.cf_labeled_count() == 2);
    CHECK(labels.labeled_count() == 4);
}

TEST_CASE("hybrid_label edge cases") {
    const std::vector<Trajectory> troop{straight(0, 0, 0.5, 0, 20), straight(0, 0.6, 0.5, 0, 20),
                                        straight(0, 1.2, 0.5, 0, 20)};
    const auto all_cf = hybrid_label(window_from(troop), {}, {});
    for (PedId p : {1, 2, 3}) {
        CHECK(all_cf.group_of(p) == 0);
        CHECK(all_cf.provenance.at(p) == Provenance::CF);
    }

    const std::vector<Trajectory> strangers{straight(0, 0, 0.5, 0, 20), straight(30, 0, 0, 0.5, 20),
                                            straight(0, 30, -0.5, 0, 20)};
    const auto none = hybrid_label(window_from(strangers), {}, {});
    const std::vector<GroupLabeling> list{none};
    CHECK(labeling_stats(list).hybrid_rate() == 0.0);
    CHECK(labeling_stats(list).cf_rate() == 0.0);
    CHECK(labeling_stats(list).pedestrians == 3);
    CHECK_THROWS_AS(labeling_stats(std::vector<GroupLabeling>{}), ConfigError);

    CoherentFilterParams wide;
    wide.window_frames = 9;
    CHECK_THROWS_AS(hybrid_label(window_from(troop), wide, {}), ConfigError);
    CoherentFilterParams bad;
    bad.lambda = 2.0;
    CHECK_THROWS_AS(hybrid_label(window_from(troop), bad, {}), ConfigError);
    CHECK_THROWS_AS(hybrid_label(window_from(troop), {}, DbscanParams{0.5, 2.0, 5.0, 0}), ConfigError);
}

TEST_CASE("clustering parameters per scene") {
    CHECK(CoherentFilterParams::for_dataset(Dataset::ETH).window_frames == 5);
    CHECK(CoherentFilterParams::for_dataset(Dataset::UNIV).window_frames == 8);
    CHECK(CoherentFilterParams::for_dataset(Dataset::HOTEL).k_max == 5);
    CHECK(CoherentFilterParams::for_dataset(Dataset::ZARA2).lambda == 0.8);
    CHECK(DbscanParams::for_dataset(Dataset::ETH).theta == 0.5);
    CHECK(DbscanParams::for_dataset(Dataset::UNIV).theta == 0.2);
    CHECK(DbscanParams::for_dataset(Dataset::ZARA1).s_lateral == 2.0);
    CHECK(DbscanParams::for_dataset(Dataset::ZARA1).s_longitudinal == 5.0);
    CHECK(DbscanParams::for_dataset(Dataset::ZARA1).min_pts == 2);
}

TEST_CASE("published labeling rates") {
    const auto eth = published_reference(Dataset::ETH);
    const auto hotel = published_reference(Dataset::HOTEL);
    REQUIRE(eth);
    REQUIRE(hotel);
    CHECK(eth->cf_rate == 41.0);
    CHECK(eth->hybrid_rate == 77.3);
    CHECK(hotel->cf_rate == 12.4);
    CHECK(hotel->hybrid_rate == 77.6);
    CHECK(published_reference(Dataset::UNIV)->hybrid_rate == 80.6);
    CHECK(published_reference(Dataset::ZARA1)->hybrid_rate == 83.9);
    CHECK(published_reference(Dataset::ZARA2)->hybrid_rate == 89.1);
    CHECK(!published_reference(Dataset::SYNTH));
}

TEST_CASE("labels file round trip") {
    std::mt19937_64 rng(41);
    std::vector<GroupLabeling> labelings;
    for (int k = 0; k < 20; ++k) {
        const auto w = selftest::random_scene(rng, 2 + k % 5, k);
        labelings.push_back(hybrid_label(w, {}, {}));
    }
    std::ostringstream a;
    write_labels(a, labelings);
    std::istringstream in(a.str());
    const auto back = read_labels(in);
    REQUIRE(back.size() == labelings.size());
    for (std::size_t k = 0; k < back.size(); ++k) {
        CHECK(back[k].window_id == labelings[k].window_id);
        CHECK(back[k].label == labelings[k].label);
        CHECK(back[k].provenance == labelings[k].provenance);
    }

    std::istringstream no_header("0 1 0 CF\n");
    CHECK_THROWS_AS(read_labels(no_header), FormatError);
    std::istringstream mismatch("comogcn-labels 1\n0 1 -1 CF\n");
    CHECK_THROWS_AS(read_labels(mismatch), FormatError);
    std::istringstream unknown("comogcn-labels 1\n0 1 0 KMEANS\n");
    CHECK_THROWS_AS(read_labels(unknown), FormatError);
}
