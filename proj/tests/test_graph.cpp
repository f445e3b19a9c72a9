#include <comogcn/graph.hpp>
#include <comogcn/selftest.hpp>

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace comogcn;

namespace {

Eigen::RowVectorXd cols(std::initializer_list<double> v) {
    Eigen::RowVectorXd r(static_cast<Eigen::Index>(v.size()));
    Eigen::Index k = 0;
    for (double x : v) r(k++) = x;
    return r;
}

}  // namespace

TEST_CASE("base_adjacency") {
    CHECK(base_adjacency(1) == Eigen::MatrixXd::Ones(1, 1));
    CHECK(base_adjacency(3) == Eigen::MatrixXd::Ones(3, 3));
    for (int n = 1; n < 8; ++n) {
        const auto a = base_adjacency(n);
        CHECK(a == a.transpose());
        CHECK(a.diagonal().isOnes());
    }
}

TEST_CASE("coherence masks on the seven-pedestrian example") {
    // Pedestrians 1..7 at indices 0..6. The ego (pedestrian 3) shares a
    // cluster with 1, 2 and 4; 5, 6 and 7 are each on their own.
    const std::vector<int> groups{0, 0, 0, 0, 1, kNoise, 2};
    const int ego = 2;
    const auto [intra, inter] = coherence_masks(groups, ego);
    for (Eigen::Index r = 0; r < 7; ++r) {
        CHECK(intra.row(r) == cols({1, 1, 1, 1, 0, 0, 0}));
        CHECK(inter.row(r) == cols({0, 0, 1, 0, 1, 1, 1}));
    }

    const auto adj = build_masked_adjacency(groups, ego);
    CHECK(adj.ego == ego);
    for (Eigen::Index r = 0; r < 7; ++r) {
        CHECK(adj.intra.row(r).isApprox(cols({0.25, 0.25, 0.25, 0.25, 0, 0, 0}), 1e-15));
        CHECK(adj.inter.row(r).isApprox(cols({0, 0, 0.25, 0, 0.25, 0.25, 0.25}), 1e-15));
    }

    MaskOptions no_loop;
    no_loop.inter_self_loop = false;
    const auto [intra2, inter2] = coherence_masks(groups, ego, no_loop);
    CHECK(intra2 == intra);
    CHECK(inter2.row(0) == cols({0, 0, 0, 0, 1, 1, 1}));
}

TEST_CASE("coherence masks for singleton and full groups") {
    const std::vector<int> alone{kNoise, 0, 0, kNoise};
    const auto [intra, inter] = coherence_masks(alone, 0);
    CHECK(intra.row(1) == cols({1, 0, 0, 0}));
    CHECK(inter.row(1) == cols({1, 1, 1, 1}));

    const std::vector<int> together{0, 0, 0};
    const auto [intra3, inter3] = coherence_masks(together, 1);
    CHECK(intra3.row(0) == cols({1, 1, 1}));
    CHECK(inter3.row(0) == cols({0, 1, 0}));

    MaskOptions no_loop;
    no_loop.inter_self_loop = false;
    const auto adj = build_masked_adjacency(together, 1, no_loop);
    CHECK(adj.inter.isApprox(Eigen::MatrixXd::Identity(3, 3), 0.0));

    const auto single = build_masked_adjacency(std::vector<int>{kNoise}, 0);
    CHECK(single.intra == Eigen::MatrixXd::Ones(1, 1));
    CHECK(single.inter == Eigen::MatrixXd::Ones(1, 1));

    CHECK_THROWS_AS(coherence_masks(together, 3), ContractViolation);
}

TEST_CASE("masks from a labeling keyed by pedestrian") {
    GroupLabeling labels;
    labels.label = {{10, 0}, {20, kNoise}, {30, 0}};
    const std::vector<PedId> order{30, 20, 10};
    const auto [intra, inter] = coherence_masks(labels, 10, order);
    CHECK(intra.row(0) == cols({1, 0, 1}));
    CHECK(inter.row(0) == cols({0, 1, 1}));
    CHECK_THROWS_AS(coherence_masks(labels, 40, order), ContractViolation);
    CHECK_THROWS_AS(build_masked_adjacency(labels, 40, order), ContractViolation);
}

TEST_CASE("row_normalize") {
    Eigen::MatrixXd m(2, 2);
    m << 1, 1, 0, 1;
    Eigen::MatrixXd expected(2, 2);
    expected << 0.5, 0.5, 0, 1;
    CHECK(row_normalize(m) == expected);

    Eigen::MatrixXd z(3, 3);
    z << 1, 2, 3, 0, 0, 0, 4, 0, 0;
    const auto zn = row_normalize(z);
    CHECK(zn.row(1) == cols({0, 1, 0}));
    CHECK(zn.allFinite());

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 10);
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::MatrixXd r(5, 5);
        for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = u(rng);
        const auto rn = row_normalize(r);
        for (Eigen::Index k = 0; k < 5; ++k) CHECK(std::abs(rn.row(k).sum() - 1.0) <= 1e-12);
    }

    m(0, 1) = -0.5;
    CHECK_THROWS_AS(row_normalize(m), ContractViolation);
    CHECK_THROWS_AS(row_normalize(Eigen::MatrixXd::Ones(2, 3)), ContractViolation);
}

TEST_CASE("masked adjacency is permutation equivariant and complementary") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 8);
        const auto groups = selftest::random_groups(rng, n);
        const int ego = static_cast<int>(rng() % static_cast<unsigned>(n));
        const auto adj = build_masked_adjacency(groups, ego);

        const auto [intra_m, inter_m] = coherence_masks(groups, ego);
        for (int j = 0; j < n; ++j)
            if (j != ego) CHECK(intra_m(0, j) + inter_m(0, j) == 1.0);

        std::vector<int> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        // New index k holds old node perm[k].
        std::vector<int> permuted(static_cast<std::size_t>(n));
        int new_ego = 0;
        Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
        for (int k = 0; k < n; ++k) {
            permuted[static_cast<std::size_t>(k)] = groups[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])];
            p(k, perm[static_cast<std::size_t>(k)]) = 1.0;
            if (perm[static_cast<std::size_t>(k)] == ego) new_ego = k;
        }
        const auto adj2 = build_masked_adjacency(permuted, new_ego);
        CHECK((adj2.intra - p * adj.intra * p.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK((adj2.inter - p * adj.inter * p.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK(adj.intra.allFinite());
        CHECK(adj.inter.allFinite());
    }
}
