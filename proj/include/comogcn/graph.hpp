#pragma once

#include <comogcn/coherence.hpp>

#include <Eigen/Dense>

#include <iosfwd>
#include <span>
#include <utility>

namespace comogcn {

/// Ego-specific adjacency pair fed to the intra- and inter-group GCNs.
/// Both matrices are row-stochastic.
struct MaskedAdjacency {
    int ego = 0;
    Eigen::MatrixXd intra;
    Eigen::MatrixXd inter;
};

struct MaskOptions {
    /// Keep the ego column in the inter-group mask even though the ego is in
    /// its own group.
    bool inter_self_loop = true;
};

/// Complete graph with self-loops.
Eigen::MatrixXd base_adjacency(int n);

/// Coherence masks for `ego` given one group id per node (kNoise = singleton).
/// Each mask selects columns; every row carries the same pattern.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> coherence_masks(std::span<const int> groups, int ego,
                                                            const MaskOptions& options = {});
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> coherence_masks(const GroupLabeling& labels, PedId ego,
                                                            std::span<const PedId> ped_order,
                                                            const MaskOptions& options = {});

/// Divides each row by its sum. An all-zero row becomes the self-loop row.
Eigen::MatrixXd row_normalize(const Eigen::MatrixXd& m);

MaskedAdjacency build_masked_adjacency(std::span<const int> groups, int ego, const MaskOptions& options = {});
MaskedAdjacency build_masked_adjacency(const GroupLabeling& labels, PedId ego, std::span<const PedId> ped_order,
                                       const MaskOptions& options = {});

/// Plain-text dump of both matrices for inspection.
void dump_adjacency(std::ostream& out, const MaskedAdjacency& adj);

}  // namespace comogcn
