#include <comogcn/graph.hpp>

#include <algorithm>
#include <iomanip>
#include <ostream>

namespace comogcn {

Eigen::MatrixXd base_adjacency(int n) {
    if (n < 1) throw ContractViolation("adjacency needs at least one node");
    return Eigen::MatrixXd::Ones(n, n);
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> coherence_masks(std::span<const int> groups, int ego,
                                                            const MaskOptions& options) {
    const int n = static_cast<int>(groups.size());
    if (ego < 0 || ego >= n) throw ContractViolation("ego index outside the labeling");
    const int ego_group = groups[static_cast<std::size_t>(ego)];

    Eigen::RowVectorXd intra_cols = Eigen::RowVectorXd::Zero(n);
    for (int j = 0; j < n; ++j) {
        const bool same = j == ego || (ego_group != kNoise && groups[static_cast<std::size_t>(j)] == ego_group);
        intra_cols(j) = same ? 1.0 : 0.0;
    }
    Eigen::RowVectorXd inter_cols = Eigen::RowVectorXd::Ones(n) - intra_cols;
    if (options.inter_self_loop) inter_cols(ego) = 1.0;

    return {intra_cols.replicate(n, 1), inter_cols.replicate(n, 1)};
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> coherence_masks(const GroupLabeling& labels, PedId ego,
                                                            std::span<const PedId> ped_order,
                                                            const MaskOptions& options) {
    auto it = std::find(ped_order.begin(), ped_order.end(), ego);
    if (it == ped_order.end() || !labels.label.count(ego))
        throw ContractViolation("ego " + std::to_string(ego) + " missing from labeling");
    const auto groups = labels.groups_in_order(ped_order);
    return coherence_masks(groups, static_cast<int>(it - ped_order.begin()), options);
}

Eigen::MatrixXd row_normalize(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw ContractViolation("adjacency must be square");
    if ((m.array() < 0.0).any() || !m.allFinite())
        throw ContractViolation("adjacency entries must be finite and nonnegative");
    Eigen::MatrixXd out = m;
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        const double s = out.row(r).sum();
        if (s > 0.0) {
            out.row(r) /= s;
        } else {
            out.row(r).setZero();
            out(r, r) = 1.0;
        }
    }
    return out;
}

MaskedAdjacency build_masked_adjacency(std::span<const int> groups, int ego, const MaskOptions& options) {
    const Eigen::MatrixXd base = base_adjacency(static_cast<int>(groups.size()));
    const auto [intra_mask, inter_mask] = coherence_masks(groups, ego, options);
    return MaskedAdjacency{ego, row_normalize(base.cwiseProduct(intra_mask)),
                           row_normalize(base.cwiseProduct(inter_mask))};
}

MaskedAdjacency build_masked_adjacency(const GroupLabeling& labels, PedId ego, std::span<const PedId> ped_order,
                                       const MaskOptions& options) {
    auto it = std::find(ped_order.begin(), ped_order.end(), ego);
    if (it == ped_order.end() || !labels.label.count(ego))
        throw ContractViolation("ego " + std::to_string(ego) + " missing from labeling");
    const auto groups = labels.groups_in_order(ped_order);
    return build_masked_adjacency(groups, static_cast<int>(it - ped_order.begin()), options);
}

void dump_adjacency(std::ostream& out, const MaskedAdjacency& adj) {
    const Eigen::IOFormat fmt(6, 0, " ", "\n");
    out << "# ego " << adj.ego << "\n# intra\n" << adj.intra.format(fmt) << "\n# inter\n"
        << adj.inter.format(fmt) << '\n';
}

}  // namespace comogcn
