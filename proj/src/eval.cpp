#include <comogcn/eval.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace comogcn {

namespace {

using Reference = PublishedReference;

const std::map<Dataset, Reference>& references() {
    static const std::map<Dataset, Reference> refs{
        {Dataset::ETH, {0.70, 1.26, 41.0, 77.3, 3.58, 7.30, 3.21, 8.59}},
        {Dataset::HOTEL, {0.37, 0.75, 12.4, 77.6, 4.10, 5.08, 2.90, 5.69}},
        {Dataset::UNIV, {0.53, 1.16, 35.0, 80.6, 2.82, 7.28, 2.54, 7.67}},
        {Dataset::ZARA1, {0.34, 0.71, 38.9, 83.9, 3.60, 5.59, 2.73, 7.64}},
        {Dataset::ZARA2, {0.31, 0.67, 45.6, 89.1, 3.57, 5.37, 1.70, 6.06}},
    };
    return refs;
}

const Reference* reference_for(Dataset d) {
    auto it = references().find(d);
    return it == references().end() ? nullptr : &it->second;
}

}  // namespace

std::optional<PublishedReference> published_reference(Dataset d) {
    if (const auto* r = reference_for(d)) return *r;
    return std::nullopt;
}

namespace {

std::string fmt_optional(const std::optional<double>& v) {
    if (!v) return "-";
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << *v;
    return s.str();
}

}  // namespace

DisplacementError displacement_errors(const Trajectory& pred, const Trajectory& gt) {
    if (pred.rows() != gt.rows() || pred.rows() == 0)
        throw ContractViolation("displacement_errors: trajectories must have the same nonzero length");
    const Eigen::VectorXd d = (pred - gt).rowwise().norm();
    return DisplacementError{d.mean(), d(d.size() - 1)};
}

std::vector<EgoPrediction> predict_window(const nn::ParameterSet& params, const LabeledWindow& data,
                                          std::size_t window_index, const EvalOptions& options) {
    if (options.samples < 1) throw ConfigError("evaluation needs at least one sample");
    const auto& w = data.window;
    const auto groups = data.labels.groups_in_order(w.ped_ids);
    std::vector<EgoPrediction> out;
    out.reserve(w.size());
    for (int ego = 0; ego < static_cast<int>(w.size()); ++ego) {
        const auto e = static_cast<std::size_t>(ego);
        const auto adj = build_masked_adjacency(groups, ego, options.masks);
        const auto q = nn::infer_latent(params, w, adj);

        EgoPrediction p;
        p.window_id = w.window_id;
        p.ped_id = w.ped_ids[e];
        p.observed = w.abs[e].topRows(w.obs_len);
        p.truth = w.abs[e].bottomRows(w.pred_len);
        p.mean_mode = nn::predict_positions(params, w, ego, q.mu);

        std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                          static_cast<std::uint32_t>(window_index), static_cast<std::uint32_t>(ego)};
        std::mt19937_64 rng(seq);
        p.best_error.ade = std::numeric_limits<double>::infinity();
        for (int s = 0; s < options.samples; ++s) {
            Trajectory pred = p.mean_mode;
            if (!options.mean_mode) {
                const Eigen::VectorXd eps = nn::draw_standard_normal(rng);
                const Eigen::VectorXd z = q.mu + (0.5 * q.logvar).array().exp().matrix().cwiseProduct(eps);
                pred = nn::predict_positions(params, w, ego, z);
            }
            const auto err = displacement_errors(pred, p.truth);
            if (err.ade < p.best_error.ade) {
                p.best_error = err;
                p.best = std::move(pred);
            }
        }
        out.push_back(std::move(p));
    }
    return out;
}

EvalReport best_of_n(const nn::ParameterSet& params, std::span<const LabeledWindow> data, const EvalOptions& options) {
    if (options.samples < 1) throw ConfigError("evaluation needs at least one sample");
    EvalReport r;
    r.n_samples = options.samples;
    r.n_windows = data.size();
    if (!data.empty()) r.dataset = data.front().window.dataset;
    double ade = 0.0, fde = 0.0;
    for (std::size_t k = 0; k < data.size(); ++k) {
        for (const auto& p : predict_window(params, data[k], k, options)) {
            ade += p.best_error.ade;
            fde += p.best_error.fde;
            ++r.n_pairs;
        }
    }
    if (r.n_pairs) {
        r.ade = ade / static_cast<double>(r.n_pairs);
        r.fde = fde / static_cast<double>(r.n_pairs);
    }
    return r;
}

double discrete_frechet(const Trajectory& a, const Trajectory& b) {
    if (a.rows() == 0 || b.rows() == 0) throw ContractViolation("discrete_frechet: empty trajectory");
    const auto n = a.rows(), m = b.rows();
    Eigen::MatrixXd ca(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            const double d = (a.row(i) - b.row(j)).norm();
            if (i == 0 && j == 0) ca(i, j) = d;
            else if (i == 0) ca(i, j) = std::max(ca(i, j - 1), d);
            else if (j == 0) ca(i, j) = std::max(ca(i - 1, j), d);
            else ca(i, j) = std::max(std::min({ca(i - 1, j), ca(i - 1, j - 1), ca(i, j - 1)}), d);
        }
    }
    return ca(n - 1, m - 1);
}

SimilarityReport group_similarity_report(std::span<const LabeledWindow> data) {
    SimilarityReport r;
    double intra = 0.0, inter = 0.0;
    for (const auto& lw : data) {
        const auto groups = lw.labels.groups_in_order(lw.window.ped_ids);
        for (std::size_t i = 0; i < groups.size(); ++i) {
            for (std::size_t j = i + 1; j < groups.size(); ++j) {
                const double d = discrete_frechet(lw.window.abs[i], lw.window.abs[j]);
                if (groups[i] != kNoise && groups[i] == groups[j]) {
                    intra += d;
                    ++r.intra_pairs;
                } else {
                    inter += d;
                    ++r.inter_pairs;
                }
            }
        }
    }
    if (r.intra_pairs) r.intra_avg = intra / static_cast<double>(r.intra_pairs);
    if (r.inter_pairs) r.inter_avg = inter / static_cast<double>(r.inter_pairs);
    return r;
}

void write_eval_table(std::ostream& out, std::span<const EvalReport> reports) {
    out << "# comogcn evaluation: best-of-n ADE/FDE in meters\n";
    out << "# reference: GCN+group (Hybrid) published values; not expected to match at desk scale\n";
    out << std::left << std::setw(8) << "dataset" << std::right << std::setw(9) << "ADE" << std::setw(9) << "FDE"
        << std::setw(9) << "samples" << std::setw(9) << "windows" << std::setw(9) << "pairs" << std::setw(12)
        << "ref_ADE" << std::setw(9) << "ref_FDE" << '\n';
    out << std::fixed;
    double ade = 0.0, fde = 0.0, ref_ade = 0.0, ref_fde = 0.0;
    int refs = 0;
    for (const auto& r : reports) {
        out << std::left << std::setw(8) << to_string(r.dataset) << std::right << std::setprecision(3) << std::setw(9)
            << r.ade << std::setw(9) << r.fde << std::setw(9) << r.n_samples << std::setw(9) << r.n_windows
            << std::setw(9) << r.n_pairs;
        if (const auto* ref = reference_for(r.dataset)) {
            out << std::setprecision(2) << std::setw(12) << ref->ade << std::setw(9) << ref->fde;
            ref_ade += ref->ade;
            ref_fde += ref->fde;
            ++refs;
        } else {
            out << std::setw(12) << "-" << std::setw(9) << "-";
        }
        out << '\n';
        ade += r.ade;
        fde += r.fde;
    }
    if (reports.size() > 1) {
        const double k = static_cast<double>(reports.size());
        out << std::left << std::setw(8) << "AVG" << std::right << std::setprecision(3) << std::setw(9) << ade / k
            << std::setw(9) << fde / k << std::setw(27) << "";
        if (refs == static_cast<int>(reports.size()))
            out << std::setprecision(2) << std::setw(12) << ref_ade / refs << std::setw(9) << ref_fde / refs;
        out << '\n';
    }
}

void write_label_rate_table(std::ostream& out, std::span<const LabelRateRow> rows) {
    out << "# comogcn labeling rates: share of pedestrians assigned to a coherent group\n";
    out << std::left << std::setw(8) << "dataset" << std::right << std::setw(12) << "pedestrians" << std::setw(9)
        << "CF" << std::setw(12) << "CF+DBSCAN" << std::setw(9) << "ref_CF" << std::setw(12) << "ref_hybrid" << '\n';
    out << std::fixed << std::setprecision(1);
    for (const auto& row : rows) {
        out << std::left << std::setw(8) << to_string(row.dataset) << std::right << std::setw(12)
            << row.rates.pedestrians << std::setw(8) << 100.0 * row.rates.cf_rate() << '%' << std::setw(11)
            << 100.0 * row.rates.hybrid_rate() << '%';
        if (const auto* ref = reference_for(row.dataset))
            out << std::setw(8) << ref->cf_rate << '%' << std::setw(11) << ref->hybrid_rate << '%';
        else
            out << std::setw(9) << "-" << std::setw(12) << "-";
        out << '\n';
    }
}

void write_similarity_table(std::ostream& out, std::span<const SimilarityRow> rows) {
    out << "# comogcn group similarity: mean discrete Frechet distance (m) between trajectory pairs\n";
    out << std::left << std::setw(8) << "dataset" << std::right << std::setw(10) << "CF_intra" << std::setw(10)
        << "CF_inter" << std::setw(10) << "HY_intra" << std::setw(10) << "HY_inter" << '\n';
    std::optional<double> sums[4];
    int counts[4] = {0, 0, 0, 0};
    for (const auto& row : rows) {
        const std::optional<double> vals[4] = {row.cf.intra_avg, row.cf.inter_avg, row.hybrid.intra_avg,
                                               row.hybrid.inter_avg};
        out << std::left << std::setw(8) << to_string(row.dataset) << std::right;
        for (int k = 0; k < 4; ++k) {
            out << std::setw(10) << fmt_optional(vals[k]);
            if (vals[k]) {
                sums[k] = sums[k].value_or(0.0) + *vals[k];
                ++counts[k];
            }
        }
        out << '\n';
    }
    if (rows.size() > 1) {
        out << std::left << std::setw(8) << "AVG" << std::right;
        for (int k = 0; k < 4; ++k) {
            out << std::setw(10) << fmt_optional(counts[k] ? std::optional<double>(*sums[k] / counts[k]) : std::nullopt);
        }
        out << '\n';
    }
}

}  // namespace comogcn
