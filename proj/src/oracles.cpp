#include <comogcn/oracles.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace comogcn::oracle {

namespace {

using Matrix = std::vector<std::vector<char>>;

Matrix closure(Matrix m) {
    const std::size_t n = m.size();
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (m[i][k] && m[k][j]) m[i][j] = 1;
    return m;
}

double cosine_at(const Trajectory& a, const Trajectory& b, Eigen::Index t) {
    const double ax = a(t, 0) - a(t - 1, 0), ay = a(t, 1) - a(t - 1, 1);
    const double bx = b(t, 0) - b(t - 1, 0), by = b(t, 1) - b(t - 1, 1);
    const double na = std::sqrt(ax * ax + ay * ay), nb = std::sqrt(bx * bx + by * by);
    if (na == 0.0 || nb == 0.0) return 0.0;
    double c = (ax * bx + ay * by) / (na * nb);
    if (c > 1.0) c = 1.0;
    if (c < -1.0) c = -1.0;
    return c;
}

bool offsets_ok(const Trajectory& ego, const Trajectory& other, const DbscanParams& p) {
    const Eigen::Index last = ego.rows() - 1;
    double hx = ego(last, 0) - ego(0, 0), hy = ego(last, 1) - ego(0, 1);
    const double hn = std::sqrt(hx * hx + hy * hy);
    if (hn == 0.0) {
        hx = 1.0;
        hy = 0.0;
    } else {
        hx /= hn;
        hy /= hn;
    }
    const double dx = other(last, 0) - ego(last, 0), dy = other(last, 1) - ego(last, 1);
    const double lon = dx * hx + dy * hy;
    const double lat = -dx * hy + dy * hx;
    return std::fabs(lat) <= p.s_lateral && std::fabs(lon) <= p.s_longitudinal;
}

bool neighbor(const Trajectory& a, const Trajectory& b, const DbscanParams& p) {
    double angle = 0.0;
    for (Eigen::Index t = 1; t < a.rows(); ++t) angle += std::acos(cosine_at(a, b, t));
    angle /= static_cast<double>(a.rows() - 1);
    return angle <= p.theta && offsets_ok(a, b, p) && offsets_ok(b, a, p);
}

}  // namespace

std::vector<std::set<int>> invariant_neighbors(std::span<const Trajectory> tracks, int k_max) {
    const int n = static_cast<int>(tracks.size());
    std::vector<std::set<int>> out(static_cast<std::size_t>(n));
    const int k = std::min(k_max, n - 1);
    if (k <= 0) return out;
    const Eigen::Index frames = tracks.front().rows();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            bool always = true;
            for (Eigen::Index f = 0; f < frames && always; ++f) {
                auto d = [&](int q) {
                    const double dx = tracks[static_cast<std::size_t>(q)](f, 0) - tracks[static_cast<std::size_t>(i)](f, 0);
                    const double dy = tracks[static_cast<std::size_t>(q)](f, 1) - tracks[static_cast<std::size_t>(i)](f, 1);
                    return dx * dx + dy * dy;
                };
                int rank = 0;
                for (int q = 0; q < n; ++q) {
                    if (q == i || q == j) continue;
                    if (d(q) < d(j) || (d(q) == d(j) && q < j)) ++rank;
                }
                always = rank < k;
            }
            if (always) out[static_cast<std::size_t>(i)].insert(j);
        }
    }
    return out;
}

std::vector<int> coherent_filter(std::span<const Trajectory> tracks, const CoherentFilterParams& params) {
    const std::size_t n = tracks.size();
    const auto nbrs = invariant_neighbors(tracks, params.k_max);
    Matrix pair(n, std::vector<char>(n, 0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            if (!nbrs[i].count(static_cast<int>(j)) && !nbrs[j].count(static_cast<int>(i))) continue;
            double corr = 0.0;
            for (Eigen::Index t = 1; t < tracks[i].rows(); ++t) corr += cosine_at(tracks[i], tracks[j], t);
            corr /= static_cast<double>(tracks[i].rows() - 1);
            if (corr > params.lambda) pair[i][j] = 1;
        }
    }
    const Matrix reach = closure(pair);
    std::vector<int> out(n, kNoise);
    int next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (out[i] != kNoise) continue;
        bool any = false;
        for (std::size_t j = 0; j < n; ++j) any = any || reach[i][j];
        if (!any) continue;
        out[i] = next;
        for (std::size_t j = 0; j < n; ++j)
            if (reach[i][j]) out[j] = next;
        ++next;
    }
    return out;
}

std::vector<int> dbscan(std::span<const Trajectory> tracks, const DbscanParams& params) {
    const std::size_t n = tracks.size();
    Matrix nb(n, std::vector<char>(n, 0));
    std::vector<char> core(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        int count = 0;
        for (std::size_t j = 0; j < n; ++j) {
            nb[i][j] = (i == j || neighbor(tracks[i], tracks[j], params)) ? 1 : 0;
            count += nb[i][j];
        }
        core[i] = count >= params.min_pts;
    }
    Matrix cc(n, std::vector<char>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) cc[i][j] = core[i] && core[j] && nb[i][j];
    const Matrix reach = closure(cc);

    std::vector<int> out(n, kNoise);
    int next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!core[i] || out[i] != kNoise) continue;
        for (std::size_t j = 0; j < n; ++j)
            if (reach[i][j]) out[j] = next;
        out[i] = next;
        ++next;
    }
    for (std::size_t b = 0; b < n; ++b) {
        if (core[b]) continue;
        int best = kNoise;
        for (std::size_t c = 0; c < n; ++c) {
            if (core[c] && nb[c][b] && (best == kNoise || out[c] < best)) best = out[c];
        }
        out[b] = best;
    }
    return out;
}

double frechet_by_enumeration(const Trajectory& a, const Trajectory& b) {
    const Eigen::Index n = a.rows(), m = b.rows();
    double best = std::numeric_limits<double>::infinity();
    std::function<void(Eigen::Index, Eigen::Index, double)> walk = [&](Eigen::Index i, Eigen::Index j, double worst) {
        const double dx = a(i, 0) - b(j, 0), dy = a(i, 1) - b(j, 1);
        worst = std::max(worst, std::sqrt(dx * dx + dy * dy));
        if (i == n - 1 && j == m - 1) {
            best = std::min(best, worst);
            return;
        }
        if (i + 1 < n) walk(i + 1, j, worst);
        if (j + 1 < m) walk(i, j + 1, worst);
        if (i + 1 < n && j + 1 < m) walk(i + 1, j + 1, worst);
    };
    walk(0, 0, 0.0);
    return best;
}

double mean_distance(const Trajectory& a, const Trajectory& b) {
    double s = 0.0;
    for (Eigen::Index t = 0; t < a.rows(); ++t) {
        const double dx = a(t, 0) - b(t, 0), dy = a(t, 1) - b(t, 1);
        s += std::sqrt(dx * dx + dy * dy);
    }
    return s / static_cast<double>(a.rows());
}

GradientCheck finite_difference_check(const nn::ParameterSet& params, const TrajectoryWindow& window,
                                      const MaskedAdjacency& adj, const Eigen::VectorXd& eps,
                                      const Trajectory& gt_rel, double beta, double step, double floor) {
    nn::ParameterSet analytic = params;
    analytic.zero_grad();
    nn::backward(nn::forward(analytic, window, adj, eps, gt_rel, beta), analytic);

    // A perturbed weight only changes the network downstream of it, so the
    // upstream activations are computed once and reused.
    const int ego = adj.ego;
    const Eigen::Vector2d last_rel = window.rel[static_cast<std::size_t>(ego)].row(window.obs_len - 1).transpose();
    const nn::SceneEncoding enc = nn::encode_scene(window, params);
    const nn::Interactions v = nn::aggregate_interactions(enc.e, enc.p.row(ego).transpose(), adj, params);
    const nn::LatentSample s = nn::latent(v, params, eps);

    auto from_decoder = [&](const nn::ParameterSet& p, const nn::LatentSample& q) {
        return nn::loss(nn::decode(q.z, last_rel, window.pred_len, p), gt_rel, q.dist, beta);
    };
    auto from_latent = [&](const nn::ParameterSet& p, const nn::Interactions& w) {
        return from_decoder(p, nn::latent(w, p, eps));
    };
    auto from_gcn = [&](const nn::ParameterSet& p) {
        return from_latent(p, nn::aggregate_interactions(enc.e, enc.p.row(ego).transpose(), adj, p));
    };
    auto total = [&](const nn::ParameterSet& p, const std::string& name) {
        if (name.starts_with("dec_")) return from_decoder(p, s);
        if (name.starts_with("vae.")) return from_latent(p, v);
        if (name.starts_with("gcn_")) return from_gcn(p);
        const nn::SceneEncoding pe = nn::encode_scene(window, p);
        return from_latent(p, nn::aggregate_interactions(pe.e, pe.p.row(ego).transpose(), adj, p));
    };

    GradientCheck result;
    // The staged evaluation must agree with the traced forward pass.
    const double traced = nn::forward(params, window, adj, eps, gt_rel, beta).total;
    const double staged = total(params, "");
    if (std::fabs(traced - staged) > 1e-12 * std::max(1.0, std::fabs(traced))) {
        result.max_rel_error = std::numeric_limits<double>::infinity();
        result.worst_tensor = "staged evaluation";
        result.worst_index = 0;
        result.worst_analytic = traced;
        result.worst_numeric = staged;
        return result;
    }

    nn::ParameterSet probe = params;
    auto probe_tensors = probe.tensors();
    const auto grads = analytic.tensors();
    for (std::size_t k = 0; k < probe_tensors.size(); ++k) {
        nn::Tensor& t = *probe_tensors[k];
        for (Eigen::Index idx = 0; idx < t.value.size(); ++idx) {
            double& w = t.value.data()[idx];
            const double saved = w;
            w = saved + step;
            const double up = total(probe, t.name);
            w = saved - step;
            const double down = total(probe, t.name);
            w = saved;

            const double numeric = (up - down) / (2.0 * step);
            const double a = grads[k]->grad.data()[idx];
            const double rel = std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), floor});
            ++result.checked;
            if (result.worst_index < 0 || rel > result.max_rel_error) {
                result.max_rel_error = rel;
                result.worst_tensor = t.name;
                result.worst_index = idx;
                result.worst_analytic = a;
                result.worst_numeric = numeric;
            }
        }
    }
    return result;
}

}  // namespace comogcn::oracle
