#include <comogcn/neuralcore.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace comogcn {

std::vector<LabeledWindow> attach_labels(std::span<const TrajectoryWindow> windows,
                                         std::span<const GroupLabeling> labelings) {
    std::unordered_map<std::int64_t, const GroupLabeling*> by_id;
    for (const auto& l : labelings) by_id[l.window_id] = &l;
    std::vector<LabeledWindow> out;
    out.reserve(windows.size());
    for (const auto& w : windows) {
        auto it = by_id.find(w.window_id);
        if (it == by_id.end()) throw ConfigError("no labels for window " + std::to_string(w.window_id));
        for (PedId p : w.ped_ids) {
            if (!it->second->label.count(p))
                throw ConfigError("labels for window " + std::to_string(w.window_id) + " miss pedestrian " +
                                  std::to_string(p));
        }
        out.push_back(LabeledWindow{w, *it->second});
    }
    return out;
}

namespace nn {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd sigmoid(const MatrixXd& a) { return (1.0 + (-a.array()).exp()).inverse().matrix(); }

// tanh through the vectorized exp; std::tanh is scalar and dominated the encoder.
MatrixXd fast_tanh(const MatrixXd& a) {
    return (1.0 - 2.0 / ((2.0 * a.array()).exp() + 1.0)).matrix();
}

void lstm_reset(LstmTrace& tr, Eigen::Index cols) {
    tr = LstmTrace{};
    for (auto* v : {&tr.x, &tr.i, &tr.f, &tr.g, &tr.o, &tr.tanh_c, &tr.h, &tr.c}) v->reserve(16);
    tr.h.push_back(MatrixXd::Zero(kHiddenDim, cols));
    tr.c.push_back(MatrixXd::Zero(kHiddenDim, cols));
}

void lstm_step(LstmTrace& tr, const Tensor& wx, const Tensor& wh, const Tensor& b, MatrixXd x) {
    const MatrixXd& h_prev = tr.h.back();
    const MatrixXd& c_prev = tr.c.back();
    MatrixXd a = b.value.col(0).replicate(1, x.cols());
    a.noalias() += wx.value * x;
    a.noalias() += wh.value * h_prev;

    MatrixXd i = sigmoid(a.middleRows(0, kHiddenDim));
    MatrixXd f = sigmoid(a.middleRows(kHiddenDim, kHiddenDim));
    MatrixXd g = fast_tanh(a.middleRows(2 * kHiddenDim, kHiddenDim));
    MatrixXd o = sigmoid(a.middleRows(3 * kHiddenDim, kHiddenDim));
    MatrixXd c = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
    MatrixXd tc = fast_tanh(c);
    MatrixXd h = o.cwiseProduct(tc);

    tr.x.push_back(std::move(x));
    tr.i.push_back(std::move(i));
    tr.f.push_back(std::move(f));
    tr.g.push_back(std::move(g));
    tr.o.push_back(std::move(o));
    tr.tanh_c.push_back(std::move(tc));
    tr.c.push_back(std::move(c));
    tr.h.push_back(std::move(h));
}

struct LstmGrad {
    MatrixXd dx;
    MatrixXd dh_prev;
    MatrixXd dc_prev;
};

// Gradient through step t given dL/dh_t and the cell gradient from step t+1.
LstmGrad lstm_step_backward(const LstmTrace& tr, std::size_t t, const MatrixXd& dh, const MatrixXd& dc_next,
                            Tensor& wx, Tensor& wh, Tensor& b) {
    const auto& i = tr.i[t];
    const auto& f = tr.f[t];
    const auto& g = tr.g[t];
    const auto& o = tr.o[t];
    const auto& tc = tr.tanh_c[t];
    const auto& c_prev = tr.c[t];

    const MatrixXd dc = dc_next + dh.cwiseProduct(o).cwiseProduct((1.0 - tc.array().square()).matrix());
    const auto cols = dh.cols();
    MatrixXd da(kGates, cols);
    da.middleRows(0, kHiddenDim) = (dc.array() * g.array() * i.array() * (1.0 - i.array())).matrix();
    da.middleRows(kHiddenDim, kHiddenDim) = (dc.array() * c_prev.array() * f.array() * (1.0 - f.array())).matrix();
    da.middleRows(2 * kHiddenDim, kHiddenDim) = (dc.array() * i.array() * (1.0 - g.array().square())).matrix();
    da.middleRows(3 * kHiddenDim, kHiddenDim) = (dh.array() * tc.array() * o.array() * (1.0 - o.array())).matrix();

    wx.grad.noalias() += da * tr.x[t].transpose();
    wh.grad.noalias() += da * tr.h[t].transpose();
    b.grad.col(0) += da.rowwise().sum();

    return LstmGrad{wx.value.transpose() * da, wh.value.transpose() * da, dc.cwiseProduct(f)};
}

void check_finite(const Trajectory& t) {
    if (!t.allFinite()) throw ContractViolation("non-finite network input");
}

// Pooled social feature for `ego`; records the argmax pedestrian per output dim.
VectorXd social_pool(const ParameterSet& params, std::span<const Eigen::Vector2d> last_pos, int ego,
                     MatrixXd* rel_out, std::vector<int>* argmax_out) {
    const int n = static_cast<int>(last_pos.size());
    MatrixXd rel(2, n);
    for (int j = 0; j < n; ++j) rel.col(j) = last_pos[static_cast<std::size_t>(j)] - last_pos[static_cast<std::size_t>(ego)];
    VectorXd p = VectorXd::Zero(kSocialDim);
    std::vector<int> argmax(kSocialDim, -1);
    if (n > 1) {
        MatrixXd s = params.social_w.value * rel;
        s.colwise() += params.social_b.value.col(0);
        for (int k = 0; k < kSocialDim; ++k) {
            double best = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < n; ++j) {
                if (j == ego) continue;
                if (s(k, j) > best) {
                    best = s(k, j);
                    argmax[static_cast<std::size_t>(k)] = j;
                }
            }
            p(k) = best;
        }
    }
    if (rel_out) *rel_out = std::move(rel);
    if (argmax_out) *argmax_out = std::move(argmax);
    return p;
}

void run_encoder(const ParameterSet& params, std::span<const Trajectory> obs_rel, LstmTrace& tr,
                 std::vector<MatrixXd>& inputs) {
    const auto n = static_cast<Eigen::Index>(obs_rel.size());
    const auto steps = obs_rel.front().rows();
    lstm_reset(tr, n);
    inputs.clear();
    for (Eigen::Index t = 0; t < steps; ++t) {
        MatrixXd r(2, n);
        for (Eigen::Index j = 0; j < n; ++j) r.col(j) = obs_rel[static_cast<std::size_t>(j)].row(t).transpose();
        MatrixXd x = params.enc_embed_w.value * r;
        x.colwise() += params.enc_embed_b.value.col(0);
        inputs.push_back(std::move(r));
        lstm_step(tr, params.enc_lstm_wx, params.enc_lstm_wh, params.enc_lstm_b, std::move(x));
    }
}

MatrixXd gcn_input(const MatrixXd& e, const VectorXd& p_ego) {
    MatrixXd h0(e.rows(), kGcnInputDim);
    h0.leftCols(kHiddenDim) = e;
    h0.rightCols(kSocialDim) = p_ego.transpose().replicate(e.rows(), 1);
    return h0;
}

VectorXd run_gcn(const MatrixXd& h0, const MatrixXd& a, int ego, const Tensor& w1, const Tensor& w2, GcnTrace& tr) {
    tr.a = a;
    tr.ah0 = a * h0;
    tr.z1 = tr.ah0 * w1.value;
    tr.h1 = tr.z1.cwiseMax(0.0);
    tr.a_ego = a.row(ego);
    tr.ah1_ego = tr.a_ego * tr.h1;
    return (tr.ah1_ego * w2.value).transpose();
}

// Returns dL/dH0 for one GCN branch given dL/dV.
MatrixXd gcn_backward(const GcnTrace& tr, const VectorXd& dv, Tensor& w1, Tensor& w2) {
    w2.grad.noalias() += tr.ah1_ego.transpose() * dv.transpose();
    const Eigen::RowVectorXd d_ah1 = (w2.value * dv).transpose();
    MatrixXd dz1 = tr.a_ego.transpose() * d_ah1;
    dz1.array() *= (tr.z1.array() > 0.0).cast<double>();
    w1.grad.noalias() += tr.ah0.transpose() * dz1;
    return tr.a.transpose() * (dz1 * w1.value.transpose());
}

GaussianLatent split_latent(const VectorXd& y) {
    return GaussianLatent{y.head(kLatentDim), y.tail(kLatentDim)};
}

VectorXd vae_forward(const Interactions& v, const ParameterSet& params, VectorXd* in_out) {
    VectorXd in(2 * kGcnOutputDim);
    in << v.intra, v.inter;
    VectorXd y = params.vae_w.value * in + params.vae_b.value.col(0);
    if (in_out) *in_out = std::move(in);
    return y;
}

void run_decoder(const ParameterSet& params, const VectorXd& z, const Eigen::Vector2d& last_rel, int steps,
                 LstmTrace& tr, std::vector<Eigen::Vector2d>& prev_inputs, Trajectory& pred) {
    lstm_reset(tr, 1);
    prev_inputs.clear();
    pred.resize(steps, 2);
    Eigen::Vector2d prev = last_rel;
    for (int t = 0; t < steps; ++t) {
        VectorXd x(kLatentDim + kEmbedDim);
        x.head(kLatentDim) = z;
        x.tail(kEmbedDim) = params.dec_embed_w.value * prev + params.dec_embed_b.value.col(0);
        prev_inputs.push_back(prev);
        lstm_step(tr, params.dec_lstm_wx, params.dec_lstm_wh, params.dec_lstm_b, std::move(x));
        const Eigen::Vector2d y = params.out_w.value * tr.h.back() + params.out_b.value.col(0);
        pred.row(t) = y.transpose();
        prev = y;
    }
}

std::vector<Eigen::Vector2d> last_positions(const TrajectoryWindow& w) {
    std::vector<Eigen::Vector2d> out;
    out.reserve(w.size());
    for (const auto& t : w.abs) out.emplace_back(t.row(w.obs_len - 1).transpose());
    return out;
}

void check_adjacency(const MaskedAdjacency& adj, Eigen::Index n) {
    if (adj.intra.rows() != n || adj.intra.cols() != n || adj.inter.rows() != n || adj.inter.cols() != n)
        throw ContractViolation("adjacency shape does not match the number of pedestrians");
    if (adj.ego < 0 || adj.ego >= n) throw ContractViolation("ego index out of range");
}

}  // namespace

ParameterSet ParameterSet::initialize(std::uint64_t seed) {
    ParameterSet ps;
    std::mt19937_64 rng(seed);
    for (Tensor* t : ps.tensors()) {
        if (t->name.ends_with(".bias")) continue;
        const bool gcn = t->name.starts_with("gcn_");
        const double fan_in = static_cast<double>(gcn ? t->value.rows() : t->value.cols());
        const double bound = 1.0 / std::sqrt(fan_in);
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (Eigen::Index r = 0; r < t->value.rows(); ++r)
            for (Eigen::Index c = 0; c < t->value.cols(); ++c) t->value(r, c) = dist(rng);
    }
    return ps;
}

std::vector<Tensor*> ParameterSet::tensors() {
    return {&enc_embed_w, &enc_embed_b, &enc_lstm_wx, &enc_lstm_wh, &enc_lstm_b, &social_w, &social_b,
            &intra_w1,    &intra_w2,    &inter_w1,    &inter_w2,    &vae_w,      &vae_b,    &dec_embed_w,
            &dec_embed_b, &dec_lstm_wx, &dec_lstm_wh, &dec_lstm_b,  &out_w,      &out_b};
}

std::vector<const Tensor*> ParameterSet::tensors() const {
    auto mut = const_cast<ParameterSet*>(this)->tensors();
    return {mut.begin(), mut.end()};
}

void ParameterSet::zero_grad() {
    for (Tensor* t : tensors()) t->grad.setZero();
}

std::size_t ParameterSet::parameter_count() const {
    std::size_t n = 0;
    for (const Tensor* t : tensors()) n += static_cast<std::size_t>(t->value.size());
    return n;
}

bool ParameterSet::all_finite() const {
    for (const Tensor* t : tensors())
        if (!t->value.allFinite()) return false;
    return true;
}

SceneEncoding encode_scene(std::span<const Trajectory> obs_rel, std::span<const Eigen::Vector2d> last_pos,
                           const ParameterSet& params) {
    if (obs_rel.empty()) throw ContractViolation("encode_scene needs at least one pedestrian");
    if (obs_rel.size() != last_pos.size()) throw ContractViolation("one last position per pedestrian required");
    for (const auto& t : obs_rel) {
        check_finite(t);
        if (t.rows() != obs_rel.front().rows() || t.rows() < 1)
            throw ContractViolation("observed tracks must share a positive length");
    }
    for (const auto& p : last_pos)
        if (!p.allFinite()) throw ContractViolation("non-finite network input");

    LstmTrace tr;
    std::vector<MatrixXd> inputs;
    run_encoder(params, obs_rel, tr, inputs);

    SceneEncoding enc;
    enc.e = tr.h.back().transpose();
    const int n = static_cast<int>(obs_rel.size());
    enc.p.resize(n, kSocialDim);
    for (int i = 0; i < n; ++i) enc.p.row(i) = social_pool(params, last_pos, i, nullptr, nullptr).transpose();
    return enc;
}

SceneEncoding encode_scene(const TrajectoryWindow& window, const ParameterSet& params) {
    const auto rel = window.observed_rel();
    const auto last = last_positions(window);
    return encode_scene(rel, last, params);
}

MatrixXd gcn_layer(const MatrixXd& h, const MatrixXd& a, const MatrixXd& w, bool activate) {
    if (a.rows() != a.cols() || a.cols() != h.rows() || h.cols() != w.rows())
        throw ContractViolation("gcn_layer: shapes do not conform");
    MatrixXd out = (a * h) * w;
    if (activate) out = out.cwiseMax(0.0);
    return out;
}

Interactions aggregate_interactions(const MatrixXd& e, const VectorXd& p_ego, const MaskedAdjacency& adj,
                                    const ParameterSet& params) {
    if (e.cols() != kHiddenDim || p_ego.size() != kSocialDim)
        throw ContractViolation("aggregate_interactions: bad feature dimensions");
    check_adjacency(adj, e.rows());
    const MatrixXd h0 = gcn_input(e, p_ego);
    GcnTrace scratch;
    Interactions v;
    v.intra = run_gcn(h0, adj.intra, adj.ego, params.intra_w1, params.intra_w2, scratch);
    v.inter = run_gcn(h0, adj.inter, adj.ego, params.inter_w1, params.inter_w2, scratch);
    return v;
}

GaussianLatent latent_distribution(const Interactions& v, const ParameterSet& params) {
    return split_latent(vae_forward(v, params, nullptr));
}

LatentSample latent(const Interactions& v, const ParameterSet& params, const VectorXd& eps) {
    if (eps.size() != kLatentDim) throw ContractViolation("latent noise must have 8 entries");
    LatentSample s;
    s.dist = latent_distribution(v, params);
    s.eps = eps;
    s.z = s.dist.mu + (0.5 * s.dist.logvar).array().exp().matrix().cwiseProduct(eps);
    return s;
}

LatentSample latent(const Interactions& v, const ParameterSet& params, std::mt19937_64& rng) {
    return latent(v, params, draw_standard_normal(rng));
}

LatentSample latent_mean(const Interactions& v, const ParameterSet& params) {
    LatentSample s;
    s.dist = latent_distribution(v, params);
    s.eps = VectorXd::Zero(kLatentDim);
    s.z = s.dist.mu;
    return s;
}

VectorXd draw_standard_normal(std::mt19937_64& rng, int dim) {
    std::normal_distribution<double> normal(0.0, 1.0);
    VectorXd eps(dim);
    for (int k = 0; k < dim; ++k) eps(k) = normal(rng);
    return eps;
}

Trajectory decode(const VectorXd& z, const Eigen::Vector2d& last_obs_rel, int steps, const ParameterSet& params) {
    if (z.size() != kLatentDim) throw ContractViolation("decode: z must have 8 entries");
    if (!z.allFinite() || !last_obs_rel.allFinite()) throw ContractViolation("non-finite network input");
    LstmTrace tr;
    std::vector<Eigen::Vector2d> prev;
    Trajectory pred;
    run_decoder(params, z, last_obs_rel, steps, tr, prev, pred);
    return pred;
}

Trajectory displacements_to_positions(const Trajectory& rel, const Eigen::Vector2d& last_obs_abs) {
    Trajectory out(rel.rows(), 2);
    Eigen::RowVector2d pos = last_obs_abs.transpose();
    for (Eigen::Index t = 0; t < rel.rows(); ++t) {
        pos += rel.row(t);
        out.row(t) = pos;
    }
    return out;
}

double kl_divergence(const GaussianLatent& q) {
    return 0.5 * (q.mu.array().square() + q.logvar.array().exp() - q.logvar.array() - 1.0).sum();
}

double reconstruction_loss(const Trajectory& pred_rel, const Trajectory& gt_rel) {
    if (pred_rel.rows() != gt_rel.rows() || pred_rel.rows() == 0)
        throw ContractViolation("prediction and ground truth lengths differ");
    return (pred_rel - gt_rel).rowwise().squaredNorm().mean();
}

double loss(const Trajectory& pred_rel, const Trajectory& gt_rel, const GaussianLatent& q, double beta) {
    return reconstruction_loss(pred_rel, gt_rel) + beta * kl_divergence(q);
}

ForwardTrace forward(const ParameterSet& params, const TrajectoryWindow& window, const MaskedAdjacency& adj,
                     const VectorXd& eps, const Trajectory& gt_rel, double beta) {
    const auto n = static_cast<Eigen::Index>(window.size());
    if (n < 1) throw ContractViolation("forward needs at least one pedestrian");
    check_adjacency(adj, n);
    if (eps.size() != kLatentDim) throw ContractViolation("latent noise must have 8 entries");

    ForwardTrace tr;
    tr.ego = adj.ego;
    tr.n = static_cast<int>(n);
    tr.beta = beta;

    const auto obs_rel = window.observed_rel();
    for (const auto& t : obs_rel) check_finite(t);
    run_encoder(params, obs_rel, tr.encoder, tr.enc_rel);
    const MatrixXd e = tr.encoder.h.back().transpose();

    const auto last = last_positions(window);
    const VectorXd p = social_pool(params, last, adj.ego, &tr.social_rel, &tr.social_argmax);

    tr.h0 = gcn_input(e, p);
    Interactions v;
    v.intra = run_gcn(tr.h0, adj.intra, adj.ego, params.intra_w1, params.intra_w2, tr.intra);
    v.inter = run_gcn(tr.h0, adj.inter, adj.ego, params.inter_w1, params.inter_w2, tr.inter);

    const VectorXd y = vae_forward(v, params, &tr.vae_in);
    tr.sample.dist = split_latent(y);
    tr.sample.eps = eps;
    tr.sample.z = tr.sample.dist.mu + (0.5 * tr.sample.dist.logvar).array().exp().matrix().cwiseProduct(eps);

    const Eigen::Vector2d last_rel = window.rel[static_cast<std::size_t>(adj.ego)].row(window.obs_len - 1).transpose();
    run_decoder(params, tr.sample.z, last_rel, window.pred_len, tr.decoder, tr.dec_prev, tr.pred_rel);

    if (gt_rel.rows() > 0) {
        tr.gt_rel = gt_rel;
        tr.recon = reconstruction_loss(tr.pred_rel, gt_rel);
        tr.kl = kl_divergence(tr.sample.dist);
        tr.total = tr.recon + beta * tr.kl;
    }
    tr.recorded = true;
    return tr;
}

void backward(const ForwardTrace& tr, ParameterSet& params, double scale) {
    if (!tr.recorded) throw ContractViolation("backward called without a recorded forward pass");
    if (tr.gt_rel.rows() == 0) throw ContractViolation("forward trace carries no loss to differentiate");

    const auto steps = static_cast<Eigen::Index>(tr.pred_rel.rows());
    const double recon_scale = scale * 2.0 / static_cast<double>(steps);

    // Decoder, newest step first; output t also feeds step t+1's embedding.
    VectorXd dz = VectorXd::Zero(kLatentDim);
    MatrixXd dh = MatrixXd::Zero(kHiddenDim, 1);
    MatrixXd dc = MatrixXd::Zero(kHiddenDim, 1);
    Eigen::Vector2d dy_next_input = Eigen::Vector2d::Zero();
    for (Eigen::Index t = steps - 1; t >= 0; --t) {
        const auto ts = static_cast<std::size_t>(t);
        const Eigen::Vector2d dy =
            recon_scale * (tr.pred_rel.row(t) - tr.gt_rel.row(t)).transpose() + dy_next_input;
        params.out_w.grad.noalias() += dy * tr.decoder.h[ts + 1].transpose();
        params.out_b.grad.col(0) += dy;
        dh += params.out_w.value.transpose() * dy;

        const auto g = lstm_step_backward(tr.decoder, ts, dh, dc, params.dec_lstm_wx, params.dec_lstm_wh,
                                          params.dec_lstm_b);
        dh = g.dh_prev;
        dc = g.dc_prev;
        dz += g.dx.col(0).head(kLatentDim);
        const VectorXd de = g.dx.col(0).tail(kEmbedDim);
        params.dec_embed_w.grad.noalias() += de * tr.dec_prev[ts].transpose();
        params.dec_embed_b.grad.col(0) += de;
        dy_next_input = params.dec_embed_w.value.transpose() * de;
    }

    // Latent head: z = mu + exp(logvar / 2) * eps, plus beta * KL.
    const auto& q = tr.sample.dist;
    const VectorXd sigma = (0.5 * q.logvar).array().exp().matrix();
    VectorXd dy(2 * kLatentDim);
    dy.head(kLatentDim) = dz + scale * tr.beta * q.mu;
    dy.tail(kLatentDim) = (dz.array() * tr.sample.eps.array() * 0.5 * sigma.array()).matrix() +
                          scale * tr.beta * 0.5 * (q.logvar.array().exp() - 1.0).matrix();
    params.vae_w.grad.noalias() += dy * tr.vae_in.transpose();
    params.vae_b.grad.col(0) += dy;
    const VectorXd dv = params.vae_w.value.transpose() * dy;

    MatrixXd dh0 = gcn_backward(tr.intra, dv.head(kGcnOutputDim), params.intra_w1, params.intra_w2);
    dh0 += gcn_backward(tr.inter, dv.tail(kGcnOutputDim), params.inter_w1, params.inter_w2);

    // Social pooling: gradient flows only to the argmax pedestrian per dim.
    const VectorXd dp = dh0.rightCols(kSocialDim).colwise().sum().transpose();
    for (int k = 0; k < kSocialDim; ++k) {
        const int j = tr.social_argmax[static_cast<std::size_t>(k)];
        if (j < 0) continue;
        params.social_w.grad.row(k) += dp(k) * tr.social_rel.col(j).transpose();
        params.social_b.grad(k, 0) += dp(k);
    }

    // Encoder: only the final hidden state is consumed.
    MatrixXd enc_dh = dh0.leftCols(kHiddenDim).transpose();
    MatrixXd enc_dc = MatrixXd::Zero(kHiddenDim, tr.n);
    for (std::size_t t = tr.enc_rel.size(); t-- > 0;) {
        const auto g = lstm_step_backward(tr.encoder, t, enc_dh, enc_dc, params.enc_lstm_wx, params.enc_lstm_wh,
                                          params.enc_lstm_b);
        enc_dh = g.dh_prev;
        enc_dc = g.dc_prev;
        params.enc_embed_w.grad.noalias() += g.dx * tr.enc_rel[t].transpose();
        params.enc_embed_b.grad.col(0) += g.dx.rowwise().sum();
    }
}

GaussianLatent infer_latent(const ParameterSet& params, const TrajectoryWindow& window, const MaskedAdjacency& adj) {
    const auto obs_rel = window.observed_rel();
    const auto last = last_positions(window);
    check_adjacency(adj, static_cast<Eigen::Index>(window.size()));
    for (const auto& t : obs_rel) check_finite(t);
    LstmTrace tr;
    std::vector<MatrixXd> inputs;
    run_encoder(params, obs_rel, tr, inputs);
    const MatrixXd e = tr.h.back().transpose();
    const VectorXd p = social_pool(params, last, adj.ego, nullptr, nullptr);
    return latent_distribution(aggregate_interactions(e, p, adj, params), params);
}

Trajectory predict_positions(const ParameterSet& params, const TrajectoryWindow& window, int ego, const VectorXd& z) {
    const auto e = static_cast<std::size_t>(ego);
    const Eigen::Vector2d last_rel = window.rel[e].row(window.obs_len - 1).transpose();
    const Eigen::Vector2d last_abs = window.abs[e].row(window.obs_len - 1).transpose();
    return displacements_to_positions(decode(z, last_rel, window.pred_len, params), last_abs);
}

Adam::Adam(const ParameterSet& params, AdamConfig config) : config_(config) {
    for (const Tensor* t : params.tensors()) {
        m_.push_back(MatrixXd::Zero(t->value.rows(), t->value.cols()));
        v_.push_back(MatrixXd::Zero(t->value.rows(), t->value.cols()));
    }
}

void Adam::step(ParameterSet& params) {
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    auto tensors = params.tensors();
    for (std::size_t k = 0; k < tensors.size(); ++k) {
        const MatrixXd& g = tensors[k]->grad;
        m_[k] = config_.beta1 * m_[k] + (1.0 - config_.beta1) * g;
        v_[k] = config_.beta2 * v_[k] + (1.0 - config_.beta2) * g.cwiseProduct(g);
        tensors[k]->value.array() -=
            config_.lr * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + config_.eps);
    }
}

TrainResult train(std::span<const LabeledWindow> data, const TrainConfig& config, const EpochCallback& on_epoch) {
    return train(ParameterSet::initialize(config.seed), data, config, on_epoch);
}

TrainResult train(ParameterSet init, std::span<const LabeledWindow> data, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
    if (config.batch_size < 1 || config.epochs < 0 || config.variety_k < 1)
        throw ConfigError("batch_size and variety_k must be positive, epochs nonnegative");

    struct Example {
        const TrajectoryWindow* window;
        MaskedAdjacency adj;
        Trajectory gt_rel;
    };
    std::vector<Example> examples;
    for (const auto& lw : data) {
        const auto groups = lw.labels.groups_in_order(lw.window.ped_ids);
        for (int ego = 0; ego < static_cast<int>(lw.window.size()); ++ego) {
            examples.push_back(Example{&lw.window, build_masked_adjacency(groups, ego, config.masks),
                                       lw.window.rel[static_cast<std::size_t>(ego)].bottomRows(lw.window.pred_len)});
        }
    }
    if (examples.empty()) throw ConfigError("training set is empty");

    TrainResult result{std::move(init), {}};
    ParameterSet& params = result.params;
    Adam adam(params, config.adam);
    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            const double scale = 1.0 / static_cast<double>(stop - start);
            params.zero_grad();
            for (std::size_t b = start; b < stop; ++b) {
                const Example& ex = examples[order[b]];
                ForwardTrace best;
                for (int k = 0; k < config.variety_k; ++k) {
                    auto tr = forward(params, *ex.window, ex.adj, draw_standard_normal(rng), ex.gt_rel, config.beta);
                    if (!best.recorded || tr.recon < best.recon) best = std::move(tr);
                }
                epoch_sum += best.total;
                backward(best, params, scale);
            }
            adam.step(params);
        }
        const double mean = epoch_sum / static_cast<double>(examples.size());
        result.epoch_loss.push_back(mean);
        if (on_epoch) on_epoch(epoch, mean);
    }
    return result;
}

void write_checkpoint(std::ostream& out, const ParameterSet& params) {
    out << "comogcn-checkpoint 1\n" << std::setprecision(17);
    for (const Tensor* t : params.tensors()) {
        out << "tensor " << t->name << ' ' << t->value.rows() << ' ' << t->value.cols() << '\n';
        for (Eigen::Index r = 0; r < t->value.rows(); ++r) {
            for (Eigen::Index c = 0; c < t->value.cols(); ++c) {
                if (r || c) out << ' ';
                out << t->value(r, c);
            }
        }
        out << '\n';
    }
}

ParameterSet read_checkpoint(std::istream& in) {
    std::string magic, version;
    if (!(in >> magic >> version) || magic != "comogcn-checkpoint" || version != "1")
        throw FormatError("checkpoint: missing 'comogcn-checkpoint 1' header");
    ParameterSet ps;
    for (Tensor* t : ps.tensors()) {
        std::string tag, name;
        Eigen::Index rows = 0, cols = 0;
        if (!(in >> tag >> name >> rows >> cols) || tag != "tensor")
            throw FormatError("checkpoint: expected tensor record for " + t->name);
        if (name != t->name || rows != t->value.rows() || cols != t->value.cols()) {
            throw FormatError("checkpoint: tensor " + name + " " + std::to_string(rows) + "x" + std::to_string(cols) +
                              " does not match expected " + t->name + " " + std::to_string(t->value.rows()) + "x" +
                              std::to_string(t->value.cols()));
        }
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) {
                std::string tok;
                if (!(in >> tok)) throw FormatError("checkpoint: truncated tensor " + name);
                try {
                    std::size_t used = 0;
                    t->value(r, c) = std::stod(tok, &used);
                    if (used != tok.size()) throw std::invalid_argument(tok);
                } catch (const std::exception&) {
                    throw FormatError("checkpoint: bad value '" + tok + "' in " + name);
                }
            }
        }
    }
    std::string extra;
    if (in >> extra) throw FormatError("checkpoint: unexpected trailing data '" + extra + "'");
    if (!ps.all_finite()) throw FormatError("checkpoint: non-finite parameter");
    return ps;
}

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    write_checkpoint(out, params);
}

ParameterSet load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open checkpoint " + path.string());
    return read_checkpoint(in);
}

}  // namespace nn
}  // namespace comogcn
