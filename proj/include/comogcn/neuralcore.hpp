#pragma once

#include <comogcn/coherence.hpp>
#include <comogcn/graph.hpp>
#include <comogcn/trajdata.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace comogcn {

/// A window paired with its coherence labels; the unit the model trains on.
struct LabeledWindow {
    TrajectoryWindow window;
    GroupLabeling labels;
};

/// Matches labelings to windows by window_id. Throws ConfigError when a
/// window has no labeling or a labeling misses one of its pedestrians.
std::vector<LabeledWindow> attach_labels(std::span<const TrajectoryWindow> windows,
                                         std::span<const GroupLabeling> labelings);

namespace nn {

inline constexpr int kEmbedDim = 16;
inline constexpr int kHiddenDim = 32;
inline constexpr int kSocialDim = 16;
inline constexpr int kGcnInputDim = kHiddenDim + kSocialDim;  // 48
inline constexpr int kGcnHiddenDim = 72;
inline constexpr int kGcnOutputDim = 8;
inline constexpr int kLatentDim = 8;
inline constexpr int kGates = 4 * kHiddenDim;

struct Tensor {
    std::string name;
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;

    Tensor() = default;
    Tensor(std::string n, Eigen::Index rows, Eigen::Index cols)
        : name(std::move(n)), value(Eigen::MatrixXd::Zero(rows, cols)), grad(Eigen::MatrixXd::Zero(rows, cols)) {}
};

/// Every trainable weight of the network. Linear maps are stored out x in
/// (y = W x + b); GCN weights are in x out (H' = A H W). LSTM gates are
/// stacked input, forget, cell, output.
struct ParameterSet {
    Tensor enc_embed_w{"enc_embed.weight", kEmbedDim, 2};
    Tensor enc_embed_b{"enc_embed.bias", kEmbedDim, 1};
    Tensor enc_lstm_wx{"enc_lstm.weight_x", kGates, kEmbedDim};
    Tensor enc_lstm_wh{"enc_lstm.weight_h", kGates, kHiddenDim};
    Tensor enc_lstm_b{"enc_lstm.bias", kGates, 1};
    Tensor social_w{"social.weight", kSocialDim, 2};
    Tensor social_b{"social.bias", kSocialDim, 1};
    Tensor intra_w1{"gcn_intra.weight1", kGcnInputDim, kGcnHiddenDim};
    Tensor intra_w2{"gcn_intra.weight2", kGcnHiddenDim, kGcnOutputDim};
    Tensor inter_w1{"gcn_inter.weight1", kGcnInputDim, kGcnHiddenDim};
    Tensor inter_w2{"gcn_inter.weight2", kGcnHiddenDim, kGcnOutputDim};
    Tensor vae_w{"vae.weight", 2 * kLatentDim, 2 * kGcnOutputDim};
    Tensor vae_b{"vae.bias", 2 * kLatentDim, 1};
    Tensor dec_embed_w{"dec_embed.weight", kEmbedDim, 2};
    Tensor dec_embed_b{"dec_embed.bias", kEmbedDim, 1};
    Tensor dec_lstm_wx{"dec_lstm.weight_x", kGates, kLatentDim + kEmbedDim};
    Tensor dec_lstm_wh{"dec_lstm.weight_h", kGates, kHiddenDim};
    Tensor dec_lstm_b{"dec_lstm.bias", kGates, 1};
    Tensor out_w{"dec_out.weight", 2, kHiddenDim};
    Tensor out_b{"dec_out.bias", 2, 1};

    /// Weights uniform in +-1/sqrt(fan_in), biases zero.
    static ParameterSet initialize(std::uint64_t seed);

    std::vector<Tensor*> tensors();
    std::vector<const Tensor*> tensors() const;
    void zero_grad();
    std::size_t parameter_count() const;
    bool all_finite() const;
};

struct SceneEncoding {
    Eigen::MatrixXd e;  ///< N x 32, final encoder hidden state per pedestrian
    Eigen::MatrixXd p;  ///< N x 16, pooled social feature per pedestrian
};

/// Encodes observed displacements (N tracks of obs_len x 2) and last observed
/// positions (one per pedestrian).
SceneEncoding encode_scene(std::span<const Trajectory> obs_rel, std::span<const Eigen::Vector2d> last_pos,
                           const ParameterSet& params);
SceneEncoding encode_scene(const TrajectoryWindow& window, const ParameterSet& params);

/// One graph convolution: A H W, optionally followed by ReLU.
Eigen::MatrixXd gcn_layer(const Eigen::MatrixXd& h, const Eigen::MatrixXd& a, const Eigen::MatrixXd& w,
                          bool activate);

struct Interactions {
    Eigen::VectorXd intra;
    Eigen::VectorXd inter;
};

Interactions aggregate_interactions(const Eigen::MatrixXd& e, const Eigen::VectorXd& p_ego,
                                    const MaskedAdjacency& adj, const ParameterSet& params);

struct GaussianLatent {
    Eigen::VectorXd mu;
    Eigen::VectorXd logvar;
};

struct LatentSample {
    Eigen::VectorXd z;
    Eigen::VectorXd eps;  ///< standard-normal draw used; zero in mean mode
    GaussianLatent dist;
};

GaussianLatent latent_distribution(const Interactions& v, const ParameterSet& params);
/// z = mu + exp(logvar / 2) * eps.
LatentSample latent(const Interactions& v, const ParameterSet& params, const Eigen::VectorXd& eps);
LatentSample latent(const Interactions& v, const ParameterSet& params, std::mt19937_64& rng);
/// z = mu exactly.
LatentSample latent_mean(const Interactions& v, const ParameterSet& params);

Eigen::VectorXd draw_standard_normal(std::mt19937_64& rng, int dim = kLatentDim);

/// Self-feeding decoder: returns `steps` predicted displacements. The only
/// randomness is in z, so the decoder is deterministic given z.
Trajectory decode(const Eigen::VectorXd& z, const Eigen::Vector2d& last_obs_rel, int steps,
                  const ParameterSet& params);

/// Cumulative sum of displacements starting from `last_obs_abs`.
Trajectory displacements_to_positions(const Trajectory& rel, const Eigen::Vector2d& last_obs_abs);

double kl_divergence(const GaussianLatent& q);
double reconstruction_loss(const Trajectory& pred_rel, const Trajectory& gt_rel);
double loss(const Trajectory& pred_rel, const Trajectory& gt_rel, const GaussianLatent& q, double beta);

// ---------------------------------------------------------------------------
// Traced forward pass and reverse-mode gradients.

struct LstmTrace {
    std::vector<Eigen::MatrixXd> x;                  // inputs per step
    std::vector<Eigen::MatrixXd> i, f, g, o, tanh_c;  // per step
    std::vector<Eigen::MatrixXd> h, c;                // steps + 1, index 0 = initial state
};

struct GcnTrace {
    Eigen::MatrixXd a;
    Eigen::MatrixXd ah0;  ///< A H0
    Eigen::MatrixXd z1;   ///< A H0 W1
    Eigen::MatrixXd h1;   ///< ReLU(z1)
    Eigen::RowVectorXd a_ego;
    Eigen::RowVectorXd ah1_ego;
};

/// Everything backward() needs from one (window, ego) forward pass.
struct ForwardTrace {
    bool recorded = false;
    int ego = 0;
    int n = 0;
    double beta = 1.0;

    std::vector<Eigen::MatrixXd> enc_rel;  // 2 x N per observed step
    LstmTrace encoder;
    Eigen::MatrixXd social_rel;            // 2 x N, pos_j - pos_ego
    std::vector<int> social_argmax;        // per social dim, -1 when N == 1
    Eigen::MatrixXd h0;
    GcnTrace intra, inter;
    Eigen::VectorXd vae_in;
    LatentSample sample;
    std::vector<Eigen::Vector2d> dec_prev;  // decoder embedding input per step
    LstmTrace decoder;

    Trajectory pred_rel;
    Trajectory gt_rel;
    double recon = 0.0;
    double kl = 0.0;
    double total = 0.0;
};

/// Forward pass for one ego with fixed latent noise `eps` (zeros = mean mode).
/// When `gt_rel` is non-empty the loss terms are filled in.
ForwardTrace forward(const ParameterSet& params, const TrajectoryWindow& window, const MaskedAdjacency& adj,
                     const Eigen::VectorXd& eps, const Trajectory& gt_rel, double beta);

/// Accumulates scale * d(total loss)/d(parameter) into every grad slot.
void backward(const ForwardTrace& trace, ParameterSet& params, double scale = 1.0);

// ---------------------------------------------------------------------------
// Inference helpers.

/// Posterior over z for one ego of a labeled window.
GaussianLatent infer_latent(const ParameterSet& params, const TrajectoryWindow& window, const MaskedAdjacency& adj);

/// Predicted absolute future positions (pred_len x 2) for the given z.
Trajectory predict_positions(const ParameterSet& params, const TrajectoryWindow& window, int ego,
                             const Eigen::VectorXd& z);

// ---------------------------------------------------------------------------
// Training.

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    Adam(const ParameterSet& params, AdamConfig config);
    /// Applies one update from the grad slots.
    void step(ParameterSet& params);
    long steps() const { return t_; }

private:
    AdamConfig config_;
    std::vector<Eigen::MatrixXd> m_;
    std::vector<Eigen::MatrixXd> v_;
    long t_ = 0;
};

struct TrainConfig {
    AdamConfig adam;
    int batch_size = 64;
    int epochs = 200;
    double beta = 1.0;
    /// Best-of-k reconstruction during training; 1 disables it.
    int variety_k = 1;
    std::uint64_t seed = 0;
    MaskOptions masks;
};

struct TrainResult {
    ParameterSet params;
    std::vector<double> epoch_loss;
};

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

/// Adam over shuffled mini-batches of (window, ego) pairs. Deterministic for a
/// given seed. Throws ConfigError when `data` holds no pedestrians.
TrainResult train(std::span<const LabeledWindow> data, const TrainConfig& config, const EpochCallback& on_epoch = {});
TrainResult train(ParameterSet init, std::span<const LabeledWindow> data, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// ---------------------------------------------------------------------------
// Checkpoints ("comogcn-checkpoint v1"):
//
//   comogcn-checkpoint 1
//   tensor <name> <rows> <cols>
//   <rows*cols values, row-major, 17 significant digits>
//   ...
//
// Loading requires the exact tensor names, order and shapes of ParameterSet.
void write_checkpoint(std::ostream& out, const ParameterSet& params);
ParameterSet read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params);
ParameterSet load_checkpoint(const std::filesystem::path& path);

}  // namespace nn
}  // namespace comogcn
