#pragma once

#include <comogcn/neuralcore.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace comogcn {

struct DisplacementError {
    double ade = 0.0;
    double fde = 0.0;
};

/// Published numbers for one benchmark scene, shown next to our own results.
struct PublishedReference {
    double ade, fde;                                // full model
    double cf_rate, hybrid_rate;                    // percent of pedestrians labeled
    double cf_intra, cf_inter, hy_intra, hy_inter;  // mean Frechet distance, meters
};

/// Empty for SYNTH.
std::optional<PublishedReference> published_reference(Dataset d);

/// Mean and final Euclidean error between equal-length absolute trajectories.
DisplacementError displacement_errors(const Trajectory& pred, const Trajectory& gt);

struct EvalReport {
    Dataset dataset = Dataset::SYNTH;
    double ade = 0.0;
    double fde = 0.0;
    int n_samples = 0;
    std::size_t n_windows = 0;
    std::size_t n_pairs = 0;  ///< (window, ego) pairs averaged over
};

struct EvalOptions {
    int samples = 20;
    std::uint64_t seed = 0;
    /// Decode from mu only (every sample is then identical).
    bool mean_mode = false;
    MaskOptions masks;
};

/// Best-of-n displacement error: for every (window, ego) pair draw n latent
/// samples, keep the one with the lowest ADE, then take the flat mean.
/// Throws ConfigError when samples < 1.
EvalReport best_of_n(const nn::ParameterSet& params, std::span<const LabeledWindow> data, const EvalOptions& options);

/// Per-pair predictions used by best_of_n, exposed for plotting.
struct EgoPrediction {
    std::int64_t window_id = 0;
    PedId ped_id = 0;
    Trajectory observed;   ///< obs_len x 2
    Trajectory truth;      ///< pred_len x 2
    Trajectory best;       ///< lowest-ADE sample
    Trajectory mean_mode;  ///< decoded from mu
    DisplacementError best_error;
};

/// Latent noise for pair (window_index, ego) is drawn from its own stream
/// seeded by (options.seed, window_index, ego), so sample k of a pair does not
/// depend on how many samples are drawn or which other pairs are evaluated.
std::vector<EgoPrediction> predict_window(const nn::ParameterSet& params, const LabeledWindow& data,
                                          std::size_t window_index, const EvalOptions& options);

/// Discrete Frechet distance (coupling-lattice dynamic programme).
double discrete_frechet(const Trajectory& a, const Trajectory& b);

struct SimilarityReport {
    std::optional<double> intra_avg;
    std::optional<double> inter_avg;
    std::size_t intra_pairs = 0;
    std::size_t inter_pairs = 0;
};

/// Mean discrete Frechet distance over same-group and different-group
/// pedestrian pairs of each window's full track. NOISE pedestrians are
/// singleton groups. An average with no contributing pairs stays empty.
SimilarityReport group_similarity_report(std::span<const LabeledWindow> data);

// Tabular text reports.
void write_eval_table(std::ostream& out, std::span<const EvalReport> reports);

struct LabelRateRow {
    Dataset dataset;
    LabelingRates rates;
};
void write_label_rate_table(std::ostream& out, std::span<const LabelRateRow> rows);

struct SimilarityRow {
    Dataset dataset;
    SimilarityReport cf;
    SimilarityReport hybrid;
};
void write_similarity_table(std::ostream& out, std::span<const SimilarityRow> rows);

}  // namespace comogcn
