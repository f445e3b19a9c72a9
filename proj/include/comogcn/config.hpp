#pragma once

#include <comogcn/coherence.hpp>
#include <comogcn/eval.hpp>
#include <comogcn/neuralcore.hpp>
#include <comogcn/trajdata.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace comogcn {

/// Environment variable naming the default data directory.
inline constexpr const char* kDataDirEnv = "COMOGCN_DATA_DIR";

/// Everything a pipeline run needs. Unspecified fields keep the published
/// defaults: per-scene clustering parameters, Adam at 1e-4, batch 64,
/// 200 epochs, 20 evaluation samples.
struct RunConfig {
    std::filesystem::path data_dir = ".";
    std::map<Dataset, std::vector<std::string>> dataset_files;
    std::filesystem::path output_dir = "comogcn_out";
    std::string column_order = "frame ped x y";
    WindowingOptions windowing;
    std::map<Dataset, CoherentFilterParams> coherent_filter;
    std::map<Dataset, DbscanParams> dbscan;
    nn::TrainConfig train;
    EvalOptions eval;

    /// Defaults, with data_dir taken from COMOGCN_DATA_DIR when set.
    static RunConfig defaults();

    /// Overlays a JSON config file on the defaults. Throws ConfigError on
    /// unknown keys, unknown datasets or wrongly typed values.
    static RunConfig load(const std::filesystem::path& path);
    void apply_json(const std::string& text);

    CoherentFilterParams cf_params(Dataset d) const;
    DbscanParams dbscan_params(Dataset d) const;
    std::vector<std::filesystem::path> files_for(Dataset d) const;
};

}  // namespace comogcn
