#include <comogcn/config.hpp>

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace comogcn {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

void apply_cf(const json& obj, CoherentFilterParams& p, const std::string& where) {
    reject_unknown(obj, {"window_frames", "k_max", "lambda"}, where);
    read(obj, "window_frames", p.window_frames, where);
    read(obj, "k_max", p.k_max, where);
    read(obj, "lambda", p.lambda, where);
}

void apply_db(const json& obj, DbscanParams& p, const std::string& where) {
    reject_unknown(obj, {"theta", "s_lateral", "s_longitudinal", "min_pts"}, where);
    read(obj, "theta", p.theta, where);
    read(obj, "s_lateral", p.s_lateral, where);
    read(obj, "s_longitudinal", p.s_longitudinal, where);
    read(obj, "min_pts", p.min_pts, where);
}

template <typename Params, typename Apply>
void apply_per_dataset(const json& section, std::map<Dataset, Params>& table, Apply apply, const std::string& name) {
    if (!section.is_object()) throw ConfigError(name + " must be an object");
    if (section.contains("default")) {
        for (auto& [d, p] : table) apply(section.at("default"), p, name + ".default");
    }
    for (const auto& [key, value] : section.items()) {
        if (key == "default") continue;
        apply(value, table.at(dataset_from_string(key)), name + "." + key);
    }
}

}  // namespace

RunConfig RunConfig::defaults() {
    RunConfig c;
    if (const char* env = std::getenv(kDataDirEnv); env && *env) c.data_dir = env;
    c.dataset_files = {
        {Dataset::ETH, {"biwi_eth.txt"}},
        {Dataset::HOTEL, {"biwi_hotel.txt"}},
        {Dataset::UNIV, {"students001.txt", "students003.txt"}},
        {Dataset::ZARA1, {"crowds_zara01.txt"}},
        {Dataset::ZARA2, {"crowds_zara02.txt"}},
        {Dataset::SYNTH, {"synth.txt"}},
    };
    for (Dataset d : {Dataset::ETH, Dataset::HOTEL, Dataset::UNIV, Dataset::ZARA1, Dataset::ZARA2, Dataset::SYNTH}) {
        c.coherent_filter[d] = CoherentFilterParams::for_dataset(d);
        c.dbscan[d] = DbscanParams::for_dataset(d);
    }
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    RunConfig c = defaults();
    c.apply_json(ss.str());
    return c;
}

void RunConfig::apply_json(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(root,
                   {"data_dir", "output_dir", "column_order", "datasets", "windowing", "coherent_filter", "dbscan",
                    "train", "eval"},
                   "config");

    std::string s;
    if (root.contains("data_dir")) {
        read(root, "data_dir", s, "config");
        data_dir = s;
    }
    if (root.contains("output_dir")) {
        read(root, "output_dir", s, "config");
        output_dir = s;
    }
    read(root, "column_order", column_order, "config");
    ColumnOrder::parse(column_order);

    if (root.contains("datasets")) {
        const json& ds = root.at("datasets");
        if (!ds.is_object()) throw ConfigError("config.datasets must be an object");
        for (const auto& [key, value] : ds.items()) {
            const Dataset d = dataset_from_string(key);
            if (value.is_string()) {
                dataset_files[d] = {value.get<std::string>()};
            } else {
                std::vector<std::string> files;
                read(ds, key.c_str(), files, "config.datasets");
                dataset_files[d] = std::move(files);
            }
        }
    }
    if (root.contains("windowing")) {
        const json& w = root.at("windowing");
        reject_unknown(w, {"obs_len", "pred_len", "frame_step", "stride"}, "config.windowing");
        read(w, "obs_len", windowing.obs_len, "config.windowing");
        read(w, "pred_len", windowing.pred_len, "config.windowing");
        read(w, "frame_step", windowing.frame_step, "config.windowing");
        read(w, "stride", windowing.stride, "config.windowing");
    }
    if (root.contains("coherent_filter")) apply_per_dataset(root.at("coherent_filter"), coherent_filter, apply_cf, "config.coherent_filter");
    if (root.contains("dbscan")) apply_per_dataset(root.at("dbscan"), dbscan, apply_db, "config.dbscan");

    if (root.contains("train")) {
        const json& t = root.at("train");
        const std::string where = "config.train";
        reject_unknown(t,
                       {"lr", "batch_size", "epochs", "beta", "variety_k", "seed", "adam_beta1", "adam_beta2",
                        "adam_eps", "inter_self_loop"},
                       where);
        read(t, "lr", train.adam.lr, where);
        read(t, "adam_beta1", train.adam.beta1, where);
        read(t, "adam_beta2", train.adam.beta2, where);
        read(t, "adam_eps", train.adam.eps, where);
        read(t, "batch_size", train.batch_size, where);
        read(t, "epochs", train.epochs, where);
        read(t, "beta", train.beta, where);
        read(t, "variety_k", train.variety_k, where);
        read(t, "seed", train.seed, where);
        read(t, "inter_self_loop", train.masks.inter_self_loop, where);
        eval.masks = train.masks;
    }
    if (root.contains("eval")) {
        const json& e = root.at("eval");
        reject_unknown(e, {"samples", "seed", "mean_mode"}, "config.eval");
        read(e, "samples", eval.samples, "config.eval");
        read(e, "seed", eval.seed, "config.eval");
        read(e, "mean_mode", eval.mean_mode, "config.eval");
    }

    for (const auto& [d, p] : coherent_filter) p.validate();
    for (const auto& [d, p] : dbscan) p.validate();
}

CoherentFilterParams RunConfig::cf_params(Dataset d) const { return coherent_filter.at(d); }

DbscanParams RunConfig::dbscan_params(Dataset d) const { return dbscan.at(d); }

std::vector<std::filesystem::path> RunConfig::files_for(Dataset d) const {
    std::vector<std::filesystem::path> out;
    auto it = dataset_files.find(d);
    if (it == dataset_files.end()) return out;
    for (const auto& f : it->second) {
        const std::filesystem::path p(f);
        out.push_back(p.is_absolute() ? p : data_dir / p);
    }
    return out;
}

}  // namespace comogcn
