#include <comogcn/config.hpp>

#include <doctest.h>

using namespace comogcn;

TEST_CASE("defaults") {
    const auto c = RunConfig::defaults();
    CHECK(c.train.adam.lr == 1e-4);
    CHECK(c.train.batch_size == 64);
    CHECK(c.train.epochs == 200);
    CHECK(c.eval.samples == 20);
    CHECK(c.windowing.obs_len == 8);
    CHECK(c.windowing.pred_len == 12);
    CHECK(c.windowing.frame_step == 10);
    CHECK(c.cf_params(Dataset::UNIV).window_frames == 8);
    CHECK(c.dbscan_params(Dataset::UNIV).theta == 0.2);
    CHECK(c.cf_params(Dataset::ETH).window_frames == 5);
    CHECK(c.files_for(Dataset::UNIV).size() == 2);
}

TEST_CASE("json overlay") {
    auto c = RunConfig::defaults();
    c.apply_json(R"({
        "data_dir": "/data",
        "datasets": {"ETH": "eth.txt", "ZARA1": ["a.txt", "b.txt"]},
        "coherent_filter": {"default": {"lambda": 0.7}, "HOTEL": {"k_max": 3}},
        "dbscan": {"ZARA2": {"min_pts": 3}},
        "train": {"epochs": 5, "lr": 0.001, "inter_self_loop": false},
        "eval": {"samples": 4}
    })");
    CHECK(c.files_for(Dataset::ETH) == std::vector<std::filesystem::path>{"/data/eth.txt"});
    CHECK(c.files_for(Dataset::ZARA1).size() == 2);
    CHECK(c.cf_params(Dataset::ETH).lambda == 0.7);
    CHECK(c.cf_params(Dataset::HOTEL).k_max == 3);
    CHECK(c.cf_params(Dataset::HOTEL).lambda == 0.7);
    CHECK(c.cf_params(Dataset::UNIV).window_frames == 8);
    CHECK(c.dbscan_params(Dataset::ZARA2).min_pts == 3);
    CHECK(c.train.epochs == 5);
    CHECK(c.train.adam.lr == 0.001);
    CHECK(!c.train.masks.inter_self_loop);
    CHECK(!c.eval.masks.inter_self_loop);
    CHECK(c.eval.samples == 4);
}

TEST_CASE("configuration errors") {
    auto c = RunConfig::defaults();
    CHECK_THROWS_AS(c.apply_json(R"({"learning_rate": 1})"), ConfigError);
    CHECK_THROWS_AS(c.apply_json(R"({"train": {"epochz": 1}})"), ConfigError);
    CHECK_THROWS_AS(c.apply_json(R"({"train": {"epochs": "many"}})"), ConfigError);
    CHECK_THROWS_AS(c.apply_json(R"({"datasets": {"MARS": "m.txt"}})"), ConfigError);
    CHECK_THROWS_AS(c.apply_json(R"({"dbscan": {"ETH": {"theta": -1}}})"), ConfigError);
    CHECK_THROWS_AS(c.apply_json(R"({"column_order": "frame ped x"})"), ConfigError);
    CHECK_THROWS_AS(c.apply_json("{not json"), ConfigError);
    CHECK_THROWS_AS(RunConfig::load("/nonexistent/config.json"), ConfigError);
}
