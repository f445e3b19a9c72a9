#include <comogcn/config.hpp>
#include <comogcn/selftest.hpp>
#include <comogcn/synthetic.hpp>

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace comogcn;

namespace {

std::vector<Trajectory> as_tracks(const std::vector<Eigen::MatrixXd>& arrays) {
    std::vector<Trajectory> out;
    out.reserve(arrays.size());
    for (const auto& a : arrays) {
        if (a.cols() != 2) throw ContractViolation("tracks must be T x 2 arrays");
        out.emplace_back(a);
    }
    return out;
}

std::vector<RawDetection> as_detections(const Eigen::MatrixXd& rows) {
    if (rows.cols() != 4) throw ContractViolation("detections must be an N x 4 array (frame, ped, x, y)");
    std::vector<RawDetection> out;
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        out.push_back({static_cast<FrameId>(rows(r, 0)), static_cast<PedId>(rows(r, 1)), rows(r, 2), rows(r, 3)});
    }
    return out;
}

Eigen::MatrixXd detections_array(const std::vector<RawDetection>& dets) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(dets.size()), 4);
    for (std::size_t k = 0; k < dets.size(); ++k) {
        const auto r = static_cast<Eigen::Index>(k);
        out.row(r) << static_cast<double>(dets[k].frame_id), static_cast<double>(dets[k].ped_id), dets[k].x, dets[k].y;
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Group-aware pedestrian trajectory forecasting core";

    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<DuplicateRecordError>(m, "DuplicateRecordError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);

    py::class_<TrajectoryWindow>(m, "TrajectoryWindow")
        .def_readonly("window_id", &TrajectoryWindow::window_id)
        .def_property_readonly("dataset", [](const TrajectoryWindow& w) { return std::string(to_string(w.dataset)); })
        .def_readonly("ped_ids", &TrajectoryWindow::ped_ids)
        .def_readonly("abs", &TrajectoryWindow::abs)
        .def_readonly("rel", &TrajectoryWindow::rel)
        .def_readonly("obs_len", &TrajectoryWindow::obs_len)
        .def_readonly("pred_len", &TrajectoryWindow::pred_len)
        .def("__len__", &TrajectoryWindow::size);

    m.def(
        "make_window",
        [](std::int64_t id, const std::string& dataset, std::vector<PedId> ids, const std::vector<Eigen::MatrixXd>& abs,
           int obs_len, int pred_len) {
            return make_window(id, dataset_from_string(dataset), std::move(ids), as_tracks(abs), obs_len, pred_len);
        },
        py::arg("window_id"), py::arg("dataset"), py::arg("ped_ids"), py::arg("abs"), py::arg("obs_len") = 8,
        py::arg("pred_len") = 12);

    m.def(
        "parse_dataset",
        [](const std::string& path, const std::string& columns) {
            return detections_array(parse_dataset(std::filesystem::path(path), ColumnOrder::parse(columns)));
        },
        py::arg("path"), py::arg("column_order") = "frame ped x y",
        "Parses an annotation file into an N x 4 array (frame, ped, x, y).");
    m.def(
        "parse_text",
        [](const std::string& text, const std::string& columns) {
            std::istringstream in(text);
            return detections_array(parse_dataset(in, ColumnOrder::parse(columns)));
        },
        py::arg("text"), py::arg("column_order") = "frame ped x y");
    m.def(
        "build_windows",
        [](const Eigen::MatrixXd& detections, const std::string& dataset, int obs_len, int pred_len,
           FrameId frame_step) {
            WindowingOptions o;
            o.obs_len = obs_len;
            o.pred_len = pred_len;
            o.frame_step = frame_step;
            return build_windows(as_detections(detections), dataset_from_string(dataset), o);
        },
        py::arg("detections"), py::arg("dataset") = "SYNTH", py::arg("obs_len") = 8, py::arg("pred_len") = 12,
        py::arg("frame_step") = 10);
    m.def("to_relative", [](const Eigen::MatrixXd& abs) { return Eigen::MatrixXd(to_relative(Trajectory(abs))); });
    m.def("to_absolute", [](const Eigen::MatrixXd& rel, const Eigen::Vector2d& origin) {
        return Eigen::MatrixXd(to_absolute(Trajectory(rel), origin));
    });

    m.def(
        "coherent_filter",
        [](const std::vector<Eigen::MatrixXd>& tracks, int k_max, double lambda) {
            CoherentFilterParams p;
            p.k_max = k_max;
            p.lambda = lambda;
            p.validate();
            return coherent_filter(as_tracks(tracks), p);
        },
        py::arg("tracks"), py::arg("k_max") = 5, py::arg("lambda_") = 0.8);
    m.def(
        "dbscan_refine",
        [](const std::vector<Eigen::MatrixXd>& tracks, double theta, double s_lateral, double s_longitudinal,
           int min_pts) {
            DbscanParams p{theta, s_lateral, s_longitudinal, min_pts};
            p.validate();
            return dbscan_refine(as_tracks(tracks), p);
        },
        py::arg("tracks"), py::arg("theta") = 0.5, py::arg("s_lateral") = 2.0, py::arg("s_longitudinal") = 5.0,
        py::arg("min_pts") = 2);
    m.def(
        "hybrid_label",
        [](const TrajectoryWindow& w) {
            const auto l = hybrid_label(w, CoherentFilterParams::for_dataset(w.dataset), DbscanParams::for_dataset(w.dataset));
            std::vector<std::pair<int, std::string>> out;
            for (PedId id : w.ped_ids) out.emplace_back(l.label.at(id), std::string(to_string(l.provenance.at(id))));
            return out;
        },
        "Per-pedestrian (group id, provenance) with the dataset's default parameters.");

    m.def(
        "masked_adjacency",
        [](const std::vector<int>& groups, int ego, bool inter_self_loop) {
            MaskOptions o;
            o.inter_self_loop = inter_self_loop;
            const auto a = build_masked_adjacency(groups, ego, o);
            return std::make_pair(a.intra, a.inter);
        },
        py::arg("groups"), py::arg("ego"), py::arg("inter_self_loop") = true);

    m.def("discrete_frechet", [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
        return discrete_frechet(Trajectory(a), Trajectory(b));
    });
    m.def("displacement_errors", [](const Eigen::MatrixXd& pred, const Eigen::MatrixXd& gt) {
        const auto e = displacement_errors(Trajectory(pred), Trajectory(gt));
        return std::make_pair(e.ade, e.fde);
    });

    m.def(
        "synthetic_scenes",
        [](std::uint64_t seed, int count) {
            std::vector<TrajectoryWindow> out;
            for (auto& s : make_constant_velocity_scenes(seed, count)) out.push_back(std::move(s.window));
            return out;
        },
        py::arg("seed"), py::arg("count"));

    py::class_<nn::ParameterSet>(m, "ParameterSet")
        .def_static("initialize", &nn::ParameterSet::initialize, py::arg("seed") = 0)
        .def_static("load", [](const std::string& p) { return nn::load_checkpoint(p); })
        .def("save", [](const nn::ParameterSet& s, const std::string& p) { nn::save_checkpoint(p, s); })
        .def("parameter_count", &nn::ParameterSet::parameter_count)
        .def("tensors", [](const nn::ParameterSet& s) {
            std::vector<std::pair<std::string, Eigen::MatrixXd>> out;
            for (const auto* t : s.tensors()) out.emplace_back(t->name, t->value);
            return out;
        });

    auto label_all = [](const std::vector<TrajectoryWindow>& windows) {
        std::vector<LabeledWindow> data;
        for (const auto& w : windows)
            data.push_back({w, hybrid_label(w, CoherentFilterParams::for_dataset(w.dataset), DbscanParams::for_dataset(w.dataset))});
        return data;
    };

    m.def(
        "train",
        [label_all](const std::vector<TrajectoryWindow>& windows, int epochs, double lr, int batch_size, double beta,
                    std::uint64_t seed, const nn::EpochCallback& on_epoch) {
            nn::TrainConfig c;
            c.epochs = epochs;
            c.adam.lr = lr;
            c.batch_size = batch_size;
            c.beta = beta;
            c.seed = seed;
            const auto data = label_all(windows);
            py::gil_scoped_release release;
            auto r = nn::train(data, c, on_epoch ? nn::EpochCallback([&](int e, double l) {
                py::gil_scoped_acquire acquire;
                on_epoch(e, l);
            }) : nn::EpochCallback{});
            return std::make_pair(std::move(r.params), std::move(r.epoch_loss));
        },
        py::arg("windows"), py::arg("epochs") = 200, py::arg("lr") = 1e-4, py::arg("batch_size") = 64,
        py::arg("beta") = 1.0, py::arg("seed") = 0, py::arg("on_epoch") = nullptr,
        "Labels the windows with the hybrid labeler and trains; returns (params, epoch losses).");
    m.def(
        "best_of_n",
        [label_all](const nn::ParameterSet& params, const std::vector<TrajectoryWindow>& windows, int samples,
                    std::uint64_t seed, bool mean_mode) {
            EvalOptions o;
            o.samples = samples;
            o.seed = seed;
            o.mean_mode = mean_mode;
            const auto r = best_of_n(params, label_all(windows), o);
            return std::make_pair(r.ade, r.fde);
        },
        py::arg("params"), py::arg("windows"), py::arg("samples") = 20, py::arg("seed") = 0,
        py::arg("mean_mode") = false, "Returns (ADE, FDE).");

    m.def(
        "selftest",
        [](bool quick, std::uint64_t seed) {
            selftest::SelftestOptions o;
            o.quick = quick;
            o.seed = seed;
            std::ostringstream log;
            std::vector<py::dict> out;
            for (const auto& r : selftest::run_all(o, log)) {
                py::dict d;
                d["name"] = r.name;
                d["passed"] = r.passed;
                d["detail"] = r.detail;
                d["seconds"] = r.seconds;
                out.push_back(std::move(d));
            }
            return out;
        },
        py::arg("quick") = true, py::arg("seed") = 7);
}
