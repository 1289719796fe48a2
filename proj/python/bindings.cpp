#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stgsim/experiment.hpp"
#include "stgsim/graph.hpp"
#include "stgsim/metrics.hpp"
#include "stgsim/model.hpp"
#include "stgsim/synth.hpp"

namespace py = pybind11;
using namespace stgsim;

namespace {

py::dict report_to_dict(const MetricReport& r) {
  py::dict d;
  d["scope"] = r.scope;
  d["horizon"] = r.horizon;
  d["mae"] = r.mae;
  d["rmse"] = r.rmse;
  d["wmape"] = r.wmape;
  return d;
}

py::list run_config_text(const std::string& json_text) {
  ExperimentConfig cfg = parse_config(json_text);
  PreparedExperiment prep = prepare(cfg);
  std::vector<HorizonOutcome> outcomes = execute(cfg, prep);
  py::list out;
  for (const auto& o : outcomes) {
    py::dict d;
    d["horizon"] = o.horizon;
    d["global"] = report_to_dict(o.result.global_metrics);
    py::list cl;
    for (const auto& r : o.result.cloudlet_metrics) cl.append(report_to_dict(r));
    d["cloudlets"] = cl;
    d["param_bytes_per_model"] = o.result.param_bytes_per_model;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(stgsim, m) {
  m.doc() = "deterministic cloudlet training simulator for traffic forecasting";

  m.def("haversine_km", &haversine_km, py::arg("lat1"), py::arg("lon1"), py::arg("lat2"),
        py::arg("lon2"));

  m.def(
      "adjacency",
      [](const Eigen::MatrixXd& dist, double sigma2, double epsilon) {
        return build_adjacency(dist, sigma2, epsilon);
      },
      py::arg("distances_km"), py::arg("sigma2"), py::arg("epsilon") = 0.1);

  m.def("default_sigma2", &default_sigma2, py::arg("distances_km"));

  m.def(
      "scaled_laplacian",
      [](const Eigen::MatrixXd& weights) {
        ScaledLaplacian lap = scaled_laplacian(weights);
        return py::make_tuple(lap.matrix, lap.lambda_max);
      },
      py::arg("weights"));

  m.def(
      "cheb_basis",
      [](const Eigen::MatrixXd& scaled_lap, int order) { return cheb_basis(scaled_lap, order); },
      py::arg("scaled_laplacian"), py::arg("order"));

  m.def(
      "synth_speeds",
      [](int sensors, int64_t timesteps, uint64_t seed) {
        SynthParams p;
        p.sensors = sensors;
        p.timesteps = timesteps;
        p.seed = seed;
        SynthOutput out = synth_generate(p);
        return py::make_tuple(out.series.sensor_ids, out.series.values, out.graph.coords);
      },
      py::arg("sensors"), py::arg("timesteps"), py::arg("seed"));

  m.def(
      "param_count",
      [](int st_blocks, int cheb_order, int temporal_kernel, std::vector<int> channels,
         int input_window) {
        ModelConfig cfg;
        cfg.st_blocks = st_blocks;
        cfg.cheb_order = cheb_order;
        cfg.temporal_kernel = temporal_kernel;
        cfg.channels = {channels.at(0), channels.at(1), channels.at(2)};
        cfg.input_window = input_window;
        cfg.validate();
        return param_count(cfg);
      },
      py::arg("st_blocks") = 2, py::arg("cheb_order") = 3, py::arg("temporal_kernel") = 3,
      py::arg("channels") = std::vector<int>{64, 16, 64}, py::arg("input_window") = 12);

  py::class_<ErrorStats>(m, "ErrorStats")
      .def(py::init<>())
      .def("add", &ErrorStats::add, py::arg("truth"), py::arg("pred"))
      .def("merge", &ErrorStats::merge, py::arg("other"))
      .def_readonly("count", &ErrorStats::count);

  m.def(
      "metrics",
      [](const Eigen::VectorXd& truth, const Eigen::VectorXd& pred, const std::string& wmape_denom) {
        if (truth.size() != pred.size()) throw std::invalid_argument("length mismatch");
        ErrorStats stats;
        for (Eigen::Index i = 0; i < truth.size(); ++i) stats.add(truth[i], pred[i]);
        WmapeDenominator denom =
            wmape_denom == "truth" ? WmapeDenominator::Truth : WmapeDenominator::Predicted;
        MetricReport r = report_from_stats(stats, "global", 0, static_cast<int>(truth.size()), denom);
        return py::make_tuple(r.mae, r.rmse, r.wmape);
      },
      py::arg("truth"), py::arg("pred"), py::arg("wmape_denominator") = "predicted");

  m.def("run_config_text", &run_config_text, py::arg("json_text"),
        "parse a config, train every horizon, and return the metric reports");
  m.def("resolved_config_json",
        [](const std::string& text) { return resolved_config_json(parse_config(text)); });
  m.def("run_directory_name",
        [](const std::string& text) { return run_directory_name(parse_config(text)); });
}
