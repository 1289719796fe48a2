// Acceptance checks, one per invocation: `acceptance <criterion 1..8>`.
// Prints a single PASS/FAIL/SKIP line and exits nonzero on FAIL.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "stgsim/accounting.hpp"
#include "stgsim/experiment.hpp"
#include "stgsim/graph.hpp"
#include "stgsim/metrics.hpp"
#include "stgsim/model.hpp"
#include "stgsim/partition.hpp"
#include "stgsim/protocols.hpp"
#include "stgsim/rng.hpp"
#include "stgsim/synth.hpp"

using namespace stgsim;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------- criterion 1

Outcome gradient_check() {
  ModelConfig cfg;
  cfg.channels = {4, 3, 4};
  cfg.input_window = 12;
  cfg.dropout_rate = 0.5;
  const int nodes = 5;
  const int batch = 2;

  Rng brng(31);
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(nodes, nodes);
  for (int i = 0; i < nodes; ++i) {
    for (int j = i + 1; j < nodes; ++j) dist(i, j) = dist(j, i) = 0.5 + 4.0 * brng.next_double();
  }
  auto basis = cheb_basis(scaled_laplacian(build_adjacency(dist, 4.0, 0.1)).matrix, 3);

  Rng rng(123);
  Slices input(static_cast<size_t>(cfg.input_window));
  for (auto& s : input) {
    s.resize(batch * nodes, 1);
    for (Eigen::Index r = 0; r < s.rows(); ++r) s(r, 0) = rng.next_normal();
  }
  Eigen::MatrixXd target(batch, nodes), mask(batch, nodes);
  for (int b = 0; b < batch; ++b) {
    for (int v = 0; v < nodes; ++v) {
      target(b, v) = rng.next_normal();
      mask(b, v) = 1.0;
    }
  }

  ModelParams params = init_params(cfg, 17);
  ForwardTape tape;
  Eigen::MatrixXd pred =
      forward(params, basis, input, batch, nodes, RunMode::Eval, 0, &tape);
  Eigen::MatrixXd dpred;
  mae_loss(pred, target, mask, &dpred);
  Eigen::VectorXd analytic = backward(params, basis, tape, dpred);

  auto loss_at = [&](int64_t i, double delta) {
    const double saved = params.flat(i);
    params.flat(i) = saved + delta;
    double up = mae_loss(forward(params, basis, input, batch, nodes, RunMode::Eval, 0, nullptr),
                         target, mask, nullptr);
    params.flat(i) = saved - delta;
    double down = mae_loss(forward(params, basis, input, batch, nodes, RunMode::Eval, 0, nullptr),
                           target, mask, nullptr);
    params.flat(i) = saved;
    return (up - down) / (2.0 * delta);
  };

  // The MAE/ReLU kinks make a fixed-width stencil unreliable on a few
  // coordinates; refine the step there. A wrong gradient stays wrong at
  // every step width.
  double worst = 0.0;
  for (int64_t i = 0; i < params.flat.size(); ++i) {
    double err = 1.0;
    for (double delta : {1e-3, 3e-5, 1e-6}) {
      double numeric = loss_at(i, delta);
      err = std::abs(numeric - analytic(i)) /
            std::max({1.0, std::abs(numeric), std::abs(analytic(i))});
      if (err < 1e-4) break;
    }
    worst = std::max(worst, err);
  }
  return {worst < 1e-4, std::to_string(params.flat.size()) + " parameters, worst relative error " +
                            fmt(worst) + " (tolerance 1e-4)"};
}

// ---------------------------------------------------------------- criterion 2

SensorGraph planar_graph(const std::vector<std::pair<double, double>>& coords, double sigma2,
                         double epsilon) {
  SensorGraph g;
  g.coord_kind = CoordKind::PlanarKm;
  const int n = static_cast<int>(coords.size());
  g.coords.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    g.sensor_ids.push_back("s" + std::to_string(i));
    g.coords(i, 0) = coords[static_cast<size_t>(i)].first;
    g.coords(i, 1) = coords[static_cast<size_t>(i)].second;
  }
  g.dist = pairwise_distances(g.coord_kind, g.coords);
  g.weights = build_adjacency(g.dist, sigma2, epsilon);
  return g;
}

Outcome halo_consistency() {
  ModelConfig cfg;
  cfg.channels = {4, 3, 4};
  cfg.input_window = 12;
  cfg.dropout_rate = 0.0;
  const int hops = receptive_hops(cfg);
  Rng scen(2024);
  double worst = 0.0;
  const int cases = 20;
  for (int rep = 0; rep < cases; ++rep) {
    const int n = 6 + static_cast<int>(scen.next_below(25));
    const int k = 1 + static_cast<int>(scen.next_below(4));
    std::vector<std::pair<double, double>> coords;
    for (int i = 0; i < n; ++i) {
      coords.emplace_back(12.0 * scen.next_double(), 12.0 * scen.next_double());
    }
    SensorGraph g = planar_graph(coords, 9.0, 0.3);
    Eigen::MatrixX2d cl = suggest_cloudlet_positions(g, k, scen.next_u64(), 20);
    CloudletPartition part = build_partition(g, cl, 40.0, hops);
    ScaledLaplacian lap = scaled_laplacian(g.weights);
    ModelParams params = init_params(cfg, 7 + static_cast<uint64_t>(rep));

    Rng data(scen.next_u64());
    const int batch = 2;
    Slices input(static_cast<size_t>(cfg.input_window));
    for (auto& s : input) {
      s.resize(batch * n, 1);
      for (Eigen::Index r = 0; r < s.rows(); ++r) s(r, 0) = data.next_normal();
    }
    auto full_basis = cheb_basis(lap.matrix, cfg.cheb_order);
    Eigen::MatrixXd full_pred =
        forward(params, full_basis, input, batch, n, RunMode::Eval, 0, nullptr);

    for (int c = 0; c < part.cloudlet_count(); ++c) {
      if (part.owned[c].empty()) continue;
      std::vector<int> region = part.region(c);
      Subgraph sub = extract_subgraph(g, lap.matrix, region);
      auto sub_basis = cheb_basis(sub.scaled_lap, cfg.cheb_order);
      const int m = static_cast<int>(region.size());
      Slices sub_input(input.size());
      for (size_t t = 0; t < input.size(); ++t) {
        sub_input[t].resize(batch * m, 1);
        for (int b = 0; b < batch; ++b) {
          for (int a = 0; a < m; ++a) {
            sub_input[t](b * m + a, 0) = input[t](b * n + region[static_cast<size_t>(a)], 0);
          }
        }
      }
      Eigen::MatrixXd sub_pred =
          forward(params, sub_basis, sub_input, batch, m, RunMode::Eval, 0, nullptr);
      for (int v : part.owned[c]) {
        const int a = static_cast<int>(
            std::lower_bound(region.begin(), region.end(), v) - region.begin());
        for (int b = 0; b < batch; ++b) {
          worst = std::max(worst, std::abs(sub_pred(b, a) - full_pred(b, v)));
        }
      }
    }
  }
  return {worst < 1e-5, std::to_string(cases) + " random partitions, max owned-node deviation " +
                            fmt(worst) + " (tolerance 1e-5)"};
}

// ---------------------------------------------------------------- criterion 3

Outcome fl_degeneracy() {
  SynthParams p;
  p.sensors = 10;
  p.timesteps = 620;
  p.seed = 5;
  p.box_km = 10.0;
  p.sigma2 = 30.0;
  SynthOutput out = synth_generate(p);
  ScaledLaplacian lap = scaled_laplacian(out.graph.weights);
  WindowedDataset ds = make_windows(out.series, 3);

  ModelConfig cfg;
  cfg.channels = {4, 3, 4};
  Eigen::MatrixX2d cl(1, 2);
  cl << 5.0, 5.0;
  CloudletPartition part = build_partition(out.graph, cl, 30.0, receptive_hops(cfg));

  RunConfig run;
  run.epochs = 3;
  run.batch_size = 32;
  run.seeds = {11, 22, 33, 44};
  run.optimizer.base_lr = 1e-3;

  run.setup = Setup::Centralized;
  RunResult central = run_experiment(out.graph, lap, ds, part, cfg, run);
  run.setup = Setup::TraditionalFl;
  RunResult fl = run_experiment(out.graph, lap, ds, part, cfg, run);

  double worst = 0.0;
  for (int e = 0; e < 3; ++e) {
    worst = std::max(worst, std::abs(central.val_loss[static_cast<size_t>(e)][0] -
                                     fl.val_loss[static_cast<size_t>(e)][0]));
  }
  return {worst < 1e-6,
          "3 epochs, max per-epoch validation gap " + fmt(worst) + " (tolerance 1e-6)"};
}

// ----------------------------------------------------- shared 7-cloudlet scene

json scenario_config(const std::string& setup, int seed_set, int epochs) {
  json j = {
      {"dataset",
       {{"synth",
         {{"sensors", 40},
          {"timesteps", 6000},
          {"seed", 11},
          {"spatial_amplitude", 20.0}}}}},
      {"graph", {{"sigma2", 10.0}, {"epsilon", 0.1}}},
      {"partition",
       {{"cloudlets",
         json::array({{23.041168389687197, 11.333674821658887},
                      {5.319997589938698, 24.207016471141248},
                      {12.354194912964621, 1.2053341385790384},
                      {25.990957399498903, 25.260268710157018},
                      {14.6901138762594, 26.085026305586563},
                      {12.602653879259694, 11.585389771874043},
                      {5.398274344888419, 12.027712488885976}})},
        {"comm_range_km", 30.0}}},
      {"model",
       {{"st_blocks", 2},
        {"cheb_order", 3},
        {"temporal_kernel", 3},
        {"channels", {8, 4, 8}},
        {"input_window", 12},
        {"dropout", 0.5}}},
      {"training",
       {{"setup", setup},
        {"epochs", epochs},
        {"batch_size", 32},
        {"local_epochs", 1},
        {"lr", 0.001},
        {"lr_step_size", 5},
        {"lr_gamma", 0.5},
        {"seeds",
         {{"init", 100 + seed_set},
          {"shuffle", 200 + seed_set},
          {"gossip", 300 + seed_set},
          {"dropout", 400 + seed_set}}}}},
      {"horizons", {3}}};
  return j;
}

// ---------------------------------------------------------------- criterion 4

Outcome accounting_identities() {
  ExperimentConfig cfg = parse_config(scenario_config("centralized", 1, 2).dump());
  cfg.model.channels = {4, 3, 4};  // traffic identities do not depend on width
  PreparedExperiment prep = prepare(cfg);
  const int k = prep.partition.cloudlet_count();
  if (k != 7) return {false, "expected 7 cloudlets, got " + std::to_string(k)};
  const uint64_t pb = param_bytes(param_count(cfg.model));
  const uint64_t degree_sum = 2ull * prep.partition.cloudlet_links.size();
  const int epochs = cfg.run.epochs;

  std::vector<std::string> problems;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
  };

  for (Setup setup : {Setup::Centralized, Setup::TraditionalFl, Setup::ServerfreeFl,
                      Setup::Gossip}) {
    cfg.run.setup = setup;
    std::vector<HorizonOutcome> outcomes = execute(cfg, prep);
    const RunResult& r = outcomes[0].result;
    const uint64_t up = r.comm.total(CommCategory::ModelUp);
    const uint64_t per_epoch = r.comm.total_in_epoch(CommCategory::ModelUp, 0);
    switch (setup) {
      case Setup::Centralized:
        expect(up == 0 && r.comm.total(CommCategory::ModelDown) == 0,
               "centralized moved model bytes");
        break;
      case Setup::TraditionalFl:
      case Setup::Gossip:
        expect(per_epoch == 7ull * pb, std::string(to_string(setup)) +
                                           " per-epoch sends != 7*param_bytes");
        expect(up == static_cast<uint64_t>(epochs) * 7ull * pb,
               std::string(to_string(setup)) + " total sends != epochs*7*param_bytes");
        break;
      case Setup::ServerfreeFl:
        expect(per_epoch == degree_sum * pb,
               "server-free per-epoch sends != degree_sum*param_bytes");
        expect(per_epoch <= 42ull * pb, "server-free sends exceed the complete-topology bound");
        break;
    }
  }
  if (!problems.empty()) {
    std::string all;
    for (const auto& p : problems) all += (all.empty() ? "" : "; ") + p;
    return {false, all};
  }
  return {true, "7 cloudlets: fl/gossip 7*pb per epoch, server-free " +
                    std::to_string(degree_sum) + "*pb (<= 42*pb), centralized 0, pb = " +
                    std::to_string(pb) + " bytes"};
}

// ---------------------------------------------------------------- criterion 5

Outcome metric_oracles() {
  Rng rng(99);
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = 1 + static_cast<int>(rng.next_below(300));
    std::vector<double> truth(static_cast<size_t>(n)), pred(static_cast<size_t>(n));
    double abs_sum = 0.0, sq_sum = 0.0, pred_sum = 0.0, truth_sum = 0.0;
    for (int i = 0; i < n; ++i) {
      double t = 40.0 + 10.0 * rng.next_normal();
      double p = 40.0 + 10.0 * rng.next_normal();
      truth[static_cast<size_t>(i)] = t;
      pred[static_cast<size_t>(i)] = p;
      abs_sum += std::fabs(t - p);
      sq_sum += (t - p) * (t - p);
      pred_sum += p;
      truth_sum += t;
    }
    worst = std::max(worst, std::fabs(mae(truth, pred) - abs_sum / n));
    worst = std::max(worst, std::fabs(rmse(truth, pred) - std::sqrt(sq_sum / n)));
    worst = std::max(worst, std::fabs(wmape(truth, pred) - abs_sum / pred_sum * 100.0));
    worst = std::max(worst, std::fabs(wmape(truth, pred, WmapeDenominator::Truth) -
                                      abs_sum / truth_sum * 100.0));
  }
  if (worst >= 1e-12) {
    return {false, "brute-force mismatch " + fmt(worst) + " (tolerance 1e-12)"};
  }

  const double hand = wmape({50.0, 70.0}, {60.0, 60.0});
  if (std::fabs(hand - 16.667) > 1e-3) {
    return {false, "WMAPE([50,70],[60,60]) = " + fmt(hand) + ", expected 16.667"};
  }

  // Weighted aggregation against the pooled computation.
  Rng rng2(15);
  std::vector<MetricReport> reports;
  std::vector<int> node_counts = {4, 7, 2};
  ErrorStats pooled;
  for (int c = 0; c < 3; ++c) {
    ErrorStats s;
    for (int i = 0; i < node_counts[static_cast<size_t>(c)] * 40; ++i) {
      double t = 45.0 + 6.0 * rng2.next_normal();
      double p = 45.0 + 6.0 * rng2.next_normal();
      s.add(t, p);
      pooled.add(t, p);
    }
    reports.push_back(report_from_stats(s, "cloudlet" + std::to_string(c), 3,
                                        node_counts[static_cast<size_t>(c)],
                                        WmapeDenominator::Predicted));
  }
  MetricReport global = aggregate_weighted(reports, node_counts, WmapeDenominator::Predicted);
  MetricReport direct = report_from_stats(pooled, "global", 3, 13, WmapeDenominator::Predicted);
  double agg_gap = std::max({std::fabs(global.mae - direct.mae),
                             std::fabs(global.rmse - direct.rmse),
                             std::fabs(global.wmape - direct.wmape)});
  if (agg_gap >= 1e-9) {
    return {false, "weighted aggregation deviates from pooled by " + fmt(agg_gap)};
  }
  return {true, "1000 random vectors exact to 1e-12; hand WMAPE 16.667%; aggregation gap " +
                    fmt(agg_gap)};
}

// ---------------------------------------------------------------- criterion 6

Outcome convergence_shape(const std::vector<int>& seed_sets, bool dump_curves) {
  const std::vector<std::string> setups = {"centralized", "traditional_fl", "serverfree_fl",
                                           "gossip"};
  const int epochs = 40;
  std::vector<std::vector<double>> means(setups.size(), std::vector<double>(epochs, 0.0));

  for (size_t s = 0; s < setups.size(); ++s) {
    for (int seed_set : seed_sets) {
      ExperimentConfig cfg =
          parse_config(scenario_config(setups[s], seed_set, epochs).dump());
      PreparedExperiment prep = prepare(cfg);
      std::vector<HorizonOutcome> outcomes = execute(cfg, prep);
      const std::vector<double>& curve = outcomes[0].result.val_summary;
      for (int e = 0; e < epochs; ++e) {
        means[s][static_cast<size_t>(e)] += curve[static_cast<size_t>(e)] / seed_sets.size();
      }
    }
  }
  if (dump_curves) {
    for (size_t s = 0; s < setups.size(); ++s) {
      std::cerr << setups[s];
      for (double v : means[s]) std::cerr << "," << fmt(v);
      std::cerr << "\n";
    }
  }

  const double central_final = means[0][epochs - 1];
  const double threshold = 1.05 * central_final;
  auto first_epoch_at = [&](const std::vector<double>& curve, double level) {
    for (int e = 0; e < epochs; ++e) {
      if (curve[static_cast<size_t>(e)] <= level) return e;
    }
    return epochs;  // never reached
  };
  const int e_central = first_epoch_at(means[0], central_final);

  bool pass = true;
  std::string detail = "centralized final " + fmt(central_final) + " at epoch " +
                       std::to_string(e_central);
  for (size_t s = 1; s < setups.size(); ++s) {
    const double final_loss = means[s][epochs - 1];
    const double ratio = final_loss / central_final;
    const int e_dist = first_epoch_at(means[s], threshold);
    detail += "; " + setups[s] + " final " + fmt(final_loss) + " (" + fmt(ratio) +
              "x, reaches 1.05x at " +
              (e_dist == epochs ? std::string("never") : std::to_string(e_dist)) + ")";
    if (ratio > 1.25) pass = false;             // (a) accuracy within 1.25x
    if (e_dist < e_central) pass = false;       // (b) centralized converges first
  }
  return {pass, detail};
}

// ---------------------------------------------------------------- criterion 7

Outcome overhead_shape() {
  std::vector<std::string> problems;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
  };

  json base = scenario_config("centralized", 1, 1);
  base["graph"]["sigma2"] = nullptr;  // distance-variance default
  base["graph"]["epsilon"] = 0.01;    // dense adjacency

  ExperimentConfig cfg = parse_config(base.dump());
  PreparedExperiment prep = prepare(cfg);

  // Independent duplication recomputation from the partition sets.
  int64_t region_total = 0;
  for (int c = 0; c < prep.partition.cloudlet_count(); ++c) {
    region_total += static_cast<int64_t>(prep.partition.region(c).size());
  }
  const double dup_expected = static_cast<double>(region_total) / prep.graph.n();

  uint64_t central_features = 0;
  double detail_ratio = 0.0;
  std::string feature_note;
  for (Setup setup : {Setup::Centralized, Setup::TraditionalFl, Setup::ServerfreeFl,
                      Setup::Gossip}) {
    cfg.run.setup = setup;
    cfg.run.epochs = setup == Setup::Gossip ? 2 : 1;  // gossip aggregates from epoch 2 on
    std::vector<HorizonOutcome> outcomes = execute(cfg, prep);
    const RunResult& r = outcomes[0].result;
    const uint64_t features = r.comm.total_in_epoch(CommCategory::NodeFeature, 0);
    if (setup == Setup::Centralized) {
      central_features = features;
      continue;
    }
    expect(features > central_features,
           std::string(to_string(setup)) + " feature bytes do not exceed centralized");
    expect(r.duplication == dup_expected,
           std::string(to_string(setup)) + " duplication factor is not the exact set total");
    const double agg = static_cast<double>(r.flops.total(FlopCategory::Aggregation));
    const double train = static_cast<double>(r.flops.total(FlopCategory::Training));
    expect(agg > 0.0, std::string(to_string(setup)) + " recorded no aggregation work");
    const double ratio = agg / train;
    expect(ratio < 1e-4, std::string(to_string(setup)) + " aggregation/training ratio " +
                             fmt(ratio) + " not < 1e-4");
    if (setup == Setup::TraditionalFl) {
      detail_ratio = ratio;
      feature_note = fmt(static_cast<double>(features) / central_features);
    }
  }
  if (!problems.empty()) {
    std::string all;
    for (const auto& p : problems) all += (all.empty() ? "" : "; ") + p;
    return {false, all};
  }
  return {true, "distributed features " + feature_note + "x centralized, duplication " +
                    fmt(dup_expected) + " exact, fl aggregation/training " + fmt(detail_ratio)};
}

// ---------------------------------------------------------------- criterion 8

Outcome extended_check() {
  const char* speeds = std::getenv("STGSIM_METRLA_SPEEDS");
  const char* sensors = std::getenv("STGSIM_METRLA_SENSORS");
  json j = {
      {"dataset",
       {{"speeds_csv", speeds}, {"sensors_csv", sensors}, {"interval_minutes", 5}}},
      {"partition", {{"cloudlets", json::array({{34.1, -118.2}})}, {"comm_range_km", 100.0}}},
      {"training",
       {{"setup", "centralized"},
        {"epochs", 40},
        {"batch_size", 32},
        {"seeds", {{"init", 1}, {"shuffle", 2}, {"gossip", 3}, {"dropout", 4}}}}},
      {"horizons", {3}}};
  ExperimentConfig cfg = parse_config(j.dump());
  PreparedExperiment prep = prepare(cfg);
  std::vector<HorizonOutcome> outcomes = execute(cfg, prep);
  const double got_mae = outcomes[0].result.global_metrics.mae;
  const uint64_t pb = outcomes[0].result.param_bytes_per_model;
  const bool mae_ok = got_mae >= 3.78 * 0.8 && got_mae <= 3.78 * 1.2;
  const bool bytes_ok = pb >= 0.13e6 * 0.7 && pb <= 0.13e6 * 1.3;
  return {mae_ok && bytes_ok,
          "test MAE " + fmt(got_mae) + " (target 3.78 +/- 20%: " +
              (mae_ok ? "ok" : "out") + "), param bytes " + std::to_string(pb) +
              " (target 0.13 MB +/- 30%: " + (bytes_ok ? "ok" : "out") + ")"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <criterion 1..8> [--seeds n[,n...]]\n";
    return 2;
  }
  const int criterion = std::atoi(argv[1]);
  std::vector<int> seed_sets = {1, 2, 3};
  bool dump_curves = false;
  for (int a = 2; a < argc; ++a) {
    if (std::strcmp(argv[a], "--seeds") == 0 && a + 1 < argc) {
      seed_sets.clear();
      std::stringstream ss(argv[a + 1]);
      std::string tok;
      while (std::getline(ss, tok, ',')) seed_sets.push_back(std::atoi(tok.c_str()));
    }
    if (std::strcmp(argv[a], "--dump") == 0) dump_curves = true;
  }

  Outcome out;
  std::string label;
  try {
    switch (criterion) {
      case 1: label = "gradient correctness"; out = gradient_check(); break;
      case 2: label = "halo consistency"; out = halo_consistency(); break;
      case 3: label = "fl degeneracy"; out = fl_degeneracy(); break;
      case 4: label = "accounting identities"; out = accounting_identities(); break;
      case 5: label = "metric oracles"; out = metric_oracles(); break;
      case 6: label = "convergence shape"; out = convergence_shape(seed_sets, dump_curves); break;
      case 7: label = "overhead shape"; out = overhead_shape(); break;
      case 8: {
        label = "extended real-data check";
        if (!std::getenv("STGSIM_METRLA_SPEEDS") || !std::getenv("STGSIM_METRLA_SENSORS")) {
          std::cout << "criterion 8: SKIP — set STGSIM_METRLA_SPEEDS and STGSIM_METRLA_SENSORS "
                       "to run the optional real-data check\n";
          return 0;
        }
        out = extended_check();
        break;
      }
      default:
        std::cerr << "unknown criterion " << criterion << "\n";
        return 2;
    }
  } catch (const std::exception& e) {
    std::cout << "criterion " << criterion << ": FAIL — unexpected error: " << e.what() << "\n";
    return 1;
  }
  std::cout << "criterion " << criterion << " (" << label << "): "
            << (out.pass ? "PASS" : "FAIL") << " — " << out.detail << "\n";
  return out.pass ? 0 : 1;
}
