#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "stgsim/accounting.hpp"
#include "stgsim/csv.hpp"
#include "stgsim/experiment.hpp"

namespace {

using namespace stgsim;

int cmd_synth(const std::string& config_path, const std::string& out_dir) {
  ExperimentConfig cfg = load_config_file(config_path);
  if (!cfg.use_synth) {
    throw std::runtime_error("config has file paths in [dataset]; synth needs synth parameters");
  }
  SynthParams params = cfg.synth;
  params.sigma2 = cfg.sigma2;
  params.epsilon = cfg.epsilon;
  SynthOutput out = synth_generate(params);
  std::filesystem::create_directories(out_dir);
  save_series(out_dir + "/speeds.csv", out.series);
  write_sensors_csv(out_dir + "/sensors.csv", out.graph);
  std::cout << "wrote " << out_dir << "/speeds.csv (" << out.series.t() << " x " << out.series.n()
            << ") and " << out_dir << "/sensors.csv\n";
  return 0;
}

int cmd_partition(const std::string& config_path, const std::string& out_dir, int suggest_k,
                  uint64_t suggest_seed) {
  ExperimentConfig cfg = load_config_file(config_path);
  PreparedExperiment prep = prepare(cfg);
  if (suggest_k > 0) {
    Eigen::MatrixX2d pos = suggest_cloudlet_positions(prep.graph, suggest_k, suggest_seed);
    std::cout << "suggested cloudlet positions (advisory):\n";
    for (int c = 0; c < pos.rows(); ++c) {
      std::cout << "  [" << format_double(pos(c, 0)) << ", " << format_double(pos(c, 1)) << "]\n";
    }
  }
  std::filesystem::create_directories(out_dir);
  write_partition_csv(out_dir + "/partition.csv", prep.graph, prep.partition);
  write_plan_csv(out_dir + "/plan.csv", prep.graph, prep.partition);
  std::cout << "cloudlets: " << prep.partition.cloudlet_count() << ", receptive hops: " << prep.hops
            << ", duplication factor: " << format_double(duplication_factor(prep.partition))
            << "\n";
  for (int c = 0; c < prep.partition.cloudlet_count(); ++c) {
    std::cout << "  cloudlet_" << c << ": owned " << prep.partition.owned[c].size() << ", halo "
              << prep.partition.halo[c].size() << "\n";
  }
  std::cout << "wrote " << out_dir << "/partition.csv and " << out_dir << "/plan.csv\n";
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& runs_root) {
  ExperimentConfig cfg = load_config_file(config_path);
  PreparedExperiment prep = prepare(cfg);
  std::vector<HorizonOutcome> outcomes = execute(cfg, prep);
  std::string run_dir = runs_root + "/" + run_directory_name(cfg);
  write_run_outputs(run_dir, cfg, prep, outcomes);
  std::cout << "run directory: " << run_dir << "\n";
  for (const auto& outcome : outcomes) {
    const MetricReport& g = outcome.result.global_metrics;
    std::cout << to_string(cfg.run.setup) << " horizon " << outcome.horizon << ": MAE "
              << format_double(g.mae) << ", RMSE " << format_double(g.rmse) << ", WMAPE "
              << format_double(g.wmape) << "%\n";
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& run_dirs) {
  std::cout << "setup,horizon,scope,MAE,RMSE,WMAPE\n";
  for (const auto& dir : run_dirs) {
    CsvTable table = read_csv(dir + "/metrics.csv");
    int scope_col = table.column("scope", dir + "/metrics.csv");
    for (const auto& row : table.rows) {
      if (row[scope_col] != "global") continue;
      std::string line;
      for (size_t i = 0; i < row.size(); ++i) {
        if (i) line += ',';
        line += row[i];
      }
      std::cout << line << "\n";
    }
  }
  return 0;
}

int cmd_account(const std::vector<std::string>& run_dirs) {
  // Table-3-shaped summary: per-epoch traffic and compute per setup.
  std::cout << "setup,horizon,model_mb_per_epoch,training_flops_per_epoch,"
               "aggregation_flops_per_epoch,node_feature_mb_per_epoch\n";
  for (const auto& dir : run_dirs) {
    std::ifstream in(dir + "/run.json");
    if (!in) throw std::runtime_error("cannot open " + dir + "/run.json");
    nlohmann::json summary = nlohmann::json::parse(in);
    std::string setup = summary.at("config").at("training").at("setup").get<std::string>();
    for (const auto& entry : summary.at("horizons")) {
      double epochs = entry.at("epochs").get<double>();
      auto comm = entry.at("comm_bytes_total");
      auto flops = entry.at("flops_total");
      double model_mb = comm.at("model_up").get<double>() / 1e6 / epochs;
      double feature_mb = comm.at("node_feature").get<double>() / 1e6 / epochs;
      double train_f = flops.at("training").get<double>() / epochs;
      double agg_f = flops.at("aggregation").get<double>() / epochs;
      std::cout << setup << "," << entry.at("horizon").get<int>() << "," << format_double(model_mb)
                << "," << format_double(train_f) << "," << format_double(agg_f) << ","
                << format_double(feature_mb) << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic cloudlet training simulator for traffic forecasting"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", runs_root = "runs";
  std::vector<std::string> run_dirs;
  int suggest_k = 0;
  uint64_t suggest_seed = 1;

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("-c,--config", config_path, "experiment config (JSON)")->required();
  synth->add_option("-o,--out", out_dir, "output directory");

  auto* partition = app.add_subcommand("partition", "assign sensors to cloudlets and dump the plan");
  partition->add_option("-c,--config", config_path, "experiment config (JSON)")->required();
  partition->add_option("-o,--out", out_dir, "output directory");
  partition->add_option("--suggest-k", suggest_k, "print k advisory cloudlet positions");
  partition->add_option("--suggest-seed", suggest_seed, "seed for the advisory positions");

  auto* run = app.add_subcommand("run", "train and evaluate per the config");
  run->add_option("-c,--config", config_path, "experiment config (JSON)")->required();
  run->add_option("-o,--out", runs_root, "runs root directory");

  auto* report = app.add_subcommand("report", "join metrics.csv files from run directories");
  report->add_option("dirs", run_dirs, "run directories")->required()->expected(-1);

  auto* account = app.add_subcommand("account", "per-epoch traffic/compute summary of run directories");
  account->add_option("dirs", run_dirs, "run directories")->required()->expected(-1);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(config_path, out_dir);
    if (partition->parsed()) return cmd_partition(config_path, out_dir, suggest_k, suggest_seed);
    if (run->parsed()) return cmd_run(config_path, runs_root);
    if (report->parsed()) return cmd_report(run_dirs);
    if (account->parsed()) return cmd_account(run_dirs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
