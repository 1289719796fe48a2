#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "stgsim/accounting.hpp"
#include "stgsim/graph.hpp"
#include "stgsim/ledger.hpp"
#include "stgsim/metrics.hpp"
#include "stgsim/model.hpp"
#include "stgsim/partition.hpp"
#include "stgsim/series.hpp"

namespace stgsim {

struct Seeds {
  uint64_t init = 0;
  uint64_t shuffle = 0;
  uint64_t gossip = 0;
  uint64_t dropout = 0;
};

struct RunConfig {
  Setup setup = Setup::Centralized;
  int epochs = 40;
  int batch_size = 32;
  int local_epochs = 1;
  Seeds seeds;
  bool mask_zeros = false;
  WmapeDenominator wmape_denom = WmapeDenominator::Predicted;
  int threads = 1;
  OptimizerConfig optimizer;
};

struct RunResult {
  Setup setup = Setup::Centralized;
  int horizon = 0;
  std::vector<std::string> holder_names;
  std::vector<int> holder_node_counts;          // owned nodes per holder
  std::vector<std::vector<double>> val_loss;    // [epoch][holder], normalized MAE of the
                                                // holder's model on the full-graph val split
                                                // (a measurement probe, never ledgered)
  std::vector<double> val_summary;              // [epoch], node-count weighted over holders
  std::vector<std::vector<double>> train_loss;  // [epoch][holder], normalized MAE
  CommLedger comm;
  FlopLedger flops;
  std::vector<Eigen::VectorXd> final_models;    // one flat vector per holder
  std::vector<MetricReport> cloudlet_metrics;   // per-holder test reports (decentralized setups)
  MetricReport global_metrics;                  // pooled/global test report
  double duplication = 1.0;
  uint64_t param_bytes_per_model = 0;
};

// Trains under the given setup for run_cfg.epochs synchronous rounds and
// evaluates on the test split. Fully deterministic for fixed seeds; the
// thread count changes scheduling only, never results.
RunResult run_experiment(const SensorGraph& graph, const ScaledLaplacian& full_lap,
                         const WindowedDataset& dataset, const CloudletPartition& partition,
                         const ModelConfig& model_cfg, const RunConfig& run_cfg);

void write_val_loss_csv(const std::string& path, const RunResult& result);

}  // namespace stgsim
