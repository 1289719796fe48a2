#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stgsim/graph.hpp"
#include "stgsim/partition.hpp"
#include "stgsim/protocols.hpp"
#include "stgsim/series.hpp"
#include "stgsim/synth.hpp"

namespace stgsim {

// Fully resolved experiment description. Parsing is strict: unknown keys are
// rejected with their path, and every seed must be stated explicitly so a
// config file alone pins the entire run.
struct ExperimentConfig {
  bool use_synth = true;
  SynthParams synth;
  std::string speeds_csv;
  std::string sensors_csv;
  std::optional<std::string> edges_csv;
  int interval_minutes = 5;

  double sigma2 = 0.0;  // 0 = distance-variance default
  double epsilon = 0.1;

  std::vector<std::array<double, 2>> cloudlets;
  double comm_range_km = 8.0;
  std::optional<int> hops_override;

  ModelConfig model;
  RunConfig run;
  std::vector<int> horizons = {3, 6, 12};
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config_file(const std::string& path);

// Canonical (sorted-key) JSON echo of the resolved config; hashing it names
// the run directory, so identical configs land in identical directories.
std::string resolved_config_json(const ExperimentConfig& config);
uint64_t fnv1a64(const std::string& text);
std::string run_directory_name(const ExperimentConfig& config);

struct PreparedExperiment {
  SensorGraph graph;
  ScaledLaplacian lap;
  SpeedSeries series;
  CloudletPartition partition;
  int hops = 0;
};

PreparedExperiment prepare(const ExperimentConfig& config);

struct HorizonOutcome {
  int horizon = 0;
  int64_t train_timesteps = 0;
  RunResult result;
};

std::vector<HorizonOutcome> execute(const ExperimentConfig& config,
                                    const PreparedExperiment& prep);

// Run directory layout: config.json, run.json, metrics.csv, and one
// horizon_NN/ subdirectory per horizon holding val_loss.csv, ledger.csv and
// per-holder checkpoints.
void write_run_outputs(const std::string& run_dir, const ExperimentConfig& config,
                       const PreparedExperiment& prep, const std::vector<HorizonOutcome>& outcomes);

void write_metrics_csv(const std::string& path, Setup setup,
                       const std::vector<HorizonOutcome>& outcomes);

}  // namespace stgsim
