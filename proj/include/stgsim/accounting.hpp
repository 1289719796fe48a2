#pragma once

#include <cstdint>

#include "stgsim/model.hpp"
#include "stgsim/partition.hpp"
#include "stgsim/series.hpp"

namespace stgsim {

enum class Setup { Centralized, TraditionalFl, ServerfreeFl, Gossip };

const char* to_string(Setup s);
Setup setup_from_string(const std::string& name);

namespace accounting {

constexpr int kBytesPerValue = 4;

// Raw sensor rows a training epoch consumes (inputs plus targets of the
// training samples).
int64_t train_timesteps(const WindowedDataset& dataset);

// Per-epoch node-feature traffic. Centralized counts every sensor's training
// stream once to the center; distributed counts each exchange-plan stream
// (owner -> needing cloudlet) once.
uint64_t feature_bytes_centralized(int sensor_count, int64_t train_timesteps);
uint64_t feature_bytes_distributed(const ExchangePlan& plan, int64_t train_timesteps);

// Per-epoch model traffic counted as sends: centralized 0, traditional FL one
// upload per cloudlet, gossip one push per cloudlet, server-free one send per
// cloudlet link direction (degree sum).
uint64_t model_bytes_per_epoch(Setup setup, const CloudletPartition& partition,
                               uint64_t param_bytes);

// Forward multiply-adds for one sample over an m-node (sub)graph; covers the
// temporal convolutions (GLU doubles the output width), the Chebyshev
// propagation and mixing, and the output head.
uint64_t forward_multiply_adds(const ModelConfig& config, int nodes);

// Training flops for one holder-epoch: 2 flops per multiply-add, backward
// costed at twice the forward pass.
uint64_t training_flops(const ModelConfig& config, int nodes, int64_t samples);

// Averaging m vectors of length param_count: 2*m*param_count flops.
uint64_t aggregation_event_flops(int models, int64_t param_count);

}  // namespace accounting
}  // namespace stgsim
