#include "stgsim/accounting.hpp"

#include <stdexcept>

namespace stgsim {

const char* to_string(Setup s) {
  switch (s) {
    case Setup::Centralized: return "centralized";
    case Setup::TraditionalFl: return "traditional_fl";
    case Setup::ServerfreeFl: return "serverfree_fl";
    case Setup::Gossip: return "gossip";
  }
  return "?";
}

Setup setup_from_string(const std::string& name) {
  if (name == "centralized") return Setup::Centralized;
  if (name == "traditional_fl") return Setup::TraditionalFl;
  if (name == "serverfree_fl") return Setup::ServerfreeFl;
  if (name == "gossip") return Setup::Gossip;
  throw std::runtime_error("unknown setup '" + name +
                           "' (expected centralized|traditional_fl|serverfree_fl|gossip)");
}

namespace accounting {

int64_t train_timesteps(const WindowedDataset& dataset) { return dataset.train_timesteps; }

uint64_t feature_bytes_centralized(int sensor_count, int64_t train_timesteps) {
  return static_cast<uint64_t>(sensor_count) * static_cast<uint64_t>(train_timesteps) *
         kBytesPerValue;
}

uint64_t feature_bytes_distributed(const ExchangePlan& plan, int64_t train_timesteps) {
  return static_cast<uint64_t>(plan.total_node_streams()) *
         static_cast<uint64_t>(train_timesteps) * kBytesPerValue;
}

uint64_t model_bytes_per_epoch(Setup setup, const CloudletPartition& partition,
                               uint64_t param_bytes) {
  const uint64_t k = static_cast<uint64_t>(partition.cloudlet_count());
  switch (setup) {
    case Setup::Centralized:
      return 0;
    case Setup::TraditionalFl:
    case Setup::Gossip:
      return k * param_bytes;
    case Setup::ServerfreeFl:
      return static_cast<uint64_t>(partition.cloudlet_links.size()) * 2u * param_bytes;
  }
  return 0;
}

uint64_t forward_multiply_adds(const ModelConfig& config, int nodes) {
  const uint64_t m = static_cast<uint64_t>(nodes);
  const uint64_t kt = config.temporal_kernel;
  const uint64_t order = config.cheb_order;
  const uint64_t c1 = config.channels[0], c2 = config.channels[1], c3 = config.channels[2];

  uint64_t total = 0;
  uint64_t t_len = config.input_window;
  uint64_t cin = config.input_channels;
  for (int i = 0; i < config.st_blocks; ++i) {
    t_len -= kt - 1;
    total += t_len * m * kt * cin * (2 * c1);            // temporal conv 1 (GLU)
    total += t_len * order * (m * m * c1 + m * c1 * c2); // Chebyshev propagation + mixing
    t_len -= kt - 1;
    total += t_len * m * kt * c2 * (2 * c3);             // temporal conv 2 (GLU)
    cin = c3;
  }
  total += m * t_len * c3 * (2 * c3);  // collapsing head conv (GLU)
  total += m * c3;                     // per-node linear readout
  return total;
}

uint64_t training_flops(const ModelConfig& config, int nodes, int64_t samples) {
  // 2 flops per multiply-add; forward plus a backward pass at twice forward.
  return 2ull * 3ull * forward_multiply_adds(config, nodes) * static_cast<uint64_t>(samples);
}

uint64_t aggregation_event_flops(int models, int64_t param_count) {
  return 2ull * static_cast<uint64_t>(models) * static_cast<uint64_t>(param_count);
}

}  // namespace accounting
}  // namespace stgsim
