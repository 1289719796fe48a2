#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stgsim/graph.hpp"
#include "stgsim/model.hpp"

namespace stgsim {

// Feature transfers needed so every cloudlet can evaluate its receptive
// field: one entry per (owner cloudlet -> needing cloudlet) pair, listing the
// node ids whose streams travel. Ordered by (src, dst, node id).
struct ExchangePlan {
  struct Entry {
    int src = 0;
    int dst = 0;
    std::vector<int> nodes;
  };
  std::vector<Entry> entries;

  int64_t total_node_streams() const {
    int64_t total = 0;
    for (const auto& e : entries) total += static_cast<int64_t>(e.nodes.size());
    return total;
  }
};

struct CloudletPartition {
  Eigen::MatrixX2d cloudlet_coords;
  double comm_range_km = 8.0;
  int hops = 0;
  std::vector<int> owner;                        // sensor index -> cloudlet index
  std::vector<std::vector<int>> owned;           // sorted node ids per cloudlet
  std::vector<std::vector<int>> halo;            // sorted, disjoint from owned
  std::vector<std::pair<int, int>> cloudlet_links;  // (a,b) with a<b, within range
  ExchangePlan plan;

  int cloudlet_count() const { return static_cast<int>(owned.size()); }
  std::vector<int> region(int c) const;  // owned[c] ∪ halo[c], sorted
};

// Nearest cloudlet within comm_range_km; ties break toward the lowest
// cloudlet index. Throws listing every uncovered sensor id.
std::vector<int> assign_sensors(const SensorGraph& graph, const Eigen::MatrixX2d& cloudlet_coords,
                                double comm_range_km);

// How many adjacency hops the model's receptive field spans: each ST-block
// applies a Chebyshev filter of reach cheb_order-1.
int receptive_hops(const ModelConfig& config, std::optional<int> override_hops = std::nullopt);

// Breadth-first halo expansion over the nonzero pattern of W, plus the
// exchange plan and the cloudlet-to-cloudlet link list.
CloudletPartition build_partition(const SensorGraph& graph, const Eigen::MatrixX2d& cloudlet_coords,
                                  double comm_range_km, int hops);

// Principal submatrices on a sorted node set. The scaled Laplacian comes from
// the FULL graph (full degrees, full lambda_max), which is exactly what makes
// subgraph forwards match full-graph forwards on owned nodes.
struct Subgraph {
  std::vector<int> nodes;        // sorted global ids
  Eigen::MatrixXd weights;       // |nodes| x |nodes|
  Eigen::MatrixXd scaled_lap;    // principal submatrix of the full scaled Laplacian
};

Subgraph extract_subgraph(const SensorGraph& graph, const Eigen::MatrixXd& full_scaled_lap,
                          const std::vector<int>& nodes);

double duplication_factor(const CloudletPartition& partition);

// Advisory Lloyd-iteration positions for k cloudlets over the sensor cloud.
Eigen::MatrixX2d suggest_cloudlet_positions(const SensorGraph& graph, int k, uint64_t seed,
                                            int iterations = 50);

void write_partition_csv(const std::string& path, const SensorGraph& graph,
                         const CloudletPartition& partition);
void write_plan_csv(const std::string& path, const SensorGraph& graph,
                    const CloudletPartition& partition);

}  // namespace stgsim
