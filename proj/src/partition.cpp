#include "stgsim/partition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "stgsim/csv.hpp"
#include "stgsim/rng.hpp"

namespace stgsim {

namespace {
double coord_distance(CoordKind kind, double a0, double a1, double b0, double b1) {
  if (kind == CoordKind::GeographicDeg) return haversine_km(a0, a1, b0, b1);
  double dx = a0 - b0, dy = a1 - b1;
  return std::sqrt(dx * dx + dy * dy);
}
}  // namespace

std::vector<int> CloudletPartition::region(int c) const {
  std::vector<int> merged;
  merged.reserve(owned[c].size() + halo[c].size());
  std::merge(owned[c].begin(), owned[c].end(), halo[c].begin(), halo[c].end(),
             std::back_inserter(merged));
  return merged;
}

std::vector<int> assign_sensors(const SensorGraph& graph, const Eigen::MatrixX2d& cloudlet_coords,
                                double comm_range_km) {
  const int k = static_cast<int>(cloudlet_coords.rows());
  if (k < 1) throw std::runtime_error("need at least one cloudlet");
  if (comm_range_km <= 0.0) throw std::runtime_error("comm_range_km must be positive");

  std::vector<int> owner(graph.n(), -1);
  std::vector<std::string> uncovered;
  for (int i = 0; i < graph.n(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      double d = coord_distance(graph.coord_kind, graph.coords(i, 0), graph.coords(i, 1),
                                cloudlet_coords(c, 0), cloudlet_coords(c, 1));
      if (d <= comm_range_km && d < best) {
        best = d;
        owner[i] = c;
      }
    }
    if (owner[i] < 0) uncovered.push_back(graph.sensor_ids[i]);
  }
  if (!uncovered.empty()) {
    std::string msg = "uncovered sensors (outside every cloudlet range):";
    for (const auto& id : uncovered) msg += " " + id;
    throw std::runtime_error(msg);
  }
  return owner;
}

int receptive_hops(const ModelConfig& config, std::optional<int> override_hops) {
  if (override_hops) {
    if (*override_hops < 0) throw std::runtime_error("hops override must be >= 0");
    return *override_hops;
  }
  return config.st_blocks * (config.cheb_order - 1);
}

CloudletPartition build_partition(const SensorGraph& graph, const Eigen::MatrixX2d& cloudlet_coords,
                                  double comm_range_km, int hops) {
  CloudletPartition part;
  part.cloudlet_coords = cloudlet_coords;
  part.comm_range_km = comm_range_km;
  part.hops = hops;
  part.owner = assign_sensors(graph, cloudlet_coords, comm_range_km);

  const int n = graph.n();
  const int k = static_cast<int>(cloudlet_coords.rows());
  part.owned.assign(k, {});
  part.halo.assign(k, {});
  for (int i = 0; i < n; ++i) part.owned[part.owner[i]].push_back(i);

  // Adjacency lists over W's nonzero pattern.
  std::vector<std::vector<int>> neighbors(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && graph.weights(i, j) != 0.0) neighbors[i].push_back(j);
    }
  }

  for (int c = 0; c < k; ++c) {
    std::vector<char> visited(n, 0);
    std::vector<int> frontier = part.owned[c];
    for (int v : frontier) visited[v] = 1;
    for (int level = 0; level < hops && !frontier.empty(); ++level) {
      std::vector<int> next;
      for (int v : frontier) {
        for (int u : neighbors[v]) {
          if (!visited[u]) {
            visited[u] = 1;
            next.push_back(u);
            part.halo[c].push_back(u);
          }
        }
      }
      frontier = std::move(next);
    }
    std::sort(part.halo[c].begin(), part.halo[c].end());
  }

  std::map<std::pair<int, int>, std::vector<int>> transfers;
  for (int c = 0; c < k; ++c) {
    for (int v : part.halo[c]) transfers[{part.owner[v], c}].push_back(v);
  }
  for (auto& [key, nodes] : transfers) {
    std::sort(nodes.begin(), nodes.end());
    part.plan.entries.push_back({key.first, key.second, std::move(nodes)});
  }

  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      double d = coord_distance(graph.coord_kind, cloudlet_coords(a, 0), cloudlet_coords(a, 1),
                                cloudlet_coords(b, 0), cloudlet_coords(b, 1));
      if (d <= comm_range_km) part.cloudlet_links.emplace_back(a, b);
    }
  }
  return part;
}

Subgraph extract_subgraph(const SensorGraph& graph, const Eigen::MatrixXd& full_scaled_lap,
                          const std::vector<int>& nodes) {
  if (nodes.empty()) throw std::runtime_error("extract_subgraph: empty node set");
  const int m = static_cast<int>(nodes.size());
  Subgraph sub;
  sub.nodes = nodes;
  sub.weights.resize(m, m);
  sub.scaled_lap.resize(m, m);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      sub.weights(a, b) = graph.weights(nodes[a], nodes[b]);
      sub.scaled_lap(a, b) = full_scaled_lap(nodes[a], nodes[b]);
    }
  }
  return sub;
}

double duplication_factor(const CloudletPartition& partition) {
  int64_t total = 0;
  for (int c = 0; c < partition.cloudlet_count(); ++c) {
    total += static_cast<int64_t>(partition.owned[c].size() + partition.halo[c].size());
  }
  return static_cast<double>(total) / static_cast<double>(partition.owner.size());
}

Eigen::MatrixX2d suggest_cloudlet_positions(const SensorGraph& graph, int k, uint64_t seed,
                                            int iterations) {
  const int n = graph.n();
  if (k < 1 || k > n) throw std::runtime_error("cloudlet count must lie in [1, sensor count]");
  auto dist = [&](double a0, double a1, int sensor) {
    return coord_distance(graph.coord_kind, a0, a1, graph.coords(sensor, 0), graph.coords(sensor, 1));
  };

  // Farthest-point start from a seeded sensor, then Lloyd iterations.
  Rng rng(seed);
  Eigen::MatrixX2d centers(k, 2);
  centers.row(0) = graph.coords.row(static_cast<int>(rng.next_below(n)));
  for (int c = 1; c < k; ++c) {
    int best = 0;
    double best_d = -1.0;
    for (int i = 0; i < n; ++i) {
      double nearest = std::numeric_limits<double>::infinity();
      for (int p = 0; p < c; ++p) {
        nearest = std::min(nearest, dist(centers(p, 0), centers(p, 1), i));
      }
      if (nearest > best_d) {
        best_d = nearest;
        best = i;
      }
    }
    centers.row(c) = graph.coords.row(best);
  }

  std::vector<int> assign(n);
  for (int it = 0; it < iterations; ++it) {
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        double d = dist(centers(c, 0), centers(c, 1), i);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      assign[i] = best;
    }
    for (int c = 0; c < k; ++c) {
      double sx = 0, sy = 0;
      int count = 0;
      for (int i = 0; i < n; ++i) {
        if (assign[i] == c) {
          sx += graph.coords(i, 0);
          sy += graph.coords(i, 1);
          ++count;
        }
      }
      if (count > 0) {
        centers(c, 0) = sx / count;
        centers(c, 1) = sy / count;
      } else {
        // Re-seed an empty cluster at the sensor farthest from its center.
        int far = 0;
        double far_d = -1.0;
        for (int i = 0; i < n; ++i) {
          double d = dist(centers(assign[i], 0), centers(assign[i], 1), i);
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centers.row(c) = graph.coords.row(far);
      }
    }
  }
  return centers;
}

void write_partition_csv(const std::string& path, const SensorGraph& graph,
                         const CloudletPartition& partition) {
  std::vector<std::string> lines;
  lines.push_back("sensor_id,cloudlet_id");
  for (int i = 0; i < graph.n(); ++i) {
    lines.push_back(graph.sensor_ids[i] + "," + std::to_string(partition.owner[i]));
  }
  write_lines(path, lines);
}

void write_plan_csv(const std::string& path, const SensorGraph& graph,
                    const CloudletPartition& partition) {
  std::vector<std::string> lines;
  lines.push_back("src,dst,node_id");
  for (const auto& entry : partition.plan.entries) {
    for (int v : entry.nodes) {
      lines.push_back(std::to_string(entry.src) + "," + std::to_string(entry.dst) + "," +
                      graph.sensor_ids[v]);
    }
  }
  write_lines(path, lines);
}

}  // namespace stgsim
