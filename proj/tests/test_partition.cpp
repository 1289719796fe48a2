#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "stgsim/graph.hpp"
#include "stgsim/model.hpp"
#include "stgsim/partition.hpp"
#include "stgsim/rng.hpp"

using namespace stgsim;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

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

// Line of sensors 1 km apart; sigma2 = 1 keeps only the consecutive pairs
// above the 0.1 cutoff (exp(-1) vs exp(-4)), so W is a path graph.
SensorGraph path_graph(int n) {
  std::vector<std::pair<double, double>> coords;
  for (int i = 0; i < n; ++i) coords.emplace_back(static_cast<double>(i), 0.0);
  return planar_graph(coords, 1.0, 0.1);
}

Eigen::MatrixX2d cloudlets(const std::vector<std::pair<double, double>>& pos) {
  Eigen::MatrixX2d m(static_cast<int>(pos.size()), 2);
  for (size_t i = 0; i < pos.size(); ++i) {
    m(static_cast<int>(i), 0) = pos[i].first;
    m(static_cast<int>(i), 1) = pos[i].second;
  }
  return m;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

Slices random_window(Rng& rng, int window, int batch, int nodes) {
  Slices input(static_cast<size_t>(window));
  for (auto& slice : input) {
    slice.resize(batch * nodes, 1);
    for (Eigen::Index r = 0; r < slice.rows(); ++r) slice(r, 0) = rng.next_normal();
  }
  return input;
}

// Forward on a cloudlet's region subgraph, then compare the owned-node
// predictions against the full-graph forward.
double owned_prediction_gap(const SensorGraph& graph, const Eigen::MatrixXd& full_lap,
                            const CloudletPartition& part, const ModelConfig& cfg,
                            const ModelParams& params, const Slices& input, int batch) {
  auto full_basis = cheb_basis(full_lap, cfg.cheb_order);
  Eigen::MatrixXd full_pred =
      forward(params, full_basis, input, batch, graph.n(), RunMode::Eval, 0, nullptr);
  double worst = 0.0;
  for (int c = 0; c < part.cloudlet_count(); ++c) {
    if (part.owned[c].empty()) continue;
    std::vector<int> region = part.region(c);
    Subgraph sub = extract_subgraph(graph, full_lap, region);
    auto sub_basis = cheb_basis(sub.scaled_lap, cfg.cheb_order);
    const int m = static_cast<int>(region.size());
    Slices sub_input(input.size());
    for (size_t t = 0; t < input.size(); ++t) {
      sub_input[t].resize(batch * m, 1);
      for (int b = 0; b < batch; ++b) {
        for (int a = 0; a < m; ++a) {
          sub_input[t](b * m + a, 0) = input[t](b * graph.n() + region[static_cast<size_t>(a)], 0);
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
  return worst;
}

}  // namespace

TEST_SUITE("partition") {
  TEST_CASE("sensors go to the nearest in-range cloudlet, ties to the lowest index") {
    SensorGraph g = planar_graph({{0.0, 0.0}, {0.6, 0.0}, {-0.6, 0.0}}, 1.0, 0.1);
    Eigen::MatrixX2d cl = cloudlets({{1.0, 0.0}, {-1.0, 0.0}});
    std::vector<int> owner = assign_sensors(g, cl, 8.0);
    CHECK(owner[0] == 0);  // exact tie at distance 1: lowest index wins
    CHECK(owner[1] == 0);
    CHECK(owner[2] == 1);
  }

  TEST_CASE("a sensor just outside every range is reported by id") {
    SensorGraph g = planar_graph({{0.0, 0.0}, {8.001, 0.0}}, 50.0, 1e-6);
    Eigen::MatrixX2d cl = cloudlets({{0.0, 0.0}});
    CHECK_THROWS_WITH_AS(assign_sensors(g, cl, 8.0), doctest::Contains("s1"),
                         std::runtime_error);
    // Exactly on the boundary still counts as covered.
    SensorGraph g2 = planar_graph({{0.0, 0.0}, {8.0, 0.0}}, 50.0, 1e-6);
    std::vector<int> owner = assign_sensors(g2, cl, 8.0);
    CHECK(owner[1] == 0);
  }

  TEST_CASE("assign_sensors validates its arguments") {
    SensorGraph g = planar_graph({{0.0, 0.0}, {1.0, 0.0}}, 1.0, 0.1);
    CHECK_THROWS_AS(assign_sensors(g, Eigen::MatrixX2d(0, 2), 8.0), std::runtime_error);
    CHECK_THROWS_AS(assign_sensors(g, cloudlets({{0.0, 0.0}}), 0.0), std::runtime_error);
  }

  TEST_CASE("receptive field spans st_blocks * (cheb_order - 1) hops") {
    ModelConfig cfg;  // 2 blocks, K = 3
    CHECK(receptive_hops(cfg) == 4);
    cfg.st_blocks = 1;
    cfg.cheb_order = 2;
    CHECK(receptive_hops(cfg) == 1);
    CHECK(receptive_hops(cfg, 2) == 2);
    CHECK(receptive_hops(cfg, 0) == 0);
    CHECK_THROWS_AS(receptive_hops(cfg, -1), std::runtime_error);
  }

  TEST_CASE("path graph: owned sets, halo growth per hop, plan, links") {
    SensorGraph g = path_graph(3);
    REQUIRE(g.weights(0, 1) > 0.0);
    REQUIRE(g.weights(0, 2) == 0.0);
    Eigen::MatrixX2d cl = cloudlets({{0.0, 0.0}, {2.0, 0.0}});

    CloudletPartition p1 = build_partition(g, cl, 1.4, 1);
    CHECK(p1.owned[0] == std::vector<int>{0, 1});  // node 1 ties toward cloudlet 0
    CHECK(p1.owned[1] == std::vector<int>{2});
    CHECK(p1.halo[0] == std::vector<int>{2});
    CHECK(p1.halo[1] == std::vector<int>{1});
    CHECK(p1.region(1) == std::vector<int>{1, 2});
    REQUIRE(p1.plan.entries.size() == 2);
    CHECK(p1.plan.entries[0].src == 0);
    CHECK(p1.plan.entries[0].dst == 1);
    CHECK(p1.plan.entries[0].nodes == std::vector<int>{1});
    CHECK(p1.plan.entries[1].src == 1);
    CHECK(p1.plan.entries[1].dst == 0);
    CHECK(p1.plan.entries[1].nodes == std::vector<int>{2});
    CHECK(p1.plan.total_node_streams() == 2);
    CHECK(duplication_factor(p1) == doctest::Approx(5.0 / 3.0).epsilon(1e-12));
    CHECK(p1.cloudlet_links.empty());  // cloudlets sit 2 km apart, range 1.4

    CloudletPartition p2 = build_partition(g, cl, 2.0, 2);
    CHECK(p2.halo[1] == std::vector<int>{0, 1});  // second hop reaches the far end
    CHECK(p2.cloudlet_links == std::vector<std::pair<int, int>>{{0, 1}});

    CloudletPartition p0 = build_partition(g, cl, 1.4, 0);
    CHECK(p0.halo[0].empty());
    CHECK(p0.halo[1].empty());
    CHECK(p0.plan.entries.empty());
    CHECK(duplication_factor(p0) == 1.0);
  }

  TEST_CASE("complete graph: one hop pulls in every foreign node") {
    SensorGraph g = planar_graph({{0, 0}, {1, 0}, {0, 1}, {1, 1}, {0.5, 0.5}, {0.2, 0.8}},
                                 100.0, 1e-6);
    REQUIRE((g.weights.array() > 0.0).count() == 30);  // all off-diagonal pairs
    Eigen::MatrixX2d cl = cloudlets({{0.0, 0.0}, {1.0, 1.0}});
    CloudletPartition p = build_partition(g, cl, 10.0, 1);
    for (int c = 0; c < 2; ++c) {
      std::set<int> expect;
      for (int v = 0; v < g.n(); ++v) {
        if (p.owner[v] != c) expect.insert(v);
      }
      CHECK(p.halo[c] == std::vector<int>(expect.begin(), expect.end()));
      CHECK(p.region(c).size() == 6);
    }
    CHECK(duplication_factor(p) == 2.0);
  }

  TEST_CASE("a cloudlet can own nothing; it then needs nothing") {
    SensorGraph g = path_graph(3);
    Eigen::MatrixX2d cl = cloudlets({{1.0, 0.0}, {50.0, 0.0}});
    CloudletPartition p = build_partition(g, cl, 60.0, 2);
    CHECK(p.owned[0] == std::vector<int>{0, 1, 2});  // all strictly nearer cloudlet 0
    CHECK(p.owned[1].empty());
    CHECK(p.halo[1].empty());
    CHECK(p.plan.entries.empty());
    CHECK(duplication_factor(p) == 1.0);
  }

  TEST_CASE("exchange plan covers each halo exactly, ordered by (src, dst)") {
    Rng rng(321);
    std::vector<std::pair<double, double>> coords;
    for (int i = 0; i < 24; ++i) {
      coords.emplace_back(10.0 * rng.next_double(), 10.0 * rng.next_double());
    }
    SensorGraph g = planar_graph(coords, 8.0, 0.2);
    Eigen::MatrixX2d cl = cloudlets({{2.0, 2.0}, {8.0, 2.0}, {5.0, 8.0}});
    CloudletPartition p = build_partition(g, cl, 20.0, 3);

    std::pair<int, int> prev{-1, -1};
    std::vector<std::set<int>> rebuilt(3);
    for (const auto& e : p.plan.entries) {
      std::pair<int, int> key{e.src, e.dst};
      CHECK(prev < key);  // strictly increasing (src, dst)
      prev = key;
      CHECK(std::is_sorted(e.nodes.begin(), e.nodes.end()));
      for (int v : e.nodes) {
        CHECK(p.owner[v] == e.src);
        CHECK(rebuilt[static_cast<size_t>(e.dst)].insert(v).second);  // no duplicates
      }
    }
    int64_t halo_total = 0;
    for (int c = 0; c < 3; ++c) {
      CHECK(rebuilt[static_cast<size_t>(c)] ==
            std::set<int>(p.halo[c].begin(), p.halo[c].end()));
      halo_total += static_cast<int64_t>(p.halo[c].size());
    }
    CHECK(p.plan.total_node_streams() == halo_total);
  }

  TEST_CASE("extract_subgraph takes principal submatrices of the full operators") {
    SensorGraph g = path_graph(4);
    ScaledLaplacian lap = scaled_laplacian(g.weights);
    std::vector<int> nodes = {1, 3};
    Subgraph sub = extract_subgraph(g, lap.matrix, nodes);
    CHECK(sub.weights(0, 0) == g.weights(1, 1));
    CHECK(sub.weights(0, 1) == g.weights(1, 3));
    CHECK(sub.scaled_lap(0, 0) == lap.matrix(1, 1));
    CHECK(sub.scaled_lap(0, 1) == lap.matrix(1, 3));
    CHECK(sub.scaled_lap(1, 1) == lap.matrix(3, 3));
    // The point of keeping the full operator: recomputing the Laplacian on
    // the cut-out weights gives a different matrix (degrees change).
    ScaledLaplacian relap = scaled_laplacian(sub.weights);
    CHECK((relap.matrix - sub.scaled_lap).cwiseAbs().maxCoeff() > 1e-6);
    CHECK_THROWS_AS(extract_subgraph(g, lap.matrix, {}), std::runtime_error);
  }

  TEST_CASE("region forwards reproduce full-graph predictions on owned nodes") {
    ModelConfig cfg;
    cfg.channels = {4, 3, 4};
    cfg.input_window = 12;
    cfg.dropout_rate = 0.0;
    const int hops = receptive_hops(cfg);
    REQUIRE(hops == 4);
    Rng scen(2024);
    for (int rep = 0; rep < 20; ++rep) {
      CAPTURE(rep);
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
      Slices input = random_window(data, cfg.input_window, 2, n);
      CHECK(owned_prediction_gap(g, lap.matrix, part, cfg, params, input, 2) < 1e-9);
    }
  }

  TEST_CASE("a halo narrower than the receptive field breaks the match") {
    ModelConfig cfg;
    cfg.channels = {4, 3, 4};
    cfg.input_window = 12;
    cfg.dropout_rate = 0.0;
    SensorGraph g = path_graph(8);
    Eigen::MatrixX2d cl = cloudlets({{1.5, 0.0}, {5.5, 0.0}});
    ScaledLaplacian lap = scaled_laplacian(g.weights);
    ModelParams params = init_params(cfg, 5);
    Rng data(44);
    Slices input = random_window(data, cfg.input_window, 2, 8);

    CloudletPartition enough = build_partition(g, cl, 10.0, receptive_hops(cfg));
    CHECK(owned_prediction_gap(g, lap.matrix, enough, cfg, params, input, 2) < 1e-9);

    CloudletPartition starved = build_partition(g, cl, 10.0, receptive_hops(cfg) - 1);
    CHECK(owned_prediction_gap(g, lap.matrix, starved, cfg, params, input, 2) > 1e-7);
  }

  TEST_CASE("suggested cloudlet positions are deterministic and validated") {
    Rng rng(9);
    std::vector<std::pair<double, double>> coords;
    for (int i = 0; i < 15; ++i) {
      coords.emplace_back(5.0 * rng.next_double(), 5.0 * rng.next_double());
    }
    SensorGraph g = planar_graph(coords, 10.0, 0.1);
    Eigen::MatrixX2d a = suggest_cloudlet_positions(g, 4, 11);
    Eigen::MatrixX2d b = suggest_cloudlet_positions(g, 4, 11);
    CHECK(a == b);
    // Different seeds may legitimately converge to the same optimum, so
    // determinism is the only seed property worth asserting.
    CHECK_THROWS_AS(suggest_cloudlet_positions(g, 0, 1), std::runtime_error);
    CHECK_THROWS_AS(suggest_cloudlet_positions(g, 16, 1), std::runtime_error);
    // k = n: every sensor seeds its own singleton cluster and stays put.
    Eigen::MatrixX2d all = suggest_cloudlet_positions(g, 15, 3);
    std::set<std::pair<double, double>> rows;
    for (int i = 0; i < 15; ++i) rows.insert({all(i, 0), all(i, 1)});
    CHECK(rows.size() == 15);
    for (const auto& [x, y] : rows) {
      bool found = false;
      for (const auto& [cx, cy] : coords) found = found || (cx == x && cy == y);
      CHECK(found);
    }
  }

  TEST_CASE("partition and plan CSV files list assignments and transfers") {
    SensorGraph g = path_graph(3);
    CloudletPartition p = build_partition(g, cloudlets({{0.0, 0.0}, {2.0, 0.0}}), 1.4, 1);
    const std::string ppath = temp_path("stgsim_partition_test.csv");
    const std::string qpath = temp_path("stgsim_plan_test.csv");
    write_partition_csv(ppath, g, p);
    write_plan_csv(qpath, g, p);
    CHECK(read_lines(ppath) ==
          std::vector<std::string>{"sensor_id,cloudlet_id", "s0,0", "s1,0", "s2,1"});
    CHECK(read_lines(qpath) ==
          std::vector<std::string>{"src,dst,node_id", "0,1,s1", "1,0,s2"});
    std::filesystem::remove(ppath);
    std::filesystem::remove(qpath);
  }
}
