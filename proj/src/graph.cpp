#include "stgsim/graph.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "stgsim/csv.hpp"
#include "stgsim/rng.hpp"

namespace stgsim {

namespace {
constexpr double kEarthRadiusKm = 6371.0;
constexpr double kPi = 3.14159265358979323846;
}  // namespace

double haversine_km(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg) {
  double lat1 = lat1_deg * kPi / 180.0;
  double lat2 = lat2_deg * kPi / 180.0;
  double dlat = (lat2_deg - lat1_deg) * kPi / 180.0;
  double dlon = (lon2_deg - lon1_deg) * kPi / 180.0;
  double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
             std::cos(lat1) * std::cos(lat2) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

Eigen::MatrixXd pairwise_distances(CoordKind kind, const Eigen::MatrixX2d& coords) {
  const int n = static_cast<int>(coords.rows());
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double d;
      if (kind == CoordKind::GeographicDeg) {
        d = haversine_km(coords(i, 0), coords(i, 1), coords(j, 0), coords(j, 1));
      } else {
        double dx = coords(i, 0) - coords(j, 0);
        double dy = coords(i, 1) - coords(j, 1);
        d = std::sqrt(dx * dx + dy * dy);
      }
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }
  return dist;
}

double default_sigma2(const Eigen::MatrixXd& dist) {
  const int n = static_cast<int>(dist.rows());
  double sum = 0.0;
  int64_t count = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || !std::isfinite(dist(i, j))) continue;
      sum += dist(i, j);
      ++count;
    }
  }
  if (count == 0) throw std::runtime_error("no finite pairwise distances; cannot derive sigma2");
  double mean = sum / static_cast<double>(count);
  double var = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || !std::isfinite(dist(i, j))) continue;
      double d = dist(i, j) - mean;
      var += d * d;
    }
  }
  var /= static_cast<double>(count);
  if (var <= 0.0) throw std::runtime_error("pairwise distance variance is zero; set sigma2 explicitly");
  return var;
}

Eigen::MatrixXd build_adjacency(const Eigen::MatrixXd& dist, double sigma2, double epsilon) {
  if (sigma2 <= 0.0) throw std::runtime_error("sigma2 must be positive");
  const int n = static_cast<int>(dist.rows());
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || !std::isfinite(dist(i, j))) continue;
      double v = std::exp(-dist(i, j) * dist(i, j) / sigma2);
      if (v >= epsilon) w(i, j) = v;
    }
  }
  return w;
}

ScaledLaplacian scaled_laplacian(const Eigen::MatrixXd& weights) {
  const int n = static_cast<int>(weights.rows());
  Eigen::VectorXd degree = weights.rowwise().sum();
  Eigen::VectorXd dinv_sqrt(n);
  for (int i = 0; i < n; ++i) {
    dinv_sqrt(i) = degree(i) > 0.0 ? 1.0 / std::sqrt(degree(i)) : 0.0;
  }
  Eigen::MatrixXd lap = -(dinv_sqrt.asDiagonal() * weights * dinv_sqrt.asDiagonal());
  lap.diagonal().array() += 1.0;  // isolated nodes end up with a bare identity row

  // Power iteration with a fixed pseudo-random start so no input can be
  // orthogonal to the leading eigenvector (the all-ones start would fail on a
  // 2-node graph, whose top eigenvector is (1,-1)).
  Rng rng(0x715EC70FD1E5ULL);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.next_normal();
  v.normalize();
  double lambda = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    Eigen::VectorXd next = lap * v;
    double norm = next.norm();
    if (norm == 0.0) break;
    next /= norm;
    double estimate = next.dot(lap * next);
    if (iter > 0 && std::abs(estimate - lambda) <= 1e-9 * std::max(1.0, std::abs(estimate))) {
      lambda = estimate;
      v = next;
      break;
    }
    lambda = estimate;
    v = next;
  }
  if (lambda <= 0.0) throw std::runtime_error("laplacian power iteration failed");

  ScaledLaplacian out;
  out.lambda_max = lambda;
  out.matrix = (2.0 / lambda) * lap;
  out.matrix.diagonal().array() -= 1.0;
  return out;
}

std::vector<Eigen::MatrixXd> cheb_basis(const Eigen::MatrixXd& scaled, int order_count) {
  if (order_count < 1) throw std::runtime_error("chebyshev order count must be at least 1");
  const int n = static_cast<int>(scaled.rows());
  std::vector<Eigen::MatrixXd> basis;
  basis.reserve(order_count);
  basis.push_back(Eigen::MatrixXd::Identity(n, n));
  if (order_count > 1) basis.push_back(scaled);
  for (int k = 2; k < order_count; ++k) {
    basis.push_back(2.0 * scaled * basis[k - 1] - basis[k - 2]);
  }
  return basis;
}

SensorGraph load_sensor_graph(const std::string& sensors_csv,
                              const std::optional<std::string>& edges_csv,
                              double sigma2_or_zero_for_default, double epsilon) {
  CsvTable table = read_csv(sensors_csv);
  SensorGraph graph;
  int id_col = table.column("sensor_id", sensors_csv);
  int a_col, b_col;
  if (table.header.size() == 3 && table.header[1] == "lat" && table.header[2] == "lon") {
    graph.coord_kind = CoordKind::GeographicDeg;
    a_col = 1;
    b_col = 2;
  } else if (table.header.size() == 3 && table.header[1] == "x_km" && table.header[2] == "y_km") {
    graph.coord_kind = CoordKind::PlanarKm;
    a_col = 1;
    b_col = 2;
  } else {
    throw std::runtime_error(sensors_csv + ": expected header sensor_id,lat,lon or sensor_id,x_km,y_km");
  }

  const int n = static_cast<int>(table.rows.size());
  if (n == 0) throw std::runtime_error(sensors_csv + ": no sensors");
  graph.coords.resize(n, 2);
  std::map<std::string, int> index_of;
  for (int i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    graph.sensor_ids.push_back(row[id_col]);
    if (!index_of.emplace(row[id_col], i).second) {
      throw std::runtime_error(sensors_csv + ": duplicate sensor_id " + row[id_col]);
    }
    graph.coords(i, 0) = parse_double(row[a_col], sensors_csv);
    graph.coords(i, 1) = parse_double(row[b_col], sensors_csv);
  }

  if (edges_csv) {
    const double inf = std::numeric_limits<double>::infinity();
    graph.dist = Eigen::MatrixXd::Constant(n, n, inf);
    graph.dist.diagonal().setZero();
    CsvTable edges = read_csv(*edges_csv);
    int from_col = edges.column("from_id", *edges_csv);
    int to_col = edges.column("to_id", *edges_csv);
    int d_col = edges.column("dist_km", *edges_csv);
    for (const auto& row : edges.rows) {
      auto from_it = index_of.find(row[from_col]);
      auto to_it = index_of.find(row[to_col]);
      if (from_it == index_of.end() || to_it == index_of.end()) {
        throw std::runtime_error(*edges_csv + ": edge references unknown sensor " +
                                 (from_it == index_of.end() ? row[from_col] : row[to_col]));
      }
      int i = from_it->second, j = to_it->second;
      if (i == j) continue;
      double d = parse_double(row[d_col], *edges_csv);
      if (d < 0.0) throw std::runtime_error(*edges_csv + ": negative distance");
      if (std::isfinite(graph.dist(i, j)) && graph.dist(i, j) != d) {
        throw std::runtime_error(*edges_csv + ": conflicting distances for edge " + row[from_col] +
                                 "," + row[to_col]);
      }
      graph.dist(i, j) = d;
      graph.dist(j, i) = d;
    }
  } else {
    graph.dist = pairwise_distances(graph.coord_kind, graph.coords);
  }

  double sigma2 = sigma2_or_zero_for_default > 0.0 ? sigma2_or_zero_for_default
                                                   : default_sigma2(graph.dist);
  graph.weights = build_adjacency(graph.dist, sigma2, epsilon);
  return graph;
}

void write_sensors_csv(const std::string& path, const SensorGraph& graph) {
  std::vector<std::string> lines;
  lines.push_back(graph.coord_kind == CoordKind::GeographicDeg ? "sensor_id,lat,lon"
                                                               : "sensor_id,x_km,y_km");
  for (int i = 0; i < graph.n(); ++i) {
    lines.push_back(graph.sensor_ids[i] + "," + format_double(graph.coords(i, 0)) + "," +
                    format_double(graph.coords(i, 1)));
  }
  write_lines(path, lines);
}

}  // namespace stgsim
