#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace stgsim {

enum class CoordKind { GeographicDeg, PlanarKm };

// Sensor network: node coordinates, pairwise road distances (km, +inf where
// unconnected) and the thresholded Gaussian-kernel adjacency built from them.
struct SensorGraph {
  std::vector<std::string> sensor_ids;
  CoordKind coord_kind = CoordKind::PlanarKm;
  Eigen::MatrixX2d coords;   // (lat, lon) degrees or (x, y) km per row
  Eigen::MatrixXd dist;      // n x n, symmetric, zero diagonal
  Eigen::MatrixXd weights;   // n x n adjacency W

  int n() const { return static_cast<int>(sensor_ids.size()); }
};

struct ScaledLaplacian {
  Eigen::MatrixXd matrix;  // rescaled to spectrum within [-1, 1]
  double lambda_max = 0.0;
};

double haversine_km(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg);

// Distance matrix from coordinates alone (every pair connected).
Eigen::MatrixXd pairwise_distances(CoordKind kind, const Eigen::MatrixX2d& coords);

// Population variance of the finite off-diagonal distances; the default
// Gaussian kernel width.
double default_sigma2(const Eigen::MatrixXd& dist);

// W[i][j] = exp(-d^2/sigma2) when i != j and the value reaches epsilon,
// else 0. Infinite distances (no road) give weight 0.
Eigen::MatrixXd build_adjacency(const Eigen::MatrixXd& dist, double sigma2, double epsilon);

// Symmetric-normalized Laplacian L = I - D^-1/2 W D^-1/2 (isolated nodes get
// an identity row), then rescaled as 2L/lambda_max - I. lambda_max comes from
// power iteration: 200 rounds or relative change below 1e-9.
ScaledLaplacian scaled_laplacian(const Eigen::MatrixXd& weights);

// Chebyshev polynomials T_0..T_{order_count-1} of the rescaled Laplacian:
// T_0 = I, T_1 = L~, T_k = 2 L~ T_{k-1} - T_{k-2}.
std::vector<Eigen::MatrixXd> cheb_basis(const Eigen::MatrixXd& scaled_laplacian, int order_count);

// sensors CSV: header sensor_id,lat,lon (geographic) or sensor_id,x_km,y_km
// (planar). Optional edges CSV (from_id,to_id,dist_km) restricts connectivity
// to listed pairs; without it every pair is connected at coordinate distance.
SensorGraph load_sensor_graph(const std::string& sensors_csv,
                              const std::optional<std::string>& edges_csv,
                              double sigma2_or_zero_for_default, double epsilon);

void write_sensors_csv(const std::string& path, const SensorGraph& graph);

}  // namespace stgsim
