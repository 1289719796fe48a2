#include "stgsim/synth.hpp"

#include <cmath>
#include <stdexcept>

#include "stgsim/rng.hpp"

namespace stgsim {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

// Standardized graph-smoothed field: white noise pushed twice through the
// row-normalized (W + I) operator, so nearby sensors get similar values.
Eigen::VectorXd diffused_field(const Eigen::MatrixXd& weights, Rng& rng) {
  const int n = static_cast<int>(weights.rows());
  Eigen::VectorXd g(n);
  for (int i = 0; i < n; ++i) g(i) = rng.next_normal();
  Eigen::MatrixXd smooth = weights + Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd row_sums = smooth.rowwise().sum();
  for (int i = 0; i < n; ++i) smooth.row(i) /= row_sums(i);
  g = smooth * (smooth * g);
  double mean = g.mean();
  double std = std::sqrt((g.array() - mean).square().sum() / n);
  if (std > 0.0) g = (g.array() - mean) / std;
  return g;
}
}  // namespace

SynthOutput synth_generate(const SynthParams& params) {
  if (params.sensors < 2) throw std::runtime_error("synth needs at least 2 sensors");
  if (params.timesteps < 300) throw std::runtime_error("synth needs at least 300 timesteps");

  SynthOutput out;
  Rng rng(params.seed);

  const int n = params.sensors;
  out.graph.coord_kind = CoordKind::PlanarKm;
  out.graph.coords.resize(n, 2);
  int id_width = 1;
  for (int v = n - 1; v >= 10; v /= 10) ++id_width;
  for (int i = 0; i < n; ++i) {
    std::string id = std::to_string(i);
    out.graph.sensor_ids.push_back("s" + std::string(id_width - id.size(), '0') + id);
    out.graph.coords(i, 0) = rng.next_double() * params.box_km;
    out.graph.coords(i, 1) = rng.next_double() * params.box_km;
  }
  out.graph.dist = pairwise_distances(CoordKind::PlanarKm, out.graph.coords);
  double sigma2 = params.sigma2 > 0.0 ? params.sigma2 : default_sigma2(out.graph.dist);
  out.graph.weights = build_adjacency(out.graph.dist, sigma2, params.epsilon);

  Eigen::VectorXd field1 = diffused_field(out.graph.weights, rng);
  Eigen::VectorXd field2 = diffused_field(out.graph.weights, rng);
  Eigen::VectorXd phase_field = diffused_field(out.graph.weights, rng);
  double theta1 = rng.next_double() * kTwoPi;
  double theta2 = rng.next_double() * kTwoPi;

  out.series.sensor_ids = out.graph.sensor_ids;
  out.series.interval_minutes = 5;
  out.series.values.resize(params.timesteps, n);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int t = 0; t < params.timesteps; ++t) {
    double day = kTwoPi * static_cast<double>(t % 288) / 288.0;
    for (int i = 0; i < n; ++i) {
      double v = params.base_speed;
      v += params.daily_amplitude * std::sin(day + 0.3 * phase_field(i));
      // Higher harmonics so the spatial component can never phase-cancel the
      // daily fundamental at an unlucky node.
      v += params.spatial_amplitude * inv_sqrt2 *
           (field1(i) * std::sin(2.0 * day + theta1) + field2(i) * std::sin(3.0 * day + theta2));
      v += params.noise_amplitude * rng.next_normal();
      out.series.values(t, i) = std::max(0.0, v);
    }
  }
  return out;
}

}  // namespace stgsim
