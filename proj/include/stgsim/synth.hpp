#pragma once

#include <cstdint>

#include "stgsim/graph.hpp"
#include "stgsim/series.hpp"

namespace stgsim {

struct SynthParams {
  int sensors = 40;
  int timesteps = 6000;
  uint64_t seed = 1;
  double box_km = 30.0;
  double base_speed = 60.0;
  double daily_amplitude = 8.0;    // sinusoid with period 288 steps (one day at 5 min)
  double spatial_amplitude = 4.0;  // graph-diffused periodic component
  double noise_amplitude = 1.5;
  double sigma2 = 0.0;  // 0 = distance-variance default
  double epsilon = 0.1;
};

struct SynthOutput {
  SensorGraph graph;
  SpeedSeries series;
};

// Planar sensors placed uniformly in a box_km x box_km square; speeds are a
// base level plus a daily sinusoid, a spatially correlated periodic component
// diffused over the adjacency, and white noise. With noise_amplitude 0 the
// series is exactly periodic with period 288. Deterministic per seed.
SynthOutput synth_generate(const SynthParams& params);

}  // namespace stgsim
