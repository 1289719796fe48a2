#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace stgsim {

// Speed matrix: one row per timestep, one column per sensor, miles/hour.
struct SpeedSeries {
  std::vector<std::string> sensor_ids;
  Eigen::MatrixXd values;  // T x n
  int interval_minutes = 5;

  int64_t t() const { return values.rows(); }
  int n() const { return static_cast<int>(values.cols()); }
};

// CSV with the sensor ids as the first row, one timestep per subsequent row.
SpeedSeries load_series(const std::string& path);
void save_series(const std::string& path, const SpeedSeries& series);

// Z-score with population (1/N) standard deviation.
struct Normalizer {
  double mean = 0.0;
  double std = 1.0;

  double apply(double x) const { return (x - mean) / std; }
  double invert(double z) const { return z * std + mean; }
};

// Statistics over the first `row_count` rows only, so validation/test targets
// never influence scaling.
Normalizer fit_normalizer(const Eigen::MatrixXd& values, int64_t row_count);

struct SplitCounts {
  int64_t train = 0;
  int64_t val = 0;
  int64_t test = 0;
};

// 70:15:15 chronological split over samples (floor for train and val, the
// remainder goes to test).
SplitCounts split_samples(int64_t sample_count);

// Sliding 12-step windows with a single target `horizon` steps past the last
// input row. Sample s reads raw rows [s, s+window-1] and targets row
// s + window - 1 + horizon. Targets are kept implicit (row indices into the
// stored matrices), which makes target/raw agreement exact by construction.
struct WindowedDataset {
  int window = 12;
  int horizon = 0;
  int interval_minutes = 5;
  Eigen::MatrixXd raw;   // T x n original scale (for zero masking)
  Eigen::MatrixXd norm;  // T x n normalized
  Normalizer normalizer;
  int64_t sample_count = 0;
  SplitCounts split;
  int64_t train_timesteps = 0;  // raw rows covered by training samples

  int n() const { return static_cast<int>(raw.cols()); }
  int64_t target_row(int64_t sample) const { return sample + window - 1 + horizon; }
  int64_t first_val_sample() const { return split.train; }
  int64_t first_test_sample() const { return split.train + split.val; }
};

WindowedDataset make_windows(const SpeedSeries& series, int horizon);

}  // namespace stgsim
