#include "stgsim/series.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "stgsim/csv.hpp"

namespace stgsim {

SpeedSeries load_series(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty file " + path);

  SpeedSeries series;
  for (auto& id : split_csv_line(line)) series.sensor_ids.push_back(std::move(id));
  const int n = static_cast<int>(series.sensor_ids.size());
  if (n == 0 || (n == 1 && series.sensor_ids[0].empty())) {
    throw std::runtime_error(path + ": no sensor columns");
  }

  std::vector<double> cells;
  int64_t row_index = 0;
  while (std::getline(in, line)) {
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != n) {
      throw std::runtime_error(path + ": row " + std::to_string(row_index + 2) + " has " +
                               std::to_string(fields.size()) + " cells, expected " + std::to_string(n));
    }
    for (int j = 0; j < n; ++j) {
      double v = parse_double(fields[j], path + " row " + std::to_string(row_index + 2) + " column " +
                                             std::to_string(j + 1));
      if (!std::isfinite(v)) {
        throw std::runtime_error(path + ": non-finite value at row " + std::to_string(row_index + 2) +
                                 " column " + std::to_string(j + 1));
      }
      cells.push_back(v);
    }
    ++row_index;
  }
  if (row_index == 0) throw std::runtime_error(path + ": no data rows");
  series.values.resize(row_index, n);
  for (int64_t i = 0; i < row_index; ++i) {
    for (int j = 0; j < n; ++j) series.values(i, j) = cells[i * n + j];
  }
  return series;
}

void save_series(const std::string& path, const SpeedSeries& series) {
  std::vector<std::string> lines;
  lines.reserve(series.t() + 1);
  std::string head;
  for (int j = 0; j < series.n(); ++j) {
    if (j) head += ',';
    head += series.sensor_ids[j];
  }
  lines.push_back(std::move(head));
  for (int64_t i = 0; i < series.t(); ++i) {
    std::string row;
    for (int j = 0; j < series.n(); ++j) {
      if (j) row += ',';
      row += format_double(series.values(i, j));
    }
    lines.push_back(std::move(row));
  }
  write_lines(path, lines);
}

Normalizer fit_normalizer(const Eigen::MatrixXd& values, int64_t row_count) {
  if (row_count <= 0 || row_count > values.rows()) {
    throw std::runtime_error("normalizer slice must cover between 1 and T rows");
  }
  auto block = values.topRows(row_count);
  double count = static_cast<double>(block.size());
  double mean = block.sum() / count;
  double var = (block.array() - mean).square().sum() / count;
  double std = std::sqrt(var);
  if (std <= 0.0) throw std::runtime_error("constant series: standard deviation is zero");
  return Normalizer{mean, std};
}

SplitCounts split_samples(int64_t sample_count) {
  // Integer arithmetic gives exact floor(0.70*S) / floor(0.15*S); the binary
  // doubles 0.70 and 0.15 round below the decimal values and would lose a
  // sample at exact multiples.
  SplitCounts s;
  s.train = sample_count * 70 / 100;
  s.val = sample_count * 15 / 100;
  s.test = sample_count - s.train - s.val;
  return s;
}

WindowedDataset make_windows(const SpeedSeries& series, int horizon) {
  if (horizon < 1) throw std::runtime_error("horizon must be at least 1 step");
  WindowedDataset ds;
  ds.horizon = horizon;
  ds.interval_minutes = series.interval_minutes;
  const int64_t t = series.t();
  const int64_t min_t = ds.window + horizon;
  if (t < min_t) {
    throw std::runtime_error("series too short: T=" + std::to_string(t) + ", need at least " +
                             std::to_string(min_t));
  }
  ds.sample_count = t - ds.window - horizon + 1;
  ds.split = split_samples(ds.sample_count);
  // Raw rows reachable from training samples: the last train target sits at
  // row (train-1) + window - 1 + horizon. Empty splits are legal here (the
  // windowing arithmetic stays inspectable); training validates them.
  ds.train_timesteps = ds.split.train + ds.window - 1 + horizon;
  ds.raw = series.values;
  ds.normalizer = fit_normalizer(series.values, ds.train_timesteps);
  ds.norm = (series.values.array() - ds.normalizer.mean) / ds.normalizer.std;
  return ds;
}

}  // namespace stgsim
