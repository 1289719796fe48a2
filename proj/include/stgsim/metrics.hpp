#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace stgsim {

enum class WmapeDenominator { Predicted, Truth };

// Sufficient statistics for MAE/RMSE/WMAPE. Merging two stat blocks gives
// exactly the metrics of the pooled prediction set, which is what makes the
// node-count-weighted cloudlet aggregation equal the pooled computation.
struct ErrorStats {
  int64_t count = 0;
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  double pred_sum = 0.0;
  double truth_sum = 0.0;

  void add(double truth, double pred);
  void merge(const ErrorStats& other);
};

struct MetricReport {
  std::string scope;  // "global" or a cloudlet label
  int horizon = 0;
  double mae = 0.0;
  double rmse = 0.0;
  double wmape = 0.0;  // percent
  int64_t sample_count = 0;
  int node_count = 0;
  ErrorStats stats;
};

double mae(const std::vector<double>& truth, const std::vector<double>& pred);
double rmse(const std::vector<double>& truth, const std::vector<double>& pred);
// Percent; denominator sums predictions or truth per the configured choice.
double wmape(const std::vector<double>& truth, const std::vector<double>& pred,
             WmapeDenominator denom = WmapeDenominator::Predicted);

MetricReport report_from_stats(const ErrorStats& stats, const std::string& scope, int horizon,
                               int node_count, WmapeDenominator denom);

// Node-count-weighted global report over per-cloudlet reports. node_counts
// must match the report list and be positive.
MetricReport aggregate_weighted(const std::vector<MetricReport>& reports,
                                const std::vector<int>& node_counts, WmapeDenominator denom);

}  // namespace stgsim
