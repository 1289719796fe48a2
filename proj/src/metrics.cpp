#include "stgsim/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace stgsim {

void ErrorStats::add(double truth, double pred) {
  double diff = truth - pred;
  count += 1;
  abs_sum += std::abs(diff);
  sq_sum += diff * diff;
  pred_sum += pred;
  truth_sum += truth;
}

void ErrorStats::merge(const ErrorStats& other) {
  count += other.count;
  abs_sum += other.abs_sum;
  sq_sum += other.sq_sum;
  pred_sum += other.pred_sum;
  truth_sum += other.truth_sum;
}

namespace {
ErrorStats stats_of(const std::vector<double>& truth, const std::vector<double>& pred) {
  if (truth.empty()) throw std::runtime_error("metrics need at least one value");
  if (truth.size() != pred.size()) throw std::runtime_error("metrics length mismatch");
  ErrorStats s;
  for (size_t i = 0; i < truth.size(); ++i) s.add(truth[i], pred[i]);
  return s;
}
}  // namespace

double mae(const std::vector<double>& truth, const std::vector<double>& pred) {
  ErrorStats s = stats_of(truth, pred);
  return s.abs_sum / static_cast<double>(s.count);
}

double rmse(const std::vector<double>& truth, const std::vector<double>& pred) {
  ErrorStats s = stats_of(truth, pred);
  return std::sqrt(s.sq_sum / static_cast<double>(s.count));
}

double wmape(const std::vector<double>& truth, const std::vector<double>& pred,
             WmapeDenominator denom) {
  ErrorStats s = stats_of(truth, pred);
  double d = denom == WmapeDenominator::Predicted ? s.pred_sum : s.truth_sum;
  if (d == 0.0) throw std::runtime_error("wmape denominator sums to zero");
  return s.abs_sum / d * 100.0;
}

MetricReport report_from_stats(const ErrorStats& stats, const std::string& scope, int horizon,
                               int node_count, WmapeDenominator denom) {
  if (stats.count <= 0) throw std::runtime_error("metric report over an empty prediction set");
  MetricReport r;
  r.scope = scope;
  r.horizon = horizon;
  r.node_count = node_count;
  r.sample_count = stats.count;
  r.stats = stats;
  r.mae = stats.abs_sum / static_cast<double>(stats.count);
  r.rmse = std::sqrt(stats.sq_sum / static_cast<double>(stats.count));
  double d = denom == WmapeDenominator::Predicted ? stats.pred_sum : stats.truth_sum;
  if (d == 0.0) throw std::runtime_error("wmape denominator sums to zero");
  r.wmape = stats.abs_sum / d * 100.0;
  return r;
}

MetricReport aggregate_weighted(const std::vector<MetricReport>& reports,
                                const std::vector<int>& node_counts, WmapeDenominator denom) {
  if (reports.empty()) throw std::runtime_error("aggregate_weighted: no reports");
  if (reports.size() != node_counts.size()) {
    throw std::runtime_error("aggregate_weighted: report and node-count lists differ in length");
  }
  ErrorStats pooled;
  int nodes = 0;
  int horizon = reports[0].horizon;
  for (size_t i = 0; i < reports.size(); ++i) {
    if (node_counts[i] <= 0) {
      throw std::runtime_error("aggregate_weighted: cloudlet with no nodes");
    }
    pooled.merge(reports[i].stats);
    nodes += node_counts[i];
  }
  return report_from_stats(pooled, "global", horizon, nodes, denom);
}

}  // namespace stgsim
