#include "stgsim/protocols.hpp"

#include <algorithm>
#include <deque>
#include <iostream>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "stgsim/csv.hpp"
#include "stgsim/rng.hpp"

namespace stgsim {

namespace {

// One model holder: the center (all nodes) or a cloudlet with its owned
// nodes plus halo.
struct Holder {
  int id = 0;
  std::string name;
  std::vector<int> nodes;        // global node ids, sorted
  std::vector<char> owned_mask;  // per local node
  int owned_count = 0;
  std::vector<Eigen::MatrixXd> basis;
  ModelParams params;
  AdamState adam;
  std::deque<Eigen::VectorXd> buffer;  // gossip FIFO, capacity 2
};

struct BatchBuffers {
  Slices input;
  Eigen::MatrixXd target;
  Eigen::MatrixXd mask;
};

// Materialize samples for a holder: inputs from the normalized matrix, the
// loss mask limited to owned nodes (and nonzero raw targets when masking).
void fill_batch(const WindowedDataset& ds, const Holder& holder, const std::vector<int64_t>& samples,
                bool mask_zeros, BatchBuffers& buf) {
  const int window = ds.window;
  const int m = static_cast<int>(holder.nodes.size());
  const int batch = static_cast<int>(samples.size());
  buf.input.resize(window);
  for (int t = 0; t < window; ++t) {
    buf.input[t].resize(static_cast<int64_t>(batch) * m, 1);
  }
  buf.target.resize(batch, m);
  buf.mask.resize(batch, m);
  for (int b = 0; b < batch; ++b) {
    const int64_t s = samples[b];
    const int64_t target_row = ds.target_row(s);
    for (int v = 0; v < m; ++v) {
      const int node = holder.nodes[v];
      for (int t = 0; t < window; ++t) {
        buf.input[t](static_cast<int64_t>(b) * m + v, 0) = ds.norm(s + t, node);
      }
      buf.target(b, v) = ds.norm(target_row, node);
      double use = holder.owned_mask[v] ? 1.0 : 0.0;
      if (mask_zeros && ds.raw(target_row, node) == 0.0) use = 0.0;
      buf.mask(b, v) = use;
    }
  }
}

// One pass over the training samples; returns the epoch's masked MAE over
// everything it trained on.
double train_pass(Holder& holder, const WindowedDataset& ds, const RunConfig& cfg, int epoch,
                  int local_epoch) {
  const int64_t pass_index = static_cast<int64_t>(epoch) * cfg.local_epochs + local_epoch;
  std::vector<int64_t> order(ds.split.train);
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(derive_seed(cfg.seeds.shuffle, static_cast<uint64_t>(holder.id),
                              static_cast<uint64_t>(pass_index)));
  shuffle_rng.shuffle(order);

  const double lr = scheduled_lr(cfg.optimizer, epoch);
  BatchBuffers buf;
  ForwardTape tape;
  Eigen::MatrixXd dpred;
  double abs_sum = 0.0;
  double count = 0.0;
  int batch_index = 0;
  for (int64_t start = 0; start < static_cast<int64_t>(order.size()); start += cfg.batch_size) {
    const int64_t end = std::min<int64_t>(start + cfg.batch_size, order.size());
    std::vector<int64_t> samples(order.begin() + start, order.begin() + end);
    fill_batch(ds, holder, samples, cfg.mask_zeros, buf);
    uint64_t drop_seed = derive_seed(cfg.seeds.dropout, static_cast<uint64_t>(holder.id),
                                     static_cast<uint64_t>(pass_index),
                                     static_cast<uint64_t>(batch_index));
    Eigen::MatrixXd pred =
        forward(holder.params, holder.basis, buf.input, static_cast<int>(samples.size()),
                static_cast<int>(holder.nodes.size()), RunMode::Train, drop_seed, &tape);
    double batch_count = buf.mask.sum();
    double loss = mae_loss(pred, buf.target, buf.mask, &dpred);
    abs_sum += loss * batch_count;
    count += batch_count;
    Eigen::VectorXd grad = backward(holder.params, holder.basis, tape, dpred);
    adam_step(holder.params.flat, grad, holder.adam, lr, cfg.optimizer);
    ++batch_index;
  }
  if (count <= 0.0) throw std::runtime_error("holder " + holder.name + " trained on no targets");
  return abs_sum / count;
}

// Masked MAE on the validation samples, normalized scale, eval mode.
double validation_loss(const Holder& holder, const ModelParams& params, const WindowedDataset& ds,
                       const RunConfig& cfg) {
  BatchBuffers buf;
  double abs_sum = 0.0;
  double count = 0.0;
  const int64_t first = ds.first_val_sample();
  const int64_t last = first + ds.split.val;
  for (int64_t start = first; start < last; start += cfg.batch_size) {
    const int64_t end = std::min(start + cfg.batch_size, last);
    std::vector<int64_t> samples(end - start);
    std::iota(samples.begin(), samples.end(), start);
    fill_batch(ds, holder, samples, cfg.mask_zeros, buf);
    Eigen::MatrixXd pred =
        forward(params, holder.basis, buf.input, static_cast<int>(samples.size()),
                static_cast<int>(holder.nodes.size()), RunMode::Eval, 0, nullptr);
    abs_sum += ((pred - buf.target).array().abs() * buf.mask.array()).sum();
    count += buf.mask.sum();
  }
  if (count <= 0.0) throw std::runtime_error("holder " + holder.name + " has no validation targets");
  return abs_sum / count;
}

// De-normalized error statistics over the test samples, owned nodes only.
ErrorStats test_stats(const Holder& holder, const ModelParams& params, const WindowedDataset& ds,
                      const RunConfig& cfg) {
  BatchBuffers buf;
  ErrorStats stats;
  const int m = static_cast<int>(holder.nodes.size());
  const int64_t first = ds.first_test_sample();
  const int64_t last = first + ds.split.test;
  for (int64_t start = first; start < last; start += cfg.batch_size) {
    const int64_t end = std::min(start + cfg.batch_size, last);
    std::vector<int64_t> samples(end - start);
    std::iota(samples.begin(), samples.end(), start);
    fill_batch(ds, holder, samples, cfg.mask_zeros, buf);
    Eigen::MatrixXd pred = forward(params, holder.basis, buf.input,
                                   static_cast<int>(samples.size()), m, RunMode::Eval, 0, nullptr);
    for (int b = 0; b < static_cast<int>(samples.size()); ++b) {
      const int64_t target_row = ds.target_row(samples[b]);
      for (int v = 0; v < m; ++v) {
        if (buf.mask(b, v) == 0.0) continue;
        stats.add(ds.raw(target_row, holder.nodes[v]), ds.normalizer.invert(pred(b, v)));
      }
    }
  }
  return stats;
}

void train_all(std::vector<Holder>& holders, const WindowedDataset& ds, const RunConfig& cfg,
               int epoch, std::vector<double>& losses) {
  losses.assign(holders.size(), 0.0);
  auto work = [&](size_t h) {
    double loss = 0.0;
    for (int le = 0; le < cfg.local_epochs; ++le) {
      loss = train_pass(holders[h], ds, cfg, epoch, le);
    }
    losses[h] = loss;  // loss of the last local pass
  };
  const int threads = std::max(1, cfg.threads);
  if (threads == 1 || holders.size() == 1) {
    for (size_t h = 0; h < holders.size(); ++h) work(h);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<size_t> next{0};
  for (int t = 0; t < std::min<int>(threads, static_cast<int>(holders.size())); ++t) {
    pool.emplace_back([&] {
      for (;;) {
        size_t h = next.fetch_add(1);
        if (h >= holders.size()) return;
        work(h);
      }
    });
  }
  for (auto& th : pool) th.join();
}

std::string cloudlet_name(int c) { return "cloudlet_" + std::to_string(c); }

}  // namespace

RunResult run_experiment(const SensorGraph& graph, const ScaledLaplacian& full_lap,
                         const WindowedDataset& dataset, const CloudletPartition& partition,
                         const ModelConfig& model_cfg, const RunConfig& run_cfg) {
  model_cfg.validate();
  if (run_cfg.epochs < 1) throw std::runtime_error("epochs must be >= 1");
  if (run_cfg.batch_size < 1) throw std::runtime_error("batch_size must be >= 1");
  if (run_cfg.local_epochs < 1) throw std::runtime_error("local_epochs must be >= 1");
  if (dataset.split.train < 1 || dataset.split.val < 1 || dataset.split.test < 1) {
    throw std::runtime_error("dataset too small: the 70:15:15 split leaves an empty part");
  }
  const Setup setup = run_cfg.setup;
  const int k = partition.cloudlet_count();
  if (setup == Setup::Gossip && k < 2) throw std::runtime_error("gossip needs at least 2 cloudlets");
  if (setup == Setup::ServerfreeFl && partition.cloudlet_links.empty()) {
    std::cerr << "warning: no cloudlet is within range of another; server-free cloudlets train in "
                 "isolation\n";
  }

  const bool centralized_model = setup == Setup::Centralized || setup == Setup::TraditionalFl;
  const ModelParams initial = init_params(model_cfg, run_cfg.seeds.init);
  const int64_t pcount = initial.param_count();
  const uint64_t pbytes = param_bytes(pcount);
  const int64_t ts = accounting::train_timesteps(dataset);
  const int64_t samples_per_pass = dataset.split.train;

  // Trainers: the center alone, or one per cloudlet on its owned+halo region.
  std::vector<Holder> holders;
  if (setup == Setup::Centralized) {
    Holder h;
    h.id = 0;
    h.name = "global";
    h.nodes.resize(graph.n());
    std::iota(h.nodes.begin(), h.nodes.end(), 0);
    h.owned_mask.assign(graph.n(), 1);
    h.owned_count = graph.n();
    h.basis = cheb_basis(full_lap.matrix, model_cfg.cheb_order);
    h.params = initial;
    holders.push_back(std::move(h));
  } else {
    for (int c = 0; c < k; ++c) {
      Holder h;
      h.id = c;
      h.name = cloudlet_name(c);
      h.nodes = partition.region(c);
      if (h.nodes.empty()) {
        throw std::runtime_error(cloudlet_name(c) + " owns no sensors; remove it or move it");
      }
      h.owned_mask.assign(h.nodes.size(), 0);
      for (size_t v = 0; v < h.nodes.size(); ++v) {
        if (partition.owner[h.nodes[v]] == c) {
          h.owned_mask[v] = 1;
          ++h.owned_count;
        }
      }
      Subgraph sub = extract_subgraph(graph, full_lap.matrix, h.nodes);
      h.basis = cheb_basis(sub.scaled_lap, model_cfg.cheb_order);
      h.params = initial;
      holders.push_back(std::move(h));
    }
  }

  // Validation probes every model on the full graph so the four setups'
  // curves share one scale; the probe moves no simulated traffic. The same
  // holder evaluates/tests the traditional-FL global model.
  Holder evaluator;
  if (setup != Setup::Centralized) {
    evaluator.id = 0;
    evaluator.name = "global";
    evaluator.nodes.resize(graph.n());
    std::iota(evaluator.nodes.begin(), evaluator.nodes.end(), 0);
    evaluator.owned_mask.assign(graph.n(), 1);
    evaluator.owned_count = graph.n();
    evaluator.basis = cheb_basis(full_lap.matrix, model_cfg.cheb_order);
  }

  RunResult result;
  result.setup = setup;
  result.horizon = dataset.horizon;
  result.duplication = setup == Setup::Centralized ? 1.0 : duplication_factor(partition);
  result.param_bytes_per_model = pbytes;
  if (centralized_model) {
    result.holder_names = {"global"};
    result.holder_node_counts = {graph.n()};
  } else {
    for (const auto& h : holders) {
      result.holder_names.push_back(h.name);
      result.holder_node_counts.push_back(h.owned_count);
    }
  }

  ModelParams global = initial;  // traditional FL aggregate between rounds
  std::vector<double> train_losses;
  for (int epoch = 0; epoch < run_cfg.epochs; ++epoch) {
    // Node-feature exchange for this epoch's training data.
    if (setup == Setup::Centralized) {
      result.comm.record(epoch, "sensors", "center", CommCategory::NodeFeature,
                         accounting::feature_bytes_centralized(graph.n(), ts));
    } else {
      for (const auto& entry : partition.plan.entries) {
        result.comm.record(epoch, cloudlet_name(entry.src), cloudlet_name(entry.dst),
                           CommCategory::NodeFeature,
                           static_cast<uint64_t>(entry.nodes.size()) *
                               static_cast<uint64_t>(ts) * accounting::kBytesPerValue);
      }
    }

    // Gossip aggregates what arrived during the previous epoch before training.
    if (setup == Setup::Gossip) {
      for (auto& h : holders) {
        const int in_buffer = static_cast<int>(h.buffer.size());
        if (in_buffer == 1) {
          h.params.flat = h.buffer.front();
        } else if (in_buffer == 2) {
          h.params.flat = average_params({&h.buffer[0], &h.buffer[1]}, {0.5, 0.5});
        }
        if (in_buffer > 0) {
          result.flops.record(epoch, h.name, FlopCategory::Aggregation,
                              accounting::aggregation_event_flops(in_buffer, pcount));
          h.buffer.clear();
        }
      }
    }

    train_all(holders, dataset, run_cfg, epoch, train_losses);
    for (const auto& h : holders) {
      result.flops.record(
          epoch, h.name, FlopCategory::Training,
          accounting::training_flops(model_cfg, static_cast<int>(h.nodes.size()),
                                     samples_per_pass * run_cfg.local_epochs));
    }

    switch (setup) {
      case Setup::Centralized:
        break;
      case Setup::TraditionalFl: {
        std::vector<const Eigen::VectorXd*> models;
        std::vector<double> weights;
        for (const auto& h : holders) {
          result.comm.record(epoch, h.name, "server", CommCategory::ModelUp, pbytes);
          models.push_back(&h.params.flat);
          weights.push_back(static_cast<double>(h.owned_count) *
                            static_cast<double>(samples_per_pass));
        }
        global.flat = average_params(models, weights);
        result.flops.record(epoch, "server", FlopCategory::Aggregation,
                            accounting::aggregation_event_flops(k, pcount));
        for (auto& h : holders) {
          result.comm.record(epoch, "server", h.name, CommCategory::ModelDown, pbytes);
          h.params.flat = global.flat;
        }
        break;
      }
      case Setup::ServerfreeFl: {
        std::vector<std::vector<const Eigen::VectorXd*>> incoming(k);
        std::vector<Eigen::VectorXd> snapshot(k);
        for (int c = 0; c < k; ++c) snapshot[c] = holders[c].params.flat;
        for (const auto& [a, b] : partition.cloudlet_links) {
          result.comm.record(epoch, cloudlet_name(a), cloudlet_name(b), CommCategory::ModelUp,
                             pbytes);
          result.comm.record(epoch, cloudlet_name(b), cloudlet_name(a), CommCategory::ModelUp,
                             pbytes);
          incoming[b].push_back(&snapshot[a]);
          incoming[a].push_back(&snapshot[b]);
        }
        for (int c = 0; c < k; ++c) {
          std::vector<const Eigen::VectorXd*> models{&snapshot[c]};
          models.insert(models.end(), incoming[c].begin(), incoming[c].end());
          std::vector<double> weights(models.size(), 1.0);
          holders[c].params.flat = average_params(models, weights);
          result.flops.record(epoch, holders[c].name, FlopCategory::Aggregation,
                              accounting::aggregation_event_flops(
                                  static_cast<int>(models.size()), pcount));
        }
        break;
      }
      case Setup::Gossip: {
        Rng peer_rng(derive_seed(run_cfg.seeds.gossip, static_cast<uint64_t>(epoch)));
        for (int c = 0; c < k; ++c) {
          int peer = static_cast<int>(peer_rng.next_below(static_cast<uint64_t>(k - 1)));
          if (peer >= c) ++peer;  // uniform over the other cloudlets
          result.comm.record(epoch, holders[c].name, holders[peer].name, CommCategory::ModelUp,
                             pbytes);
          holders[peer].buffer.push_back(holders[c].params.flat);
          if (holders[peer].buffer.size() > 2) holders[peer].buffer.pop_front();
        }
        break;
      }
    }

    // Validation at the synchronized end of the epoch.
    std::vector<double> vals;
    if (setup == Setup::Centralized) {
      vals.push_back(validation_loss(holders[0], holders[0].params, dataset, run_cfg));
    } else if (setup == Setup::TraditionalFl) {
      vals.push_back(validation_loss(evaluator, global, dataset, run_cfg));
    } else {
      for (const auto& h : holders) {
        vals.push_back(validation_loss(evaluator, h.params, dataset, run_cfg));
      }
    }
    double weighted = 0.0;
    double node_total = 0.0;
    for (size_t i = 0; i < vals.size(); ++i) {
      weighted += vals[i] * result.holder_node_counts[i];
      node_total += result.holder_node_counts[i];
    }
    result.val_summary.push_back(weighted / node_total);
    result.val_loss.push_back(std::move(vals));
    if (centralized_model) {
      result.train_loss.push_back({train_losses.empty() ? 0.0 : train_losses[0]});
      if (setup == Setup::TraditionalFl) {
        // per-cloudlet train losses averaged by the FedAvg weights
        double acc = 0.0, wsum = 0.0;
        for (size_t h = 0; h < holders.size(); ++h) {
          double w = holders[h].owned_count;
          acc += train_losses[h] * w;
          wsum += w;
        }
        result.train_loss.back() = {acc / wsum};
      }
    } else {
      result.train_loss.push_back(train_losses);
    }
  }

  // Final test-set evaluation, de-normalized.
  if (setup == Setup::Centralized) {
    ErrorStats stats = test_stats(holders[0], holders[0].params, dataset, run_cfg);
    result.global_metrics = report_from_stats(stats, "global", dataset.horizon, graph.n(),
                                              run_cfg.wmape_denom);
    result.final_models.push_back(holders[0].params.flat);
  } else if (setup == Setup::TraditionalFl) {
    ErrorStats stats = test_stats(evaluator, global, dataset, run_cfg);
    result.global_metrics = report_from_stats(stats, "global", dataset.horizon, graph.n(),
                                              run_cfg.wmape_denom);
    result.final_models.push_back(global.flat);
  } else {
    std::vector<int> node_counts;
    for (const auto& h : holders) {
      ErrorStats stats = test_stats(h, h.params, dataset, run_cfg);
      result.cloudlet_metrics.push_back(report_from_stats(stats, h.name, dataset.horizon,
                                                          h.owned_count, run_cfg.wmape_denom));
      node_counts.push_back(h.owned_count);
      result.final_models.push_back(h.params.flat);
    }
    result.global_metrics =
        aggregate_weighted(result.cloudlet_metrics, node_counts, run_cfg.wmape_denom);
  }
  return result;
}

void write_val_loss_csv(const std::string& path, const RunResult& result) {
  std::vector<std::string> lines;
  lines.push_back("epoch,holder,loss");
  for (size_t e = 0; e < result.val_loss.size(); ++e) {
    for (size_t h = 0; h < result.val_loss[e].size(); ++h) {
      lines.push_back(std::to_string(e) + "," + result.holder_names[h] + "," +
                      format_double(result.val_loss[e][h]));
    }
  }
  write_lines(path, lines);
}

}  // namespace stgsim
