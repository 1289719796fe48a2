#include "stgsim/experiment.hpp"

#include <json.hpp>

#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "stgsim/csv.hpp"

namespace stgsim {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw std::runtime_error("config error at " + path + ": " + msg);
}

void check_object(const json& node, const std::string& path,
                  const std::set<std::string>& allowed) {
  if (!node.is_object()) fail(path, "expected an object");
  for (const auto& [key, value] : node.items()) {
    if (!allowed.count(key)) fail(path + "." + key, "unknown key");
  }
}

double num_or(const json& obj, const std::string& path, const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  return v.get<double>();
}

int int_or(const json& obj, const std::string& path, const std::string& key, int fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
  return v.get<int>();
}

bool bool_or(const json& obj, const std::string& path, const std::string& key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) fail(path + "." + key, "expected true or false");
  return v.get<bool>();
}

std::string str_req(const json& obj, const std::string& path, const std::string& key) {
  if (!obj.contains(key)) fail(path + "." + key, "missing");
  const json& v = obj.at(key);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

uint64_t seed_req(const json& obj, const std::string& path, const std::string& key) {
  if (!obj.contains(key)) fail(path + "." + key, "missing (all seeds are mandatory)");
  const json& v = obj.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && v.get<int64_t>() < 0 &&
                                 !v.is_number_unsigned())) {
    fail(path + "." + key, "expected a non-negative integer seed");
  }
  return v.get<uint64_t>();
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("config is not valid JSON: ") + e.what());
  }
  check_object(root, "config", {"dataset", "graph", "partition", "model", "training", "horizons"});

  ExperimentConfig cfg;

  if (!root.contains("dataset")) fail("config.dataset", "missing");
  const json& dataset = root.at("dataset");
  check_object(dataset, "dataset",
               {"synth", "speeds_csv", "sensors_csv", "edges_csv", "interval_minutes"});
  if (dataset.contains("synth")) {
    if (dataset.contains("speeds_csv") || dataset.contains("sensors_csv")) {
      fail("dataset", "give either synth parameters or file paths, not both");
    }
    cfg.use_synth = true;
    const json& synth = dataset.at("synth");
    check_object(synth, "dataset.synth",
                 {"sensors", "timesteps", "seed", "box_km", "base_speed", "daily_amplitude",
                  "spatial_amplitude", "noise_amplitude"});
    cfg.synth.sensors = int_or(synth, "dataset.synth", "sensors", cfg.synth.sensors);
    cfg.synth.timesteps = int_or(synth, "dataset.synth", "timesteps", cfg.synth.timesteps);
    cfg.synth.seed = seed_req(synth, "dataset.synth", "seed");
    cfg.synth.box_km = num_or(synth, "dataset.synth", "box_km", cfg.synth.box_km);
    cfg.synth.base_speed = num_or(synth, "dataset.synth", "base_speed", cfg.synth.base_speed);
    cfg.synth.daily_amplitude =
        num_or(synth, "dataset.synth", "daily_amplitude", cfg.synth.daily_amplitude);
    cfg.synth.spatial_amplitude =
        num_or(synth, "dataset.synth", "spatial_amplitude", cfg.synth.spatial_amplitude);
    cfg.synth.noise_amplitude =
        num_or(synth, "dataset.synth", "noise_amplitude", cfg.synth.noise_amplitude);
  } else {
    cfg.use_synth = false;
    cfg.speeds_csv = str_req(dataset, "dataset", "speeds_csv");
    cfg.sensors_csv = str_req(dataset, "dataset", "sensors_csv");
    if (dataset.contains("edges_csv") && !dataset.at("edges_csv").is_null()) {
      cfg.edges_csv = str_req(dataset, "dataset", "edges_csv");
    }
    cfg.interval_minutes = int_or(dataset, "dataset", "interval_minutes", 5);
  }

  if (root.contains("graph")) {
    const json& graph = root.at("graph");
    check_object(graph, "graph", {"sigma2", "epsilon"});
    if (graph.contains("sigma2") && !graph.at("sigma2").is_null()) {
      cfg.sigma2 = num_or(graph, "graph", "sigma2", 0.0);
      if (cfg.sigma2 <= 0.0) fail("graph.sigma2", "must be positive (or null for the default)");
    }
    cfg.epsilon = num_or(graph, "graph", "epsilon", cfg.epsilon);
  }

  if (!root.contains("partition")) fail("config.partition", "missing");
  const json& partition = root.at("partition");
  check_object(partition, "partition", {"cloudlets", "comm_range_km", "hops_override"});
  if (!partition.contains("cloudlets")) fail("partition.cloudlets", "missing");
  const json& cloudlets = partition.at("cloudlets");
  if (!cloudlets.is_array() || cloudlets.empty()) {
    fail("partition.cloudlets", "expected a non-empty array of [x, y] pairs");
  }
  for (size_t i = 0; i < cloudlets.size(); ++i) {
    const json& c = cloudlets[i];
    if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number()) {
      fail("partition.cloudlets[" + std::to_string(i) + "]", "expected [x, y]");
    }
    cfg.cloudlets.push_back({c[0].get<double>(), c[1].get<double>()});
  }
  cfg.comm_range_km = num_or(partition, "partition", "comm_range_km", cfg.comm_range_km);
  if (partition.contains("hops_override") && !partition.at("hops_override").is_null()) {
    cfg.hops_override = int_or(partition, "partition", "hops_override", 0);
  }

  if (root.contains("model")) {
    const json& model = root.at("model");
    check_object(model, "model",
                 {"st_blocks", "cheb_order", "temporal_kernel", "channels", "input_window",
                  "dropout"});
    cfg.model.st_blocks = int_or(model, "model", "st_blocks", cfg.model.st_blocks);
    cfg.model.cheb_order = int_or(model, "model", "cheb_order", cfg.model.cheb_order);
    cfg.model.temporal_kernel =
        int_or(model, "model", "temporal_kernel", cfg.model.temporal_kernel);
    if (model.contains("channels")) {
      const json& ch = model.at("channels");
      if (!ch.is_array() || ch.size() != 3) fail("model.channels", "expected [c1, c2, c3]");
      for (int i = 0; i < 3; ++i) {
        if (!ch[i].is_number_integer()) fail("model.channels", "expected integers");
        cfg.model.channels[i] = ch[i].get<int>();
      }
    }
    cfg.model.input_window = int_or(model, "model", "input_window", cfg.model.input_window);
    cfg.model.dropout_rate = num_or(model, "model", "dropout", cfg.model.dropout_rate);
  }

  if (!root.contains("training")) fail("config.training", "missing");
  const json& training = root.at("training");
  check_object(training, "training",
               {"setup", "epochs", "batch_size", "local_epochs", "lr", "lr_step_size", "lr_gamma",
                "weight_decay", "mask_zeros", "wmape_denominator", "threads", "seeds"});
  cfg.run.setup = setup_from_string(str_req(training, "training", "setup"));
  cfg.run.epochs = int_or(training, "training", "epochs", cfg.run.epochs);
  cfg.run.batch_size = int_or(training, "training", "batch_size", cfg.run.batch_size);
  cfg.run.local_epochs = int_or(training, "training", "local_epochs", cfg.run.local_epochs);
  cfg.run.optimizer.base_lr = num_or(training, "training", "lr", cfg.run.optimizer.base_lr);
  cfg.run.optimizer.step_size =
      int_or(training, "training", "lr_step_size", cfg.run.optimizer.step_size);
  cfg.run.optimizer.gamma = num_or(training, "training", "lr_gamma", cfg.run.optimizer.gamma);
  cfg.run.optimizer.weight_decay =
      num_or(training, "training", "weight_decay", cfg.run.optimizer.weight_decay);
  cfg.run.mask_zeros = bool_or(training, "training", "mask_zeros", cfg.run.mask_zeros);
  if (training.contains("wmape_denominator")) {
    std::string d = str_req(training, "training", "wmape_denominator");
    if (d == "predicted") {
      cfg.run.wmape_denom = WmapeDenominator::Predicted;
    } else if (d == "truth") {
      cfg.run.wmape_denom = WmapeDenominator::Truth;
    } else {
      fail("training.wmape_denominator", "expected \"predicted\" or \"truth\"");
    }
  }
  cfg.run.threads = int_or(training, "training", "threads", cfg.run.threads);
  if (!training.contains("seeds")) fail("training.seeds", "missing (all seeds are mandatory)");
  const json& seeds = training.at("seeds");
  check_object(seeds, "training.seeds", {"init", "shuffle", "gossip", "dropout"});
  cfg.run.seeds.init = seed_req(seeds, "training.seeds", "init");
  cfg.run.seeds.shuffle = seed_req(seeds, "training.seeds", "shuffle");
  cfg.run.seeds.gossip = seed_req(seeds, "training.seeds", "gossip");
  cfg.run.seeds.dropout = seed_req(seeds, "training.seeds", "dropout");

  if (root.contains("horizons")) {
    const json& horizons = root.at("horizons");
    if (!horizons.is_array() || horizons.empty()) {
      fail("horizons", "expected a non-empty array of step counts");
    }
    cfg.horizons.clear();
    for (const auto& h : horizons) {
      if (!h.is_number_integer() || h.get<int>() < 1) fail("horizons", "steps must be >= 1");
      cfg.horizons.push_back(h.get<int>());
    }
  }

  cfg.model.validate();
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text);
}

std::string resolved_config_json(const ExperimentConfig& cfg) {
  json root;
  if (cfg.use_synth) {
    root["dataset"]["synth"] = {{"sensors", cfg.synth.sensors},
                                {"timesteps", cfg.synth.timesteps},
                                {"seed", cfg.synth.seed},
                                {"box_km", cfg.synth.box_km},
                                {"base_speed", cfg.synth.base_speed},
                                {"daily_amplitude", cfg.synth.daily_amplitude},
                                {"spatial_amplitude", cfg.synth.spatial_amplitude},
                                {"noise_amplitude", cfg.synth.noise_amplitude}};
  } else {
    root["dataset"]["speeds_csv"] = cfg.speeds_csv;
    root["dataset"]["sensors_csv"] = cfg.sensors_csv;
    root["dataset"]["edges_csv"] = cfg.edges_csv ? json(*cfg.edges_csv) : json(nullptr);
    root["dataset"]["interval_minutes"] = cfg.interval_minutes;
  }
  root["graph"]["sigma2"] = cfg.sigma2 > 0.0 ? json(cfg.sigma2) : json(nullptr);
  root["graph"]["epsilon"] = cfg.epsilon;
  json cl = json::array();
  for (const auto& c : cfg.cloudlets) cl.push_back({c[0], c[1]});
  root["partition"]["cloudlets"] = cl;
  root["partition"]["comm_range_km"] = cfg.comm_range_km;
  root["partition"]["hops_override"] = cfg.hops_override ? json(*cfg.hops_override) : json(nullptr);
  root["model"] = {{"st_blocks", cfg.model.st_blocks},
                   {"cheb_order", cfg.model.cheb_order},
                   {"temporal_kernel", cfg.model.temporal_kernel},
                   {"channels", cfg.model.channels},
                   {"input_window", cfg.model.input_window},
                   {"dropout", cfg.model.dropout_rate}};
  root["training"] = {{"setup", to_string(cfg.run.setup)},
                      {"epochs", cfg.run.epochs},
                      {"batch_size", cfg.run.batch_size},
                      {"local_epochs", cfg.run.local_epochs},
                      {"lr", cfg.run.optimizer.base_lr},
                      {"lr_step_size", cfg.run.optimizer.step_size},
                      {"lr_gamma", cfg.run.optimizer.gamma},
                      {"weight_decay", cfg.run.optimizer.weight_decay},
                      {"mask_zeros", cfg.run.mask_zeros},
                      {"wmape_denominator",
                       cfg.run.wmape_denom == WmapeDenominator::Predicted ? "predicted" : "truth"},
                      {"threads", cfg.run.threads},
                      {"seeds",
                       {{"init", cfg.run.seeds.init},
                        {"shuffle", cfg.run.seeds.shuffle},
                        {"gossip", cfg.run.seeds.gossip},
                        {"dropout", cfg.run.seeds.dropout}}}};
  root["horizons"] = cfg.horizons;
  return root.dump(2);
}

uint64_t fnv1a64(const std::string& text) {
  uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string run_directory_name(const ExperimentConfig& cfg) {
  uint64_t h = fnv1a64(resolved_config_json(cfg));
  char buf[17];
  snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string("run-") + buf;
}

PreparedExperiment prepare(const ExperimentConfig& cfg) {
  PreparedExperiment prep;
  if (cfg.use_synth) {
    SynthParams synth = cfg.synth;
    synth.sigma2 = cfg.sigma2;
    synth.epsilon = cfg.epsilon;
    SynthOutput out = synth_generate(synth);
    prep.graph = std::move(out.graph);
    prep.series = std::move(out.series);
  } else {
    prep.graph = load_sensor_graph(cfg.sensors_csv, cfg.edges_csv, cfg.sigma2, cfg.epsilon);
    prep.series = load_series(cfg.speeds_csv);
    prep.series.interval_minutes = cfg.interval_minutes;
    if (prep.series.sensor_ids != prep.graph.sensor_ids) {
      throw std::runtime_error("sensor ids in " + cfg.speeds_csv + " do not match " +
                               cfg.sensors_csv + " (same ids, same order required)");
    }
  }
  prep.lap = scaled_laplacian(prep.graph.weights);
  prep.hops = receptive_hops(cfg.model, cfg.hops_override);
  Eigen::MatrixX2d coords(cfg.cloudlets.size(), 2);
  for (size_t i = 0; i < cfg.cloudlets.size(); ++i) {
    coords(static_cast<int>(i), 0) = cfg.cloudlets[i][0];
    coords(static_cast<int>(i), 1) = cfg.cloudlets[i][1];
  }
  prep.partition = build_partition(prep.graph, coords, cfg.comm_range_km, prep.hops);
  return prep;
}

std::vector<HorizonOutcome> execute(const ExperimentConfig& cfg, const PreparedExperiment& prep) {
  std::vector<HorizonOutcome> outcomes;
  for (int horizon : cfg.horizons) {
    HorizonOutcome outcome;
    outcome.horizon = horizon;
    WindowedDataset ds = make_windows(prep.series, horizon);
    outcome.train_timesteps = ds.train_timesteps;
    outcome.result = run_experiment(prep.graph, prep.lap, ds, prep.partition, cfg.model, cfg.run);
    outcomes.push_back(std::move(outcome));
  }
  return outcomes;
}

void write_metrics_csv(const std::string& path, Setup setup,
                       const std::vector<HorizonOutcome>& outcomes) {
  std::vector<std::string> lines;
  lines.push_back("setup,horizon,scope,MAE,RMSE,WMAPE");
  auto row = [&](int horizon, const MetricReport& r) {
    lines.push_back(std::string(to_string(setup)) + "," + std::to_string(horizon) + "," + r.scope +
                    "," + format_double(r.mae) + "," + format_double(r.rmse) + "," +
                    format_double(r.wmape));
  };
  for (const auto& outcome : outcomes) {
    row(outcome.horizon, outcome.result.global_metrics);
    for (const auto& r : outcome.result.cloudlet_metrics) row(outcome.horizon, r);
  }
  write_lines(path, lines);
}

namespace {
std::string horizon_dir_name(int horizon) {
  char buf[16];
  snprintf(buf, sizeof(buf), "horizon_%02d", horizon);
  return buf;
}

json report_json(const MetricReport& r) {
  return json{{"scope", r.scope},           {"horizon", r.horizon},
              {"mae", r.mae},               {"rmse", r.rmse},
              {"wmape", r.wmape},           {"samples", r.sample_count},
              {"nodes", r.node_count}};
}
}  // namespace

void write_run_outputs(const std::string& run_dir, const ExperimentConfig& cfg,
                       const PreparedExperiment& prep, const std::vector<HorizonOutcome>& outcomes) {
  namespace fs = std::filesystem;
  fs::create_directories(run_dir);
  {
    std::ofstream out(run_dir + "/config.json");
    out << resolved_config_json(cfg) << '\n';
  }
  write_metrics_csv(run_dir + "/metrics.csv", cfg.run.setup, outcomes);
  write_sensors_csv(run_dir + "/sensors.csv", prep.graph);
  write_partition_csv(run_dir + "/partition.csv", prep.graph, prep.partition);
  write_plan_csv(run_dir + "/plan.csv", prep.graph, prep.partition);

  json summary;
  summary["config"] = json::parse(resolved_config_json(cfg));
  {
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    summary["generated_at"] = buf;
  }
  summary["receptive_hops"] = prep.hops;
  summary["horizons"] = json::array();

  for (const auto& outcome : outcomes) {
    const RunResult& r = outcome.result;
    std::string hdir = run_dir + "/" + horizon_dir_name(outcome.horizon);
    fs::create_directories(hdir);
    write_val_loss_csv(hdir + "/val_loss.csv", r);
    write_ledger_csv(hdir + "/ledger.csv", r.comm, r.flops);
    for (size_t h = 0; h < r.final_models.size(); ++h) {
      save_checkpoint(hdir + "/model_" + r.holder_names[h] + ".ckpt", r.final_models[h]);
    }

    json entry;
    entry["horizon"] = outcome.horizon;
    entry["train_timesteps"] = outcome.train_timesteps;
    entry["duplication_factor"] = r.duplication;
    entry["param_bytes_per_model"] = r.param_bytes_per_model;
    entry["epochs"] = cfg.run.epochs;
    entry["final_val_summary"] = r.val_summary.back();
    entry["comm_bytes_total"] = {{"model_up", r.comm.total(CommCategory::ModelUp)},
                                 {"model_down", r.comm.total(CommCategory::ModelDown)},
                                 {"node_feature", r.comm.total(CommCategory::NodeFeature)}};
    entry["flops_total"] = {{"training", r.flops.total(FlopCategory::Training)},
                            {"aggregation", r.flops.total(FlopCategory::Aggregation)}};
    entry["metrics"] = {{"global", report_json(r.global_metrics)}};
    json per_cloudlet = json::array();
    for (const auto& cr : r.cloudlet_metrics) per_cloudlet.push_back(report_json(cr));
    entry["metrics"]["cloudlets"] = per_cloudlet;
    summary["horizons"].push_back(std::move(entry));
  }
  std::ofstream out(run_dir + "/run.json");
  out << summary.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + run_dir + "/run.json");
}

}  // namespace stgsim
