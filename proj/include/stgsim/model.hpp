#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace stgsim {

// Two ST-blocks by default: temporal conv (GLU) -> Chebyshev graph conv
// (ReLU) -> temporal conv (GLU), dropout after each block, then an output
// head that collapses the remaining time length with one more GLU conv and
// maps channels to a single speed per node.
struct ModelConfig {
  int st_blocks = 2;
  int cheb_order = 3;       // K: Chebyshev polynomial count
  int temporal_kernel = 3;  // Kt
  std::array<int, 3> channels = {64, 16, 64};
  int input_window = 12;
  double dropout_rate = 0.5;
  int input_channels = 1;

  // Each temporal conv shrinks time by Kt-1; two per block.
  int collapsed_window() const {
    return input_window - st_blocks * 2 * (temporal_kernel - 1);
  }
  void validate() const;
};

struct TensorSpec {
  std::string name;
  std::vector<int> dims;
  int64_t offset = 0;
  int64_t size = 0;
};

// All learnable scalars live in one flat vector; specs give each named
// tensor its slice. Flattening is therefore the identity and aggregation
// can operate on whole vectors.
struct ModelParams {
  ModelConfig config;
  std::vector<TensorSpec> specs;
  Eigen::VectorXd flat;

  int64_t param_count() const { return flat.size(); }
};

int64_t param_count(const ModelConfig& config);
uint64_t param_bytes(int64_t count);  // 4 bytes per parameter

// Glorot-uniform weights, zero biases, deterministic per seed.
ModelParams init_params(const ModelConfig& config, uint64_t seed);

enum class RunMode { Train, Eval };

// Activations are time-major slices; slice t is a (batch*nodes) x channels
// matrix with row b*nodes + v.
using Slices = std::vector<Eigen::MatrixXd>;

struct TemporalTape {
  Slices input;
  Slices value;     // GLU linear half
  Slices gate_sig;  // sigmoid of the gate half
};

struct ChebTape {
  std::vector<Slices> propagated;  // [k][t] = T_k applied to the input slice
  Slices output;                   // post-ReLU
};

struct BlockTape {
  TemporalTape t1;
  ChebTape spatial;
  TemporalTape t2;
  Slices dropout_mask;
};

struct ForwardTape {
  int batch = 0;
  int nodes = 0;
  std::vector<BlockTape> blocks;
  TemporalTape collapse;
  Eigen::MatrixXd head_input;  // (batch*nodes) x channels fed to the linear map
};

// basis: Chebyshev matrices of the (sub)graph the batch lives on. Returns
// batch x nodes predictions. Train mode applies dropout seeded by
// dropout_seed; eval mode ignores the seed. tape may be null when no
// backward pass will follow.
Eigen::MatrixXd forward(const ModelParams& params, const std::vector<Eigen::MatrixXd>& basis,
                        const Slices& input, int batch, int nodes, RunMode mode,
                        uint64_t dropout_seed, ForwardTape* tape);

// Masked mean absolute error; mask entries are 0/1 weights. Fills dpred with
// the loss gradient when non-null (subgradient 0 where pred == target).
double mae_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target,
                const Eigen::MatrixXd& mask, Eigen::MatrixXd* dpred);

// Gradient of the loss w.r.t. every parameter, in flat layout.
Eigen::VectorXd backward(const ModelParams& params, const std::vector<Eigen::MatrixXd>& basis,
                         const ForwardTape& tape, const Eigen::MatrixXd& dpred);

struct OptimizerConfig {
  double base_lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-5;  // decoupled (applied to weights directly)
  int step_size = 5;           // StepLR epochs per decay
  double gamma = 0.7;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  int64_t step = 0;
};

double scheduled_lr(const OptimizerConfig& config, int epoch);
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state,
               double lr, const OptimizerConfig& config);

// Convex combination of flat parameter vectors; weights are normalized
// internally and must not be all zero.
Eigen::VectorXd average_params(const std::vector<const Eigen::VectorXd*>& models,
                               const std::vector<double>& weights);

// Little-endian float32 payload with a 16-byte header: magic "STGM",
// uint32 version, uint64 parameter count.
void save_checkpoint(const std::string& path, const Eigen::VectorXd& flat);
Eigen::VectorXd load_checkpoint(const std::string& path);

}  // namespace stgsim
