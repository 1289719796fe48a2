#include "stgsim/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "stgsim/rng.hpp"

namespace stgsim {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using WeightMap = Eigen::Map<const RowMajor>;
using WeightGradMap = Eigen::Map<RowMajor>;

std::vector<TensorSpec> build_specs(const ModelConfig& cfg) {
  std::vector<TensorSpec> specs;
  int64_t offset = 0;
  auto add = [&](const std::string& name, std::vector<int> dims) {
    TensorSpec spec;
    spec.name = name;
    spec.dims = std::move(dims);
    spec.offset = offset;
    spec.size = 1;
    for (int d : spec.dims) spec.size *= d;
    offset += spec.size;
    specs.push_back(std::move(spec));
  };
  const int c1 = cfg.channels[0], c2 = cfg.channels[1], c3 = cfg.channels[2];
  for (int i = 0; i < cfg.st_blocks; ++i) {
    int cin = i == 0 ? cfg.input_channels : c3;
    std::string prefix = "block" + std::to_string(i);
    add(prefix + ".t1.w", {cfg.temporal_kernel, cin, 2 * c1});
    add(prefix + ".t1.b", {2 * c1});
    add(prefix + ".sp.w", {cfg.cheb_order, c1, c2});
    add(prefix + ".sp.b", {c2});
    add(prefix + ".t2.w", {cfg.temporal_kernel, c2, 2 * c3});
    add(prefix + ".t2.b", {2 * c3});
  }
  add("head.collapse.w", {cfg.collapsed_window(), c3, 2 * c3});
  add("head.collapse.b", {2 * c3});
  add("head.linear.w", {c3});
  add("head.linear.b", {1});
  return specs;
}

// y[block b] = basis * x[block b]; the basis acts on the node index, which is
// the faster-varying row dimension (row = b*nodes + v).
void apply_basis(const Eigen::MatrixXd& basis_k, const Eigen::MatrixXd& x, int batch, int nodes,
                 Eigen::MatrixXd& y) {
  const int cols = static_cast<int>(x.cols());
  for (int b = 0; b < batch; ++b) {
    y.block(b * nodes, 0, nodes, cols).noalias() = basis_k * x.block(b * nodes, 0, nodes, cols);
  }
}

struct LayerViews {
  const ModelParams* params;

  WeightMap weight_slice(const TensorSpec& spec, int tap) const {
    int rows = spec.dims[1], cols = spec.dims[2];
    return WeightMap(params->flat.data() + spec.offset + static_cast<int64_t>(tap) * rows * cols,
                     rows, cols);
  }
  Eigen::Map<const Eigen::VectorXd> vector(const TensorSpec& spec) const {
    return Eigen::Map<const Eigen::VectorXd>(params->flat.data() + spec.offset, spec.size);
  }
};

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& x) {
  return (1.0 / (1.0 + (-x.array()).exp())).matrix();
}

// GLU temporal convolution: taps*input channels -> 2*C, output = value ⊙ σ(gate).
Slices temporal_glu(const LayerViews& views, const TensorSpec& w_spec, const TensorSpec& b_spec,
                    const Slices& input, TemporalTape* tape) {
  const int taps = w_spec.dims[0];
  const int out_channels = w_spec.dims[2] / 2;
  const int t_out = static_cast<int>(input.size()) - taps + 1;
  if (t_out < 1) throw std::runtime_error("temporal conv input shorter than kernel");
  auto bias = views.vector(b_spec);

  Slices out(t_out);
  if (tape) {
    tape->input = input;
    tape->value.resize(t_out);
    tape->gate_sig.resize(t_out);
  }
  Eigen::MatrixXd pre;
  for (int t = 0; t < t_out; ++t) {
    pre = bias.transpose().replicate(input[t].rows(), 1);
    for (int tap = 0; tap < taps; ++tap) {
      pre.noalias() += input[t + tap] * views.weight_slice(w_spec, tap);
    }
    Eigen::MatrixXd value = pre.leftCols(out_channels);
    Eigen::MatrixXd gate = sigmoid(pre.rightCols(out_channels));
    out[t] = value.cwiseProduct(gate);
    if (tape) {
      tape->value[t] = std::move(value);
      tape->gate_sig[t] = std::move(gate);
    }
  }
  return out;
}

void temporal_glu_backward(const LayerViews& views, const TensorSpec& w_spec,
                           const TensorSpec& b_spec, const TemporalTape& tape, const Slices& dout,
                           Eigen::VectorXd& grad, Slices* dinput) {
  const int taps = w_spec.dims[0];
  const int in_channels = w_spec.dims[1];
  const int out_channels = w_spec.dims[2] / 2;
  const int t_out = static_cast<int>(dout.size());

  if (dinput) {
    dinput->assign(tape.input.size(),
                   Eigen::MatrixXd::Zero(tape.input[0].rows(), in_channels));
  }
  Eigen::Map<Eigen::VectorXd> gb(grad.data() + b_spec.offset, b_spec.size);
  Eigen::MatrixXd dpre(tape.input[0].rows(), 2 * out_channels);
  for (int t = 0; t < t_out; ++t) {
    const auto& sig = tape.gate_sig[t];
    dpre.leftCols(out_channels) = dout[t].cwiseProduct(sig);
    dpre.rightCols(out_channels) =
        (dout[t].array() * tape.value[t].array() * sig.array() * (1.0 - sig.array())).matrix();
    gb += dpre.colwise().sum().transpose();
    for (int tap = 0; tap < taps; ++tap) {
      WeightGradMap gw(grad.data() + w_spec.offset + static_cast<int64_t>(tap) * in_channels * 2 *
                                         out_channels,
                       in_channels, 2 * out_channels);
      gw.noalias() += tape.input[t + tap].transpose() * dpre;
      if (dinput) {
        (*dinput)[t + tap].noalias() += dpre * views.weight_slice(w_spec, tap).transpose();
      }
    }
  }
}

// Chebyshev spatial convolution with ReLU: out_t = relu(Σ_k T_k X_t Θ_k + b).
Slices cheb_relu(const LayerViews& views, const TensorSpec& w_spec, const TensorSpec& b_spec,
                 const std::vector<Eigen::MatrixXd>& basis, const Slices& input, int batch,
                 int nodes, ChebTape* tape) {
  const int order = w_spec.dims[0];
  const int out_channels = w_spec.dims[2];
  const int t_len = static_cast<int>(input.size());
  auto bias = views.vector(b_spec);

  Slices out(t_len);
  if (tape) {
    tape->propagated.assign(order, Slices(t_len));
    tape->output.resize(t_len);
  }
  Eigen::MatrixXd propagated(input[0].rows(), input[0].cols());
  for (int t = 0; t < t_len; ++t) {
    Eigen::MatrixXd z = bias.transpose().replicate(input[t].rows(), 1);
    for (int k = 0; k < order; ++k) {
      if (k == 0) {
        propagated = input[t];  // T_0 is the identity
      } else {
        apply_basis(basis[k], input[t], batch, nodes, propagated);
      }
      z.noalias() += propagated * views.weight_slice(w_spec, k);
      if (tape) tape->propagated[k][t] = propagated;
    }
    out[t] = z.cwiseMax(0.0);
    if (tape) tape->output[t] = out[t];
  }
  return out;
}

void cheb_relu_backward(const LayerViews& views, const TensorSpec& w_spec,
                        const TensorSpec& b_spec, const std::vector<Eigen::MatrixXd>& basis,
                        const ChebTape& tape, const Slices& dout, int batch, int nodes,
                        Eigen::VectorXd& grad, Slices* dinput) {
  const int order = w_spec.dims[0];
  const int in_channels = w_spec.dims[1];
  const int out_channels = w_spec.dims[2];
  const int t_len = static_cast<int>(dout.size());

  if (dinput) {
    dinput->assign(t_len, Eigen::MatrixXd::Zero(dout[0].rows(), in_channels));
  }
  Eigen::Map<Eigen::VectorXd> gb(grad.data() + b_spec.offset, b_spec.size);
  Eigen::MatrixXd dz, back, spread;
  for (int t = 0; t < t_len; ++t) {
    dz = (dout[t].array() * (tape.output[t].array() > 0.0).cast<double>()).matrix();
    gb += dz.colwise().sum().transpose();
    for (int k = 0; k < order; ++k) {
      WeightGradMap gw(grad.data() + w_spec.offset + static_cast<int64_t>(k) * in_channels *
                                         out_channels,
                       in_channels, out_channels);
      gw.noalias() += tape.propagated[k][t].transpose() * dz;
      if (dinput) {
        back.noalias() = dz * views.weight_slice(w_spec, k).transpose();
        if (k == 0) {
          (*dinput)[t] += back;
        } else {
          // basis matrices are symmetric polynomials of the scaled Laplacian
          spread.resizeLike(back);
          apply_basis(basis[k], back, batch, nodes, spread);
          (*dinput)[t] += spread;
        }
      }
    }
  }
}

void dropout_train(Slices& x, double rate, Rng& rng, Slices* mask_store) {
  const double keep = 1.0 - rate;
  const double scale = 1.0 / keep;
  if (mask_store) mask_store->resize(x.size());
  for (size_t t = 0; t < x.size(); ++t) {
    Eigen::MatrixXd mask(x[t].rows(), x[t].cols());
    double* m = mask.data();
    for (int64_t i = 0; i < mask.size(); ++i) {
      m[i] = rng.next_double() < keep ? scale : 0.0;
    }
    x[t] = x[t].cwiseProduct(mask);
    if (mask_store) (*mask_store)[t] = std::move(mask);
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (st_blocks < 1) throw std::runtime_error("st_blocks must be >= 1");
  if (cheb_order < 1) throw std::runtime_error("cheb_order must be >= 1");
  if (temporal_kernel < 1) throw std::runtime_error("temporal_kernel must be >= 1");
  for (int c : channels) {
    if (c < 1) throw std::runtime_error("channel widths must be >= 1");
  }
  if (input_channels < 1) throw std::runtime_error("input_channels must be >= 1");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw std::runtime_error("dropout_rate must lie in [0, 1)");
  }
  if (collapsed_window() < 1) {
    throw std::runtime_error("input_window too short: " + std::to_string(st_blocks) +
                             " blocks consume " + std::to_string(st_blocks * 2 * (temporal_kernel - 1)) +
                             " steps, leaving none");
  }
}

int64_t param_count(const ModelConfig& config) {
  config.validate();
  int64_t total = 0;
  for (const auto& spec : build_specs(config)) total += spec.size;
  return total;
}

uint64_t param_bytes(int64_t count) { return static_cast<uint64_t>(count) * 4u; }

ModelParams init_params(const ModelConfig& config, uint64_t seed) {
  config.validate();
  ModelParams params;
  params.config = config;
  params.specs = build_specs(config);
  int64_t total = 0;
  for (const auto& spec : params.specs) total += spec.size;
  params.flat.resize(total);

  Rng rng(seed);
  for (const auto& spec : params.specs) {
    double* dst = params.flat.data() + spec.offset;
    if (spec.name.ends_with(".b")) {
      for (int64_t i = 0; i < spec.size; ++i) dst[i] = 0.0;
      continue;
    }
    int64_t fan_in, fan_out;
    if (spec.dims.size() == 3) {
      fan_in = static_cast<int64_t>(spec.dims[0]) * spec.dims[1];
      fan_out = static_cast<int64_t>(spec.dims[0]) * spec.dims[2];
    } else {
      fan_in = spec.size;
      fan_out = 1;
    }
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (int64_t i = 0; i < spec.size; ++i) {
      dst[i] = (2.0 * rng.next_double() - 1.0) * limit;
    }
  }
  return params;
}

Eigen::MatrixXd forward(const ModelParams& params, const std::vector<Eigen::MatrixXd>& basis,
                        const Slices& input, int batch, int nodes, RunMode mode,
                        uint64_t dropout_seed, ForwardTape* tape) {
  const ModelConfig& cfg = params.config;
  if (static_cast<int>(input.size()) != cfg.input_window) {
    throw std::runtime_error("input window is " + std::to_string(input.size()) + ", model expects " +
                             std::to_string(cfg.input_window));
  }
  if (static_cast<int>(basis.size()) != cfg.cheb_order) {
    throw std::runtime_error("basis has " + std::to_string(basis.size()) + " matrices, model expects " +
                             std::to_string(cfg.cheb_order));
  }
  for (const auto& slice : input) {
    if (slice.rows() != static_cast<int64_t>(batch) * nodes || slice.cols() != cfg.input_channels) {
      throw std::runtime_error("input slice must be (batch*nodes) x input_channels");
    }
  }
  if (basis[0].rows() != nodes || basis[0].cols() != nodes) {
    throw std::runtime_error("basis node count does not match the batch");
  }

  LayerViews views{&params};
  Rng drop_rng(dropout_seed);
  const bool training = mode == RunMode::Train && cfg.dropout_rate > 0.0;
  if (tape) {
    tape->batch = batch;
    tape->nodes = nodes;
    tape->blocks.assign(cfg.st_blocks, BlockTape{});
  }

  Slices cur = input;
  for (int i = 0; i < cfg.st_blocks; ++i) {
    const TensorSpec& t1w = params.specs[6 * i + 0];
    const TensorSpec& t1b = params.specs[6 * i + 1];
    const TensorSpec& spw = params.specs[6 * i + 2];
    const TensorSpec& spb = params.specs[6 * i + 3];
    const TensorSpec& t2w = params.specs[6 * i + 4];
    const TensorSpec& t2b = params.specs[6 * i + 5];
    BlockTape* bt = tape ? &tape->blocks[i] : nullptr;
    cur = temporal_glu(views, t1w, t1b, cur, bt ? &bt->t1 : nullptr);
    cur = cheb_relu(views, spw, spb, basis, cur, batch, nodes, bt ? &bt->spatial : nullptr);
    cur = temporal_glu(views, t2w, t2b, cur, bt ? &bt->t2 : nullptr);
    if (training) {
      dropout_train(cur, cfg.dropout_rate, drop_rng, bt ? &bt->dropout_mask : nullptr);
    }
  }

  const TensorSpec& cw = params.specs[6 * cfg.st_blocks + 0];
  const TensorSpec& cb = params.specs[6 * cfg.st_blocks + 1];
  const TensorSpec& lw = params.specs[6 * cfg.st_blocks + 2];
  const TensorSpec& lb = params.specs[6 * cfg.st_blocks + 3];
  Slices collapsed = temporal_glu(views, cw, cb, cur, tape ? &tape->collapse : nullptr);
  if (collapsed.size() != 1) throw std::runtime_error("head did not collapse time to length 1");
  if (tape) tape->head_input = collapsed[0];

  Eigen::VectorXd y = collapsed[0] * views.vector(lw) +
                      Eigen::VectorXd::Constant(collapsed[0].rows(), params.flat(lb.offset));
  Eigen::MatrixXd pred(batch, nodes);
  for (int b = 0; b < batch; ++b) {
    pred.row(b) = y.segment(static_cast<int64_t>(b) * nodes, nodes).transpose();
  }
  return pred;
}

double mae_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target,
                const Eigen::MatrixXd& mask, Eigen::MatrixXd* dpred) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols() ||
      pred.rows() != mask.rows() || pred.cols() != mask.cols()) {
    throw std::runtime_error("mae_loss shape mismatch");
  }
  double count = mask.sum();
  if (count <= 0.0) throw std::runtime_error("empty effective batch: every target is masked out");
  Eigen::ArrayXXd diff = (pred - target).array();
  double loss = (mask.array() * diff.abs()).sum() / count;
  if (dpred) *dpred = (mask.array() * diff.sign()).matrix() / count;
  return loss;
}

Eigen::VectorXd backward(const ModelParams& params, const std::vector<Eigen::MatrixXd>& basis,
                         const ForwardTape& tape, const Eigen::MatrixXd& dpred) {
  const ModelConfig& cfg = params.config;
  const int batch = tape.batch, nodes = tape.nodes;
  LayerViews views{&params};
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.flat.size());

  const TensorSpec& cw = params.specs[6 * cfg.st_blocks + 0];
  const TensorSpec& cb = params.specs[6 * cfg.st_blocks + 1];
  const TensorSpec& lw = params.specs[6 * cfg.st_blocks + 2];
  const TensorSpec& lb = params.specs[6 * cfg.st_blocks + 3];

  Eigen::VectorXd dy(static_cast<int64_t>(batch) * nodes);
  for (int b = 0; b < batch; ++b) {
    dy.segment(static_cast<int64_t>(b) * nodes, nodes) = dpred.row(b).transpose();
  }
  Eigen::Map<Eigen::VectorXd>(grad.data() + lw.offset, lw.size).noalias() +=
      tape.head_input.transpose() * dy;
  grad(lb.offset) += dy.sum();

  Slices d(1);
  d[0].noalias() = dy * views.vector(lw).transpose();

  Slices dprev;
  temporal_glu_backward(views, cw, cb, tape.collapse, d, grad, &dprev);
  d = std::move(dprev);

  for (int i = cfg.st_blocks - 1; i >= 0; --i) {
    const BlockTape& bt = tape.blocks[i];
    if (!bt.dropout_mask.empty()) {
      for (size_t t = 0; t < d.size(); ++t) d[t] = d[t].cwiseProduct(bt.dropout_mask[t]);
    }
    temporal_glu_backward(views, params.specs[6 * i + 4], params.specs[6 * i + 5], bt.t2, d, grad,
                          &dprev);
    d = std::move(dprev);
    cheb_relu_backward(views, params.specs[6 * i + 2], params.specs[6 * i + 3], basis, bt.spatial,
                       d, batch, nodes, grad, &dprev);
    d = std::move(dprev);
    temporal_glu_backward(views, params.specs[6 * i + 0], params.specs[6 * i + 1], bt.t1, d, grad,
                          i > 0 ? &dprev : nullptr);
    if (i > 0) d = std::move(dprev);
  }
  return grad;
}

double scheduled_lr(const OptimizerConfig& config, int epoch) {
  if (epoch < 0) throw std::runtime_error("epoch must be >= 0");
  return config.base_lr * std::pow(config.gamma, epoch / config.step_size);
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state, double lr,
               const OptimizerConfig& config) {
  if (params.size() != grads.size()) throw std::runtime_error("adam_step size mismatch");
  if (state.m.size() == 0) {
    state.m = Eigen::VectorXd::Zero(params.size());
    state.v = Eigen::VectorXd::Zero(params.size());
    state.step = 0;
  }
  state.step += 1;
  state.m = config.beta1 * state.m + (1.0 - config.beta1) * grads;
  state.v = config.beta2 * state.v + (1.0 - config.beta2) * grads.cwiseProduct(grads);
  double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  Eigen::ArrayXd m_hat = state.m.array() / bc1;
  Eigen::ArrayXd v_hat = state.v.array() / bc2;
  // Decoupled weight decay uses the pre-update parameters.
  params = params * (1.0 - lr * config.weight_decay) -
           (lr * m_hat / (v_hat.sqrt() + config.eps)).matrix();
}

Eigen::VectorXd average_params(const std::vector<const Eigen::VectorXd*>& models,
                               const std::vector<double>& weights) {
  if (models.empty()) throw std::runtime_error("average_params: no models");
  if (models.size() != weights.size()) {
    throw std::runtime_error("average_params: model and weight counts differ");
  }
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::runtime_error("average_params: negative weight");
    total += w;
  }
  if (total <= 0.0) throw std::runtime_error("average_params: weights sum to zero");
  // Anchored form: coordinates where every model agrees stay bit-identical,
  // since all the correction terms vanish exactly.
  Eigen::VectorXd out = *models[0];
  for (size_t i = 1; i < models.size(); ++i) {
    if (models[i]->size() != out.size()) {
      throw std::runtime_error("average_params: length mismatch at model " + std::to_string(i));
    }
    out += (weights[i] / total) * (*models[i] - *models[0]);
  }
  return out;
}

namespace {
constexpr char kMagic[4] = {'S', 'T', 'G', 'M'};
constexpr uint32_t kVersion = 1;
static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");
}  // namespace

void save_checkpoint(const std::string& path, const Eigen::VectorXd& flat) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(kMagic, 4);
  uint32_t version = kVersion;
  out.write(reinterpret_cast<const char*>(&version), 4);
  uint64_t count = static_cast<uint64_t>(flat.size());
  out.write(reinterpret_cast<const char*>(&count), 8);
  std::vector<float> payload(flat.size());
  for (int64_t i = 0; i < flat.size(); ++i) payload[i] = static_cast<float>(flat(i));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (!out) throw std::runtime_error("write failed for " + path);
}

Eigen::VectorXd load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[4];
  uint32_t version = 0;
  uint64_t count = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&count), 8);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error(path + ": not a model checkpoint");
  }
  if (version != kVersion) {
    throw std::runtime_error(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  std::vector<float> payload(count);
  in.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (!in) throw std::runtime_error(path + ": truncated checkpoint");
  Eigen::VectorXd flat(static_cast<int64_t>(count));
  for (uint64_t i = 0; i < count; ++i) flat(static_cast<int64_t>(i)) = payload[i];
  return flat;
}

}  // namespace stgsim
