#include "sctx/training.hpp"

#include <chrono>
#include <cmath>

#include "sctx/errors.hpp"

namespace sctx {

double mse(std::span<const double> predictions, std::span<const double> targets) {
  require(predictions.size() == targets.size(), ErrorKind::length_mismatch,
          "mse: " + std::to_string(predictions.size()) + " predictions vs " + std::to_string(targets.size()) +
              " targets");
  require(!predictions.empty(), ErrorKind::invalid_argument, "mse: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - targets[i];
    s += d * d;
  }
  return s / static_cast<double>(predictions.size());
}

namespace {

// Preallocated forward/backward buffers for one feed-forward network.
class FeedForwardWorkspace {
 public:
  explicit FeedForwardWorkspace(const FeedForwardParams& p) : p_(p) {
    const auto& sizes = p.layer_sizes;
    act_.resize(sizes.size());
    pre_.resize(sizes.size());
    delta_.resize(sizes.size());
    std::size_t offset = 0;
    for (std::size_t l = 0; l < sizes.size(); ++l) {
      act_[l].assign(sizes[l], 0.0);
      pre_[l].assign(sizes[l], 0.0);
      delta_[l].assign(sizes[l], 0.0);
      if (l + 1 < sizes.size()) {
        weight_offset_.push_back(offset);
        offset += sizes[l] * sizes[l + 1];
        bias_offset_.push_back(offset);
        offset += sizes[l + 1];
      }
    }
  }

  double forward(std::span<const double> x) {
    const std::size_t layers = p_.weights.size();
    std::copy(x.begin(), x.end(), act_[0].begin());
    for (std::size_t l = 0; l < layers; ++l) {
      const auto& w = p_.weights[l];
      auto& z = pre_[l + 1];
      std::copy(p_.biases[l].begin(), p_.biases[l].end(), z.begin());
      const auto& a = act_[l];
      for (std::size_t i = 0; i < w.rows(); ++i) {
        const double ai = a[i];
        const auto row = w.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) z[j] += ai * row[j];
      }
      auto& out = act_[l + 1];
      if (l + 1 < layers) {
        for (std::size_t j = 0; j < z.size(); ++j) out[j] = relu(z[j]);
      } else {
        std::copy(z.begin(), z.end(), out.begin());
      }
    }
    return act_.back()[0];
  }

  // Accumulates d(loss)/d(params) given d(loss)/d(output) for the last forward().
  void backward(double d_output, std::span<double> grad) {
    const std::size_t layers = p_.weights.size();
    delta_[layers][0] = d_output;
    for (std::size_t l = layers; l-- > 0;) {
      const auto& w = p_.weights[l];
      const auto& d = delta_[l + 1];
      const auto& a = act_[l];
      double* gw = grad.data() + weight_offset_[l];
      double* gb = grad.data() + bias_offset_[l];
      for (std::size_t j = 0; j < d.size(); ++j) gb[j] += d[j];
      for (std::size_t i = 0; i < w.rows(); ++i) {
        const double ai = a[i];
        for (std::size_t j = 0; j < d.size(); ++j) gw[i * d.size() + j] += ai * d[j];
      }
      if (l > 0) {
        auto& prev = delta_[l];
        const auto& z = pre_[l];
        for (std::size_t i = 0; i < w.rows(); ++i) {
          if (z[i] > 0.0) {
            const auto row = w.row(i);
            double s = 0.0;
            for (std::size_t j = 0; j < d.size(); ++j) s += row[j] * d[j];
            prev[i] = s;
          } else {
            prev[i] = 0.0;
          }
        }
      }
    }
  }

  double min_abs_hidden_pre() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t l = 1; l + 1 < pre_.size(); ++l) {
      for (double z : pre_[l]) m = std::min(m, std::abs(z));
    }
    return m;
  }

 private:
  const FeedForwardParams& p_;
  std::vector<std::vector<double>> act_;
  std::vector<std::vector<double>> pre_;
  std::vector<std::vector<double>> delta_;
  std::vector<std::size_t> weight_offset_;
  std::vector<std::size_t> bias_offset_;
};

class SctxtnnWorkspace {
 public:
  SctxtnnWorkspace(const SctxtnnParams& p, GateMode mode)
      : p_(p), mode_(mode), gate_(p.units()), pre_(p.units()), hidden_(p.units()) {}

  double forward(std::span<const double> x) {
    const std::size_t u = p_.units();
    const std::size_t r = p_.regressors;
    const double x_p = x[r];
    double y = p_.out_bias;
    for (std::size_t j = 0; j < u; ++j) {
      gate_[j] = mode_(p_.ctx_weights[j] * x_p + p_.ctx_biases[j]);
      double z = p_.hidden_biases[j] + p_.gate_injection[j] * gate_[j];
      for (std::size_t k = 0; k < r; ++k) z += p_.hidden_weights(k, j) * x[k];
      pre_[j] = z;
      hidden_[j] = relu(z);
      y += p_.out_weights[j] * hidden_[j];
    }
    return y;
  }

  void backward(std::span<const double> x, double d_output, std::span<double> grad) {
    const std::size_t u = p_.units();
    const std::size_t r = p_.regressors;
    const double x_p = x[r];
    const double k = mode_.steepness();
    double* g_cw = grad.data();
    double* g_cb = g_cw + u;
    double* g_inj = g_cb + u;
    double* g_w = g_inj + u;
    double* g_hb = g_w + r * u;
    double* g_ow = g_hb + u;
    double* g_ob = g_ow + u;
    *g_ob += d_output;
    for (std::size_t j = 0; j < u; ++j) {
      g_ow[j] += d_output * hidden_[j];
      if (pre_[j] <= 0.0) continue;
      const double dz = d_output * p_.out_weights[j];
      g_hb[j] += dz;
      for (std::size_t m = 0; m < r; ++m) g_w[m * u + j] += dz * x[m];
      g_inj[j] += dz * gate_[j];
      const double dt = dz * p_.gate_injection[j] * k * gate_[j] * (1.0 - gate_[j]);
      g_cw[j] += dt * x_p;
      g_cb[j] += dt;
    }
  }

  double min_abs_hidden_pre() const {
    double m = std::numeric_limits<double>::infinity();
    for (double z : pre_) m = std::min(m, std::abs(z));
    return m;
  }

 private:
  const SctxtnnParams& p_;
  GateMode mode_;
  std::vector<double> gate_;
  std::vector<double> pre_;
  std::vector<double> hidden_;
};

template <typename Workspace>
LossAndGradient accumulate(Workspace& ws, std::size_t num_params, const DataSlice& batch) {
  LossAndGradient out;
  out.gradient.assign(num_params, 0.0);
  const double scale = 2.0 / static_cast<double>(batch.size());
  double sse = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto x = batch.row(i);
    const double residual = ws.forward(x) - batch.targets[i];
    sse += residual * residual;
    if constexpr (std::is_same_v<Workspace, SctxtnnWorkspace>) {
      ws.backward(x, scale * residual, out.gradient);
    } else {
      ws.backward(scale * residual, out.gradient);
    }
  }
  out.loss = sse / static_cast<double>(batch.size());
  return out;
}

template <typename Workspace>
double sum_squared_error(Workspace& ws, const DataSlice& data) {
  double sse = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double residual = ws.forward(data.row(i)) - data.targets[i];
    sse += residual * residual;
  }
  return sse;
}

void check_batch(const Network& net, const DataSlice& batch) {
  require(batch.size() >= 1, ErrorKind::invalid_argument, "empty batch");
  require(batch.dim == net.num_features(), ErrorKind::dimension_mismatch,
          "batch has " + std::to_string(batch.dim) + " features, network expects " +
              std::to_string(net.num_features()));
}

}  // namespace

LossAndGradient loss_and_gradient(const Network& net, const DataSlice& batch) {
  check_batch(net, batch);
  if (net.is_sctxtnn()) {
    require(!net.mode().is_exact(), ErrorKind::exact_mode_untrainable,
            "heaviside gates have zero derivative almost everywhere; use smooth gates");
    SctxtnnWorkspace ws(net.sctxtnn(), net.mode());
    return accumulate(ws, net.param_count(), batch);
  }
  FeedForwardWorkspace ws(net.feedforward());
  return accumulate(ws, net.param_count(), batch);
}

double evaluate_mse(const Network& net, const DataSlice& data) {
  check_batch(net, data);
  double sse = 0.0;
  if (net.is_sctxtnn()) {
    SctxtnnWorkspace ws(net.sctxtnn(), net.mode());
    sse = sum_squared_error(ws, data);
  } else {
    FeedForwardWorkspace ws(net.feedforward());
    sse = sum_squared_error(ws, data);
  }
  return sse / static_cast<double>(data.size());
}

double min_abs_pre_activation(const Network& net, const DataSlice& batch) {
  check_batch(net, batch);
  double m = std::numeric_limits<double>::infinity();
  if (net.is_sctxtnn()) {
    SctxtnnWorkspace ws(net.sctxtnn(), net.mode());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      ws.forward(batch.row(i));
      m = std::min(m, ws.min_abs_hidden_pre());
    }
  } else {
    FeedForwardWorkspace ws(net.feedforward());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      ws.forward(batch.row(i));
      m = std::min(m, ws.min_abs_hidden_pre());
    }
  }
  return m;
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad) {
  require(params.size() == grad.size() && params.size() == state.first_moment.size() &&
              params.size() == state.second_moment.size(),
          ErrorKind::dimension_mismatch, "adam_step: parameter, gradient and moment lengths differ");
  const auto& c = state.config;
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    m = c.beta1 * m + (1.0 - c.beta1) * grad[i];
    v = c.beta2 * v + (1.0 - c.beta2) * grad[i] * grad[i];
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    params[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

TrainingRecord train(Network initial, const LabeledDataset& data, std::size_t epochs, const AdamConfig& config) {
  require(data.split().train >= 1 && data.split().validation >= 1, ErrorKind::invalid_argument,
          "training needs nonempty train and validation splits");
  require(config.learning_rate > 0.0 && config.beta1 > 0.0 && config.beta1 < 1.0 && config.beta2 > 0.0 &&
              config.beta2 < 1.0 && config.epsilon > 0.0,
          ErrorKind::invalid_argument, "invalid Adam configuration");
  const auto started = std::chrono::steady_clock::now();

  TrainingRecord record{{}, {}, std::move(initial), 0.0};
  record.train_mse.reserve(epochs);
  record.validation_mse.reserve(epochs);
  auto& net = record.final_network;
  std::vector<double> theta = net.flat();
  AdamState adam(config, theta.size());
  const DataSlice train_part = data.train();
  const DataSlice val_part = data.validation();

  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    const auto lg = loss_and_gradient(net, train_part);
    const double val = evaluate_mse(net, val_part);
    if (!std::isfinite(lg.loss) || !std::isfinite(val)) throw NonFiniteLoss(epoch);
    record.train_mse.push_back(lg.loss);
    record.validation_mse.push_back(val);
    adam_step(adam, theta, lg.gradient);
    net.assign_flat(theta);
  }
  record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return record;
}

TrainingRecord train(const ArchSpec& spec, const LabeledDataset& data, std::size_t epochs, const AdamConfig& config,
                     RandomSource& rng) {
  return train(init_random(spec, rng), data, epochs, config);
}

}  // namespace sctx
