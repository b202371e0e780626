#pragma once

// MSE loss, hand-derived reverse-mode gradients for both architectures,
// Adam, and the full-batch epoch loop.

#include <cstddef>
#include <span>
#include <vector>

#include "sctx/contextual_model.hpp"
#include "sctx/networks.hpp"

namespace sctx {

double mse(std::span<const double> predictions, std::span<const double> targets);

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;  // canonical flat order
};

/// Batch MSE and its exact gradient. ReLU'(0) is taken as 0. Rows are
/// accumulated sequentially in order, so results are bit-reproducible.
/// Throws exact_mode_untrainable for a heaviside-gated network.
LossAndGradient loss_and_gradient(const Network& net, const DataSlice& batch);

inline std::vector<double> gradient(const Network& net, const DataSlice& batch) {
  return loss_and_gradient(net, batch).gradient;
}

/// Batch MSE without the gradient.
double evaluate_mse(const Network& net, const DataSlice& data);

/// Smallest |hidden pre-activation| over the batch; gradients are only
/// piecewise smooth, so finite-difference checks stay away from zero.
double min_abs_pre_activation(const Network& net, const DataSlice& batch);

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::size_t step_count = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;

  AdamState(AdamConfig cfg, std::size_t num_params)
      : config(cfg), first_moment(num_params, 0.0), second_moment(num_params, 0.0) {}
};

/// One bias-corrected Adam update of params in place.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad);

struct TrainingRecord {
  std::vector<double> train_mse;       // per epoch, before that epoch's update
  std::vector<double> validation_mse;  // per epoch, same parameters
  Network final_network;
  double wall_seconds = 0.0;
};

/// Full-batch Adam on the training split, one update per epoch.
/// Throws NonFiniteLoss if a recorded loss is not finite.
TrainingRecord train(Network initial, const LabeledDataset& data, std::size_t epochs, const AdamConfig& config);

/// Draws the initial network with init_random(spec, rng) and trains it.
TrainingRecord train(const ArchSpec& spec, const LabeledDataset& data, std::size_t epochs, const AdamConfig& config,
                     RandomSource& rng);

}  // namespace sctx
