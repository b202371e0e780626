#pragma once

// Simple contextual neural network (gated ReLU regression) and fully
// connected ReLU baselines: parameter containers, forward passes,
// initialization and the canonical flat parameter order.

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sctx/contextual_model.hpp"
#include "sctx/core_math.hpp"

namespace sctx {

/// Heaviside gates (exact) or sigmoid gates of a given steepness (smooth).
class GateMode {
 public:
  static GateMode exact() { return GateMode(0.0); }
  static GateMode smooth(double steepness);

  bool is_exact() const noexcept { return steepness_ == 0.0; }
  double steepness() const noexcept { return steepness_; }

  double operator()(double z) const noexcept { return is_exact() ? heaviside(z) : sigmoid(z, steepness_); }

  bool operator==(const GateMode&) const = default;

 private:
  explicit GateMode(double steepness) : steepness_(steepness) {}
  double steepness_;
};

/// Parameters of a c-context, r-regressor network with 2c gate/hidden units.
///
/// Canonical flat order: ctx_weights, ctx_biases, gate_injection,
/// hidden_weights (row-major r x 2c), hidden_biases, out_weights, out_bias.
struct SctxtnnParams {
  std::size_t contexts = 0;
  std::size_t regressors = 0;
  std::vector<double> ctx_weights;     // 2c
  std::vector<double> ctx_biases;      // 2c
  std::vector<double> gate_injection;  // 2c, diagonal gate -> hidden coupling
  DenseMatrix hidden_weights;          // r x 2c
  std::vector<double> hidden_biases;   // 2c
  std::vector<double> out_weights;     // 2c
  double out_bias = 0.0;

  static SctxtnnParams zeros(std::size_t c, std::size_t r);

  std::size_t units() const noexcept { return 2 * contexts; }
  std::size_t num_features() const noexcept { return regressors + 1; }
  /// Throws dimension_mismatch / invalid_argument on inconsistent or non-finite content.
  void validate() const;

  bool operator==(const SctxtnnParams&) const = default;
};

struct SctxtnnTrace {
  std::vector<double> gate_inputs;  // w x_p + b per gate
  std::vector<double> gates;        // gate values
  std::vector<double> pre_activations;
  std::vector<double> hidden;       // relu(pre_activations)
};

struct SctxtnnOutput {
  double output = 0.0;
  SctxtnnTrace trace;
};

SctxtnnOutput forward_sctxtnn(const SctxtnnParams& params, GateMode mode, std::span<const double> x);
/// Same value as forward_sctxtnn(...).output without building a trace.
double predict_sctxtnn(const SctxtnnParams& params, GateMode mode, std::span<const double> x);

/// Fully connected ReLU network with a linear output unit.
/// weights[l] has shape layer_sizes[l] x layer_sizes[l+1].
/// Canonical flat order: per layer, weights row-major then biases.
struct FeedForwardParams {
  std::vector<std::size_t> layer_sizes;
  std::vector<DenseMatrix> weights;
  std::vector<std::vector<double>> biases;

  static FeedForwardParams zeros(std::vector<std::size_t> layer_sizes);

  std::size_t num_features() const noexcept { return layer_sizes.front(); }
  void validate() const;

  bool operator==(const FeedForwardParams&) const = default;
};

double forward_feedforward(const FeedForwardParams& params, std::span<const double> x);

std::size_t param_count(const SctxtnnParams& params);
std::size_t param_count(const FeedForwardParams& params);
std::size_t sctxtnn_param_count(std::size_t c, std::size_t r);
std::size_t feedforward_param_count(std::span<const std::size_t> layer_sizes);

std::vector<double> flatten(const SctxtnnParams& params);
std::vector<double> flatten(const FeedForwardParams& params);
/// Overwrites params from a flat vector in canonical order.
void unflatten(std::span<const double> flat, SctxtnnParams& params);
void unflatten(std::span<const double> flat, FeedForwardParams& params);

struct SctxtnnSpec {
  std::size_t contexts = 3;
  std::size_t regressors = 1;
  GateMode mode = GateMode::smooth(1.0);
};

struct FeedForwardSpec {
  std::vector<std::size_t> layer_sizes;  // [p, h_1, ..., h_L, 1]
};

using ArchSpec = std::variant<SctxtnnSpec, FeedForwardSpec>;

/// Either architecture behind one interface, as the trainer sees it.
class Network {
 public:
  Network(SctxtnnParams params, GateMode mode);
  explicit Network(FeedForwardParams params);

  bool is_sctxtnn() const noexcept { return std::holds_alternative<SctxtnnParams>(params_); }
  const SctxtnnParams& sctxtnn() const { return std::get<SctxtnnParams>(params_); }
  const FeedForwardParams& feedforward() const { return std::get<FeedForwardParams>(params_); }
  GateMode mode() const noexcept { return mode_; }

  std::size_t num_features() const;
  std::size_t param_count() const;
  std::vector<double> flat() const;
  void assign_flat(std::span<const double> flat);

  double predict(std::span<const double> x) const;
  std::vector<double> predict(const DataSlice& data) const;

  bool operator==(const Network&) const = default;

 private:
  std::variant<SctxtnnParams, FeedForwardParams> params_;
  GateMode mode_ = GateMode::exact();
};

/// Glorot-uniform weights U(-a, a), a = sqrt(6 / (fan_in + fan_out)); biases zero.
/// For the contextual network the gate layer (fan_in 1, fan_out 2c) draws both
/// weights and biases from its uniform law and gate_injection starts at -1.
/// Draw order follows the canonical flat order.
Network init_random(const ArchSpec& spec, RandomSource& rng);

nlohmann::ordered_json to_json(const Network& net);
Network network_from_json(const nlohmann::json& j);

std::string describe(const ArchSpec& spec);

}  // namespace sctx
