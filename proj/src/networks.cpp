#include "sctx/networks.hpp"

#include <algorithm>
#include <sstream>

#include "sctx/errors.hpp"

namespace sctx {

namespace {

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v) require(std::isfinite(x), ErrorKind::invalid_argument, std::string(what) + " must be finite");
}

void check_len(std::size_t actual, std::size_t expected, const char* what) {
  require(actual == expected, ErrorKind::dimension_mismatch,
          std::string(what) + ": expected " + std::to_string(expected) + ", got " + std::to_string(actual));
}

std::vector<double> glorot(RandomSource& rng, std::size_t fan_in, std::size_t fan_out, std::size_t n) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return sample_uniform(rng, -bound, bound, n);
}

// Reads consecutive blocks out of a flat vector.
class FlatReader {
 public:
  explicit FlatReader(std::span<const double> flat) : flat_(flat) {}
  void take(std::span<double> dst) {
    require(pos_ + dst.size() <= flat_.size(), ErrorKind::dimension_mismatch, "flat parameter vector too short");
    std::copy_n(flat_.begin() + static_cast<std::ptrdiff_t>(pos_), dst.size(), dst.begin());
    pos_ += dst.size();
  }
  double next() {
    double v = 0.0;
    take({&v, 1});
    return v;
  }
  void finish() const {
    require(pos_ == flat_.size(), ErrorKind::dimension_mismatch, "flat parameter vector too long");
  }

 private:
  std::span<const double> flat_;
  std::size_t pos_ = 0;
};

}  // namespace

GateMode GateMode::smooth(double steepness) {
  require(std::isfinite(steepness) && steepness > 0.0, ErrorKind::invalid_argument,
          "sigmoid steepness must be positive");
  return GateMode(steepness);
}

SctxtnnParams SctxtnnParams::zeros(std::size_t c, std::size_t r) {
  require(c >= 1 && r >= 1, ErrorKind::invalid_argument, "need c >= 1 and r >= 1");
  const std::size_t u = 2 * c;
  SctxtnnParams p;
  p.contexts = c;
  p.regressors = r;
  p.ctx_weights.assign(u, 0.0);
  p.ctx_biases.assign(u, 0.0);
  p.gate_injection.assign(u, 0.0);
  p.hidden_weights = DenseMatrix(r, u);
  p.hidden_biases.assign(u, 0.0);
  p.out_weights.assign(u, 0.0);
  return p;
}

void SctxtnnParams::validate() const {
  require(contexts >= 1 && regressors >= 1, ErrorKind::invalid_argument, "need c >= 1 and r >= 1");
  const std::size_t u = units();
  check_len(ctx_weights.size(), u, "ctx_weights");
  check_len(ctx_biases.size(), u, "ctx_biases");
  check_len(gate_injection.size(), u, "gate_injection");
  check_len(hidden_weights.rows(), regressors, "hidden_weights rows");
  check_len(hidden_weights.cols(), u, "hidden_weights cols");
  check_len(hidden_biases.size(), u, "hidden_biases");
  check_len(out_weights.size(), u, "out_weights");
  check_finite(ctx_weights, "ctx_weights");
  check_finite(ctx_biases, "ctx_biases");
  check_finite(gate_injection, "gate_injection");
  check_finite(hidden_weights.entries(), "hidden_weights");
  check_finite(hidden_biases, "hidden_biases");
  check_finite(out_weights, "out_weights");
  require(std::isfinite(out_bias), ErrorKind::invalid_argument, "out_bias must be finite");
}

SctxtnnOutput forward_sctxtnn(const SctxtnnParams& params, GateMode mode, std::span<const double> x) {
  check_len(x.size(), params.num_features(), "forward_sctxtnn input");
  const std::size_t u = params.units();
  const std::size_t r = params.regressors;
  const double x_p = x[r];

  SctxtnnOutput out;
  auto& t = out.trace;
  t.gate_inputs.resize(u);
  t.gates.resize(u);
  t.pre_activations.resize(u);
  t.hidden.resize(u);
  double y = params.out_bias;
  for (std::size_t j = 0; j < u; ++j) {
    t.gate_inputs[j] = params.ctx_weights[j] * x_p + params.ctx_biases[j];
    t.gates[j] = mode(t.gate_inputs[j]);
    double z = 0.0;
    for (std::size_t k = 0; k < r; ++k) z += params.hidden_weights(k, j) * x[k];
    z += params.hidden_biases[j] + params.gate_injection[j] * t.gates[j];
    t.pre_activations[j] = z;
    t.hidden[j] = relu(z);
    y += params.out_weights[j] * t.hidden[j];
  }
  out.output = y;
  return out;
}

double predict_sctxtnn(const SctxtnnParams& params, GateMode mode, std::span<const double> x) {
  const std::size_t u = params.units();
  const std::size_t r = params.regressors;
  const double x_p = x[r];
  double y = params.out_bias;
  for (std::size_t j = 0; j < u; ++j) {
    const double gate = mode(params.ctx_weights[j] * x_p + params.ctx_biases[j]);
    double z = 0.0;
    for (std::size_t k = 0; k < r; ++k) z += params.hidden_weights(k, j) * x[k];
    z += params.hidden_biases[j] + params.gate_injection[j] * gate;
    y += params.out_weights[j] * relu(z);
  }
  return y;
}

FeedForwardParams FeedForwardParams::zeros(std::vector<std::size_t> layer_sizes) {
  require(layer_sizes.size() >= 2, ErrorKind::invalid_argument, "need input and output layer sizes");
  require(layer_sizes.back() == 1, ErrorKind::invalid_argument, "output layer must have exactly one unit");
  for (auto s : layer_sizes) require(s >= 1, ErrorKind::invalid_argument, "layer sizes must be positive");
  FeedForwardParams p;
  p.layer_sizes = std::move(layer_sizes);
  for (std::size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
    p.weights.emplace_back(p.layer_sizes[l], p.layer_sizes[l + 1]);
    p.biases.emplace_back(p.layer_sizes[l + 1], 0.0);
  }
  return p;
}

void FeedForwardParams::validate() const {
  require(layer_sizes.size() >= 2 && layer_sizes.back() == 1, ErrorKind::invalid_argument,
          "layer sizes must be [p, ..., 1]");
  check_len(weights.size(), layer_sizes.size() - 1, "weight layers");
  check_len(biases.size(), layer_sizes.size() - 1, "bias layers");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    check_len(weights[l].rows(), layer_sizes[l], "weight rows");
    check_len(weights[l].cols(), layer_sizes[l + 1], "weight cols");
    check_len(biases[l].size(), layer_sizes[l + 1], "bias length");
    check_finite(weights[l].entries(), "weights");
    check_finite(biases[l], "biases");
  }
}

double forward_feedforward(const FeedForwardParams& params, std::span<const double> x) {
  check_len(x.size(), params.num_features(), "forward_feedforward input");
  std::vector<double> a(x.begin(), x.end());
  std::vector<double> next;
  const std::size_t layers = params.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& w = params.weights[l];
    next.assign(params.biases[l].begin(), params.biases[l].end());
    for (std::size_t i = 0; i < w.rows(); ++i) {
      const double ai = a[i];
      const auto row = w.row(i);
      for (std::size_t j = 0; j < w.cols(); ++j) next[j] += ai * row[j];
    }
    if (l + 1 < layers) {
      for (auto& v : next) v = relu(v);
    }
    a.swap(next);
  }
  return a[0];
}

std::size_t sctxtnn_param_count(std::size_t c, std::size_t r) { return 10 * c + 2 * c * r + 1; }

std::size_t feedforward_param_count(std::span<const std::size_t> layer_sizes) {
  std::size_t n = 0;
  for (std::size_t l = 1; l < layer_sizes.size(); ++l) n += (layer_sizes[l - 1] + 1) * layer_sizes[l];
  return n;
}

std::size_t param_count(const SctxtnnParams& params) {
  return params.ctx_weights.size() + params.ctx_biases.size() + params.gate_injection.size() +
         params.hidden_weights.size() + params.hidden_biases.size() + params.out_weights.size() + 1;
}

std::size_t param_count(const FeedForwardParams& params) {
  std::size_t n = 0;
  for (std::size_t l = 0; l < params.weights.size(); ++l) n += params.weights[l].size() + params.biases[l].size();
  return n;
}

std::vector<double> flatten(const SctxtnnParams& p) {
  std::vector<double> flat;
  flat.reserve(param_count(p));
  auto append = [&flat](std::span<const double> v) { flat.insert(flat.end(), v.begin(), v.end()); };
  append(p.ctx_weights);
  append(p.ctx_biases);
  append(p.gate_injection);
  append(p.hidden_weights.entries());
  append(p.hidden_biases);
  append(p.out_weights);
  flat.push_back(p.out_bias);
  return flat;
}

std::vector<double> flatten(const FeedForwardParams& p) {
  std::vector<double> flat;
  flat.reserve(param_count(p));
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const auto w = p.weights[l].entries();
    flat.insert(flat.end(), w.begin(), w.end());
    flat.insert(flat.end(), p.biases[l].begin(), p.biases[l].end());
  }
  return flat;
}

void unflatten(std::span<const double> flat, SctxtnnParams& p) {
  FlatReader in(flat);
  in.take(p.ctx_weights);
  in.take(p.ctx_biases);
  in.take(p.gate_injection);
  in.take(p.hidden_weights.entries());
  in.take(p.hidden_biases);
  in.take(p.out_weights);
  p.out_bias = in.next();
  in.finish();
}

void unflatten(std::span<const double> flat, FeedForwardParams& p) {
  FlatReader in(flat);
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    in.take(p.weights[l].entries());
    in.take(p.biases[l]);
  }
  in.finish();
}

Network::Network(SctxtnnParams params, GateMode mode) : params_(std::move(params)), mode_(mode) {
  std::get<SctxtnnParams>(params_).validate();
}

Network::Network(FeedForwardParams params) : params_(std::move(params)) {
  std::get<FeedForwardParams>(params_).validate();
}

std::size_t Network::num_features() const {
  return std::visit([](const auto& p) { return p.num_features(); }, params_);
}

std::size_t Network::param_count() const {
  return std::visit([](const auto& p) { return sctx::param_count(p); }, params_);
}

std::vector<double> Network::flat() const {
  return std::visit([](const auto& p) { return flatten(p); }, params_);
}

void Network::assign_flat(std::span<const double> flat) {
  std::visit([flat](auto& p) { unflatten(flat, p); }, params_);
}

double Network::predict(std::span<const double> x) const {
  if (const auto* s = std::get_if<SctxtnnParams>(&params_)) {
    check_len(x.size(), s->num_features(), "predict input");
    return predict_sctxtnn(*s, mode_, x);
  }
  return forward_feedforward(std::get<FeedForwardParams>(params_), x);
}

std::vector<double> Network::predict(const DataSlice& data) const {
  check_len(data.dim, num_features(), "dataset feature count");
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = predict(data.row(i));
  return out;
}

Network init_random(const ArchSpec& spec, RandomSource& rng) {
  if (const auto* s = std::get_if<SctxtnnSpec>(&spec)) {
    auto p = SctxtnnParams::zeros(s->contexts, s->regressors);
    const std::size_t u = p.units();
    p.ctx_weights = glorot(rng, 1, u, u);
    p.ctx_biases = glorot(rng, 1, u, u);
    p.gate_injection.assign(u, -1.0);
    const auto hw = glorot(rng, s->regressors, u, s->regressors * u);
    std::copy(hw.begin(), hw.end(), p.hidden_weights.entries().begin());
    p.out_weights = glorot(rng, u, 1, u);
    return Network(std::move(p), s->mode);
  }
  const auto& f = std::get<FeedForwardSpec>(spec);
  auto p = FeedForwardParams::zeros(f.layer_sizes);
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const std::size_t fan_in = p.layer_sizes[l];
    const std::size_t fan_out = p.layer_sizes[l + 1];
    const auto w = glorot(rng, fan_in, fan_out, fan_in * fan_out);
    std::copy(w.begin(), w.end(), p.weights[l].entries().begin());
  }
  return Network(std::move(p));
}

nlohmann::ordered_json to_json(const Network& net) {
  nlohmann::ordered_json j;
  if (net.is_sctxtnn()) {
    const auto& p = net.sctxtnn();
    j["type"] = "sctxtnn";
    j["contexts"] = p.contexts;
    j["regressors"] = p.regressors;
    j["gate"] = net.mode().is_exact()
                    ? nlohmann::ordered_json{{"mode", "exact"}}
                    : nlohmann::ordered_json{{"mode", "smooth"}, {"steepness", net.mode().steepness()}};
    j["order"] = "ctx_weights,ctx_biases,gate_injection,hidden_weights(r x 2c row-major),hidden_biases,out_weights,out_bias";
  } else {
    j["type"] = "ff";
    j["layer_sizes"] = net.feedforward().layer_sizes;
    j["order"] = "per layer: weights(in x out row-major),biases";
  }
  j["params"] = net.flat();
  return j;
}

Network network_from_json(const nlohmann::json& j) {
  try {
    const auto type = j.at("type").get<std::string>();
    const auto flat = j.at("params").get<std::vector<double>>();
    if (type == "sctxtnn") {
      auto p = SctxtnnParams::zeros(j.at("contexts").get<std::size_t>(), j.at("regressors").get<std::size_t>());
      const auto& gate = j.at("gate");
      const auto mode = gate.at("mode").get<std::string>() == "exact"
                            ? GateMode::exact()
                            : GateMode::smooth(gate.at("steepness").get<double>());
      unflatten(flat, p);
      return Network(std::move(p), mode);
    }
    if (type == "ff") {
      auto p = FeedForwardParams::zeros(j.at("layer_sizes").get<std::vector<std::size_t>>());
      unflatten(flat, p);
      return Network(std::move(p));
    }
    fail(ErrorKind::parse_error, "unknown network type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse_error, std::string("network JSON: ") + e.what());
  }
}

std::string describe(const ArchSpec& spec) {
  std::ostringstream os;
  if (const auto* s = std::get_if<SctxtnnSpec>(&spec)) {
    os << "sctxtnn(c=" << s->contexts << ", r=" << s->regressors << ", gate="
       << (s->mode.is_exact() ? std::string("exact") : "sigmoid k=" + format_double(s->mode.steepness())) << ")";
  } else {
    os << "ff[";
    const auto& sizes = std::get<FeedForwardSpec>(spec).layer_sizes;
    for (std::size_t i = 0; i < sizes.size(); ++i) os << (i ? "," : "") << sizes[i];
    os << "]";
  }
  return os.str();
}

}  // namespace sctx
