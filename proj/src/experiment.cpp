#include "sctx/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>
#include <thread>

#include "sctx/construction.hpp"
#include "sctx/errors.hpp"

namespace sctx {

namespace {

const char* kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::sctxtnn: return "sctxtnn";
    case ModelKind::feedforward: return "ff";
    case ModelKind::sctxtnn_constructed: return "sctxtnn_constructed";
  }
  return "?";
}

ModelKind kind_from_name(const std::string& name) {
  if (name == "sctxtnn") return ModelKind::sctxtnn;
  if (name == "ff") return ModelKind::feedforward;
  if (name == "sctxtnn_constructed") return ModelKind::sctxtnn_constructed;
  fail(ErrorKind::parse_error, "field 'roster[].type': unknown model type '" + name + "'");
}

template <typename T>
void read_field(const nlohmann::json& j, const char* name, T& out, const std::string& path = "") {
  if (!j.contains(name)) return;
  try {
    out = j.at(name).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse_error, "field '" + path + name + "': " + e.what());
  }
}

// Regressor bounding box of the whole dataset, so a construction covers every row.
RegressorDomain regressor_box(const LabeledDataset& data) {
  const std::size_t r = data.num_features() - 1;
  std::vector<Interval> bounds(r, Interval{std::numeric_limits<double>::infinity(),
                                           -std::numeric_limits<double>::infinity()});
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = data.features().row(i);
    for (std::size_t k = 0; k < r; ++k) {
      bounds[k].lo = std::min(bounds[k].lo, row[k]);
      bounds[k].hi = std::max(bounds[k].hi, row[k]);
    }
  }
  for (auto& b : bounds) {
    if (!(b.lo < b.hi)) b.hi = b.lo + 1.0;
  }
  return RegressorDomain(std::move(bounds));
}

}  // namespace

void ExperimentConfig::validate() const {
  require(num_simulations >= 1, ErrorKind::invalid_argument, "num_simulations must be positive");
  require(dataset_size >= 1 && split.total() == dataset_size, ErrorKind::invalid_argument,
          "split sizes must sum to dataset_size");
  require(split.train >= 1 && split.validation >= 1 && split.test >= 1, ErrorKind::invalid_argument,
          "train, validation and test splits must be nonempty");
  require(std::isfinite(noise_sd) && noise_sd >= 0.0, ErrorKind::invalid_argument, "noise_sd must be >= 0");
  require(adam.learning_rate > 0.0 && adam.beta1 > 0.0 && adam.beta1 < 1.0 && adam.beta2 > 0.0 &&
              adam.beta2 < 1.0 && adam.epsilon > 0.0,
          ErrorKind::invalid_argument, "invalid Adam settings");
  require(!roster.empty(), ErrorKind::invalid_argument, "roster must not be empty");
  std::set<std::string> names;
  for (const auto& e : roster) {
    require(!e.name.empty() && names.insert(e.name).second, ErrorKind::invalid_argument,
            "roster names must be nonempty and unique");
    require(e.name.find_first_of(",\"\n") == std::string::npos, ErrorKind::invalid_argument,
            "roster names may not contain commas, quotes or newlines");
    if (e.kind == ModelKind::sctxtnn) (void)GateMode::smooth(e.steepness);
    for (auto h : e.hidden) require(h >= 1, ErrorKind::invalid_argument, "hidden widths must be positive");
  }
  // validates cuts and domain
  (void)ContextualLinearModel(data_model.interior_cuts, data_model.domain,
                              std::vector<std::vector<double>>(data_model.contexts,
                                                               std::vector<double>(data_model.regressors, 0.0)),
                              std::vector<double>(data_model.contexts, 0.0));
}

ArchSpec ExperimentConfig::arch_for(const RosterEntry& entry) const {
  if (entry.kind == ModelKind::feedforward) {
    FeedForwardSpec spec;
    spec.layer_sizes.push_back(data_model.regressors + 1);
    spec.layer_sizes.insert(spec.layer_sizes.end(), entry.hidden.begin(), entry.hidden.end());
    spec.layer_sizes.push_back(1);
    return spec;
  }
  return SctxtnnSpec{data_model.contexts, data_model.regressors,
                     entry.kind == ModelKind::sctxtnn ? GateMode::smooth(entry.steepness) : GateMode::exact()};
}

nlohmann::ordered_json to_json(const ExperimentConfig& config) {
  nlohmann::ordered_json j;
  j["num_simulations"] = config.num_simulations;
  j["dataset_size"] = config.dataset_size;
  j["split"] = {{"train", config.split.train}, {"validation", config.split.validation}, {"test", config.split.test}};
  j["epochs"] = config.epochs;
  j["optimizer"] = {{"name", "adam"},
                    {"learning_rate", config.adam.learning_rate},
                    {"beta1", config.adam.beta1},
                    {"beta2", config.adam.beta2},
                    {"epsilon", config.adam.epsilon},
                    {"batch", "full"}};
  j["noise_sd"] = config.noise_sd;
  j["data_model"] = {{"contexts", config.data_model.contexts},
                     {"regressors", config.data_model.regressors},
                     {"interior_cuts", config.data_model.interior_cuts},
                     {"domain", {config.data_model.domain.lo, config.data_model.domain.hi}},
                     {"sample_intercepts", config.data_model.sample_intercepts}};
  auto roster = nlohmann::ordered_json::array();
  for (const auto& e : config.roster) {
    nlohmann::ordered_json m{{"name", e.name}, {"type", kind_name(e.kind)}};
    if (e.kind == ModelKind::feedforward) m["hidden"] = e.hidden;
    if (e.kind == ModelKind::sctxtnn) m["steepness"] = e.steepness;
    roster.push_back(std::move(m));
  }
  j["roster"] = std::move(roster);
  j["initialization"] =
      "glorot-uniform weights, zero biases; sctxtnn gate weights and biases glorot-uniform, gate injection -1";
  j["seed"] = config.seed;
  j["workers"] = config.workers;
  return j;
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorKind::parse_error, "experiment config must be a JSON object");
  ExperimentConfig c;
  read_field(j, "num_simulations", c.num_simulations);
  read_field(j, "dataset_size", c.dataset_size);
  if (j.contains("split")) {
    const auto& s = j.at("split");
    if (!s.is_object()) fail(ErrorKind::parse_error, "field 'split' must be an object");
    read_field(s, "train", c.split.train, "split.");
    read_field(s, "validation", c.split.validation, "split.");
    read_field(s, "test", c.split.test, "split.");
  }
  read_field(j, "epochs", c.epochs);
  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    if (!o.is_object()) fail(ErrorKind::parse_error, "field 'optimizer' must be an object");
    std::string name = "adam";
    read_field(o, "name", name, "optimizer.");
    if (name != "adam") fail(ErrorKind::parse_error, "field 'optimizer.name': only adam is supported");
    read_field(o, "learning_rate", c.adam.learning_rate, "optimizer.");
    read_field(o, "beta1", c.adam.beta1, "optimizer.");
    read_field(o, "beta2", c.adam.beta2, "optimizer.");
    read_field(o, "epsilon", c.adam.epsilon, "optimizer.");
  }
  read_field(j, "noise_sd", c.noise_sd);
  if (j.contains("data_model")) {
    const auto& d = j.at("data_model");
    if (!d.is_object()) fail(ErrorKind::parse_error, "field 'data_model' must be an object");
    read_field(d, "contexts", c.data_model.contexts, "data_model.");
    read_field(d, "regressors", c.data_model.regressors, "data_model.");
    read_field(d, "interior_cuts", c.data_model.interior_cuts, "data_model.");
    std::vector<double> domain{c.data_model.domain.lo, c.data_model.domain.hi};
    read_field(d, "domain", domain, "data_model.");
    if (domain.size() != 2) fail(ErrorKind::parse_error, "field 'data_model.domain' must be [lo, hi]");
    c.data_model.domain = {domain[0], domain[1]};
    read_field(d, "sample_intercepts", c.data_model.sample_intercepts, "data_model.");
  }
  if (j.contains("roster")) {
    const auto& r = j.at("roster");
    if (!r.is_array()) fail(ErrorKind::parse_error, "field 'roster' must be an array");
    c.roster.clear();
    for (const auto& m : r) {
      if (!m.is_object()) fail(ErrorKind::parse_error, "field 'roster[]' entries must be objects");
      RosterEntry e;
      read_field(m, "name", e.name, "roster[].");
      std::string type;
      read_field(m, "type", type, "roster[].");
      e.kind = kind_from_name(type);
      read_field(m, "hidden", e.hidden, "roster[].");
      read_field(m, "steepness", e.steepness, "roster[].");
      c.roster.push_back(std::move(e));
    }
  }
  read_field(j, "seed", c.seed);
  read_field(j, "workers", c.workers);
  try {
    c.validate();
  } catch (const Error& e) {
    fail(ErrorKind::parse_error, e.what());
  }
  return c;
}

double excess_mse(double test_mse, double noise_sd) { return test_mse - noise_sd * noise_sd; }

SimulationRecord run_simulation(const ExperimentConfig& config, std::size_t sim_index) {
  config.validate();
  require(sim_index < config.num_simulations, ErrorKind::invalid_argument, "sim_index out of range");

  SimulationRecord record;
  record.sim = sim_index;
  const RandomSource sim_rng = RandomSource(config.seed).derive("sim/" + std::to_string(sim_index));
  RandomSource model_rng = sim_rng.derive("model");
  RandomSource data_rng = sim_rng.derive("data");

  const auto& dm = config.data_model;
  record.data_model = sample_random_model(dm.contexts, dm.regressors, dm.interior_cuts, dm.domain, model_rng,
                                          dm.sample_intercepts);
  const LabeledDataset data =
      generate_dataset(*record.data_model, config.dataset_size, config.noise_sd, config.split, data_rng);

  for (const auto& entry : config.roster) {
    ModelOutcome outcome;
    outcome.name = entry.name;
    const ArchSpec arch = config.arch_for(entry);
    outcome.architecture = describe(arch);
    outcome.dataset_checksum = data.checksum();
    try {
      if (entry.kind == ModelKind::sctxtnn_constructed) {
        auto report = construct_exact(*record.data_model, regressor_box(data));
        outcome.final_network = Network(std::move(report.params), GateMode::exact());
        outcome.architecture += " constructed";
      } else {
        RandomSource init_rng = sim_rng.derive("init/" + entry.name);
        auto trained = train(arch, data, config.epochs, config.adam, init_rng);
        outcome.train_mse = std::move(trained.train_mse);
        outcome.validation_mse = std::move(trained.validation_mse);
        outcome.final_network = std::move(trained.final_network);
      }
      outcome.param_count = outcome.final_network->param_count();
      outcome.test_mse = evaluate_mse(*outcome.final_network, data.test());
      if (!std::isfinite(outcome.test_mse)) {
        throw Error(ErrorKind::non_finite_loss, "test MSE is not finite");
      }
      outcome.excess_mse = excess_mse(outcome.test_mse, config.noise_sd);
    } catch (const Error& e) {
      outcome.valid = false;
      outcome.error = e.what();
      record.valid = false;
      if (record.error.empty()) record.error = entry.name + ": " + e.what();
    }
    record.models.push_back(std::move(outcome));
  }
  return record;
}

double quantile_type7(std::vector<double> values, double p) {
  require(!values.empty(), ErrorKind::invalid_argument, "quantile of an empty set");
  require(p >= 0.0 && p <= 1.0, ErrorKind::invalid_argument, "quantile level must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

QuantileSummary summarize_values(std::span<const double> values) {
  require(!values.empty(), ErrorKind::no_valid_records, "nothing to summarize");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  QuantileSummary s;
  s.n = v.size();
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  s.min = v.front();
  s.max = v.back();
  s.q1 = quantile_type7(v, 0.25);
  s.median = quantile_type7(v, 0.5);
  s.q3 = quantile_type7(v, 0.75);
  return s;
}

SummaryStats summarize(std::span<const SimulationRecord> input) {
  // fixed fold order regardless of how the caller ordered the records
  std::vector<const SimulationRecord*> records;
  for (const auto& r : input) records.push_back(&r);
  std::sort(records.begin(), records.end(),
            [](const SimulationRecord* a, const SimulationRecord* b) { return a->sim < b->sim; });

  SummaryStats stats;
  const SimulationRecord* first_valid = nullptr;
  for (const auto* r : records) {
    if (r->valid) {
      ++stats.n_valid;
      if (first_valid == nullptr) first_valid = r;
    } else {
      ++stats.n_invalid;
    }
  }
  require(first_valid != nullptr, ErrorKind::no_valid_records, "no valid simulation records");

  for (std::size_t m = 0; m < first_valid->models.size(); ++m) {
    ModelSummary ms;
    ms.name = first_valid->models[m].name;
    std::vector<double> excess;
    const std::size_t epochs = first_valid->models[m].train_mse.size();
    ms.mean_train_curve.assign(epochs, 0.0);
    ms.mean_validation_curve.assign(epochs, 0.0);
    for (const auto* r : records) {
      if (!r->valid) continue;
      require(r->models.size() == first_valid->models.size() && r->models[m].name == ms.name,
              ErrorKind::invalid_argument, "records disagree on the model roster");
      const auto& o = r->models[m];
      excess.push_back(o.excess_mse);
      require(o.train_mse.size() == epochs && o.validation_mse.size() == epochs, ErrorKind::invalid_argument,
              "records disagree on the number of epochs");
      for (std::size_t e = 0; e < epochs; ++e) {
        ms.mean_train_curve[e] += o.train_mse[e];
        ms.mean_validation_curve[e] += o.validation_mse[e];
      }
    }
    const double n = static_cast<double>(excess.size());
    for (std::size_t e = 0; e < epochs; ++e) {
      ms.mean_train_curve[e] /= n;
      ms.mean_validation_curve[e] /= n;
    }
    ms.excess = summarize_values(excess);
    stats.models.push_back(std::move(ms));
  }
  return stats;
}

ExperimentResult run_experiment(const ExperimentConfig& config, std::size_t workers) {
  config.validate();
  if (workers == 0) workers = config.workers;
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, config.num_simulations);

  ExperimentResult result;
  result.records.resize(config.num_simulations);
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i = next++; i < config.num_simulations; i = next++) {
      try {
        result.records[i] = run_simulation(config, i);
      } catch (const std::exception& e) {
        SimulationRecord failed;
        failed.sim = i;
        failed.valid = false;
        failed.error = e.what();
        result.records[i] = std::move(failed);
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  result.summary = summarize(result.records);
  return result;
}

void write_results_csv(std::ostream& out, std::span<const SimulationRecord> records) {
  out << "sim,model,test_mse,excess_mse\n";
  for (const auto& r : records) {
    if (!r.valid) continue;
    for (const auto& m : r.models) {
      out << r.sim << ',' << m.name << ',' << format_double(m.test_mse) << ',' << format_double(m.excess_mse) << '\n';
    }
  }
}

void write_curves_csv(std::ostream& out, const SummaryStats& summary) {
  out << "model,epoch,mean_train_mse,mean_val_mse\n";
  for (const auto& m : summary.models) {
    for (std::size_t e = 0; e < m.mean_train_curve.size(); ++e) {
      out << m.name << ',' << (e + 1) << ',' << format_double(m.mean_train_curve[e]) << ','
          << format_double(m.mean_validation_curve[e]) << '\n';
    }
  }
}

nlohmann::ordered_json summary_to_json(const SummaryStats& summary) {
  nlohmann::ordered_json models = nlohmann::ordered_json::object();
  for (const auto& m : summary.models) {
    models[m.name] = {{"mean", m.excess.mean}, {"median", m.excess.median}, {"q1", m.excess.q1},
                      {"q3", m.excess.q3},     {"min", m.excess.min},       {"max", m.excess.max},
                      {"n_valid", m.excess.n}};
  }
  return {{"statistic", "excess_mse"},
          {"quantile_rule", "type-7 linear interpolation"},
          {"n_valid", summary.n_valid},
          {"n_invalid", summary.n_invalid},
          {"models", std::move(models)}};
}

void write_experiment_outputs(const std::filesystem::path& dir, const ExperimentConfig& config,
                              const ExperimentResult& result) {
  std::filesystem::create_directories(dir);
  auto open = [&dir](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    require(static_cast<bool>(f), ErrorKind::invalid_argument, "cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("results.csv");
    write_results_csv(f, result.records);
  }
  {
    auto f = open("curves.csv");
    write_curves_csv(f, result.summary);
  }
  {
    auto f = open("summary.json");
    f << summary_to_json(result.summary).dump(2) << '\n';
  }
  {
    auto f = open("config.json");
    f << to_json(config).dump(2) << '\n';
  }
}

}  // namespace sctx
