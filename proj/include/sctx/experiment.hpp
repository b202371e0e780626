#pragma once

// Monte-Carlo comparison of contextual and feed-forward networks on
// synthetic contextual regression data.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sctx/contextual_model.hpp"
#include "sctx/networks.hpp"
#include "sctx/training.hpp"

namespace sctx {

enum class ModelKind {
  sctxtnn,              // random init, smooth gates, trained
  feedforward,          // random init, trained
  sctxtnn_constructed,  // exact construction from the generating model, not trained
};

struct RosterEntry {
  std::string name;
  ModelKind kind = ModelKind::sctxtnn;
  std::vector<std::size_t> hidden;  // feed-forward hidden layer widths
  double steepness = 1.0;           // sigmoid gates of the trained contextual network
};

struct DataModelConfig {
  std::size_t contexts = 3;
  std::size_t regressors = 1;
  std::vector<double> interior_cuts{-1.0 / 3.0, 1.0 / 3.0};
  Interval domain{-1.0, 1.0};
  bool sample_intercepts = true;
};

struct ExperimentConfig {
  std::size_t num_simulations = 50;
  std::size_t dataset_size = 6000;
  SplitSizes split{1500, 1500, 3000};
  std::size_t epochs = 20000;
  AdamConfig adam{};
  double noise_sd = 0.01;
  DataModelConfig data_model{};
  std::vector<RosterEntry> roster{
      {"SCtxtNN", ModelKind::sctxtnn, {}, 1.0},
      {"Small FF", ModelKind::feedforward, {4, 4}, 1.0},
      {"Large FF", ModelKind::feedforward, {6, 6}, 1.0},
  };
  std::uint64_t seed = 20260101;
  std::size_t workers = 0;  // 0: hardware concurrency

  /// Throws invalid_argument on inconsistent settings.
  void validate() const;
  ArchSpec arch_for(const RosterEntry& entry) const;
};

nlohmann::ordered_json to_json(const ExperimentConfig& config);
/// Missing fields keep their defaults; wrong types or values are parse errors.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

struct ModelOutcome {
  std::string name;
  std::string architecture;
  std::size_t param_count = 0;
  std::vector<double> train_mse;
  std::vector<double> validation_mse;
  std::optional<Network> final_network;
  double test_mse = 0.0;
  double excess_mse = 0.0;
  std::uint64_t dataset_checksum = 0;  // of the dataset this model consumed
  bool valid = true;
  std::string error;
};

struct SimulationRecord {
  std::size_t sim = 0;
  std::optional<ContextualLinearModel> data_model;
  std::vector<ModelOutcome> models;
  bool valid = true;
  std::string error;
};

double excess_mse(double test_mse, double noise_sd);

/// Random streams: master.derive("sim/<i>") then "model", "data" and
/// "init/<roster name>" below it.
SimulationRecord run_simulation(const ExperimentConfig& config, std::size_t sim_index);

struct QuantileSummary {
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t n = 0;
};

/// Linear interpolation between order statistics (type 7): h = (n-1)p.
double quantile_type7(std::vector<double> values, double p);
QuantileSummary summarize_values(std::span<const double> values);

struct ModelSummary {
  std::string name;
  QuantileSummary excess;
  std::vector<double> mean_train_curve;
  std::vector<double> mean_validation_curve;
};

struct SummaryStats {
  std::vector<ModelSummary> models;  // roster order
  std::size_t n_valid = 0;
  std::size_t n_invalid = 0;
};

/// Aggregates valid records only; throws no_valid_records if there are none.
SummaryStats summarize(std::span<const SimulationRecord> records);

struct ExperimentResult {
  std::vector<SimulationRecord> records;  // sim_index order
  SummaryStats summary;
};

/// Runs every simulation on `workers` threads (config.workers when 0 here).
ExperimentResult run_experiment(const ExperimentConfig& config, std::size_t workers = 0);

/// results.csv, curves.csv, summary.json and config.json.
void write_results_csv(std::ostream& out, std::span<const SimulationRecord> records);
void write_curves_csv(std::ostream& out, const SummaryStats& summary);
nlohmann::ordered_json summary_to_json(const SummaryStats& summary);
void write_experiment_outputs(const std::filesystem::path& dir, const ExperimentConfig& config,
                              const ExperimentResult& result);

}  // namespace sctx
