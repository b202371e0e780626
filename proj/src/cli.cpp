#include "sctx/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "sctx/construction.hpp"
#include "sctx/errors.hpp"
#include "sctx/experiment.hpp"
#include "sctx/report.hpp"

namespace sctx {

namespace fs = std::filesystem;

namespace {

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

template <typename F>
auto parse_file(const std::string& path, F&& parse) {
  const auto j = load_json(path);
  try {
    return parse(j);
  } catch (const Error& e) {
    throw InputError(path + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path.string());
  f << text;
}

struct Options {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  bool force = false;
  int verbosity = 0;
};

ExperimentConfig load_config(const Options& o) {
  ExperimentConfig config =
      o.config_path.empty() ? ExperimentConfig{} : parse_file(o.config_path, experiment_config_from_json);
  if (o.seed) config.seed = *o.seed;
  if (o.workers) config.workers = *o.workers;
  return config;
}

void prepare_outdir(const Options& o, const char* guarded_file) {
  if (o.out.empty()) throw InputError("--out is required");
  fs::create_directories(o.out);
  if (!o.force && fs::exists(fs::path(o.out) / guarded_file)) {
    throw InputError((fs::path(o.out) / guarded_file).string() + " exists; pass --force to overwrite");
  }
}

int report_verification(const VerificationResult& v, std::ostream& out) {
  out << "max_abs_error " << format_double(v.max_abs_error) << " over " << v.points << " points\n";
  out << "active units nonnegative: " << (v.active_units_nonnegative ? "yes" : "no")
      << ", suppressed units zero: " << (v.suppressed_units_zero ? "yes" : "no") << '\n';
  return v.passed() ? exit_ok : exit_failure;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Contextual neural networks for contextual linear regression", "sctxtnn"};
  Options o;
  bool print_default = false;
  app.add_flag("--print-default-config", print_default, "Print the default experiment configuration and exit");
  app.require_subcommand(0, 1);

  std::string model_path, domain_path, report_path, data_path, model_name, suppression = "per-unit";
  std::size_t grid = 200;
  std::size_t sim_index = 0;
  std::optional<std::size_t> epochs;

  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "Experiment configuration JSON");
    sub->add_option("--seed", o.seed, "Override the master seed");
    sub->add_flag("-v,--verbose", o.verbosity, "More output");
  };

  auto* construct = app.add_subcommand("construct", "Build the exact network for a model on S x T");
  construct->add_option("model", model_path, "Model JSON")->required();
  construct->add_option("domain", domain_path, "Regressor domain JSON {\"bounds\": [[lo, hi], ...]}")->required();
  construct->add_option("--out", o.out, "Report JSON path")->required();
  construct->add_option("--grid", grid, "Verification grid points per axis")->check(CLI::Range(2, 100000));
  construct->add_option("--suppression", suppression, "per-unit or global")
      ->check(CLI::IsMember({"per-unit", "global"}));

  auto* verify = app.add_subcommand("verify-construction", "Re-check a construction report against its model");
  verify->add_option("report", report_path, "Construction report JSON")->required();
  verify->add_option("model", model_path, "Model JSON")->required();
  verify->add_option("domain", domain_path, "Regressor domain JSON")->required();
  verify->add_option("--grid", grid, "Verification grid points per axis")->check(CLI::Range(2, 100000));

  auto* gen = app.add_subcommand("gen-data", "Sample one simulation's data model and dataset");
  add_common(gen);
  gen->add_option("--out", o.out, "Output directory")->required();
  gen->add_option("--sim", sim_index, "Simulation index");
  gen->add_flag("--force", o.force, "Overwrite existing files");

  auto* train_cmd = app.add_subcommand("train", "Train one roster model on a dataset CSV");
  add_common(train_cmd);
  train_cmd->add_option("--data", data_path, "Dataset CSV (x1..xr,xp,y,split)")->required();
  train_cmd->add_option("--model", model_name, "Roster entry name")->required();
  train_cmd->add_option("--out", o.out, "Output directory")->required();
  train_cmd->add_option("--epochs", epochs, "Override the number of epochs");
  train_cmd->add_flag("--force", o.force, "Overwrite existing files");

  auto* experiment = app.add_subcommand("experiment", "Run the simulation study");
  add_common(experiment);
  experiment->add_option("--out", o.out, "Output directory")->required();
  experiment->add_option("--workers", o.workers, "Worker threads (0 = all cores)");
  experiment->add_flag("--force", o.force, "Overwrite existing results");

  auto* report = app.add_subcommand("report", "Render SVG figures from experiment outputs");
  report->add_option("dir", o.out, "Experiment output directory");
  report->add_option("--out", o.out, "Experiment output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_input_error;
  }

  try {
    if (print_default) {
      out << to_json(ExperimentConfig{}).dump(2) << '\n';
      return exit_ok;
    }

    if (construct->parsed()) {
      const auto model = parse_file(model_path, model_from_json);
      const auto domain = parse_file(domain_path, domain_from_json);
      const auto rule = suppression == "global" ? SuppressionRule::shared_global : SuppressionRule::per_unit;
      ConstructionReport rep;
      try {
        rep = construct_exact(model, domain, rule);
      } catch (const Error& e) {
        throw InputError(e.what());
      }
      const auto v = verify_construction(rep.params, model, domain, grid);
      rep.max_abs_error = v.max_abs_error;
      write_text(o.out, to_json(rep, &v).dump(2) + "\n");
      return report_verification(v, out);
    }

    if (verify->parsed()) {
      const auto rep = parse_file(report_path, report_from_json);
      const auto model = parse_file(model_path, model_from_json);
      const auto domain = parse_file(domain_path, domain_from_json);
      VerificationResult v;
      try {
        v = verify_construction(rep.params, model, domain, grid);
      } catch (const Error& e) {
        throw InputError(e.what());
      }
      return report_verification(v, out);
    }

    if (gen->parsed()) {
      prepare_outdir(o, "data.csv");
      const auto config = load_config(o);
      if (sim_index >= config.num_simulations) throw InputError("--sim must be below num_simulations");
      const RandomSource sim_rng = RandomSource(config.seed).derive("sim/" + std::to_string(sim_index));
      RandomSource model_rng = sim_rng.derive("model");
      RandomSource data_rng = sim_rng.derive("data");
      const auto& dm = config.data_model;
      const auto model =
          sample_random_model(dm.contexts, dm.regressors, dm.interior_cuts, dm.domain, model_rng, dm.sample_intercepts);
      const auto data = generate_dataset(model, config.dataset_size, config.noise_sd, config.split, data_rng);
      write_text(fs::path(o.out) / "model.json", to_json(model).dump(2) + "\n");
      std::ostringstream csv;
      write_csv(csv, data);
      write_text(fs::path(o.out) / "data.csv", csv.str());
      if (o.verbosity > 0) out << "wrote " << data.size() << " rows to " << o.out << '\n';
      return exit_ok;
    }

    if (train_cmd->parsed()) {
      prepare_outdir(o, "curve.csv");
      auto config = load_config(o);
      if (epochs) config.epochs = *epochs;
      std::ifstream in(data_path);
      if (!in) throw InputError("cannot open " + data_path);
      LabeledDataset data = [&] {
        try {
          return read_dataset_csv(in);
        } catch (const Error& e) {
          throw InputError(data_path + ": " + e.what());
        }
      }();
      const RosterEntry* entry = nullptr;
      for (const auto& e : config.roster) {
        if (e.name == model_name) entry = &e;
      }
      if (entry == nullptr) throw InputError("no roster entry named '" + model_name + "'");
      if (entry->kind == ModelKind::sctxtnn_constructed) throw InputError("constructed entries are not trainable");
      if (data.num_features() != config.data_model.regressors + 1) {
        throw InputError("dataset feature count does not match the configured number of regressors");
      }
      RandomSource rng = RandomSource(config.seed).derive("train/" + model_name);
      std::optional<TrainingRecord> trained;
      try {
        trained.emplace(train(config.arch_for(*entry), data, config.epochs, config.adam, rng));
      } catch (const NonFiniteLoss& e) {
        err << "error: " << e.what() << '\n';
        return exit_failure;
      }
      const TrainingRecord& rec = *trained;
      std::ostringstream csv;
      csv << "epoch,train_mse,val_mse\n";
      for (std::size_t e = 0; e < rec.train_mse.size(); ++e) {
        csv << (e + 1) << ',' << format_double(rec.train_mse[e]) << ',' << format_double(rec.validation_mse[e])
            << '\n';
      }
      write_text(fs::path(o.out) / "curve.csv", csv.str());
      write_text(fs::path(o.out) / "network.json", to_json(rec.final_network).dump(2) + "\n");
      const double test = data.split().test > 0 ? evaluate_mse(rec.final_network, data.test()) : 0.0;
      out << "test_mse " << format_double(test) << '\n';
      return exit_ok;
    }

    if (experiment->parsed()) {
      prepare_outdir(o, "results.csv");
      const auto config = load_config(o);
      const auto result = [&] {
        try {
          return std::optional<ExperimentResult>(run_experiment(config));
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::no_valid_records) throw;
          return std::optional<ExperimentResult>();
        }
      }();
      if (!result) {
        err << "error: every simulation failed\n";
        return exit_failure;
      }
      write_experiment_outputs(o.out, config, *result);
      if (o.verbosity > 0 || result->summary.n_invalid > 0) {
        out << result->summary.n_valid << " valid, " << result->summary.n_invalid << " invalid simulations\n";
      }
      for (const auto& m : result->summary.models) {
        out << m.name << ": mean excess MSE " << format_double(m.excess.mean) << ", median "
            << format_double(m.excess.median) << '\n';
      }
      return exit_ok;
    }

    if (report->parsed()) {
      if (o.out.empty()) throw InputError("report needs the experiment output directory");
      try {
        write_report(o.out);
      } catch (const Error& e) {
        throw InputError(e.what());
      }
      return exit_ok;
    }

    out << app.help();
    return exit_input_error;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return exit_input_error;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::parse_error || e.kind() == ErrorKind::invalid_argument ? exit_input_error
                                                                                          : exit_failure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_failure;
  }
}

}  // namespace sctx
