#include <doctest.h>

#include <sstream>

#include "sctx/cli.hpp"
#include "sctx/construction.hpp"
#include "sctx/experiment.hpp"
#include "test_support.hpp"

using namespace sctx;
using namespace sctx::testing;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "sctxtnn");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string smoke_config(const std::filesystem::path& dir) {
  auto c = ExperimentConfig{};
  c.num_simulations = 2;
  c.epochs = 10;
  c.dataset_size = 90;
  c.split = {30, 30, 30};
  const auto path = dir / "smoke.json";
  spit(path, to_json(c).dump(2));
  return path.string();
}

}  // namespace

TEST_CASE("default configuration is printable and parseable") {
  const auto r = cli({"--print-default-config"});
  CHECK(r.code == exit_ok);
  const auto c = experiment_config_from_json(nlohmann::json::parse(r.out));
  CHECK(c.num_simulations == 50);
  CHECK(c.roster.size() == 3);
  CHECK(cli({"no-such-command"}).code == exit_input_error);
}

TEST_CASE("construct and verify-construction") {
  const auto dir = fresh_dir("cli_construct");
  RandomSource rng(3);
  const auto model = sample_random_model(3, 1, {-1.0 / 3.0, 1.0 / 3.0}, {-1, 1}, rng);
  spit(dir / "model.json", to_json(model).dump(2));
  spit(dir / "domain.json", to_json(RegressorDomain::cube(1, {-4, 4})).dump());

  const auto ok = cli({"construct", (dir / "model.json").string(), (dir / "domain.json").string(), "--out",
                       (dir / "report.json").string()});
  CHECK(ok.code == exit_ok);
  const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(report["max_abs_error"].get<double>() < 1e-9);
  CHECK(report["units"].size() == 6);

  CHECK(cli({"verify-construction", (dir / "report.json").string(), (dir / "model.json").string(),
             (dir / "domain.json").string()})
            .code == exit_ok);

  auto tampered = report;
  tampered["network"]["params"][tampered["network"]["params"].size() - 3] = 1.5;
  spit(dir / "tampered.json", tampered.dump());
  CHECK(cli({"verify-construction", (dir / "tampered.json").string(), (dir / "model.json").string(),
             (dir / "domain.json").string()})
            .code == exit_failure);

  spit(dir / "broken.json", "{\"c\": 3, \"r\": 1, ");
  const auto broken = cli({"construct", (dir / "broken.json").string(), (dir / "domain.json").string(), "--out",
                           (dir / "x.json").string()});
  CHECK(broken.code == exit_input_error);
  CHECK(broken.err.find("broken.json") != std::string::npos);

  auto missing = to_json(model);
  missing.erase("coefficients");
  spit(dir / "missing.json", missing.dump());
  const auto miss = cli({"construct", (dir / "missing.json").string(), (dir / "domain.json").string(), "--out",
                         (dir / "x.json").string()});
  CHECK(miss.code == exit_input_error);
  CHECK(miss.err.find("coefficients") != std::string::npos);

  // the shared suppression constant fails on opposing slopes
  const ContextualLinearModel opposing({0.0}, {-1, 1}, {{1.0}, {-1.0}}, {0.0, 0.0});
  spit(dir / "opposing.json", to_json(opposing).dump());
  spit(dir / "unit.json", to_json(RegressorDomain::cube(1, {-1, 1})).dump());
  CHECK(cli({"construct", (dir / "opposing.json").string(), (dir / "unit.json").string(), "--out",
             (dir / "shared.json").string(), "--suppression", "global"})
            .code == exit_failure);
}

TEST_CASE("experiment and report") {
  const auto dir = fresh_dir("cli_experiment");
  const auto config = smoke_config(dir);
  const auto out = dir / "run";
  const auto r = cli({"experiment", "--config", config, "--out", out.string(), "--workers", "2"});
  CAPTURE(r.err);
  REQUIRE(r.code == exit_ok);
  for (const char* f : {"results.csv", "curves.csv", "summary.json", "config.json"}) {
    CHECK(std::filesystem::exists(out / f));
  }
  CHECK(slurp(out / "results.csv").rfind("sim,model,test_mse,excess_mse\n", 0) == 0);
  CHECK(slurp(out / "curves.csv").rfind("model,epoch,mean_train_mse,mean_val_mse\n", 0) == 0);
  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  for (const char* key : {"mean", "median", "q1", "q3", "min", "max", "n_valid"}) {
    CHECK(summary["models"]["Large FF"].contains(key));
  }

  CHECK(cli({"experiment", "--config", config, "--out", out.string()}).code == exit_input_error);
  const auto first = slurp(out / "results.csv");
  REQUIRE(cli({"experiment", "--config", config, "--out", out.string(), "--force"}).code == exit_ok);
  CHECK(slurp(out / "results.csv") == first);

  const auto reseeded = dir / "reseeded";
  REQUIRE(cli({"experiment", "--config", config, "--out", reseeded.string(), "--seed", "7"}).code == exit_ok);
  CHECK(slurp(reseeded / "results.csv") != first);
  auto a = nlohmann::json::parse(slurp(out / "config.json"));
  auto b = nlohmann::json::parse(slurp(reseeded / "config.json"));
  CHECK(b["seed"] == 7);
  a.erase("seed");
  b.erase("seed");
  a.erase("workers");
  b.erase("workers");
  CHECK(a == b);

  REQUIRE(cli({"report", out.string()}).code == exit_ok);
  const auto box = slurp(out / "excess_box.svg");
  CHECK(well_formed_xml(box));
  CHECK(well_formed_xml(slurp(out / "loss_curves.svg")));
  for (const auto& [name, stats] : summary["models"].items()) {
    const auto at = box.find("data-model=\"" + name + "\"");
    REQUIRE(at != std::string::npos);
    const auto tag = box.substr(at, box.find('>', at) - at);
    CHECK(tag.find("data-median=\"" + format_double(stats["median"].get<double>()) + "\"") != std::string::npos);
    CHECK(tag.find("data-min=\"" + format_double(stats["min"].get<double>()) + "\"") != std::string::npos);
    CHECK(tag.find("data-max=\"" + format_double(stats["max"].get<double>()) + "\"") != std::string::npos);
  }

  const auto empty = fresh_dir("cli_empty_report");
  spit(empty / "results.csv", "");
  spit(empty / "curves.csv", "model,epoch,mean_train_mse,mean_val_mse\nA,1,1,1\n");
  CHECK(cli({"report", empty.string()}).code == exit_input_error);
  CHECK(cli({"report", (dir / "nowhere").string()}).code == exit_input_error);
}

TEST_CASE("gen-data and train") {
  const auto dir = fresh_dir("cli_train");
  const auto config = smoke_config(dir);
  REQUIRE(cli({"gen-data", "--config", config, "--out", dir.string(), "--sim", "1"}).code == exit_ok);
  const auto data = slurp(dir / "data.csv");
  CHECK(data.rfind("x1,xp,y,split\n", 0) == 0);
  CHECK(std::count(data.begin(), data.end(), '\n') == 91);
  CHECK(cli({"gen-data", "--config", config, "--out", dir.string()}).code == exit_input_error);

  const auto r = cli({"train", "--config", config, "--data", (dir / "data.csv").string(), "--model", "SCtxtNN",
                      "--out", (dir / "trained").string(), "--epochs", "25"});
  CAPTURE(r.err);
  REQUIRE(r.code == exit_ok);
  CHECK(r.out.find("test_mse") != std::string::npos);
  const auto curve = slurp(dir / "trained" / "curve.csv");
  CHECK(curve.rfind("epoch,train_mse,val_mse\n", 0) == 0);
  CHECK(std::count(curve.begin(), curve.end(), '\n') == 26);
  CHECK(nlohmann::json::parse(slurp(dir / "trained" / "network.json"))["type"] == "sctxtnn");
  CHECK(cli({"train", "--config", config, "--data", (dir / "data.csv").string(), "--model", "nope", "--out",
             (dir / "t2").string()})
            .code == exit_input_error);
}
