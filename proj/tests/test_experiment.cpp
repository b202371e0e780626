#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sctx/errors.hpp"
#include "sctx/experiment.hpp"

using namespace sctx;

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.num_simulations = 3;
  c.dataset_size = 120;
  c.split = {40, 40, 40};
  c.epochs = 10;
  c.seed = 99;
  return c;
}

// Order-statistic interpolation with 1-based positions 1 + (n-1)p.
double oracle_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = 1.0 + (static_cast<double>(v.size()) - 1.0) * p;
  const auto below = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(below);
  if (below >= v.size()) return v.back();
  return v[below - 1] * (1.0 - frac) + v[below] * frac;
}

SimulationRecord fake_record(std::size_t sim, std::vector<double> excess, std::size_t epochs = 2) {
  SimulationRecord r;
  r.sim = sim;
  const char* names[] = {"A", "B", "C"};
  for (std::size_t m = 0; m < excess.size(); ++m) {
    ModelOutcome o;
    o.name = names[m];
    o.excess_mse = excess[m];
    o.test_mse = excess[m] + 1e-4;
    o.train_mse.assign(epochs, static_cast<double>(sim + m));
    o.validation_mse.assign(epochs, static_cast<double>(2 * sim + m));
    r.models.push_back(o);
  }
  return r;
}

}  // namespace

TEST_CASE("excess MSE") {
  CHECK(excess_mse(0.0101, 0.01) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(excess_mse(0.37, 0.0) == 0.37);

  // A perfect predictor's test MSE is the empirical noise variance.
  RandomSource rng(1);
  const auto eps = sample_standard_normal(rng, 3000);
  double s = 0.0;
  for (double e : eps) s += (0.01 * e) * (0.01 * e);
  const double bound = 3.0 * 1e-4 * std::sqrt(2.0 / 3000.0);
  CHECK(std::abs(excess_mse(s / 3000.0, 0.01)) < bound);
}

TEST_CASE("quantiles and summaries") {
  const std::vector<double> four{4, 1, 3, 2};
  const auto s = summarize_values(four);
  CHECK(s.median == 2.5);
  CHECK(s.mean == 2.5);
  CHECK(s.q1 == 1.75);
  CHECK(s.q3 == 3.25);
  CHECK(s.min == 1.0);
  CHECK(s.max == 4.0);

  const auto one = summarize_values(std::vector<double>{0.7});
  CHECK((one.mean == 0.7 && one.median == 0.7 && one.min == 0.7 && one.max == 0.7 && one.q1 == 0.7));

  RandomSource rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.next_u64() % 40;
    const auto v = sample_standard_normal(rng, n);
    const auto q = summarize_values(v);
    CHECK(q.q1 == doctest::Approx(oracle_quantile(v, 0.25)).epsilon(1e-12));
    CHECK(q.median == doctest::Approx(oracle_quantile(v, 0.5)).epsilon(1e-12));
    CHECK(q.q3 == doctest::Approx(oracle_quantile(v, 0.75)).epsilon(1e-12));
    CHECK((q.min <= q.q1 && q.q1 <= q.median && q.median <= q.q3 && q.q3 <= q.max));
  }
  CHECK_THROWS_AS(summarize_values(std::vector<double>{}), Error);
}

TEST_CASE("summarize aggregates valid records only") {
  std::vector<SimulationRecord> records{fake_record(0, {1, 10}), fake_record(1, {2, 20}), fake_record(2, {3, 30}),
                                        fake_record(3, {4, 40})};
  records[2].valid = false;
  const auto s = summarize(records);
  CHECK(s.n_valid == 3);
  CHECK(s.n_invalid == 1);
  REQUIRE(s.models.size() == 2);
  CHECK(s.models[0].excess.mean == doctest::Approx(7.0 / 3.0));
  CHECK(s.models[1].excess.median == 20.0);
  CHECK(s.models[0].mean_train_curve == std::vector<double>{4.0 / 3.0, 4.0 / 3.0});

  auto shuffled = records;
  std::reverse(shuffled.begin(), shuffled.end());
  const auto t = summarize(shuffled);
  CHECK(summary_to_json(t) == summary_to_json(s));
  CHECK(t.models[1].mean_validation_curve == s.models[1].mean_validation_curve);

  for (auto& r : records) r.valid = false;
  try {
    summarize(records);
    FAIL("expected no_valid_records");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::no_valid_records);
  }
}

TEST_CASE("simulations are deterministic and share one dataset across models") {
  const auto c = tiny_config();
  const auto a = run_simulation(c, 1);
  const auto b = run_simulation(c, 1);
  REQUIRE(a.valid);
  REQUIRE(a.models.size() == 3);
  std::ostringstream sa, sb;
  write_results_csv(sa, std::vector<SimulationRecord>{a});
  write_results_csv(sb, std::vector<SimulationRecord>{b});
  CHECK(sa.str() == sb.str());
  for (std::size_t m = 0; m < 3; ++m) {
    CHECK(a.models[m].train_mse == b.models[m].train_mse);
    CHECK(a.models[m].dataset_checksum == a.models[0].dataset_checksum);
    CHECK(a.models[m].train_mse.size() == c.epochs);
    CHECK(a.models[m].excess_mse == a.models[m].test_mse - c.noise_sd * c.noise_sd);
  }
  CHECK(a.models[0].param_count == 37);
  CHECK(a.models[1].param_count == 37);
  CHECK(a.models[2].param_count == 67);

  // ranking by test MSE equals ranking by excess MSE
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK((a.models[i].test_mse < a.models[j].test_mse) == (a.models[i].excess_mse < a.models[j].excess_mse));
    }
  }
  CHECK(!(run_simulation(c, 0).models[0].train_mse == a.models[0].train_mse));
  CHECK_THROWS_AS(run_simulation(c, 3), Error);
}

TEST_CASE("untrained pipeline reports the initial network's test MSE") {
  auto c = tiny_config();
  c.epochs = 0;
  c.roster = {{"Small FF", ModelKind::feedforward, {4, 4}, 1.0}};
  const auto rec = run_simulation(c, 2);
  REQUIRE(rec.valid);

  const RandomSource sim = RandomSource(c.seed).derive("sim/2");
  RandomSource model_rng = sim.derive("model"), data_rng = sim.derive("data"), init_rng = sim.derive("init/Small FF");
  const auto model = sample_random_model(3, 1, {-1.0 / 3.0, 1.0 / 3.0}, {-1, 1}, model_rng);
  const auto data = generate_dataset(model, c.dataset_size, c.noise_sd, c.split, data_rng);
  const auto net = init_random(FeedForwardSpec{{2, 4, 4, 1}}, init_rng);
  CHECK(rec.models[0].test_mse == mse(net.predict(data.test()), data.test().targets));
  CHECK(*rec.data_model == model);
}

TEST_CASE("constructed network threads through the pipeline exactly") {
  auto c = tiny_config();
  c.noise_sd = 0.0;
  c.dataset_size = 6000;
  c.split = {1500, 1500, 3000};
  c.roster = {{"constructed", ModelKind::sctxtnn_constructed, {}, 1.0}};
  for (std::size_t sim = 0; sim < c.num_simulations; ++sim) {
    const auto rec = run_simulation(c, sim);
    REQUIRE(rec.valid);
    CHECK(rec.models[0].test_mse < 1e-18);
  }
}

TEST_CASE("experiment runs are order independent") {
  const auto c = tiny_config();
  const auto parallel = run_experiment(c, 3);
  REQUIRE(parallel.records.size() == 3);
  std::vector<SimulationRecord> reversed;
  for (std::size_t i = 3; i-- > 0;) reversed.push_back(run_simulation(c, i));
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& a = parallel.records[i];
    const auto& b = reversed[2 - i];
    CHECK(a.sim == b.sim);
    for (std::size_t m = 0; m < a.models.size(); ++m) {
      CHECK(a.models[m].test_mse == b.models[m].test_mse);
      CHECK(a.models[m].validation_mse == b.models[m].validation_mse);
    }
  }
  std::ostringstream res, cur;
  write_results_csv(res, parallel.records);
  write_curves_csv(cur, parallel.summary);
  const auto lines = [](const std::string& s) { return std::count(s.begin(), s.end(), '\n'); };
  CHECK(lines(res.str()) == 1 + 3 * 3);
  CHECK(res.str().rfind("sim,model,test_mse,excess_mse\n", 0) == 0);
  CHECK(lines(cur.str()) == 1 + 3 * 10);
  CHECK(cur.str().rfind("model,epoch,mean_train_mse,mean_val_mse\n", 0) == 0);
  const auto j = summary_to_json(parallel.summary);
  CHECK(j["models"]["SCtxtNN"]["n_valid"] == 3);
}

TEST_CASE("experiment config JSON") {
  const ExperimentConfig d;
  CHECK(d.num_simulations == 50);
  CHECK(d.epochs == 20000);
  CHECK(d.adam.learning_rate == 0.001);
  CHECK(d.noise_sd == 0.01);
  CHECK(d.split == SplitSizes{1500, 1500, 3000});

  const auto j = nlohmann::json::parse(to_json(d).dump());
  const auto back = experiment_config_from_json(j);
  CHECK(to_json(back) == to_json(d));

  auto bad = j;
  bad["split"]["train"] = "many";
  try {
    experiment_config_from_json(bad);
    FAIL("should throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::parse_error);
    CHECK(std::string(e.what()).find("split.train") != std::string::npos);
  }
  auto mismatch = j;
  mismatch["dataset_size"] = 10;
  CHECK_THROWS_AS(experiment_config_from_json(mismatch), Error);
  auto unknown = j;
  unknown["roster"][0]["type"] = "transformer";
  CHECK_THROWS_AS(experiment_config_from_json(unknown), Error);

  const auto partial = experiment_config_from_json(nlohmann::json{{"epochs", 7}});
  CHECK(partial.epochs == 7);
  CHECK(partial.roster.size() == 3);
}
