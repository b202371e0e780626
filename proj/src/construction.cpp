#include "sctx/construction.hpp"

#include <algorithm>
#include <cmath>

#include "sctx/errors.hpp"

namespace sctx {

double sup_abs_linear(std::span<const double> beta, const RegressorDomain& domain) {
  require(beta.size() == domain.dimension(), ErrorKind::dimension_mismatch,
          "sup_abs_linear: coefficient length != domain dimension");
  // A linear functional attains its extremes at box vertices, and each coordinate can be
  // chosen independently, so the largest and smallest values separate per axis.
  double upper = 0.0;
  double lower = 0.0;
  for (std::size_t k = 0; k < beta.size(); ++k) {
    const double a = beta[k] * domain[k].lo;
    const double b = beta[k] * domain[k].hi;
    upper += std::max(a, b);
    lower += std::min(a, b);
  }
  return std::max({upper, -lower, 0.0});
}

ConstructionReport construct_exact(const ContextualLinearModel& model, const RegressorDomain& domain,
                                   SuppressionRule rule) {
  const std::size_t c = model.num_contexts();
  const std::size_t r = model.num_regressors();
  require(domain.dimension() == r, ErrorKind::dimension_mismatch,
          "regressor domain dimension must equal the number of regressors");

  ConstructionReport report;
  auto& p = report.params;
  p = SctxtnnParams::zeros(c, r);

  std::vector<double> delta(r);
  for (std::size_t j = 0; j < c; ++j) {
    const std::size_t odd = 2 * j;  // units 2j-1 and 2j in 1-based numbering
    const std::size_t even = odd + 1;

    // gate = heaviside(z_j - x_p): fires iff x_p < z_j
    const double z = model.lower_cut(j);
    p.ctx_weights[odd] = p.ctx_weights[even] = -1.0;
    p.ctx_biases[odd] = p.ctx_biases[even] = z;

    const auto beta = model.coefficients(j);
    double delta0 = model.intercept(j);
    for (std::size_t k = 0; k < r; ++k) delta[k] = beta[k];
    if (j > 0) {
      const auto prev = model.coefficients(j - 1);
      for (std::size_t k = 0; k < r; ++k) delta[k] -= prev[k];
      delta0 -= model.intercept(j - 1);
    }

    const double margin = std::abs(delta0) + sup_abs_linear(delta, domain);
    for (std::size_t k = 0; k < r; ++k) p.hidden_weights(k, odd) = delta[k];
    p.hidden_biases[odd] = delta0 + margin;
    p.hidden_biases[even] = margin;
    p.out_weights[odd] = 1.0;
    p.out_weights[even] = -1.0;

    for (std::size_t unit : {odd, even}) {
      UnitRecord rec;
      rec.unit = unit;
      rec.pair = j;
      rec.carried_coefficients.resize(r);
      for (std::size_t k = 0; k < r; ++k) rec.carried_coefficients[k] = p.hidden_weights(k, unit);
      rec.carried_intercept = delta0;
      rec.bias = p.hidden_biases[unit];
      rec.bias_margin = margin;
      report.units.push_back(std::move(rec));
    }
  }
  p.out_bias = 0.0;

  if (rule == SuppressionRule::per_unit) {
    for (auto& rec : report.units) {
      rec.suppression_weight = -(rec.bias + sup_abs_linear(rec.carried_coefficients, domain) + 1.0);
    }
  } else {
    double worst = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      worst = std::max(worst, sup_abs_linear(model.coefficients(j), domain) + 2.0 * std::abs(model.intercept(j)));
    }
    for (auto& rec : report.units) rec.suppression_weight = -2.0 * worst;
  }
  for (const auto& rec : report.units) p.gate_injection[rec.unit] = rec.suppression_weight;

  p.validate();
  return report;
}

namespace {

std::vector<double> axis_grid(Interval iv, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = i + 1 == n ? iv.hi : iv.lo + (iv.hi - iv.lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return g;
}

}  // namespace

VerificationResult verify_construction(const SctxtnnParams& params, const ContextualLinearModel& model,
                                       const RegressorDomain& domain, std::size_t grid_density) {
  require(grid_density >= 2, ErrorKind::invalid_argument, "grid_density must be >= 2");
  params.validate();
  const std::size_t r = model.num_regressors();
  require(params.regressors == r && domain.dimension() == r, ErrorKind::dimension_mismatch,
          "params, model and domain disagree on the number of regressors");

  // contextual probes: regular grid, cuts and cuts +- 1e-9 inside T
  const Interval t = model.domain();
  std::vector<double> ctx = axis_grid(t, grid_density);
  for (std::size_t j = 0; j < model.num_contexts(); ++j) {
    const double z = model.lower_cut(j);
    for (double v : {z, z - 1e-9, z + 1e-9}) {
      if (t.contains(v)) ctx.push_back(v);
    }
  }
  ctx.push_back(t.hi - 1e-9);
  std::sort(ctx.begin(), ctx.end());
  ctx.erase(std::unique(ctx.begin(), ctx.end()), ctx.end());

  constexpr double max_points = 4e6;
  std::size_t per_axis = grid_density;
  while (per_axis > 2 && std::pow(static_cast<double>(per_axis), static_cast<double>(r)) *
                                 static_cast<double>(ctx.size()) > max_points) {
    --per_axis;
  }
  std::vector<std::vector<double>> axes;
  for (std::size_t k = 0; k < r; ++k) axes.push_back(axis_grid(domain[k], per_axis));

  VerificationResult result;
  result.min_active_pre_activation = std::numeric_limits<double>::infinity();
  std::vector<double> x(r + 1);
  std::vector<std::size_t> idx(r, 0);
  const GateMode exact = GateMode::exact();
  for (;;) {
    for (std::size_t k = 0; k < r; ++k) x[k] = axes[k][idx[k]];
    double scale = 1.0;
    for (std::size_t k = 0; k < r; ++k) scale += std::abs(x[k]);
    for (double xp : ctx) {
      x[r] = xp;
      const auto out = forward_sctxtnn(params, exact, x);
      const double truth = model.evaluate(x);
      result.max_abs_error = std::max(result.max_abs_error, std::abs(out.output - truth));
      for (std::size_t u = 0; u < params.units(); ++u) {
        if (out.trace.gates[u] == 0.0) {
          result.min_active_pre_activation = std::min(result.min_active_pre_activation, out.trace.pre_activations[u]);
          // rounding of the affine sum may dip a hair below an exact zero
          if (out.trace.pre_activations[u] < -1e-12 * scale * (1.0 + std::abs(params.hidden_biases[u]))) {
            result.active_units_nonnegative = false;
          }
        } else if (out.trace.hidden[u] != 0.0) {
          result.suppressed_units_zero = false;
        }
      }
      ++result.points;
    }
    std::size_t k = 0;
    while (k < r && ++idx[k] == per_axis) idx[k++] = 0;
    if (k == r) break;
  }
  return result;
}

nlohmann::ordered_json to_json(const ConstructionReport& report, const VerificationResult* verification) {
  nlohmann::ordered_json j;
  j["network"] = to_json(Network(report.params, GateMode::exact()));
  auto units = nlohmann::ordered_json::array();
  for (const auto& u : report.units) {
    units.push_back(nlohmann::ordered_json{{"unit", u.unit + 1},
                                           {"pair", u.pair + 1},
                                           {"carried_coefficients", u.carried_coefficients},
                                           {"carried_intercept", u.carried_intercept},
                                           {"bias", u.bias},
                                           {"bias_margin", u.bias_margin},
                                           {"suppression_weight", u.suppression_weight}});
  }
  j["units"] = std::move(units);
  j["max_abs_error"] = report.max_abs_error;
  if (verification != nullptr) {
    j["verification"] = {{"points", verification->points},
                         {"active_units_nonnegative", verification->active_units_nonnegative},
                         {"suppressed_units_zero", verification->suppressed_units_zero},
                         {"min_active_pre_activation", verification->min_active_pre_activation}};
  }
  return j;
}

ConstructionReport report_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("network")) fail(ErrorKind::parse_error, "missing field 'network'");
  const Network net = network_from_json(j.at("network"));
  if (!net.is_sctxtnn()) fail(ErrorKind::parse_error, "field 'network' must be an sctxtnn network");
  ConstructionReport report;
  report.params = net.sctxtnn();
  try {
    if (j.contains("units")) {
      for (const auto& u : j.at("units")) {
        UnitRecord rec;
        rec.unit = u.at("unit").get<std::size_t>() - 1;
        rec.pair = u.at("pair").get<std::size_t>() - 1;
        rec.carried_coefficients = u.at("carried_coefficients").get<std::vector<double>>();
        rec.carried_intercept = u.at("carried_intercept").get<double>();
        rec.bias = u.at("bias").get<double>();
        rec.bias_margin = u.at("bias_margin").get<double>();
        rec.suppression_weight = u.at("suppression_weight").get<double>();
        report.units.push_back(std::move(rec));
      }
    }
    if (j.contains("max_abs_error")) report.max_abs_error = j.at("max_abs_error").get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse_error, std::string("construction report: ") + e.what());
  }
  return report;
}

}  // namespace sctx
