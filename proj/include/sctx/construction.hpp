#pragma once

// Exact representation of a contextual linear regression model by a
// heaviside-gated contextual network on a compact box S x T.
//
// Hidden units come in pairs. Pair j carries the difference f^j - f^{j-1}
// (pair 1 carries f^1): the odd unit computes the slope difference plus a
// bias that keeps it nonnegative on S, the even unit holds the bias minus
// the intercept difference, and output weights (+1, -1) cancel the offset.
// Both gates of pair j fire (value 1) exactly when x_p < z_j, and the
// negative gate injection then clamps the pair to zero, so only pairs
// 1..context(x_p) contribute and the sum telescopes to f^context(x_p).

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "sctx/contextual_model.hpp"
#include "sctx/networks.hpp"

namespace sctx {

/// Supremum of |beta . x| over the box, which is attained at one of its vertices.
double sup_abs_linear(std::span<const double> beta, const RegressorDomain& domain);

enum class SuppressionRule {
  /// -(b_j + sup|w_j . x| + 1) per hidden unit; always sufficient.
  per_unit,
  /// One shared constant -2 max_i (sup|beta^i . x| + 2|beta^i_0|); can fail
  /// for difference units whose slope or intercept gap exceeds the maxima.
  shared_global,
};

struct UnitRecord {
  std::size_t unit = 0;                      // 0-based hidden unit index
  std::size_t pair = 0;                      // 0-based context the pair belongs to
  std::vector<double> carried_coefficients;  // column of hidden_weights
  double carried_intercept = 0.0;            // intercept difference the pair carries
  double bias = 0.0;
  double bias_margin = 0.0;                  // |d beta_0| + sup|d beta . x|
  double suppression_weight = 0.0;
};

struct ConstructionReport {
  SctxtnnParams params;
  std::vector<UnitRecord> units;
  double max_abs_error = 0.0;  // filled by verification
};

ConstructionReport construct_exact(const ContextualLinearModel& model, const RegressorDomain& domain,
                                   SuppressionRule rule = SuppressionRule::per_unit);

struct VerificationResult {
  double max_abs_error = 0.0;
  std::size_t points = 0;
  /// Every unit whose gate is 0 had a pre-activation >= -tolerance (ReLU acts affinely).
  bool active_units_nonnegative = true;
  /// Every unit whose gate is 1 had hidden activation exactly 0.
  bool suppressed_units_zero = true;
  /// Smallest pre-activation seen on a gate-0 unit.
  double min_active_pre_activation = 0.0;

  bool passed(double tolerance = 1e-9) const noexcept {
    return max_abs_error < tolerance && active_units_nonnegative && suppressed_units_zero;
  }
};

/// Compares the EXACT-mode network against the model on a regular grid of
/// grid_density points per regressor axis (reduced for r > 1 so the total
/// stays under ~4e6 points, never below the 2^r vertices) times a contextual
/// grid of grid_density points plus every cut point and cut +- 1e-9.
VerificationResult verify_construction(const SctxtnnParams& params, const ContextualLinearModel& model,
                                       const RegressorDomain& domain, std::size_t grid_density = 200);

nlohmann::ordered_json to_json(const ConstructionReport& report, const VerificationResult* verification = nullptr);
ConstructionReport report_from_json(const nlohmann::json& j);

}  // namespace sctx
