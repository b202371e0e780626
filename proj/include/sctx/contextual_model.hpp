#pragma once

// Ground-truth contextual linear regression: one contextual feature x_p
// selects, through left-closed right-open intervals, which of c linear
// models of the r regressors produces the response.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sctx/core_math.hpp"

namespace sctx {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const noexcept { return lo <= v && v <= hi; }
  bool operator==(const Interval&) const = default;
};

/// Feature layout everywhere: x = (x_1, ..., x_r, x_p), regressors first.
class ContextualLinearModel {
 public:
  ContextualLinearModel(std::vector<double> interior_cuts, Interval domain,
                        std::vector<std::vector<double>> coefficients, std::vector<double> intercepts);

  std::size_t num_contexts() const noexcept { return intercepts_.size(); }
  std::size_t num_regressors() const noexcept { return num_regressors_; }
  std::size_t num_features() const noexcept { return num_regressors_ + 1; }
  const Interval& domain() const noexcept { return domain_; }
  const std::vector<double>& interior_cuts() const noexcept { return interior_cuts_; }

  /// Left end of context j (0-based): domain.lo for j = 0, otherwise interior_cuts[j-1].
  double lower_cut(std::size_t j) const;
  std::span<const double> coefficients(std::size_t j) const { return coefficients_.at(j); }
  double intercept(std::size_t j) const { return intercepts_.at(j); }

  /// 0-based context index of x_p; domain.hi belongs to the last context.
  std::size_t context_of(double x_p) const;

  /// intercept(j) + coefficients(j) . x_hat for j = context_of(x_p).
  double evaluate(std::span<const double> x) const;

  bool operator==(const ContextualLinearModel&) const = default;

 private:
  std::size_t num_regressors_;
  std::vector<double> interior_cuts_;
  Interval domain_;
  std::vector<std::vector<double>> coefficients_;
  std::vector<double> intercepts_;
};

/// Compact box S of the regressor space.
class RegressorDomain {
 public:
  explicit RegressorDomain(std::vector<Interval> bounds);
  /// The same interval on each of r axes.
  static RegressorDomain cube(std::size_t r, Interval side);

  std::size_t dimension() const noexcept { return bounds_.size(); }
  const Interval& operator[](std::size_t k) const { return bounds_.at(k); }
  const std::vector<Interval>& bounds() const noexcept { return bounds_; }
  bool contains(std::span<const double> x_hat) const;

 private:
  std::vector<Interval> bounds_;
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;

  std::size_t total() const noexcept { return train + validation + test; }
  bool operator==(const SplitSizes&) const = default;
};

enum class SplitPart { train, validation, test };

const char* split_label(SplitPart part);

/// Contiguous rows of a dataset.
struct DataSlice {
  std::span<const double> features;  // row-major, dim columns
  std::span<const double> targets;
  std::size_t dim = 0;

  std::size_t size() const noexcept { return targets.size(); }
  std::span<const double> row(std::size_t i) const noexcept { return features.subspan(i * dim, dim); }
};

/// Rows ordered train, then validation, then test.
class LabeledDataset {
 public:
  LabeledDataset(DenseMatrix features, std::vector<double> responses, SplitSizes split);

  std::size_t size() const noexcept { return responses_.size(); }
  std::size_t num_features() const noexcept { return features_.cols(); }
  const DenseMatrix& features() const noexcept { return features_; }
  const std::vector<double>& responses() const noexcept { return responses_; }
  const SplitSizes& split() const noexcept { return split_; }

  SplitPart part_of(std::size_t row) const;
  DataSlice slice(SplitPart part) const;
  DataSlice train() const { return slice(SplitPart::train); }
  DataSlice validation() const { return slice(SplitPart::validation); }
  DataSlice test() const { return slice(SplitPart::test); }
  DataSlice all() const;

  /// FNV-1a over features, responses and split sizes.
  std::uint64_t checksum() const noexcept;

  bool operator==(const LabeledDataset&) const = default;

 private:
  DenseMatrix features_;
  std::vector<double> responses_;
  SplitSizes split_;
};

/// Draws, in this order: n contextual values ~ U(domain), then each
/// regressor column ~ N(0,1), then n noise values ~ N(0, noise_sd^2)
/// (skipped when noise_sd == 0). Rows are split by position.
LabeledDataset generate_dataset(const ContextualLinearModel& model, std::size_t n, double noise_sd,
                                SplitSizes split, RandomSource& rng);

/// Coefficients (context by context) then intercepts, all ~ N(0,1).
/// With sample_intercepts = false the intercepts are zero and no draws are made for them.
ContextualLinearModel sample_random_model(std::size_t c, std::size_t r, std::vector<double> interior_cuts,
                                          Interval domain, RandomSource& rng, bool sample_intercepts = true);

nlohmann::ordered_json to_json(const ContextualLinearModel& model);
ContextualLinearModel model_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const RegressorDomain& domain);
RegressorDomain domain_from_json(const nlohmann::json& j);

/// CSV with header x1..xr,xp,y,split and split in {train,val,test}.
void write_csv(std::ostream& out, const LabeledDataset& data);
/// Rows are regrouped train, val, test, keeping relative order within each part.
LabeledDataset read_dataset_csv(std::istream& in);

/// Shortest round-trip representation used by every text output.
std::string format_double(double v);

}  // namespace sctx
