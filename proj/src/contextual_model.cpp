#include "sctx/contextual_model.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "sctx/errors.hpp"

namespace sctx {

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double parse_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) fail(ErrorKind::parse_error, what + ": not a number: '" + text + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

ContextualLinearModel::ContextualLinearModel(std::vector<double> interior_cuts, Interval domain,
                                             std::vector<std::vector<double>> coefficients,
                                             std::vector<double> intercepts)
    : num_regressors_(coefficients.empty() ? 0 : coefficients.front().size()),
      interior_cuts_(std::move(interior_cuts)),
      domain_(domain),
      coefficients_(std::move(coefficients)),
      intercepts_(std::move(intercepts)) {
  const std::size_t c = intercepts_.size();
  require(c >= 1, ErrorKind::invalid_argument, "need at least one context");
  require(coefficients_.size() == c, ErrorKind::dimension_mismatch,
          "one coefficient vector per context required");
  require(num_regressors_ >= 1, ErrorKind::invalid_argument, "need at least one regressor");
  for (const auto& beta : coefficients_) {
    require(beta.size() == num_regressors_, ErrorKind::dimension_mismatch,
            "coefficient vectors must share one length");
    require(all_finite(beta), ErrorKind::invalid_argument, "coefficients must be finite");
  }
  require(all_finite(intercepts_), ErrorKind::invalid_argument, "intercepts must be finite");
  require(std::isfinite(domain_.lo) && std::isfinite(domain_.hi) && domain_.lo < domain_.hi,
          ErrorKind::invalid_range, "context domain needs finite lo < hi");
  require(interior_cuts_.size() + 1 == c, ErrorKind::invalid_cuts,
          "expected " + std::to_string(c - 1) + " interior cuts, got " +
              std::to_string(interior_cuts_.size()));
  double prev = domain_.lo;
  for (double z : interior_cuts_) {
    require(std::isfinite(z) && prev < z, ErrorKind::invalid_cuts,
            "interior cuts must be strictly increasing inside the domain");
    prev = z;
  }
  require(prev < domain_.hi, ErrorKind::invalid_cuts, "interior cuts must lie strictly inside the domain");
}

double ContextualLinearModel::lower_cut(std::size_t j) const {
  require(j < num_contexts(), ErrorKind::invalid_argument, "context index out of range");
  return j == 0 ? domain_.lo : interior_cuts_[j - 1];
}

std::size_t ContextualLinearModel::context_of(double x_p) const {
  require(domain_.contains(x_p), ErrorKind::out_of_domain,
          "contextual value " + format_double(x_p) + " outside [" + format_double(domain_.lo) + ", " +
              format_double(domain_.hi) + "]");
  // number of interior cuts <= x_p
  return static_cast<std::size_t>(std::upper_bound(interior_cuts_.begin(), interior_cuts_.end(), x_p) -
                                  interior_cuts_.begin());
}

double ContextualLinearModel::evaluate(std::span<const double> x) const {
  require(x.size() == num_features(), ErrorKind::dimension_mismatch,
          "feature vector must have r + 1 entries");
  const std::size_t j = context_of(x[num_regressors_]);
  return intercepts_[j] + dot(coefficients_[j], x.first(num_regressors_));
}

RegressorDomain::RegressorDomain(std::vector<Interval> bounds) : bounds_(std::move(bounds)) {
  require(!bounds_.empty(), ErrorKind::invalid_argument, "regressor domain needs at least one axis");
  for (const auto& b : bounds_) {
    require(std::isfinite(b.lo) && std::isfinite(b.hi) && b.lo < b.hi, ErrorKind::invalid_range,
            "regressor bounds need finite lo < hi");
  }
}

RegressorDomain RegressorDomain::cube(std::size_t r, Interval side) {
  return RegressorDomain(std::vector<Interval>(r, side));
}

bool RegressorDomain::contains(std::span<const double> x_hat) const {
  if (x_hat.size() != bounds_.size()) return false;
  for (std::size_t k = 0; k < x_hat.size(); ++k) {
    if (!bounds_[k].contains(x_hat[k])) return false;
  }
  return true;
}

const char* split_label(SplitPart part) {
  switch (part) {
    case SplitPart::train: return "train";
    case SplitPart::validation: return "val";
    case SplitPart::test: return "test";
  }
  return "?";
}

LabeledDataset::LabeledDataset(DenseMatrix features, std::vector<double> responses, SplitSizes split)
    : features_(std::move(features)), responses_(std::move(responses)), split_(split) {
  require(features_.rows() == responses_.size(), ErrorKind::dimension_mismatch,
          "one response per feature row required");
  require(split_.total() == responses_.size(), ErrorKind::size_mismatch,
          "split sizes must sum to the number of rows");
  require(all_finite(responses_), ErrorKind::invalid_argument, "responses must be finite");
}

SplitPart LabeledDataset::part_of(std::size_t row) const {
  require(row < size(), ErrorKind::invalid_argument, "row out of range");
  if (row < split_.train) return SplitPart::train;
  if (row < split_.train + split_.validation) return SplitPart::validation;
  return SplitPart::test;
}

DataSlice LabeledDataset::slice(SplitPart part) const {
  std::size_t first = 0;
  std::size_t count = split_.train;
  if (part == SplitPart::validation) {
    first = split_.train;
    count = split_.validation;
  } else if (part == SplitPart::test) {
    first = split_.train + split_.validation;
    count = split_.test;
  }
  const std::size_t p = num_features();
  return DataSlice{features_.entries().subspan(first * p, count * p),
                   std::span<const double>(responses_).subspan(first, count), p};
}

DataSlice LabeledDataset::all() const {
  return DataSlice{features_.entries(), responses_, num_features()};
}

std::uint64_t LabeledDataset::checksum() const noexcept {
  const double sizes[3] = {static_cast<double>(split_.train), static_cast<double>(split_.validation),
                           static_cast<double>(split_.test)};
  return fnv1a64(features_.entries()) ^ splitmix64_mix(fnv1a64(responses_)) ^
         splitmix64_mix(splitmix64_mix(fnv1a64(sizes)));
}

LabeledDataset generate_dataset(const ContextualLinearModel& model, std::size_t n, double noise_sd,
                                SplitSizes split, RandomSource& rng) {
  require(split.total() == n, ErrorKind::size_mismatch,
          "split sizes " + std::to_string(split.total()) + " do not sum to n = " + std::to_string(n));
  require(std::isfinite(noise_sd) && noise_sd >= 0.0, ErrorKind::invalid_argument,
          "noise_sd must be finite and nonnegative");
  require(n >= 1, ErrorKind::invalid_argument, "dataset needs at least one row");

  const std::size_t r = model.num_regressors();
  const std::size_t p = r + 1;
  DenseMatrix x(n, p);
  const auto contextual = sample_uniform(rng, model.domain().lo, model.domain().hi, n);
  for (std::size_t i = 0; i < n; ++i) x(i, r) = contextual[i];
  for (std::size_t k = 0; k < r; ++k) {
    const auto column = sample_standard_normal(rng, n);
    for (std::size_t i = 0; i < n; ++i) x(i, k) = column[i];
  }

  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = model.evaluate(x.row(i));
  if (noise_sd > 0.0) {
    const auto noise = sample_standard_normal(rng, n);
    for (std::size_t i = 0; i < n; ++i) y[i] += noise_sd * noise[i];
  }
  return LabeledDataset(std::move(x), std::move(y), split);
}

ContextualLinearModel sample_random_model(std::size_t c, std::size_t r, std::vector<double> interior_cuts,
                                          Interval domain, RandomSource& rng, bool sample_intercepts) {
  require(c >= 1 && r >= 1, ErrorKind::invalid_argument, "need c >= 1 and r >= 1");
  // Validate the cut layout before consuming any randomness.
  (void)ContextualLinearModel(interior_cuts, domain, std::vector<std::vector<double>>(c, std::vector<double>(r, 0.0)),
                              std::vector<double>(c, 0.0));
  const auto draws = sample_standard_normal(rng, c * r);
  std::vector<std::vector<double>> beta(c);
  for (std::size_t j = 0; j < c; ++j) beta[j].assign(draws.begin() + j * r, draws.begin() + (j + 1) * r);
  std::vector<double> intercepts =
      sample_intercepts ? sample_standard_normal(rng, c) : std::vector<double>(c, 0.0);
  return ContextualLinearModel(std::move(interior_cuts), domain, std::move(beta), std::move(intercepts));
}

nlohmann::ordered_json to_json(const ContextualLinearModel& model) {
  nlohmann::ordered_json j;
  j["c"] = model.num_contexts();
  j["r"] = model.num_regressors();
  j["interior_cuts"] = model.interior_cuts();
  j["domain"] = {model.domain().lo, model.domain().hi};
  auto coeffs = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < model.num_contexts(); ++k) {
    auto beta = model.coefficients(k);
    coeffs.push_back(std::vector<double>(beta.begin(), beta.end()));
  }
  j["coefficients"] = std::move(coeffs);
  std::vector<double> intercepts;
  for (std::size_t k = 0; k < model.num_contexts(); ++k) intercepts.push_back(model.intercept(k));
  j["intercepts"] = intercepts;
  return j;
}

namespace {

template <typename T>
T field(const nlohmann::json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) fail(ErrorKind::parse_error, std::string("missing field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse_error, std::string("field '") + name + "': " + e.what());
  }
}

Interval interval_field(const nlohmann::json& j, const char* name) {
  const auto v = field<std::vector<double>>(j, name);
  if (v.size() != 2) fail(ErrorKind::parse_error, std::string("field '") + name + "' must be [lo, hi]");
  return {v[0], v[1]};
}

}  // namespace

ContextualLinearModel model_from_json(const nlohmann::json& j) {
  const auto c = field<std::size_t>(j, "c");
  const auto r = field<std::size_t>(j, "r");
  ContextualLinearModel model(field<std::vector<double>>(j, "interior_cuts"), interval_field(j, "domain"),
                              field<std::vector<std::vector<double>>>(j, "coefficients"),
                              field<std::vector<double>>(j, "intercepts"));
  if (model.num_contexts() != c || model.num_regressors() != r) {
    fail(ErrorKind::parse_error, "fields 'c'/'r' disagree with coefficient shapes");
  }
  return model;
}

nlohmann::ordered_json to_json(const RegressorDomain& domain) {
  auto bounds = nlohmann::ordered_json::array();
  for (const auto& b : domain.bounds()) bounds.push_back({b.lo, b.hi});
  return nlohmann::ordered_json{{"bounds", bounds}};
}

RegressorDomain domain_from_json(const nlohmann::json& j) {
  const auto raw = field<std::vector<std::vector<double>>>(j, "bounds");
  std::vector<Interval> bounds;
  for (const auto& b : raw) {
    if (b.size() != 2) fail(ErrorKind::parse_error, "field 'bounds' entries must be [lo, hi]");
    bounds.push_back({b[0], b[1]});
  }
  return RegressorDomain(std::move(bounds));
}

void write_csv(std::ostream& out, const LabeledDataset& data) {
  const std::size_t r = data.num_features() - 1;
  for (std::size_t k = 0; k < r; ++k) out << 'x' << (k + 1) << ',';
  out << "xp,y,split\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.features().row(i)) out << format_double(v) << ',';
    out << format_double(data.responses()[i]) << ',' << split_label(data.part_of(i)) << '\n';
  }
}

LabeledDataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::parse_error, "dataset CSV is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 4 || header[header.size() - 3] != "xp" || header[header.size() - 2] != "y" ||
      header.back() != "split") {
    fail(ErrorKind::parse_error, "dataset CSV header must be x1..xr,xp,y,split");
  }
  const std::size_t p = header.size() - 2;
  for (std::size_t k = 0; k + 1 < p; ++k) {
    if (header[k] != "x" + std::to_string(k + 1)) fail(ErrorKind::parse_error, "unexpected column '" + header[k] + "'");
  }

  std::vector<double> rows[3];
  std::vector<double> ys[3];
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    const std::string where = "line " + std::to_string(line_no);
    if (cells.size() != p + 2) fail(ErrorKind::parse_error, where + ": expected " + std::to_string(p + 2) + " cells");
    int part = -1;
    if (cells.back() == "train") part = 0;
    else if (cells.back() == "val") part = 1;
    else if (cells.back() == "test") part = 2;
    else fail(ErrorKind::parse_error, where + ": split must be train, val or test");
    for (std::size_t k = 0; k < p; ++k) rows[part].push_back(parse_double(cells[k], where));
    ys[part].push_back(parse_double(cells[p], where));
  }
  SplitSizes split{ys[0].size(), ys[1].size(), ys[2].size()};
  std::vector<double> features;
  std::vector<double> responses;
  for (int part = 0; part < 3; ++part) {
    features.insert(features.end(), rows[part].begin(), rows[part].end());
    responses.insert(responses.end(), ys[part].begin(), ys[part].end());
  }
  if (responses.empty()) fail(ErrorKind::parse_error, "dataset CSV has no rows");
  const std::size_t n = responses.size();
  return LabeledDataset(DenseMatrix(n, p, std::move(features)), std::move(responses), split);
}

}  // namespace sctx
