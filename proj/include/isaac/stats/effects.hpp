#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "isaac/core/matrix.hpp"
#include "isaac/stats/expectations.hpp"

namespace isaac::stats {

struct EffectOptions {
  int grid_size = 2001;
  double prior_lo = -0.5;
  double prior_hi = 0.5;
  double credible_mass = 0.8;
  // Test hook: replace the likelihood by a constant so the posterior equals
  // the prior.
  bool flat_likelihood = false;
};

// Posterior over the standardized slope on a uniform grid spanning the prior
// support. `mass` uses trapezoid weights and sums to 1.
struct GridPosterior {
  std::vector<double> grid;
  std::vector<double> mass;
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;

  double quantile(double q) const;
};

// Posterior for y' = a + b x' + e with x', y' standardized, a flat prior on
// a integrated out, e ~ N(0, sigma^2) with sigma fixed, and b uniform on the
// prior support. With the intercept integrated out the kernel in b is
// exp(-sxx (b - slope)^2 / (2 sigma^2)).
GridPosterior slope_posterior(double slope, double sxx, double sigma, const EffectOptions& opts = {});

enum class Inestimable { kNo, kZeroVariance, kTooFewBooks };

struct EffectEstimate {
  std::string dimension_id;
  DimensionKind kind = DimensionKind::kBinary;
  std::optional<double> r;
  std::optional<std::pair<double, double>> ci80;
  std::optional<double> posterior_mean;
  std::size_t n_available = 0;
  // Binary dimensions: books with (n_with) and without (n_without) the
  // attribute. Other kinds only fill n_available.
  std::size_t n_with = 0;
  std::size_t n_without = 0;
  Inestimable inestimable = Inestimable::kNo;
  bool low_n = false;

  bool estimable() const { return inestimable == Inestimable::kNo; }
  // The count shown next to a dimension: books with the attribute for binary
  // dimensions, otherwise books with a value.
  std::size_t n_level() const { return kind == DimensionKind::kBinary ? n_with : n_available; }
};

// x and y are aligned; rows where x is missing or y is not finite are
// dropped. r is the raw sample Pearson correlation.
EffectEstimate effect_estimate(const std::string& dimension_id, DimensionKind kind, const Eigen::VectorXd& x,
                               const Eigen::Array<bool, Eigen::Dynamic, 1>& missing, const Eigen::VectorXd& y,
                               const EffectOptions& opts = {});

struct EffectRow {
  EffectEstimate estimate;
  std::optional<Expectation> expectation;
};

struct EffectTable {
  std::vector<EffectRow> rows;
  bool expectations_post_hoc = false;
  bool has_expectations = false;

  const EffectRow* find(std::string_view id) const;
  std::vector<EffectEstimate> estimates() const;
};

// One estimate per column, sorted by r descending (ties by id), inestimable
// rows last. Binary dimensions with fewer than min_n books on either level,
// and other dimensions with fewer than min_n values, are flagged low_n.
EffectTable effect_table(const FeatureMatrix& matrix, const ExpectationSet* expectations = nullptr,
                         std::size_t min_n = 3, const EffectOptions& opts = {});

enum class Verdict { kMatch, kMismatch, kNeutralExpectation, kInestimable, kZeroCorrelation, kNoEstimate };

std::string_view to_string(Verdict v);

struct ConcordanceResult {
  std::size_t matches = 0;
  std::size_t compared = 0;
  int percent = 0;
  bool post_hoc = false;
  std::map<std::string, Verdict> verdicts;
};

// Share of dimensions whose expected sign equals the sign of r. Neutral
// expectations, inestimable effects and r == 0 are excluded from the
// denominator. Throws NothingComparable when nothing remains.
ConcordanceResult concordance(const std::vector<EffectEstimate>& effects, const ExpectationSet& expectations);

// round(100 * k / n), halves rounded up.
int rounded_percent(std::size_t k, std::size_t n);

// effects.csv: dimension_id,r,ci_lo,ci_hi,n_level,flag,expected_sign,band_lo,band_hi,expectation_status
std::string effects_csv(const EffectTable& table);
nlohmann::json effects_json(const EffectTable& table, const AnnotationSchema* schema = nullptr);
nlohmann::json concordance_json(const ConcordanceResult& result);

}  // namespace isaac::stats
