#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "isaac/core/matrix.hpp"
#include "isaac/core/schema.hpp"
#include "isaac/core/types.hpp"
#include "isaac/predict/evaluate.hpp"
#include "isaac/predict/model.hpp"

namespace isaac::recommend {

// Dimensions the reader removed between introspection and recommendation.
// Stored annotations are untouched; the mask only filters modeling columns.
struct CurationMask {
  std::map<std::string, std::string> excluded;  // id -> reason
  std::string created_at;

  std::set<std::string> ids() const;
  bool contains(std::string_view id) const { return excluded.count(std::string(id)) > 0; }

  friend bool operator==(const CurationMask&, const CurationMask&) = default;
};

// UnknownDimension for ids outside the schema.
void validate_mask(const CurationMask& mask, const AnnotationSchema& schema);
nlohmann::json mask_to_json(const CurationMask& mask);
CurationMask mask_from_json(const nlohmann::json& j);

struct Contribution {
  std::string dimension_id;
  double contribution = 0.0;
};

enum class Mode { kEnjoyment, kExploration };
std::string_view to_string(Mode mode);

struct Recommendation {
  std::string book_id;
  std::string title;
  double predicted = 0.0;  // predicted percentile
  std::size_t rank = 0;
  std::vector<Contribution> explanation;
  Mode mode = Mode::kEnjoyment;
  std::optional<double> informativeness;  // exploration only
};

struct Candidate {
  std::string title;
  AnnotationRecord record;
};

struct RecommendOptions {
  std::size_t k = 10;
  bool include_journal = false;
  predict::CvOptions cv;
  // Skips the ridge/forest LOOCV comparison when set.
  std::optional<predict::ModelKind> model;
  predict::ForestParams forest;
  std::size_t explain_top = 5;
  // Passed to the effect table in exploration mode.
  std::size_t min_n = 3;
};

struct RecommendResult {
  std::vector<Recommendation> items;
  predict::ModelKind ranked_by = predict::ModelKind::kRidge;
  std::optional<double> ridge_r;
  std::optional<double> forest_r;
  double ridge_lambda = 1.0;
  std::vector<std::string> columns;  // modeling columns after the mask
  std::string note;
};

// Signed per-dimension contributions coefficient x standardized value,
// summed over a dimension's design columns (value and missing indicator),
// top k by magnitude, ties by id.
std::vector<Contribution> explain(const Eigen::VectorXd& coef, const Eigen::RowVectorXd& design,
                                  const std::vector<std::string>& design_columns, std::size_t k = 5);

// Explanation for row `row` of `candidates` under a fitted ridge model.
std::vector<Contribution> explain(const predict::FittedModel& ridge, const FeatureMatrix& candidates, Eigen::Index row,
                                  std::size_t k = 5);

// Indices of the top k scores, descending, ties by title.
std::vector<std::size_t> rank_scores(const Eigen::VectorXd& scores, std::span<const std::string> titles, std::size_t k);

// Fits the best-LOOCV model on every rated book with the mask applied and
// returns the top k candidates. NoModel without rated books,
// SchemaVersionMismatch for candidates annotated under another schema,
// AlreadyRated when a candidate is a rated book.
RecommendResult rank_candidates(std::span<const Candidate> candidates, std::span<const RatedBook> rated,
                                std::span<const AnnotationRecord> records, const AnnotationSchema& schema,
                                const CurationMask& mask, const RecommendOptions& options = {});

// Ranks candidates by the total shrinkage of 80% interval widths across
// dimensions when the candidate joins the rated set with its predicted
// outcome. Inestimable dimensions count at the prior's interval width.
RecommendResult exploration_rank(std::span<const Candidate> candidates, std::span<const RatedBook> rated,
                                 std::span<const AnnotationRecord> records, const AnnotationSchema& schema,
                                 const CurationMask& mask, const RecommendOptions& options = {});

// Candidate list: title and author columns (simple CSV or Goodreads export);
// any rating column is ignored.
std::vector<RatedBook> parse_candidates(std::string_view text);

nlohmann::json result_to_json(const RecommendResult& result);

}  // namespace isaac::recommend
