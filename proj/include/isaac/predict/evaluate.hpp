#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "isaac/core/matrix.hpp"
#include "isaac/predict/model.hpp"

namespace isaac::predict {

struct HyperGrid {
  std::vector<double> lambdas{0.01, 0.1, 1.0, 10.0, 100.0};
  // Empty: {ceil(p / 3), ceil(sqrt(p))} for the fold's design width p.
  std::vector<int> mtry;
  std::vector<int> min_leaf{3, 5};
};

struct CvOptions {
  int inner_folds = 5;
  HyperGrid grid;
  // When false the spec's own hyperparameters are used in every fold.
  bool nested = true;
  std::uint64_t seed = 42;
  int threads = 1;  // outer folds; 0 = hardware threads
  const FitHook* hook = nullptr;
};

struct Pearson {
  std::optional<double> r;
  std::string diagnostic;  // set when r is undefined
};

Pearson pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct FoldChoice {
  std::string book_id;
  std::optional<double> lambda;
  std::optional<int> mtry;
  std::optional<int> min_leaf;
};

struct CurvePoint {
  std::size_t m = 0;
  std::size_t repeats = 0;
  std::optional<double> mean_r;
  double sd_r = 0.0;
  std::size_t undefined = 0;
};

struct ImportanceEntry {
  std::string dimension_id;
  double score = 0.0;
};

struct ModelReport {
  ModelSpec spec;
  std::vector<std::string> book_ids;
  Eigen::VectorXd actual;
  Eigen::VectorXd predicted;
  Pearson loocv;
  std::vector<FoldChoice> chosen;
  std::vector<CurvePoint> learning_curve;
  // Full-sample forest importance aggregated by dimension; forest reports only.
  std::vector<ImportanceEntry> importance;
  std::vector<std::string> columns;
};

// k-fold assignment stratified by outcome quintile: rows are ranked by
// outcome, cut into five strata, shuffled within each stratum and dealt
// round-robin to folds.
std::vector<int> stratified_folds(const Eigen::VectorXd& outcome, int k, std::uint64_t seed);

// Picks hyperparameters for `spec` by inner k-fold CV (lowest weighted MSE).
ModelSpec select_hyperparameters(const FeatureMatrix& train, const ModelSpec& spec, const CvOptions& opts,
                                 std::uint64_t seed);

// Leave-one-out predictions with nested selection. TooFewBooks when n < 5.
ModelReport loocv(const FeatureMatrix& matrix, const ModelSpec& spec, const CvOptions& opts = {});

// For each m: `repeats` subsamples of m rows, LOOCV within each. The rows of
// a subsample keep their original order and the inner CV uses opts.seed, so
// m = n reproduces plain LOOCV. SizeOutOfRange unless 10 <= m <= n.
std::vector<CurvePoint> learning_curve(const FeatureMatrix& matrix, const ModelSpec& spec,
                                       const std::vector<std::size_t>& sizes, std::size_t repeats,
                                       std::uint64_t seed, const CvOptions& opts = {});

// Forest importance aggregated from design columns to dimensions.
std::vector<ImportanceEntry> forest_importance(const FittedModel& model);

// Top k entries of a forest report. WrongModelKind for other kinds.
std::vector<ImportanceEntry> importance_ranking(const ModelReport& report, std::size_t k = 10);

nlohmann::json report_to_json(const ModelReport& report);
// predictions.csv: book_id,actual,predicted,model
std::string predictions_csv(const ModelReport& report);

}  // namespace isaac::predict
