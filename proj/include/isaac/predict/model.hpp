#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "isaac/core/matrix.hpp"
#include "isaac/predict/forest.hpp"
#include "isaac/predict/preprocess.hpp"
#include "isaac/predict/ridge.hpp"

namespace isaac::predict {

enum class ModelKind { kRidge, kRandomForest, kBaselineAvgRating };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view s);

inline constexpr std::string_view kBaselineColumn = "gr_avg_rating";

struct ModelSpec {
  ModelKind kind = ModelKind::kRidge;
  double lambda = 1.0;
  ForestParams forest;
};

void validate(const ModelSpec& spec);
nlohmann::json spec_to_json(const ModelSpec& spec);

// Called with the design columns of every model fitted during evaluation.
using FitHook = std::function<void(const std::vector<std::string>& design_columns)>;

// Preprocessing and learner bundled for one training set.
class FittedModel {
 public:
  const ModelSpec& spec() const { return spec_; }
  const FoldPreprocessor& preprocessor() const { return pre_; }

  // `m` must carry the training columns (by name); extra columns are ignored.
  Eigen::VectorXd predict(const FeatureMatrix& m) const;

  // Ridge only: standardized design and coefficients for explanations.
  const RidgeFit* ridge() const { return ridge_ ? &*ridge_ : nullptr; }
  const RandomForest* forest() const { return forest_ ? &*forest_ : nullptr; }

  // True when the fit ignores every feature and predicts a training mean.
  bool intercept_only() const;

  friend FittedModel fit_model(const FeatureMatrix& train, const ModelSpec& spec, const FitHook* hook);
  friend FittedModel fit_baseline(const FeatureMatrix& train);

 private:
  ModelSpec spec_;
  FoldPreprocessor pre_;
  std::optional<RidgeFit> ridge_;
  std::optional<RandomForest> forest_;
  // Baseline: y = a + b * avg_rating, missing ratings imputed with `fill`.
  double base_a_ = 0.0;
  double base_b_ = 0.0;
  double base_fill_ = 0.0;
};

// Fits spec on all rows of `train` (outcome and weights taken from it).
FittedModel fit_model(const FeatureMatrix& train, const ModelSpec& spec, const FitHook* hook = nullptr);

// Simple regression of the outcome on gr_avg_rating. MissingColumn when the
// column is absent. A constant rating predicts the weighted mean.
FittedModel fit_baseline(const FeatureMatrix& train);

}  // namespace isaac::predict
