#include "isaac/predict/model.hpp"

#include <cmath>

#include "isaac/util/error.hpp"

namespace isaac::predict {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kRidge: return "ridge";
    case ModelKind::kRandomForest: return "random_forest";
    case ModelKind::kBaselineAvgRating: return "baseline_avg_rating";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view s) {
  if (s == "ridge") return ModelKind::kRidge;
  if (s == "random_forest" || s == "forest") return ModelKind::kRandomForest;
  if (s == "baseline_avg_rating" || s == "baseline") return ModelKind::kBaselineAvgRating;
  throw Error(ErrorCode::kInvalidArgument, "unknown model kind '" + std::string(s) + "'");
}

void validate(const ModelSpec& spec) {
  if (!(spec.lambda >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda must be >= 0");
  if (spec.forest.n_trees < 1) throw Error(ErrorCode::kInvalidArgument, "n_trees must be >= 1");
  if (spec.forest.mtry < 0) throw Error(ErrorCode::kInvalidArgument, "mtry must be >= 1 (or 0 for the default)");
  if (spec.forest.min_leaf < 1) throw Error(ErrorCode::kInvalidArgument, "min_leaf must be >= 1");
  if (spec.forest.max_depth < 0) throw Error(ErrorCode::kInvalidArgument, "max_depth must be >= 0");
}

nlohmann::json spec_to_json(const ModelSpec& spec) {
  nlohmann::json j{{"kind", to_string(spec.kind)}};
  if (spec.kind == ModelKind::kRidge) j["lambda"] = spec.lambda;
  if (spec.kind == ModelKind::kRandomForest) {
    j["n_trees"] = spec.forest.n_trees;
    j["mtry"] = spec.forest.mtry;
    j["min_leaf"] = spec.forest.min_leaf;
    j["max_depth"] = spec.forest.max_depth;
    j["seed"] = spec.forest.seed;
  }
  return j;
}

FittedModel fit_model(const FeatureMatrix& train, const ModelSpec& spec, const FitHook* hook) {
  validate(spec);
  if (spec.kind == ModelKind::kBaselineAvgRating) {
    auto m = fit_baseline(train);
    if (hook && *hook) (*hook)({std::string(kBaselineColumn)});
    return m;
  }
  FittedModel m;
  m.spec_ = spec;
  m.pre_ = FoldPreprocessor::fit(train);
  if (hook && *hook) (*hook)(m.pre_.design_columns());
  const Eigen::MatrixXd x = m.pre_.transform(train);
  if (spec.kind == ModelKind::kRidge) {
    m.ridge_ = fit_ridge(x, train.outcome, train.weights, spec.lambda);
  } else {
    ForestParams params = spec.forest;
    if (params.mtry > x.cols()) params.mtry = static_cast<int>(x.cols());
    m.forest_ = RandomForest::fit(x, train.outcome, train.weights, params);
  }
  return m;
}

FittedModel fit_baseline(const FeatureMatrix& train) {
  const auto col = train.column_index(kBaselineColumn);
  if (!col) throw Error(ErrorCode::kMissingColumn, "baseline needs the gr_avg_rating column");
  if (train.rows() == 0) throw Error(ErrorCode::kEmptyCorpus, "baseline: no rows");
  FittedModel m;
  m.spec_.kind = ModelKind::kBaselineAvgRating;
  const Eigen::Index n = train.rows();
  double sum = 0.0;
  Eigen::Index present = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!train.missing(i, *col)) {
      sum += train.values(i, *col);
      ++present;
    }
  }
  m.base_fill_ = present > 0 ? sum / static_cast<double>(present) : 0.0;
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = train.missing(i, *col) ? m.base_fill_ : train.values(i, *col);

  const Eigen::VectorXd w = train.weights / train.weights.sum();
  const double xbar = w.dot(x);
  const double ybar = w.dot(train.outcome);
  const double sxx = (w.array() * (x.array() - xbar).square()).sum();
  const double sxy = (w.array() * (x.array() - xbar) * (train.outcome.array() - ybar)).sum();
  m.base_b_ = sxx > 1e-12 * std::max(1.0, xbar * xbar) ? sxy / sxx : 0.0;
  m.base_a_ = ybar - m.base_b_ * xbar;
  return m;
}

bool FittedModel::intercept_only() const {
  if (spec_.kind == ModelKind::kBaselineAvgRating) return base_b_ == 0.0;
  if (pre_.design_size() == 0) return true;
  if (ridge_) return false;
  for (const auto& tree : forest_->trees()) {
    if (tree.size() > 1) return false;
  }
  return true;
}

Eigen::VectorXd FittedModel::predict(const FeatureMatrix& m) const {
  if (spec_.kind == ModelKind::kBaselineAvgRating) {
    const auto col = m.column_index(kBaselineColumn);
    if (!col) throw Error(ErrorCode::kMissingColumn, "baseline needs the gr_avg_rating column");
    Eigen::VectorXd out(m.rows());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double x = m.missing(i, *col) ? base_fill_ : m.values(i, *col);
      out(i) = base_a_ + base_b_ * x;
    }
    return out;
  }
  const Eigen::MatrixXd x = pre_.transform(m);
  return ridge_ ? ridge_->predict(x) : forest_->predict(x);
}

}  // namespace isaac::predict
