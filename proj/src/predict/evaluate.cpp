#include "isaac/predict/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "isaac/util/csv.hpp"
#include "isaac/util/error.hpp"
#include "isaac/util/parallel.hpp"
#include "isaac/util/rng.hpp"
#include "isaac/util/text.hpp"

namespace isaac::predict {
namespace {

std::vector<Eigen::Index> all_except(Eigen::Index n, Eigen::Index skip) {
  std::vector<Eigen::Index> idx;
  idx.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i != skip) idx.push_back(i);
  }
  return idx;
}

std::vector<ModelSpec> candidates(const FeatureMatrix& train, const ModelSpec& spec, const HyperGrid& grid) {
  std::vector<ModelSpec> out;
  if (spec.kind == ModelKind::kRidge) {
    for (double l : grid.lambdas) {
      ModelSpec s = spec;
      s.lambda = l;
      out.push_back(s);
    }
  } else if (spec.kind == ModelKind::kRandomForest) {
    std::vector<int> mtry = grid.mtry;
    if (mtry.empty()) {
      const auto p = static_cast<double>(std::max<Eigen::Index>(1, FoldPreprocessor::fit(train).design_size()));
      mtry = {static_cast<int>(std::ceil(p / 3.0)), static_cast<int>(std::ceil(std::sqrt(p)))};
      if (mtry[0] == mtry[1]) mtry.pop_back();
    }
    for (int m : mtry) {
      for (int leaf : grid.min_leaf) {
        ModelSpec s = spec;
        s.forest.mtry = m;
        s.forest.min_leaf = leaf;
        out.push_back(s);
      }
    }
  }
  if (out.empty()) out.push_back(spec);
  return out;
}

FoldChoice choice_of(const std::string& book_id, const ModelSpec& s) {
  FoldChoice c;
  c.book_id = book_id;
  if (s.kind == ModelKind::kRidge) c.lambda = s.lambda;
  if (s.kind == ModelKind::kRandomForest) {
    c.mtry = s.forest.mtry;
    c.min_leaf = s.forest.min_leaf;
  }
  return c;
}

struct Predictions {
  Eigen::VectorXd predicted;
  std::vector<FoldChoice> chosen;
  bool all_intercept_only = true;
};

Predictions loocv_predictions(const FeatureMatrix& matrix, const ModelSpec& spec, const CvOptions& opts) {
  validate(spec);
  const Eigen::Index n = matrix.rows();
  if (n < 5) throw Error(ErrorCode::kTooFewBooks, "LOOCV needs at least 5 books, got " + std::to_string(n));
  if (spec.kind == ModelKind::kBaselineAvgRating && !matrix.column_index(kBaselineColumn)) {
    throw Error(ErrorCode::kMissingColumn, "baseline needs the gr_avg_rating column");
  }
  ModelSpec base = spec;
  const bool outer_parallel = resolve_threads(opts.threads) > 1;
  if (outer_parallel) base.forest.threads = 1;

  Predictions out;
  out.predicted.resize(n);
  out.chosen.resize(static_cast<std::size_t>(n));
  std::vector<char> degenerate(static_cast<std::size_t>(n), 0);
  parallel_for(static_cast<std::size_t>(n), opts.threads, [&](std::size_t fold) {
    const auto i = static_cast<Eigen::Index>(fold);
    const auto train_idx = all_except(n, i);
    const FeatureMatrix train = matrix.select_rows(train_idx);
    const ModelSpec chosen = opts.nested ? select_hyperparameters(train, base, opts, derive_seed(opts.seed, fold)) : base;
    const FittedModel model = fit_model(train, chosen, opts.hook);
    const Eigen::Index one[] = {i};
    out.predicted(i) = model.predict(matrix.select_rows(one))(0);
    out.chosen[fold] = choice_of(matrix.row_ids[fold], chosen);
    degenerate[fold] = model.intercept_only();
  });
  out.all_intercept_only = std::all_of(degenerate.begin(), degenerate.end(), [](char d) { return d != 0; });
  return out;
}

// Intercept-only folds predict the mean of the other n - 1 outcomes, which is
// perfectly anti-correlated with the held-out outcome. That r is an artifact
// of leave-one-out, so it is reported as undefined.
Pearson score(const Predictions& p, const Eigen::VectorXd& actual) {
  Pearson r = pearson(p.predicted, actual);
  if (r.r && p.all_intercept_only) return Pearson{std::nullopt, "every fold fitted an intercept-only model"};
  return r;
}

}  // namespace

Pearson pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Pearson p;
  if (a.size() != b.size()) throw Error(ErrorCode::kInvalidArgument, "pearson: length mismatch");
  if (a.size() < 2) {
    p.diagnostic = "fewer than two pairs";
    return p;
  }
  const Eigen::ArrayXd da = a.array() - a.mean();
  const Eigen::ArrayXd db = b.array() - b.mean();
  const double saa = da.square().sum();
  const double sbb = db.square().sum();
  const auto tiny = [](double ss, const Eigen::VectorXd& v) {
    return !(ss > 1e-24 * std::max(1.0, v.squaredNorm()));
  };
  if (tiny(saa, a) || tiny(sbb, b)) {
    p.diagnostic = tiny(sbb, b) ? "outcome has zero variance" : "predictions have zero variance";
    return p;
  }
  p.r = std::clamp((da * db).sum() / std::sqrt(saa * sbb), -1.0, 1.0);
  return p;
}

std::vector<int> stratified_folds(const Eigen::VectorXd& outcome, int k, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(outcome.size());
  if (k < 2 || static_cast<std::size_t>(k) > n) {
    throw Error(ErrorCode::kInvalidArgument, "fold count must lie in [2, n]");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return outcome(static_cast<Eigen::Index>(a)) < outcome(static_cast<Eigen::Index>(b)); });
  Rng rng(seed);
  std::vector<int> fold(n, 0);
  std::size_t dealt = 0;
  constexpr std::size_t kStrata = 5;
  for (std::size_t s = 0; s < kStrata; ++s) {
    const std::size_t lo = s * n / kStrata;
    const std::size_t hi = (s + 1) * n / kStrata;
    std::vector<std::size_t> stratum(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                     order.begin() + static_cast<std::ptrdiff_t>(hi));
    rng.shuffle(stratum.begin(), stratum.end());
    for (std::size_t row : stratum) fold[row] = static_cast<int>(dealt++ % static_cast<std::size_t>(k));
  }
  return fold;
}

ModelSpec select_hyperparameters(const FeatureMatrix& train, const ModelSpec& spec, const CvOptions& opts,
                                 std::uint64_t seed) {
  const auto grid = candidates(train, spec, opts.grid);
  if (grid.size() == 1) return grid.front();
  const Eigen::Index n = train.rows();
  const int k = std::min<int>(opts.inner_folds, static_cast<int>(n));
  const auto fold = stratified_folds(train.outcome, k, seed);
  std::vector<std::vector<Eigen::Index>> fit_rows(static_cast<std::size_t>(k));
  std::vector<std::vector<Eigen::Index>> test_rows(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int f = 0; f < k; ++f) {
      (fold[static_cast<std::size_t>(i)] == f ? test_rows : fit_rows)[static_cast<std::size_t>(f)].push_back(i);
    }
  }
  std::vector<FeatureMatrix> fit_parts;
  std::vector<FeatureMatrix> test_parts;
  for (int f = 0; f < k; ++f) {
    fit_parts.push_back(train.select_rows(fit_rows[static_cast<std::size_t>(f)]));
    test_parts.push_back(train.select_rows(test_rows[static_cast<std::size_t>(f)]));
  }

  std::size_t best = 0;
  double best_loss = INFINITY;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    double loss = 0.0;
    for (int f = 0; f < k; ++f) {
      const auto& part = test_parts[static_cast<std::size_t>(f)];
      const Eigen::VectorXd pred = fit_model(fit_parts[static_cast<std::size_t>(f)], grid[c], opts.hook).predict(part);
      loss += (part.weights.array() * (pred - part.outcome).array().square()).sum();
    }
    if (loss < best_loss) {
      best_loss = loss;
      best = c;
    }
  }
  return grid[best];
}

ModelReport loocv(const FeatureMatrix& matrix, const ModelSpec& spec, const CvOptions& opts) {
  const auto preds = loocv_predictions(matrix, spec, opts);
  ModelReport report;
  report.spec = spec;
  report.book_ids = matrix.row_ids;
  report.actual = matrix.outcome;
  report.predicted = preds.predicted;
  report.chosen = preds.chosen;
  report.loocv = score(preds, report.actual);
  report.columns = matrix.columns;
  if (spec.kind == ModelKind::kRandomForest) {
    const ModelSpec full = opts.nested ? select_hyperparameters(matrix, spec, opts, derive_seed(opts.seed, ~0ULL)) : spec;
    report.importance = forest_importance(fit_model(matrix, full, opts.hook));
  }
  return report;
}

std::vector<CurvePoint> learning_curve(const FeatureMatrix& matrix, const ModelSpec& spec,
                                       const std::vector<std::size_t>& sizes, std::size_t repeats,
                                       std::uint64_t seed, const CvOptions& opts) {
  const auto n = static_cast<std::size_t>(matrix.rows());
  if (repeats < 1) throw Error(ErrorCode::kInvalidArgument, "learning curve needs at least one repeat");
  for (std::size_t m : sizes) {
    if (m < 10 || m > n) {
      throw Error(ErrorCode::kSizeOutOfRange,
                  "size " + std::to_string(m) + " outside [10, " + std::to_string(n) + "]");
    }
  }
  std::vector<CurvePoint> curve;
  for (std::size_t m : sizes) {
    Rng rng(derive_seed(seed, m));
    std::vector<double> rs;
    CurvePoint point;
    point.m = m;
    point.repeats = repeats;
    std::optional<Pearson> full;  // every subsample of size n is the whole matrix
    for (std::size_t rep = 0; rep < repeats; ++rep) {
      std::vector<Eigen::Index> idx(n);
      std::iota(idx.begin(), idx.end(), 0);
      rng.shuffle(idx.begin(), idx.end());
      idx.resize(m);
      std::sort(idx.begin(), idx.end());
      Pearson r;
      if (m == n && full) {
        r = *full;
      } else {
        const FeatureMatrix sub = matrix.select_rows(idx);
        r = score(loocv_predictions(sub, spec, opts), sub.outcome);
        if (m == n) full = r;
      }
      if (r.r) rs.push_back(*r.r);
      else ++point.undefined;
    }
    if (!rs.empty()) {
      const double mean = std::accumulate(rs.begin(), rs.end(), 0.0) / static_cast<double>(rs.size());
      point.mean_r = mean;
      if (rs.size() > 1) {
        double ss = 0.0;
        for (double r : rs) ss += (r - mean) * (r - mean);
        point.sd_r = std::sqrt(ss / static_cast<double>(rs.size() - 1));
      }
    }
    curve.push_back(point);
  }
  return curve;
}

std::vector<ImportanceEntry> forest_importance(const FittedModel& model) {
  const auto* forest = model.forest();
  if (!forest) throw Error(ErrorCode::kWrongModelKind, "importance is defined for random forest models only");
  std::map<std::string, double> by_dim;
  const auto& cols = model.preprocessor().design_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) by_dim[dimension_of(cols[c])] += forest->importance()(static_cast<Eigen::Index>(c));
  std::vector<ImportanceEntry> out;
  for (const auto& [id, score] : by_dim) out.push_back({id, score});
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  return out;
}

std::vector<ImportanceEntry> importance_ranking(const ModelReport& report, std::size_t k) {
  if (report.spec.kind != ModelKind::kRandomForest) {
    throw Error(ErrorCode::kWrongModelKind, "importance ranking needs a random forest report, got " +
                                                std::string(to_string(report.spec.kind)));
  }
  std::vector<ImportanceEntry> out(report.importance.begin(),
                                   report.importance.begin() + static_cast<std::ptrdiff_t>(std::min(k, report.importance.size())));
  return out;
}

nlohmann::json report_to_json(const ModelReport& report) {
  nlohmann::json j;
  j["spec"] = spec_to_json(report.spec);
  j["n"] = report.book_ids.size();
  j["loocv_pearson"] = report.loocv.r ? nlohmann::json(*report.loocv.r) : nlohmann::json(nullptr);
  if (!report.loocv.r) j["loocv_diagnostic"] = report.loocv.diagnostic;
  nlohmann::json preds = nlohmann::json::array();
  for (std::size_t i = 0; i < report.book_ids.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    preds.push_back({{"book_id", report.book_ids[i]}, {"actual", report.actual(k)}, {"predicted", report.predicted(k)}});
  }
  j["predictions"] = preds;
  nlohmann::json chosen = nlohmann::json::array();
  for (const auto& c : report.chosen) {
    nlohmann::json cj{{"book_id", c.book_id}};
    if (c.lambda) cj["lambda"] = *c.lambda;
    if (c.mtry) cj["mtry"] = *c.mtry;
    if (c.min_leaf) cj["min_leaf"] = *c.min_leaf;
    chosen.push_back(cj);
  }
  j["chosen_hyperparameters"] = chosen;
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& p : report.learning_curve) {
    curve.push_back({{"m", p.m},
                     {"repeats", p.repeats},
                     {"mean_r", p.mean_r ? nlohmann::json(*p.mean_r) : nlohmann::json(nullptr)},
                     {"sd_r", p.sd_r},
                     {"undefined", p.undefined}});
  }
  j["learning_curve"] = curve;
  nlohmann::json imp = nlohmann::json::array();
  for (const auto& e : report.importance) imp.push_back({{"dimension_id", e.dimension_id}, {"score", e.score}});
  j["importance"] = imp;
  j["columns"] = report.columns;
  return j;
}

std::string predictions_csv(const ModelReport& report) {
  std::string out = csv::format_row({"book_id", "actual", "predicted", "model"});
  const std::string model(to_string(report.spec.kind));
  for (std::size_t i = 0; i < report.book_ids.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out += csv::format_row({report.book_ids[i], text::format_double(report.actual(k)),
                            text::format_double(report.predicted(k)), model});
  }
  return out;
}

}  // namespace isaac::predict
