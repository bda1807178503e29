#include "isaac/recommend/recommend.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "isaac/predict/preprocess.hpp"
#include "isaac/stats/effects.hpp"
#include "isaac/util/csv.hpp"
#include "isaac/util/error.hpp"
#include "isaac/util/parallel.hpp"
#include "isaac/util/rng.hpp"
#include "isaac/util/text.hpp"

namespace isaac::recommend {
namespace {

using predict::FittedModel;
using predict::ModelKind;
using predict::ModelSpec;

struct Prepared {
  FeatureMatrix rated;
  FeatureMatrix candidates;
  std::vector<std::string> titles;
};

Prepared prepare(std::span<const Candidate> candidates, std::span<const RatedBook> rated,
                 std::span<const AnnotationRecord> records, const AnnotationSchema& schema, const CurationMask& mask,
                 const RecommendOptions& options) {
  if (rated.empty()) throw Error(ErrorCode::kNoModel, "no rated books to fit a model on");
  validate_mask(mask, schema);
  std::set<std::string> rated_ids;
  for (const auto& b : rated) rated_ids.insert(b.book_id);
  std::vector<AnnotationRecord> cand_records;
  Prepared p;
  for (const auto& c : candidates) {
    if (c.record.schema_version != schema.version()) {
      throw Error(ErrorCode::kSchemaVersionMismatch,
                  "candidate " + c.record.book_id + " was annotated under schema v" +
                      std::to_string(c.record.schema_version) + ", project is v" + std::to_string(schema.version()));
    }
    if (rated_ids.count(c.record.book_id)) {
      throw Error(ErrorCode::kAlreadyRated, "candidate \"" + c.title + "\" is already rated");
    }
    cand_records.push_back(c.record);
    p.titles.push_back(c.title);
  }
  EncodeOptions enc;
  enc.include_journal = options.include_journal;
  enc.excluded = mask.ids();
  p.rated = encode_matrix(rated, records, schema, enc);
  p.candidates = encode_rows(cand_records, p.titles, schema, p.rated.columns);
  return p;
}

double r_or_floor(const std::optional<double>& r) { return r.value_or(-std::numeric_limits<double>::infinity()); }

struct Models {
  ModelKind kind = ModelKind::kRidge;
  std::optional<FittedModel> chosen;
  FittedModel ridge;
};

ModelSpec final_spec(const FeatureMatrix& m, ModelSpec spec, const predict::CvOptions& cv) {
  if (!cv.nested || spec.kind == ModelKind::kBaselineAvgRating || m.rows() < 2 * cv.inner_folds) return spec;
  return predict::select_hyperparameters(m, spec, cv, derive_seed(cv.seed, ~0ULL));
}

Models fit_models(const FeatureMatrix& m, const RecommendOptions& options, RecommendResult& result) {
  ModelSpec ridge_spec;
  ridge_spec.kind = ModelKind::kRidge;
  ModelSpec forest_spec;
  forest_spec.kind = ModelKind::kRandomForest;
  forest_spec.forest = options.forest;

  Models out;
  if (options.model) {
    out.kind = *options.model;
  } else {
    result.ridge_r = predict::loocv(m, ridge_spec, options.cv).loocv.r;
    result.forest_r = predict::loocv(m, forest_spec, options.cv).loocv.r;
    out.kind = r_or_floor(result.forest_r) > r_or_floor(result.ridge_r) ? ModelKind::kRandomForest : ModelKind::kRidge;
  }
  const ModelSpec ridge_final = final_spec(m, ridge_spec, options.cv);
  result.ridge_lambda = ridge_final.lambda;
  out.ridge = predict::fit_model(m, ridge_final, options.cv.hook);
  switch (out.kind) {
    case ModelKind::kRidge: break;
    case ModelKind::kRandomForest: out.chosen = predict::fit_model(m, final_spec(m, forest_spec, options.cv), options.cv.hook); break;
    case ModelKind::kBaselineAvgRating: out.chosen = predict::fit_baseline(m); break;
  }
  result.ranked_by = out.kind;
  result.columns = m.columns;
  if (out.kind != ModelKind::kRidge) {
    result.note = "ranked by " + std::string(predict::to_string(out.kind)) + "; explanations from ridge";
  }
  return out;
}

const FittedModel& ranking_model(const Models& models) { return models.chosen ? *models.chosen : models.ridge; }

double prior_width(const stats::EffectOptions& opts) { return (opts.prior_hi - opts.prior_lo) * opts.credible_mass; }

std::map<std::string, double> widths(const FeatureMatrix& m, std::size_t min_n) {
  const stats::EffectOptions opts;
  std::map<std::string, double> out;
  for (const auto& row : stats::effect_table(m, nullptr, min_n, opts).rows) {
    const auto& ci = row.estimate.ci80;
    out[row.estimate.dimension_id] = ci ? ci->second - ci->first : prior_width(opts);
  }
  return out;
}

}  // namespace

std::set<std::string> CurationMask::ids() const {
  std::set<std::string> out;
  for (const auto& [id, _] : excluded) out.insert(id);
  return out;
}

void validate_mask(const CurationMask& mask, const AnnotationSchema& schema) {
  for (const auto& [id, _] : mask.excluded) {
    if (!schema.contains(id)) throw Error(ErrorCode::kUnknownDimension, "mask names unknown dimension " + id);
  }
}

nlohmann::json mask_to_json(const CurationMask& mask) {
  nlohmann::json excluded = nlohmann::json::array();
  for (const auto& [id, reason] : mask.excluded) excluded.push_back({{"dimension_id", id}, {"reason", reason}});
  return {{"excluded", excluded}, {"created_at", mask.created_at}};
}

CurationMask mask_from_json(const nlohmann::json& j) {
  CurationMask m;
  m.created_at = j.value("created_at", "");
  for (const auto& e : j.value("excluded", nlohmann::json::array())) {
    if (e.is_string()) m.excluded[e.get<std::string>()] = "";
    else m.excluded[e.at("dimension_id").get<std::string>()] = e.value("reason", "");
  }
  return m;
}

std::string_view to_string(Mode mode) { return mode == Mode::kEnjoyment ? "enjoyment" : "exploration"; }

std::vector<Contribution> explain(const Eigen::VectorXd& coef, const Eigen::RowVectorXd& design,
                                  const std::vector<std::string>& design_columns, std::size_t k) {
  if (coef.size() != design.size() || static_cast<std::size_t>(coef.size()) != design_columns.size()) {
    throw Error(ErrorCode::kInvalidArgument, "coefficients, design row and column names differ in length");
  }
  std::map<std::string, double> by_dim;
  for (Eigen::Index j = 0; j < coef.size(); ++j) {
    by_dim[predict::dimension_of(design_columns[static_cast<std::size_t>(j)])] += coef(j) * design(j);
  }
  std::vector<Contribution> out;
  for (const auto& [id, c] : by_dim) out.push_back({id, c});
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return std::abs(a.contribution) > std::abs(b.contribution); });
  if (out.size() > k) out.resize(k);
  return out;
}

std::vector<Contribution> explain(const FittedModel& ridge, const FeatureMatrix& candidates, Eigen::Index row,
                                  std::size_t k) {
  const auto* fit = ridge.ridge();
  if (!fit) throw Error(ErrorCode::kWrongModelKind, "explanations need a ridge model");
  const Eigen::MatrixXd design = ridge.preprocessor().transform(candidates);
  return explain(fit->coef, design.row(row), ridge.preprocessor().design_columns(), k);
}

std::vector<std::size_t> rank_scores(const Eigen::VectorXd& scores, std::span<const std::string> titles, std::size_t k) {
  std::vector<std::size_t> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double sa = scores(static_cast<Eigen::Index>(a));
    const double sb = scores(static_cast<Eigen::Index>(b));
    if (sa != sb) return sa > sb;
    return std::tie(titles[a], a) < std::tie(titles[b], b);
  });
  if (order.size() > k) order.resize(k);
  return order;
}

RecommendResult rank_candidates(std::span<const Candidate> candidates, std::span<const RatedBook> rated,
                                std::span<const AnnotationRecord> records, const AnnotationSchema& schema,
                                const CurationMask& mask, const RecommendOptions& options) {
  auto p = prepare(candidates, rated, records, schema, mask, options);
  RecommendResult result;
  const auto models = fit_models(p.rated, options, result);
  if (candidates.empty()) return result;
  const Eigen::VectorXd scores = ranking_model(models).predict(p.candidates);
  const auto order = rank_scores(scores, p.titles, options.k);
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(order[r]);
    Recommendation rec;
    rec.book_id = p.candidates.row_ids[order[r]];
    rec.title = p.titles[order[r]];
    rec.predicted = scores(i);
    rec.rank = r + 1;
    rec.explanation = explain(models.ridge, p.candidates, i, options.explain_top);
    rec.mode = Mode::kEnjoyment;
    result.items.push_back(std::move(rec));
  }
  return result;
}

RecommendResult exploration_rank(std::span<const Candidate> candidates, std::span<const RatedBook> rated,
                                 std::span<const AnnotationRecord> records, const AnnotationSchema& schema,
                                 const CurationMask& mask, const RecommendOptions& options) {
  auto p = prepare(candidates, rated, records, schema, mask, options);
  RecommendResult result;
  const auto models = fit_models(p.rated, options, result);
  if (candidates.empty()) return result;
  const Eigen::VectorXd predicted = ranking_model(models).predict(p.candidates);
  const auto before = widths(p.rated, options.min_n);

  Eigen::VectorXd gain(p.candidates.rows());
  parallel_for(static_cast<std::size_t>(p.candidates.rows()), options.cv.threads, [&](std::size_t c) {
    const auto i = static_cast<Eigen::Index>(c);
    const auto grown = p.rated.with_row(p.candidates.row_ids[c], p.titles[c], p.candidates.values.row(i),
                                        p.candidates.missing.row(i), predicted(i));
    double total = 0.0;
    for (const auto& [id, w] : widths(grown, options.min_n)) total += before.at(id) - w;
    gain(i) = total;
  });

  const auto order = rank_scores(gain, p.titles, options.k);
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(order[r]);
    Recommendation rec;
    rec.book_id = p.candidates.row_ids[order[r]];
    rec.title = p.titles[order[r]];
    rec.predicted = predicted(i);
    rec.rank = r + 1;
    rec.explanation = explain(models.ridge, p.candidates, i, options.explain_top);
    rec.mode = Mode::kExploration;
    rec.informativeness = gain(i);
    result.items.push_back(std::move(rec));
  }
  return result;
}

std::vector<RatedBook> parse_candidates(std::string_view data) {
  csv::Table table(csv::parse(data));
  const auto title = table.column("title");
  const auto author = table.column("author");
  if (!title || !author) throw Error(ErrorCode::kFormatError, "candidate list needs title and author columns");
  std::vector<RatedBook> out;
  std::set<std::string> seen;
  for (const auto& row : table.rows()) {
    const std::string t(text::trim(table.cell(row, *title)));
    const std::string a(text::trim(table.cell(row, *author)));
    if (t.empty() && a.empty()) continue;
    if (t.empty() || a.empty()) throw Error(ErrorCode::kFormatError, "candidate row needs both title and author");
    auto b = make_rated_book(t, a, 0.0);
    if (seen.insert(b.book_id).second) out.push_back(std::move(b));
  }
  return out;
}

nlohmann::json result_to_json(const RecommendResult& result) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& r : result.items) {
    nlohmann::json expl = nlohmann::json::array();
    for (const auto& c : r.explanation) expl.push_back({{"dimension_id", c.dimension_id}, {"contribution", c.contribution}});
    nlohmann::json j{{"book_id", r.book_id},   {"title", r.title},         {"predicted", r.predicted},
                     {"rank", r.rank},         {"mode", to_string(r.mode)}, {"explanation", expl}};
    if (r.informativeness) j["informativeness"] = *r.informativeness;
    items.push_back(j);
  }
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"items", items},
          {"ranked_by", predict::to_string(result.ranked_by)},
          {"explained_by", "ridge"},
          {"ridge_lambda", result.ridge_lambda},
          {"loocv_r", {{"ridge", opt(result.ridge_r)}, {"random_forest", opt(result.forest_r)}}},
          {"columns", result.columns},
          {"note", result.note}};
}

}  // namespace isaac::recommend
