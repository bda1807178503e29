#include "isaac/stats/effects.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "isaac/util/csv.hpp"
#include "isaac/util/error.hpp"
#include "isaac/util/text.hpp"

namespace isaac::stats {
namespace {

// Smallest residual variance used in the likelihood; a perfect fit collapses
// the posterior onto the grid point nearest the slope.
constexpr double kMinSigma2 = 1e-12;

std::string fmt(std::optional<double> v) { return v ? text::format_double(*v) : std::string(); }

std::string flag_of(const EffectEstimate& e) {
  if (!e.estimable()) return "inestimable";
  return e.low_n ? "low_n" : "ok";
}

}  // namespace

double GridPosterior::quantile(double q) const {
  const std::size_t n = grid.size();
  if (n == 1) return grid.front();
  const double h = grid[1] - grid[0];
  // Density at grid points (integrates to 1 under the trapezoid rule).
  auto density = [&](std::size_t i) {
    const double w = (i == 0 || i + 1 == n) ? h / 2.0 : h;
    return mass[i] / w;
  };
  double cum = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double p0 = density(k);
    const double p1 = density(k + 1);
    const double cell = h * (p0 + p1) / 2.0;
    if (cum + cell >= q || k + 2 == n) {
      const double target = std::clamp(q - cum, 0.0, cell);
      // Density is linear across the cell: mass(t) = p0 t + (p1 - p0) t^2 / (2h).
      const double a = (p1 - p0) / (2.0 * h);
      double t;
      if (std::abs(a) * h < 1e-12 * std::max(p0, 1e-300)) {
        t = p0 > 0.0 ? target / p0 : 0.0;
      } else {
        const double disc = std::max(p0 * p0 + 4.0 * a * target, 0.0);
        t = (-p0 + std::sqrt(disc)) / (2.0 * a);
      }
      return grid[k] + std::clamp(t, 0.0, h);
    }
    cum += cell;
  }
  return grid.back();
}

GridPosterior slope_posterior(double slope, double sxx, double sigma, const EffectOptions& opts) {
  if (opts.grid_size < 2) throw Error(ErrorCode::kInvalidArgument, "posterior grid needs at least 2 points");
  const auto n = static_cast<std::size_t>(opts.grid_size);
  const double h = (opts.prior_hi - opts.prior_lo) / static_cast<double>(n - 1);
  GridPosterior post;
  post.grid.resize(n);
  post.mass.resize(n);
  std::vector<double> logp(n);
  const double sigma2 = std::max(sigma * sigma, kMinSigma2);
  for (std::size_t i = 0; i < n; ++i) {
    post.grid[i] = opts.prior_lo + h * static_cast<double>(i);
    const double d = post.grid[i] - slope;
    logp[i] = opts.flat_likelihood ? 0.0 : -sxx * d * d / (2.0 * sigma2);
  }
  const double peak = *std::max_element(logp.begin(), logp.end());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = (i == 0 || i + 1 == n) ? h / 2.0 : h;
    post.mass[i] = w * std::exp(logp[i] - peak);
    total += post.mass[i];
  }
  post.mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    post.mass[i] /= total;
    post.mean += post.mass[i] * post.grid[i];
  }
  const double tail = (1.0 - opts.credible_mass) / 2.0;
  post.lo = post.quantile(tail);
  post.hi = post.quantile(1.0 - tail);
  return post;
}

EffectEstimate effect_estimate(const std::string& dimension_id, DimensionKind kind, const Eigen::VectorXd& x,
                               const Eigen::Array<bool, Eigen::Dynamic, 1>& missing, const Eigen::VectorXd& y,
                               const EffectOptions& opts) {
  EffectEstimate est;
  est.dimension_id = dimension_id;
  est.kind = kind;
  std::vector<double> xs;
  std::vector<double> ys;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (missing(i) || !std::isfinite(y(i))) continue;
    xs.push_back(x(i));
    ys.push_back(y(i));
    if (kind == DimensionKind::kBinary) {
      if (x(i) == 1.0) ++est.n_with;
      else ++est.n_without;
    }
  }
  est.n_available = xs.size();
  if (xs.size() < 3) {
    est.inestimable = Inestimable::kTooFewBooks;
    return est;
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  // Relative thresholds so that values like 0.1 repeated are still constant.
  const double scale_x = std::max(1.0, mx * mx) * n;
  const double scale_y = std::max(1.0, my * my) * n;
  if (sxx <= 1e-24 * scale_x || syy <= 1e-24 * scale_y) {
    est.inestimable = Inestimable::kZeroVariance;
    return est;
  }
  const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  est.r = r;

  // Standardized (sample sd) predictor and outcome: Sxx' = n - 1 and the
  // least-squares slope equals r.
  const double sxx_std = n - 1.0;
  const double rss = (n - 1.0) * (1.0 - r * r);
  const double sigma = std::sqrt(std::max(rss, 0.0) / (n - 2.0));
  const auto post = slope_posterior(r, sxx_std, sigma, opts);
  est.ci80 = std::make_pair(post.lo, post.hi);
  est.posterior_mean = post.mean;
  return est;
}

const EffectRow* EffectTable::find(std::string_view id) const {
  for (const auto& row : rows) {
    if (row.estimate.dimension_id == id) return &row;
  }
  return nullptr;
}

std::vector<EffectEstimate> EffectTable::estimates() const {
  std::vector<EffectEstimate> out;
  for (const auto& row : rows) out.push_back(row.estimate);
  return out;
}

EffectTable effect_table(const FeatureMatrix& matrix, const ExpectationSet* expectations, std::size_t min_n,
                         const EffectOptions& opts) {
  if (matrix.rows() == 0) throw Error(ErrorCode::kEmptyCorpus, "effect table needs at least one book");
  EffectTable table;
  table.has_expectations = expectations && !expectations->empty();
  table.expectations_post_hoc = table.has_expectations && expectations->post_hoc;
  for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
    const auto& id = matrix.columns[static_cast<std::size_t>(c)];
    EffectRow row;
    row.estimate = effect_estimate(id, matrix.column_kinds[static_cast<std::size_t>(c)], matrix.values.col(c),
                                   matrix.missing.col(c), matrix.outcome, opts);
    auto& e = row.estimate;
    e.low_n = e.kind == DimensionKind::kBinary ? (e.n_with < min_n || e.n_without < min_n) : e.n_available < min_n;
    if (table.has_expectations) {
      if (auto it = expectations->items.find(id); it != expectations->items.end()) row.expectation = it->second;
    }
    table.rows.push_back(std::move(row));
  }
  std::sort(table.rows.begin(), table.rows.end(), [](const EffectRow& a, const EffectRow& b) {
    const auto& ea = a.estimate;
    const auto& eb = b.estimate;
    if (ea.estimable() != eb.estimable()) return ea.estimable();
    if (ea.estimable() && *ea.r != *eb.r) return *ea.r > *eb.r;
    return ea.dimension_id < eb.dimension_id;
  });
  return table;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kMatch: return "match";
    case Verdict::kMismatch: return "mismatch";
    case Verdict::kNeutralExpectation: return "excluded_neutral_expectation";
    case Verdict::kInestimable: return "excluded_inestimable";
    case Verdict::kZeroCorrelation: return "excluded_zero_correlation";
    case Verdict::kNoEstimate: return "excluded_no_estimate";
  }
  return "unknown";
}

int rounded_percent(std::size_t k, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "percentage of an empty set");
  // floor(100 k / n + 1/2) in integers.
  return static_cast<int>((200 * k + n) / (2 * n));
}

ConcordanceResult concordance(const std::vector<EffectEstimate>& effects, const ExpectationSet& expectations) {
  ConcordanceResult result;
  result.post_hoc = expectations.post_hoc;
  for (const auto& [id, exp] : expectations.items) {
    const auto it = std::find_if(effects.begin(), effects.end(), [&](const auto& e) { return e.dimension_id == id; });
    Verdict v;
    if (exp.sign == 0) v = Verdict::kNeutralExpectation;
    else if (it == effects.end()) v = Verdict::kNoEstimate;
    else if (!it->estimable()) v = Verdict::kInestimable;
    else if (*it->r == 0.0) v = Verdict::kZeroCorrelation;
    else v = ((*it->r > 0.0) == (exp.sign > 0)) ? Verdict::kMatch : Verdict::kMismatch;
    result.verdicts[id] = v;
    if (v == Verdict::kMatch || v == Verdict::kMismatch) {
      ++result.compared;
      if (v == Verdict::kMatch) ++result.matches;
    }
  }
  if (result.compared == 0) {
    throw Error(ErrorCode::kNothingComparable, "no dimension has both a signed expectation and an estimable effect");
  }
  result.percent = rounded_percent(result.matches, result.compared);
  return result;
}

std::string effects_csv(const EffectTable& table) {
  std::string out = csv::format_row({"dimension_id", "r", "ci_lo", "ci_hi", "n_level", "flag", "expected_sign",
                                     "band_lo", "band_hi", "expectation_status"});
  const std::string status = table.has_expectations ? (table.expectations_post_hoc ? "post-hoc" : "pre-registered") : "";
  for (const auto& row : table.rows) {
    const auto& e = row.estimate;
    csv::Row line{e.dimension_id,
                  fmt(e.r),
                  e.ci80 ? text::format_double(e.ci80->first) : "",
                  e.ci80 ? text::format_double(e.ci80->second) : "",
                  std::to_string(e.n_level()),
                  flag_of(e)};
    if (row.expectation) {
      line.push_back(std::to_string(row.expectation->sign));
      line.push_back(row.expectation->band ? text::format_double(row.expectation->band->first) : "");
      line.push_back(row.expectation->band ? text::format_double(row.expectation->band->second) : "");
      line.push_back(status);
    } else {
      line.insert(line.end(), {"", "", "", ""});
    }
    out += csv::format_row(line);
  }
  return out;
}

nlohmann::json effects_json(const EffectTable& table, const AnnotationSchema* schema) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    const auto& e = row.estimate;
    nlohmann::json j{{"dimension_id", e.dimension_id},
                     {"kind", to_string(e.kind)},
                     {"n_level", e.n_level()},
                     {"n_available", e.n_available},
                     {"flag", flag_of(e)},
                     {"low_n", e.low_n},
                     {"inestimable", !e.estimable()}};
    if (schema) {
      if (const auto* d = schema->find(e.dimension_id)) {
        j["label"] = d->label;
        j["group"] = to_string(d->group);
      }
    }
    if (e.kind == DimensionKind::kBinary) {
      j["n_with"] = e.n_with;
      j["n_without"] = e.n_without;
    }
    j["r"] = e.r ? nlohmann::json(*e.r) : nlohmann::json(nullptr);
    j["ci80"] = e.ci80 ? nlohmann::json::array({e.ci80->first, e.ci80->second}) : nlohmann::json(nullptr);
    j["posterior_mean"] = e.posterior_mean ? nlohmann::json(*e.posterior_mean) : nlohmann::json(nullptr);
    if (row.expectation) {
      nlohmann::json exp{{"sign", row.expectation->sign}, {"post_hoc", table.expectations_post_hoc}};
      exp["band"] = row.expectation->band
                        ? nlohmann::json::array({row.expectation->band->first, row.expectation->band->second})
                        : nlohmann::json(nullptr);
      j["expectation"] = exp;
    } else {
      j["expectation"] = nullptr;
    }
    rows.push_back(std::move(j));
  }
  return nlohmann::json{{"rows", rows},
                        {"credible_mass", 0.8},
                        {"prior", {{"family", "uniform"}, {"lo", -0.5}, {"hi", 0.5}}},
                        {"expectations",
                         table.has_expectations ? (table.expectations_post_hoc ? "post-hoc" : "pre-registered")
                                                : "none"}};
}

nlohmann::json concordance_json(const ConcordanceResult& result) {
  nlohmann::json verdicts = nlohmann::json::object();
  for (const auto& [id, v] : result.verdicts) verdicts[id] = to_string(v);
  return nlohmann::json{{"percent", result.percent},
                        {"matches", result.matches},
                        {"compared", result.compared},
                        {"post_hoc", result.post_hoc},
                        {"verdicts", verdicts}};
}

}  // namespace isaac::stats
