#include "isaac/agree/agree.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "isaac/annotate/coerce.hpp"
#include "isaac/stats/effects.hpp"
#include "isaac/util/csv.hpp"
#include "isaac/util/error.hpp"
#include "isaac/util/text.hpp"

namespace isaac::agree {
namespace {

constexpr double kTolerance = 1e-9;

bool same(double a, double b) { return std::abs(a - b) <= kTolerance; }

std::optional<double> cohen_kappa(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.empty()) return std::nullopt;
  std::map<double, double> h, a;
  double observed = 0.0;
  for (const auto& [x, y] : pairs) {
    h[x] += 1.0;
    a[y] += 1.0;
    observed += same(x, y) ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(pairs.size());
  double chance = 0.0;
  for (const auto& [v, count] : h) {
    for (const auto& [w, count_ai] : a) {
      if (same(v, w)) chance += (count / n) * (count_ai / n);
    }
  }
  if (chance >= 1.0 - 1e-12) return std::nullopt;
  return (observed / n - chance) / (1.0 - chance);
}

std::string show(double v) { return text::format_double(v); }

}  // namespace

HumanAnnotations parse_human_csv(std::string_view data, const AnnotationSchema& schema) {
  csv::Table table(csv::parse(data));
  const auto id_col = table.column("book_id");
  const auto title_col = table.column("title");
  const auto author_col = table.column("author");
  const auto dim_col = table.column("dimension_id");
  const auto value_col = table.column("value");
  if (!dim_col || !value_col || (!id_col && !(title_col && author_col))) {
    throw Error(ErrorCode::kFormatError, "human annotations need dimension_id, value and book_id or title+author");
  }
  HumanAnnotations out;
  std::size_t line = 1;
  for (const auto& row : table.rows()) {
    ++line;
    std::string book_id = id_col ? std::string(text::trim(table.cell(row, *id_col))) : "";
    if (book_id.empty() && title_col && author_col) {
      book_id = make_book_id(table.cell(row, *title_col), table.cell(row, *author_col));
    }
    if (book_id.empty()) throw Error(ErrorCode::kFormatError, "line " + std::to_string(line) + " names no book");
    const std::string dim(text::trim(table.cell(row, *dim_col)));
    const auto* d = schema.find(dim);
    if (!d) throw Error(ErrorCode::kUnknownDimension, "line " + std::to_string(line) + ": " + dim);
    const auto raw = text::trim(table.cell(row, *value_col));
    std::optional<double> value;
    if (raw != "MISSING") {
      const auto c = annotate::coerce_text(d->kind, raw);
      if (!c.ok) {
        throw Error(ErrorCode::kInvalidValue,
                    "line " + std::to_string(line) + ": '" + std::string(raw) + "' is not a " +
                        std::string(to_string(d->kind)) + " value");
      }
      value = c.value;
    }
    if (!out[dim].emplace(book_id, value).second) {
      throw Error(ErrorCode::kFormatError, "line " + std::to_string(line) + " repeats " + dim + " for " + book_id);
    }
  }
  return out;
}

AgreementResult compare_annotations(const std::map<std::string, std::optional<double>>& human,
                                    std::span<const AnnotationRecord> ai, const AnnotationSchema& schema,
                                    const std::string& dimension_id,
                                    const std::map<std::string, std::string>& titles) {
  if (!schema.contains(dimension_id)) throw Error(ErrorCode::kUnknownDimension, dimension_id);
  auto title_of = [&](const std::string& id) {
    const auto it = titles.find(id);
    return it == titles.end() ? id : it->second;
  };
  AgreementResult out;
  out.dimension_id = dimension_id;
  std::vector<std::pair<double, double>> pairs;
  std::size_t overlap = 0;
  for (const auto& rec : ai) {
    const auto h = human.find(rec.book_id);
    if (h == human.end()) continue;
    ++overlap;
    const auto a = rec.value(dimension_id);
    if (!h->second || !a) {
      out.not_compared.push_back({rec.book_id, title_of(rec.book_id), !h->second && !a ? "both" : !a ? "ai" : "human"});
      continue;
    }
    pairs.emplace_back(*h->second, *a);
    if (same(*h->second, *a)) {
      ++out.n_agree;
    } else {
      const auto p = rec.provenance.find(dimension_id);
      out.disagreements.push_back({rec.book_id, title_of(rec.book_id), *h->second, *a,
                                   p == rec.provenance.end() ? "" : std::string(to_string(p->second))});
    }
  }
  if (overlap == 0) throw Error(ErrorCode::kNoOverlap, "no book has both human and AI annotations for " + dimension_id);
  out.n_compared = pairs.size();
  out.percent = out.n_compared ? stats::rounded_percent(out.n_agree, out.n_compared) : 0;
  out.kappa = cohen_kappa(pairs);
  auto by_title = [](const auto& x, const auto& y) { return std::tie(x.title, x.book_id) < std::tie(y.title, y.book_id); };
  std::sort(out.disagreements.begin(), out.disagreements.end(), by_title);
  std::sort(out.not_compared.begin(), out.not_compared.end(), by_title);
  return out;
}

std::vector<AgreementResult> compare_all(const HumanAnnotations& human, std::span<const AnnotationRecord> ai,
                                         const AnnotationSchema& schema,
                                         const std::map<std::string, std::string>& titles) {
  std::vector<AgreementResult> out;
  for (const auto& [dim, values] : human) out.push_back(compare_annotations(values, ai, schema, dim, titles));
  return out;
}

std::string disagreement_report(std::span<const AgreementResult> results) {
  std::vector<const AgreementResult*> sorted;
  for (const auto& r : results) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->dimension_id < b->dimension_id; });

  std::string out = "# Annotation agreement\n\n";
  out += "| dimension | compared | agree | percent | kappa | not compared |\n";
  out += "|---|---|---|---|---|---|\n";
  for (const auto* r : sorted) {
    out += "| " + r->dimension_id + " | " + std::to_string(r->n_compared) + " | " + std::to_string(r->n_agree) + " | " +
           std::to_string(r->percent) + "% | " + (r->kappa ? text::format_double(std::round(*r->kappa * 1000) / 1000) : "n/a") +
           " | " + std::to_string(r->n_excluded()) + " |\n";
  }
  out += "\nKappa is Cohen's chance-corrected agreement, reported next to raw percent agreement.\n";
  for (const auto* r : sorted) {
    out += "\n## " + r->dimension_id + "\n\n";
    if (r->disagreements.empty()) {
      out += "no disagreements\n";
    } else {
      out += "| title | book_id | human | ai | provenance |\n|---|---|---|---|---|\n";
      for (const auto& d : r->disagreements) {
        out += "| " + d.title + " | " + d.book_id + " | " + show(d.human) + " | " + show(d.ai) + " | " + d.provenance +
               " |\n";
      }
    }
    if (!r->not_compared.empty()) {
      out += "\nnot compared:\n\n";
      for (const auto& e : r->not_compared) out += "- " + e.title + " (" + e.book_id + "): missing on " + e.side + "\n";
    }
  }
  return out;
}

nlohmann::json agreement_to_json(const AgreementResult& r) {
  nlohmann::json dis = nlohmann::json::array();
  for (const auto& d : r.disagreements) {
    dis.push_back({{"book_id", d.book_id}, {"title", d.title}, {"human", d.human}, {"ai", d.ai}, {"provenance", d.provenance}});
  }
  nlohmann::json excluded = nlohmann::json::array();
  for (const auto& e : r.not_compared) excluded.push_back({{"book_id", e.book_id}, {"title", e.title}, {"missing_on", e.side}});
  return {{"dimension_id", r.dimension_id},
          {"n_compared", r.n_compared},
          {"n_agree", r.n_agree},
          {"percent", r.percent},
          {"kappa", r.kappa ? nlohmann::json(*r.kappa) : nlohmann::json(nullptr)},
          {"disagreements", dis},
          {"not_compared", excluded}};
}

}  // namespace isaac::agree
