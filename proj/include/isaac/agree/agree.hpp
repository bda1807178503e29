#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "isaac/core/schema.hpp"
#include "isaac/core/types.hpp"

namespace isaac::agree {

// dimension id -> book id -> value (nullopt is MISSING).
using HumanAnnotations = std::map<std::string, std::map<std::string, std::optional<double>>>;

struct Disagreement {
  std::string book_id;
  std::string title;
  double human = 0.0;
  double ai = 0.0;
  std::string provenance;  // where the AI value came from
};

struct Excluded {
  std::string book_id;
  std::string title;
  std::string side;  // "human", "ai" or "both"
};

struct AgreementResult {
  std::string dimension_id;
  std::size_t n_compared = 0;
  std::size_t n_agree = 0;
  int percent = 0;
  // Cohen's kappa over the observed categories; nullopt when chance
  // agreement is already 1.
  std::optional<double> kappa;
  std::vector<Disagreement> disagreements;  // sorted by title
  std::vector<Excluded> not_compared;       // MISSING on either side

  std::size_t n_excluded() const { return not_compared.size(); }
};

// Human CSV: book_id or title+author, dimension_id, value. Values are read
// with the annotation coercion rules for the dimension's kind; an empty cell
// or "MISSING" is MISSING.
HumanAnnotations parse_human_csv(std::string_view text, const AnnotationSchema& schema);

// Values agree when equal within 1e-9. Books outside the overlap are ignored.
// `titles` maps book ids to display titles (book id is used when absent).
AgreementResult compare_annotations(const std::map<std::string, std::optional<double>>& human,
                                    std::span<const AnnotationRecord> ai, const AnnotationSchema& schema,
                                    const std::string& dimension_id,
                                    const std::map<std::string, std::string>& titles = {});

// One result per dimension present in `human`, ordered by dimension id.
std::vector<AgreementResult> compare_all(const HumanAnnotations& human, std::span<const AnnotationRecord> ai,
                                         const AnnotationSchema& schema,
                                         const std::map<std::string, std::string>& titles = {});

// Markdown summary table followed by per-dimension disagreement listings.
std::string disagreement_report(std::span<const AgreementResult> results);

nlohmann::json agreement_to_json(const AgreementResult& result);

}  // namespace isaac::agree
