#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "isaac/core/schema.hpp"

namespace isaac {

enum class MediaType { kBook, kMovie, kTv };

std::string_view to_string(MediaType type);
MediaType parse_media_type(std::string_view s);

// Stable join key: FNV-1a over the normalized "title<US>author" pair.
std::string make_book_id(std::string_view title, std::string_view author);

struct RatedBook {
  std::string book_id;
  std::string title;
  std::string author;
  double raw_rating = 0.0;  // 0-100 scale; star ratings are mapped before storage
  std::optional<double> percentile;
  bool dnf = false;
  bool hypothetical = false;
  MediaType media_type = MediaType::kBook;
  std::optional<std::string> journal_note;
  double weight = 1.0;
  // Metadata carried by a Goodreads export, used when research yields none.
  std::optional<double> export_avg_rating;
  std::optional<double> export_num_pages;

  friend bool operator==(const RatedBook&, const RatedBook&) = default;
};

RatedBook make_rated_book(std::string title, std::string author, double raw_rating);

enum class Provenance { kWikipedia, kGoodreads, kBoth, kOtherWeb, kJournal, kUser, kMock };

std::string_view to_string(Provenance p);
Provenance parse_provenance(std::string_view s);

struct AnnotationRecord {
  std::string book_id;
  std::int64_t schema_version = 1;
  // nullopt is MISSING, which is distinct from 0.
  std::map<std::string, std::optional<double>> values;
  std::map<std::string, Provenance> provenance;
  std::set<std::string> found_sources;

  std::optional<double> value(std::string_view dimension_id) const;
  void set(const std::string& dimension_id, std::optional<double> v, Provenance p);
  // Fraction of schema dimensions with a non-missing value.
  double coverage(const AnnotationSchema& schema) const;

  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

// Throws UnknownDimension for ids outside the schema and InvalidValue for
// values outside their kind's range.
void validate_record(const AnnotationRecord& record, const AnnotationSchema& schema);

// Per-dimension fraction of records with a non-missing value.
std::map<std::string, double> dimension_coverage(const std::vector<AnnotationRecord>& records,
                                                 const AnnotationSchema& schema);

nlohmann::json record_to_json(const AnnotationRecord& record);
AnnotationRecord record_from_json(const nlohmann::json& j);

nlohmann::json book_to_json(const RatedBook& book);
RatedBook book_from_json(const nlohmann::json& j);

}  // namespace isaac
