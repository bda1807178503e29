#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "isaac/core/types.hpp"

namespace isaac::ingest {

enum class RatingsFormat { kAuto, kGoodreadsCsv, kSimpleCsv };

enum class DnfPolicy { kInclude, kExclude, kImputeFloor };

DnfPolicy parse_dnf_policy(std::string_view s);
RatingsFormat parse_ratings_format(std::string_view s);

struct ParseResult {
  std::vector<RatedBook> books;
  std::vector<std::string> warnings;
  RatingsFormat format = RatingsFormat::kSimpleCsv;
};

// Goodreads exports are recognised by their "My Rating" column. A rating of
// 0 there means unrated and the row is skipped with a warning; 1-5 stars map
// linearly to 20..100. Simple CSV rows carry a 0-100 rating; an empty cell
// or "unrated" skips the row with a warning.
ParseResult parse_ratings_text(std::string_view text, RatingsFormat format = RatingsFormat::kAuto);
ParseResult parse_ratings_export(const std::filesystem::path& path, RatingsFormat format = RatingsFormat::kAuto);

// Simple CSV with every optional column populated; parse_ratings_text reads
// it back losslessly.
std::string write_simple_csv(std::span<const RatedBook> books);

enum class SkewnessEstimator {
  kG1,          // m3 / m2^(3/2), moments with denominator n
  kAdjustedG1,  // G1 = g1 * sqrt(n (n - 1)) / (n - 2)
  kB1,          // b1 = g1 * ((n - 1) / n)^(3/2)
};

double skewness(std::span<const double> values, SkewnessEstimator estimator = SkewnessEstimator::kG1);

// (rank - 0.5) / n with average ranks for ties.
std::vector<double> percentile_rank(std::span<const double> values);

// Sets percentile on every book from its raw rating.
void apply_percentiles(std::vector<RatedBook>& books);

std::vector<RatedBook> apply_dnf_policy(std::vector<RatedBook> books, DnfPolicy policy);

struct JournalNotes {
  std::map<std::string, std::string> notes;  // book_id -> text
  std::vector<std::string> unmatched;        // keys from the file with no rated book
};

// Two-column CSV "book,note" where book is "Title|Author", a book id, or a
// title that matches exactly one rated book; a three-column
// "title,author,note" file is accepted too. Matching notes are attached to
// `books`.
JournalNotes parse_journal_notes_text(std::string_view text, std::vector<RatedBook>& books);
JournalNotes parse_journal_notes(const std::filesystem::path& path, std::vector<RatedBook>& books);

// Appends movie/TV/hypothetical ratings with sample weight `weight` and
// recomputes percentiles over the union. Extras must carry their flag.
std::vector<RatedBook> merge_media_ratings(std::vector<RatedBook> books, std::vector<RatedBook> extra, double weight);

}  // namespace isaac::ingest
